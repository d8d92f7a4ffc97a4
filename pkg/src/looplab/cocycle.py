"""Restriction evaluators, the additive cocycle identity, gauge transforms,
reconstruction of loop potentials from annular data, and the symmetry-defect
probe.

A restriction evaluator assigns a real number f(loop, inner, outer) to every
nested configuration.  The central algebraic facts exercised here:

* cocycle identity   f(l, O1, O3) = f(l, O1, O2) + f(l, O2, O3),
* coboundaries       f(l, O1, O2) = g(l, O2) - g(l, O1) are cocycles,
* gauge transforms shift f by a coboundary and never change its defects.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ising import BETA_C, ising_restriction
from .lattice import (
    AnnularDomain,
    DiscreteDomain,
    DualLoop,
    LatticeSymmetry,
    NestedConfig,
    NoEssentialAnnulus,
    Region,
    Vertex,
    apply_symmetry,
    essential_annulus,
    nested_config,
    rect_domain,
    refine,
    unit_loop,
)
from .loopsoup import loop_mass, soup_mass_M, ust_restriction
from .lattice import remainder_vertices

__all__ = [
    "RestrictionEvaluator",
    "GaugeFunction",
    "CocycleReport",
    "NestedTriple",
    "ReconstructedG",
    "ContinuityReport",
    "SymmetryMap",
    "DyadicScale",
    "ImageNotNested",
    "NoEssentialAnnulus",
    "REFERENCE_LOOP",
    "REFERENCE_DOMAIN",
    "ising_evaluator",
    "ust_evaluator",
    "soup_evaluator",
    "zero_evaluator",
    "make_gauge",
    "loop_length_gauge",
    "loop_potential_gauge",
    "gauge_transform",
    "nested_triple",
    "check_cocycle",
    "reconstruct_g",
    "rho_defect",
    "loop_sup_distance",
    "continuity_probe",
]


class ImageNotNested(ValueError):
    """Raised when a grid map sends the annulus outside the ambient domain."""


# ---------------------------------------------------------------------------
# Evaluators


@dataclass(frozen=True)
class RestrictionEvaluator:
    """Named map from nested configurations to reals."""

    name: str
    fn: Callable[[NestedConfig], float]

    def __call__(self, config: NestedConfig) -> float:
        return float(self.fn(config))


def ising_evaluator(beta: float = BETA_C, engine: str = "auto") -> RestrictionEvaluator:
    return RestrictionEvaluator(
        f"ising[beta={beta:.8g},engine={engine}]",
        lambda cfg: ising_restriction(cfg, beta, engine),
    )


def ust_evaluator() -> RestrictionEvaluator:
    return RestrictionEvaluator("ust", ust_restriction)


def soup_evaluator(c: float = 1.0) -> RestrictionEvaluator:
    return RestrictionEvaluator(f"soup[c={c:.8g}]", lambda cfg: c * soup_mass_M(cfg))


def zero_evaluator() -> RestrictionEvaluator:
    return RestrictionEvaluator("zero", lambda cfg: 0.0)


# ---------------------------------------------------------------------------
# Gauge functions

# lattice stand-in for the normalization anchor: the unit dual square at the
# origin inside a centered 8x8 box
REFERENCE_LOOP = unit_loop(0, 0)
REFERENCE_DOMAIN = rect_domain(-4, -4, 8, 8)


@dataclass(frozen=True)
class GaugeFunction:
    """Loop potential g(loop, domain), zero at the reference configuration."""

    name: str
    fn: Callable[[DualLoop, DiscreteDomain], float]

    def __call__(self, loop: DualLoop, domain: DiscreteDomain) -> float:
        return float(self.fn(loop, domain))


def make_gauge(name: str, fn: Callable[[DualLoop, DiscreteDomain], float]) -> GaugeFunction:
    """Wrap a raw potential, shifting it to vanish at the reference config."""
    offset = float(fn(REFERENCE_LOOP, REFERENCE_DOMAIN))
    return GaugeFunction(name, lambda lp, dom: float(fn(lp, dom)) - offset)


def loop_length_gauge() -> GaugeFunction:
    """Depends only on the loop, so its coboundary vanishes identically."""
    return make_gauge("loop-length", lambda lp, dom: float(len(lp)))


def loop_potential_gauge() -> GaugeFunction:
    """g(l, S) = m(S) - m(S minus l): the potential whose coboundary is the
    soup mass, making soup_mass_M a coboundary witness."""

    def phi(lp: DualLoop, dom: DiscreteDomain) -> float:
        return float(loop_mass(dom)) - float(loop_mass(remainder_vertices(dom, lp)))

    return make_gauge("loop-potential", phi)


def area_gauge() -> GaugeFunction:
    return make_gauge("area", lambda lp, dom: float(len(dom)))


def gauge_transform(f: RestrictionEvaluator, g: GaugeFunction) -> RestrictionEvaluator:
    """f'(l, O1, O2) = f(l, O1, O2) + g(l, O2) - g(l, O1)."""

    def fn(cfg: NestedConfig) -> float:
        return f(cfg) + g(cfg.loop, cfg.outer) - g(cfg.loop, cfg.inner)

    return RestrictionEvaluator(f"{f.name}+d[{g.name}]", fn)


# ---------------------------------------------------------------------------
# Cocycle identity


@dataclass(frozen=True)
class NestedTriple:
    """Loop inside three nested domains."""

    loop: DualLoop
    om1: DiscreteDomain
    om2: DiscreteDomain
    om3: DiscreteDomain

    @property
    def triple_id(self) -> str:
        payload = json.dumps(
            [
                [list(s) for s in self.loop.sites],
                [list(v) for v in self.om1.vertices],
                [list(v) for v in self.om2.vertices],
                [list(v) for v in self.om3.vertices],
            ],
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def nested_triple(
    loop: DualLoop, om1: DiscreteDomain, om2: DiscreteDomain, om3: DiscreteDomain
) -> NestedTriple:
    nested_config(loop, om1, om2)  # validates om1 ⊆ om2 and loop inside om1
    nested_config(loop, om2, om3)
    return NestedTriple(loop, om1, om2, om3)


@dataclass(frozen=True)
class CocycleReport:
    triple_id: str
    evaluator: str
    defect: float
    tolerance: float
    passed: bool


def check_cocycle(
    f: RestrictionEvaluator, triple: NestedTriple, tolerance: float = 1e-8
) -> CocycleReport:
    """Defect of f(l,O1,O3) - f(l,O1,O2) - f(l,O2,O3) on a nested triple."""
    lp = triple.loop
    f13 = f(NestedConfig(lp, triple.om1, triple.om3))
    f12 = f(NestedConfig(lp, triple.om1, triple.om2))
    f23 = f(NestedConfig(lp, triple.om2, triple.om3))
    defect = f13 - f12 - f23
    return CocycleReport(
        triple.triple_id, f.name, float(defect), tolerance, abs(defect) <= tolerance
    )


# ---------------------------------------------------------------------------
# Reconstruction of g from annular data


@dataclass(frozen=True)
class ReconstructedG:
    """g(loop, sigma) rebuilt from an annular seed, with the consistency
    discrepancy between two annulus choices."""

    value: float
    discrepancy: float
    annulus_sizes: tuple[int, ...]

    def __float__(self) -> float:
        return self.value


def reconstruct_g(
    f: RestrictionEvaluator,
    seed: Callable[[DualLoop, DiscreteDomain], float],
    loop: DualLoop,
    sigma: DiscreteDomain,
    thicknesses: tuple[int, int] = (1, 2),
) -> ReconstructedG:
    """g(loop, sigma) := f(loop, A, sigma) + seed(loop, A) for an essential
    annular collar A of the loop; a second collar cross-checks that the value
    does not depend on the choice."""
    t1, t2 = thicknesses
    ann1 = essential_annulus(loop, sigma, t1)
    value = f(nested_config(loop, ann1.domain, sigma)) + float(seed(loop, ann1.domain))
    sizes = [len(ann1.domain)]
    try:
        ann2 = essential_annulus(loop, sigma, t2)
    except NoEssentialAnnulus:
        return ReconstructedG(float(value), float("nan"), tuple(sizes))
    if ann2.domain.vertex_set == ann1.domain.vertex_set:
        return ReconstructedG(float(value), 0.0, tuple(sizes))
    other = f(nested_config(loop, ann2.domain, sigma)) + float(seed(loop, ann2.domain))
    sizes.append(len(ann2.domain))
    return ReconstructedG(float(value), float(value - other), tuple(sizes))


# ---------------------------------------------------------------------------
# Grid maps and the rho defect


@dataclass(frozen=True)
class SymmetryMap:
    """Point symmetry of the lattice, acting on whole configurations."""

    symmetry: LatticeSymmetry

    def apply(self, obj):
        return apply_symmetry(obj, self.symmetry)


@dataclass(frozen=True)
class DyadicScale:
    """Doubling about a lattice corner point: cell v maps to the 2x2 block at
    2v - center (realized as refine-then-translate at the original mesh)."""

    center: Vertex
    levels: int = 1

    def apply(self, obj):
        cx, cy = self.center
        scaled = refine(obj, self.levels)
        s = (1 << self.levels) - 1
        shift = LatticeSymmetry(shift=(-s * cx, -s * cy))
        moved = apply_symmetry(scaled, shift)
        return _at_mesh(moved, _mesh_of(obj))


def _mesh_of(obj):
    if isinstance(obj, AnnularDomain):
        return obj.domain.mesh_exponent
    if isinstance(obj, (DiscreteDomain, Region)):
        return obj.mesh_exponent
    return None


def _at_mesh(obj, mesh):
    if mesh is None:
        return obj
    if isinstance(obj, AnnularDomain):
        return AnnularDomain(_at_mesh(obj.domain, mesh), obj.hole_witness)
    if isinstance(obj, DiscreteDomain):
        return DiscreteDomain(obj.vertices, mesh)
    if isinstance(obj, Region):
        return Region(obj.vertices, mesh)
    return obj


def rho_defect(
    f: RestrictionEvaluator,
    psi: SymmetryMap | DyadicScale,
    loop: DualLoop,
    annulus: AnnularDomain,
    ambient: DiscreteDomain,
) -> float:
    """f(loop, psi(A), ambient) - f(loop, A, ambient).

    Zero for any evaluator invariant under psi; for scaling maps the value is
    a lattice artifact expected to shrink under refinement.
    """
    base = nested_config(loop, annulus.domain, ambient)
    image = psi.apply(annulus)
    if not image.domain.vertex_set <= ambient.vertex_set:
        raise ImageNotNested("mapped annulus leaves the ambient domain")
    if not loop.closure_vertices <= image.domain.vertex_set:
        raise ImageNotNested("loop is not strictly inside the mapped annulus")
    mapped = nested_config(loop, image.domain, ambient)
    return f(mapped) - f(base)


# ---------------------------------------------------------------------------
# Continuity probe


def loop_sup_distance(l1: DualLoop, l2: DualLoop) -> float:
    """Symmetric Hausdorff distance between site sets, in lattice units."""
    a = np.array(l1.sites, dtype=float) / 2.0
    b = np.array(l2.sites, dtype=float) / 2.0
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class ContinuityReport:
    distances: tuple[float, ...]
    differences: tuple[float, ...]
    shrinking: bool

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.distances, self.differences))


def continuity_probe(
    g: Callable[[DualLoop, DiscreteDomain], float],
    loops: Sequence[DualLoop],
    limit_loop: DualLoop,
    sigma: DiscreteDomain,
) -> ContinuityReport:
    """Tabulate |g(l_n) - g(limit)| against sup distance for l_n -> limit.

    Purely exploratory: the report flags whether the differences shrink, but
    nothing is asserted.
    """
    if len(loops) < 5:
        raise ValueError(f"need at least 5 approximating loops, got {len(loops)}")
    dists = [loop_sup_distance(lp, limit_loop) for lp in loops]
    if any(b > a + 1e-12 for a, b in zip(dists, dists[1:])):
        raise ValueError("sup distances must be non-increasing along the sequence")
    g_lim = float(g(limit_loop, sigma))
    diffs = [abs(float(g(lp, sigma)) - g_lim) for lp in loops]
    shrinking = diffs[-1] <= diffs[0] or max(diffs) == 0.0
    return ContinuityReport(tuple(dists), tuple(diffs), bool(shrinking))
