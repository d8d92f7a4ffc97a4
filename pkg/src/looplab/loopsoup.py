"""Killed random-walk loop masses, wired spanning trees, and loop-erased
walk cycles on discrete domains.

The mass of the walk loop soup in a domain is m = -log det(I - Q), where Q
is the transition kernel of the simple random walk killed on exit.  Wired
spanning trees are counted by det(4I - A).  The two are tied by the exact
identity  log det(4I - A) = |V| log 4 - m,  which the restriction functions
below exhibit as f_UST = -M; the code paths are kept independent so the
identity remains a genuine cross-check.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import (
    DiscreteDomain,
    Region,
    NestedConfig,
    Vertex,
    _NBRS,
    canonical_vertex_key,
    remainder_vertices,
)

DENSE_LIMIT = 1500


class NumericalSingularity(ArithmeticError):
    """Raised when a positive-definite log-determinant degenerates."""


class NoCyclePossible(ValueError):
    """Raised when the domain supports no simple cycle through the root."""


class InsufficientData(ValueError):
    """Raised when a statistical estimate is requested from too little data."""


# ---------------------------------------------------------------------------
# Walk kernel and loop mass


def _adjacency(vertices: tuple[Vertex, ...], sparse: bool):
    n = len(vertices)
    idx = {v: i for i, v in enumerate(vertices)}
    rows, cols = [], []
    for v, i in idx.items():
        for dx, dy in _NBRS:
            j = idx.get((v[0] + dx, v[1] + dy))
            if j is not None:
                rows.append(i)
                cols.append(j)
    if sparse:
        from scipy.sparse import csr_matrix

        return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    A = np.zeros((n, n))
    A[rows, cols] = 1.0
    return A


@dataclass(frozen=True)
class WalkKernel:
    """Killed-walk transition matrix Q[u, v] = 1/4 for u ~ v inside the domain."""

    vertices: tuple[Vertex, ...]
    Q: object  # ndarray for small domains, csr_matrix beyond DENSE_LIMIT

    def spectral_radius(self) -> float:
        if hasattr(self.Q, "toarray") and len(self.vertices) > 8:
            from scipy.sparse.linalg import eigsh

            return float(eigsh(self.Q, k=1, which="LA", return_eigenvectors=False)[0])
        Q = self.Q.toarray() if hasattr(self.Q, "toarray") else self.Q
        return float(np.max(np.linalg.eigvalsh(Q))) if len(Q) else 0.0


def walk_kernel(domain: DiscreteDomain) -> WalkKernel:
    sparse = len(domain) > DENSE_LIMIT
    return WalkKernel(domain.vertices, _adjacency(domain.vertices, sparse) / 4.0)


def _logdet_spd(M) -> float:
    """log det of a symmetric positive definite matrix, dense or sparse."""
    if hasattr(M, "tocsc"):
        from scipy.sparse.linalg import splu

        lu = splu(M.tocsc())
        diag = lu.U.diagonal()
        if np.any(diag == 0) or not np.all(np.isfinite(diag)):
            raise NumericalSingularity("sparse LU hit a zero pivot")
        # SPD makes det positive, so only magnitudes matter
        return float(np.sum(np.log(np.abs(diag))))
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalSingularity(str(exc)) from exc
    return float(2.0 * np.sum(np.log(np.diag(L))))


_MASS_CACHE: dict[tuple, float] = {}
_TREE_CACHE: dict[tuple, float] = {}


def clear_caches() -> None:
    _MASS_CACHE.clear()
    _TREE_CACHE.clear()


def _mass_value(vertices: tuple[Vertex, ...]) -> float:
    key = canonical_vertex_key(vertices)
    if key not in _MASS_CACHE:
        n = len(vertices)
        sparse = n > DENSE_LIMIT
        Q = _adjacency(vertices, sparse) / 4.0
        if sparse:
            from scipy.sparse import identity

            M = identity(n, format="csr") - Q
        else:
            M = np.eye(n) - Q
        _MASS_CACHE[key] = -_logdet_spd(M)
    return _MASS_CACHE[key]


@dataclass(frozen=True)
class LoopMass:
    """Total weight of killed-walk loops in a domain, with a shape tag."""

    value: float
    fingerprint: str

    def __float__(self) -> float:
        return self.value


def _fingerprint(vertices) -> str:
    key = canonical_vertex_key(vertices)
    return hashlib.sha256(repr(key).encode()).hexdigest()[:12]


def loop_mass(obj: DiscreteDomain | Region) -> LoopMass:
    """m = -log det(I - Q); additive over disconnected components."""
    if isinstance(obj, Region):
        value = sum(_mass_value(c.vertices) for c in obj.components())
        return LoopMass(float(value), _fingerprint(obj.vertices))
    return LoopMass(_mass_value(obj.vertices), _fingerprint(obj.vertices))


def soup_mass_M(config: NestedConfig) -> float:
    """Mass of walk loops inside the outer domain that both cross the loop's
    belt and leave the inner domain, by inclusion-exclusion."""
    rem_outer = remainder_vertices(config.outer, config.loop)
    rem_inner = remainder_vertices(config.inner, config.loop)
    return (
        float(loop_mass(config.outer))
        - float(loop_mass(rem_outer))
        - float(loop_mass(config.inner))
        + float(loop_mass(rem_inner))
    )


# ---------------------------------------------------------------------------
# Wired spanning trees


def _tree_value(vertices: tuple[Vertex, ...]) -> float:
    key = canonical_vertex_key(vertices)
    if key not in _TREE_CACHE:
        n = len(vertices)
        sparse = n > DENSE_LIMIT
        A = _adjacency(vertices, sparse)
        if sparse:
            from scipy.sparse import identity

            M = 4.0 * identity(n, format="csr") - A
        else:
            M = 4.0 * np.eye(n) - A
        _TREE_CACHE[key] = _logdet_spd(M)
    return _TREE_CACHE[key]


def log_tree_count(obj: DiscreteDomain | Region) -> float:
    """log of the number of spanning trees of the domain wired to its
    boundary (Dirichlet graph Laplacian determinant)."""
    if isinstance(obj, Region):
        return float(sum(_tree_value(c.vertices) for c in obj.components()))
    return _tree_value(obj.vertices)


def ust_restriction(config: NestedConfig) -> float:
    """log of the wired-spanning-tree four-term ratio

        T(inner - loop) * T(outer) / (T(inner) * T(outer - loop)).

    Equals -soup_mass_M(config) exactly.
    """
    rem_outer = remainder_vertices(config.outer, config.loop)
    rem_inner = remainder_vertices(config.inner, config.loop)
    return (
        log_tree_count(rem_inner)
        + log_tree_count(config.outer)
        - log_tree_count(config.inner)
        - log_tree_count(rem_outer)
    )


# ---------------------------------------------------------------------------
# Central charge


@dataclass(frozen=True)
class SleParameter:
    kappa: float

    def __post_init__(self) -> None:
        if not 0.0 < self.kappa <= 8.0:
            raise ValueError(f"kappa must lie in (0, 8], got {self.kappa}")


def central_charge(kappa: float | SleParameter) -> float:
    """c = (3 kappa - 8)(6 - kappa) / (2 kappa)."""
    k = kappa.kappa if isinstance(kappa, SleParameter) else float(kappa)
    if k <= 0:
        raise ValueError(f"kappa must be positive, got {k}")
    return (3.0 * k - 8.0) * (6.0 - k) / (2.0 * k)


# ---------------------------------------------------------------------------
# Loop-erased walk cycles


def _canonical_cycle_sites(sites: list[Vertex]) -> tuple[Vertex, ...]:
    n = len(sites)
    k = min(range(n), key=lambda i: sites[i])
    fwd = sites[(k + 1) % n]
    bwd = sites[(k - 1) % n]
    if fwd <= bwd:
        return tuple(sites[(k + i) % n] for i in range(n))
    return tuple(sites[(k - i) % n] for i in range(n))


@dataclass(frozen=True)
class PrimalCycle:
    """Simple cycle of domain vertices, canonically oriented."""

    vertices: tuple[Vertex, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def coordinates(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.int64)


def _center_root(domain: DiscreteDomain) -> Vertex:
    pts = np.array(domain.vertices, dtype=float)
    c = pts.mean(axis=0)
    d2 = ((pts - c) ** 2).sum(axis=1)
    best = np.flatnonzero(d2 == d2.min())
    return domain.vertices[min(best, key=lambda i: domain.vertices[i])]


def sample_lerw_loop(
    domain: DiscreteDomain, seed: int | np.random.Generator = 0
) -> PrimalCycle:
    """Simple cycle through the center-most vertex via a loop-erased walk.

    A marked edge (root, start) is removed from the graph; a loop-erased
    random walk runs from start until it hits the root, and the marked edge
    closes the cycle.  The marked edge is the first root neighbour (in E, N,
    W, S order) whose removal keeps root and neighbour connected.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    verts = domain.vertices
    vset = domain.vertex_set
    root = _center_root(domain)

    def connected_avoiding(a: Vertex, b: Vertex) -> bool:
        # is b reachable from a without stepping straight from a to b?
        seen = {a}
        stack = [a]
        while stack:
            x, y = stack.pop()
            for dx, dy in _NBRS:
                nb = (x + dx, y + dy)
                if nb not in vset or nb in seen:
                    continue
                if (x, y) == a and nb == b:
                    continue
                if nb == b:
                    return True
                seen.add(nb)
                stack.append(nb)
        return False

    start = None
    for dx, dy in _NBRS:
        cand = (root[0] + dx, root[1] + dy)
        if cand in vset and connected_avoiding(root, cand):
            start = cand
            break
    if start is None:
        raise NoCyclePossible("no root edge lies on a simple cycle")

    nbrs: dict[Vertex, list[Vertex]] = {}
    for v in verts:
        out = [
            (v[0] + dx, v[1] + dy)
            for dx, dy in _NBRS
            if (v[0] + dx, v[1] + dy) in vset
        ]
        nbrs[v] = out
    # sever the marked edge in both directions
    nbrs[root] = [u for u in nbrs[root] if u != start]
    nbrs[start] = [u for u in nbrs[start] if u != root]

    path = [start]
    pos = {start: 0}
    cur = start
    while cur != root:
        options = nbrs[cur]
        cur = options[int(rng.integers(len(options)))]
        if cur in pos:
            k = pos[cur]
            for v in path[k + 1 :]:
                del pos[v]
            del path[k + 1 :]
        else:
            pos[cur] = len(path)
            path.append(cur)
    return PrimalCycle(_canonical_cycle_sites(path))


def box_dimension(
    loops: list[PrimalCycle], scales: list[int] | None = None
) -> tuple[float, float]:
    """Least-squares box-counting dimension of a family of cycles.

    Box counts are summed over loops at every scale; returns (slope, stderr)
    of log(count) against log(1/scale).
    """
    if len(loops) < 20:
        raise InsufficientData(f"need at least 20 loops, got {len(loops)}")
    if scales is None:
        extent = max(
            max(np.ptp(c.coordinates[:, 0]), np.ptp(c.coordinates[:, 1])) for c in loops
        )
        scales = [s for s in (1, 2, 4, 8, 16, 32) if s <= max(4, extent // 4)]
    scales = sorted(set(int(s) for s in scales))
    if len(scales) < 4 or scales[-1] < 4 * scales[0]:
        raise InsufficientData("need at least 4 scales spanning two octaves")
    counts = []
    for s in scales:
        total = 0
        for c in loops:
            boxes = {(int(x) // s, int(y) // s) for x, y in c.vertices}
            total += len(boxes)
        counts.append(total)
    x = np.log(1.0 / np.array(scales, dtype=float))
    y = np.log(np.array(counts, dtype=float))
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))
