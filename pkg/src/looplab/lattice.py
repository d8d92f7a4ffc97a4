"""Discrete domains and dual loops on the square lattice.

A domain is a finite 4-connected set of vertices of Z^2, thought of as unit
cells at mesh 2**-mesh_exponent.  Loops live on the dual lattice: dual sites
sit at cell corners, i.e. at half-integer points, and are stored as integer
pairs on the doubled lattice (site (a, b) with a, b odd represents the point
(a/2, b/2) in lattice units).  A dual edge joins two sites at doubled
distance 2 and crosses exactly one primal edge; "removing a loop" from a
domain means deleting both endpoints of every crossed primal edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Vertex = tuple[int, int]

_NBRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class EmptyDomain(ValueError):
    """Raised when a domain has no vertices."""


class DisconnectedDomain(ValueError):
    """Raised when a vertex set is not 4-connected."""


class LoopTouchesBoundary(ValueError):
    """Raised when loop surgery would delete vertices outside the domain."""


class NoEssentialAnnulus(ValueError):
    """Raised when no annular collar realizes the loop as essential."""


def _components(vertices: frozenset[Vertex]) -> list[frozenset[Vertex]]:
    remaining = set(vertices)
    out = []
    while remaining:
        seed = remaining.pop()
        comp = {seed}
        stack = [seed]
        while stack:
            x, y = stack.pop()
            for dx, dy in _NBRS:
                nb = (x + dx, y + dy)
                if nb in remaining:
                    remaining.remove(nb)
                    comp.add(nb)
                    stack.append(nb)
        out.append(frozenset(comp))
    return out


@dataclass(frozen=True)
class DiscreteDomain:
    """Non-empty 4-connected vertex set with a dyadic mesh tag."""

    vertices: tuple[Vertex, ...]
    mesh_exponent: int = 0

    @cached_property
    def vertex_set(self) -> frozenset[Vertex]:
        return frozenset(self.vertices)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.vertex_set

    def __len__(self) -> int:
        return len(self.vertices)

    def bbox(self) -> tuple[int, int, int, int]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class Region:
    """Possibly empty, possibly disconnected vertex set left by surgery."""

    vertices: tuple[Vertex, ...]
    mesh_exponent: int = 0

    @cached_property
    def vertex_set(self) -> frozenset[Vertex]:
        return frozenset(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)

    def components(self) -> tuple[DiscreteDomain, ...]:
        comps = _components(self.vertex_set)
        comps.sort(key=lambda c: sorted(c)[0])
        return tuple(
            DiscreteDomain(tuple(sorted(c)), self.mesh_exponent) for c in comps
        )


def validate_domain(vertices: Iterable[Vertex], mesh_exponent: int = 0) -> DiscreteDomain:
    """Build a DiscreteDomain, rejecting empty or disconnected input."""
    vset = frozenset((int(x), int(y)) for x, y in vertices)
    if not vset:
        raise EmptyDomain("domain has no vertices")
    if len(_components(vset)) != 1:
        raise DisconnectedDomain("domain is not 4-connected")
    return DiscreteDomain(tuple(sorted(vset)), mesh_exponent)


def rect_domain(x0: int, y0: int, width: int, height: int, mesh_exponent: int = 0) -> DiscreteDomain:
    verts = [(x, y) for x in range(x0, x0 + width) for y in range(y0, y0 + height)]
    return validate_domain(verts, mesh_exponent)


# ---------------------------------------------------------------------------
# Dual loops


def _canonical_cycle(sites: Sequence[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    # Sites of a simple cycle are distinct, so the minimal site picks the
    # starting point and the smaller of its two neighbours picks the direction.
    n = len(sites)
    k = min(range(n), key=lambda i: sites[i])
    fwd = sites[(k + 1) % n]
    bwd = sites[(k - 1) % n]
    if fwd <= bwd:
        return tuple(sites[(k + i) % n] for i in range(n))
    return tuple(sites[(k - i) % n] for i in range(n))


@dataclass(frozen=True)
class DualLoop:
    """Simple closed cycle of dual sites, in doubled integer coordinates."""

    sites: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.sites)

    @cached_property
    def site_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.sites)

    def edges(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        n = len(self.sites)
        return [(self.sites[i], self.sites[(i + 1) % n]) for i in range(n)]

    @cached_property
    def belt_vertices(self) -> frozenset[Vertex]:
        """Primal endpoints of every edge crossed by the loop."""
        belt = set()
        for (a, b), (c, d) in self.edges():
            mx, my = (a + c) // 2, (b + d) // 2
            if b == d:  # horizontal dual step crosses a vertical primal edge
                belt.add((mx // 2, (my - 1) // 2))
                belt.add((mx // 2, (my + 1) // 2))
            else:
                belt.add(((mx - 1) // 2, my // 2))
                belt.add(((mx + 1) // 2, my // 2))
        return frozenset(belt)

    @cached_property
    def closure_vertices(self) -> frozenset[Vertex]:
        """Primal vertices adjacent to a loop site (the four cell corners)."""
        out = set()
        for a, b in self.sites:
            for da in (-1, 1):
                for db in (-1, 1):
                    out.add(((a + da) // 2, (b + db) // 2))
        return frozenset(out)

    @cached_property
    def enclosed_vertices(self) -> frozenset[Vertex]:
        """Primal vertices strictly inside the loop (ray-casting parity)."""
        xs = [s[0] for s in self.sites]
        ys = [s[1] for s in self.sites]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        # Vertical loop segments, at odd doubled x; query points have even
        # coordinates so no crossing is ever tangent.
        gx = np.arange(x0 + 1, x1, 2)  # even doubled x inside bbox
        gy = np.arange(y0 + 1, y1, 2)
        if len(gx) == 0 or len(gy) == 0:
            return frozenset()
        parity = np.zeros((len(gx), len(gy)), dtype=bool)
        for (a, b), (c, d) in self.edges():
            if a == c:  # vertical segment at doubled x=a spanning [b,d]
                lo, hi = (b, d) if b < d else (d, b)
                cols = (gy > lo) & (gy < hi)
                rows = gx < a
                parity[np.ix_(rows, cols)] ^= True
        ii, jj = np.nonzero(parity)
        return frozenset(
            (int(gx[i]) // 2, int(gy[j]) // 2) for i, j in zip(ii, jj)
        )


def make_loop(sites: Iterable[tuple[int, int]]) -> DualLoop:
    """Validate and canonicalize a cyclic site list into a DualLoop."""
    pts = [(int(a), int(b)) for a, b in sites]
    if len(pts) < 4:
        raise ValueError("a dual loop needs at least 4 sites")
    if len(set(pts)) != len(pts):
        raise ValueError("dual loop revisits a site")
    for a, b in pts:
        if a % 2 == 0 or b % 2 == 0:
            raise ValueError(f"site {(a, b)} is not odd-odd in doubled coordinates")
    n = len(pts)
    for i in range(n):
        a, b = pts[i]
        c, d = pts[(i + 1) % n]
        if abs(a - c) + abs(b - d) != 2:
            raise ValueError("consecutive dual sites are not lattice-adjacent")
    return DualLoop(_canonical_cycle(pts))


def block_boundary_loop(x0: int, y0: int, x1: int, y1: int) -> DualLoop:
    """Dual loop enclosing exactly the cells [x0..x1] x [y0..y1]."""
    if x1 < x0 or y1 < y0:
        raise ValueError("empty block")
    lo_x, hi_x = 2 * x0 - 1, 2 * x1 + 1
    lo_y, hi_y = 2 * y0 - 1, 2 * y1 + 1
    sites = []
    for a in range(lo_x, hi_x, 2):
        sites.append((a, lo_y))
    for b in range(lo_y, hi_y, 2):
        sites.append((hi_x, b))
    for a in range(hi_x, lo_x, -2):
        sites.append((a, hi_y))
    for b in range(hi_y, lo_y, -2):
        sites.append((lo_x, b))
    return make_loop(sites)


def unit_loop(x: int, y: int) -> DualLoop:
    """Smallest dual square, enclosing the single cell (x, y)."""
    return block_boundary_loop(x, y, x, y)


# ---------------------------------------------------------------------------
# Nested configurations and annuli


@dataclass(frozen=True)
class NestedConfig:
    """A loop inside an inner domain inside an outer domain."""

    loop: DualLoop
    inner: DiscreteDomain
    outer: DiscreteDomain

    @cached_property
    def config_id(self) -> str:
        import hashlib

        payload = json.dumps(
            {
                "loop": [list(s) for s in self.loop.sites],
                "inner": [list(v) for v in self.inner.vertices],
                "outer": [list(v) for v in self.outer.vertices],
                "mesh_exponent": self.inner.mesh_exponent,
            },
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def nested_config(loop: DualLoop, inner: DiscreteDomain, outer: DiscreteDomain) -> NestedConfig:
    if inner.mesh_exponent != outer.mesh_exponent:
        raise ValueError("inner and outer domains use different mesh exponents")
    if not inner.vertex_set <= outer.vertex_set:
        raise ValueError("inner domain is not contained in the outer domain")
    if not loop.closure_vertices <= inner.vertex_set:
        raise ValueError("loop is not strictly inside the inner domain")
    return NestedConfig(loop, inner, outer)


@dataclass(frozen=True)
class AnnularDomain:
    """Domain whose complement has exactly one bounded hole."""

    domain: DiscreteDomain
    hole_witness: Vertex

    @cached_property
    def hole_vertices(self) -> frozenset[Vertex]:
        holes, _ = _complement_split(self.domain.vertex_set)
        for h in holes:
            if self.hole_witness in h:
                return h
        raise AssertionError("validated annulus lost its hole")


def _complement_split(vset: frozenset[Vertex]):
    """Split the complement (within an expanded bbox) into bounded holes and
    the unbounded outside, returned as (holes, outside)."""
    xs = [v[0] for v in vset]
    ys = [v[1] for v in vset]
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    comp = frozenset(
        (x, y)
        for x in range(x0, x1 + 1)
        for y in range(y0, y1 + 1)
        if (x, y) not in vset
    )
    holes = []
    outside = frozenset()
    for c in _components(comp):
        if any(x in (x0, x1) or y in (y0, y1) for x, y in c):
            outside = c
        else:
            holes.append(c)
    return holes, outside


def annular_domain(domain: DiscreteDomain, hole_witness: Vertex) -> AnnularDomain:
    holes, _ = _complement_split(domain.vertex_set)
    if len(holes) != 1:
        raise ValueError(
            f"annular domain needs exactly one bounded complement component, found {len(holes)}"
        )
    if tuple(hole_witness) not in holes[0]:
        raise ValueError("hole witness does not lie in the bounded complement component")
    return AnnularDomain(domain, (int(hole_witness[0]), int(hole_witness[1])))


def annular_rect(x0: int, y0: int, x1: int, y1: int, hx0: int, hy0: int, hx1: int, hy1: int,
                 mesh_exponent: int = 0) -> AnnularDomain:
    """Rectangular ring: cells of [x0..x1]x[y0..y1] minus [hx0..hx1]x[hy0..hy1]."""
    hole = {(x, y) for x in range(hx0, hx1 + 1) for y in range(hy0, hy1 + 1)}
    verts = [
        (x, y)
        for x in range(x0, x1 + 1)
        for y in range(y0, y1 + 1)
        if (x, y) not in hole
    ]
    dom = validate_domain(verts, mesh_exponent)
    return annular_domain(dom, (hx0, hy0))


# ---------------------------------------------------------------------------
# Surgery


def subtract_loop(domain: DiscreteDomain, loop: DualLoop) -> tuple[Region, Region]:
    """Delete the loop's belt from the domain.

    Returns (inside, outside): the surviving vertices strictly inside the
    loop and those outside it.  Either part may be empty, and either may
    split into several 4-connected components.
    """
    belt = loop.belt_vertices
    if not belt <= domain.vertex_set:
        raise LoopTouchesBoundary("loop belt leaves the domain")
    rest = domain.vertex_set - belt
    inner_cells = loop.enclosed_vertices
    inside = tuple(sorted(v for v in rest if v in inner_cells))
    outside = tuple(sorted(v for v in rest if v not in inner_cells))
    k = domain.mesh_exponent
    return Region(inside, k), Region(outside, k)


def remainder_vertices(domain: DiscreteDomain, loop: DualLoop) -> Region:
    """The full vertex set of the domain with the loop's belt removed."""
    belt = loop.belt_vertices
    if not belt <= domain.vertex_set:
        raise LoopTouchesBoundary("loop belt leaves the domain")
    return Region(tuple(sorted(domain.vertex_set - belt)), domain.mesh_exponent)


def is_essential(loop: DualLoop, annulus: AnnularDomain) -> bool:
    """True iff deleting the loop's belt separates the hole-adjacent vertices
    of the annulus from its outer-boundary-adjacent vertices."""
    dom = annulus.domain.vertex_set
    if not loop.closure_vertices <= dom:
        raise ValueError("loop is not inside the annular domain")
    holes, outside = _complement_split(dom)
    hole = annulus.hole_vertices
    rest = dom - loop.belt_vertices

    def adjacent_to(block: frozenset[Vertex]) -> set[Vertex]:
        out = set()
        for x, y in block:
            for dx, dy in _NBRS:
                nb = (x + dx, y + dy)
                if nb in rest:
                    out.add(nb)
        return out

    src = adjacent_to(hole)
    dst = adjacent_to(outside)
    if not src or not dst:
        return True
    seen = set(src)
    stack = list(src)
    while stack:
        x, y = stack.pop()
        if (x, y) in dst:
            return False
        for dx, dy in _NBRS:
            nb = (x + dx, y + dy)
            if nb in rest and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return True


def essential_annulus(loop: DualLoop, domain: DiscreteDomain, thickness: int = 1) -> AnnularDomain:
    """Fattened neighbourhood of the loop inside `domain`, as an annulus.

    Raises NoEssentialAnnulus when the loop encloses no surviving vertex or
    the collar does not fit inside the domain as a valid essential annulus.
    """
    belt = loop.belt_vertices
    inner = loop.enclosed_vertices
    # collar: everything within Chebyshev distance `thickness` of the belt
    collar = set()
    for (bx, by) in belt:
        for dx in range(-thickness, thickness + 1):
            for dy in range(-thickness, thickness + 1):
                collar.add((bx + dx, by + dy))
    ann_verts = collar & domain.vertex_set
    hole_cells = inner - frozenset(ann_verts)
    if not hole_cells:
        raise NoEssentialAnnulus("loop encloses no vertices beyond its collar")
    if not loop.closure_vertices <= ann_verts:
        raise NoEssentialAnnulus("collar does not contain the loop closure")
    comps = _components(frozenset(ann_verts))
    if len(comps) != 1:
        raise NoEssentialAnnulus("collar is disconnected inside the domain")
    dom = DiscreteDomain(tuple(sorted(ann_verts)), domain.mesh_exponent)
    try:
        ann = annular_domain(dom, sorted(hole_cells)[0])
    except ValueError as exc:
        raise NoEssentialAnnulus(str(exc)) from exc
    if not is_essential(loop, ann):
        raise NoEssentialAnnulus("loop is not essential in its own collar")
    return ann


# ---------------------------------------------------------------------------
# Refinement and symmetry


def _refine_vertices(verts: Iterable[Vertex]) -> list[Vertex]:
    return [
        (2 * x + dx, 2 * y + dy)
        for x, y in verts
        for dx in (0, 1)
        for dy in (0, 1)
    ]


def _refine_loop_sites(sites: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    # Cell (i,j) refines to the block {2i, 2i+1} x {2j, 2j+1}, i.e. the map
    # doubles doubled coordinates and shifts by +1; midpoints restore
    # adjacency along the doubled-length edges.
    out = []
    n = len(sites)
    for i in range(n):
        a, b = sites[i]
        c, d = sites[(i + 1) % n]
        p = (2 * a + 1, 2 * b + 1)
        q = (2 * c + 1, 2 * d + 1)
        out.append(p)
        out.append(((p[0] + q[0]) // 2, (p[1] + q[1]) // 2))
    return out


def refine(obj, levels: int = 1):
    """Halve the mesh `levels` times (cells become 2x2 blocks)."""
    if levels < 0:
        raise ValueError("levels must be non-negative")
    if levels == 0:
        return obj
    if isinstance(obj, DiscreteDomain):
        cur = obj
        for _ in range(levels):
            cur = DiscreteDomain(
                tuple(sorted(_refine_vertices(cur.vertices))), cur.mesh_exponent + 1
            )
        return cur
    if isinstance(obj, DualLoop):
        sites = obj.sites
        for _ in range(levels):
            sites = _refine_loop_sites(sites)
        return make_loop(sites)
    if isinstance(obj, NestedConfig):
        return NestedConfig(
            refine(obj.loop, levels), refine(obj.inner, levels), refine(obj.outer, levels)
        )
    if isinstance(obj, AnnularDomain):
        wx, wy = obj.hole_witness
        return AnnularDomain(refine(obj.domain, levels), (wx * 2 ** levels, wy * 2 ** levels))
    if isinstance(obj, Region):
        verts = obj.vertices
        for _ in range(levels):
            verts = tuple(sorted(_refine_vertices(verts)))
        return Region(verts, obj.mesh_exponent + levels)
    raise TypeError(f"cannot refine {type(obj).__name__}")


@dataclass(frozen=True)
class LatticeSymmetry:
    """Point symmetry (quarter turns, optional x-axis flip) plus translation."""

    quarter_turns: int = 0
    flip: bool = False
    shift: Vertex = (0, 0)

    def apply_point(self, x: int, y: int, doubled: bool = False) -> tuple[int, int]:
        if self.flip:
            x, y = x, -y
        for _ in range(self.quarter_turns % 4):
            x, y = -y, x
        sx, sy = self.shift
        if doubled:
            return x + 2 * sx, y + 2 * sy
        return x + sx, y + sy


POINT_SYMMETRIES = tuple(
    LatticeSymmetry(quarter_turns=r, flip=f) for f in (False, True) for r in range(4)
)


def apply_symmetry(obj, sym: LatticeSymmetry):
    if isinstance(obj, DiscreteDomain):
        return DiscreteDomain(
            tuple(sorted(sym.apply_point(x, y) for x, y in obj.vertices)),
            obj.mesh_exponent,
        )
    if isinstance(obj, Region):
        return Region(
            tuple(sorted(sym.apply_point(x, y) for x, y in obj.vertices)),
            obj.mesh_exponent,
        )
    if isinstance(obj, DualLoop):
        return make_loop(sym.apply_point(a, b, doubled=True) for a, b in obj.sites)
    if isinstance(obj, NestedConfig):
        return NestedConfig(
            apply_symmetry(obj.loop, sym),
            apply_symmetry(obj.inner, sym),
            apply_symmetry(obj.outer, sym),
        )
    if isinstance(obj, AnnularDomain):
        return AnnularDomain(
            apply_symmetry(obj.domain, sym), sym.apply_point(*obj.hole_witness)
        )
    raise TypeError(f"cannot apply symmetry to {type(obj).__name__}")


def canonical_vertex_key(vertices: Iterable[Vertex]) -> tuple:
    """Vertex set up to translation and point symmetry, as a hashable key.

    Shape-invariant quantities (partition functions, determinants) are cached
    on this key, which makes their symmetry invariance exact.
    """
    verts = list(vertices)
    if not verts:
        return ()
    best = None
    for sym in POINT_SYMMETRIES:
        pts = [sym.apply_point(x, y) for x, y in verts]
        mx = min(p[0] for p in pts)
        my = min(p[1] for p in pts)
        cand = tuple(sorted((x - mx, y - my) for x, y in pts))
        if best is None or cand < best:
            best = cand
    return best


# ---------------------------------------------------------------------------
# Serialization


def domain_to_json(domain: DiscreteDomain) -> str:
    return json.dumps(
        {
            "mesh_exponent": domain.mesh_exponent,
            "vertices": [[x, y] for x, y in domain.vertices],
        },
        separators=(",", ":"),
        sort_keys=True,
    )


def domain_from_json(text: str) -> DiscreteDomain:
    data = json.loads(text)
    return validate_domain(
        [tuple(v) for v in data["vertices"]], int(data.get("mesh_exponent", 0))
    )


def loop_to_json(loop: DualLoop) -> str:
    return json.dumps(
        {"dual_sites": [[a, b] for a, b in loop.sites]},
        separators=(",", ":"),
        sort_keys=True,
    )


def loop_from_json(text: str) -> DualLoop:
    data = json.loads(text)
    return make_loop(tuple(s) for s in data["dual_sites"])


def config_to_json(cfg: NestedConfig) -> str:
    return json.dumps(
        {
            "loop": {"dual_sites": [[a, b] for a, b in cfg.loop.sites]},
            "inner": {
                "mesh_exponent": cfg.inner.mesh_exponent,
                "vertices": [[x, y] for x, y in cfg.inner.vertices],
            },
            "outer": {
                "mesh_exponent": cfg.outer.mesh_exponent,
                "vertices": [[x, y] for x, y in cfg.outer.vertices],
            },
        },
        separators=(",", ":"),
        sort_keys=True,
    )


def config_from_json(text: str) -> NestedConfig:
    data = json.loads(text)
    loop = make_loop(tuple(s) for s in data["loop"]["dual_sites"])
    inner = validate_domain(
        [tuple(v) for v in data["inner"]["vertices"]],
        int(data["inner"].get("mesh_exponent", 0)),
    )
    outer = validate_domain(
        [tuple(v) for v in data["outer"]["vertices"]],
        int(data["outer"].get("mesh_exponent", 0)),
    )
    return nested_config(loop, inner, outer)
