"""Geometry layer: domains, dual loops, nesting, annuli, refinement."""

import itertools
import json

import numpy as np
import pytest

from looplab.lattice import (
    POINT_SYMMETRIES,
    AnnularDomain,
    DisconnectedDomain,
    DiscreteDomain,
    EmptyDomain,
    LatticeSymmetry,
    LoopTouchesBoundary,
    NoEssentialAnnulus,
    Region,
    annular_rect,
    apply_symmetry,
    block_boundary_loop,
    canonical_vertex_key,
    config_from_json,
    config_to_json,
    domain_from_json,
    domain_to_json,
    essential_annulus,
    is_essential,
    loop_from_json,
    loop_to_json,
    make_loop,
    nested_config,
    rect_domain,
    refine,
    remainder_vertices,
    subtract_loop,
    unit_loop,
    validate_domain,
)


def test_validate_domain_dedupes_and_sorts():
    dom = validate_domain([(1, 0), (0, 0), (1, 0), (0, 1)])
    assert dom.vertices == ((0, 0), (0, 1), (1, 0))
    assert len(dom) == 3
    assert (1, 0) in dom


def test_rect_domain_size_and_bbox():
    dom = rect_domain(2, -1, 4, 3)
    assert len(dom) == 12
    assert dom.bbox() == (2, -1, 5, 1)
    assert dom.mesh_exponent == 0


def test_empty_and_disconnected_raise():
    with pytest.raises(EmptyDomain):
        validate_domain([])
    with pytest.raises(DisconnectedDomain):
        validate_domain([(0, 0), (2, 0)])


def test_region_splits_into_sorted_components():
    reg = Region(((0, 0), (0, 1), (5, 5)), 0)
    comps = reg.components()
    assert [len(c) for c in comps] == [2, 1]
    assert all(isinstance(c, DiscreteDomain) for c in comps)


def test_make_loop_canonical_under_rotation_and_reversal():
    base = block_boundary_loop(0, 0, 2, 1)
    sites = list(base.sites)
    for k in range(1, len(sites)):
        rotated = make_loop(sites[k:] + sites[:k])
        assert rotated.sites == base.sites
    assert make_loop(sites[::-1]).sites == base.sites


def test_make_loop_rejects_bad_input():
    with pytest.raises(ValueError):
        make_loop([(0, 0), (2, 0), (2, 2), (0, 2)])  # even coordinates
    with pytest.raises(ValueError):
        make_loop([(1, 1), (5, 1), (5, 3), (1, 3)])  # non-adjacent step
    with pytest.raises(ValueError):
        make_loop([(1, 1), (3, 1)])  # too short
    eight = [(1, 1), (3, 1), (3, 3), (1, 3), (1, 1), (-1, 1), (-1, -1), (1, -1)]
    with pytest.raises(ValueError):
        make_loop(eight)  # revisits a site


def test_unit_loop_geometry():
    lp = unit_loop(0, 0)
    assert len(lp) == 4
    assert len(lp.belt_vertices) == 5
    assert len(lp.closure_vertices) == 9
    assert lp.enclosed_vertices == frozenset({(0, 0)})


def test_block_loop_enclosed_matches_cells():
    rng = np.random.default_rng(7)
    for _ in range(25):
        x0, y0 = rng.integers(-5, 5, size=2)
        w, h = rng.integers(1, 5, size=2)
        lp = block_boundary_loop(int(x0), int(y0), int(x0 + w - 1), int(y0 + h - 1))
        cells = {(int(x0) + i, int(y0) + j) for i in range(w) for j in range(h)}
        assert lp.enclosed_vertices == frozenset(cells)
        assert lp.belt_vertices <= lp.closure_vertices


def test_nested_config_validation():
    cfg = nested_config(unit_loop(2, 2), rect_domain(0, 0, 5, 5), rect_domain(0, 0, 7, 7))
    assert cfg.config_id == "9d1b93f6ba2a"
    with pytest.raises(ValueError):
        # closure of the loop pokes out of the inner domain
        nested_config(unit_loop(0, 0), rect_domain(0, 0, 5, 5), rect_domain(0, 0, 7, 7))
    with pytest.raises(ValueError):
        # inner domain not contained in the outer one
        nested_config(unit_loop(2, 2), rect_domain(0, 0, 5, 5), rect_domain(1, 1, 5, 5))


def test_subtract_loop_unit_has_empty_inside():
    inside, outside = subtract_loop(rect_domain(0, 0, 5, 5), unit_loop(2, 2))
    assert len(inside) == 0
    assert len(outside) == 20


def test_subtract_loop_block_keeps_center():
    inside, outside = subtract_loop(rect_domain(0, 0, 7, 7), block_boundary_loop(1, 1, 3, 3))
    assert inside.vertex_set == {(2, 2)}
    assert len(outside) == 28
    rem = remainder_vertices(rect_domain(0, 0, 7, 7), block_boundary_loop(1, 1, 3, 3))
    assert rem.vertex_set == inside.vertex_set | outside.vertex_set


def test_subtract_loop_requires_belt_inside():
    with pytest.raises(LoopTouchesBoundary):
        subtract_loop(rect_domain(0, 0, 3, 3), unit_loop(0, 0))


def test_annular_rect_and_essentiality():
    ann = annular_rect(0, 0, 10, 10, 4, 4, 7, 7)
    assert isinstance(ann, AnnularDomain)
    assert ann.hole_vertices == {(x, y) for x in range(4, 8) for y in range(4, 8)}
    ring = block_boundary_loop(2, 2, 8, 8)
    assert is_essential(ring, ann)
    corner = unit_loop(1, 1)
    assert not is_essential(corner, ann)


def test_essential_annulus_found_and_missing():
    lp = block_boundary_loop(-2, -2, 2, 2)
    dom = rect_domain(-5, -5, 11, 11)
    ann = essential_annulus(lp, dom, thickness=1)
    assert is_essential(lp, ann)
    assert len(ann.hole_vertices) > 0
    with pytest.raises(NoEssentialAnnulus):
        essential_annulus(unit_loop(2, 2), rect_domain(0, 0, 5, 5), thickness=1)


def test_refine_scales_everything():
    dom = rect_domain(0, 0, 3, 2)
    fine = refine(dom)
    assert len(fine) == 4 * len(dom)
    assert fine.mesh_exponent == dom.mesh_exponent + 1
    lp = block_boundary_loop(1, 1, 2, 2)
    assert len(refine(lp)) == 2 * len(lp)
    cfg = nested_config(unit_loop(2, 2), rect_domain(0, 0, 5, 5), rect_domain(0, 0, 7, 7))
    cfg2 = refine(cfg)
    assert len(cfg2.inner) == 100 and len(cfg2.outer) == 196
    assert refine(refine(dom)).vertices == refine(dom, 2).vertices


def test_canonical_key_invariant_under_all_symmetries():
    ell = validate_domain([(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (1, 2)])
    keys = {canonical_vertex_key(apply_symmetry(ell, s).vertices) for s in POINT_SYMMETRIES}
    assert len(keys) == 1
    shifted = validate_domain([(x + 7, y - 3) for x, y in ell.vertices])
    assert canonical_vertex_key(shifted.vertices) == canonical_vertex_key(ell.vertices)


def test_apply_symmetry_preserves_nesting():
    cfg = nested_config(unit_loop(2, 2), rect_domain(0, 0, 5, 4), rect_domain(0, 0, 7, 6))
    for sym in POINT_SYMMETRIES:
        moved = apply_symmetry(cfg, sym)
        nested_config(moved.loop, moved.inner, moved.outer)  # revalidates


def test_symmetry_roundtrip_on_points():
    sym = LatticeSymmetry(quarter_turns=1, flip=True, shift=(3, -2))
    pts = [(0, 0), (2, 5), (-3, 1)]
    moved = [sym.apply_point(x, y) for x, y in pts]
    assert len(set(moved)) == len(pts)


def test_json_round_trips():
    dom = rect_domain(-1, 2, 4, 3)
    assert domain_from_json(domain_to_json(dom)).vertices == dom.vertices
    lp = block_boundary_loop(0, 0, 2, 1)
    assert loop_from_json(loop_to_json(lp)).sites == lp.sites
    cfg = nested_config(unit_loop(2, 2), rect_domain(0, 0, 5, 5), rect_domain(0, 0, 7, 7))
    back = config_from_json(config_to_json(cfg))
    assert back.config_id == cfg.config_id
