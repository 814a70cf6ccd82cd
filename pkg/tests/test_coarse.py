"""Single-scale coarse covers, the exhaustive oracle, and the bridge."""

import random

import pytest

from dadim.coarse import (
    AsdimWitness,
    Grid1dSpace,
    Grid2dSpace,
    GroupBallSpace,
    TableMetricSpace,
    asdim_witness_from_json,
    bridge_to_groupoid,
    construct_grid_witness,
    exhaustive_min_colors,
    exhaustive_min_colors_with_witness,
    recover_families_from_bridge,
    space_from_json,
    verify_asdim_witness,
)
from dadim.errors import InvalidInput, TooLarge, VerificationFailed
from dadim.groupoid import BlockArrows


def test_verify_examples():
    X = Grid1dSpace(0, 199)
    fams = [
        [frozenset(range(100 * k, 100 * k + 50)) for k in range(2)],
        [frozenset(range(100 * k + 50, 100 * k + 100)) for k in range(2)],
    ]
    assert verify_asdim_witness(X, AsdimWitness(10, 49, fams)).accepted

    # one class covering a bounded space
    Y = TableMetricSpace.path_graph(6)
    w = AsdimWitness(3, 5, [[frozenset(range(6))]])
    assert verify_asdim_witness(Y, w).accepted

    # tiling with one family: adjacent intervals violate separation
    bad = AsdimWitness(10, 49, [[frozenset(range(50 * k, 50 * k + 50)) for k in range(4)]])
    report = verify_asdim_witness(X, bad)
    assert not report.accepted and report.code == "SeparationViolation"


def test_verify_diameter_violation():
    X = Grid1dSpace(0, 99)
    w = AsdimWitness(5, 10, [[frozenset(range(100))]])
    report = verify_asdim_witness(X, w)
    assert not report.accepted and report.code == "DiameterViolation"


def test_verify_cover_gap():
    X = Grid1dSpace(0, 9)
    w = AsdimWitness(2, 9, [[frozenset(range(5))]])
    report = verify_asdim_witness(X, w)
    assert not report.accepted and report.code == "CoverGap"


@pytest.mark.parametrize("R", [1, 3, 10, 25])
def test_construct_1d_sweep(R):
    w = construct_grid_witness(1, (0, 999), R)
    assert len(w.families) == 2 and w.bound_S == 5 * R - 1
    assert verify_asdim_witness(Grid1dSpace(0, 999), w).accepted


def test_construct_1d_large_scale_sample():
    # upper end of the sampled sweep: R = 50 on a long interval
    w = construct_grid_witness(1, (0, 49999), 50)
    assert verify_asdim_witness(Grid1dSpace(0, 49999), w).accepted


def test_construct_1d_degenerate():
    w = construct_grid_witness(1, (5, 5), 5)
    assert len(w.families) == 2
    assert sum(len(f) for f in w.families) == 1


@pytest.mark.parametrize("R,side", [(1, 30), (2, 60), (5, 200)])
def test_construct_2d_sweep(R, side):
    w = construct_grid_witness(2, ((0, side - 1), (0, side - 1)), R)
    assert len(w.families) == 3
    assert verify_asdim_witness(Grid2dSpace(side, side), w).accepted


def test_exhaustive_examples():
    P12 = TableMetricSpace.path_graph(12)
    assert exhaustive_min_colors(P12, 2, 4) == 2
    assert exhaustive_min_colors(P12, 3, 11) == 1  # diameter <= S
    two = TableMetricSpace.from_edges([0, 1], [(0, 1)])
    assert exhaustive_min_colors(two, 3, 0) == 2
    with pytest.raises(TooLarge):
        exhaustive_min_colors(Grid1dSpace(0, 99), 1, 1)


def test_oracle_consistency_small_spaces():
    """Any accepted witness uses at least as many families as the oracle,
    and the oracle's witness achieves the minimum."""
    rng = random.Random(11)
    P8 = TableMetricSpace.path_graph(8)
    diam = P8.diameter()
    for R in range(1, diam + 1, 2):
        for S in range(1, diam + 1, 2):
            k, w = exhaustive_min_colors_with_witness(P8, R, S)
            assert verify_asdim_witness(P8, w).accepted
            assert len([f for f in w.families if f]) <= k
            # randomized valid witnesses: random family assignments that
            # happen to verify must use >= k families
            for _ in range(10):
                kk = rng.randint(1, 4)
                assignment = [rng.randrange(kk) for _ in range(8)]
                fams = []
                for fam in range(kk):
                    members = [p for p, a in zip(P8.points, assignment) if a == fam]
                    comps = []
                    rem = set(members)
                    while rem:
                        seed = rem.pop()
                        comp = {seed}
                        grew = True
                        while grew:
                            grew = False
                            for q in list(rem):
                                if any(P8.dist(q, c) <= R for c in comp):
                                    comp.add(q)
                                    rem.discard(q)
                                    grew = True
                        comps.append(frozenset(comp))
                    fams.append(comps)
                cand = AsdimWitness(R, S, fams)
                if verify_asdim_witness(P8, cand).accepted:
                    used = sum(1 for f in fams if f)
                    assert used >= k


def test_bridge_roundtrip_1d():
    X = Grid1dSpace(0, 199)
    w = construct_grid_witness(1, (0, 199), 10)
    G, gw, report = bridge_to_groupoid(X, w)
    assert report.accepted
    assert isinstance(gw.generated[0], BlockArrows)
    # all generated arrows stay within the bound_S tube
    for gen in gw.generated:
        for b in gen.blocks:
            assert X.subset_diameter(b) <= w.bound_S
    recovered = recover_families_from_bridge(gw)
    original = [
        sorted((frozenset(c) for c in fam), key=lambda b: sorted(map(repr, b)))
        for fam in w.families
    ]
    assert recovered == original


def test_bridge_bounded_space_single_color():
    Y = TableMetricSpace.path_graph(5)
    w = AsdimWitness(2, 4, [[frozenset(range(5))]])
    G, gw, report = bridge_to_groupoid(Y, w)
    assert report.accepted and len(gw.colors) == 1


def test_bridge_rejects_corruption():
    X = Grid1dSpace(0, 199)
    w = construct_grid_witness(1, (0, 199), 10)
    fams = [list(f) for f in w.families]
    fams[0].append(fams[1].pop(0))  # adjacent classes now share a family
    bad = AsdimWitness(w.scale_R, w.bound_S, fams)
    with pytest.raises(VerificationFailed) as exc1:
        bridge_to_groupoid(X, bad)
    assert exc1.value.report.code == "SeparationViolation"
    with pytest.raises(VerificationFailed) as exc2:
        bridge_to_groupoid(X, bad, verify=False)
    assert exc2.value.report.code in {"SizeExceeded", "NotClosed"}


def test_group_ball_word_metric():
    gb = GroupBallSpace([[1, 0], [0, 1]], 3)
    gb.check_metric_axioms()
    assert gb.dist((0, 0), (1, 1)) == 2
    # tube semantics: pairs in the radius-r tube realize exactly the word
    # ball of differences, a finite set
    for r in (1, 2, 3):
        diffs = {
            tuple(b - a for a, b in zip(x, y))
            for x in gb.points
            for y in gb.points
            if gb.dist(x, y) <= r
        }
        assert diffs == {v for v in gb.tube_difference_set(r) if gb.word_norm(v) <= r}
        assert len(diffs) == len(gb.tube_difference_set(r))


def test_metric_axioms_catch_bad_table():
    pts = [0, 1]
    table = {(0, 0): 0, (1, 1): 0, (0, 1): 1, (1, 0): 2}
    with pytest.raises(InvalidInput):
        TableMetricSpace(pts, table)


def test_ball_profile():
    X = TableMetricSpace.path_graph(6)
    profile = X.ball_profile([0, 1, 2])
    assert profile == {0: 1, 1: 3, 2: 5}
    Y = Grid2dSpace(5, 5)
    assert Y.ball_profile([1])[1] == 5  # interior l1 ball


def test_word_ball_oracle_witness_flow():
    """Word-metric ball of Z^2: the exhaustive oracle's witness verifies
    and bridges, with the tube semantics of the word metric."""
    gb = GroupBallSpace([[1, 0], [0, 1]], 2)
    assert len(gb.points) == 13
    k, w = exhaustive_min_colors_with_witness(gb, 1, 2, max_points=16)
    assert verify_asdim_witness(gb, w).accepted
    G, gw, report = bridge_to_groupoid(gb, w)
    assert report.accepted
    recovered = recover_families_from_bridge(gw)
    assert sum(len(f) for f in recovered) == sum(len(f) for f in w.families)


def test_grid2d_subset_diameter_matches_bruteforce():
    X = Grid2dSpace(7, 5)
    rng = random.Random(3)
    for _ in range(20):
        subset = rng.sample(X.points, rng.randint(1, 12))
        brute = max(
            (X.dist(a, b) for a in subset for b in subset), default=0
        )
        assert X.subset_diameter(subset) == brute


def test_space_and_witness_serialization():
    sp = space_from_json({"grid": {"dims": [50]}})
    assert isinstance(sp, Grid1dSpace)
    sp2 = space_from_json({"grid": {"dims": [4, 6]}})
    assert isinstance(sp2, Grid2dSpace)
    sp3 = space_from_json({"group_ball": {"generators": [[1]], "radius": 4}})
    assert isinstance(sp3, GroupBallSpace)
    sp4 = space_from_json({"points": [0, 1, 2], "edges": [[0, 1], [1, 2]]})
    assert sp4.dist(0, 2) == 2

    w = construct_grid_witness(1, (0, 99), 5)
    back = asdim_witness_from_json(w.to_json())
    assert back.scale_R == w.scale_R and back.bound_S == w.bound_S
    assert [sorted(map(repr, f)) for f in back.families[0]] == [
        sorted(map(repr, f)) for f in w.families[0]
    ]
