"""Witness construction and the broken-orbit BFS verifier."""

import pytest

from dadim.errors import NotMinimal
from dadim.symbolic import ForbiddenWordSubshift, Odometer, SubstitutionSubshift
from dadim.witness import (
    DadWitness,
    color_element_sets,
    construct_minimal_z_witness,
    default_blowup_bound,
    verify_dad_witness,
    witness_from_json,
)


@pytest.fixture(scope="module")
def dyadic():
    return Odometer([2], depth_limit=12)


def quotient_oracle(q, residues, E, disp_cap):
    """Independent broken-orbit enumeration on the rotation Z/q.

    States are (position, displacement) pairs; any displacement beyond the
    cap means the element set cannot be finite within the cap.
    """
    E = sorted({e for x in E for e in (x, -x)} | {0})
    reached = set()
    frontier = [(p, 0) for p in residues]
    seen = set(frontier)
    while frontier:
        pos, disp = frontier.pop()
        reached.add(disp)
        for e in E:
            if e == 0:
                continue
            npos, ndisp = (pos + e) % q, disp + e
            if abs(ndisp) > disp_cap:
                return None
            if npos in residues and (npos, ndisp) not in seen:
                seen.add((npos, ndisp))
                frontier.append((npos, ndisp))
    return frozenset(reached)


@pytest.mark.parametrize("N,expect_M", [(1, 16), (2, 32), (3, 32)])
def test_construct_minimal_z(dyadic, N, expect_M):
    w = construct_minimal_z_witness(dyadic, N)
    assert len(w.colors) == 2
    assert w.meta["M"] == expect_M
    f0, f1 = w.finite_sets
    assert all(abs(n) <= 3 * N for n in f0)
    assert all(abs(n) <= expect_M + N for n in f1)
    # symmetry and identity
    for F in w.finite_sets:
        assert 0 in F and F == frozenset(-n for n in F)
    assert verify_dad_witness(dyadic, w).accepted


def test_construct_n1_details(dyadic):
    w = construct_minimal_z_witness(dyadic, 1)
    assert w.meta["U"] == {"cylinders": ["000"]}
    assert w.meta["V"] == {"cylinders": ["0000"]}
    assert len(w.finite_sets[0]) <= 7
    assert len(w.finite_sets[1]) <= 35


@pytest.mark.parametrize("N", [1, 2, 3])
def test_bfs_equals_quotient_bruteforce(dyadic, N):
    w = construct_minimal_z_witness(dyadic, N)
    M = w.meta["M"]
    depth = 6
    q = dyadic.level_size(depth)
    E = range(-N, N + 1)
    for color, F in zip(w.colors, w.finite_sets):
        residues = color.values_at_depth(depth)
        oracle = quotient_oracle(q, residues, E, 2 * (M + N))
        assert oracle == F


def test_verify_rejects_whole_space_color(dyadic):
    bad = DadWitness(
        colors=[dyadic.whole()], generator_set=(-1, 0, 1),
        finite_sets=[frozenset({0})],
    )
    report = verify_dad_witness(dyadic, bad, 1000)
    assert not report.accepted and report.code == "BlowupExceeded"
    assert report.details["frontier_active"]


def test_verify_blowup_on_too_small_bound(dyadic):
    w = construct_minimal_z_witness(dyadic, 1)
    report = verify_dad_witness(dyadic, w, blowup_bound=3)
    assert not report.accepted and report.code == "BlowupExceeded"


def test_verify_trivial_generator(dyadic):
    w = DadWitness(
        colors=[dyadic.whole()], generator_set=(0,),
        finite_sets=[frozenset({0})],
    )
    report = verify_dad_witness(dyadic, w)
    assert report.accepted
    assert report.details["finite_sets"] == [[0]]


def test_verify_cover_gap(dyadic):
    half = dyadic.cylinder([0])
    w = DadWitness(colors=[half], generator_set=(0,), finite_sets=[frozenset({0})])
    report = verify_dad_witness(dyadic, w)
    assert not report.accepted and report.code == "CoverGap"


def test_verify_finite_set_mismatch(dyadic):
    w = construct_minimal_z_witness(dyadic, 1)
    w.finite_sets[0] = frozenset({0})
    report = verify_dad_witness(dyadic, w)
    assert not report.accepted and report.code == "FiniteSetMismatch"


def test_monotone_in_color(dyadic):
    E = (-1, 0, 1)
    small = dyadic.clopen(4, range(4))
    big = dyadic.clopen(4, range(7))
    f_small, = color_element_sets(dyadic, [small], E)
    f_big, = color_element_sets(dyadic, [big], E)
    assert f_small <= f_big


def test_fibonacci_witness():
    fib = SubstitutionSubshift(["a", "b"], {"a": "ab", "b": "a"}, depth_limit=64)
    w = construct_minimal_z_witness(fib, 1, search_bound=200)
    assert verify_dad_witness(fib, w).accepted
    assert all(abs(n) <= 3 for n in w.finite_sets[0])
    assert all(abs(n) <= w.meta["M"] + 1 for n in w.finite_sets[1])


def test_fibonacci_bfs_vs_long_word_oracle():
    """Independent check of the subshift BFS: positions inside a long
    fixed-point prefix stand in for points (position p realizes the point
    x with x[i] = w[p+i]), and the induced reachability on positions must
    find exactly the same element sets.  Completeness relies on the linear
    recurrence of the word: every needed configuration occurs well inside
    a long enough prefix."""
    rules = {"a": "ab", "b": "a"}
    fib = SubstitutionSubshift(["a", "b"], rules, depth_limit=64)
    w = construct_minimal_z_witness(fib, 1, search_bound=200)

    word = "a"
    while len(word) < 6000:
        word = "".join(rules[c] for c in word)
    pad = 200
    E = sorted({e for x in w.generator_set for e in (x, -x)} | {0})

    for color, want in zip(w.colors, w.finite_sets):
        left, words, wlen = color.left, color.words, color.wlen

        def in_color(p):
            seg = word[p + left : p + left + wlen]
            return len(seg) == wlen and seg in words

        starts = [p for p in range(pad, len(word) - pad) if in_color(p)]
        reached = set()
        seen = {(p, 0) for p in starts}
        frontier = list(seen)
        while frontier:
            p, disp = frontier.pop()
            reached.add(disp)
            for e in E:
                if e == 0:
                    continue
                q, nd = p + e, disp + e
                if not pad <= q < len(word) - pad:
                    continue
                if in_color(q) and (q, nd) not in seen:
                    seen.add((q, nd))
                    frontier.append((q, nd))
        assert frozenset(reached) == want


def test_not_minimal_guard():
    gm = ForbiddenWordSubshift(["0", "1"], ["11"], depth_limit=16)
    with pytest.raises(NotMinimal):
        construct_minimal_z_witness(gm, 1)


def test_witness_serialization_roundtrip(dyadic):
    w = construct_minimal_z_witness(dyadic, 1)
    back = witness_from_json(dyadic, w.to_json())
    assert back.colors == w.colors
    assert back.finite_sets == w.finite_sets
    assert sorted(back.generator_set) == sorted(w.generator_set)


def test_default_blowup_bound():
    assert default_blowup_bound((-1, 0, 1), None, 1) == 10**6
    assert default_blowup_bound((1,), 1, 0) == 3 ** 1
    assert default_blowup_bound((-2, -1, 0, 1, 2), 16, 1) == 10**6
