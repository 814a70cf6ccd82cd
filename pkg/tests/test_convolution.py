"""Convolution algebra, reduced norms, cut-downs, and block structure."""

import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dadim.convolution import (
    ConvElement,
    adjoint,
    block_decompose,
    commutator_report,
    convolve,
    cutdown,
    decompose_via_pou,
    reduced_norm,
    regular_representation,
    spectral_norm,
)
from dadim.errors import GroupoidMismatch, NotFree, SupportLeak
from dadim.groupoid import (
    block_union_pair_groupoid,
    cyclic_rotation_groupoid,
    pair_groupoid,
    transformation_groupoid,
    unit_space_groupoid,
)
from dadim.pou import pou_from_group_action

F = Fraction


def cmul_exact(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def exact_matmul(A, B):
    n = len(A)
    out = [[(F(0), F(0)) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for k in range(n):
            if A[i][k] == (0, 0):
                continue
            for j in range(n):
                p = cmul_exact(A[i][k], B[k][j])
                out[i][j] = (out[i][j][0] + p[0], out[i][j][1] + p[1])
    return out


def frac_elem(G, entries):
    return ConvElement(G, {a: (F(re), F(im)) for a, (re, im) in entries.items()})


def test_convolve_examples():
    P3 = pair_groupoid([1, 2, 3])
    assert convolve(
        ConvElement.delta(P3, (1, 2)), ConvElement.delta(P3, (2, 3))
    ).coeffs == {(1, 3): (1, 0)}
    # right multiplication by a unit indicator cuts the source support
    f = ConvElement(P3, {(1, 2): 1, (1, 3): 1})
    du = ConvElement.delta(P3, (2, 2))
    assert convolve(f, du).coeffs == {(1, 2): (1, 0)}


def test_full_pair_groupoid_is_matrix_multiplication():
    """All 81 products of arrow deltas on 3 points match e_{r,s} algebra."""
    P3 = pair_groupoid(range(3))
    for a in P3.arrows:
        for b in P3.arrows:
            prod = convolve(ConvElement.delta(P3, a), ConvElement.delta(P3, b))
            if a[1] == b[0]:
                assert prod.coeffs == {(a[0], b[1]): (1, 0)}
            else:
                assert prod.coeffs == {}


def test_groupoid_mismatch():
    P2 = pair_groupoid([0, 1])
    P2b = pair_groupoid([0, 1])
    with pytest.raises(GroupoidMismatch):
        convolve(ConvElement.delta(P2, (0, 1)), ConvElement.delta(P2b, (0, 1)))


@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_star_algebra_axioms_exact(data):
    G = pair_groupoid(range(3))
    arrows = list(G.arrows)

    def rand_elem():
        support = data.draw(st.lists(st.sampled_from(arrows), max_size=4))
        return frac_elem(G, {
            a: (
                data.draw(st.fractions(min_value=-2, max_value=2, max_denominator=6)),
                data.draw(st.fractions(min_value=-2, max_value=2, max_denominator=6)),
            )
            for a in support
        })

    f, g, h = rand_elem(), rand_elem(), rand_elem()
    assert convolve(convolve(f, g), h).coeffs == convolve(f, convolve(g, h)).coeffs
    assert adjoint(convolve(f, g)).coeffs == convolve(adjoint(g), adjoint(f)).coeffs
    assert adjoint(adjoint(f)).coeffs == f.coeffs


def test_regular_representation_multiplicative_exact():
    G = cyclic_rotation_groupoid(6)
    f1 = frac_elem(G, {(1, 0): (F(1, 2), F(1, 3)), (2, 3): (F(2, 7), 0), (0, 1): (1, 0)})
    f2 = frac_elem(G, {(5, 2): (F(1, 5), F(-1, 2)), (1, 1): (F(3, 4), 0)})
    x = 0
    lhs = regular_representation(convolve(f1, f2), x).matrix
    A = regular_representation(f1, x).matrix
    B = regular_representation(f2, x).matrix
    lhs_norm = [[(F(a), F(b)) for a, b in row] for row in lhs]
    assert lhs_norm == exact_matmul(
        [[(F(a), F(b)) for a, b in row] for row in A],
        [[(F(a), F(b)) for a, b in row] for row in B],
    )
    # *-compatibility: the matrix of f* is the conjugate transpose
    Astar = regular_representation(adjoint(f1), x).matrix
    n = len(A)
    for i in range(n):
        for j in range(n):
            assert Astar[i][j] == (A[j][i][0], -A[j][i][1])


def test_reduced_norm_examples():
    P3 = pair_groupoid(range(3))
    assert abs(reduced_norm(ConvElement.delta(P3, (0, 0))) - 1) < 1e-12
    assert abs(reduced_norm(ConvElement.delta(P3, (0, 1))) - 1) < 1e-12
    for n in (2, 5, 9):
        Pn = pair_groupoid(range(n))
        allones = ConvElement(Pn, {a: 1 for a in Pn.arrows})
        assert abs(reduced_norm(allones) - n) < 1e-9 * n


def test_reduced_norm_vs_svd_oracle():
    rng = np.random.default_rng(42)
    for n in (3, 7, 12, 16):
        Pn = pair_groupoid(range(n))
        for _ in range(5):
            coeffs = {
                a: complex(rng.standard_normal(), rng.standard_normal())
                for a in Pn.arrows
                if rng.random() < 0.4
            }
            if not coeffs:
                continue
            f = ConvElement(Pn, coeffs)
            A = np.zeros((n, n), dtype=complex)
            for (x, y), c in f.coeffs.items():
                A[x, y] = complex(float(c[0]), float(c[1]))
            want = float(np.linalg.svd(A, compute_uv=False)[0])
            got = reduced_norm(f)
            assert abs(got - want) <= 1e-9 * max(1.0, want)


def test_spectral_norm_corner_cases():
    assert spectral_norm(np.zeros((3, 3), dtype=complex)) == 0.0
    assert abs(spectral_norm(np.eye(4, dtype=complex)) - 1.0) < 1e-12
    # repeated eigenvalue (no spectral gap)
    assert abs(spectral_norm(2.0 * np.eye(8, dtype=complex)) - 2.0) < 1e-9


def test_cstar_identity_random():
    rng = np.random.default_rng(7)
    P6 = pair_groupoid(range(6))
    for _ in range(30):
        coeffs = {
            a: complex(rng.standard_normal(), rng.standard_normal())
            for a in P6.arrows
            if rng.random() < 0.35
        }
        if not coeffs:
            continue
        f = ConvElement(P6, coeffs)
        n1 = reduced_norm(convolve(adjoint(f), f))
        n2 = reduced_norm(f)
        assert abs(n1 - n2 * n2) <= 1e-8 * max(1.0, n2 * n2)


def test_cutdown_and_commutator_examples():
    P3 = pair_groupoid(range(3))
    f = ConvElement(P3, {(0, 1): 1, (1, 2): (0, 1)})
    ones = {u: 1 for u in range(3)}
    assert cutdown(f, ones).coeffs == f.coeffs
    rep = commutator_report(f, ones)
    assert rep["commutator_norm"] == 0.0

    e01 = ConvElement.delta(P3, (0, 1))
    ind = {0: 1.0, 1: 0.0, 2: 0.0}
    rep2 = commutator_report(e01, ind)
    assert abs(rep2["commutator_norm"] - 1.0) < 1e-12
    assert rep2["oscillation"] == 1.0
    assert rep2["bisection_count"] == 1


def test_bisection_count_vs_bruteforce():
    """The edge-coloring count must equal the brute-force minimum number of
    r/s-injective pieces on small supports."""

    def brute_min_cover(G, arrows):
        arrows = list(arrows)
        for k in range(1, len(arrows) + 1):
            for assign in itertools.product(range(k), repeat=len(arrows)):
                groups = {}
                for a, c in zip(arrows, assign):
                    groups.setdefault(c, []).append(a)
                ok = True
                for grp in groups.values():
                    ss = [G.source(a) for a in grp]
                    rr = [G.range(a) for a in grp]
                    if len(set(ss)) != len(ss) or len(set(rr)) != len(rr):
                        ok = False
                        break
                if ok:
                    return k
        return len(arrows)

    rng = random.Random(9)
    P4 = pair_groupoid(range(4))
    for _ in range(12):
        support = rng.sample(list(P4.arrows), rng.randint(1, 6))
        f = ConvElement(P4, {a: 1 for a in support})
        rep = commutator_report(f, {u: 0.5 for u in range(4)})
        assert rep["bisection_exact"]
        assert rep["bisection_count"] == brute_min_cover(P4, support)


def test_commutator_bisection_bound_random():
    """||[f, phi]|| <= M * osc * ||f|| on random data."""
    rng = np.random.default_rng(17)
    G = cyclic_rotation_groupoid(8)
    for _ in range(15):
        coeffs = {
            a: complex(rng.standard_normal(), rng.standard_normal())
            for a in G.arrows
            if rng.random() < 0.2
        }
        if not coeffs:
            continue
        f = ConvElement(G, coeffs)
        phi = {u: float(rng.random()) for u in range(8)}
        rep = commutator_report(f, phi)
        bound = rep["bisection_count"] * rep["oscillation"] * reduced_norm(f)
        assert rep["commutator_norm"] <= bound + 1e-9


def test_block_decompose_examples():
    B = block_union_pair_groupoid([[0], [1, 2], [3, 4, 5]])
    bd = block_decompose(B)
    assert sorted(bd.sizes()) == [1, 2, 3]
    assert bd.check_multiplicative() == 0.0

    U = unit_space_groupoid(range(4))
    assert sorted(block_decompose(U).sizes()) == [1, 1, 1, 1]

    iso = transformation_groupoid(
        {"elements": [0, 1], "mult": lambda a, b: (a + b) % 2,
         "inv": lambda a: a, "unit": 0, "act": lambda g, x: x},
        ["p"],
    )
    with pytest.raises(NotFree):
        block_decompose(iso)


def test_block_norm_matches_reduced_norm():
    rng = np.random.default_rng(23)
    B = block_union_pair_groupoid([[0, 1], [2, 3, 4], [5]])
    bd = block_decompose(B)
    for _ in range(10):
        coeffs = {
            a: complex(rng.standard_normal(), rng.standard_normal())
            for a in B.arrows
            if rng.random() < 0.5
        }
        if not coeffs:
            continue
        f = ConvElement(B, coeffs)
        assert abs(bd.max_block_norm(f) - reduced_norm(f)) <= 1e-9 * max(
            1.0, reduced_norm(f)
        )


def z12_pou(N):
    arcs = [frozenset(range(0, 7)), frozenset(list(range(6, 12)) + [0])]
    return pou_from_group_action(12, range(12), [-1, 0, 1], arcs, N, None)


def test_decompose_single_color_is_exact():
    G, K, towers, pou = pou_from_group_action(
        6, range(6), [-1, 0, 1], [frozenset(range(6))], 4, None
    )
    f = ConvElement(G, {a: 1 for a in K})
    rep = decompose_via_pou(f, pou)
    assert rep["accepted"] and rep["defect"] <= 1e-12
    assert rep["summands"] == 1


@pytest.mark.parametrize("N", [4, 16])
def test_decompose_z12(N):
    G, K, towers, pou = z12_pou(N)
    f = ConvElement(G, {a: 1 for a in K})
    rep = decompose_via_pou(f, pou)
    assert rep["accepted"]
    assert rep["defect"] <= rep["triangle_bound"] + 1e-9
    for pc in rep["per_color"]:
        assert pc["commutator_norm"] <= pc["commutator_bound"] + 1e-9
        assert pc["cutdown_norm"] <= reduced_norm(f) + 1e-9
        assert abs(pc["cutdown_norm"] - pc["cutdown_block_norm"]) <= 1e-9


def test_decompose_support_leak():
    G, K, towers, pou = z12_pou(4)
    # shrink a declared color after the fact: the cut-down escapes it
    pou.towers[0].levels[-1] = frozenset({0, 1})
    f = ConvElement(G, {a: 1 for a in K})
    with pytest.raises(SupportLeak):
        decompose_via_pou(f, pou)


def test_decompose_triangle_inequality_random_elements():
    rng = np.random.default_rng(31)
    G, K, towers, pou = z12_pou(8)
    arrows = sorted(K, key=repr)
    for _ in range(5):
        coeffs = {
            a: complex(rng.standard_normal(), rng.standard_normal())
            for a in arrows
            if rng.random() < 0.5
        }
        if not coeffs:
            continue
        f = ConvElement(G, coeffs)
        rep = decompose_via_pou(f, pou)
        assert rep["defect"] <= rep["triangle_bound"] + 1e-7 * max(1.0, rep["norm_f"])
