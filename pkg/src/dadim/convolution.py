"""Convolution *-algebra of a finite groupoid and the cut-down estimates.

Elements are finitely supported coefficient maps on arrows; the product is

    (f1 f2)(g) = sum over g1 g2 = g of f1(g1) f2(g2),

the adjoint is f*(g) = conj(f(g^-1)), and the reduced norm is the maximum
over one unit per orbit of the spectral norm of the regular-representation
matrix on the source fiber.  Coefficients stay exact (Fraction pairs) under
the algebra operations; norms are computed in floats via scaled repeated
squaring of f*f with a Gershgorin cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import GroupoidMismatch, InvalidInput, NotFree, SupportLeak

__all__ = [
    "ConvElement",
    "RegularRep",
    "BlockDecomposition",
    "convolve",
    "adjoint",
    "reduced_norm",
    "regular_representation",
    "cutdown",
    "commutator_report",
    "decompose_via_pou",
    "block_decompose",
    "spectral_norm",
]

NORM_TOL = 1e-9


def _cnum(z):
    """Normalize a scalar to an exact-friendly (re, im) pair."""
    if isinstance(z, tuple):
        return z
    if isinstance(z, complex):
        return (z.real, z.imag)
    return (z, 0)


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cconj(a):
    return (a[0], -a[1])


def _is_zero(a) -> bool:
    return a[0] == 0 and a[1] == 0


def _to_complex(a) -> complex:
    return complex(float(a[0]), float(a[1]))


@dataclass
class ConvElement:
    """Finitely supported function on the arrows of a finite groupoid."""

    G: object
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {
            g: _cnum(z) for g, z in self.coeffs.items() if not _is_zero(_cnum(z))
        }

    @classmethod
    def delta(cls, G, arrow, value=1) -> "ConvElement":
        return cls(G, {arrow: _cnum(value)})

    @classmethod
    def from_unit_function(cls, G, phi: dict) -> "ConvElement":
        """Multiplication operator of a function on units."""
        return cls(G, {G.unit_arrow(u): _cnum(v) for u, v in phi.items()})

    def support(self):
        return frozenset(self.coeffs)

    def value(self, g):
        return self.coeffs.get(g, (0, 0))

    def scale(self, z) -> "ConvElement":
        z = _cnum(z)
        return ConvElement(self.G, {g: _cmul(z, c) for g, c in self.coeffs.items()})

    def add(self, other: "ConvElement") -> "ConvElement":
        if other.G is not self.G:
            raise GroupoidMismatch("elements live on different groupoids")
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            out[g] = _cadd(out.get(g, (0, 0)), c)
        return ConvElement(self.G, out)

    def sub(self, other: "ConvElement") -> "ConvElement":
        return self.add(other.scale(-1))

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def __mul__(self, other):
        if isinstance(other, ConvElement):
            return convolve(self, other)
        return self.scale(other)

    def pointwise(self, weight) -> "ConvElement":
        """Pointwise product with a scalar function on arrows."""
        return ConvElement(
            self.G, {g: _cmul(_cnum(weight(g)), c) for g, c in self.coeffs.items()}
        )

    def is_exact(self) -> bool:
        return all(
            isinstance(c[0], (int, Fraction)) and isinstance(c[1], (int, Fraction))
            for c in self.coeffs.values()
        )

    def to_json(self, arrow_key=repr) -> list:
        return sorted(
            [arrow_key(g), str(c[0]), str(c[1])] for g, c in self.coeffs.items()
        )


def convolve(f1: ConvElement, f2: ConvElement) -> ConvElement:
    """Groupoid convolution; exact whenever the coefficients are."""
    if f1.G is not f2.G:
        raise GroupoidMismatch("elements live on different groupoids")
    G = f1.G
    by_range: dict = {}
    for h, c in f2.coeffs.items():
        by_range.setdefault(G.range(h), []).append((h, c))
    out: dict = {}
    for g, cg in f1.coeffs.items():
        for h, ch in by_range.get(G.source(g), ()):
            gh = G.compose(g, h)
            if gh is None:
                continue
            out[gh] = _cadd(out.get(gh, (0, 0)), _cmul(cg, ch))
    return ConvElement(G, out)


def adjoint(f: ConvElement) -> ConvElement:
    return ConvElement(
        f.G, {f.G.inverse(g): _cconj(c) for g, c in f.coeffs.items()}
    )


# ---------------------------------------------------------------------------
# regular representations and the reduced norm


@dataclass
class RegularRep:
    """pi_x(f) on the source fiber of x: matrix[i][j] = f(g_i g_j^-1)."""

    x: object
    basis: tuple
    matrix: list  # rows of (re, im) pairs; exact when f is

    def to_numpy(self) -> np.ndarray:
        n = len(self.basis)
        out = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                out[i, j] = _to_complex(self.matrix[i][j])
        return out


def _source_fiber(G, x):
    return tuple(sorted((g for g in G.arrows if G.source(g) == x), key=repr))


def regular_representation(f: ConvElement, x) -> RegularRep:
    G = f.G
    basis = _source_fiber(G, x)
    mat = []
    for gi in basis:
        row = []
        for gj in basis:
            arrow = G.compose(gi, G.inverse(gj))
            row.append(f.value(arrow) if arrow is not None else (0, 0))
        mat.append(row)
    return RegularRep(x, basis, mat)


def spectral_norm(A: np.ndarray, iters: int = 48) -> float:
    """Largest singular value via scaled repeated squaring of A^H A.

    After m squarings the Frobenius norm of the scaled power pins the top
    eigenvalue within a factor n^(1/2^m); the Gershgorin row-sum bound of
    A^H A caps the result.
    """
    if A.size == 0:
        return 0.0
    B = A.conj().T @ A
    gershgorin = float(np.abs(B).sum(axis=1).max()) if B.size else 0.0
    acc = 0.0
    for i in range(iters):
        s = float(np.linalg.norm(B, "fro"))
        if s == 0.0:
            return 0.0
        acc += math.log(s) / (2.0**i)
        B = B / s
        B = B @ B
    s = float(np.linalg.norm(B, "fro"))
    if s == 0.0:
        return 0.0
    acc += math.log(s) / (2.0**iters)
    lam = math.exp(acc)
    lam = min(lam, gershgorin) if gershgorin else lam
    return math.sqrt(lam)


def _unit_orbits(G):
    parent: dict = {}

    def find(u):
        r = u
        while parent.get(r, r) != r:
            r = parent[r]
        while parent.get(u, u) != u:
            parent[u], u = r, parent[u]
        return r

    for a in G.arrows:
        ru, rv = find(G.source(a)), find(G.range(a))
        if ru != rv:
            parent[ru] = rv
    orbits: dict = {}
    for u in G.units:
        orbits.setdefault(find(u), []).append(u)
    return list(orbits.values())


def reduced_norm(f: ConvElement) -> float:
    """sup over units of ||pi_x(f)||; one representative per orbit suffices
    because the regular representations along an orbit are unitarily
    conjugate, and orbits missing the support contribute zero."""
    touched = set()
    for g in f.coeffs:
        touched.add(f.G.source(g))
        touched.add(f.G.range(g))
    if not touched:
        return 0.0
    best = 0.0
    for orbit in _unit_orbits(f.G):
        if not touched.intersection(orbit):
            continue
        x = min(orbit, key=repr)
        rep = regular_representation(f, x)
        best = max(best, spectral_norm(rep.to_numpy()))
    return best


# ---------------------------------------------------------------------------
# cut-downs and commutators


def _phi_value(phi, u):
    if callable(phi):
        return phi(u)
    return phi.get(u, 0)


def cutdown(f: ConvElement, phi) -> ConvElement:
    """phi f phi for a real function phi on units: coefficients
    phi(r(g)) f(g) phi(s(g))."""
    G = f.G
    return f.pointwise(lambda g: _phi_value(phi, G.range(g)) * _phi_value(phi, G.source(g)))


def _min_bisection_cover(G, arrows):
    """Fewest r- and s-injective pieces covering the arrow set.

    Arrows form a bipartite multigraph between source units and range
    units; a bisection is a matching, so the cover number is the chromatic
    index, which for bipartite graphs equals the maximum fiber degree.  Up
    to 64 arrows the coloring is constructed explicitly (alternating-path
    recoloring); above, a greedy coloring gives an upper bound, flagged.
    """
    arrows = sorted(arrows, key=repr)
    if not arrows:
        return 0, [], True
    deg: dict = {}
    for a in arrows:
        deg[("s", G.source(a))] = deg.get(("s", G.source(a)), 0) + 1
        deg[("r", G.range(a))] = deg.get(("r", G.range(a)), 0) + 1
    delta = max(deg.values())

    color_at: dict = {}  # (node, color) -> arrow
    assigned: dict = {}

    def free_color(node, limit):
        for c in range(limit):
            if (node, c) not in color_at:
                return c
        return None

    exact = len(arrows) <= 64
    if exact:
        def endpoints(edge):
            return ("s", G.source(edge)), ("r", G.range(edge))

        for a in arrows:
            u = ("s", G.source(a))
            v = ("r", G.range(a))
            ca = free_color(u, delta)
            cb = free_color(v, delta)
            if ca != cb:
                # walk the ca/cb alternating path from v, then flip it; the
                # path cannot reach u (arriving there would take a ca-edge,
                # which u misses, by bipartite parity), so afterwards both
                # endpoints miss ca
                path = []
                node, want = v, ca
                while (node, want) in color_at:
                    edge = color_at[(node, want)]
                    path.append((edge, want))
                    e1, e2 = endpoints(edge)
                    node = e2 if node == e1 else e1
                    want = cb if want == ca else ca
                for edge, c in path:
                    e1, e2 = endpoints(edge)
                    del color_at[(e1, c)]
                    del color_at[(e2, c)]
                for edge, c in path:
                    newc = cb if c == ca else ca
                    e1, e2 = endpoints(edge)
                    color_at[(e1, newc)] = edge
                    color_at[(e2, newc)] = edge
                    assigned[edge] = newc
            color_at[(u, ca)] = a
            color_at[(v, ca)] = a
            assigned[a] = ca
        count = delta
    else:
        for a in arrows:
            u = ("s", G.source(a))
            v = ("r", G.range(a))
            c = 0
            while (u, c) in color_at or (v, c) in color_at:
                c += 1
            color_at[(u, c)] = a
            color_at[(v, c)] = a
            assigned[a] = c
        count = max(assigned.values()) + 1

    pieces: list[set] = [set() for _ in range(count)]
    for a, c in assigned.items():
        pieces[c].add(a)
    # each piece must be a bisection
    for piece in pieces:
        srcs = [G.source(a) for a in piece]
        rngs = [G.range(a) for a in piece]
        if len(set(srcs)) != len(srcs) or len(set(rngs)) != len(rngs):
            raise InvalidInput("internal: bisection cover invalid")  # pragma: no cover
    return count, pieces, exact


def commutator_report(f: ConvElement, phi) -> dict:
    """[f, phi](g) = f(g) (phi(s(g)) - phi(r(g))), its norm, the oscillation
    of phi over supp f, and the bisection-cover constant of supp f."""
    G = f.G
    comm = f.pointwise(
        lambda g: _phi_value(phi, G.source(g)) - _phi_value(phi, G.range(g))
    )
    osc = 0.0
    for g in f.coeffs:
        osc = max(
            osc, abs(float(_phi_value(phi, G.source(g))) - float(_phi_value(phi, G.range(g))))
        )
    M, pieces, exact = _min_bisection_cover(G, f.support())
    return {
        "commutator": comm,
        "commutator_norm": reduced_norm(comm),
        "oscillation": osc,
        "bisection_count": M,
        "bisection_exact": exact,
        "phi_sup": max((abs(float(_phi_value(phi, u))) for u in G.units), default=0.0),
    }


# ---------------------------------------------------------------------------
# block decomposition of free finite groupoids


@dataclass
class BlockDecomposition:
    """Orbit classes of a free groupoid with matrix-unit coordinates."""

    G: object
    arrows: frozenset
    classes: list  # list of (base unit, tuple of units)
    arrow_pos: dict  # arrow -> (class index, row, col)

    def sizes(self) -> list[int]:
        return [len(units) for _, units in self.classes]

    def block_matrices(self, f: ConvElement) -> list[np.ndarray]:
        mats = [np.zeros((m, m), dtype=complex) for m in self.sizes()]
        for g, c in f.coeffs.items():
            if g not in self.arrow_pos:
                raise SupportLeak(f"element supported outside the decomposed groupoid at {g!r}")
            k, i, j = self.arrow_pos[g]
            mats[k][i, j] += _to_complex(c)
        return mats

    def max_block_norm(self, f: ConvElement) -> float:
        return max((spectral_norm(m) for m in self.block_matrices(f)), default=0.0)

    def check_multiplicative(self, samples: int = 400, seed: int = 5) -> float:
        """Matrix units must compose like the arrows do; exact, so the
        returned deviation is 0.0 unless the decomposition is broken."""
        import random

        rng = random.Random(seed)
        arrows = sorted(self.arrows, key=repr)
        worst = 0.0
        for _ in range(min(samples, 4 * len(arrows) * len(arrows) + 1)):
            a = rng.choice(arrows)
            b = rng.choice(arrows)
            ab = self.G.compose(a, b)
            ka, ia, ja = self.arrow_pos[a]
            kb, ib, jb = self.arrow_pos[b]
            if ab is None:
                composable = ka == kb and ja == ib
                if composable:
                    worst = max(worst, 1.0)
                continue
            kc, ic, jc = self.arrow_pos[ab]
            ok = ka == kb == kc and ja == ib and ic == ia and jc == jb
            if not ok:
                worst = max(worst, 1.0)
        return worst


def block_decompose(G, arrows=None) -> BlockDecomposition:
    """Split a free finite groupoid into full matrix blocks, one per orbit.

    For each orbit pick a base unit x; freeness makes the source fiber at x
    meet every unit of the orbit exactly once, so arrows coordinatize as
    matrix units e_{r, s}.
    """
    arrow_set = frozenset(G.arrows if arrows is None else arrows)
    for g in arrow_set:
        if G.source(g) == G.range(g) and g != G.unit_arrow(G.source(g)):
            raise NotFree(f"isotropy arrow {g!r} at unit {G.source(g)!r}")

    parent: dict = {}

    def find(u):
        r = u
        while parent.get(r, r) != r:
            r = parent[r]
        while parent.get(u, u) != u:
            parent[u], u = r, parent[u]
        return r

    units = set()
    for g in arrow_set:
        units.add(G.source(g))
        units.add(G.range(g))
        ru, rv = find(G.source(g)), find(G.range(g))
        if ru != rv:
            parent[ru] = rv
    orbits: dict = {}
    for u in sorted(units, key=repr):
        orbits.setdefault(find(u), []).append(u)

    classes = []
    arrow_pos: dict = {}
    by_source: dict = {}
    for g in arrow_set:
        by_source.setdefault(G.source(g), []).append(g)
    for root in sorted(orbits, key=repr):
        members = tuple(sorted(orbits[root], key=repr))
        base = members[0]
        # connecting arrows base -> u, found by search over the orbit
        connect = {base: G.unit_arrow(base)}
        frontier = [base]
        while frontier:
            u = frontier.pop()
            for g in by_source.get(u, ()):
                v = G.range(g)
                if v not in connect:
                    connect[v] = G.compose(g, connect[u])
                    frontier.append(v)
            # arrows pointing into u
            for g in arrow_set:
                if G.range(g) == u and G.source(g) not in connect:
                    v = G.source(g)
                    connect[v] = G.compose(G.inverse(g), connect[u])
                    frontier.append(v)
        if set(connect) != set(members):
            raise NotFree("orbit not reachable; arrow set is not a subgroupoid")
        index = {u: i for i, u in enumerate(members)}
        k = len(classes)
        classes.append((base, members))
        for u in members:
            for g in by_source.get(u, ()):
                arrow_pos[g] = (k, index[G.range(g)], index[G.source(g)])
    if set(arrow_pos) != set(arrow_set):
        raise NotFree("some arrows missed the coordinates; arrow set is not a subgroupoid")
    return BlockDecomposition(G, arrow_set, classes, arrow_pos)


# ---------------------------------------------------------------------------
# the cut-down decomposition


def decompose_via_pou(f: ConvElement, pou) -> dict:
    """Cut f down along the partition of unity and measure the defect.

    sum_i phi_i f phi_i differs from f by sum_i phi_i [f, phi_i], so the
    defect norm is bounded by sum_i ||phi_i||_inf ||[f, phi_i]||, each
    commutator by M_i * osc_i * ||f||.  Every cut-down must stay inside its
    color's small subgroupoid (SupportLeak otherwise), where it is
    expressed in matrix blocks.
    """
    G = pou.G
    if f.G is not G:
        raise GroupoidMismatch("element and partition live on different groupoids")
    if not f.support() <= frozenset(pou.K):
        raise InvalidInput("element must be supported in K")

    subgroupoids = pou.small_subgroupoids()
    norm_f = reduced_norm(f)
    phis = [
        {u: pou.phi_float(i, u) for u in G.units} for i in range(pou.d + 1)
    ]

    cutdowns = []
    total = ConvElement(G, {})
    for i, phi in enumerate(phis):
        c = cutdown(f, phi)
        leak = c.support() - subgroupoids[i]
        if leak:
            raise SupportLeak(
                f"cut-down {i} escapes its small subgroupoid at {sorted(map(repr, leak))[:3]}"
            )
        cutdowns.append(c)
        total = total + c

    defect = reduced_norm(total - f)
    per_color = []
    bound = 0.0
    for i, phi in enumerate(phis):
        rep = commutator_report(f, phi)
        blocks = block_decompose(G, subgroupoids[i])
        cut_norm = reduced_norm(cutdowns[i])
        block_norm = blocks.max_block_norm(cutdowns[i])
        per_color.append(
            {
                "phi_sup": rep["phi_sup"],
                "commutator_norm": rep["commutator_norm"],
                "oscillation": rep["oscillation"],
                "bisection_count": rep["bisection_count"],
                "bisection_exact": rep["bisection_exact"],
                "commutator_bound": rep["bisection_count"] * rep["oscillation"] * norm_f,
                "block_sizes": blocks.sizes(),
                "cutdown_norm": cut_norm,
                "cutdown_block_norm": block_norm,
            }
        )
        bound += rep["phi_sup"] * rep["commutator_norm"]

    slack = 1e-7 * max(1.0, norm_f)
    ok = defect <= bound + slack and all(
        pc["commutator_norm"] <= pc["commutator_bound"] + slack for pc in per_color
    )
    return {
        "accepted": bool(ok),
        "norm_f": norm_f,
        "defect": defect,
        "triangle_bound": bound,
        "per_color": per_color,
        "summands": pou.d + 1,
    }
