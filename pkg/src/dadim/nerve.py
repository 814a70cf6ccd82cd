"""Probability simplices with the l1 metric, in exact rational arithmetic.

Points are finitely supported probability vectors; a complex is given by
its maximal faces.  The skeleton-neighborhood cover splits each complex
into levels

    V_i = N_{(1/3)10^-i}(C_i) minus the closed (5/2)10^-i-neighborhood
          of C_{i-1},

whose per-simplex pieces are pairwise (1/3)10^-i-separated; membership is
decided by exact inequalities because the distance from a point to the
simplex on a vertex set D has the closed form 2*(1 - mass on D).

The module also carries the two conversions between almost-equivariant
maps into complexes and equivariant covers of X x Gamma (finite model),
and the translation of an almost-equivariant map into a groupoid witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ConditionViolated,
    DepthInsufficient,
    EmptySkeleton,
    EquivarianceTooWeak,
    InvalidInput,
    MissingSample,
    NoFiniteS,
    NotInComplex,
)
from .groupoid import (
    GroupoidDadWitness,
    generate_subgroupoid,
    transformation_groupoid,
    verify_groupoid_dad,
)
from .reporting import VerificationReport

__all__ = [
    "SimplicialPoint",
    "SimplicialComplex",
    "FiniteGroup",
    "cyclic_group",
    "l1_distance",
    "distance_to_skeleton",
    "nice_cover_membership",
    "nice_cover_assign",
    "check_equivariance",
    "check_simplicial_action",
    "perturb_to_finite_support",
    "EquivariantCover",
    "cover_from_map",
    "map_from_cover",
    "dad_witness_from_blr",
    "inner_radius",
    "outer_radius",
]

Rat = Fraction


def inner_radius(i: int) -> Rat:
    """(1/3) 10^-i, the open-neighborhood radius of level i."""
    return Fraction(1, 3 * 10**i)


def outer_radius(i: int) -> Rat:
    """(5/2) 10^-i, the removed closed-neighborhood radius of level i."""
    return Fraction(5, 2 * 10**i)


def pullback_radius(d: int) -> Rat:
    """(1/6) 10^-d, the inflation used when pulling pieces back."""
    return Fraction(1, 6 * 10**d)


# ---------------------------------------------------------------------------
# points and complexes


class SimplicialPoint:
    """Finitely supported probability vector with exact rational weights."""

    __slots__ = ("weights",)

    def __init__(self, weights: dict):
        w = {}
        total = Fraction(0)
        for v, t in weights.items():
            t = Fraction(t)
            if t < 0:
                raise InvalidInput(f"negative weight at vertex {v!r}")
            if t > 0:
                w[v] = t
                total += t
        if total != 1:
            raise InvalidInput(f"weights sum to {total}, not 1")
        self.weights = w

    @classmethod
    def vertex(cls, v) -> "SimplicialPoint":
        return cls({v: Fraction(1)})

    def support(self) -> frozenset:
        return frozenset(self.weights)

    def mass_on(self, vertices) -> Rat:
        return sum((t for v, t in self.weights.items() if v in vertices), Fraction(0))

    def push(self, vertex_map) -> "SimplicialPoint":
        out: dict = {}
        for v, t in self.weights.items():
            u = vertex_map(v)
            out[u] = out.get(u, Fraction(0)) + t
        return SimplicialPoint(out)

    def __eq__(self, other):
        return isinstance(other, SimplicialPoint) and self.weights == other.weights

    def __hash__(self):
        return hash(frozenset(self.weights.items()))

    def __repr__(self):
        inner = ", ".join(f"{v!r}: {t}" for v, t in sorted(self.weights.items(), key=lambda kv: repr(kv[0])))
        return "SimplicialPoint({" + inner + "})"

    def to_json(self) -> dict:
        return {repr(v): str(t) for v, t in sorted(self.weights.items(), key=lambda kv: repr(kv[0]))}


def l1_distance(mu: SimplicialPoint, nu: SimplicialPoint) -> Rat:
    """Exact l1 distance sum_v |mu(v) - nu(v)|."""
    total = Fraction(0)
    for v in mu.support() | nu.support():
        total += abs(mu.weights.get(v, Fraction(0)) - nu.weights.get(v, Fraction(0)))
    return total


class SimplicialComplex:
    """Vertex set plus maximal faces; faces are all their subsets."""

    def __init__(self, vertices, maximal_faces):
        self.vertices = frozenset(vertices)
        faces = list({frozenset(f) for f in maximal_faces})
        for f in faces:
            if not f <= self.vertices:
                raise InvalidInput("face uses unknown vertices")
        # keep only inclusion-maximal faces; lone vertices count as 0-faces
        covered = set().union(*faces) if faces else set()
        for v in self.vertices - covered:
            faces.append(frozenset({v}))
        self.maximal_faces = tuple(
            f for f in faces if not any(f < g for g in faces)
        )
        if not self.maximal_faces:
            raise InvalidInput("complex needs at least one vertex")
        self.dimension = max(len(f) for f in self.maximal_faces) - 1

    def is_face(self, subset) -> bool:
        s = frozenset(subset)
        return bool(s) and any(s <= f for f in self.maximal_faces)

    def faces_of_dim_at_most(self, i: int):
        seen = set()
        for f in self.maximal_faces:
            for k in range(1, min(len(f), i + 1) + 1):
                for sub in itertools.combinations(sorted(f, key=repr), k):
                    fs = frozenset(sub)
                    if fs not in seen:
                        seen.add(fs)
                        yield fs

    def simplices_of_dim(self, i: int):
        for f in self.faces_of_dim_at_most(i):
            if len(f) == i + 1:
                yield f

    def contains(self, mu: SimplicialPoint) -> bool:
        return self.is_face(mu.support())

    def to_json(self) -> dict:
        return {
            "vertices": sorted(map(repr, self.vertices)),
            "maximal_faces": sorted(sorted(map(repr, f)) for f in self.maximal_faces),
        }


def distance_to_skeleton(mu: SimplicialPoint, C: SimplicialComplex, i: int) -> Rat:
    """Exact l1 distance from mu to the i-skeleton: 2*(1 - max face mass).

    The distance from mu to the full simplex on a face D is 2*(1 - mass(D))
    because the deficit 1 - mass(D) must leave the off-D support and arrive
    inside D.  Minimizing over faces of dimension <= i maximizes the mass.
    """
    if not C.contains(mu):
        raise NotInComplex(f"support {sorted(map(repr, mu.support()))} is not a face")
    if i < 0:
        raise EmptySkeleton("the (-1)-skeleton is empty")
    best = Fraction(0)
    for f in C.maximal_faces:
        if len(f) <= i + 1:
            mass = mu.mass_on(f)
        else:
            top = sorted((mu.weights.get(v, Fraction(0)) for v in f), reverse=True)
            mass = sum(top[: i + 1], Fraction(0))
        if mass > best:
            best = mass
    return 2 * (1 - best)


def distance_to_simplex(mu: SimplicialPoint, delta) -> Rat:
    """Exact l1 distance from mu to the closed simplex on vertex set delta."""
    return 2 * (1 - mu.mass_on(frozenset(delta)))


# ---------------------------------------------------------------------------
# skeleton-neighborhood ("nice") cover


def nice_cover_membership(
    mu: SimplicialPoint, C: SimplicialComplex, i: int, delta
) -> bool:
    """mu in V_{i,delta}: close to the simplex, far from the lower skeleton.

    Closed neighborhoods are removed with a strict > test, so membership is
    an exact rational predicate.
    """
    delta = frozenset(delta)
    if not C.contains(mu):
        raise NotInComplex("point is outside the complex")
    if len(delta) != i + 1 or not C.is_face(delta):
        raise InvalidInput(f"delta must be an {i}-simplex of the complex")
    if distance_to_simplex(mu, delta) >= inner_radius(i):
        return False
    if i == 0:
        return True
    return distance_to_skeleton(mu, C, i - 1) > outer_radius(i)


def _level_membership(mu: SimplicialPoint, C: SimplicialComplex, i: int) -> bool:
    if distance_to_skeleton(mu, C, i) >= inner_radius(i):
        return False
    if i == 0:
        return True
    return distance_to_skeleton(mu, C, i - 1) > outer_radius(i)


def nice_cover_assign(mu: SimplicialPoint, C: SimplicialComplex):
    """Least level i with mu in V_i, and the unique i-simplex piece."""
    if not C.contains(mu):
        raise NotInComplex("point is outside the complex")
    for i in range(C.dimension + 1):
        if _level_membership(mu, C, i):
            pieces = [
                delta
                for delta in C.simplices_of_dim(i)
                if distance_to_simplex(mu, delta) < inner_radius(i)
            ]
            if len(pieces) != 1:
                raise InvalidInput(
                    f"level {i} piece is not unique ({len(pieces)} candidates); "
                    "separation violated"
                )
            return i, pieces[0]
    raise InvalidInput("point escaped the cover; levels are inconsistent")


# ---------------------------------------------------------------------------
# groups and equivariance


@dataclass(frozen=True)
class FiniteGroup:
    elements: tuple
    mult: "callable" = field(compare=False)
    inv: "callable" = field(compare=False)
    unit: object = None

    def symmetrized(self, E) -> tuple:
        out = {self.unit}
        for e in E:
            out.add(e)
            out.add(self.inv(e))
        return tuple(sorted(out, key=repr))


def cyclic_group(n: int) -> FiniteGroup:
    return FiniteGroup(
        elements=tuple(range(n)),
        mult=lambda a, b: (a + b) % n,
        inv=lambda a: (-a) % n,
        unit=0,
    )


def _act_point(act_V, g, mu: SimplicialPoint) -> SimplicialPoint:
    return mu.push(lambda v: act_V(g, v))


def check_simplicial_action(C: SimplicialComplex, group: FiniteGroup, act_V) -> None:
    """The vertex action must send faces to faces (hence act isometrically)."""
    for g in group.elements:
        for f in C.maximal_faces:
            image = frozenset(act_V(g, v) for v in f)
            if not C.is_face(image):
                raise InvalidInput(
                    f"action of {g!r} sends face {sorted(map(repr, f))} outside the complex"
                )


def check_equivariance(
    f: dict, act_X, act_V, E, eps: Rat
) -> VerificationReport:
    """Max l1 discrepancy d(f(g.x), g.f(x)) over samples and g in E."""
    eps = Fraction(eps)
    worst = Fraction(0)
    worst_at = None
    for g in E:
        for x, mu in f.items():
            gx = act_X(g, x)
            if gx not in f:
                raise MissingSample(f"sample {gx!r} = {g!r}.{x!r} missing from the table")
            d = l1_distance(f[gx], _act_point(act_V, g, mu))
            if d > worst:
                worst = d
                worst_at = (repr(g), repr(x))
    return VerificationReport(
        worst < eps,
        "ok" if worst < eps else "EquivarianceTooWeak",
        f"max discrepancy {worst} vs eps {eps}",
        {"max_discrepancy": str(worst), "eps": str(eps), "worst_at": worst_at},
    )


def perturb_to_finite_support(
    f: dict, act_X, act_V, E, eps: Rat, S=None
):
    """Push the map into the probability simplex over a finite vertex set S.

    The perturbation budget is delta = min(1, half the worst equivariance
    margin); any S whose tail mass stays below delta/2 works, and the
    renormalized map moves each value by exactly 2*(1 - T(x)) < delta, so
    (E, eps)-equivariance survives.  Returns (f', report).
    """
    eps = Fraction(eps)
    margins = []
    for g in E:
        worst = Fraction(0)
        for x, mu in f.items():
            gx = act_X(g, x)
            if gx not in f:
                raise MissingSample(f"sample {gx!r} missing from the table")
            worst = max(worst, l1_distance(f[gx], _act_point(act_V, g, mu)))
        margins.append(eps - worst)
    delta = min([Fraction(1)] + [Fraction(1, 2) * m for m in margins])
    if delta <= 0:
        raise NoFiniteS(f"map is not (E, eps)-equivariant; worst margin {min(margins)}")

    def tail(x, vertex_set) -> Rat:
        return sum(
            (t for v, t in f[x].weights.items() if v not in vertex_set), Fraction(0)
        )

    if S is None:
        # smallest prefix of vertices (by max weight, then repr) with all
        # tails under delta/2; deterministic
        usage: dict = {}
        for mu in f.values():
            for v, t in mu.weights.items():
                usage[v] = max(usage.get(v, Fraction(0)), t)
        order = sorted(usage, key=lambda v: (-usage[v], repr(v)))
        chosen: set = set()
        for v in order:
            if all(tail(x, chosen) < delta / 2 for x in f):
                break
            chosen.add(v)
        S = frozenset(chosen)
    else:
        S = frozenset(S)
    bad = [x for x in f if tail(x, S) >= delta / 2]
    if bad:
        raise NoFiniteS(
            f"tail mass >= delta/2 = {delta / 2} at {len(bad)} samples (first {bad[0]!r})"
        )

    out: dict = {}
    worst_move = Fraction(0)
    for x, mu in f.items():
        kept = {v: t for v, t in mu.weights.items() if v in S}
        T = sum(kept.values(), Fraction(0))
        out[x] = SimplicialPoint({v: t / T for v, t in kept.items()})
        move = l1_distance(mu, out[x])
        assert move == 2 * (1 - T)
        worst_move = max(worst_move, move)
    report = VerificationReport(
        True, "ok", "finite-support perturbation applied",
        {
            "delta": str(delta),
            "max_perturbation": str(worst_move),
            "support_size": len(S),
        },
    )
    assert worst_move < delta
    return out, report


# ---------------------------------------------------------------------------
# covers of X x Gamma


@dataclass
class EquivariantCover:
    """Open cover of X x Gamma (finite model) with the diagonal action
    g.(x, h) = (g.x, g h)."""

    group: FiniteGroup
    space: tuple
    act_X: "callable"
    sets: list[frozenset]
    labels: list = field(default_factory=list)

    def act_pair(self, g, pair):
        x, h = pair
        return (self.act_X(g, x), self.group.mult(g, h))

    def act_set(self, g, U: frozenset) -> frozenset:
        return frozenset(self.act_pair(g, p) for p in U)

    def all_pairs(self):
        return [(x, g) for x in self.space for g in self.group.elements]

    def multiplicity(self) -> int:
        return max(
            sum(1 for U in self.sets if p in U) for p in self.all_pairs()
        )

    def orbit_count(self) -> int:
        seen = set()
        orbits = 0
        for U in self.sets:
            if U in seen:
                continue
            orbits += 1
            for g in self.group.elements:
                seen.add(self.act_set(g, U))
        return orbits

    def check_conditions(self, E, family="finite") -> VerificationReport:
        """Exact verification of the five cover conditions."""
        pairs = self.all_pairs()
        covered = set().union(*self.sets) if self.sets else set()
        if not set(pairs) <= covered:
            raise ConditionViolated("E", "cover misses points of X x Gamma")
        set_index = set(self.sets)
        for U in self.sets:
            for g in self.group.elements:
                gU = self.act_set(g, U)
                if gU not in set_index:
                    raise ConditionViolated("A", "group image of a cover set is not in the cover")
                if gU != U and gU & U:
                    raise ConditionViolated("A", "gU neither equals nor misses U")
        for U in self.sets:
            stab = [g for g in self.group.elements if self.act_set(g, U) == U]
            # finite-subgroup family: closure under mult and inverse
            for a in stab:
                if self.group.inv(a) not in stab:
                    raise ConditionViolated("B", "stabilizer not closed under inverse")
                for b in stab:
                    if self.group.mult(a, b) not in stab:
                        raise ConditionViolated("B", "stabilizer not closed under product")
        mult = self.multiplicity()
        d = mult - 1
        sym_E = self.group.symmetrized(E)
        for g in self.group.elements:
            for x in self.space:
                target = {(x, self.group.mult(g, e)) for e in sym_E}
                if not any(target <= U for U in self.sets):
                    raise ConditionViolated(
                        "E", f"no cover set contains {{x}} x gE at x={x!r}, g={g!r}"
                    )
        return VerificationReport(
            True, "ok", "cover conditions (A)-(E) verified",
            {
                "multiplicity": mult,
                "dimension": d,
                "orbit_count": self.orbit_count(),
                "sets": len(self.sets),
            },
        )


def cover_from_map(
    f: dict,
    E,
    group: FiniteGroup,
    act_X,
    act_V,
    C: SimplicialComplex,
) -> tuple[EquivariantCover, VerificationReport]:
    """Pull the skeleton-cover pieces back through phi(x, g) = g.f(g^-1 x).

    Pieces are inflated by the pullback radius so membership stays an exact
    rational predicate; the inflation preserves disjointness within a level
    (the separation margin dominates twice the radius) and can only help
    the covering condition (E).  Requires f to be (E, r)-equivariant for
    r = (1/6)10^-dim.
    """
    d = C.dimension
    r = pullback_radius(d)
    check_simplicial_action(C, group, act_V)
    eq = check_equivariance(f, act_X, act_V, group.symmetrized(E), r)
    if not eq:
        raise EquivarianceTooWeak(
            f"need (E, {r})-equivariance, measured {eq.details['max_discrepancy']}"
        )
    space = tuple(f.keys())

    def phi(x, g):
        ginv = group.inv(g)
        return _act_point(act_V, g, f[act_X(ginv, x)])

    phi_table = {
        (x, g): phi(x, g) for x in space for g in group.elements
    }

    def in_inflated_piece(mu, i, delta) -> bool:
        if distance_to_simplex(mu, delta) >= inner_radius(i) + r:
            return False
        if i == 0:
            return True
        return distance_to_skeleton(mu, C, i - 1) > outer_radius(i) - r

    sets = []
    labels = []
    seen_sets = set()
    for i in range(d + 1):
        for delta in C.simplices_of_dim(i):
            U = frozenset(
                p for p, mu in phi_table.items() if in_inflated_piece(mu, i, delta)
            )
            if U and U not in seen_sets:
                seen_sets.add(U)
                sets.append(U)
                labels.append((i, delta))
    cover = EquivariantCover(group, space, act_X, sets, labels)
    report = cover.check_conditions(E)
    if report.details["multiplicity"] > d + 1:
        raise ConditionViolated("C", f"multiplicity {report.details['multiplicity']} > d+1")
    return cover, report


def map_from_cover(
    cover: EquivariantCover, E, n: int
) -> tuple[dict, SimplicialComplex, VerificationReport]:
    """Nerve map from telescoped indicator sums over cover interiors.

    U^(m) is the set of pairs whose whole {x} x gE^m block stays in U; the
    step functions are indicators of U^(m) (exact in the zero-dimensional
    model), psi_U counts memberships for m = 1..n, and f(x) is the nerve
    point with weights psi_U(x, e)/sum.  The equivariance defect is at most
    (2d+2)(4d+6)/n with d+1 the cover multiplicity.
    """
    if n < 1:
        raise InvalidInput("telescoping depth n must be positive")
    group = cover.group
    sym_E = group.symmetrized(E)
    pairs = cover.all_pairs()

    # E^m balls in the group
    balls = [frozenset({group.unit})]
    for _ in range(n):
        balls.append(
            frozenset(group.mult(a, e) for a in balls[-1] for e in sym_E)
        )

    interiors = []
    for U in cover.sets:
        lvl = [U]
        for m in range(1, n + 1):
            Um = frozenset(
                (x, g)
                for (x, g) in U
                if all((x, group.mult(g, h)) in U for h in balls[m])
            )
            lvl.append(Um)
        interiors.append(lvl)

    for m in range(n + 1):
        if not set(pairs) <= set().union(*(lvl[m] for lvl in interiors)):
            raise DepthInsufficient(
                f"E^{m}-interiors do not cover X x Gamma; enlarge the cover or lower n"
            )

    psi = []
    for lvl in interiors:
        psi.append({p: sum(1 for m in range(1, n + 1) if p in lvl[m]) for p in pairs})
    totals = {p: sum(ps[p] for ps in psi) for p in pairs}
    assert all(t >= n for t in totals.values())
    phi = [
        {p: Fraction(ps[p], totals[p]) for p in pairs} for ps in psi
    ]

    # nerve of the cover
    point_faces = {}
    for p in pairs:
        face = frozenset(
            cover.sets[j] for j in range(len(cover.sets)) if p in cover.sets[j]
        )
        point_faces[p] = face
    nerve = SimplicialComplex(frozenset(cover.sets), set(point_faces.values()))

    f = {}
    for x in cover.space:
        p = (x, group.unit)
        weights = {
            cover.sets[j]: phi[j][p] for j in range(len(cover.sets)) if phi[j][p] > 0
        }
        f[x] = SimplicialPoint(weights)
        if not nerve.contains(f[x]):
            raise ConditionViolated("C", "nerve point escaped the nerve")

    # defect: d(f(gx), g f(x)) = sum_U |phi_U(gx, e) - phi_U(gx, g)|
    dim = cover.multiplicity() - 1
    bound = Fraction((2 * dim + 2) * (4 * dim + 6), n)
    worst = Fraction(0)
    for g in sym_E:
        for x in cover.space:
            gx = cover.act_X(g, x)
            total = Fraction(0)
            for j in range(len(cover.sets)):
                total += abs(phi[j][(gx, group.unit)] - phi[j][(gx, g)])
            worst = max(worst, total)
    report = VerificationReport(
        worst <= bound, "ok" if worst <= bound else "DefectExceeded",
        f"equivariance defect {worst} vs bound {bound}",
        {
            "defect": str(worst),
            "bound": str(bound),
            "dimension": dim,
            "telescoping_depth": n,
        },
    )
    return f, nerve, report


# ---------------------------------------------------------------------------
# witness from an almost-equivariant map


@dataclass
class BlrWitnessResult:
    colors: list[frozenset]
    moving_set: frozenset  # {g : gS cap S nonempty}
    groupoid_witness: GroupoidDadWitness
    report: VerificationReport


def dad_witness_from_blr(
    f: dict, E, C: SimplicialComplex, group: FiniteGroup, act_X, act_V
) -> BlrWitnessResult:
    """Witness colors U_i = f^{-1}(V_i) for an (E, (1/3)10^-d)-equivariant map.

    The element sets are confined to F = {g : gS cap S != empty} with S the
    union of the supports of f; verified on the transformation groupoid.
    """
    d = C.dimension
    eps_needed = inner_radius(d)
    sym_E = group.symmetrized(E)
    check_simplicial_action(C, group, act_V)
    eq = check_equivariance(f, act_X, act_V, sym_E, eps_needed)
    if not eq:
        raise EquivarianceTooWeak(
            f"measured equivariance {eq.details['max_discrepancy']} >= (1/3)10^-{d}"
        )
    # vertex stabilizers must be finite subgroups: automatic here, recorded
    S = frozenset().union(*(mu.support() for mu in f.values()))
    F = frozenset(
        g
        for g in group.elements
        if any(act_V(g, v) in S for v in S)
    )

    space = tuple(f.keys())
    colors = []
    for i in range(d + 1):
        colors.append(frozenset(x for x in space if _level_membership(f[x], C, i)))
    uncovered = set(space) - set().union(*colors)
    if uncovered:
        raise InvalidInput("levels failed to cover the samples; complex inconsistent")

    G = transformation_groupoid(
        {
            "elements": group.elements,
            "mult": group.mult,
            "inv": group.inv,
            "unit": group.unit,
            "act": act_X,
        },
        space,
    )
    K = frozenset((g, x) for g in sym_E for x in space)
    generated = []
    for color in colors:
        seed = [a for a in K if G.source(a) in color and G.range(a) in color]
        gen = generate_subgroupoid(G, seed)
        parts = {a[0] for a in gen}
        if not parts <= F:
            raise InvalidInput(
                f"generated elements {sorted(map(repr, parts - F))[:3]} escape the moving set"
            )
        generated.append(gen)
    witness = GroupoidDadWitness(K, colors, generated, meta={"moving_set_size": len(F)})
    size_bound = len(F) * len(space)
    report = verify_groupoid_dad(G, witness, size_bound)
    return BlrWitnessResult(colors, F, witness, report)
