"""Almost-invariant partitions of unity on finite groupoids.

Pipeline: a cover witnessing small generated subgroupoids for K^3 is
enlarged so that each partial orbit s(r^-1(x) cap K) sits inside a single
color; nested towers grow each color by one K-propagation step per level;
indicator step functions averaged over the tower give psi_i with exact
rational values, and

    phi_i = psi_i / max(sqrt(sum_j psi_j^2), 1)

squares to a partition of unity on r(K) u s(K).  Every verification is
done in exact arithmetic; inequalities involving square roots are decided
on squares (see exactmath).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    InvalidInput,
    PropagationEscapesColor,
    TowerInvalid,
    WitnessInsufficient,
)
from .exactmath import diff_lt_osc_bound, diff_lt_rational, osc_bound_float, sqrt_pair_float
from .groupoid import (
    arrow_set_power,
    compose_arrow_sets,
    generate_subgroupoid,
    symmetrize_arrows,
    transformation_groupoid,
)
from .reporting import VerificationReport

__all__ = [
    "NestedColorTower",
    "PartitionOfUnity",
    "enlarge_cover",
    "build_tower",
    "build_pou",
    "verify_pou",
    "pou_from_group_action",
]

Rat = Fraction


def _endpoints(G, K):
    out = set()
    for a in K:
        out.add(G.source(a))
        out.add(G.range(a))
    return frozenset(out)


def _propagate(G, K, units: frozenset) -> frozenset:
    """units u s(K cap r^-1(units))."""
    out = set(units)
    for a in K:
        if G.range(a) in units:
            out.add(G.source(a))
    return frozenset(out)


def enlarge_cover(G, K, colors, size_bound: int | None):
    """Fatten a cover so every partial orbit lands inside one color.

    Requires the input colors to witness small generated subgroupoids for
    K^3 (WitnessInsufficient otherwise).  The enlarged color is
    U_i = s(K cap r^-1(V_i)) cap (r(K) u s(K)); the generated subgroupoid
    for (K, U_i) is checked to stay inside K . G_i . K, with G_i generated
    from (K^3, V_i).

    Returns (new_colors, report).
    """
    K = symmetrize_arrows(G, K)
    K3 = arrow_set_power(G, K, 3)
    base = _endpoints(G, K)
    base3 = _endpoints(G, K3)

    covered = frozenset().union(*colors) if colors else frozenset()
    if not base3 <= covered:
        raise WitnessInsufficient(
            f"colors do not cover r(K^3) u s(K^3); {len(base3 - covered)} units missing"
        )

    G_is = []
    for i, color in enumerate(colors):
        seed = [a for a in K3 if G.source(a) in color and G.range(a) in color]
        gen = generate_subgroupoid(G, seed)
        if size_bound is not None and len(gen) > size_bound:
            raise WitnessInsufficient(
                f"color {i} generates {len(gen)} arrows for K^3 > bound {size_bound}"
            )
        G_is.append(gen)

    enlarged = []
    for color in colors:
        u = frozenset(
            G.source(a) for a in K if G.range(a) in color
        ) & base
        enlarged.append(u)

    # partial-orbit containment
    orbit_fail = []
    for x in base:
        orbit = frozenset(G.source(a) for a in K if G.range(a) == x)
        if not any(orbit <= u for u in enlarged):
            orbit_fail.append(x)
    if orbit_fail:
        raise WitnessInsufficient(
            f"partial orbits not contained in a single color at {orbit_fail[:3]!r}"
        )

    gen_sizes = []
    for i, u in enumerate(enlarged):
        seed = [a for a in K if G.source(a) in u and G.range(a) in u]
        gen = generate_subgroupoid(G, seed)
        envelope = compose_arrow_sets(G, compose_arrow_sets(G, K, G_is[i]), K)
        if not gen <= envelope:
            raise WitnessInsufficient(
                f"color {i}: generated subgroupoid escapes K.G_i.K"
            )
        gen_sizes.append(len(gen))

    report = VerificationReport(
        True, "ok", "cover enlarged; partial orbits contained",
        {
            "generated_sizes_k3": [len(g) for g in G_is],
            "generated_sizes": gen_sizes,
            "enlarged_sizes": [len(u) for u in enlarged],
        },
    )
    return enlarged, report


@dataclass
class NestedColorTower:
    """Nested unit sets U^(0) <= ... <= U^(N+1) for one color, where each
    level absorbs one K-propagation step of the previous one."""

    color: int
    levels: list[frozenset]

    @property
    def depth(self) -> int:
        return len(self.levels) - 2

    @property
    def top(self) -> frozenset:
        return self.levels[-1]


def build_tower(G, K, colors, N: int, size_bound: int | None):
    """Grow each color through N+1 propagation steps and check the four
    tower properties: base cover, nesting, propagation, small top."""
    if N < 1:
        raise InvalidInput("tower depth N must be positive")
    K = symmetrize_arrows(G, K)
    base = _endpoints(G, K)
    covered = frozenset().union(*colors) if colors else frozenset()
    if not base <= covered:
        raise TowerInvalid(
            f"colors do not cover r(K) u s(K); {len(base - covered)} units missing"
        )
    towers = []
    for i, color in enumerate(colors):
        levels = [frozenset(color)]
        for _ in range(N + 1):
            levels.append(_propagate(G, K, levels[-1]))
        # nesting and propagation are byproducts of the construction; check anyway
        for n in range(N + 1):
            if not levels[n] <= levels[n + 1]:
                raise TowerInvalid(f"color {i}: level {n} not nested")
            if not _propagate(G, K, levels[n]) <= levels[n + 1]:
                raise TowerInvalid(f"color {i}: propagation fails at level {n}")
        towers.append(NestedColorTower(i, levels))

    if size_bound is not None:
        for t in towers:
            seed = [
                a for a in K if G.source(a) in t.top and G.range(a) in t.top
            ]
            gen = generate_subgroupoid(G, seed)
            if len(gen) > size_bound:
                raise PropagationEscapesColor(
                    f"color {t.color}: top level generates {len(gen)} arrows "
                    f"> bound {size_bound}; witness inadequate for depth {N}"
                )
    return towers


@dataclass
class PartitionOfUnity:
    """phi_i = psi_i / sqrt(S) stored as exact pairs (psi value, S).

    ``psi`` maps units to rationals with denominator N; ``norm_sq`` maps a
    unit x to S_x = max(sum_j psi_j(x)^2, 1).  All checks run on squares.
    """

    G: object
    K: frozenset
    towers: list[NestedColorTower]
    N: int
    psi: list[dict]
    norm_sq: dict
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.psi) - 1

    def colors(self) -> list[frozenset]:
        return [t.top for t in self.towers]

    def phi_pair(self, i: int, x) -> tuple[Rat, Rat]:
        return self.psi[i].get(x, Fraction(0)), self.norm_sq.get(x, Fraction(1))

    def phi_float(self, i: int, x) -> float:
        p, S = self.phi_pair(i, x)
        return sqrt_pair_float(p, S)

    def phi_sup_float(self, i: int) -> float:
        return max((self.phi_float(i, x) for x in self.psi[i]), default=0.0)

    def small_subgroupoids(self) -> list[frozenset]:
        """Per color, the subgroupoid generated by the K-arrows inside the
        tower top; cutdowns by phi_i land in its convolution algebra."""
        out = []
        for t in self.towers:
            seed = [
                a
                for a in self.K
                if self.G.source(a) in t.top and self.G.range(a) in t.top
            ]
            out.append(generate_subgroupoid(self.G, seed))
        return out

    def to_json(self) -> dict:
        def key(u):
            return repr(u)

        return {
            "N": self.N,
            "colors": [sorted(map(key, t.top)) for t in self.towers],
            "psi": [
                {key(u): str(v) for u, v in sorted(p.items(), key=lambda kv: key(kv[0]))}
                for p in self.psi
            ],
            "tower_levels": [
                [sorted(map(key, lvl)) for lvl in t.levels] for t in self.towers
            ],
        }


def build_pou(G, K, towers: list[NestedColorTower]) -> PartitionOfUnity:
    """Average the tower indicator steps and normalize in squared form.

    psi_i(x) = #{n in [1, N] : x in U_i^(n-1)} / N; at least one psi_i
    equals 1 on r(K) u s(K) because the base levels cover it, so the
    squared normalizer is the honest sum there and sum phi_i^2 = 1 exactly.
    """
    K = symmetrize_arrows(G, K)
    if not towers:
        raise TowerInvalid("need at least one tower")
    N = towers[0].depth
    if N < 3:
        raise TowerInvalid("averaging depth must satisfy N >= 3")
    if any(t.depth != N for t in towers):
        raise TowerInvalid("towers have mismatched depths")
    base = _endpoints(G, K)

    psi: list[dict] = []
    for t in towers:
        vals: dict = {}
        for x in t.top:
            count = sum(1 for n in range(1, N + 1) if x in t.levels[n - 1])
            if count:
                vals[x] = Fraction(count, N)
        psi.append(vals)

    norm_sq: dict = {}
    for x in set().union(*(p.keys() for p in psi)):
        s = sum((p.get(x, Fraction(0)) ** 2 for p in psi), Fraction(0))
        norm_sq[x] = max(s, Fraction(1))

    pou = PartitionOfUnity(G, K, towers, N, psi, norm_sq)

    for x in base:
        if not any(p.get(x) == 1 for p in psi):
            raise TowerInvalid(f"no step function equals 1 at {x!r}; base cover broken")
        if sum((p.get(x, Fraction(0)) ** 2 for p in psi), Fraction(0)) != norm_sq[x]:
            raise TowerInvalid("normalizer clipped on r(K) u s(K)")
    return pou


def verify_pou(G, K, pou: PartitionOfUnity, eps: Rat | None = None) -> VerificationReport:
    """Exhaustive exact check of supports, normalization, and oscillation.

    With ``eps`` a rational, each arrow's oscillation is compared to it;
    with ``eps`` None the bound is sqrt(2)(1+sqrt(d+1))/sqrt(N).  Either
    way the comparison is decided on squares with zero tolerance.
    """
    K = symmetrize_arrows(G, K)
    base = _endpoints(G, K)
    d, N = pou.d, pou.N

    for i, t in enumerate(pou.towers):
        for x, v in pou.psi[i].items():
            if v > 0 and x not in t.top:
                return VerificationReport(
                    False, "SupportViolation",
                    f"phi_{i} positive outside its color at {x!r}",
                    {"color": i, "unit": repr(x)},
                )

    for x in base:
        total = sum(
            (p.get(x, Fraction(0)) ** 2 for p in pou.psi), Fraction(0)
        )
        if total / pou.norm_sq.get(x, Fraction(1)) != 1:
            return VerificationReport(
                False, "NormalizationDefect",
                f"sum phi_i^2 != 1 at {x!r}",
                {"unit": repr(x)},
            )
        if sum((p.get(x, Fraction(0)) for p in pou.psi), Fraction(0)) < 1:
            return VerificationReport(
                False, "NormalizationDefect",
                f"sum psi_i < 1 at {x!r}", {"unit": repr(x)},
            )

    step_bound = Fraction(2, N)
    max_osc_float = 0.0
    for a in K:
        sx, rx = G.source(a), G.range(a)
        for i in range(d + 1):
            ps, Ss = pou.phi_pair(i, sx)
            pr, Sr = pou.phi_pair(i, rx)
            if abs(pou.psi[i].get(sx, Fraction(0)) - pou.psi[i].get(rx, Fraction(0))) > step_bound:
                return VerificationReport(
                    False, "StepBoundViolation",
                    f"|psi_{i}(s) - psi_{i}(r)| > 2/N on arrow {a!r}",
                    {"arrow": repr(a), "color": i},
                )
            if eps is None:
                ok = diff_lt_osc_bound(ps, Ss, pr, Sr, d, N)
            else:
                ok = diff_lt_rational(ps, Ss, pr, Sr, Fraction(eps))
            if not ok:
                return VerificationReport(
                    False, "OscillationExceeded",
                    f"|phi_{i}(s(g)) - phi_{i}(r(g))| too large on arrow {a!r}",
                    {"arrow": repr(a), "color": i},
                )
            max_osc_float = max(
                max_osc_float,
                abs(sqrt_pair_float(ps, Ss) - sqrt_pair_float(pr, Sr)),
            )
    return VerificationReport(
        True, "ok", "partition of unity verified",
        {
            "max_oscillation_float": max_osc_float,
            "bound_float": osc_bound_float(d, N) if eps is None else float(eps),
            "d": d,
            "N": N,
        },
    )


def pou_from_group_action(
    group, space, E, colors, N: int | None, size_bound: int | None,
    eps: Rat | None = None,
):
    """Group-action form: K is the arrow set of E.x moves in the
    transformation groupoid; returns (G, K, towers, pou).

    Either pass the averaging depth N directly, or a rational eps from
    which the least admissible depth is derived.
    """
    from .exactmath import least_pou_depth

    G = transformation_groupoid(group, space)
    if isinstance(group, int):
        elems = {e % group for e in E}
    else:
        elems = set(E)
    K = frozenset((g, x) for g in elems for x in G.space)
    K = symmetrize_arrows(G, K)
    if N is None:
        if eps is None:
            raise InvalidInput("pass an averaging depth N or a rational eps")
        N = least_pou_depth(len(colors) - 1, Fraction(eps))
    enlarged, _ = enlarge_cover(G, K, colors, size_bound)
    towers = build_tower(G, K, enlarged, N, size_bound)
    pou = build_pou(G, K, towers)
    return G, K, towers, pou
