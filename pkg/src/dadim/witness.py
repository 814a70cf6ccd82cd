"""Dynamic-asymptotic-dimension witnesses for minimal Z-systems.

A witness is a finite clopen cover {U_0, ..., U_d} of the space together
with, for each color, the finite set F_i of group elements realizable by
E-paths whose intermediate points all stay inside U_i.  The verifier
recomputes F_i by breadth-first search over (element, constraint) pairs,
where the constraint is the exact clopen set of starting points compatible
with the path so far.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import DepthExceeded, InvalidInput, NotMinimal
from .reporting import VerificationReport
from .symbolic import (
    ClopenSet,
    Odometer,
    SymbolicSystem,
    clopen_from_json,
    disjoint_translates_radius,
    return_time_report,
)

__all__ = [
    "DadWitness",
    "construct_minimal_z_witness",
    "verify_dad_witness",
    "color_element_sets",
    "default_blowup_bound",
    "witness_from_json",
]

BLOWUP_CAP = 10**6


@dataclass
class DadWitness:
    """Cover colors plus the per-color finite element sets.

    ``generator_set`` is a finite symmetric subset of Z; the verifier works
    with its symmetrization (adding inverses and 0) so the element sets are
    closed under negation and contain 0 whenever the color is nonempty.
    """

    colors: list[ClopenSet]
    generator_set: tuple[int, ...]
    finite_sets: list[frozenset[int]]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "E": sorted(self.generator_set),
            "colors": [c.to_json() for c in self.colors],
            "finite_sets": [sorted(F) for F in self.finite_sets],
            "meta": dict(sorted(self.meta.items())),
        }


def witness_from_json(system: SymbolicSystem, data: dict) -> DadWitness:
    return DadWitness(
        colors=[clopen_from_json(system, c) for c in data["colors"]],
        generator_set=tuple(int(e) for e in data["E"]),
        finite_sets=[frozenset(int(n) for n in F) for F in data["finite_sets"]],
        meta=data.get("meta", {}),
    )


def _symmetrize(E) -> tuple[int, ...]:
    out = {0}
    for e in E:
        out.add(int(e))
        out.add(-int(e))
    return tuple(sorted(out))


def default_blowup_bound(E, max_gap: int | None, d: int) -> int:
    """(2|E|+1)^(max_gap*(d+1)) capped at 10^6; the cap in practice."""
    if max_gap is None:
        return BLOWUP_CAP
    base = 2 * len(set(E)) + 1
    try:
        raw = base ** (max_gap * (d + 1))
    except OverflowError:  # pragma: no cover
        return BLOWUP_CAP
    return min(raw, BLOWUP_CAP)


# ---------------------------------------------------------------------------
# BFS over path constraints


def _color_elements(
    system: SymbolicSystem,
    color: ClopenSet,
    E: tuple[int, ...],
    blowup_bound: int,
):
    """Breadth-first exploration of the broken-orbit element set of one color.

    Returns (elements, complete) where ``complete`` is False when the search
    was cut off at ``blowup_bound`` distinct elements with frontier still
    active.  States are (element, constraint) pairs; the constraint is the
    clopen set of starting points x in U such that every partial sum s of
    the path satisfies s.x in U; a state is retained iff it is nonempty.
    """
    if color.is_empty():
        return frozenset(), True
    if color.is_whole() and any(e != 0 for e in E):
        # the whole space puts no constraint on paths, so every element of
        # the subgroup generated by E is reached; on an infinite system the
        # element set is infinite
        if getattr(system, "infinite", True):
            return None, False

    translate_cache: dict[int, ClopenSet] = {0: color}

    def constraint_at(n: int) -> ClopenSet:
        if n not in translate_cache:
            translate_cache[n] = color.translate(-n)
        return translate_cache[n]

    start = (0, color)
    seen = {start}
    elements = {0}
    queue = deque([start])
    while queue:
        n, cset = queue.popleft()
        for e in E:
            if e == 0:
                continue
            n2 = n + e
            c2 = cset.intersect(constraint_at(n2))
            if c2.is_empty():
                continue
            state = (n2, c2)
            if state in seen:
                continue
            seen.add(state)
            elements.add(n2)
            if len(elements) > blowup_bound:
                return frozenset(elements), False
            queue.append(state)
    return frozenset(elements), True


def color_element_sets(
    system: SymbolicSystem,
    colors,
    E,
    blowup_bound: int = BLOWUP_CAP,
) -> list[frozenset[int]]:
    """Broken-orbit element sets of each color under the symmetrized E.

    Raises BlowupExceeded when a color's search does not complete within
    the bound.
    """
    from .errors import BlowupExceeded

    out = []
    sym = _symmetrize(E)
    for i, color in enumerate(colors):
        elements, complete = _color_elements(system, color, sym, blowup_bound)
        if not complete:
            raise BlowupExceeded(f"color {i} exceeded blowup bound {blowup_bound}")
        out.append(elements)
    return out


def verify_dad_witness(
    system: SymbolicSystem,
    witness: DadWitness,
    blowup_bound: int | None = None,
) -> VerificationReport:
    """Check cover exactness and recompute every finite set by BFS.

    Accepts iff the colors cover the space, each BFS terminates within
    ``blowup_bound`` distinct elements, and the reached sets equal the
    declared ``finite_sets``.
    """
    if blowup_bound is None:
        blowup_bound = witness.meta.get("blowup_bound", BLOWUP_CAP)
    E = _symmetrize(witness.generator_set)

    cover = system.empty()
    for c in witness.colors:
        cover = cover.union(c)
    if not cover.is_whole():
        return VerificationReport(
            False, "CoverGap", "colors do not cover the space",
            {"cover": cover.to_json()},
        )

    computed: list[frozenset[int]] = []
    for i, color in enumerate(witness.colors):
        elements, complete = _color_elements(system, color, E, blowup_bound)
        if not complete:
            frontier_active = elements is None or len(elements) > blowup_bound
            return VerificationReport(
                False,
                "BlowupExceeded",
                (
                    f"color {i}: BFS exceeded blowup_bound={blowup_bound} with the "
                    "frontier still active -- witness invalid or bound too small"
                    if frontier_active
                    else f"color {i}: element set larger than blowup_bound={blowup_bound}"
                ),
                {
                    "color": i,
                    "frontier_active": bool(frontier_active),
                    "elements_found": None if elements is None else len(elements),
                },
            )
        computed.append(elements)

    mismatches = [
        i
        for i, (got, want) in enumerate(zip(computed, witness.finite_sets))
        if got != want
    ]
    if len(witness.finite_sets) != len(witness.colors) or mismatches:
        return VerificationReport(
            False, "FiniteSetMismatch",
            f"declared finite sets differ from BFS at colors {mismatches}",
            {"computed": [sorted(F) for F in computed]},
        )
    return VerificationReport(
        True, "ok", "witness verified",
        {
            "finite_sets": [sorted(F) for F in computed],
            "sizes": [len(F) for F in computed],
            "blowup_bound": blowup_bound,
        },
    )


# ---------------------------------------------------------------------------
# constructive path for minimal Z-systems


def _least_disjoint_cylinder(system: SymbolicSystem, radius: int) -> ClopenSet:
    """Deepen cylinders until one has all translates up to ``radius`` disjoint
    from itself; pick the lexicographically least word at that depth."""
    if isinstance(system, Odometer):
        for depth in range(1, system.depth_limit + 1):
            if system.level_size(depth) > radius:
                return system.cylinder([0] * depth)
        raise DepthExceeded(f"no cylinder depth within limit has return time > {radius}")
    for depth in range(1, system.depth_limit + 1):
        for word in sorted(system.language(depth)):
            cand = system.cylinder(word)
            try:
                if disjoint_translates_radius(cand, radius):
                    return cand
            except DepthExceeded:
                break
        else:
            continue
        break
    raise DepthExceeded(f"no cylinder within depth budget has disjointness radius {radius}")


def _refine_one_level(system: SymbolicSystem, u: ClopenSet) -> ClopenSet:
    """A strictly smaller cylinder inside ``u`` (one more constrained level,
    least branch).  Zero-dimensionality makes closure(V) = V, so the pair
    (V, U) realizes "closure of V inside U" exactly."""
    if isinstance(system, Odometer):
        depth = u.depth
        v = min(u.values)
        return system.clopen(depth + 1, [v])
    word = min(u.words)
    left = u.left
    # extend to the right through forced letters until a genuine branch
    for _ in range(system.depth_limit):
        exts = sorted(
            w[-1] for w in system.language(len(word) + 1) if w[:-1] == word
        )
        if not exts:
            raise DepthExceeded("cylinder admits no extension inside depth budget")
        word = word + exts[0]
        if len(exts) > 1:
            return system.cylinder(word, left=left)
    raise DepthExceeded("no branching extension found within depth budget")


def construct_minimal_z_witness(
    system: SymbolicSystem, N: int, search_bound: int = 4096
) -> DadWitness:
    """Two-color witness for E = [-N, N] on a minimal infinite system.

    U is a cylinder whose translates up to 5N are disjoint from itself, V a
    strict refinement of U; the colors are U_0 = union of n.U over |n| <= N
    and U_1 = complement of the union of n.V.  The element sets are then
    confined to [-3N, 3N] and [-M-N, M+N], with M the exact syndeticity
    bound of V.
    """
    if N < 1:
        raise InvalidInput("N must be a positive integer")
    if not getattr(system, "minimal", False):
        raise NotMinimal("witness construction requires a verified minimal system")
    if not getattr(system, "infinite", False):
        raise NotMinimal("witness construction requires an infinite system")

    u = _least_disjoint_cylinder(system, 5 * N)
    v = _refine_one_level(system, u)
    rt = return_time_report(v, search_bound)
    if rt.max_gap is None:
        raise DepthExceeded(
            f"syndeticity bound of V not found within search_bound={search_bound}"
        )
    M = rt.max_gap

    u0 = system.empty()
    moved_v = system.empty()
    for n in range(-N, N + 1):
        u0 = u0.union(u.translate(n))
        moved_v = moved_v.union(v.translate(n))
    u1 = moved_v.complement()

    E = tuple(range(-N, N + 1))
    d = 1
    bound = default_blowup_bound(E, M, d)
    f0, ok0 = _color_elements(system, u0, E, bound)
    f1, ok1 = _color_elements(system, u1, E, bound)
    if not (ok0 and ok1):
        raise DepthExceeded("constructed witness did not verify within blowup bound")

    witness = DadWitness(
        colors=[u0, u1],
        generator_set=E,
        finite_sets=[f0, f1],
        meta={
            "N": N,
            "M": M,
            "blowup_bound": bound,
            "U": u.to_json(),
            "V": v.to_json(),
            "bound_F0": 3 * N,
            "bound_F1": M + N,
        },
    )

    report = verify_dad_witness(system, witness, bound)
    if not report:
        raise DepthExceeded(f"self-verification failed: {report.message}")
    if any(abs(n) > 3 * N for n in f0):
        raise DepthExceeded("color-0 element set escaped [-3N, 3N]")
    if any(abs(n) > M + N for n in f1):
        raise DepthExceeded("color-1 element set escaped [-M-N, M+N]")
    return witness
