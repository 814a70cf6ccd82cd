"""dadim command-line front end.

Every verification failure maps to a distinct nonzero exit code (table in
--help).  Certificates are canonical JSON; exact quantities are rationals
"p/q", floats appear only in norm reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import certify, errors
from .certify import CertificateChain, load_certificate, write_certificate
from .coarse import (
    asdim_witness_from_json,
    bridge_to_groupoid,
    construct_grid_witness,
    recover_families_from_bridge,
    space_from_json,
    verify_asdim_witness,
)
from .convolution import ConvElement, decompose_via_pou, reduced_norm
from .errors import ALL_ERRORS, DadimError, InvalidInput, VerificationFailed
from .groupoid import cyclic_rotation_groupoid, groupoid_from_json, symmetrize_arrows
from .nerve import (
    SimplicialComplex,
    SimplicialPoint,
    check_equivariance,
    cyclic_group,
    dad_witness_from_blr,
    l1_distance,
    nice_cover_assign,
)
from .pipeline import corpus_check, run_pipeline
from .pou import NestedColorTower, PartitionOfUnity, pou_from_group_action, verify_pou
from .symbolic import system_from_json
from .witness import construct_minimal_z_witness, verify_dad_witness, witness_from_json


def _exit_code_table() -> str:
    rows = ["exit codes:", "  0   success / verified"]
    rows.append("  1   unexpected internal error")
    for cls in ALL_ERRORS:
        rows.append(f"  {cls.exit_code:<3} {cls.__name__}")
    return "\n".join(rows)


def _fail_from_report(report):
    """Map a rejected report to the matching error class."""
    by_name = {cls.__name__: cls for cls in ALL_ERRORS}
    cls = by_name.get(report.code, VerificationFailed)
    raise cls(report.message)


def _load(path):
    try:
        return load_certificate(path)
    except FileNotFoundError as exc:
        raise InvalidInput(f"missing file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"bad JSON in {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_construct(args):
    system = system_from_json(_load(args.system))
    witness = construct_minimal_z_witness(system, args.N)
    write_certificate(args.output, witness.to_json())
    print(f"witness written to {args.output} (M={witness.meta['M']}, "
          f"sizes={[len(F) for F in witness.finite_sets]})")
    return 0


def cmd_verify(args):
    system = system_from_json(_load(args.system))
    witness = witness_from_json(system, _load(args.witness))
    report = verify_dad_witness(system, witness, args.blowup_bound)
    print(json.dumps(report.to_json(), indent=1, sort_keys=True))
    if not report.accepted:
        _fail_from_report(report)
    return 0


def cmd_asdim_construct(args):
    spacedata = _load(args.space)
    if "grid" not in spacedata:
        raise InvalidInput("asdim-construct needs a grid space file")
    dims = spacedata["grid"]["dims"]
    if len(dims) == 1:
        witness = construct_grid_witness(1, (0, dims[0] - 1), args.R)
    elif len(dims) == 2:
        witness = construct_grid_witness(
            2, ((0, dims[0] - 1), (0, dims[1] - 1)), args.R
        )
    else:
        raise InvalidInput("grids supported in dimensions 1 and 2")
    write_certificate(args.output, witness.to_json())
    print(f"witness written to {args.output} "
          f"(families={len(witness.families)}, S={witness.bound_S})")
    return 0


def cmd_asdim_verify(args):
    X = space_from_json(_load(args.space))
    witness = asdim_witness_from_json(_load(args.witness))
    report = verify_asdim_witness(X, witness)
    print(json.dumps(report.to_json(), indent=1, sort_keys=True))
    if not report.accepted:
        _fail_from_report(report)
    return 0


def cmd_bridge(args):
    X = space_from_json(_load(args.space))
    witness = asdim_witness_from_json(_load(args.witness))
    G, gw, report = bridge_to_groupoid(X, witness)
    recovered = recover_families_from_bridge(gw)
    original = [
        sorted((frozenset(c) for c in fam), key=lambda b: sorted(map(repr, b)))
        for fam in witness.families
    ]
    roundtrip = recovered == original
    cert = {
        "ambient_tube_radius": G.radius,
        "K_radius": witness.scale_R,
        "generated_sizes": [g.size() for g in gw.generated],
        "verification": report.to_json(),
        "roundtrip_exact": roundtrip,
    }
    if args.output:
        write_certificate(args.output, cert)
    print(json.dumps(certify._normalize(cert), indent=1, sort_keys=True))
    if not roundtrip:
        raise VerificationFailed("family recovery from the bridged witness failed")
    return 0


def _complex_from_json(data) -> SimplicialComplex:
    return SimplicialComplex(data["vertices"], [set(f) for f in data["maximal_faces"]])


def cmd_nerve(args):
    if args.complex:
        C = _complex_from_json(_load(args.complex))
    else:
        C = SimplicialComplex(["a", "b", "c"], [{"a", "b", "c"}])
    den = args.denominator
    level_counts: dict[str, int] = {}
    min_separation: dict[str, Fraction | None] = {}
    points_by_piece: dict = {}
    for face in C.maximal_faces:
        verts = sorted(face, key=repr)
        for combo in _compositions(den, len(verts)):
            mu = SimplicialPoint({
                v: Fraction(k, den) for v, k in zip(verts, combo) if k
            })
            i, delta = nice_cover_assign(mu, C)
            level_counts[str(i)] = level_counts.get(str(i), 0) + 1
            points_by_piece.setdefault((i, delta), []).append(mu)
    for (i, delta), pts in sorted(points_by_piece.items(), key=lambda kv: repr(kv[0])):
        for (j, delta2), pts2 in points_by_piece.items():
            if j != i or delta2 == delta:
                continue
            for mu in pts:
                for nu in pts2:
                    d = l1_distance(mu, nu)
                    key = str(i)
                    if min_separation.get(key) is None or d < min_separation[key]:
                        min_separation[key] = d
    separation_ok = all(
        sep is None or sep >= Fraction(1, 3 * 10 ** int(i))
        for i, sep in min_separation.items()
    )
    cert = {
        "denominator": den,
        "samples": sum(level_counts.values()),
        "level_counts": level_counts,
        "min_cross_piece_separation": {
            i: (certify.rational_str(s) if s is not None else None)
            for i, s in min_separation.items()
        },
        "separation_ok": separation_ok,
        "certified_on": "sample-grid",
    }
    if args.output:
        write_certificate(args.output, cert)
    print(json.dumps(certify._normalize(cert), indent=1, sort_keys=True))
    if not separation_ok:
        raise VerificationFailed("cross-piece separation violated on the grid")
    return 0


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def cmd_blr_check(args):
    action = _load(args.action)
    if "cyclic" not in action:
        raise InvalidInput("blr-check supports cyclic action files")
    n = int(action["cyclic"])
    group = cyclic_group(n)
    act = lambda g, x: (x + g) % n  # noqa: E731
    C = _complex_from_json(_load(args.complex))
    mapdata = _load(args.map)["samples"]
    f = {
        int(x): SimplicialPoint({int(v): Fraction(t) for v, t in wt.items()})
        for x, wt in mapdata.items()
    }
    E = [e % n for e in args.E]
    eps = Fraction(args.epsilon) if args.epsilon else Fraction(1, 3 * 10**C.dimension)
    eq = check_equivariance(f, act, act, group.symmetrized(E), eps)
    out = {"equivariance": eq.to_json()}
    if args.witness:
        res = dad_witness_from_blr(f, E, C, group, act, act)
        out["witness"] = {
            "colors": [sorted(c) for c in res.colors],
            "moving_set": sorted(res.moving_set),
            "verification": res.report.to_json(),
        }
    if args.output:
        write_certificate(args.output, out)
    print(json.dumps(certify._normalize(out), indent=1, sort_keys=True))
    if not eq.accepted:
        raise errors.EquivarianceTooWeak(eq.message)
    return 0


def cmd_pou_build(args):
    colors = [frozenset(c) for c in _load(args.colors)]
    if args.N is None and args.epsilon is None:
        raise InvalidInput("pass --N or --epsilon")
    G, K, towers, pou = pou_from_group_action(
        args.order, range(args.order), args.E, colors, args.N, args.size_bound,
        eps=Fraction(args.epsilon) if args.epsilon else None,
    )
    report = verify_pou(G, K, pou)
    write_certificate(args.output, {
        "order": args.order,
        "E": sorted(set(e % args.order for e in args.E)),
        "pou": pou.to_json(),
        "verification": report.to_json(),
    })
    print(f"partition of unity written to {args.output} "
          f"(max oscillation {report.details['max_oscillation_float']:.6g} "
          f"< bound {report.details['bound_float']:.6g})")
    if not report.accepted:
        _fail_from_report(report)
    return 0


def _pou_from_cert(cert) -> tuple:
    order = cert["order"]
    G = cyclic_rotation_groupoid(order)
    K = symmetrize_arrows(
        G, frozenset((e % order, x) for e in cert["E"] for x in range(order))
    )
    data = cert["pou"]
    towers = [
        NestedColorTower(i, [frozenset(int(u) for u in lvl) for lvl in levels])
        for i, levels in enumerate(data["tower_levels"])
    ]
    psi = [
        {int(u): Fraction(v) for u, v in p.items()} for p in data["psi"]
    ]
    norm_sq = {}
    for x in set().union(*(p.keys() for p in psi)) if psi else set():
        s = sum((p.get(x, Fraction(0)) ** 2 for p in psi), Fraction(0))
        norm_sq[x] = max(s, Fraction(1))
    pou = PartitionOfUnity(G, K, towers, int(data["N"]), psi, norm_sq)
    return G, K, pou


def cmd_pou_verify(args):
    cert = _load(args.pou)
    G, K, pou = _pou_from_cert(cert)
    eps = Fraction(args.epsilon) if args.epsilon else None
    report = verify_pou(G, K, pou, eps)
    print(json.dumps(report.to_json(), indent=1, sort_keys=True))
    if not report.accepted:
        _fail_from_report(report)
    return 0


def _element_from_json(G, data) -> ConvElement:
    coeffs = {}
    for arrow_key, re, im in data["coeffs"]:
        arrow = tuple(arrow_key) if isinstance(arrow_key, list) else arrow_key
        coeffs[arrow] = (Fraction(re), Fraction(im))
    if not frozenset(coeffs) <= frozenset(G.arrows):
        raise InvalidInput("element references unknown arrows")
    return ConvElement(G, coeffs)


def cmd_norm(args):
    G = groupoid_from_json(_load(args.groupoid))
    f = _element_from_json(G, _load(args.element))
    value = reduced_norm(f)
    out = {"reduced_norm": value, "support": len(f.coeffs)}
    if args.output:
        write_certificate(args.output, out)
    print(json.dumps(certify._normalize(out), indent=1, sort_keys=True))
    return 0


def cmd_decompose(args):
    cert = _load(args.pou)
    G, K, pou = _pou_from_cert(cert)
    if args.element:
        f = _element_from_json(G, _load(args.element))
    else:
        f = ConvElement(G, {a: 1 for a in K})
    rep = decompose_via_pou(f, pou)
    out = dict(rep)
    if args.output:
        write_certificate(args.output, out)
    print(json.dumps(certify._normalize(out), indent=1, sort_keys=True))
    if not rep["accepted"]:
        raise VerificationFailed("decomposition inequalities failed")
    return 0


def cmd_pipeline(args):
    if args.check:
        chain = CertificateChain.verify_directory(args.check)
        green = chain["green"]
        print(f"chain re-verified: green={green}")
        if not green:
            raise VerificationFailed("chain is not green")
        return 0
    chain = run_pipeline(
        args.system, args.N, args.quotient_depth, args.pou_depth, args.output
    )
    print(f"pipeline green={chain.green}; certificates in {args.output}")
    return 0 if chain.green else VerificationFailed.exit_code


def cmd_corpus(args):
    summary = corpus_check(write_golden=args.write_golden)
    for name, res in sorted(summary["results"].items()):
        print(f"  {name}: {res}")
    if not summary["green"] and not args.write_golden:
        for name, diffs in summary["failures"].items():
            for d in diffs:
                print(f"  {name}: {d}", file=sys.stderr)
        raise errors.CorpusMismatch("corpus comparison failed")
    print("corpus green" if not args.write_golden else "golden files written")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dadim",
        description=(
            "Construct, serialize, and verify finite-scale witnesses for "
            "dynamic asymptotic dimension, and reproduce the cut-down "
            "decomposition of finite groupoid convolution algebras."
        ),
        epilog=_exit_code_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("construct", help="two-color witness for a minimal Z-system")
    s.add_argument("--system", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("verify", help="re-verify a witness by broken-orbit search")
    s.add_argument("--system", required=True)
    s.add_argument("--witness", required=True)
    s.add_argument("--blowup-bound", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("asdim-construct", help="interval/brick witness for a grid")
    s.add_argument("--space", required=True)
    s.add_argument("--R", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_asdim_construct)

    s = sub.add_parser("asdim-verify", help="verify a coarse cover witness")
    s.add_argument("--space", required=True)
    s.add_argument("--witness", required=True)
    s.set_defaults(func=cmd_asdim_verify)

    s = sub.add_parser("bridge", help="translate a coarse witness to a groupoid witness")
    s.add_argument("--space", required=True)
    s.add_argument("--witness", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_bridge)

    s = sub.add_parser("nerve", help="skeleton-cover certificate on a barycentric grid")
    s.add_argument("--complex")
    s.add_argument("--denominator", type=int, default=60)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_nerve)

    s = sub.add_parser("blr-check", help="equivariance check and witness from a map")
    s.add_argument("--action", required=True)
    s.add_argument("--map", required=True)
    s.add_argument("--complex", required=True)
    s.add_argument("--E", type=int, nargs="+", required=True)
    s.add_argument("--epsilon")
    s.add_argument("--witness", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_blr_check)

    s = sub.add_parser("pou-build", help="almost-invariant partition of unity")
    s.add_argument("--order", type=int, required=True)
    s.add_argument("--E", type=int, nargs="+", required=True)
    s.add_argument("--colors", required=True)
    s.add_argument("--N", type=int, default=None, help="averaging depth (>= 3)")
    s.add_argument("--epsilon", help="rational p/q; derives the least depth instead of --N")
    s.add_argument("--size-bound", type=int, default=None)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_pou_build)

    s = sub.add_parser("pou-verify", help="re-verify a partition-of-unity certificate")
    s.add_argument("--pou", required=True)
    s.add_argument("--epsilon", help="rational p/q; default is the exact depth bound")
    s.set_defaults(func=cmd_pou_verify)

    s = sub.add_parser("norm", help="reduced norm of a convolution element")
    s.add_argument("--groupoid", required=True)
    s.add_argument("--element", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("decompose", help="cut-down decomposition along a partition of unity")
    s.add_argument("--pou", required=True)
    s.add_argument("--element")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("pipeline", help="system -> witness -> ... -> decomposition chain")
    s.add_argument("--system")
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--quotient-depth", type=int, default=6)
    s.add_argument("--pou-depth", type=int, default=4)
    s.add_argument("-o", "--output", default="pipeline-out")
    s.add_argument("--check", help="re-verify an existing chain directory")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("corpus", help="run the bundled regression corpus")
    s.add_argument("--write-golden", action="store_true")
    s.set_defaults(func=cmd_corpus)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except DadimError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
