"""End-to-end certificate pipeline and the regression corpus.

The pipeline chains: symbolic witness construction -> finite-quotient
transformation-groupoid witness -> cover enlargement -> nested towers ->
almost-invariant partition of unity -> cut-down decomposition report.
Each stage writes a certificate; the chain records hashes so tampering is
detected on re-verification.
"""

from __future__ import annotations

import time
from fractions import Fraction
from pathlib import Path

from . import certify
from .certify import CertificateChain, corpus_dir, load_certificate, write_certificate
from .convolution import ConvElement, decompose_via_pou, reduced_norm
from .errors import DepthExceeded, InvalidInput, VerificationFailed
from .exactmath import osc_bound_float
from .groupoid import (
    GroupoidDadWitness,
    cyclic_rotation_groupoid,
    generate_subgroupoid,
    symmetrize_arrows,
    verify_groupoid_dad,
)
from .pou import build_pou, build_tower, enlarge_cover, verify_pou
from .symbolic import Odometer, system_from_json
from .witness import (
    color_element_sets,
    construct_minimal_z_witness,
    verify_dad_witness,
)

__all__ = ["run_pipeline", "corpus_check", "project_witness_to_quotient"]


def project_witness_to_quotient(system: Odometer, witness, depth: int):
    """Residue sets mod q_depth of the witness colors (exact when every
    color has depth at most ``depth``)."""
    q = system.level_size(depth)
    colors_q = []
    for c in witness.colors:
        if c.depth > depth:
            raise DepthExceeded(
                f"quotient depth {depth} below color depth {c.depth}"
            )
        colors_q.append(frozenset(c._at_depth(depth)))
    return q, colors_q


def run_pipeline(
    system_file,
    N: int = 1,
    quotient_depth: int = 6,
    pou_depth: int = 4,
    outdir=None,
) -> CertificateChain:
    """Run every stage on a system file and emit a hash-linked chain."""
    outdir = Path(outdir if outdir is not None else ".")
    outdir.mkdir(parents=True, exist_ok=True)
    chain = CertificateChain(outdir)

    # stage 0: system
    sysdata = load_certificate(system_file)
    system = system_from_json(sysdata)
    write_certificate(outdir / "01_system.json", {
        "system": system.to_json(),
        "minimal": system.minimal,
        "infinite": system.infinite,
    })
    chain.add_stage("system", {}, {"system": "01_system.json"}, "verified")

    # stage 1: symbolic witness
    witness = construct_minimal_z_witness(system, N)
    wrep = verify_dad_witness(system, witness)
    write_certificate(outdir / "02_witness.json", {
        "witness": witness.to_json(),
        "verification": wrep.to_json(),
    })
    chain.add_stage(
        "witness", {"system": "01_system.json"}, {"witness": "02_witness.json"},
        "verified" if wrep.accepted else "failed",
        {"M": witness.meta["M"], "sizes": wrep.details.get("sizes")},
    )
    if not wrep.accepted:
        raise VerificationFailed("witness stage failed", wrep)
    if not isinstance(system, Odometer):
        raise InvalidInput("the quotient stages of the pipeline require an odometer")

    # stage 2: quotient transformation-groupoid witness
    M = witness.meta["M"]
    q, colors_q = project_witness_to_quotient(system, witness, quotient_depth)
    G = cyclic_rotation_groupoid(q)
    E = witness.generator_set
    K = symmetrize_arrows(G, frozenset((e % q, x) for e in E for x in range(q)))
    generated = []
    for color in colors_q:
        seed = [a for a in K if G.source(a) in color and G.range(a) in color]
        generated.append(generate_subgroupoid(G, seed))
    size_bound = (2 * (M + N) + 1) * q
    gwitness = GroupoidDadWitness(K, colors_q, generated)
    grep = verify_groupoid_dad(G, gwitness, size_bound)
    # action/groupoid consistency: the generated group parts must be the
    # symbolic element sets reduced mod q
    parts_match = all(
        {a[0] for a in generated[i]} == {n % q for n in witness.finite_sets[i]}
        for i in range(len(colors_q))
    )
    write_certificate(outdir / "03_groupoid_witness.json", {
        "quotient": q,
        "colors": [sorted(c) for c in colors_q],
        "generated_sizes": [len(g) for g in generated],
        "size_bound": size_bound,
        "group_parts_match_symbolic": parts_match,
        "verification": grep.to_json(),
    })
    chain.add_stage(
        "groupoid", {"witness": "02_witness.json"},
        {"groupoid_witness": "03_groupoid_witness.json"},
        "verified" if grep.accepted and parts_match else "failed",
    )
    if not grep.accepted or not parts_match:
        raise VerificationFailed("groupoid stage failed", grep)

    # stage 3: cover enlargement (witness strength measured against E^3)
    E3 = tuple(range(-3 * N, 3 * N + 1))
    f3 = color_element_sets(system, witness.colors, E3)
    bound_k3 = max(len(F) for F in f3) * q
    enlarged, erep = enlarge_cover(G, K, colors_q, bound_k3)
    write_certificate(outdir / "04_enlarged.json", {
        "colors": [sorted(c) for c in enlarged],
        "k3_element_counts": [len(F) for F in f3],
        "size_bound": bound_k3,
        "report": erep.to_json(),
    })
    chain.add_stage(
        "enlarge", {"groupoid_witness": "03_groupoid_witness.json"},
        {"enlarged": "04_enlarged.json"}, "verified",
    )

    # stage 4: towers
    towers = build_tower(G, K, enlarged, pou_depth, size_bound=q * q)
    write_certificate(outdir / "05_towers.json", {
        "N": pou_depth,
        "levels": [[sorted(lvl) for lvl in t.levels] for t in towers],
    })
    chain.add_stage(
        "tower", {"enlarged": "04_enlarged.json"}, {"towers": "05_towers.json"},
        "verified",
    )

    # stage 5: partition of unity
    pou = build_pou(G, K, towers)
    prep = verify_pou(G, K, pou)
    write_certificate(outdir / "06_pou.json", {
        "pou": pou.to_json(),
        "verification": prep.to_json(),
    })
    chain.add_stage(
        "pou", {"towers": "05_towers.json"}, {"pou": "06_pou.json"},
        "verified" if prep.accepted else "failed",
    )
    if not prep.accepted:
        raise VerificationFailed("partition-of-unity stage failed", prep)

    # stage 6: cut-down decomposition of the K-indicator element
    f = ConvElement(G, {a: 1 for a in K})
    drep = decompose_via_pou(f, pou)
    osc_bound = osc_bound_float(pou.d, pou.N)
    osc_ok = prep.details["max_oscillation_float"] < osc_bound
    write_certificate(outdir / "07_decomposition.json", {
        "decomposition": _decomp_json(drep),
        "pou_oscillation": prep.details["max_oscillation_float"],
        "pou_oscillation_bound": osc_bound,
        "oscillation_below_bound": osc_ok,
    })
    chain.add_stage(
        "decompose", {"pou": "06_pou.json"},
        {"decomposition": "07_decomposition.json"},
        "verified" if drep["accepted"] and osc_ok else "failed",
    )
    chain.write()
    if not drep["accepted"]:
        raise VerificationFailed("decomposition stage failed")
    return chain


def _decomp_json(drep: dict) -> dict:
    out = dict(drep)
    out["per_color"] = [dict(pc) for pc in drep["per_color"]]
    return out


# ---------------------------------------------------------------------------
# corpus


def _run_corpus_case(case: dict):
    from .coarse import (
        Grid1dSpace,
        Grid2dSpace,
        construct_grid_witness,
        verify_asdim_witness,
    )
    from .groupoid import block_union_pair_groupoid, pair_groupoid
    from .convolution import block_decompose
    from .nerve import SimplicialComplex, SimplicialPoint, nice_cover_assign
    from .pou import pou_from_group_action

    kind = case["kind"]
    params = case.get("params", {})
    if kind == "minimal_z_witness":
        system = system_from_json(params["system"])
        w = construct_minimal_z_witness(system, params["N"])
        rep = verify_dad_witness(system, w)
        return {"witness": w.to_json(), "accepted": rep.accepted}
    if kind == "grid_witness":
        n = params["n"]
        if n == 1:
            box = tuple(params["box"])
            X = Grid1dSpace(*box)
        else:
            box = tuple(tuple(b) for b in params["box"])
            X = Grid2dSpace(box[0][1] + 1, box[1][1] + 1)
        w = construct_grid_witness(n, box, params["R"])
        rep = verify_asdim_witness(X, w)
        return {"witness": w.to_json(), "accepted": rep.accepted}
    if kind == "z12_pou":
        arcs = [frozenset(a) for a in params["arcs"]]
        G, K, towers, pou = pou_from_group_action(
            params["order"], range(params["order"]), params["E"], arcs,
            params["N"], None,
        )
        rep = verify_pou(G, K, pou)
        return {"pou": pou.to_json(), "verification": rep.to_json()}
    if kind == "pair_norm":
        n = params["n"]
        G = pair_groupoid(range(n))
        f = ConvElement(G, {a: 1 for a in G.arrows})
        return {"n": n, "all_ones_norm": reduced_norm(f)}
    if kind == "blocks":
        G = block_union_pair_groupoid(_offsets(params["sizes"]))
        bd = block_decompose(G)
        return {"sizes": sorted(bd.sizes())}
    if kind == "nice_cover_grid":
        C = SimplicialComplex(["a", "b", "c"], [{"a", "b", "c"}])
        den = params["denominator"]
        counts = {}
        for a in range(den + 1):
            for b in range(den + 1 - a):
                c = den - a - b
                mu = SimplicialPoint({
                    v: Fraction(k, den) for v, k in (("a", a), ("b", b), ("c", c)) if k
                })
                i, _ = nice_cover_assign(mu, C)
                counts[str(i)] = counts.get(str(i), 0) + 1
        return {"denominator": den, "level_counts": counts}
    if kind == "pipeline":
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            sysfile = Path(tmp) / "system.json"
            write_certificate(sysfile, params["system"], stamp=False)
            chain = run_pipeline(
                sysfile, params["N"], params["quotient_depth"], params["pou_depth"],
                Path(tmp) / "out",
            )
            decomp = load_certificate(Path(tmp) / "out" / "07_decomposition.json")
            return {
                "green": chain.green,
                "stages": [s["kind"] for s in chain.stages],
                "defect": decomp["decomposition"]["defect"],
                "oscillation_below_bound": decomp["oscillation_below_bound"],
            }
    raise InvalidInput(f"unknown corpus case kind {kind!r}")


def _offsets(sizes):
    # disjoint blocks need disjoint labels
    blocks = []
    base = 0
    for s in sizes:
        blocks.append(list(range(base, base + s)))
        base += s
    return blocks


def corpus_check(write_golden: bool = False) -> dict:
    """Run every bundled case and compare against its golden certificate.

    Exact-arithmetic artifacts must match byte-for-byte (after canonical
    normalization); float fields compare within 1e-9 relative.
    """
    root = corpus_dir()
    cases = load_certificate(root / "cases.json")["cases"]
    results = {}
    failures = {}
    for case in cases:
        name = case["name"]
        t0 = time.monotonic()
        produced = _run_corpus_case(case)
        golden_path = root / case["golden"]
        if write_golden:
            write_certificate(golden_path, produced, stamp=False)
            results[name] = "written"
            continue
        golden = load_certificate(golden_path)
        diffs = certify.compare_artifacts(certify._normalize(produced), golden)
        if diffs:
            failures[name] = diffs[:5]
            results[name] = f"FAIL ({len(diffs)} diffs)"
        else:
            results[name] = f"ok ({time.monotonic() - t0:.2f}s)"
    return {"results": results, "failures": failures, "green": not failures}
