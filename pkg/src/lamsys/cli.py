"""Command-line entry point: every operation behind stable JSON on stdout.

Exit codes: 0 success or pass, 1 checked failure carrying a certificate,
2 malformed input or usage.  Diagnostics go to stderr only; stdout carries a
single JSON document embedding the manifest that produced it.  Identical
inputs produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import jsonio
from .abelian import (
    build_chain_group,
    divisibility_evidence,
    invariant_factors,
    is_free,
    rank,
)
from .core import (
    check_structure,
    node_key,
    transform_disjoint,
    transform_tree,
    validate_family,
    validate_system,
)
from .freeness import (
    HallCertificate,
    ReshufflingOrder,
    find_reshuffling,
    find_transversal,
    k_free_check,
)
from .jsonio import InputError, SCHEMA, dump
from .uniformization import (
    SplittingError,
    power_table,
    prime_table,
    simulate,
    threshold_exponents,
)
from .whitehead import (
    Witness,
    build_witness_group,
    enumerate_basis,
    solve_witness,
    validate_whitehead,
    variant_filter,
    verify_basis,
)


def _load(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})")


def _manifest(subcommand: str, inputs: dict, params: dict) -> dict:
    return {
        "schema": SCHEMA,
        "subcommand": subcommand,
        "inputs": inputs,
        "params": params,
        "seed": None,
    }


def cmd_validate(args) -> tuple[dict, int]:
    doc = _load(args.file)
    sys_ = jsonio.system_from_doc(doc)
    violations = validate_system(sys_)
    payload: dict = {}
    fam = None
    if "phi" in doc:
        fam = jsonio.family_from_doc(doc)
        violations += validate_family(fam)
    if "r" in doc:
        ws = jsonio.whitehead_from_doc(doc)
        violations = validate_whitehead(ws)
    payload["violations"] = [v.to_jsonable() for v in violations]
    payload["largeness"] = sys_.largeness
    if args.structure and fam is not None:
        rep = check_structure(sys_, fam)
        payload["structure"] = {
            "ok": rep.ok,
            "sibling_overlap": list(rep.sibling_overlap),
            "slice_alignment": list(rep.slice_alignment),
            "enumeration_tree": list(rep.enumeration_tree),
            "declared_only": list(rep.declared_only),
        }
    return payload, 0 if not violations else 1


def cmd_check_free(args) -> tuple[dict, int]:
    fam = jsonio.family_from_doc(_load(args.file))
    finals = list(fam.finals)
    sets = [fam.s(z) for z in finals]
    payload: dict = {
        "finals": [node_key(z) for z in finals],
        "remark": "finite-scale result; says nothing about non-freeness of families attached to infinite systems",
    }
    if args.k is not None:
        res = k_free_check(sets, args.k)
        if res == "pass":
            payload["result"] = "pass"
            payload["k"] = args.k
            return payload, 0
        payload["result"] = "fail"
        payload["k"] = args.k
        payload["certificate"] = jsonio.certificate_to_doc(res)
        return payload, 1
    res = find_transversal(sets)
    payload["certificate"] = jsonio.certificate_to_doc(res)
    return payload, 0 if not isinstance(res, HallCertificate) else 1


def cmd_reshuffle(args) -> tuple[dict, int]:
    fam = jsonio.family_from_doc(_load(args.file))
    res = find_reshuffling(
        fam, alpha=args.alpha, theta_fresh=args.fresh, budget=args.budget
    )
    payload = {"status": res.status, "nodes_visited": res.nodes_visited, "theta_fresh": args.fresh}
    if res.order is not None:
        payload["certificate"] = jsonio.certificate_to_doc(res.order)
        return payload, 0
    return payload, 1


def cmd_build_group(args) -> tuple[dict, int]:
    spec = jsonio.chain_spec_from_doc(_load(args.spec))
    pres = build_chain_group(spec)
    payload = {
        "presentation": jsonio.presentation_to_doc(pres),
        "invariant_factors": list(invariant_factors(pres)),
        "free": is_free(pres),
        "rank": rank(pres),
    }
    if args.m_max is not None:
        report = divisibility_evidence(spec, args.m_max)
        payload["divisibility"] = {
            "ok": report.ok,
            "steps": [
                {
                    "m": s.m,
                    "product": s.product,
                    "witness_index": s.witness_index,
                    "relation_coefficients": list(s.combination),
                    "head_coefficients": list(s.head_coefficients),
                    "verified": s.verified,
                }
                for s in report.steps
            ],
        }
    return payload, 0


def cmd_build_g(args) -> tuple[dict, int]:
    ws = jsonio.whitehead_from_doc(_load(args.system))
    if args.variant:
        allowed = frozenset(int(x) for x in args.variant.split(","))
        ws = variant_filter(ws, allowed)
    violations = validate_whitehead(ws)
    if violations:
        return {"violations": [v.to_jsonable() for v in violations]}, 1
    pres = build_witness_group(ws)
    return {
        "presentation": jsonio.presentation_to_doc(pres),
        "invariant_factors": list(invariant_factors(pres)),
        "free": is_free(pres),
        "rank": rank(pres),
    }, 0


def cmd_solve_witness(args) -> tuple[dict, int]:
    ws = jsonio.whitehead_from_doc(_load(args.system))
    c = jsonio.coloring_from_doc(_load(args.c))
    for z in ws.finals():
        if z not in c or len(c[z]) < ws.m_range:
            raise InputError(f"coloring must supply {ws.m_range} values for final {node_key(z)!r}")
    res = solve_witness(ws, c)
    if isinstance(res, Witness):
        return {"status": "witness", "witness": jsonio.witness_to_doc(res)}, 0
    return {"status": "infeasible", "certificate": jsonio.certificate_to_doc(res)}, 1


def cmd_basis(args) -> tuple[dict, int]:
    ws = jsonio.whitehead_from_doc(_load(args.system))
    window = [z for z in ws.finals() if z[0] < args.beta]
    attached = ws.strong_order
    if (
        attached is not None
        and attached.alpha == args.alpha
        and set(attached.order) == set(window)
    ):
        order = attached
    elif window:
        res = find_reshuffling(ws.family, finals=window, alpha=args.alpha, theta_fresh=args.fresh)
        if res.status != "found":
            return {"status": res.status, "detail": "no reshuffling order found for the window"}, 1
        order = res.order
    else:
        order = ReshufflingOrder((), args.alpha, args.fresh)
    cand = enumerate_basis(ws, order, args.alpha, args.beta)
    report = verify_basis(ws, cand, args.alpha, args.beta)
    payload = {
        "order": jsonio.certificate_to_doc(order),
        "basis": jsonio.basis_to_doc(cand),
        "verification": {
            "ok": report.ok,
            "generated": report.generated,
            "unit_factors": report.unit_factors,
            "count_matches": report.count_matches,
            "free_rank": report.free_rank,
            "candidate_size": report.candidate_size,
            "failing_generators": list(report.failing_generators),
        },
    }
    return payload, 0 if report.ok else 1


def cmd_unif_table(args) -> tuple[dict, int]:
    mu = json.loads(args.mu) if args.mu else []
    if not isinstance(mu, list):
        raise InputError("--mu must be a JSON list")
    if args.i is None:
        flat = [int(x) for x in mu]
        if len(flat) != args.r:
            raise InputError(f"subcase needs {args.r} mu entries, got {len(flat)}")
        tab = prime_table(args.p, flat)
        return {"table": jsonio.table_to_doc(tab)}, 0
    rows = [[int(x) for x in row] for row in mu]
    if len(rows) != args.r:
        raise InputError(f"need {args.r} mu rows, got {len(rows)}")
    thresholds = threshold_exponents(args.p, args.r, args.i)
    tab = power_table(args.p, args.i, thresholds, rows)
    return {
        "thresholds": list(thresholds),
        "table": jsonio.table_to_doc(tab),
    }, 0


def cmd_unif_sim(args) -> tuple[dict, int]:
    inst = jsonio.instance_from_doc(_load(args.instance))
    try:
        report = simulate(inst)
    except SplittingError as exc:
        return {
            "status": "splitting-infeasible",
            "certificate": jsonio.certificate_to_doc(exc.certificate),
        }, 1
    return {"report": jsonio.simulation_to_doc(report)}, 0 if report.ok else 1


def cmd_transform(args) -> tuple[dict, int]:
    fam = jsonio.family_from_doc(_load(args.file))
    transform = transform_disjoint if args.kind == "disjoint" else transform_tree
    res = transform(fam.system, fam)
    renaming = [
        [jsonio.atom_to_jsonable(new), jsonio.atom_to_jsonable(old)]
        for new, old in sorted(res.old_of_new.items(), key=lambda kv: str(kv[0]))
    ]
    return {
        "document": jsonio.system_to_doc(res.system, res.family),
        "renaming": renaming,
    }, 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lamsys",
        description="finite-scale systems, freeness certificates, witness equations, uniformization tables",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check skeleton/family/system invariants")
    p.add_argument("file")
    p.add_argument("--structure", action="store_true", help="also run the structure checks")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check-free", help="transversal or Hall certificate for the family")
    p.add_argument("file")
    p.add_argument("--k", type=int, default=None, help="check subfamilies of size below k")
    p.set_defaults(func=cmd_check_free)

    p = sub.add_parser("reshuffle", help="search for a reshuffling order")
    p.add_argument("file")
    p.add_argument("--alpha", type=int, default=-1)
    p.add_argument("--fresh", type=int, default=1)
    p.add_argument("--budget", type=int, default=200_000)
    p.set_defaults(func=cmd_reshuffle)

    p = sub.add_parser("build-group", help="chain-group presentation and diagnostics")
    p.add_argument("--spec", required=True)
    p.add_argument("--m-max", type=int, default=None, help="divisibility evidence depth")
    p.set_defaults(func=cmd_build_group)

    p = sub.add_parser("build-G", help="witness-group presentation")
    p.add_argument("--system", required=True)
    p.add_argument("--variant", default=None, help="keep only finals whose first index is listed")
    p.set_defaults(func=cmd_build_g)

    p = sub.add_parser("solve-witness", help="solve the witness equations for a coloring")
    p.add_argument("--system", required=True)
    p.add_argument("--c", required=True)
    p.set_defaults(func=cmd_solve_witness)

    p = sub.add_parser("basis", help="enumerate and verify a segment-quotient basis")
    p.add_argument("--system", required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.add_argument("--fresh", type=int, default=1)
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("unif-table", help="residue separation table")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--i", type=int, default=None, help="power block index (omit for the prime table)")
    p.add_argument("--mu", default=None, help="JSON mu data")
    p.set_defaults(func=cmd_unif_table)

    p = sub.add_parser("unif-sim", help="run the chain simulation on an instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_unif_sim)

    p = sub.add_parser("transform", help="apply a normalizing transform to a family document")
    p.add_argument("file")
    p.add_argument("--kind", choices=("disjoint", "tree"), required=True)
    p.set_defaults(func=cmd_transform)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    inputs = {
        key: getattr(args, key)
        for key in ("file", "spec", "system", "c", "instance")
        if hasattr(args, key)
    }
    params = {
        key: getattr(args, key)
        for key in ("k", "alpha", "beta", "fresh", "budget", "m_max", "variant", "p", "r", "i", "mu", "kind", "structure")
        if hasattr(args, key)
    }
    try:
        payload, code = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    doc = {"manifest": _manifest(args.subcommand, inputs, params), **payload}
    sys.stdout.write(dump(doc))
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
