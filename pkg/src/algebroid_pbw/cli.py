"""``algebroid-pbw`` command line driver.

Exit codes
    validate  0 all valid, 1 violations
    class     0 Vanishes, 1 NonVanishing, 2 Inconclusive
    pbw       0 Exists, 1 NotExists, 2 Inconclusive, 4 budget exceeded
    dims      0, 4 budget exceeded
    oracle    0 empty diff, 1 nonempty diff
    any       3 parse/schema error, unknown module, unsupported backend;
              5 internal inconsistency
    --recheck 0 every certificate verifies, 1 otherwise
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .algebroid import pair_validate
from .envelope import InducedModule, gr_rank, left_quotient, multiset_count
from .errors import AlgebroidError, InternalConsistencyError, ResourceError
from .filtered import filtered_map_report
from .io import DocumentError, Problem, load_problem
from .modcat import NoSolution, module_validate, quotient_module, solve_equivariant
from .neighborhood import a1_quotient, elimination_quotient, free_degree_ranks, oracle_compare, phi_map
from .obstruction import (
    INCONCLUSIVE,
    NONVANISHING,
    VANISHES,
    ObstructionReport,
    alpha_vanishing,
    certificate_from_json,
    certificate_to_json,
    compare_classes,
    extension_middle,
    jet_one,
    promote_to_neighbourhood,
    tilde_vanishing,
    verify_splitting,
)
from .pbwiso import (
    Exists,
    NotExists,
    canonical_map,
    filtered_iso_search,
    lower_support,
    pbw_composite,
    recheck_not_exists,
    symmetric_module,
)
from .ring import ring_validate

SCHEMA_ID = "apbw-report/1"

EXIT_OK, EXIT_NEG, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3, 4, 5


class UsageError(AlgebroidError):
    pass


def _get_module(problem: Problem, name):
    try:
        return problem.module(name)
    except KeyError:
        known = sorted(problem.modules) + ["unit", "quotient"]
        raise UsageError(f"unknown module {name!r} (known: {', '.join(known)})") from None


def _opt(args_value, problem: Problem, key, default=None):
    if args_value is not None:
        return args_value
    return problem.options.get(key, default)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(problem: Problem, **_) -> tuple[dict, int]:
    reports = [ring_validate(problem.ring), problem.algebroid.validate(), pair_validate(problem.pair)]
    closed = not reports[-1].violations
    if closed:
        for name, E in sorted(problem.modules.items()):
            rep = module_validate(E)
            rep.subject = f"module {name}"
            reports.append(rep)
    result = {
        "valid": all(r.ok for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    return result, EXIT_OK if result["valid"] else EXIT_NEG


_VERDICT_EXIT = {VANISHES: EXIT_OK, NONVANISHING: EXIT_NEG, INCONCLUSIVE: EXIT_INCONCLUSIVE}


def cmd_class(problem: Problem, module=None, bound=None, **_) -> tuple[dict, int]:
    name = module or "quotient"
    E = _get_module(problem, name)
    bound = _opt(bound, problem, "bound")
    ra = alpha_vanishing(problem.pair, E, bound)
    rt = tilde_vanishing(problem.pair, E, bound)
    cmp = compare_classes(problem.pair, E, bound)
    lift = None
    if ra.vanishes:
        lift = promote_to_neighbourhood(problem.pair, E, ra)
    if ra.verdict != rt.verdict and INCONCLUSIVE not in (ra.verdict, rt.verdict):
        raise InternalConsistencyError("the two obstruction pipelines disagree")
    result = {
        "module": name,
        "verdict": ra.verdict,
        "alpha": ra.to_json(),
        "tilde": rt.to_json(),
        "comparison": cmp.to_json(),
    }
    if lift is not None:
        result["lift"] = {
            "coset_matrices": [[[str(c) for c in row] for row in M] for M in lift.matrices[problem.pair.p:]],
            "flags": lift.flags,
        }
    return result, _VERDICT_EXIT[ra.verdict]


def _dims(problem: Problem, N: int, budget) -> dict:
    pair = problem.pair
    L = problem.algebroid
    gr = [gr_rank(L, k)[0] for k in range(min(N, 4) + 1)]
    lq = left_quotient(pair, N, budget)
    lq_ranks = [sum(1 for d in lq.degrees if d == k) for k in range(N + 1)]
    try:
        quot = a1_quotient(pair, N, budget=budget)
    except ResourceError as exc:
        exc.partial = {"gr_U": gr, "left_quotient": lq_ranks, "neighbourhood": exc.partial}
        raise
    return {
        "N": N,
        "gr_U": gr,
        "gr_U_expected": [multiset_count(L.rank, k) for k in range(len(gr))],
        "left_quotient": lq_ranks,
        "symmetric_expected": [multiset_count(pair.q, k) for k in range(N + 1)],
        "neighbourhood": quot.ranks,
        "tensor_expected": [pair.q ** k for k in range(N + 1)],
        "free_envelope": free_degree_ranks(L, min(N, 3)),
    }


def cmd_dims(problem: Problem, N=None, budget=None, **_) -> tuple[dict, int]:
    N = _opt(N, problem, "N", 3)
    budget = _opt(budget, problem, "budget")
    return _dims(problem, N, budget), EXIT_OK


def cmd_pbw(problem: Problem, module=None, N=None, bound=None, budget=None, **_) -> tuple[dict, int]:
    pair = problem.pair
    name = module or "unit"
    E = _get_module(problem, name)
    if E.rank == 0:
        raise UsageError(f"module {name!r} has rank 0; pbw needs a nonzero module")
    N = _opt(N, problem, "N", 3)
    bound = _opt(bound, problem, "bound")
    budget = _opt(budget, problem, "budget")
    QA = quotient_module(pair)
    ra = alpha_vanishing(pair, QA, bound)
    re = alpha_vanishing(pair, E, bound)
    rt = tilde_vanishing(pair, E, bound)
    lift = promote_to_neighbourhood(pair, QA, ra) if ra.vanishes else None
    lift_E = promote_to_neighbourhood(pair, E, re) if re.vanishes else None
    result: dict = {"module": name, "N": N, "alpha": ra.to_json(), "alpha_E": re.to_json(),
                    "tilde_E": {"verdict": rt.verdict}}
    result["dims"] = _dims(problem, N, budget)
    if lift is not None:
        result["phi"] = phi_map(pair, lift, N).to_json()
    composite = None
    if lift is not None and lift_E is not None:
        composite = pbw_composite(pair, E, lift, N, lift_E=lift_E, budget=budget)
        result["composite"] = composite.to_json()
    search = filtered_iso_search(pair, E, N, bound, budget)
    result["search"] = _search_json(search)
    neg = None
    if not isinstance(search, Exists) and N != 2:
        neg = filtered_iso_search(pair, E, 2, bound, budget)
        result["search_N2"] = _search_json(neg)
    both = ra.vanishes and re.vanishes
    any_inconclusive = INCONCLUSIVE in (ra.verdict, re.verdict) or search.kind == "Inconclusive"
    consistent = any_inconclusive or (
        both == isinstance(search, Exists)
        and (composite is not None) == both
        and (lift is not None) == ra.vanishes
    )
    result["equivalence"] = {
        "alpha": ra.verdict,
        "alpha_E": re.verdict,
        "tilde_E": rt.verdict,
        "lift_quotient": lift is not None,
        "lift_E": lift_E is not None,
        "composite": "verified" if composite is not None and composite.ok else "not applicable",
        "search": search.kind,
        "consistent": consistent,
    }
    if not consistent:
        raise InternalConsistencyError(f"equivalence table inconsistent: {result['equivalence']}")
    code = {"Exists": EXIT_OK, "NotExists": EXIT_NEG}.get(search.kind, EXIT_INCONCLUSIVE)
    return result, code


def _search_json(search) -> dict:
    if isinstance(search, Exists):
        return {"kind": "Exists", "report": search.report.to_json()}
    if isinstance(search, NotExists):
        return {"kind": "NotExists", "N": search.N, "rank": search.rank,
                "augmented_rank": search.augmented_rank, "filtration_splitting": search.splitting,
                "certificate": certificate_to_json(search.certificate)}
    return {"kind": "Inconclusive", "N": search.N, "bound": search.bound}


# ---------------------------------------------------------------------------
# oracle


def _retraction_exists(middle, sub_rank: int, E) -> bool:
    """Independent split test: an A-linear ``[I | X]`` from the middle onto E."""
    ring = middle.ring
    n = middle.rank
    fixed = [[ring.one if i == j else ring.zero for j in range(n)] for i in range(sub_rank)]
    support = [(i, j) for i in range(sub_rank) for j in range(sub_rank, n)]
    Phi, _ = solve_equivariant(middle, E, fixed, support)
    return Phi is not None


def _oracle_module(pair, E, N, oracle, basis):
    from .modcat import FlatModule

    mats = [oracle.express(basis, a) for a in range(pair.p)]
    return FlatModule(pair.sub, len(basis), mats)


def cmd_oracle(problem: Problem, N=None, **_) -> tuple[dict, int]:
    if not problem.ring.finite:
        raise UsageError("oracle needs a finite-dimensional coefficient ring")
    pair = problem.pair
    N = _opt(N, problem, "N", 3)
    diff: list = []
    modules = [("unit", _get_module(problem, "unit")), ("quotient", quotient_module(pair))]
    modules += sorted(problem.modules.items())
    table: dict = {}
    for name, E in modules:
        m = E.rank
        # neighbourhood quotient
        quot = a1_quotient(pair, N, E)
        orc = elimination_quotient(pair, N, E, mode="neighbourhood")
        for d in oracle_compare(quot, orc):
            diff.append({"module": name, "object": "neighbourhood", **d})
        closed = [pair.q ** k * m for k in range(N + 1)]
        if list(quot.ranks) != closed:
            diff.append({"module": name, "object": "neighbourhood", "what": "closed-form",
                         "main": quot.ranks, "closed_form": closed})
        # induced module
        ind = InducedModule(pair, E, N)
        ind_mod = ind.module()
        iorc = elimination_quotient(pair, N, E, mode="induced")
        main_ranks = [sum(1 for d in ind.degrees if d == k) for k in range(N + 1)]
        if main_ranks != list(iorc.ranks):
            diff.append({"module": name, "object": "induced", "what": "ranks",
                         "main": main_ranks, "oracle": [str(r) for r in iorc.ranks]})
        else:
            for a in range(pair.p):
                M = iorc.express(ind.basis, a)
                if [list(r) for r in M] != [list(r) for r in ind_mod.matrices[a]]:
                    diff.append({"module": name, "object": "induced", "what": "action", "generator": a})
        closed = [multiset_count(pair.q, k) * m for k in range(N + 1)]
        if main_ranks != closed:
            diff.append({"module": name, "object": "induced", "what": "closed-form",
                         "main": main_ranks, "closed_form": closed})
        # obstruction verdict from the oracle's degree-one middle
        ind1 = InducedModule(pair, E, 1)
        o1 = elimination_quotient(pair, 1, E, mode="induced")
        middle = _oracle_module(pair, E, 1, o1, ind1.basis)
        oracle_split = _retraction_exists(middle, m, E)
        main = alpha_vanishing(pair, E)
        if (main.verdict == VANISHES) != oracle_split:
            diff.append({"module": name, "object": "alpha", "what": "verdict",
                         "main": main.verdict, "oracle": VANISHES if oracle_split else NONVANISHING})
        # filtered isomorphism from the oracle's target module
        S, sbasis, sdeg = symmetric_module(pair, E, N)
        target = _oracle_module(pair, E, N, iorc, ind.basis) if main_ranks == list(iorc.ranks) else None
        search = filtered_iso_search(pair, E, N)
        if target is not None:
            Phi0 = canonical_map(sbasis, ind, pair.ring)
            Phi, _ = solve_equivariant(S, target, Phi0, lower_support(sdeg, ind.degrees))
            if (Phi is not None) != isinstance(search, Exists):
                diff.append({"module": name, "object": "filtered-iso", "what": "verdict",
                             "main": search.kind, "oracle": "Exists" if Phi is not None else "NotExists"})
        table[name] = {
            "neighbourhood_ranks": quot.ranks,
            "neighbourhood_oracle": [str(r) for r in orc.ranks],
            "induced_ranks": main_ranks,
            "induced_oracle": [str(r) for r in iorc.ranks],
            "alpha": main.verdict,
            "filtered_iso": search.kind,
        }
    return {"N": N, "table": table, "diff": diff}, EXIT_OK if not diff else EXIT_NEG


# ---------------------------------------------------------------------------
# certificate re-check


def _parse_vec(ring, items):
    return tuple(ring.parse(s) for s in items)


def _recheck_obstruction(problem: Problem, E, data: dict, kind: str) -> bool:
    ext = extension_middle(problem.pair, E) if kind == "alpha" else jet_one(problem.pair, E)
    c = ext.cocycle()
    verdict = data["verdict"]
    rep = ObstructionReport(kind, ext, c, verdict, bound=data.get("bound"))
    if verdict == VANISHES:
        rep.primitive = _parse_vec(problem.ring, data["primitive"])
    elif verdict == NONVANISHING:
        rep.certificate = certificate_from_json(data["certificate"])
    else:
        return True  # nothing to certify
    # the stored cocycle must be the one rebuilt from the document
    stored = data["cocycle"]["values"]
    for item in stored:
        if _parse_vec(problem.ring, item["value"]) != c(*item["args"]):
            return False
    return verify_splitting(rep)


def _recheck_map(problem: Problem, E, data: dict, N: int) -> bool:
    from .envelope import InducedModule as _Ind

    ring = problem.ring
    S, sbasis, sdeg = symmetric_module(problem.pair, E, N)
    ind = _Ind(problem.pair, E, N)
    matrix = [[ring.parse(c) for c in row] for row in data["matrix"]]
    rep = filtered_map_report("recheck", N, S, ind.module(), matrix, sdeg, ind.degrees,
                              gr_expected=lambda j: {ind.index[sbasis[j]]: ring.one})
    return rep.verdicts() == data["verdicts"] and rep.ok


def recheck(problem: Problem, report: dict) -> tuple[dict, int]:
    if report.get("schema") != SCHEMA_ID:
        raise DocumentError("not an apbw report", "schema")
    if report.get("input", {}).get("sha256") not in (None, problem.digest):
        raise DocumentError("report was produced from a different document", "input/sha256")
    cmd = report.get("command")
    res = report.get("result", {})
    checks: dict = {}
    if cmd == "class":
        E = _get_module(problem, res["module"])
        checks["alpha"] = _recheck_obstruction(problem, E, res["alpha"], "alpha")
        checks["tilde"] = _recheck_obstruction(problem, E, res["tilde"], "tilde")
    elif cmd == "pbw":
        E = _get_module(problem, res["module"])
        checks["alpha"] = _recheck_obstruction(problem, quotient_module(problem.pair), res["alpha"], "alpha")
        checks["alpha_E"] = _recheck_obstruction(problem, E, res["alpha_E"], "alpha")
        N = res["N"]
        if "composite" in res:
            checks["composite"] = _recheck_map(problem, E, res["composite"], N)
        for key in ("search", "search_N2"):
            s = res.get(key)
            if not s:
                continue
            if s["kind"] == "Exists":
                checks[key] = _recheck_map(problem, E, s["report"], N)
            elif s["kind"] == "NotExists":
                bound = report.get("options", {}).get("bound")
                checks[key] = recheck_not_exists(problem.pair, E, s["N"],
                                                 certificate_from_json(s["certificate"]), bound)
    else:
        raise DocumentError(f"no certificates to re-check in a {cmd!r} report", "command")
    ok = all(checks.values())
    return {"rechecked": cmd, "checks": checks, "ok": ok}, EXIT_OK if ok else EXIT_NEG


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "validate": cmd_validate,
    "class": cmd_class,
    "pbw": cmd_pbw,
    "dims": cmd_dims,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="algebroid-pbw", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("document")
    ap.add_argument("--module", default=None)
    ap.add_argument("-N", type=int, default=None, dest="N")
    ap.add_argument("--bound", type=int, default=None)
    ap.add_argument("--budget", type=int, default=None)
    ap.add_argument("--format", choices=["json", "text"], default="json")
    ap.add_argument("--recheck", default=None, metavar="REPORT")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def make_report(command: str, problem: Problem | None, options: dict, result, seconds: float,
                status: int, error: str | None = None) -> dict:
    rep = {
        "schema": SCHEMA_ID,
        "tool": {"name": "algebroid-pbw", "version": __version__},
        "command": command,
        "input": {"sha256": problem.digest if problem else None, "name": problem.name if problem else None},
        "options": options,
        "exit_code": status,
        "result": result,
        "timing": {"seconds": round(seconds, 6)},
    }
    if error:
        rep["error"] = error
    return rep


def render_text(report: dict) -> str:
    lines = [f"{report['command']}: exit {report['exit_code']}"]
    if "error" in report:
        lines.append(f"error: {report['error']}")
    res = report.get("result") or {}
    cmd = report["command"]
    if cmd == "validate":
        for r in res.get("reports", []):
            status = "ok" if r["valid"] else f"{len(r['violations'])} violation(s)"
            lines.append(f"  {r['subject']}: {status}")
            for v in r["violations"][:10]:
                lines.append(f"    {v['axiom']} at {v['witness']} {v.get('detail', '')}".rstrip())
    elif cmd == "class":
        lines.append(f"  module {res.get('module')}: alpha {res['alpha']['verdict']}, tilde {res['tilde']['verdict']}")
        lines.append(f"  comparison: {res['comparison']}")
    elif cmd == "pbw":
        for k, v in res.get("equivalence", {}).items():
            lines.append(f"  {k}: {v}")
    elif cmd == "dims":
        for k, v in res.items():
            lines.append(f"  {k}: {v}")
    elif cmd == "oracle":
        lines.append(f"  diff entries: {len(res.get('diff', []))}")
        for name, row in res.get("table", {}).items():
            lines.append(f"  {name}: {row}")
    else:
        lines.append(json.dumps(res, sort_keys=True))
    return "\n".join(lines)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    options = {"module": args.module, "N": args.N, "bound": args.bound, "budget": args.budget}
    start = time.perf_counter()
    problem = None
    command = args.command if not args.recheck else "recheck"
    try:
        problem = load_problem(args.document)
        if args.recheck:
            with open(args.recheck) as fh:
                try:
                    prior = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise DocumentError(exc.msg, f"report line {exc.lineno} column {exc.colno}") from exc
            result, status = recheck(problem, prior)
        else:
            if args.command != "validate":
                _require_valid(problem)
            result, status = COMMANDS[args.command](problem, **options)
        error = None
    except (DocumentError, UsageError, OSError) as exc:
        result, status, error = None, EXIT_INPUT, str(exc)
    except ResourceError as exc:
        result, status, error = {"partial": exc.partial}, EXIT_BUDGET, str(exc)
    except InternalConsistencyError as exc:
        result, status, error = None, EXIT_INTERNAL, str(exc)
    report = make_report(command, problem, options, result, time.perf_counter() - start, status, error)
    if args.format == "json":
        stdout.write(json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n")
    else:
        stdout.write(render_text(report) + "\n")
    return status


def _require_valid(problem: Problem):
    result, status = cmd_validate(problem)
    if status != EXIT_OK:
        bad = [r["subject"] for r in result["reports"] if not r["valid"]]
        raise DocumentError(f"document fails validation ({', '.join(bad)}); run 'validate' for details")


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def main() -> None:  # console script
    sys.exit(run())


if __name__ == "__main__":
    main()
