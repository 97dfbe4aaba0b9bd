"""Bundled example problems and their frozen verdicts.

Regenerate the verdict file after an intentional behaviour change with::

    python3 -m algebroid_pbw.registry --regenerate
"""

from __future__ import annotations

import argparse
import json
from importlib import resources
from pathlib import Path

from .io import Problem, load_problem

VERDICTS_FILE = "expected_verdicts.json"


def _root() -> Path:
    return Path(str(resources.files(__package__)))


def list_fixtures() -> list[str]:
    return sorted(p.stem for p in (_root() / "fixtures").glob("*.json"))


def fixture_path(name: str) -> Path:
    path = _root() / "fixtures" / f"{name}.json"
    if not path.exists():
        raise KeyError(name)
    return path


def load_fixture(name: str) -> Problem:
    return load_problem(fixture_path(name))


def module_names(problem: Problem) -> list[str]:
    return ["unit", "quotient", *sorted(problem.modules)]


def compute_verdicts(name: str) -> dict:
    """Run the main pipeline (and the oracle, on finite rings) on one fixture."""
    from .cli import cmd_dims, cmd_oracle, cmd_pbw
    from .obstruction import alpha_vanishing, tilde_vanishing

    problem = load_fixture(name)
    bound = problem.options.get("bound")
    out: dict = {"modules": {}}
    for mod in module_names(problem):
        E = problem.module(mod)
        row = {
            "alpha_E": alpha_vanishing(problem.pair, E, bound).verdict,
            "tilde_E": tilde_vanishing(problem.pair, E, bound).verdict,
        }
        if E.rank:
            res, _ = cmd_pbw(problem, module=mod)
            row["filtered_iso"] = res["search"]["kind"]
        out["modules"][mod] = row
    dims, _ = cmd_dims(problem)
    out["dims"] = {k: dims[k] for k in ("N", "gr_U", "left_quotient", "neighbourhood")}
    out["alpha"] = out["modules"]["quotient"]["alpha_E"]
    if problem.ring.finite:
        orc, _ = cmd_oracle(problem)
        out["oracle_diff_empty"] = not orc["diff"]
    return out


def expected_verdicts() -> dict:
    with open(_root() / VERDICTS_FILE) as fh:
        return json.load(fh)


def regenerate(path: Path | None = None) -> dict:
    table = {name: compute_verdicts(name) for name in list_fixtures()}
    path = path or _root() / VERDICTS_FILE
    with open(path, "w") as fh:
        json.dump(table, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return table


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(prog="python3 -m algebroid_pbw.registry")
    ap.add_argument("--regenerate", action="store_true", help="recompute and overwrite the verdict file")
    args = ap.parse_args(argv)
    if args.regenerate:
        table = regenerate()
        print(f"wrote verdicts for {len(table)} fixtures")
    else:
        for name in list_fixtures():
            print(name)


if __name__ == "__main__":
    main()
