"""Problem documents: JSON schema, parsing to objects, canonical serialisation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import jsonschema

from .algebroid import AdaptedPair, Algebroid
from .errors import AlgebroidError
from .modcat import FlatModule, quotient_module, unit_module
from .ring import Derivation, FiniteAlgebra, PolynomialRing, Ring, rational_field

_record = {
    "type": "object",
    "required": ["i", "j", "k", "coeff"],
    "properties": {
        "i": {"type": "integer", "minimum": 0},
        "j": {"type": "integer", "minimum": 0},
        "k": {"type": "integer", "minimum": 0},
        "coeff": {"type": ["string", "integer"]},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["ring", "algebroid", "pair"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "ring": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["rational-field", "finite-dim-algebra", "polynomial-ring"]},
                "basis": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "mul_table": {"type": "array", "items": _record},
                "nilpotent": {"type": "array", "items": {"type": "string"}},
                "variables": {"type": "array", "items": {"type": "string"}},
            },
        },
        "algebroid": {
            "type": "object",
            "required": ["generators"],
            "additionalProperties": False,
            "properties": {
                "generators": {"type": "array", "items": {"type": "string"}},
                "brackets": {"type": "array", "items": _record},
                "anchor": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "additionalProperties": {"type": ["string", "integer"]},
                    },
                },
            },
        },
        "pair": {
            "type": "object",
            "required": ["sub_rank"],
            "additionalProperties": False,
            "properties": {"sub_rank": {"type": "integer", "minimum": 0}},
        },
        "modules": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["rank"],
                "additionalProperties": False,
                "properties": {
                    "rank": {"type": "integer", "minimum": 1},
                    "labels": {"type": "array", "items": {"type": "string"}},
                    "action": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["generator", "matrix"],
                            "additionalProperties": False,
                            "properties": {
                                "generator": {"type": "string"},
                                "matrix": {
                                    "type": "array",
                                    "items": {"type": "array", "items": {"type": ["string", "integer"]}},
                                },
                            },
                        },
                    },
                },
            },
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 0},
                "bound": {"type": ["integer", "null"], "minimum": 0},
                "budget": {"type": ["integer", "null"], "minimum": 1},
            },
        },
    },
}

BUILTIN_MODULES = {"unit": "the unit module 1_A", "quotient": "L/A with the bracket action"}


class DocumentError(AlgebroidError):
    """Malformed or schema-invalid input; ``where`` locates the problem."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass
class Problem:
    ring: Ring
    algebroid: Algebroid
    pair: AdaptedPair
    modules: dict  # name -> FlatModule (possibly invalid; validate separately)
    options: dict = field(default_factory=dict)
    name: str = ""
    description: str = ""
    digest: str = ""

    def module(self, name: str | None) -> FlatModule:
        if name in (None, "unit", "1_A"):
            return unit_module(self.pair.sub)
        if name in ("quotient", "L/A"):
            return quotient_module(self.pair)
        if name not in self.modules:
            raise KeyError(name)
        return self.modules[name]


def load_text(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DocumentError(exc.message, path) from exc
    return doc


def digest(text: str | bytes) -> str:
    data = text.encode() if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def _parse(ring: Ring, value, where: str):
    try:
        return ring.parse(str(value))
    except (AlgebroidError, ValueError, ZeroDivisionError) as exc:
        raise DocumentError(f"cannot parse coefficient {value!r} ({exc})", where) from exc


def build_ring(desc: dict) -> Ring:
    kind = desc["kind"]
    if kind == "rational-field":
        return rational_field()
    if kind == "polynomial-ring":
        if "variables" not in desc:
            raise DocumentError("polynomial ring needs 'variables'", "ring")
        return PolynomialRing(desc["variables"])
    basis = desc.get("basis")
    if not basis:
        raise DocumentError("finite-dim algebra needs 'basis'", "ring")
    d = len(basis)
    table = [[{} for _ in range(d)] for _ in range(d)]
    given = set()
    for n, rec in enumerate(desc.get("mul_table", [])):
        i, j, k = rec["i"], rec["j"], rec["k"]
        if max(i, j, k) >= d:
            raise DocumentError("basis index out of range", f"ring/mul_table/{n}")
        table[i][j][k] = str(rec["coeff"])
        given.add((i, j))
    for (i, j) in list(given):
        if (j, i) not in given:
            table[j][i] = dict(table[i][j])
    for i in range(d):
        if (0, i) not in given and (i, 0) not in given:
            table[0][i] = {i: "1"}
            table[i][0] = {i: "1"}
    try:
        return FiniteAlgebra(basis, table, desc.get("nilpotent", []))
    except AlgebroidError as exc:
        raise DocumentError(str(exc), "ring") from exc


def build_problem(doc: dict, text: str | None = None) -> Problem:
    ring = build_ring(doc["ring"])
    alg = doc["algebroid"]
    names = alg["generators"]
    n = len(names)
    constants: dict = {}
    for idx, rec in enumerate(alg.get("brackets", [])):
        i, j, k = rec["i"], rec["j"], rec["k"]
        if max(i, j, k) >= n:
            raise DocumentError("generator index out of range", f"algebroid/brackets/{idx}")
        constants.setdefault((i, j), {})[k] = _parse(ring, rec["coeff"], f"algebroid/brackets/{idx}")
    labels = ring.generator_labels()
    anchor = []
    anchor_doc = alg.get("anchor", {})
    for name in anchor_doc:
        if name not in names:
            raise DocumentError(f"unknown generator {name!r}", "algebroid/anchor")
    for name in names:
        images = anchor_doc.get(name, {})
        for lab in images:
            if lab not in labels:
                raise DocumentError(f"unknown ring generator {lab!r}", f"algebroid/anchor/{name}")
        anchor.append(Derivation(ring, [
            _parse(ring, images[lab], f"algebroid/anchor/{name}/{lab}") if lab in images else ring.zero
            for lab in labels
        ]))
    L = Algebroid.from_constants(ring, n, constants, anchor, names)
    p = doc["pair"]["sub_rank"]
    if p > n:
        raise DocumentError(f"sub_rank {p} exceeds rank {n}", "pair/sub_rank")
    pair = AdaptedPair(L, p)
    modules = {}
    for mname, mdoc in doc.get("modules", {}).items():
        if mname in BUILTIN_MODULES or mname in ("1_A", "L/A"):
            raise DocumentError("module name is reserved", f"modules/{mname}")
        m = mdoc["rank"]
        mats = [[[ring.zero] * m for _ in range(m)] for _ in range(p)]
        for idx, act in enumerate(mdoc.get("action", [])):
            where = f"modules/{mname}/action/{idx}"
            g = act["generator"]
            if g not in names[:p]:
                raise DocumentError(f"{g!r} is not a generator of the subalgebroid", where)
            M = act["matrix"]
            if len(M) != m or any(len(row) != m for row in M):
                raise DocumentError(f"matrix must be {m}x{m}", where)
            mats[names.index(g)] = [[_parse(ring, c, where) for c in row] for row in M]
        try:
            sub = pair.sub
        except AlgebroidError as exc:
            raise DocumentError(str(exc), "pair") from exc
        modules[mname] = FlatModule(sub, m, mats, labels=mdoc.get("labels"))
    return Problem(ring, L, pair, modules, dict(doc.get("options", {})), doc.get("name", ""),
                   doc.get("description", ""), digest(text) if text is not None else "")


def parse_document(text: str) -> Problem:
    return build_problem(load_text(text), text)


def load_problem(path) -> Problem:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DocumentError("input is not UTF-8", f"byte {exc.start}") from exc
    return parse_document(text)


# ---------------------------------------------------------------------------
# canonical serialisation


def problem_to_doc(problem: Problem) -> dict:
    ring = problem.ring
    if isinstance(ring, PolynomialRing):
        rdoc = {"kind": "polynomial-ring", "variables": list(ring.variables)}
    elif ring.dim == 1:
        rdoc = {"kind": "rational-field"}
    else:
        recs = []
        for i in range(ring.dim):
            for j in range(ring.dim):
                for k, c in sorted(ring.table[i][j].items()):
                    recs.append({"i": i, "j": j, "k": k, "coeff": str(c)})
        rdoc = {"kind": "finite-dim-algebra", "basis": list(ring.labels), "mul_table": recs}
        if ring.nilpotent:
            rdoc["nilpotent"] = list(ring.nilpotent)
    L = problem.algebroid
    brackets = []
    for i in range(L.rank):
        for j in range(L.rank):
            for k, c in enumerate(L.brackets[i][j]):
                if c:
                    brackets.append({"i": i, "j": j, "k": k, "coeff": str(c)})
    labels = ring.generator_labels()
    anchor = {}
    for name, rho in zip(L.names, L.anchor):
        imgs = {lab: str(im) for lab, im in zip(labels, rho.images) if im}
        if imgs:
            anchor[name] = imgs
    doc = {
        "ring": rdoc,
        "algebroid": {"generators": list(L.names), "brackets": brackets, "anchor": anchor},
        "pair": {"sub_rank": problem.pair.p},
    }
    if problem.name:
        doc["name"] = problem.name
    if problem.description:
        doc["description"] = problem.description
    if problem.modules:
        mods = {}
        for mname, E in sorted(problem.modules.items()):
            actions = []
            for g, M in enumerate(E.matrices):
                if any(c for row in M for c in row):
                    actions.append({"generator": L.names[g], "matrix": [[str(c) for c in row] for row in M]})
            mods[mname] = {"rank": E.rank, "labels": list(E.labels), "action": actions}
        doc["modules"] = mods
    if problem.options:
        doc["options"] = dict(sorted(problem.options.items()))
    return doc


def serialize(problem: Problem) -> str:
    return json.dumps(problem_to_doc(problem), sort_keys=True, indent=2) + "\n"
