"""JSON case files: schema, loading with full error lists, serialisation.

Layout (all MW / $ units)::

    {
      "meta": {"name": "...", "periods": T, "description": "..."},
      "buses": ["1", "2", ...],
      "lines": [{"id", "from", "to", "reactance", "limit",
                 "scenario_limits": {"<scenario id>": MW}}],
      "generators": [{"id", "bus", "energy_bid", "up_reserve_bid",
                      "down_reserve_bid", "redispatch_up_price",
                      "redispatch_down_price", "p_min", "p_max",
                      "up_reserve_cap", "down_reserve_cap",
                      "ramp_up", "ramp_down"}],
      "loads": [{"id", "bus", "max_demand", "shed_price"}],
      "load_coefficients": [c_1, ..., c_T],
      "scenarios": [{"id", "probability", "outages": [line ids],
                     "fluctuation": {"percent": {"<load>": pct},
                                     "default_percent": pct}
                                  | {"explicit": [[MW per load] per period]}}],
      "initial_state": {"g": {"<gen>": MW}, "r_up": {...}, "r_down": {...}},
      "options": {"slack_bus": "1"}
    }
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import jsonschema

from .case import Generator, InitialState, Load, MarketCase, case_issues, case_warnings
from .errors import (
    IslandingOutage,
    Issue,
    ParseError,
    ScenarioError,
    SchemaError,
    SemanticError,
    UnknownLine,
)
from .network import Grid, Line, apply_outages
from .scenarios import (
    ExplicitFluctuation,
    NonBaseScenario,
    PercentRule,
    ScenarioSet,
    materialize_fluctuations,
    scenario_set_issues,
)

logger = logging.getLogger(__name__)

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_ID = {"type": "string", "minLength": 1}
_GEN_FIELDS = ("energy_bid", "up_reserve_bid", "down_reserve_bid", "redispatch_up_price",
               "redispatch_down_price", "p_min", "p_max", "up_reserve_cap", "down_reserve_cap",
               "ramp_up", "ramp_down")


def _obj(props, required, extra=False):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": extra}


CASE_SCHEMA = {
    "type": "object",
    "required": ["meta", "buses", "lines", "generators", "loads", "load_coefficients"],
    "additionalProperties": False,
    "properties": {
        "meta": _obj({"name": {"type": "string"}, "periods": {"type": "integer", "minimum": 1},
                      "description": {"type": "string"}}, ["name", "periods"]),
        "buses": {"type": "array", "items": _ID, "minItems": 1},
        "lines": {"type": "array", "items": _obj(
            {"id": _ID, "from": _ID, "to": _ID, "reactance": _NUM, "limit": _NUM,
             "scenario_limits": {"type": "object", "additionalProperties": _NUM}},
            ["id", "from", "to", "reactance", "limit"])},
        "generators": {"type": "array", "minItems": 1, "items": _obj(
            {"id": _ID, "bus": _ID, **{f: (_NUM if f.endswith(("bid", "price")) else _NONNEG) for f in _GEN_FIELDS}},
            ["id", "bus", *_GEN_FIELDS])},
        "loads": {"type": "array", "items": _obj(
            {"id": _ID, "bus": _ID, "max_demand": _NONNEG, "shed_price": _NUM},
            ["id", "bus", "max_demand", "shed_price"])},
        "load_coefficients": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "scenarios": {"type": "array", "items": _obj(
            {"id": _ID, "probability": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
             "outages": {"type": "array", "items": _ID},
             "fluctuation": {"oneOf": [
                 _obj({"percent": {"type": "object", "additionalProperties": _NUM},
                       "default_percent": _NUM}, []),
                 _obj({"explicit": {"type": "array", "items": {"type": "array", "items": _NUM}}}, ["explicit"]),
             ]}},
            ["id", "probability"])},
        "initial_state": _obj({k: {"type": "object", "additionalProperties": _NUM}
                               for k in ("g", "r_up", "r_down")}, ["g"]),
        "options": _obj({"slack_bus": _ID}, []),
    },
}


def _path(error):
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def _schema_issues(doc):
    validator = jsonschema.Draft202012Validator(CASE_SCHEMA)
    return [Issue("SchemaError", _path(e), e.message)
            for e in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))]


def _shape_issues(doc):
    """Cross-field length checks the schema language cannot express."""
    issues = []
    T = doc["meta"]["periods"]
    if len(doc["load_coefficients"]) != T:
        issues.append(Issue("SchemaError", "load_coefficients",
                            f"expected {T} coefficients, got {len(doc['load_coefficients'])}"))
    n_loads = len(doc["loads"])
    for i, sc in enumerate(doc.get("scenarios", [])):
        rows = sc.get("fluctuation", {}).get("explicit")
        if rows is None:
            continue
        if len(rows) != T or any(len(r) != n_loads for r in rows):
            issues.append(Issue("SchemaError", f"scenarios/{i}/fluctuation/explicit",
                                f"expected {T} rows of {n_loads} values"))
    return issues


def _scenario(doc):
    fl = doc.get("fluctuation", {})
    if "explicit" in fl:
        rule = ExplicitFluctuation(tuple(tuple(float(v) for v in row) for row in fl["explicit"]))
    else:
        rule = PercentRule(tuple((k, float(v)) for k, v in fl.get("percent", {}).items()),
                           float(fl.get("default_percent", 0.0)))
    return NonBaseScenario(doc["id"], float(doc["probability"]), tuple(doc.get("outages", ())), rule)


def case_from_dict(doc):
    """Assemble a MarketCase from an already schema-valid document."""
    lines = tuple(
        Line(ln["id"], ln["from"], ln["to"], float(ln["reactance"]), float(ln["limit"]),
             tuple((k, float(v)) for k, v in ln.get("scenario_limits", {}).items()))
        for ln in doc["lines"]
    )
    grid = Grid(tuple(doc["buses"]), lines, doc.get("options", {}).get("slack_bus"))
    gens = tuple(Generator(g["id"], g["bus"], *(float(g[f]) for f in _GEN_FIELDS)) for g in doc["generators"])
    loads = tuple(Load(l["id"], l["bus"], float(l["max_demand"]), float(l["shed_price"])) for l in doc["loads"])
    init = None
    if "initial_state" in doc:
        st = doc["initial_state"]
        init = InitialState(*(tuple(float(st.get(key, {}).get(g.id, 0.0)) for g in gens)
                              for key in ("g", "r_up", "r_down")))
    return MarketCase(
        doc["meta"]["name"], grid, gens, loads,
        tuple(float(c) for c in doc["load_coefficients"]),
        ScenarioSet(tuple(_scenario(s) for s in doc.get("scenarios", ()))),
        init, doc["meta"].get("description", ""),
    )


def _semantic_issues(doc, case):
    issues = [Issue("SemanticError", where, msg) for where, msg in case_issues(case)]
    gen_ids = set(case.gen_ids)
    if "initial_state" in doc:
        for key, mapping in doc["initial_state"].items():
            for gid in mapping:
                if gid not in gen_ids:
                    issues.append(Issue("SemanticError", f"initial_state/{key}/{gid}", "unknown generator"))
    issues += [Issue("SemanticError", "scenarios", msg) for msg in scenario_set_issues(case.scenarios)]
    scen_ids = set(case.scenarios.ids)
    for i, ln in enumerate(case.grid.lines):
        for sid, _ in ln.scenario_limits:
            if sid not in scen_ids:
                issues.append(Issue("SemanticError", f"lines/{i}/scenario_limits/{sid}", "unknown scenario"))
    if any(i.where.startswith(("bus", "line", "slack")) for i in issues):
        return issues  # topology broken, outage checks would only add noise
    for i, sc in enumerate(case.scenarios):
        where = f"scenarios/{i}"
        try:
            apply_outages(case.grid, sc.outages)
        except UnknownLine as exc:
            issues.append(Issue("SemanticError", f"{where}/outages", f"unknown line {exc.args[0]}"))
        except IslandingOutage as exc:
            issues.append(Issue("IslandingOutage", f"{where}/outages", str(exc)))
        try:
            materialize_fluctuations(sc, case.profile)
        except ScenarioError as exc:
            issues.append(Issue(type(exc).__name__, f"{where}/fluctuation", str(exc)))
    return issues


def parse_case(doc, strict=False):
    """Validate a decoded JSON document and build the case."""
    issues = _schema_issues(doc)
    if issues:
        raise SchemaError(issues)
    shape = _shape_issues(doc)
    case = case_from_dict(doc)
    issues = shape + _semantic_issues(doc, case)
    warnings = case_warnings(case)
    if strict:
        issues += [Issue("Warning", "case", w) for w in warnings]
    else:
        for w in warnings:
            logger.warning("%s: %s", case.name, w)
    if shape:
        raise SchemaError(issues)
    if issues:
        raise SemanticError(issues)
    return case


def load_case(path, strict=False):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError([Issue("ParseError", f"line {exc.lineno} column {exc.colno}", exc.msg)]) from None
    return parse_case(doc, strict)


def case_to_dict(case):
    doc = {
        "meta": {"name": case.name, "periods": case.periods},
        "buses": list(case.grid.buses),
        "lines": [],
        "generators": [],
        "loads": [{"id": l.id, "bus": l.bus, "max_demand": l.max_demand, "shed_price": l.shed_price}
                   for l in case.loads],
        "load_coefficients": list(case.load_coefficients),
    }
    if case.description:
        doc["meta"]["description"] = case.description
    for ln in case.grid.lines:
        item = {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "reactance": ln.reactance, "limit": ln.limit}
        if ln.scenario_limits:
            item["scenario_limits"] = dict(ln.scenario_limits)
        doc["lines"].append(item)
    for g in case.generators:
        doc["generators"].append({"id": g.id, "bus": g.bus, **{f: getattr(g, f) for f in _GEN_FIELDS}})
    scenarios = []
    for s in case.scenarios:
        item = {"id": s.id, "probability": s.probability, "outages": list(s.outages)}
        rule = s.fluctuation
        if isinstance(rule, ExplicitFluctuation):
            item["fluctuation"] = {"explicit": [list(r) for r in rule.values]}
        else:
            item["fluctuation"] = {"percent": dict(rule.changes), "default_percent": rule.default}
        scenarios.append(item)
    if scenarios:
        doc["scenarios"] = scenarios
    if case.initial_state is not None:
        st = case.initial_state
        doc["initial_state"] = {key: dict(zip(case.gen_ids, getattr(st, key))) for key in ("g", "r_up", "r_down")}
    if case.grid.slack is not None:
        doc["options"] = {"slack_bus": case.grid.slack}
    return doc


def dump_case(case, path):
    Path(path).write_text(json.dumps(case_to_dict(case), indent=2) + "\n")


def load_initial_state(path, case):
    """Initial state from a stand-alone JSON file (``initial_state`` layout)."""
    doc = json.loads(Path(path).read_text())
    doc = doc.get("initial_state", doc)
    unknown = [gid for mapping in doc.values() for gid in mapping if gid not in case.gen_ids]
    if unknown:
        raise SemanticError([Issue("SemanticError", f"initial_state/{gid}", "unknown generator") for gid in unknown])
    return InitialState(*(tuple(float(doc.get(key, {}).get(gid, 0.0)) for gid in case.gen_ids)
                          for key in ("g", "r_up", "r_down")))


def file_sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
