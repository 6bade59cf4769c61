"""JSON scenario and outcome files.

Scenario file::

    {"slots": ["i1"], "alpha": 0.25, "gamma": 1.0, "epsilon": 1e-6,
     "bidders": [{"id": "b1", "bid": 1.0, "choice_set": ["i1"],
                  "true_value": 1.0, "kind": "actual", "owner": null}],
     "meta": {}}

Bidders are listed in arrival order. Floats are written with ``repr`` so a
file read back reproduces every binary64 value exactly.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import ACTUAL, DEFAULT_EPSILON, SPECULATOR, Bidder, MechanismParams, Outcome, Scenario, ScenarioError

BIDDER_FIELDS = ("id", "bid", "choice_set", "true_value", "kind", "owner")


def _number(obj: dict, key: str, path: str, default=None) -> float:
    if key not in obj:
        if default is None:
            raise ScenarioError(f"missing field {key!r}", path)
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{key} must be a number, got {v!r}", path)
    return float(v)


def scenario_from_dict(data: Any, alpha: float | None = None, gamma: float | None = None,
                       epsilon: float | None = None) -> tuple[Scenario, MechanismParams]:
    """Parse and validate a scenario document; overrides win over file values."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object", "$")
    slots = data.get("slots")
    if not isinstance(slots, list) or not all(isinstance(s, str) for s in slots):
        raise ScenarioError("slots must be a list of strings", "slots")
    a = float(alpha) if alpha is not None else _number(data, "alpha", "alpha")
    g = float(gamma) if gamma is not None else _number(data, "gamma", "gamma")
    eps = float(epsilon) if epsilon is not None else _number(data, "epsilon", "epsilon", DEFAULT_EPSILON)
    params = MechanismParams(a, g)
    rows = data.get("bidders", [])
    if not isinstance(rows, list):
        raise ScenarioError("bidders must be a list", "bidders")
    arrivals = []
    for k, row in enumerate(rows):
        where = f"bidders[{k}]"
        if not isinstance(row, dict):
            raise ScenarioError("bidder must be an object", where)
        extra = set(row) - set(BIDDER_FIELDS)
        if extra:
            raise ScenarioError(f"unknown field(s) {sorted(extra)}", where)
        if not isinstance(row.get("id"), str):
            raise ScenarioError("id must be a string", f"{where}.id")
        choice = row.get("choice_set")
        if not isinstance(choice, list) or not all(isinstance(s, str) for s in choice):
            raise ScenarioError("choice_set must be a list of slot ids", f"{where}.choice_set")
        if len(set(choice)) != len(choice):
            raise ScenarioError("choice_set lists a slot twice", f"{where}.choice_set")
        kind = row.get("kind", ACTUAL)
        bid = _number(row, "bid", f"{where}.bid")
        value = _number(row, "true_value", f"{where}.true_value", 0.0 if kind == SPECULATOR else bid)
        owner = row.get("owner")
        if owner is not None and not isinstance(owner, str):
            raise ScenarioError("owner must be a string or null", f"{where}.owner")
        arrivals.append(Bidder(row["id"], k + 1, bid, tuple(choice), value, kind, owner))
    meta = data.get("meta", {})
    if not isinstance(meta, dict):
        raise ScenarioError("meta must be an object", "meta")
    return Scenario(tuple(slots), tuple(arrivals), eps, meta), params


def scenario_to_dict(scenario: Scenario, params: MechanismParams) -> dict:
    return {
        "slots": list(scenario.slots),
        "alpha": params.alpha,
        "gamma": params.gamma,
        "epsilon": scenario.min_bid_epsilon,
        "bidders": [
            {"id": b.id, "bid": b.bid, "choice_set": list(b.choice_set), "true_value": b.true_value,
             "kind": b.kind, "owner": b.owner}
            for b in scenario.arrivals
        ],
        "meta": dict(scenario.meta),
    }


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def load_scenario(path: str | Path, **overrides) -> tuple[Scenario, MechanismParams]:
    """Read a scenario file. OSError propagates; malformed content raises ScenarioError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "$") from None
    return scenario_from_dict(data, **overrides)


def save_scenario(path: str | Path, scenario: Scenario, params: MechanismParams) -> None:
    Path(path).write_text(dumps(scenario_to_dict(scenario, params)), encoding="utf-8")


def outcome_to_dict(scenario: Scenario, outcome: Outcome) -> dict:
    """Deterministic outcome document: bidders in arrival order, slots in scenario order."""
    order = [b.id for b in scenario.arrivals]
    return {
        "alpha": outcome.params.alpha,
        "gamma": outcome.params.gamma,
        "seller_net_revenue": outcome.seller_net_revenue,
        "survivors": [{"id": i, "price": outcome.survivors[i]} for i in order if i in outcome.survivors],
        "bumped": [{"id": i, "payment": outcome.bumped[i], "by": outcome.bumped_by.get(i)}
                   for i in order if i in outcome.bumped],
        "rejected": [i for i in order if i in outcome.rejected],
        "thresholds": [
            {"id": i, "ac": outcome.thresholds[i].ac, "sv": outcome.thresholds[i].sv}
            for i in order if i in outcome.thresholds
        ],
        "assignment": {s: outcome.assignment[s] for s in scenario.slots},
        "events": [e.line() for e in outcome.events],
    }


def check_outcome_doc(doc: dict, scenario: Scenario) -> None:
    """Structural invariants of an outcome document (used by the round-trip check)."""
    ids = [b.id for b in scenario.arrivals]
    groups = [{r["id"] for r in doc["survivors"]}, {r["id"] for r in doc["bumped"]}, set(doc["rejected"])]
    if sum(map(len, groups)) != len(ids) or set().union(*groups) != set(ids):
        raise AssertionError("every bidder must have exactly one status")
    for r in doc["survivors"]:
        th = next(t for t in doc["thresholds"] if t["id"] == r["id"])
        if not (0 <= th["ac"] <= th["sv"] <= scenario.bidder(r["id"]).bid and r["price"] <= th["sv"]):
            raise AssertionError(f"threshold order broken for {r['id']}")
    for r in doc["bumped"]:
        if r["payment"] != doc["alpha"] * scenario.bidder(r["id"]).bid:
            raise AssertionError(f"bump payment of {r['id']} is not alpha * bid")
