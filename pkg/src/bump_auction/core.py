"""Domain types shared by the mechanism, the oracles and the CLI.

Bids, values and payments are plain binary64 floats. A bidder's choice set is
stored as a sorted tuple of slot ids so that every search over it is
deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

ACTUAL = "actual"
SPECULATOR = "speculator"
DUMMY = "dummy"
KINDS = (ACTUAL, SPECULATOR, DUMMY)

DUMMY_PREFIX = "dummy:"
DEFAULT_EPSILON = 1e-6


class ScenarioError(ValueError):
    """A scenario or parameter set violates its invariants.

    ``path`` names the offending field (``bidders[2].choice_set``) when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class OutcomeError(KeyError):
    """An outcome has no record of the requested bidder."""


@dataclass(frozen=True)
class MechanismParams:
    alpha: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ScenarioError("gamma must be > 0", "gamma")
        if not (0 < self.alpha < self.gamma / (1 + self.gamma)):
            raise ScenarioError("alpha must be < gamma/(1+gamma) and > 0", "alpha")


@dataclass(frozen=True)
class Bidder:
    id: str
    arrival_index: int
    bid: float
    choice_set: tuple[str, ...]
    true_value: float = 0.0
    kind: str = ACTUAL
    owner: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "choice_set", tuple(sorted(set(self.choice_set))))

    @property
    def is_dummy(self) -> bool:
        return self.kind == DUMMY

    def with_bid(self, bid: float) -> "Bidder":
        return replace(self, bid=bid)


def dummy_for(slot: str, slots: Iterable[str]) -> Bidder:
    return Bidder(DUMMY_PREFIX + slot, 0, 0.0, tuple(slots), 0.0, DUMMY)


@dataclass(frozen=True)
class Scenario:
    slots: tuple[str, ...]
    arrivals: tuple[Bidder, ...]
    min_bid_epsilon: float = DEFAULT_EPSILON
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(self, "arrivals", tuple(self.arrivals))
        self.validate()

    def validate(self) -> None:
        if len(set(self.slots)) != len(self.slots):
            raise ScenarioError("duplicate slot id", "slots")
        if not (self.min_bid_epsilon > 0 and math.isfinite(self.min_bid_epsilon)):
            raise ScenarioError("epsilon must be a positive real", "epsilon")
        slot_set = set(self.slots)
        seen = set()
        for k, b in enumerate(self.arrivals):
            where = f"bidders[{k}]"
            if b.id in seen:
                raise ScenarioError(f"duplicate bidder id {b.id!r}", f"{where}.id")
            seen.add(b.id)
            if b.id.startswith(DUMMY_PREFIX):
                raise ScenarioError(f"ids starting with {DUMMY_PREFIX!r} are reserved", f"{where}.id")
            if b.arrival_index != k + 1:
                raise ScenarioError("arrival indices must run 1..n without gaps", f"{where}.arrival_index")
            if b.kind not in (ACTUAL, SPECULATOR):
                raise ScenarioError(f"kind must be actual or speculator, got {b.kind!r}", f"{where}.kind")
            if not (isinstance(b.bid, (int, float)) and math.isfinite(b.bid) and b.bid >= 0):
                raise ScenarioError("bid must be a finite non-negative number", f"{where}.bid")
            if not (math.isfinite(b.true_value) and b.true_value >= 0):
                raise ScenarioError("true_value must be a finite non-negative number", f"{where}.true_value")
            if b.kind == SPECULATOR and b.true_value != 0:
                raise ScenarioError("speculators have true_value 0", f"{where}.true_value")
            if not b.choice_set:
                raise ScenarioError("choice set must be non-empty", f"{where}.choice_set")
            unknown = set(b.choice_set) - slot_set
            if unknown:
                raise ScenarioError(f"unknown slot(s) {sorted(unknown)}", f"{where}.choice_set")

    @property
    def n(self) -> int:
        return len(self.arrivals)

    def dummies(self) -> list[Bidder]:
        return [dummy_for(s, self.slots) for s in self.slots]

    def bidder(self, bidder_id: str) -> Bidder:
        for b in self.arrivals:
            if b.id == bidder_id:
                return b
        raise ScenarioError(f"no bidder {bidder_id!r}")

    def with_bid(self, bidder_id: str, bid: float) -> "Scenario":
        arrivals = tuple(b.with_bid(bid) if b.id == bidder_id else b for b in self.arrivals)
        return replace(self, arrivals=arrivals)

    def with_bids(self, bids: Mapping[str, float]) -> "Scenario":
        arrivals = tuple(b.with_bid(bids[b.id]) if b.id in bids else b for b in self.arrivals)
        return replace(self, arrivals=arrivals)


def make_scenario(
    slots: Sequence[str],
    rows: Iterable[tuple],
    epsilon: float = DEFAULT_EPSILON,
    meta: Mapping[str, object] | None = None,
) -> Scenario:
    """Build a scenario from ``(id, bid, choice_set[, true_value[, kind[, owner]]])`` rows.

    Arrival indices follow row order. A missing true value defaults to the bid
    for actual bidders and to 0 for speculators.
    """
    arrivals = []
    for k, row in enumerate(rows):
        bid_id, bid, choice = row[0], float(row[1]), tuple(row[2])
        kind = row[4] if len(row) > 4 else ACTUAL
        if len(row) > 3 and row[3] is not None:
            value = float(row[3])
        else:
            value = 0.0 if kind == SPECULATOR else bid
        owner = row[5] if len(row) > 5 else None
        arrivals.append(Bidder(bid_id, k + 1, bid, choice, value, kind, owner))
    return Scenario(tuple(slots), tuple(arrivals), epsilon, dict(meta or {}))


@dataclass(frozen=True)
class Event:
    time: int
    kind: str  # accepted | rejected | bumped | settled
    subject: str
    other: str | None = None
    amount: float | None = None
    moves: tuple[tuple[str, str | None, str | None], ...] = ()

    def line(self, trace: bool = False) -> str:
        tag = {"accepted": "ACCEPT", "rejected": "REJECT", "bumped": "BUMP", "settled": "SETTLE"}[self.kind]
        parts = [f"t={self.time}", tag, f"bidder={self.subject}"]
        if self.other is not None:
            parts.append(f"by={self.other}")
        if self.amount is not None:
            parts.append(f"pay={fmt(self.amount)}")
        if trace and self.moves:
            parts.append("moves=" + ",".join(f"{b}:{a or '-'}>{c or '-'}" for b, a, c in self.moves))
        return " ".join(parts)


@dataclass(frozen=True)
class Thresholds:
    ac: float
    sv: float
    upward_closed: bool = True


@dataclass
class Outcome:
    params: MechanismParams
    survivors: dict[str, float]
    bumped: dict[str, float]
    rejected: list[str]
    thresholds: dict[str, Thresholds]
    events: list[Event]
    assignment: dict[str, str]
    bumped_by: dict[str, str] = field(default_factory=dict)

    @property
    def seller_net_revenue(self) -> float:
        return math.fsum(self.survivors.values()) - math.fsum(self.bumped.values())

    def status(self, bidder_id: str) -> str:
        if bidder_id in self.survivors:
            return "survivor"
        if bidder_id in self.bumped:
            return "bumped"
        if bidder_id in self.rejected:
            return "rejected"
        raise OutcomeError(bidder_id)


def utility(bidder: Bidder, outcome: Outcome) -> float:
    """Quasilinear utility of one bidder: value term minus transfer to the seller."""
    if bidder.id in outcome.survivors:
        return bidder.true_value - outcome.survivors[bidder.id]
    if bidder.id in outcome.bumped:
        # transfer is minus the bump payment; the loss is an alpha share of value
        return outcome.bumped[bidder.id] - outcome.params.alpha * bidder.true_value
    if bidder.id in outcome.rejected:
        return 0.0
    raise OutcomeError(f"outcome has no status for bidder {bidder.id!r}")


def total_utility(scenario: Scenario, outcome: Outcome) -> float:
    return math.fsum(utility(b, outcome) for b in scenario.arrivals)


def fmt(x: float) -> str:
    """Fixed 12-significant-digit rendering for reports and logs."""
    if x == 0:
        return "0"
    return format(x, ".12g")
