"""The online bump mechanism: arrival loop, thresholds, prices and settlement.

A newcomer ``t`` is compared with the cheapest alive bidder it could replace
(ties: lowest weight, then earliest arrival, then smallest id). It is accepted
when ``(1 + gamma) * w(cheapest) <= w(t)``; the replaced bidder is bumped and
paid ``alpha`` times its own bid. Thresholds are therefore attained: a bid
exactly at the acceptance weight is accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .core import Bidder, Event, MechanismParams, Outcome, Scenario, Thresholds, utility
from .matching import MatchState, alternating_reach, exchange


class ContractError(ValueError):
    """An operation was called on a bidder outside its domain."""


def _rank(b: Bidder):
    return (b.bid, b.arrival_index, b.id)


@dataclass
class StepResult:
    accepted: bool
    state: MatchState
    bumped: Bidder | None = None
    payment: float = 0.0
    cheapest: Bidder | None = None
    moves: list = field(default_factory=list)


def step(state: MatchState, t: Bidder, params: MechanismParams) -> StepResult:
    reached = alternating_reach(state, t)
    # a perfect matching over all slots always leaves someone exchangeable
    assert reached, f"empty exchange set for {t.id!r}; the alive set is not a perfect matching"
    cheapest = min((state.assignment[s] for s in reached), key=_rank)
    if (1 + params.gamma) * cheapest.bid <= t.bid:
        new_state, moves = exchange(state, t, cheapest.id)
        payment = 0.0 if cheapest.is_dummy else params.alpha * cheapest.bid
        return StepResult(True, new_state, cheapest, payment, cheapest, moves)
    return StepResult(False, state, None, 0.0, cheapest)


def _play(arrivals: Sequence[Bidder], params: MechanismParams, state: MatchState) -> MatchState:
    for t in arrivals:
        state = step(state, t, params).state
    return state


def _prefix_state(scenario: Scenario, params: MechanismParams, index: int) -> MatchState:
    return _play(scenario.arrivals[:index], params, MatchState.initial(scenario.slots))


def _position(scenario: Scenario, bidder_id: str) -> int:
    for k, b in enumerate(scenario.arrivals):
        if b.id == bidder_id:
            return k
    raise ContractError(f"no bidder {bidder_id!r} in scenario")


def acceptance_weight(scenario: Scenario, params: MechanismParams, bidder_id: str) -> float:
    k = _position(scenario, bidder_id)
    state = _prefix_state(scenario, params, k)
    reached = alternating_reach(state, scenario.arrivals[k])
    return (1 + params.gamma) * min((state.assignment[s] for s in reached), key=_rank).bid


def candidate_bids(scenario: Scenario, params: MechanismParams, bidder_id: str) -> list[float]:
    """Every value a counterfactual bid of ``bidder_id`` is ever compared against."""
    g = 1 + params.gamma
    others = [b.bid for b in scenario.arrivals if b.id != bidder_id] + [0.0]
    cands = {0.0, g * max(others)}
    for w in others:
        cands.update((w, w / g, g * w))
    return sorted(cands)


def probe_points(cands: Sequence[float]) -> list[tuple[float, float]]:
    """(probe bid, infimum it stands for): each candidate, each gap midpoint, one point above."""
    points = []
    for lo, hi in zip(cands, cands[1:]):
        points.append((lo, lo))
        points.append(((lo + hi) / 2, lo))
    points.append((cands[-1], cands[-1]))
    points.append((2 * cands[-1] + 1, cands[-1]))
    return points


def survival_profile(
    scenario: Scenario, params: MechanismParams, bidder_id: str, state: MatchState | None = None
) -> list[tuple[float, float, bool]]:
    """Survival predicate at every probe point: (probe bid, infimum stand-in, survived)."""
    k = _position(scenario, bidder_id)
    if state is None:
        state = _prefix_state(scenario, params, k)
    me = scenario.arrivals[k]
    rest = scenario.arrivals[k + 1:]
    out = []
    for bid, floor in probe_points(candidate_bids(scenario, params, bidder_id)):
        me_b = me.with_bid(bid)
        first = step(state, me_b, params)
        alive = first.accepted and bidder_id in _play(rest, params, first.state).alive
        out.append((bid, floor, alive))
    return out


def thresholds(
    scenario: Scenario, params: MechanismParams, bidder_id: str, state: MatchState | None = None
) -> Thresholds:
    """Acceptance and survival weights of one bidder, by counterfactual replay."""
    k = _position(scenario, bidder_id)
    if state is None:
        state = _prefix_state(scenario, params, k)
    reached = alternating_reach(state, scenario.arrivals[k])
    ac = (1 + params.gamma) * min((state.assignment[s] for s in reached), key=_rank).bid
    profile = survival_profile(scenario, params, bidder_id, state)
    first = next((j for j, (_, _, alive) in enumerate(profile) if alive), None)
    # bidding (1+gamma) * max of the others always survives
    assert first is not None, f"no surviving bid found for {bidder_id!r}"
    sv = profile[first][1]
    upward_closed = all(alive for _, _, alive in profile[first:])
    assert sv >= ac, (bidder_id, ac, sv)
    return Thresholds(ac, sv, upward_closed)


def survival_weight(scenario: Scenario, params: MechanismParams, bidder_id: str) -> float:
    return thresholds(scenario, params, bidder_id).sv


def _price(th: Thresholds, alpha: float) -> float:
    return th.sv * (1 - alpha) if th.ac < th.sv else th.sv


def price_of(bidder_id: str, outcome: Outcome) -> float:
    if bidder_id not in outcome.survivors:
        raise ContractError(f"{bidder_id!r} did not survive; only survivors are charged")
    return _price(outcome.thresholds[bidder_id], outcome.params.alpha)


def run(scenario: Scenario, params: MechanismParams, all_thresholds: bool = False) -> Outcome:
    """Play every arrival in order and settle the survivors.

    Thresholds are computed for survivors (needed for their prices); pass
    ``all_thresholds`` to also compute them for bumped and rejected bidders.
    """
    scenario.validate()
    state = MatchState.initial(scenario.slots)
    snapshots = []
    events: list[Event] = []
    bumped: dict[str, float] = {}
    bumped_by: dict[str, str] = {}
    rejected: list[str] = []
    for t in scenario.arrivals:
        snapshots.append(state)
        res = step(state, t, params)
        if res.accepted:
            events.append(Event(t.arrival_index, "accepted", t.id, moves=tuple(res.moves)))
            if not res.bumped.is_dummy:
                bumped[res.bumped.id] = res.payment
                bumped_by[res.bumped.id] = t.id
                events.append(Event(t.arrival_index, "bumped", res.bumped.id, t.id, res.payment))
        else:
            rejected.append(t.id)
            events.append(Event(t.arrival_index, "rejected", t.id))
        state = res.state
    final_alive = state.alive
    survivor_ids = [b.id for b in scenario.arrivals if b.id in final_alive]
    wanted = [b.id for b in scenario.arrivals] if all_thresholds else survivor_ids
    ths = {i: thresholds(scenario, params, i, snapshots[_position(scenario, i)]) for i in wanted}
    survivors = {i: _price(ths[i], params.alpha) for i in survivor_ids}
    settle_time = scenario.n + 1
    for i in survivor_ids:
        events.append(Event(settle_time, "settled", i, amount=survivors[i]))
    assignment = {s: b.id for s, b in state.assignment.items()}
    return Outcome(params, survivors, bumped, rejected, ths, events, assignment, bumped_by)


@dataclass
class SettlementReport:
    seller_net_revenue: float
    price_total: float
    bump_total: float
    utilities: dict[str, float]
    effective_efficiency: float


def settle(scenario: Scenario, outcome: Outcome) -> SettlementReport:
    w = {b.id: b.bid for b in scenario.arrivals}
    survivors_weight = math.fsum(w[i] for i in outcome.survivors)
    bumped_weight = math.fsum(w[i] for i in outcome.bumped)
    return SettlementReport(
        outcome.seller_net_revenue,
        math.fsum(outcome.survivors.values()),
        math.fsum(outcome.bumped.values()),
        {b.id: utility(b, outcome) for b in scenario.arrivals},
        survivors_weight - outcome.params.alpha * bumped_weight,
    )
