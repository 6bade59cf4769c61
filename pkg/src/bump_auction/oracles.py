"""Offline benchmarks and inequality checkers for completed runs."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .core import Bidder, Outcome, Scenario, total_utility
from .matching import can_match, find_matching, max_weight_matching
from .strategies import speculator_profit

BRUTE_FORCE_LIMIT = 12
# relative slack absorbing binary64 rounding in sums of up to a few dozen terms
FLOAT_SLACK = 1e-9


class InstanceTooLarge(ValueError):
    pass


def brute_force_opt(
    bidders: Sequence[Bidder], slots: Sequence[str], weights: Mapping[str, float] | None = None
) -> tuple[dict[str, str], float]:
    """Exhaustive optimum over all matchable subsets (test oracle)."""
    if len(bidders) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{len(bidders)} bidders exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    w = {b.id: b.bid for b in bidders} if weights is None else weights
    best, best_w = (), 0.0
    for r in range(1, min(len(bidders), len(slots)) + 1):
        for subset in itertools.combinations(bidders, r):
            total = math.fsum(w[b.id] for b in subset)
            if total > best_w and can_match(subset, slots):
                best, best_w = subset, total
    return (find_matching(best, slots) or {}), best_w


@dataclass
class VcgResult:
    winners: set[str]
    payments: dict[str, float]
    revenue: float
    opt_weight: float


def vcg(bidders: Sequence[Bidder], slots: Sequence[str], weights: Mapping[str, float] | None = None) -> VcgResult:
    """Offline VCG on all bids at once; payments are each winner's externality.

    Payments are evaluated in exact rational arithmetic so that a payment equal
    to some losing bid comes out as exactly that float.
    """
    w = {b.id: b.bid for b in bidders} if weights is None else dict(weights)
    matching, opt_weight = max_weight_matching(bidders, slots, w)
    winners = set(matching.values())
    exact_opt = sum(Fraction(w[i]) for i in winners)
    payments = {}
    for i in sorted(winners):
        rest = [b for b in bidders if b.id != i]
        m_rest, _ = max_weight_matching(rest, slots, w)
        without_i = sum(Fraction(w[k]) for k in m_rest.values())
        payments[i] = float(without_i - (exact_opt - Fraction(w[i])))
    return VcgResult(winners, payments, math.fsum(payments.values()), opt_weight)


def tilde_weights(scenario: Scenario, outcome: Outcome, params=None) -> dict[str, float]:
    """Survivors at their survival weight, everyone else at bid / (1 + gamma)."""
    g = 1 + outcome.params.gamma if params is None else 1 + params.gamma
    return {
        b.id: outcome.thresholds[b.id].sv if b.id in outcome.survivors else b.bid / g
        for b in scenario.arrivals
    }


def constrained_gap(
    bidders: Sequence[Bidder], slots: Sequence[str], weights: Mapping[str, float], required
) -> tuple[float, float]:
    """(best weight with ``required`` forced in, unconstrained best weight)."""
    _, forced = max_weight_matching(bidders, slots, weights, required=required)
    _, free = max_weight_matching(bidders, slots, weights)
    return forced, free


def check_survivors_in_opt_tilde(scenario: Scenario, outcome: Outcome, params=None) -> bool:
    wt = tilde_weights(scenario, outcome, params)
    forced, free = constrained_gap(scenario.arrivals, scenario.slots, wt, list(outcome.survivors))
    return forced == free


def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + FLOAT_SLACK * max(1.0, abs(lhs), abs(rhs))


@dataclass
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    applicable: bool = True

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return not self.applicable or _leq(self.lhs, self.rhs)


@dataclass
class BoundReport:
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def check_bounds(
    scenario: Scenario, outcome: Outcome, params=None, true_values: Mapping[str, float] | None = None
) -> BoundReport:
    """Evaluate every guarantee of the mechanism on one completed run.

    Each check is stored as ``lhs <= rhs``. Conditional guarantees carry
    ``applicable=False`` when their preconditions fail.
    """
    p = outcome.params if params is None else params
    a, g = p.alpha, p.gamma
    bidders = scenario.arrivals
    w = {b.id: b.bid for b in bidders}
    v = {b.id: b.true_value for b in bidders} if true_values is None else dict(true_values)
    w_s = math.fsum(w[i] for i in outcome.survivors)
    w_r = math.fsum(w[i] for i in outcome.bumped)
    w_sv = math.fsum(outcome.thresholds[i].sv for i in outcome.survivors)
    _, opt_w = max_weight_matching(bidders, scenario.slots)
    _, opt_v = max_weight_matching(bidders, scenario.slots, v)
    rev_vcg = vcg(bidders, scenario.slots).revenue
    revenue = outcome.seller_net_revenue
    overbid = all(w[i] >= v[i] for i in w)
    eff_factor = (1 - a - a / g) / ((2 - a - a / g) * (1 + g))
    rev_factor = (1 - a - a / g) / (1 + g)

    wt = tilde_weights(scenario, outcome, p)
    forced, free = constrained_gap(bidders, scenario.slots, wt, list(outcome.survivors))

    report = BoundReport()
    add = report.checks.append
    add(BoundCheck("bumped_weight<=Wsv/gamma", w_r, w_sv / g))
    add(BoundCheck("Wsv<=w(S)", w_sv, w_s))
    add(BoundCheck("OPT<=(1+gamma)w(S)", opt_w, (1 + g) * w_s))
    add(BoundCheck("survivors_in_OPT[w~]", free, forced))
    add(BoundCheck("efficiency_vs_OPT[v]", eff_factor * opt_v, math.fsum(v[i] for i in outcome.survivors),
                   applicable=overbid and total_utility(scenario, outcome) >= 0))
    add(BoundCheck("revenue_vs_VCG", rev_factor * rev_vcg, revenue, applicable=overbid))
    add(BoundCheck("VCG/(1+gamma)<=Wsv", rev_vcg / (1 + g), w_sv))
    add(BoundCheck("effective_efficiency", (1 - a / g) / (1 + g) * opt_w, w_s - a * w_r))
    add(BoundCheck("speculator_profit<=alpha*OPT/gamma", speculator_profit(scenario, outcome), a * opt_w / g))
    return report
