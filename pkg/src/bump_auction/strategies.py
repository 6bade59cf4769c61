"""Speculator models, the worked-example catalog and replay-based verdicts."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .core import ACTUAL, SPECULATOR, MechanismParams, Outcome, Scenario, ScenarioError, make_scenario
from .matching import max_weight_matching
from .mechanism import _play, _position, _prefix_state, candidate_bids, probe_points, run, step, thresholds, _price

DEFAULT_ALPHA = 0.25
DEFAULT_GAMMA = 1.0


def largest_bumpable(w: float, gamma: float) -> float:
    """Largest float x with (1 + gamma) * x <= w, i.e. the highest bid ``w`` still bumps."""
    g = 1 + gamma
    x = w / g
    while g * x > w:
        x = math.nextafter(x, 0.0)
    while g * math.nextafter(x, math.inf) <= w:
        x = math.nextafter(x, math.inf)
    return x


def ladder_depth(x: float, epsilon: float, gamma: float) -> int:
    """The l with x/(1+gamma)^l >= epsilon > x/(1+gamma)^(l+1).

    The closed form 1 + floor(log(x/eps)/log(1+gamma)) overshoots this by one
    whenever the log ratio is not an integer; the inequality is what is kept.
    """
    if not (epsilon > 0 and x >= epsilon):
        raise ValueError(f"need x >= epsilon > 0, got x={x}, epsilon={epsilon}")
    g = 1 + gamma
    l = int(math.floor(math.log(x / epsilon) / math.log(g)))
    while x / g ** (l + 1) >= epsilon:
        l += 1
    while l > 0 and x / g ** l < epsilon:
        l -= 1
    return l


def geometric_bids(x: float, epsilon: float, gamma: float) -> list[float]:
    """Increasing ladder x/(1+gamma)^l, ..., x/(1+gamma), x.

    Each rung is the largest float its successor still bumps, so the ladder
    climbs under float arithmetic for any gamma (for gamma = 1 the rungs are
    exact powers of two times x).
    """
    l = ladder_depth(x, epsilon, gamma)
    bids = [x]
    for _ in range(l):
        bids.append(largest_bumpable(bids[-1], gamma))
    if bids[-1] < epsilon:
        bids.pop()
    return bids[::-1]


@dataclass(frozen=True)
class GeometricSpeculator:
    x: float
    epsilon: float
    gamma: float
    choice_set: tuple[str, ...]
    owner: str

    @property
    def depth(self) -> int:
        return len(self.bids) - 1

    @property
    def bids(self) -> list[float]:
        return geometric_bids(self.x, self.epsilon, self.gamma)

    def rows(self) -> list[tuple]:
        return [(f"{self.owner}.{j}", b, self.choice_set, 0.0, SPECULATOR, self.owner) for j, b in enumerate(self.bids)]


def interleave(ladders: Sequence[GeometricSpeculator]) -> list[tuple]:
    """Rows of several ladders ordered rung by rung, so each rung meets the previous level."""
    rows = [sp.rows() for sp in ladders]
    depth = max((len(r) for r in rows), default=0)
    out = []
    for level in range(depth):
        for r in rows:
            offset = depth - len(r)
            if level >= offset:
                out.append(r[level - offset])
    return out


def speculator_profit(scenario: Scenario, outcome: Outcome, params=None) -> float:
    """Bump payments collected by speculators minus prices paid by surviving speculators."""
    specs = {b.id for b in scenario.arrivals if b.kind == SPECULATOR}
    return math.fsum(p for i, p in outcome.bumped.items() if i in specs) - math.fsum(
        p for i, p in outcome.survivors.items() if i in specs
    )


def profit_by_owner(scenario: Scenario, outcome: Outcome) -> dict[str, float]:
    out: dict[str, float] = {}
    for b in scenario.arrivals:
        if b.kind != SPECULATOR:
            continue
        key = b.owner or b.id
        out[key] = out.get(key, 0.0) + outcome.bumped.get(b.id, 0.0) - outcome.survivors.get(b.id, 0.0)
    return out


def opt_weight(scenario: Scenario, kinds=(ACTUAL, SPECULATOR)) -> float:
    return max_weight_matching([b for b in scenario.arrivals if b.kind in kinds], scenario.slots)[1]


# --------------------------------------------------------------------------
# example catalog


def _params(alpha, gamma) -> MechanismParams:
    return MechanismParams(float(alpha), float(gamma))


def _require(ok: bool, inequality: str):
    if not ok:
        raise ScenarioError(f"example constraint violated: {inequality}")


def tight_chain(k: int = 5, gamma: float = DEFAULT_GAMMA, eps: float = 0.5, alpha: float = DEFAULT_ALPHA):
    """k+2 truthful bidders on one item; bidder i bids (1+gamma)^(i-1), the last (1+gamma)^(k+1) - eps."""
    g = 1 + gamma
    _require(k >= 1, "k >= 1")
    _require(0 < eps < gamma * g ** k, "0 < eps < gamma*(1+gamma)^k")
    bids = [g ** i for i in range(k + 1)] + [g ** (k + 1) - eps]
    rows = [(f"b{i}", w, ["i1"]) for i, w in enumerate(bids, 1)]
    meta = dict(example="tight_chain", k=k, gamma=gamma, eps=eps, alpha=alpha)
    return make_scenario(["i1"], rows, meta=meta), _params(alpha, gamma)


def c11c(C: float = 10.0, order: str = "C_first", speculators: bool = False,
         gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA):
    """Two items, bidders bidding 1 and C on both; optional non-colluding speculators up front."""
    _require(C > 1, "C > 1")
    _require(order in ("C_first", "1_first"), "order in {C_first, 1_first}")
    items = ["i1", "i2"]
    actual = [("C", C, items), ("one", 1.0, items)]
    if order == "1_first":
        actual.reverse()
    rows = []
    if speculators:
        rows += [("s_low", largest_bumpable(1.0, gamma), items, 0.0, SPECULATOR, "s_low"),
                 ("s_high", largest_bumpable(C, gamma), items, 0.0, SPECULATOR, "s_high")]
    meta = dict(example="c11c", C=C, order=order, speculators=speculators, gamma=gamma, alpha=alpha)
    return make_scenario(items, rows + actual, meta=meta), _params(alpha, gamma)


def subopt_spec(w1: float = 1.0, w2: float = 4.0, w3: float = 1.5, plan: str = "none",
                gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA, epsilon: float = 1e-3):
    """b1 on {i1}, b2 on {i2}, b3 on {i1, i2}, arriving in that order.

    plan 'A' blocks b1 with a ladder so that b2 and b3 survive, both ladders
    topped at w(b3)/(1+gamma); 'A_high' is the same but tops the i2 ladder at
    w(b2)/(1+gamma); plan 'B' lets b1 and b2 survive with one ladder in front
    of b2.
    """
    g = 1 + gamma
    _require(w1 < w3 < g * w1, "w(b1) < w(b3) < (1+gamma) w(b1)")
    _require(w2 > 2 * w3, "w(b2) > 2 w(b3)")
    _require(plan in ("none", "A", "A_high", "B"), "plan in {none, A, A_high, B}")
    b1, b2, b3 = ("b1", w1, ["i1"]), ("b2", w2, ["i2"]), ("b3", w3, ["i1", "i2"])
    rows: list[tuple] = []
    if plan in ("A", "A_high"):
        top = largest_bumpable(w3, gamma)
        top2 = largest_bumpable(w2, gamma) if plan == "A_high" else top
        rows += GeometricSpeculator(top, epsilon, gamma, ("i1",), "sigma1").rows() + [b1]
        rows += GeometricSpeculator(top2, epsilon, gamma, ("i2",), "sigma2").rows() + [b2, b3]
    elif plan == "B":
        rows += [b1] + GeometricSpeculator(largest_bumpable(w2, gamma), epsilon, gamma, ("i2",), "sigma2").rows()
        rows += [b2, b3]
    else:
        rows = [b1, b2, b3]
    meta = dict(example="subopt_spec", w1=w1, w2=w2, w3=w3, plan=plan, gamma=gamma, alpha=alpha)
    return make_scenario(["i1", "i2"], rows, epsilon, meta), _params(alpha, gamma)


def sacrifice(k: int = 5, C: float = 100.0, plan: str = "sacrifice", gamma: float = DEFAULT_GAMMA,
              alpha: float = DEFAULT_ALPHA, epsilon: float = 1e-3):
    """k items; k ladders of speculators, then k-1 bidders at C and one bidder at 1, all on every item.

    plan 'sacrifice' tops the ladders at C/(1+gamma), so one speculator ends up
    surviving; 'no_survivor' tops them at 1/(1+gamma).
    """
    _require(k >= 2, "k >= 2")
    _require(C > 1, "C > 1")
    _require(plan in ("sacrifice", "no_survivor"), "plan in {sacrifice, no_survivor}")
    items = [f"i{j}" for j in range(1, k + 1)]
    top = largest_bumpable(C if plan == "sacrifice" else 1.0, gamma)
    ladders = [GeometricSpeculator(top, epsilon, gamma, tuple(items), f"sigma{j}") for j in range(1, k + 1)]
    rows = interleave(ladders)
    rows += [(f"C{j}", C, items) for j in range(1, k)] + [("one", 1.0, items)]
    meta = dict(example="sacrifice", k=k, C=C, plan=plan, gamma=gamma, alpha=alpha)
    return make_scenario(items, rows, epsilon, meta), _params(alpha, gamma)


def deficit(L: float = 20.0, gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA):
    """Early bidder at 1, late bidder at L on one item."""
    _require(L > (1 + gamma) ** 2 / alpha, "L > (1+gamma)^2/alpha")
    meta = dict(example="deficit", L=L, gamma=gamma, alpha=alpha)
    return make_scenario(["i1"], [("e", 1.0, ["i1"]), ("l", L, ["i1"])], meta=meta), _params(alpha, gamma)


def choice_misreport(x: float = 0.05, star_bid: float | None = None, star_choice: Sequence[str] = ("i1",),
                     gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA):
    """B^{-3/2} on both items, then B* (value x for i2) on ``star_choice``, then B^1 bidding 1 on i1."""
    g = 1 + gamma
    low = g ** -1.5
    _require(0 <= x < alpha * low, "x < alpha (1+gamma)^(-3/2)")
    bid = g ** -1.25 if star_bid is None else float(star_bid)
    rows = [("B-3/2", low, ["i1", "i2"]), ("B*", bid, list(star_choice), x), ("B1", 1.0, ["i1"])]
    meta = dict(example="choice_misreport", x=x, star_bid=bid, star_choice=list(star_choice), gamma=gamma, alpha=alpha)
    return make_scenario(["i1", "i2"], rows, meta=meta), _params(alpha, gamma)


def myopic(n: int = 3, x: float = 0.4, response: str = "claimed", gamma: float = DEFAULT_GAMMA,
           alpha: float = DEFAULT_ALPHA):
    """n items, 2n bidders on every item in increasing value order: n at x, n-1 at 1, one at 5.

    response 'truthful' keeps everyone honest; 'grid' applies one round of
    simultaneous best responses of the n low bidders, each computed on the
    truthful profile; 'claimed' has them all bid the highest bid that 5 still
    bumps, 5/(1+gamma).
    """
    g = 1 + gamma
    _require(n >= 2, "n >= 2")
    _require(0 < x < min(1.0, 5 * (1 - alpha)) / g, "x < min{1, 5(1-alpha)}/(1+gamma)")
    _require(response in ("truthful", "grid", "claimed"), "response in {truthful, grid, claimed}")
    items = [f"i{j}" for j in range(1, n + 1)]
    rows = [(f"B{j}", x, items, x) for j in range(1, n + 1)]
    rows += [(f"B{j}", 1.0, items, 1.0) for j in range(n + 1, 2 * n)]
    rows += [(f"B{2 * n}", 5.0, items, 5.0)]
    params = _params(alpha, gamma)
    meta = dict(example="myopic", n=n, x=x, response=response, gamma=gamma, alpha=alpha)
    sc = make_scenario(items, rows, meta=meta)
    low = [f"B{j}" for j in range(1, n + 1)]
    if response == "claimed":
        sc = sc.with_bids({i: largest_bumpable(5.0, gamma) for i in low})
    elif response == "grid":
        sc = myopic_round(sc, params, low)
    return sc, params


CATALOG: dict[str, Callable] = {
    "tight_chain": tight_chain,
    "c11c": c11c,
    "subopt_spec": subopt_spec,
    "sacrifice": sacrifice,
    "deficit": deficit,
    "choice_misreport": choice_misreport,
    "myopic": myopic,
}


def build_example(name: str, **params) -> tuple[Scenario, MechanismParams]:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise ScenarioError(f"unknown example {name!r}; choose from {sorted(CATALOG)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ScenarioError(f"bad parameters for {name}: {exc}") from None


# --------------------------------------------------------------------------
# bid responses


def fate_at(scenario: Scenario, params: MechanismParams, bidder_id: str, bid: float) -> str:
    """'survived', 'bumped' or 'rejected' if ``bidder_id`` bid ``bid`` with everything else fixed."""
    k = _position(scenario, bidder_id)
    first = step(_prefix_state(scenario, params, k), scenario.arrivals[k].with_bid(bid), params)
    if not first.accepted:
        return "rejected"
    return "survived" if bidder_id in _play(scenario.arrivals[k + 1:], params, first.state).alive else "bumped"


def utility_at(scenario: Scenario, params: MechanismParams, bidder_id: str, bid: float, th=None) -> float:
    """Utility of ``bidder_id`` if it bid ``bid`` with everything else fixed."""
    v = scenario.bidder(bidder_id).true_value
    fate = fate_at(scenario, params, bidder_id, bid)
    if fate == "survived":
        if th is None:
            th = thresholds(scenario, params, bidder_id)
        return v - _price(th, params.alpha)
    return params.alpha * (bid - v) if fate == "bumped" else 0.0


def best_response(scenario: Scenario, params: MechanismParams, bidder_id: str) -> tuple[float, float]:
    """Best bid on the probe grid (lowest such bid on ties) and its utility."""
    me = scenario.bidder(bidder_id)
    th = thresholds(scenario, params, bidder_id)
    probes = sorted({b for b, _ in probe_points(candidate_bids(scenario, params, bidder_id))} | {me.true_value})
    best = max(probes, key=lambda b: (utility_at(scenario, params, bidder_id, b, th), -b))
    return best, utility_at(scenario, params, bidder_id, best, th)


def myopic_round(scenario: Scenario, params: MechanismParams, ids: Sequence[str]) -> Scenario:
    """Everyone in ``ids`` switches at once to a best response against the current profile."""
    return scenario.with_bids({i: best_response(scenario, params, i)[0] for i in ids})


# --------------------------------------------------------------------------
# speculation generators


def opt_increasing_speculation(scenario: Scenario, params: MechanismParams, epsilon: float | None = None) -> Scenario:
    """Put one w(i)/(1+gamma)-geometric ladder on N(i) in front of every OPT bidder i."""
    eps = scenario.min_bid_epsilon if epsilon is None else epsilon
    actual = [b for b in scenario.arrivals if b.kind == ACTUAL]
    values = {b.id: b.true_value for b in actual}
    matching, _ = max_weight_matching(actual, scenario.slots, values)
    opt_ids = set(matching.values())
    seq = [b for b in actual if b.id in opt_ids]
    for a, b in zip(seq, seq[1:]):
        if a.true_value > b.true_value:
            raise ScenarioError(f"OPT bidders must arrive in increasing value order ({a.id} before {b.id})")
    rows = []
    for b in scenario.arrivals:
        if b.id in opt_ids and b.bid > 0:
            top = largest_bumpable(b.bid, params.gamma)
            if top >= eps:
                rows += GeometricSpeculator(top, eps, params.gamma, b.choice_set, f"sigma_{b.id}").rows()
        rows.append((b.id, b.bid, b.choice_set, b.true_value, b.kind, b.owner))
    meta = dict(scenario.meta, speculation="opt_increasing")
    return make_scenario(scenario.slots, rows, eps, meta)


def random_scenario(rng: random.Random, max_bidders: int = 8, max_slots: int = 5, speculators: int = 0,
                    epsilon: float = 1e-3) -> Scenario:
    """Truthful actual bidders (w = v) with random choice sets, plus optional random speculator identities."""
    m = rng.randint(1, max_slots)
    slots = [f"s{j}" for j in range(1, m + 1)]
    n = rng.randint(1, max_bidders)
    rows = []
    for j in range(1, n + 1):
        choice = rng.sample(slots, rng.randint(1, m))
        w = round(rng.uniform(0.1, 10.0), 3)
        rows.append((f"a{j}", w, choice, w))
    for j in range(1, speculators + 1):
        choice = rng.sample(slots, rng.randint(1, m))
        if rng.random() < 0.5:
            top = round(rng.uniform(0.05, 10.0), 3)
            ladder = GeometricSpeculator(top, epsilon, 1.0, tuple(choice), f"spec{j}").rows()
        else:
            ladder = [(f"spec{j}.0", round(rng.uniform(0.01, 10.0), 3), choice, 0.0, SPECULATOR, f"spec{j}")]
        pos = rng.randint(0, len(rows))
        rows[pos:pos] = ladder
    return make_scenario(slots, rows, epsilon, {"generator": "random"})


# --------------------------------------------------------------------------
# verdicts


def deficit_verdict(scenario: Scenario, params: MechanismParams) -> dict[str, float]:
    """Seller revenue under the shipped refund alpha*w(j) and under the alternative alpha*sv(j)."""
    out = run(scenario, params, all_thresholds=True)
    counterfactual = math.fsum(out.survivors.values()) - math.fsum(
        params.alpha * out.thresholds[i].sv for i in out.bumped
    )
    return {"shipped_revenue": out.seller_net_revenue, "sv_refund_revenue": counterfactual}


def subopt_verdict(**kw) -> dict[str, float]:
    w2, w3 = kw.get("w2", 4.0), kw.get("w3", 1.5)
    gamma = kw.get("gamma", DEFAULT_GAMMA)
    res = {}
    for plan in ("A", "A_high", "B"):
        sc, p = subopt_spec(plan=plan, **kw)
        out = run(sc, p)
        res[f"plan_{plan}_profit"] = speculator_profit(sc, out)
        res[f"plan_{plan}_survivors"] = sorted(i for i in out.survivors if sc.bidder(i).kind == ACTUAL)
        res["alpha"] = p.alpha
    res["plan_A_cap"] = p.alpha * 2 * w3 / gamma
    res["plan_B_target"] = p.alpha * w2 / gamma
    return res


def sacrifice_verdict(**kw) -> dict[str, float]:
    res = {}
    for plan in ("sacrifice", "no_survivor"):
        sc, p = sacrifice(plan=plan, **kw)
        out = run(sc, p)
        res[plan] = speculator_profit(sc, out)
        res[f"{plan}_speculator_survivors"] = sum(1 for i in out.survivors if sc.bidder(i).kind == SPECULATOR)
    k, C = kw.get("k", 5), kw.get("C", 100.0)
    res["closed_form"] = (k * p.alpha - 1) * C / p.gamma
    return res


def utility_supremum(scenario: Scenario, params: MechanismParams, bidder_id: str) -> tuple[float, float]:
    """Supremum of the bidder's utility over all bids, and a bid at or approaching it.

    Between consecutive candidate bids the outcome class cannot change, so on
    a bumped interval the utility alpha*(b - v) approaches its supremum at the
    interval's right end without reaching it.
    """
    th = thresholds(scenario, params, bidder_id)
    v = scenario.bidder(bidder_id).true_value
    cands = candidate_bids(scenario, params, bidder_id)
    best = (-math.inf, 0.0)
    ends = list(zip(cands, cands[1:])) + [(cands[-1], 2 * cands[-1] + 1)]
    for lo, hi in ends:
        for b in (lo, (lo + hi) / 2):
            best = max(best, (utility_at(scenario, params, bidder_id, b, th), b))
        if fate_at(scenario, params, bidder_id, (lo + hi) / 2) == "bumped":
            best = max(best, (params.alpha * (hi - v), hi))
    return best


def choice_misreport_verdict(x: float = 0.05, gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA) -> dict:
    """B*'s utility from one bid on {i1} only versus its supremum over all bids on {i1, i2}."""
    narrow, p = choice_misreport(x=x, gamma=gamma, alpha=alpha)
    narrow_u = utility_at(narrow, p, "B*", narrow.bidder("B*").bid)
    wide, _ = choice_misreport(x=x, star_choice=("i1", "i2"), gamma=gamma, alpha=alpha)
    sup_u, sup_bid = utility_supremum(wide, p, "B*")
    return {"narrow_utility": narrow_u, "wide_supremum": sup_u, "wide_supremum_bid": sup_bid}
