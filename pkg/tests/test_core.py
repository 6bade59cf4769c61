import math

import pytest

from bump_auction.core import (
    Bidder, Event, MechanismParams, Outcome, OutcomeError, Scenario, ScenarioError, Thresholds,
    fmt, make_scenario, total_utility, utility,
)
from bump_auction.mechanism import run


def _outcome(params, survivors=None, bumped=None, rejected=()):
    return Outcome(params, dict(survivors or {}), dict(bumped or {}), list(rejected), {}, [], {})


class TestParams:
    def test_valid(self):
        p = MechanismParams(0.25, 1.0)
        assert (p.alpha, p.gamma) == (0.25, 1.0)

    @pytest.mark.parametrize("alpha,gamma", [(0.5, 1.0), (0.6, 1.0), (0.0, 1.0), (-0.1, 1.0), (0.1, 0.0), (0.1, -1.0)])
    def test_rejects(self, alpha, gamma):
        with pytest.raises(ScenarioError):
            MechanismParams(alpha, gamma)

    def test_message_names_the_bound(self):
        with pytest.raises(ScenarioError, match=r"alpha must be < gamma/\(1\+gamma\)"):
            MechanismParams(0.6, 1.0)


class TestScenario:
    def test_choice_set_normalised(self):
        b = Bidder("a", 1, 1.0, ("s2", "s1", "s1"))
        assert b.choice_set == ("s1", "s2")

    def test_true_value_defaults(self):
        sc = make_scenario(["s"], [("a", 3.0, ["s"]), ("x", 1.0, ["s"], None, "speculator")])
        assert sc.bidder("a").true_value == 3.0
        assert sc.bidder("x").true_value == 0.0

    @pytest.mark.parametrize(
        "rows,path",
        [
            ([("a", 1, ["s"]), ("a", 2, ["s"])], "bidders[1].id"),
            ([("dummy:s", 1, ["s"])], "bidders[0].id"),
            ([("a", -1, ["s"])], "bidders[0].bid"),
            ([("a", math.inf, ["s"])], "bidders[0].bid"),
            ([("a", 1, [])], "bidders[0].choice_set"),
            ([("a", 1, ["zz"])], "bidders[0].choice_set"),
            ([("a", 1, ["s"], 1.0, "speculator")], "bidders[0].true_value"),
            ([("a", 1, ["s"], 1.0, "dummy")], "bidders[0].kind"),
        ],
    )
    def test_validation_paths(self, rows, path):
        with pytest.raises(ScenarioError) as exc:
            make_scenario(["s"], rows)
        assert exc.value.path == path

    def test_arrival_gap(self):
        with pytest.raises(ScenarioError, match="arrival"):
            Scenario(("s",), (Bidder("a", 2, 1.0, ("s",)),))

    def test_default_epsilon(self):
        assert make_scenario(["s"], []).min_bid_epsilon == 1e-6

    def test_with_bid_keeps_others(self):
        sc = make_scenario(["s"], [("a", 1, ["s"]), ("b", 2, ["s"])])
        sc2 = sc.with_bid("a", 5.0)
        assert sc2.bidder("a").bid == 5.0 and sc2.bidder("b").bid == 2.0 and sc.bidder("a").bid == 1.0


class TestUtility:
    def test_rejected_is_zero(self, params):
        b = Bidder("r", 1, 3.0, ("s",), 7.0)
        assert utility(b, _outcome(params, rejected=["r"])) == 0.0

    def test_bumped_truthful_is_exactly_zero(self, params):
        b = Bidder("b", 1, 4.0, ("s",), 4.0)
        assert utility(b, _outcome(params, bumped={"b": 0.25 * 4.0})) == 0.0

    def test_survivor(self, params):
        b = Bidder("w", 1, 10.0, ("s",), 10.0)
        assert utility(b, _outcome(params, survivors={"w": 6.0})) == 4.0

    def test_unknown_bidder(self, params):
        with pytest.raises(OutcomeError):
            utility(Bidder("z", 1, 1.0, ("s",)), _outcome(params))

    def test_total_all_rejected(self, params):
        sc = make_scenario(["s"], [("a", 1, ["s"]), ("b", 1, ["s"])])
        assert total_utility(sc, _outcome(params, rejected=["a", "b"])) == 0.0

    def test_total_single_survivor(self, params):
        sc = make_scenario(["s"], [("a", 10, ["s"])])
        assert total_utility(sc, _outcome(params, survivors={"a": 6.0})) == 4.0


class TestOutcomeInvariants:
    def test_partition_and_payments(self, params):
        sc = make_scenario(["s1", "s2"], [("a", 1, ["s1"]), ("b", 3, ["s1", "s2"]), ("c", 7, ["s1"]), ("d", 2, ["s2"])])
        out = run(sc, params)
        groups = [set(out.survivors), set(out.bumped), set(out.rejected)]
        assert sum(map(len, groups)) == sc.n and set().union(*groups) == {b.id for b in sc.arrivals}
        for i, pay in out.bumped.items():
            assert pay == params.alpha * sc.bidder(i).bid
        assert out.seller_net_revenue == math.fsum(out.survivors.values()) - math.fsum(out.bumped.values())

    def test_events_ordered_and_bump_after_accept(self, params):
        sc = make_scenario(["s"], [("a", 1, ["s"]), ("b", 3, ["s"]), ("c", 7, ["s"])])
        out = run(sc, params)
        times = [e.time for e in out.events]
        assert times == sorted(times)
        for e in out.events:
            if e.kind == "bumped":
                acc = next(x for x in out.events if x.kind == "accepted" and x.subject == e.subject)
                assert acc.time < e.time


def test_event_line_format():
    assert Event(3, "bumped", "b1", "b2", 0.25).line() == "t=3 BUMP bidder=b1 by=b2 pay=0.25"
    assert Event(1, "rejected", "x").line() == "t=1 REJECT bidder=x"


def test_fmt_is_fixed_precision():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(0.0) == "0"
    assert fmt(32.0) == "32"


def test_thresholds_default_flag():
    assert Thresholds(1.0, 2.0).upward_closed
