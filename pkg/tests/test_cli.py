import json
import subprocess
import sys

import pytest

from bump_auction.cli import main
from bump_auction.core import ScenarioError
from bump_auction.io import check_outcome_doc, load_scenario, save_scenario, scenario_from_dict
from bump_auction.strategies import CATALOG, build_example


def _gen(tmp_path, name, *params):
    path = tmp_path / f"{name}.json"
    assert main(["gen-example", name, *params, "--out", str(path)]) == 0
    return path


class TestIo:
    def test_round_trip_exact(self, tmp_path):
        sc, p = build_example("subopt_spec", plan="B")
        save_scenario(tmp_path / "s.json", sc, p)
        sc2, p2 = load_scenario(tmp_path / "s.json")
        assert sc2 == sc and p2 == p

    @pytest.mark.parametrize(
        "doc,path",
        [
            ({"slots": "a", "alpha": 0.25, "gamma": 1}, "slots"),
            ({"slots": ["a"], "gamma": 1}, "alpha"),
            ({"slots": ["a"], "alpha": 0.25, "gamma": 1, "bidders": [{"id": "x", "bid": "1", "choice_set": ["a"]}]},
             "bidders[0].bid"),
            ({"slots": ["a"], "alpha": 0.25, "gamma": 1, "bidders": [{"id": "x", "bid": 1, "choice_set": ["b"]}]},
             "bidders[0].choice_set"),
            ({"slots": ["a"], "alpha": 0.25, "gamma": 1, "bidders": [{"id": "x", "bid": 1, "choice_set": ["a"], "colour": 1}]},
             "bidders[0]"),
            ({"slots": ["a"], "alpha": 0.6, "gamma": 1}, "alpha"),
        ],
    )
    def test_field_paths(self, doc, path):
        with pytest.raises(ScenarioError) as exc:
            scenario_from_dict(doc)
        assert exc.value.path == path

    def test_overrides(self):
        sc, p = scenario_from_dict({"slots": ["a"], "alpha": 0.6, "gamma": 1}, alpha=0.1)
        assert p.alpha == 0.1


class TestCommands:
    def test_run_tight_chain(self, tmp_path, capsys):
        path = _gen(tmp_path, "tight_chain", "k=5", "gamma=1")
        assert main(["run", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["survivors"] == [{"id": "b6", "price": 32.0}]
        assert len(doc["bumped"]) == 5

    def test_run_is_byte_identical(self, tmp_path):
        path = _gen(tmp_path, "sacrifice")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["run", str(path), "--out", str(a)])
        main(["run", str(path), "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_event_log(self, tmp_path):
        path = _gen(tmp_path, "deficit")
        log = tmp_path / "ev.log"
        main(["run", str(path), "--events", str(log), "--out", str(tmp_path / "o.json")])
        assert log.read_text().splitlines() == [
            "t=1 ACCEPT bidder=e",
            "t=2 ACCEPT bidder=l",
            "t=2 BUMP bidder=e by=l pay=0.25",
            "t=3 SETTLE bidder=l pay=2",
        ]

    def test_empty_bidders(self, tmp_path, capsys):
        path = tmp_path / "e.json"
        path.write_text(json.dumps({"slots": ["a"], "alpha": 0.25, "gamma": 1, "bidders": []}))
        assert main(["run", str(path)]) == 0
        assert json.loads(capsys.readouterr().out)["seller_net_revenue"] == 0

    def test_invalid_alpha(self, tmp_path, capsys):
        path = _gen(tmp_path, "deficit")
        assert main(["run", str(path), "--alpha", "0.6"]) == 2
        assert "alpha must be < gamma/(1+gamma)" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json")]) == 1

    def test_broken_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["run", str(path)]) == 2

    def test_thresholds_deficit(self, tmp_path, capsys):
        path = _gen(tmp_path, "deficit")
        assert main(["thresholds", str(path), "--format", "csv"]) == 0
        rows = capsys.readouterr().out.splitlines()
        assert rows == ["id,ac,sv,status", "e,0,10,bumped", "l,2,2,survivor"]

    def test_thresholds_single(self, tmp_path, capsys):
        path = _gen(tmp_path, "deficit")
        assert main(["thresholds", str(path), "l", "--format", "csv"]) == 0
        assert capsys.readouterr().out.splitlines()[1:] == ["l,2,2,survivor"]
        assert main(["thresholds", str(path), "zz"]) == 2

    def test_vcg(self, tmp_path, capsys):
        path = _gen(tmp_path, "tight_chain")
        assert main(["vcg", str(path), "--format", "csv"]) == 0
        assert "b7,63.5,win,32" in capsys.readouterr().out

    def test_bounds_row(self, capsys):
        assert main(["bounds", "--from", "0.25", "--to", "0.25", "--steps", "1", "--n-list", "2,3,5", "--format", "csv"]) == 0
        header, row = capsys.readouterr().out.splitlines()
        cells = dict(zip(header.split(","), row.split(",")))
        assert abs(float(cells["lower_bound"]) - 0.38197) < 1e-5

    def test_verify_random(self, capsys):
        assert main(["verify", "--random", "--seed", "7", "--count", "200"]) == 0
        assert capsys.readouterr().out.endswith("200/200 instances pass\n")

    def test_verify_parallel_same_output(self, capsys):
        main(["verify", "--random", "--seed", "3", "--count", "20"])
        serial = capsys.readouterr().out
        main(["verify", "--random", "--seed", "3", "--count", "20", "--jobs", "2"])
        assert capsys.readouterr().out == serial

    def test_verify_file(self, tmp_path, capsys):
        path = _gen(tmp_path, "tight_chain")
        assert main(["verify", str(path)]) == 0
        assert "bumped_weight<=Wsv/gamma" in capsys.readouterr().out

    def test_gen_example_bad_constraint(self, tmp_path):
        assert main(["gen-example", "deficit", "L=10"]) == 2

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_round_trip_invariants(self, tmp_path, name):
        path = _gen(tmp_path, name)
        out = tmp_path / "o.json"
        assert main(["run", str(path), "--out", str(out)]) == 0
        sc, _ = load_scenario(path)
        check_outcome_doc(json.loads(out.read_text()), sc)


def test_module_entry_point(tmp_path):
    path = _gen(tmp_path, "deficit")
    res = subprocess.run([sys.executable, "-m", "bump_auction", "run", str(path)], capture_output=True, text=True,
                         env={"BUMP_AUCTION_LOG": "info", "PATH": ""})
    assert res.returncode == 0
    assert "t=3 SETTLE bidder=l pay=2" in res.stderr
