import csv
import json
import math

import numpy as np
import pytest

from coalfe.cli import main
from coalfe.io import (
    InputFormatError,
    fmt,
    read_pairwise,
    read_table,
    read_value_table,
    write_csv,
    write_pairwise,
    write_value_table,
)
from coalfe.lattice import ValueTable, popcounts
from coalfe.meanfield import PairwiseEnergy, random_pairwise


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def value_file(tmp_path, values, name="v.csv"):
    path = tmp_path / name
    write_value_table(path, ValueTable(np.asarray(values, dtype=float)))
    return path


def energy_file(tmp_path, energies, name="e.csv"):
    path = tmp_path / name
    write_csv(path, ["mask", "energy"], enumerate(energies))
    return path


def unanimity(n):
    v = np.zeros(1 << n)
    v[-1] = 1.0
    return v


class TestFormats:
    def test_fmt_round_trip(self):
        for x in (0.1, 1 / 3, -2.5e-300, math.pi * 1e17):
            assert float(fmt(x)) == x
        assert fmt(True) == "true" and fmt(np.int64(3)) == "3"

    @pytest.mark.parametrize("suffix", [".csv", ".json"])
    def test_value_table_round_trip(self, tmp_path, suffix):
        v = np.concatenate([[0.0], np.random.default_rng(0).normal(size=15)])
        path = value_file(tmp_path, v, "v" + suffix)
        np.testing.assert_array_equal(read_value_table(path).values, v)

    def test_pairwise_round_trip(self, tmp_path):
        e = random_pairwise(5, np.random.default_rng(1))
        write_pairwise(tmp_path / "p.json", e)
        back = read_pairwise(tmp_path / "p.json")
        np.testing.assert_array_equal(back.phi, e.phi)
        np.testing.assert_array_equal(back.psi, e.psi)

    def test_line_endings(self, tmp_path):
        path = write_csv(tmp_path / "x.csv", ["a"], [[1.5]])
        assert path.read_bytes() == b"a\n1.5\n"

    def test_energy_json_key(self, tmp_path):
        path = tmp_path / "e.json"
        path.write_text(json.dumps({"n_agents": 1, "energies": [0.0, 2.0]}))
        np.testing.assert_array_equal(read_table(path, "energy"), [0.0, 2.0])


class TestDiagnostics:
    def test_empty(self, tmp_path):
        (tmp_path / "v.csv").write_text("")
        with pytest.raises(InputFormatError, match=":1: empty"):
            read_value_table(tmp_path / "v.csv")

    def test_bad_header(self, tmp_path):
        (tmp_path / "v.csv").write_text("m,v\n0,0\n1,1\n")
        with pytest.raises(InputFormatError, match=":1: expected header"):
            read_value_table(tmp_path / "v.csv")

    def test_unparseable_line(self, tmp_path):
        (tmp_path / "v.csv").write_text("mask,value\n0,0\n1,abc\n")
        with pytest.raises(InputFormatError, match=":3: cannot parse"):
            read_value_table(tmp_path / "v.csv")

    def test_duplicate_mask(self, tmp_path):
        (tmp_path / "v.csv").write_text("mask,value\n0,0\n0,1\n")
        with pytest.raises(InputFormatError, match=":3: invalid or duplicate"):
            read_value_table(tmp_path / "v.csv")

    def test_incomplete_lattice(self, tmp_path):
        (tmp_path / "v.csv").write_text("mask,value\n0,0\n1,1\n2,1\n")
        with pytest.raises(InputFormatError, match="cover"):
            read_value_table(tmp_path / "v.csv")

    def test_nonzero_empty_coalition(self, tmp_path):
        (tmp_path / "v.csv").write_text("mask,value\n0,1\n1,1\n")
        with pytest.raises(InputFormatError):
            read_value_table(tmp_path / "v.csv")

    def test_bad_json(self, tmp_path):
        (tmp_path / "v.json").write_text('{"values": [0, 1],\n oops}')
        with pytest.raises(InputFormatError, match=":2:"):
            read_value_table(tmp_path / "v.json")

    def test_bad_pairwise(self, tmp_path):
        (tmp_path / "p.json").write_text(json.dumps({"phi": [0, 1], "psi": [[0, 1], [2, 0]]}))
        with pytest.raises(InputFormatError):
            read_pairwise(tmp_path / "p.json")


class TestDividendsCommand:
    def test_unanimity(self, tmp_path):
        vf = value_file(tmp_path, unanimity(3))
        assert main(["dividends", "--values", str(vf), "--out", str(tmp_path / "o")]) == 0
        rows = read_rows(tmp_path / "o" / "dividends.csv")
        nonzero = [r for r in rows if float(r["dividend"]) != 0.0]
        assert [(r["mask"], float(r["dividend"])) for r in nonzero] == [("7", 1.0)]
        syn = read_rows(tmp_path / "o" / "synergy.csv")
        assert [r["label"] for r in syn if r["mask"] == "7"] == ["synergistic"]

    def test_additive(self, tmp_path):
        vf = value_file(tmp_path, popcounts(4).astype(float))
        assert main(["dividends", "--values", str(vf), "--out", str(tmp_path / "o")]) == 0
        eta = [float(r["eta"]) for r in read_rows(tmp_path / "o" / "shapley.csv")]
        assert eta == pytest.approx([1.0] * 4, abs=1e-12)

    def test_empty_file_exit_2(self, tmp_path, capsys):
        (tmp_path / "v.csv").write_text("")
        assert main(["dividends", "--values", str(tmp_path / "v.csv"), "--out", str(tmp_path / "o")]) == 2
        assert "v.csv:1" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["dividends", "--values", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2

    def test_manifest(self, tmp_path):
        vf = value_file(tmp_path, unanimity(2))
        main(["dividends", "--values", str(vf), "--out", str(tmp_path / "o")])
        man = json.loads((tmp_path / "o" / "run_manifest.json").read_text())
        assert man["command"] == "dividends" and man["parameters"]["seed"] == 42
        assert set(man["artifacts"]) == {"dividends.csv", "shapley.csv", "synergy.csv"}


class TestShapleyCommand:
    def test_exact_and_sampled(self, tmp_path):
        vf = value_file(tmp_path, unanimity(3))
        assert main(["shapley", "--values", str(vf), "--out", str(tmp_path / "a")]) == 0
        eta = [float(r["eta"]) for r in read_rows(tmp_path / "a" / "shapley.csv")]
        assert eta == pytest.approx([1 / 3] * 3, abs=1e-15)
        assert main(["shapley", "--values", str(vf), "--permutations", "200", "--out", str(tmp_path / "b")]) == 0
        rows = read_rows(tmp_path / "b" / "shapley.csv")
        assert sum(float(r["eta"]) for r in rows) == pytest.approx(1.0, abs=1e-12)
        assert all("stderr" in r for r in rows)


class TestGibbsCommand:
    def run(self, tmp_path, *args):
        return main(["gibbs", "--out", str(tmp_path / "o"), *args])

    def test_constant_energy_uniform(self, tmp_path):
        ef = energy_file(tmp_path, [1.5] * 8)
        assert self.run(tmp_path, "--energy", str(ef), "--beta", "2") == 0
        probs = [float(r["probability"]) for r in read_rows(tmp_path / "o" / "posterior.csv")]
        assert probs == pytest.approx([1 / 8] * 8, abs=1e-15)

    def test_single_agent(self, tmp_path):
        ef = energy_file(tmp_path, [0.0, math.log(2)])
        assert self.run(tmp_path, "--energy", str(ef), "--beta", "1") == 0
        (row,) = read_rows(tmp_path / "o" / "marginals.csv")
        assert float(row["alpha"]) == pytest.approx(1 / 3, abs=1e-15)
        summary = json.loads((tmp_path / "o" / "free_energy.json").read_text())
        assert summary["neg_log_z_over_beta"] == pytest.approx(-math.log(1.5), abs=1e-15)
        assert summary["free_energy"] == pytest.approx(summary["neg_log_z_over_beta"], abs=1e-12)

    def test_from_game_negates(self, tmp_path):
        vf = value_file(tmp_path, [0.0, math.log(2)])
        assert self.run(tmp_path, "--values", str(vf), "--from-game", "--beta", "1") == 0
        (row,) = read_rows(tmp_path / "o" / "marginals.csv")
        assert float(row["alpha"]) == pytest.approx(2 / 3, abs=1e-15)

    @pytest.mark.parametrize("beta", ["0", "-1"])
    def test_nonpositive_beta(self, tmp_path, beta):
        ef = energy_file(tmp_path, [0.0, 1.0])
        assert self.run(tmp_path, "--energy", str(ef), "--beta", beta) == 2

    def test_config_and_override(self, tmp_path):
        ef = energy_file(tmp_path, [0.0, math.log(2)])
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"energy": str(ef), "beta": -5.0}))
        assert self.run(tmp_path, "--config", str(cfg)) == 2
        assert self.run(tmp_path, "--config", str(cfg), "--beta", "1") == 0

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert self.run(tmp_path, "--config", str(cfg)) == 2


class TestMeanfieldCommand:
    def test_outputs(self, tmp_path):
        write_pairwise(tmp_path / "p.json", random_pairwise(4, np.random.default_rng(2), coupling=0.3))
        assert main(["meanfield", "--pairwise", str(tmp_path / "p.json"), "--beta", "1", "--out", str(tmp_path / "o")]) == 0
        meta = json.loads((tmp_path / "o" / "meanfield.json").read_text())
        assert meta["converged"]
        w = [float(r["weight"]) for r in read_rows(tmp_path / "o" / "attention.csv")]
        assert sum(w) == pytest.approx(1.0, abs=1e-12)

    def test_decoupled_exact(self, tmp_path):
        write_pairwise(tmp_path / "p.json", PairwiseEnergy([0.3, -1.0, 2.0], np.zeros((3, 3))))
        main(["meanfield", "--pairwise", str(tmp_path / "p.json"), "--out", str(tmp_path / "o")])
        gaps = [float(r["gap"]) for r in read_rows(tmp_path / "o" / "comparison.csv")]
        assert max(abs(g) for g in gaps) <= 1e-10

    def test_nonconvergence_exit_3(self, tmp_path):
        write_pairwise(tmp_path / "p.json", random_pairwise(4, np.random.default_rng(2), coupling=3.0))
        code = main(
            ["meanfield", "--pairwise", str(tmp_path / "p.json"), "--beta", "5", "--damping", "1.0",
             "--max-iter", "3", "--out", str(tmp_path / "o")]
        )
        assert code == 3


class TestNashCommand:
    def test_single_agent_zero(self, tmp_path):
        ef = energy_file(tmp_path, [0.0, 0.4])
        assert main(["nash", "--energy", str(ef), "--out", str(tmp_path / "o")]) == 0
        eps = [float(r["epsilon"]) for r in read_rows(tmp_path / "o" / "epsilon_scan.csv")]
        assert eps == [0.0] * 5

    def test_deterministic_and_nonincreasing(self, tmp_path):
        args = ["nash", "--random-agents", "3", "--seed", "11", "--betas", "1", "2", "4", "8"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b"), "--threads", "4"])
        a = (tmp_path / "a" / "epsilon_scan.csv").read_bytes()
        assert a == (tmp_path / "b" / "epsilon_scan.csv").read_bytes()
        eps = [float(r["epsilon"]) for r in read_rows(tmp_path / "a" / "epsilon_scan.csv")]
        assert all(y <= x for x, y in zip(eps, eps[1:]))

    def test_no_source(self, tmp_path):
        assert main(["nash", "--out", str(tmp_path)]) == 2

    def test_bad_threads(self, tmp_path):
        assert main(["nash", "--random-agents", "2", "--threads", "0", "--out", str(tmp_path)]) == 2


class TestReproduceCommand:
    def test_marl_outputs(self, tmp_path, capsys):
        assert main(["reproduce", "marl", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("marl: beta*=") and "analytic 2.594" in out
        names = {p.name for p in tmp_path.iterdir()}
        assert {"marl_samples.csv", "marl_sweep.csv", "marl_summary.json", "summary.json",
                "overlay.csv", "run_manifest.json"} <= names
        summary = json.loads((tmp_path / "marl_summary.json").read_text())
        assert {"domain", "a", "b", "c", "r_squared", "p_value_a", "beta_star", "beta_star_method"} <= set(summary)
        assert len(read_rows(tmp_path / "marl_sweep.csv")) == 15
        assert len(read_rows(tmp_path / "marl_samples.csv")) == 1500

    def test_neural_discrepancy(self, tmp_path, capsys):
        assert main(["reproduce", "neural", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "NOTE" in out and "3.152" in out

    def test_preset_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"presets": {"marl": {"n_runs": 3}}}))
        assert main(["reproduce", "marl", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert len(read_rows(tmp_path / "o" / "marl_samples.csv")) == 45
        cfg.write_text(json.dumps({"presets": {"marl": {"bogus": 1}}}))
        assert main(["reproduce", "marl", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 2

    def test_idempotent_and_seed_sensitive(self, tmp_path):
        for d in ("a", "b"):
            main(["reproduce", "fish", "--out", str(tmp_path / d)])
        main(["reproduce", "fish", "--seed", "7", "--out", str(tmp_path / "c")])
        a = (tmp_path / "a" / "fish_samples.csv").read_bytes()
        assert a == (tmp_path / "b" / "fish_samples.csv").read_bytes()
        assert a != (tmp_path / "c" / "fish_samples.csv").read_bytes()
