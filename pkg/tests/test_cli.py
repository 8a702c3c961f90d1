import json

import pytest

from tailfields.cli import ExperimentConfig, build_parser, config_from_args, main
from tailfields.models import model_to_config, MaxMovingAverage


def run_cli(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse or validation exits
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


class TestMmaTheta:
    def test_exact_table_values(self, capsys):
        code, out, _ = run_cli(["mma-theta"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("method,corner,theta,se")
        values = {
            (row.split(",")[0], row.split(",")[1]): row.split(",")[2]
            for row in lines[1:]
        }
        assert values[("closed-classical", "")] == "0.4"
        assert values[("closed-run", "00")] == "0.64"
        assert values[("closed-run", "11")] == "0.44"
        assert values[("closed-run", "01")] == "0.4"
        assert values[("closed-run", "10")] == "0.6"

    def test_mixture_values(self, capsys):
        code, out, _ = run_cli(
            ["mma-theta", "--mixture-a", "0.6,0.2,0.6,0.1"], capsys
        )
        assert code == 0
        vals = {
            (r.split(",")[0], r.split(",")[1]): r.split(",")[2]
            for r in out.strip().splitlines()[1:]
        }
        assert vals[("closed-mixture-run", "00")] == "0.52"
        assert vals[("closed-mixture-run", "11")] == "0.42"
        assert vals[("closed-mixture-run", "01")] == "0.56"
        assert vals[("closed-mixture-run", "10")] == "0.7"
        assert vals[("closed-mixture-classical", "")] == "0.4"

    def test_malformed_weight_exits_2(self, capsys):
        code, _, err = run_cli(["mma-theta", "--a", "1.3,0,0,0"], capsys)
        assert code == 2

    def test_empirical_within_tolerance(self, capsys):
        code, out, _ = run_cli(
            ["mma-theta", "--empirical", "--n", "200,200", "--r", "10,10",
             "--replicates", "1500", "--seed", "5"],
            capsys,
        )
        assert code == 0
        rows = [r.split(",") for r in out.strip().splitlines()[1:]]
        closed = {(r[0], r[1]): float(r[2]) for r in rows if r[0].startswith("closed")}
        emp = {(r[0], r[1]): float(r[2]) for r in rows if not r[0].startswith("closed")}
        assert abs(emp[("classical", "")] - closed[("closed-classical", "")]) <= 0.06
        for c in ("00", "11", "01", "10"):
            assert abs(emp[("run", c)] - closed[("closed-run", c)]) <= 0.06


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["mma-theta", "--empirical", "--n", "100,100", "--r", "10,10",
             "--replicates", "400", "--seed", "3"],
            ["br-fig1", "--hurst-grid", "0.3,0.7", "--trunc-m", "8",
             "--n-mc", "500", "--seed", "3"],
            ["counterexample", "--n-per-rank", "20000", "--seed", "3"],
        ],
        ids=["mma", "fig1", "counterexample"],
    )
    def test_bytes_identical_across_threads(self, argv, capsys, tmp_path):
        outs = []
        for threads in ("1", "3"):
            path = tmp_path / f"out-{threads}.csv"
            code, _, _ = run_cli(argv + ["--threads", threads, "--out", str(path)], capsys)
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_rerun_identical(self, capsys, tmp_path):
        argv = ["br-theta", "--hurst", "0.6,0.6", "--trunc-m", "8", "--n-mc",
                "400", "--seed", "11"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(argv + ["--out", str(a)], capsys)
        run_cli(argv + ["--out", str(b)], capsys)
        assert a.read_bytes() == b.read_bytes()


class TestBrCommands:
    def test_fig1_monotone_smoke(self, capsys):
        code, out, _ = run_cli(
            ["br-fig1", "--hurst-grid", "0.3,0.7", "--trunc-m", "6", "--n-mc",
             "2000", "--seed", "4"],
            capsys,
        )
        assert code == 0
        rows = [r.split(",") for r in out.strip().splitlines()[1:]]
        theta = {(float(r[0]), float(r[1])): float(r[4]) for r in rows}
        assert theta[(0.7, 0.7)] > theta[(0.3, 0.3)]

    def test_tailcdf_consistency(self, capsys):
        code, out, _ = run_cli(
            ["br-tailcdf", "--hurst", "0.5,0.5", "--point", "2,2", "--y",
             "1.0,2.0", "--n-mc", "50000", "--seed", "4"],
            capsys,
        )
        assert code == 0
        for row in out.strip().splitlines()[1:]:
            f = row.split(",")
            exact, mc, se = float(f[3]), float(f[4]), float(f[5])
            assert abs(exact - mc) <= 4 * se


class TestTailfieldCommand:
    def test_columnar_output(self, capsys, tmp_path):
        path = tmp_path / "samples.csv"
        code, _, _ = run_cli(
            ["tailfield", "--model", "iid", "--lag-radius", "1", "--q", "0.99",
             "--replicates", "20000", "--min-retained", "100", "--out", str(path)],
            capsys,
        )
        assert code == 0
        lines = path.read_text().strip().splitlines()
        assert lines[0].split(",")[0] == "root_norm"
        assert len(lines[0].split(",")) == 10  # root + 9 lags
        assert len(lines) >= 101
        roots = [float(l.split(",")[0]) for l in lines[1:]]
        assert min(roots) >= 1.0

    def test_spectral_flag(self, capsys, tmp_path):
        path = tmp_path / "spec.csv"
        code, _, _ = run_cli(
            ["tailfield", "--model", "iid", "--lag-radius", "1", "--q", "0.99",
             "--replicates", "20000", "--min-retained", "100", "--spectral",
             "--out", str(path)],
            capsys,
        )
        assert code == 0
        lines = path.read_text().strip().splitlines()
        assert lines[0].split(",")[0] == "lag_-1_-1"
        # lag-0 column is the middle one; norms exactly 1
        mid = lines[0].split(",").index("lag_0_0")
        assert all(abs(float(l.split(",")[mid])) == 1.0 for l in lines[1:])

    def test_model_json(self, capsys, tmp_path):
        cfg = tmp_path / "model.json"
        cfg.write_text(json.dumps(model_to_config(MaxMovingAverage(a=(0, 0, 0, 0)))))
        code, out, _ = run_cli(
            ["tailfield", "--model-json", str(cfg), "--lag-radius", "1", "--q",
             "0.99", "--replicates", "20000", "--min-retained", "100"],
            capsys,
        )
        assert code == 0


class TestVerifyCommand:
    def test_pareto_root_pass_exit_0(self, capsys):
        code, out, err = run_cli(
            ["verify", "pareto-root", "--model", "iid", "--q", "0.99",
             "--replicates", "600000", "--seed", "2"],
            capsys,
        )
        assert code == 0
        assert "PASS" in err

    def test_negative_control_exit_1(self, capsys):
        code, out, err = run_cli(
            ["verify", "rs-invariance", "--model", "corrupted", "--q", "0.999",
             "--replicates", "400000", "--seed", "2"],
            capsys,
        )
        assert code == 1
        assert "FAIL" in err

    def test_unknown_model_exit_2(self, capsys):
        code, _, _ = run_cli(
            ["verify", "pareto-root", "--model", "nope"], capsys
        )
        assert code == 2

    def test_counterexample_campaign(self, capsys):
        code, out, err = run_cli(
            ["verify", "counterexample", "--seed", "2"], capsys
        )
        assert code == 0


class TestExperimentConfig:
    def test_round_trip_identity(self):
        parser = build_parser()
        args = parser.parse_args(
            ["mma-theta", "--a", "0.1,0.7,0.6,0.1", "--empirical", "--seed", "9"]
        )
        cfg = config_from_args(args)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_round_trip_all_commands(self):
        parser = build_parser()
        for argv in (
            ["br-fig1", "--hurst-grid", "0.2,0.8"],
            ["cluster-laplace", "--model", "mma-default"],
            ["verify", "pareto-root"],
        ):
            cfg = config_from_args(parser.parse_args(argv))
            assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
