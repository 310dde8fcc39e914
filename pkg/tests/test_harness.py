import shutil
import subprocess

import numpy as np
import pytest

from gtft import matkit
from gtft.harness import cli, presets
from gtft.harness.config import ConfigError, merge, read_config
from gtft.metrics import MetricsTrace, read_metrics_csv, write_metrics_csv


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_verify_pass(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--family", "one-peer-exp", "--n", "16")
        assert code == 0 and "tau=4" in out and "ftc=PASS" in out
        resid = float(out.split("product_residual=")[1].split()[0])
        assert resid <= 1e-12

    def test_verify_fail_is_a_result(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--family", "one-peer-exp", "--n", "6")
        assert code == 0 and "ftc=FAIL" in out

    def test_gen_topology(self, capsys, tmp_path):
        path = tmp_path / "w.csv"
        code, _, _ = run_cli(capsys, "gen-topology", "--family", "de-bruijn", "--n", "8", "--index", "0", "--out", str(path))
        W = matkit.read_matrix_csv(path)
        assert code == 0 and W.shape == (8, 8)
        assert np.all(W.sum(axis=1) == 1.0)

    def test_spectral(self, capsys):
        code, out, _ = run_cli(capsys, "spectral", "--family", "one-peer-exp", "--n", "8", "--static")
        assert code == 0
        assert abs(float(out.split("rho=")[1]) - 0.5) <= 1e-9
        code, out, _ = run_cli(capsys, "spectral", "--family", "one-peer-exp", "--n", "8")
        assert len(out.splitlines()) == 3

    def test_consensus(self, capsys, tmp_path):
        path = tmp_path / "c.csv"
        code, _, _ = run_cli(capsys, "consensus", "--family", "p-peer-hypercuboid", "--n", "12",
                             "--iters", "6", "--seed", "1", "--out", str(path))
        tr = read_metrics_csv(path)
        assert code == 0 and tr.columns == ("iter", "consensus_error") and len(tr) == 7

    @pytest.mark.parametrize("argv", [["bogus"], ["verify", "--n", "8"], ["verify", "--family", "ring", "--n", "8"],
                                      ["verify", "--family", "one-peer-exp", "--n", "8", "--what"], []])
    def test_usage_errors(self, capsys, argv):
        code, _, err = run_cli(capsys, *argv)
        assert code == 1 and "usage" in err

    def test_invalid_values(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--family", "one-peer-hypercube", "--n", "12")
        assert code == 1 and "power of 2" in err

    def test_optimize(self, capsys, tmp_path):
        out = tmp_path / "o.csv"
        dump = tmp_path / "p.csv"
        code, text, _ = run_cli(capsys, "optimize", "--algo", "gt-ft", "--family", "one-peer-exp", "--n", "8",
                                "--m", "20", "--d", "4", "--alpha", "1e-3", "--sigma2", "1e-4", "--iters", "50",
                                "--seed", "2", "--warmup", "--out", str(out), "--dump-problem", str(dump))
        tr = read_metrics_csv(out)
        assert code == 0 and len(tr) == 51
        assert tr.columns == ("iter", "objective", "grad_mean_sq", "grad_at_mean_sq", "consensus_error")
        assert np.all(tr.column("consensus_error")[:4] <= 1e-24)
        assert dump.read_text().startswith("n,m,d,mu,delta,seed\n8,20,4,")

    def test_tuned_stepsize(self, capsys, tmp_path):
        code, text, _ = run_cli(capsys, "optimize", "--algo", "gt-ft", "--family", "one-peer-exp", "--n", "8",
                                "--m", "20", "--d", "4", "--sigma2", "0", "--iters", "10", "--seed", "0",
                                "--tuned-stepsize", "cor5", "--out", str(tmp_path / "o.csv"))
        assert code == 0 and "alpha=" in text

    def test_divergence_exit_2(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "optimize", "--algo", "dgd", "--family", "one-peer-exp", "--n", "8",
                               "--m", "20", "--d", "4", "--alpha", "1", "--sigma2", "0", "--iters", "500",
                               "--seed", "0", "--out", str(tmp_path / "o.csv"))
        assert code == 2 and "reduce the stepsize" in err

    def test_unwritable_output_exit_2(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "consensus", "--family", "one-peer-exp", "--n", "8", "--iters", "2",
                             "--seed", "0", "--out", str(tmp_path / "missing" / "c.csv"))
        assert code == 2

    def test_missing_required(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "optimize", "--algo", "dgd", "--family", "one-peer-exp", "--n", "8",
                               "--out", str(tmp_path / "o.csv"))
        assert code == 1 and "--iters" in err and "--alpha" in err

    def test_config_file_and_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# desk run\nalgo = dgd\nfamily=one-peer-exp\nn=8\nm=20\nd=4\nalpha=1e-3\niters=5\nwarmup=yes\n")
        out = tmp_path / "o.csv"
        code, text, _ = run_cli(capsys, "optimize", "--config", str(cfg), "--iters", "7", "--algo", "gt-ft",
                                "--out", str(out))
        assert code == 0 and "algo=gt-ft" in text and len(read_metrics_csv(out)) == 8

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour=blue\n")
        code, _, _ = run_cli(capsys, "optimize", "--config", str(cfg))
        assert code == 1

    @pytest.mark.skipif(shutil.which("gtft") is None, reason="console script not installed")
    def test_console_script(self):
        res = subprocess.run(["gtft", "verify", "--family", "de-bruijn", "--n", "27"], capture_output=True, text=True)
        assert res.returncode == 0 and "ftc=PASS" in res.stdout


class TestConfig:
    def test_read(self, tmp_path):
        p = tmp_path / "c"
        p.write_text("a = 1\n\n# x\ntuned-stepsize = cor6 # trailing\n")
        assert read_config(p) == {"a": "1", "tuned_stepsize": "cor6"}

    def test_malformed(self, tmp_path):
        p = tmp_path / "c"
        p.write_text("no equals sign\n")
        with pytest.raises(ConfigError):
            read_config(p)

    def test_precedence(self):
        schema = {"a": int, "b": float, "c": bool}
        got = merge({"a": 5, "b": None}, {"a": "1", "b": "2.5", "c": "off"}, schema, {"c": True})
        assert got == {"a": 5, "b": 2.5, "c": False}

    def test_bad_types(self):
        with pytest.raises(ConfigError):
            merge({}, {"a": "x"}, {"a": int}, {})
        with pytest.raises(ConfigError):
            merge({}, {"c": "maybe"}, {"c": bool}, {})


class TestCsv:
    def test_empty_trace(self, tmp_path):
        p = tmp_path / "e.csv"
        write_metrics_csv(MetricsTrace(), p)
        assert p.read_text() == "iter,objective,grad_mean_sq,grad_at_mean_sq,consensus_error\n"

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        vals = np.column_stack([np.arange(5), rng.random((5, 4)) * 10.0 ** rng.integers(-30, 30, (5, 4))])
        tr = MetricsTrace(values=vals)
        p = tmp_path / "r.csv"
        write_metrics_csv(tr, p)
        assert np.array_equal(read_metrics_csv(p).values, vals)

    def test_narrow(self):
        tr = MetricsTrace(values=np.arange(10.0).reshape(2, 5))
        assert tr.narrow(("iter", "consensus_error")).values.tolist() == [[0, 4], [5, 9]]


class TestConsensusPreset:
    @pytest.mark.parametrize("family,n", [("one-peer-exp", 8), ("one-peer-hypercube", 16),
                                          ("p-peer-hypercuboid", 12), ("de-bruijn", 9), ("fully-connected", 5)])
    def test_ftc_drop(self, family, n):
        tr = presets.run_consensus_preset(family, n, 10, seed=0)
        xi = tr.column("consensus_error")
        assert xi[tr.extras["tau"]] / xi[0] <= 1e-20

    @pytest.mark.parametrize("family,n,tau", [("static-exp", 8, 3), ("static-hypercuboid", 12, 3)])
    def test_static_decay(self, family, n, tau):
        xi = presets.run_consensus_preset(family, n, 10, seed=0).column("consensus_error")
        assert np.all(np.diff(xi) < 0)
        assert xi[tau] / xi[0] > 1e-6

    def test_two_agents(self):
        xi = presets.run_consensus_preset("one-peer-exp", 2, 3, seed=0).column("consensus_error")
        assert xi[1] <= 1e-30 * xi[0]

    def test_columns(self):
        assert presets.run_consensus_preset("one-peer-exp", 4, 2, seed=0).columns == ("iter", "consensus_error")


@pytest.fixture(scope="module")
def desk_exp():
    return presets.run_optimize_preset("optimize-exp", "desk", seed=0)


class TestOptimizePreset:
    def test_arms(self, desk_exp):
        assert set(desk_exp) == {f"{a}_{m}" for a in ("gt-ft-dynamic", "dgd-dynamic", "gt-static", "dgd-static")
                                 for m in ("determ", "stoch")}

    def test_gt_beats_dgd(self, desk_exp):
        gt = desk_exp["gt-ft-dynamic_determ"].final("grad_at_mean_sq")
        assert gt <= 0.1 * desk_exp["dgd-dynamic_determ"].final("grad_at_mean_sq")

    def test_dynamic_matches_static(self, desk_exp):
        a = desk_exp["gt-ft-dynamic_determ"].final("grad_at_mean_sq")
        b = desk_exp["gt-static_determ"].final("grad_at_mean_sq")
        assert abs(np.log10(a) - np.log10(b)) <= 1

    def test_noise_shrinks_gap(self, desk_exp):
        def ratio(mode):
            return (desk_exp[f"dgd-dynamic_{mode}"].final("grad_at_mean_sq")
                    / desk_exp[f"gt-ft-dynamic_{mode}"].final("grad_at_mean_sq"))
        assert ratio("stoch") < ratio("determ")

    def test_finite(self, desk_exp):
        for tr in desk_exp.values():
            assert np.all(np.isfinite(tr.values))

    def test_de_bruijn_arms(self):
        arms = presets.optimize_arms(presets.get_preset("optimize-debruijn"), 8)
        assert [a[0] for a in arms] == ["gt-ft-dynamic", "dgd-dynamic"]

    def test_paper_scale_parameters(self):
        for name, n in (("optimize-exp", 64), ("optimize-cuboid", 72), ("optimize-debruijn", 64)):
            p = presets.get_preset(name)
            assert (p.n["paper"], p.m["paper"], p.d["paper"], p.delta, p.alpha, p.sigma2) == (n, 500, 20, 10.0, 1e-4, 1e-4)

    def test_unknown(self):
        with pytest.raises(ValueError):
            presets.get_preset("optimize-ring")
        with pytest.raises(ValueError):
            presets.run_optimize_preset("optimize-exp", "huge", 0)


class TestPresetCommand:
    def test_consensus_files(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "preset", "--name", "consensus", "--scale", "desk", "--seed", "3",
                               "--out-dir", str(tmp_path))
        files = sorted(tmp_path.glob("*.csv"))
        assert code == 0 and len(files) == len(presets.CONSENSUS_RUNS["desk"])
        for f in files:
            assert f.read_text().splitlines()[0] == "iter,consensus_error"
