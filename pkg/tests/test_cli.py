import json
import subprocess
import sys

import numpy as np
import pytest

from nise.cli import main, read_csv
from nise.dataset import Dataset
from nise.estimators import nise_fit
from nise.resample import substream
from nise.simulate import builtin_scenario, gen_market_sample


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def market_csv(tmp_path, capsys):
    path = tmp_path / "market.csv"
    code, _, _ = run(capsys, "simulate", "--scenario", "base", "--n", "200", "--reps", "2",
                     "--seed", "42", "--emit-data", str(path))
    assert code == 0
    return path


def records(text):
    return [json.loads(line) for line in text.splitlines()]


ESTIMATE = ("estimate", "--endog", "q,p", "--exog", "inc,ps,pc")


class TestEstimate:
    def test_emitted_sample_matches_direct_fit(self, market_csv, capsys):
        code, out, _ = run(capsys, *ESTIMATE, "--data", str(market_csv), "--json")
        assert code == 0
        direct = nise_fit(gen_market_sample(builtin_scenario("base", 200), substream(42, 0)).dataset)
        coefs = [r for r in records(out) if r["type"] == "coefficient"]
        assert [r["coefficient"] for r in coefs] == list(direct.names)
        np.testing.assert_allclose([r["estimate"] for r in coefs], direct.params, atol=1e-10)
        np.testing.assert_allclose([r["se"] for r in coefs], direct.se, atol=1e-10)
        tests = [r for r in records(out) if r["type"] == "test"]
        assert tests[0]["test"] == "Z" and tests[0]["df"] == [2]

    def test_json_and_table_agree(self, market_csv, capsys):
        args = (*ESTIMATE, "--data", str(market_csv), "--instruments", "r,pf,t", "--method", "all")
        _, js, _ = run(capsys, *args, "--json")
        _, table, _ = run(capsys, *args)
        recs = records(js)
        assert recs[0]["type"] == "invocation" and recs[0]["flags"]["method"] == "all"
        for r in recs:
            if r["type"] == "coefficient":
                assert f"{r['estimate']:.3f}" in table
            if r["type"] == "test":
                assert f"{r['statistic']:.3f}" in table
        assert {r["test"] for r in recs if r["type"] == "test"} == {"F", "J", "Z"}

    def test_bootstrap_reruns_are_identical(self, market_csv, capsys, tmp_path):
        args = (*ESTIMATE, "--data", str(market_csv), "--bootstrap", "30", "--seed", "5")
        _, first, _ = run(capsys, *args, "--out", str(tmp_path / "a.txt"))
        _, second, _ = run(capsys, *args, "--out", str(tmp_path / "a.txt"))
        assert first == second
        assert (tmp_path / "a.txt").read_text() == first
        assert "boot_qn" in first

    def test_bootstrap_needs_seed(self, market_csv, capsys):
        code, _, err = run(capsys, *ESTIMATE, "--data", str(market_csv), "--bootstrap", "10")
        assert code == 2 and "--seed" in err

    def test_tsls_without_instruments(self, market_csv, capsys):
        code, _, err = run(capsys, *ESTIMATE, "--data", str(market_csv), "--method", "tsls")
        assert code == 2 and "--instruments" in err

    def test_nise_with_empty_exog_fails(self, market_csv, capsys):
        code, _, err = run(capsys, "estimate", "--endog", "q,p", "--exog", "", "--data", str(market_csv))
        assert code == 1 and "EmptyExogenous" in err

    def test_single_exogenous_warns_about_z(self, market_csv, capsys):
        code, out, _ = run(capsys, "estimate", "--endog", "q,p", "--exog", "inc", "--data", str(market_csv))
        assert code == 0 and "warning: NISE: Z test" in out

    def test_unknown_column(self, market_csv, capsys):
        code, _, err = run(capsys, *ESTIMATE[:-1], "inc,zz", "--data", str(market_csv))
        assert code == 2 and "zz" in err

    def test_log_transform(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        x = rng.uniform(1, 3, 40)
        y2 = rng.uniform(1, 2, 40)
        y1 = np.exp(0.5 * np.log(y2) + np.log(x) + 0.05 * rng.standard_normal(40))
        path = tmp_path / "d.csv"
        path.write_text("a,b,c\n" + "\n".join(f"{float(u)!r},{float(v)!r},{float(w)!r}" for u, v, w in zip(y1, y2, x)))
        code, out, _ = run(capsys, "estimate", "--data", str(path), "--endog", "a,b", "--exog", "c",
                           "--log", "a,b,c", "--method", "ols", "--json")
        assert code == 0
        direct = Dataset(np.log(np.column_stack([y1, y2])), np.log(x))
        est = [r["estimate"] for r in records(out) if r["type"] == "coefficient"]
        ref = np.linalg.lstsq(np.column_stack([direct.endog[:, 1], direct.exog, np.ones(40)]),
                              direct.endog[:, 0], rcond=None)[0]
        np.testing.assert_allclose(est, ref, atol=1e-10)

    def test_log_of_nonpositive(self, tmp_path, capsys):
        path = tmp_path / "d.csv"
        path.write_text("a,b,c\n" + "\n".join(f"{i},{i % 3 - 1},{i * i % 7}" for i in range(10)))
        code, _, err = run(capsys, "estimate", "--data", str(path), "--endog", "a,b", "--exog", "c", "--log", "b")
        assert code == 1 and "nonpositive" in err


class TestCsv:
    @pytest.mark.parametrize(
        "body, where",
        [("a,b\n1,2\n3,x\n", "row 3, column 'b'"), ("a,b\n1,2\n3\n", "row 3"), ("a,a\n1,2\n", "duplicate"),
         ("a,b\n1,nan\n", "row 2"), ("", "empty")],
    )
    def test_bad_files(self, tmp_path, body, where):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        with pytest.raises(Exception, match=where):
            read_csv(str(path))

    def test_missing_file_is_usage_error(self, tmp_path, capsys):
        code, _, err = run(capsys, *ESTIMATE, "--data", str(tmp_path / "none.csv"))
        assert code == 2 and "cannot read" in err


class TestSimulate:
    def test_table_shape(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scenario", "base", "--n", "50", "--reps", "20", "--seed", "1")
        assert code == 0
        assert "OLS" in out and "TSLS" in out and "NISE" in out
        for label in ("F signif", "J signif", "Z signif", "corr(p, u_d)", "failures"):
            assert label in out

    def test_json_matches_library(self, capsys):
        code, out, _ = run(capsys, "simulate", "--scenario", "weak", "--n", "60", "--reps", "15", "--seed", "3", "--json")
        assert code == 0
        from nise.simulate import run_replications

        s = run_replications(builtin_scenario("weak", 60), 15, 3)
        recs = records(out)
        row = next(r for r in recs if r["type"] == "coefficient" and r["estimator"] == "NISE" and r["coefficient"] == "p")
        assert row["median"] == s.coef("nise", "p").median
        summary = next(r for r in recs if r["type"] == "summary")
        assert summary["corr_p_ud"] == s.corr_p_ud and summary["reps"] == 15

    def test_workers_do_not_change_output(self, capsys):
        base = ("simulate", "--scenario", "base", "--n", "40", "--reps", "8", "--seed", "2")
        _, a, _ = run(capsys, *base)
        _, b, _ = run(capsys, *base, "--workers", "2")
        strip = lambda t: t.splitlines()[1:]  # first line echoes the flags
        assert strip(a) == strip(b)

    def test_missing_seed_is_usage_error(self, capsys):
        code, _, _ = run(capsys, "simulate", "--scenario", "base", "--n", "50", "--reps", "5")
        assert code == 2

    def test_scenario_needs_n(self, capsys):
        code, _, err = run(capsys, "simulate", "--scenario", "base", "--reps", "5", "--seed", "1")
        assert code == 2 and "--n" in err

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("scenario = weak\nn = 50\nlabel = faint\n")
        code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--reps", "5", "--seed", "1", "--json")
        assert code == 0
        assert next(r for r in records(out) if r["type"] == "summary")["scenario"] == "faint"

    def test_config_syntax_error(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("n = 50\nbogus\n")
        code, _, err = run(capsys, "simulate", "--config", str(cfg), "--reps", "5", "--seed", "1")
        assert code == 2 and "line 2" in err

    def test_config_invariant_violation(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("n = 50\nsupply.gamma_p = -1\n")
        code, _, err = run(capsys, "simulate", "--config", str(cfg), "--reps", "5", "--seed", "1")
        assert code == 1 and "InvalidScenario" in err

    def test_emitted_columns(self, market_csv):
        table = read_csv(str(market_csv))
        assert list(table) == ["q", "p", "inc", "ps", "pc", "r", "pf", "t"]
        assert len(table["q"]) == 200


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nise", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("nise ")
