import json

import pytest

from auctioncc.cli import build_parser, main
from auctioncc.closed_form import AuctionParams, rates_map, srev
from auctioncc.distributions import DistSpec, Seed
from auctioncc.experiments import (
    SolutionCache,
    cdw_benchmark,
    competition_complexity,
    grand_bundle_study,
    kfa_study,
    ols,
    revenue_table,
    scaling_study,
    solve_cached,
    solver_config,
)
from auctioncc.fixed_point import solve


def test_ols_exact_line_and_degenerate():
    reg = ols([1, 2, 3, 4], [3, 5, 7, 9])
    assert reg["slope"] == pytest.approx(2.0)
    assert reg["intercept"] == pytest.approx(1.0)
    assert reg["r2"] == pytest.approx(1.0)
    assert ols([2, 2, 2], [1, 2, 3])["slope"] is None
    assert ols([1], [1])["r2"] is None


def test_competition_complexity_m1_is_zero():
    params = AuctionParams.from_lambda(32, 1, 1.5)
    rates = rates_map((), 32, 1, params.T)
    row = competition_complexity(params, rates)
    # with one item the menu revenue equals separate sale exactly
    assert row.c_star == 0
    assert row.rev_nsn == pytest.approx(row.srev_n, rel=1e-12)


def test_competition_complexity_minimality():
    params = AuctionParams.from_lambda(64, 2, 1.5)
    rates = rates_map((0.0,), 64, 2, params.T)
    row = competition_complexity(params, rates)
    n, m, T = params.n, params.m, params.T
    assert row.c_star >= 1
    assert srev(n + row.c_star, m, T) >= row.rev_nsn * (1 - 1e-12)
    assert srev(n + row.c_star - 1, m, T) < row.rev_nsn * (1 - 1e-12)
    assert row.analytic_lb > 0
    with pytest.raises(ValueError):
        competition_complexity(params, rates, converged=False)


def test_solution_cache_roundtrip(tmp_path):
    cache = SolutionCache(str(tmp_path))
    params = AuctionParams.from_lambda(16, 2, 1.5)
    seed = Seed(9)
    cfg = solver_config(params, 1e-9, 50, 0.5, 10**4, seed)
    assert cache.get(cfg) is None
    sol = solve(params, samples=10**4, seed=seed)
    cache.put(cfg, sol)
    hit = cache.get(cfg)
    assert hit is not None
    assert hit.to_dict() == sol.to_dict()
    # a different config must miss
    other = solver_config(params, 1e-9, 50, 0.5, 2 * 10**4, seed)
    assert cache.get(other) is None


def test_solve_cached_uses_cache(tmp_path):
    cache = SolutionCache(str(tmp_path))
    params = AuctionParams.from_lambda(16, 2, 1.5)
    s1 = solve_cached(params, Seed(9), samples=10**4, cache=cache)
    files = list(tmp_path.glob("solution_*.json"))
    assert len(files) == 1
    s2 = solve_cached(params, Seed(9), samples=10**4, cache=cache)
    assert s1.to_dict() == s2.to_dict()
    assert len(list(tmp_path.glob("solution_*.json"))) == 1


def test_scaling_study_skips_t_geq_n():
    # lambda 1.5 with n = 4, m = 2 gives T > n, which the scaling regime
    # excludes
    study = scaling_study([(4, 2, 1.5), (64, 2, 1.5)], solver_samples=10**4)
    assert len(study["rows"]) == 1
    assert study["skipped"][0]["n"] == 4
    assert study["regression"]["slope"] is None  # one point left


def test_cdw_benchmark_thread_invariance_and_modes():
    spec = DistSpec.truncated(6.0)
    e1 = cdw_benchmark(spec, 8, 2, samples=4 * 10**4, seed=Seed(11), threads=1)
    e4 = cdw_benchmark(spec, 8, 2, samples=4 * 10**4, seed=Seed(11), threads=4)
    assert e1 == e4
    assert e1.estimator == "mean"
    er = cdw_benchmark(
        DistSpec.equal_revenue(), 8, 2, samples=4 * 10**4, seed=Seed(11)
    )
    assert er.estimator == "median_of_means"
    with pytest.raises(ValueError):
        cdw_benchmark(DistSpec.equal_revenue(), 1, 2, samples=100)


def test_revenue_table_consistency():
    params = AuctionParams.from_lambda(16, 2, 1.5)
    rates = rates_map((0.0,), 16, 2, params.T)
    table = revenue_table(params, rates, samples=10**5, seed=Seed(12))
    est = table["estimates"]
    forms = table["closed_forms"]
    for name in ("srev", "naive", "lna", "nsn", "benchmark"):
        assert est[name].stderr > 0
    z = (est["srev"].mean - forms["closed_srev"]) / est["srev"].stderr
    assert abs(z) <= 4
    z = (est["lna_gap"].mean - forms["closed_lna_gap"]) / est["lna_gap"].stderr
    assert abs(z) <= 4


def test_grand_bundle_study_small():
    study = grand_bundle_study([(8, 2), (16, 2)], samples=3 * 10**4, seed=Seed(13))
    for row in study["rows"]:
        assert row["v21_in_bounds"]
        assert row["revenue"] > row["n"] * row["m"]  # excess is positive
    assert study["regression"]["points"] == 2


def test_kfa_study_small():
    report = kfa_study(16, 4, samples=3 * 10**4, seed=Seed(14))
    assert report["meets_lower_bound"]
    assert report["total_minus_nm"] > 0
    with pytest.raises(ValueError):
        kfa_study(2, 4, samples=100)


# --- CLI ---


def test_cli_srev_json(tmp_path, capsys):
    out = tmp_path / "srev.json"
    rc = main(
        ["srev", "--n", "16", "--m", "2", "--lambda", "1.5", "--out", str(out)]
    )
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    params = AuctionParams.from_lambda(16, 2, 1.5)
    assert doc["result"]["srev"] == pytest.approx(srev(16, 2, params.T))
    # the resolved config goes to stderr
    assert "config:" in capsys.readouterr().err


def test_cli_srev_csv(tmp_path):
    out = tmp_path / "srev.csv"
    rc = main(["srev", "--n", "16", "--m", "2", "--t", "8", "--out", str(out),
               "--format", "csv"])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,m,T,srev"
    vals = lines[1].split(",")
    assert float(vals[3]) == pytest.approx(srev(16, 2, 8.0))


def test_cli_mutually_exclusive_scale_flags():
    with pytest.raises(SystemExit) as exc:
        main(["srev", "--n", "4", "--m", "2", "--lambda", "1.5", "--t", "8"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["srev", "--n", "4", "--m", "2"])
    assert exc.value.code == 2


def test_cli_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["srev", "--n", "4", "--m", "2", "--t", "8", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["not-a-command"])


def test_cli_solve_and_cache(tmp_path):
    out = tmp_path / "sol.json"
    cache_dir = tmp_path / "cache"
    argv = [
        "solve", "--n", "16", "--m", "2", "--lambda", "1.5",
        "--samples", "20000", "--out", str(out), "--cache", str(cache_dir),
    ]
    assert main(argv) == 0
    doc1 = json.loads(out.read_text())
    assert doc1["result"]["converged"]
    assert len(list(cache_dir.glob("solution_*.json"))) == 1
    # second run hits the cache and reproduces the document byte-for-byte
    assert main(argv) == 0
    assert json.loads(out.read_text()) == doc1


def test_cli_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main([
        "sweep", "--grid", "m=2:n=64,128", "--lambda", "1.5",
        "--samples", "20000", "--format", "csv", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 3  # header + 2 rows
    assert lines[0].startswith("n,m,")


def test_cli_bad_grid_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--grid", "k=2:n=4"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--grid", "m=2"])  # missing n axis
    assert exc.value.code == 2


def test_cli_marginals(tmp_path):
    out = tmp_path / "marg.json"
    rc = main(["marginals", "--m", "2", "--points", "10", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    rows = doc["result"]["rows"]
    assert len(rows) == 10
    assert {"x", "favorite_cdf", "favorite_pdf", "nonfavorite_cdf"} <= set(rows[0])


def test_cli_benchmark(tmp_path):
    out = tmp_path / "bench.json"
    rc = main([
        "benchmark", "--n", "8", "--m", "2", "--lambda", "1.5",
        "--samples", "20000", "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["estimator"] == "mean"
    rc = main([
        "benchmark", "--untruncated", "--n", "8", "--m", "2",
        "--samples", "20000", "--out", str(out),
    ])
    assert rc == 0
    assert json.loads(out.read_text())["result"]["estimator"] == "median_of_means"


def test_cli_kfa_and_bundle(tmp_path):
    out = tmp_path / "kfa.json"
    rc = main([
        "kfa", "--n", "16", "--m", "4", "--samples", "20000", "--out", str(out),
    ])
    assert rc == 0
    assert json.loads(out.read_text())["result"]["n"] == 16
    rc = main([
        "bundle", "--n", "8", "--m", "2", "--samples", "20000", "--out", str(out),
    ])
    assert rc == 0
    assert len(json.loads(out.read_text())["result"]["rows"]) == 1
