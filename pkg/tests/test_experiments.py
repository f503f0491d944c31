import numpy as np
import pytest

from projstruct.errors import ConfigError
from projstruct.experiments import (
    build_family,
    build_signal,
    config_hash,
    derive_rng,
    render_csv,
    resolve_sigma,
    run_experiment,
)


BASE = {
    "family": {"kind": "sparsity", "n": 20},
    "signal": {"kind": "sparse", "s": 2, "amplitude": 8.0},
    "sigma": 1.0,
    "kappa": 1.0,
    "reps": 8,
    "constants": {"kappa": 1.0, "strict": False},
}


def test_contraction_schema_and_range():
    cfg = dict(BASE, experiment="contraction", grid={"M": [0.0, 4.0]},
               posterior_draws=50)
    header, rows = run_experiment(cfg, seed=1)
    assert header[:5] == ["n", "sigma", "M", "frac_exceed", "se"]
    assert len(rows) == 2
    for row in rows:
        assert 0.0 <= row[3] <= 1.0


def test_estimation_risk_ma_vs_ms():
    cfg_ms = dict(BASE, experiment="estimation-risk", estimator="ms")
    cfg_ma = dict(BASE, experiment="estimation-risk", estimator="ma")
    _, rows_ms = run_experiment(cfg_ms, seed=5)
    _, rows_ma = run_experiment(cfg_ma, seed=5)
    assert rows_ms[0][2] > 0.0 and rows_ma[0][2] > 0.0
    assert rows_ms[0][2] != rows_ma[0][2]


def test_size_experiment_flags_highly_structured():
    cfg = dict(BASE, experiment="size",
               signal={"kind": "sparse", "s": 1, "amplitude": 5.0})
    header, rows = run_experiment(cfg, seed=2)
    flag_col = header.index("highly_structured")
    # rate ~ 2 log(en) ~ 8 > sqrt(20) ~ 4.5, so not highly structured at c=1
    assert rows[0][flag_col] == 0
    cfg2 = dict(cfg, structured_c=10.0)
    _, rows2 = run_experiment(cfg2, seed=2)
    assert rows2[0][flag_col] == 1


def test_quarter_ball_disabled_for_banding():
    cfg = {
        "experiment": "coverage-quarter",
        "family": {"kind": "banding", "p": 3},
        "signal": {"kind": "zero"},
        "sigma": 1.0, "kappa": 1.0, "reps": 2,
        "constants": {"kappa": 1.0, "strict": False},
    }
    with pytest.raises(ConfigError, match="banding"):
        run_experiment(cfg, seed=0)


def test_unknown_experiment_and_missing_sections():
    with pytest.raises(ConfigError):
        run_experiment(dict(BASE, experiment="frobnicate"), seed=0)
    with pytest.raises(ConfigError):
        run_experiment({"experiment": "size", "signal": {"kind": "zero"}}, seed=0)


def test_grid_iteration_covers_cells_in_order():
    cfg = dict(BASE, experiment="size", grid={"n": [10, 20], "sigma": [0.5, 1.0]},
               sigma=None)
    header, rows = run_experiment(cfg, seed=3)
    cells = [(r[0], r[1]) for r in rows]
    assert cells == [(10, 0.5), (10, 1.0), (20, 0.5), (20, 1.0)]


def test_signal_builders():
    fam = build_family({"kind": "smoothness", "n": 6})
    sob = build_signal({"kind": "sobolev", "beta": 1.0, "Q": 2.0}, fam, 1.0)
    idx = np.arange(1, 7, dtype=float)
    assert np.sum(idx**2 * sob**2) == pytest.approx(2.0)
    pw = build_signal({"kind": "piecewise", "breaks": [2], "levels": [1.0, -1.0]},
                      build_family({"kind": "jump", "n": 6}), 2.0)
    assert np.array_equal(pw, [2.0, 2.0, 2.0, -2.0, -2.0, -2.0])
    with pytest.raises(ConfigError):
        build_signal({"kind": "sparse", "s": 99}, fam, 1.0)
    with pytest.raises(ConfigError):
        build_signal({"kind": "nope"}, fam, 1.0)


def test_sigma_rules():
    assert resolve_sigma("1/sqrt(n)", 16) == 0.25
    assert resolve_sigma(2.0, 16) == 2.0
    with pytest.raises(ConfigError):
        resolve_sigma("bogus", 4)
    with pytest.raises(ConfigError):
        resolve_sigma(-1.0, 4)


def test_derived_rngs_are_stable_and_distinct():
    a = derive_rng(7, "rep", 0, 1).standard_normal(4)
    b = derive_rng(7, "rep", 0, 1).standard_normal(4)
    c = derive_rng(7, "rep", 0, 2).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_render_csv_format():
    text = render_csv(["a", "b"], [[1, 2.5], [3, float("inf")]], seed=9,
                      config={"x": 1})
    lines = text.split("\n")
    assert lines[0].startswith("# projstruct=") and "seed=9" in lines[0]
    assert "config_sha256=" + config_hash({"x": 1}) in lines[0]
    assert lines[1] == "a,b"
    assert lines[2] == "1,2.5"
    assert text.endswith("\n")


def test_workers_do_not_change_results():
    cfg = dict(BASE, experiment="recovery-shell", grid={"M": [0.0]})
    serial = run_experiment(cfg, seed=4, workers=1)
    parallel = run_experiment(cfg, seed=4, workers=2)
    assert serial == parallel


def test_quarter_ball_bernoulli_second_sample_path():
    theta = 0.4
    cfg = {
        "experiment": "coverage-quarter",
        "family": {"kind": "bicluster", "n1": 3, "n2": 3},
        "signal": {"kind": "constant", "value": theta},
        "noise": {"kind": "bernoulli-mean", "theta": [theta] * 9},
        "sigma": 1.0,
        "kappa": 0.5,
        "reps": 20,
        "mode": "exact",
        "duplication": "second-sample",
        "v_statistic": "bernoulli",
        "grid": {"M": [0.5]},
        "constants": {"kappa": 1.0, "strict": False, "M1_override": 3.0},
    }
    header, rows = run_experiment(cfg, seed=12)
    cov = rows[0][header.index("coverage")]
    assert 0.0 <= cov <= 1.0
    assert rows[0][header.index("mean_radius_sq")] >= 0.0


def test_contraction_fraction_monotone_in_M():
    cfg = dict(BASE, experiment="contraction", grid={"M": [0.0, 1.0, 4.0, 16.0]},
               posterior_draws=100)
    header, rows = run_experiment(cfg, seed=9)
    fracs = [r[header.index("frac_exceed")] for r in rows]
    assert fracs == sorted(fracs, reverse=True)


def test_grid_over_n_rejected_for_two_axis_families():
    cfg = {
        "experiment": "size",
        "family": {"kind": "bicluster", "n1": 3, "n2": 3},
        "signal": {"kind": "zero"}, "sigma": 1.0, "kappa": 1.0, "reps": 2,
        "grid": {"n": [4, 8]},
        "constants": {"kappa": 1.0, "strict": False},
    }
    with pytest.raises(ConfigError, match="bicluster"):
        run_experiment(cfg, seed=0)
