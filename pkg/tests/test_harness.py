import math
from statistics import NormalDist
from dataclasses import replace

import numpy as np
import pytest

from hybrid_doa import ArrayConfig, ExperimentSpec, Method, flops, run_experiment
from hybrid_doa.harness import (
    COMPLEXITY_COLUMNS,
    RMSE_COLUMNS,
    ConfigError,
    complexity_rows,
    crlb_rows,
    format_csv,
    load_config,
    parse_config,
    power_profile_rows,
    power_profile_trials,
    run_trial,
    spec_from_config,
    trial_seed,
)
from oracles import flops_oracle

BROADSIDE = ArrayConfig(1024, 8, 128, angle_reference="broadside")


def small_spec(**kw):
    base = dict(
        cfg=BROADSIDE, snr_grid_db=(0, 10), snapshot_grid=(50,), left_subarray_grid=(8, 32), n_trials=6, master_seed=3
    )
    return ExperimentSpec(**(base | kw))


# --- ExperimentSpec --------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        {"snr_grid_db": ()},
        {"snapshot_grid": ()},
        {"snapshot_grid": (0,)},
        {"n_trials": 0},
        {"theta0_deg": 95.0},
        {"left_subarray_grid": (1,)},
        {"left_subarray_grid": (126,)},
        {"methods": (Method.TLHAD,)},
        {"methods": ()},
        {"noise_variance": -1.0},
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ConfigError):
        small_spec(**kw)


def test_spec_theta_domain_follows_reference():
    ExperimentSpec(ArrayConfig(1024, 8, 128), theta0_deg=120.0)
    with pytest.raises(ConfigError):
        ExperimentSpec(ArrayConfig(1024, 8, 128), theta0_deg=0.0)


def test_spec_emitter_power_tracks_snr():
    spec = small_spec(noise_variance=2.0)
    assert spec.emitter(10.0).power == pytest.approx(20.0)
    assert spec.emitter(10.0).angle == pytest.approx(math.radians(41.0))


def test_describe_echoes_seed_and_derivation():
    lines = small_spec().describe()
    assert "seed=3" in lines
    assert any("SeedSequence" in line for line in lines)
    assert any("angle_reference=broadside" in line for line in lines)


# --- trials and sweeps -----------------------------------------------------------


def test_trial_seed_depends_only_on_indices():
    a = np.random.default_rng(trial_seed(5, 7, 1)).standard_normal(4)
    b = np.random.default_rng(trial_seed(5, 7, 1)).standard_normal(4)
    c = np.random.default_rng(trial_seed(5, 7, 0)).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_run_trial_report_fields():
    cfg = replace(BROADSIDE, left_subarrays=32)
    spec = small_spec()
    rep = run_trial(cfg, spec.emitter(10.0), 1.0, 50, 3, 0)
    lo, hi = cfg.domain
    for value in (rep.max_rp, rep.max_rp_qi, rep.root_music_qi):
        assert lo < value < hi
    assert rep.seed == (3, 0)
    assert set(rep.timings) == {Method.MAX_RP, Method.MAX_RP_QI, Method.ROOT_MUSIC_QI}


def test_noiseless_single_trial_rmse():
    spec = small_spec(n_trials=1, noise_variance=0.0, snr_grid_db=(0.0,), left_subarray_grid=(32,))
    rows = {(r.method, r.k_left): r for r in run_experiment(spec)}
    width = 180 / 128
    assert rows[(Method.MAX_RP, 0)].rmse_deg <= width
    assert rows[(Method.MAX_RP_QI, 0)].rmse_deg <= 0.2 * width
    assert rows[(Method.ROOT_MUSIC_QI, 32)].rmse_deg <= 1e-4
    assert all(math.isnan(r.crlb_deg) for r in rows.values())


def test_rows_cover_the_grid():
    spec = small_spec()
    rows = run_experiment(spec)
    assert len(rows) == 2 * (2 + 2)
    for r in rows:
        assert r.rmse_deg >= 0 and r.n_trials == 6
        assert r.k_left == (0 if r.method is not Method.ROOT_MUSIC_QI else r.k_left)
        assert math.isfinite(r.crlb_deg) and r.crlb_deg > 0
    assert {r.k_left for r in rows if r.method is Method.ROOT_MUSIC_QI} == {8, 32}


def test_results_do_not_depend_on_thread_count():
    spec = small_spec()
    assert run_experiment(spec, threads=1) == run_experiment(spec, threads=4)


def test_failures_are_counted_and_excluded():
    # left part of 2 subarrays at -10 dB: the eigenvalue test often finds no signal
    spec = small_spec(snr_grid_db=(-10.0,), left_subarray_grid=(2,), n_trials=40, methods=(Method.ROOT_MUSIC_QI,))
    (row,) = run_experiment(spec)
    assert 0 < row.failures < 40
    assert row.rmse_deg >= 0


def test_power_profile_trials_match_run_trial_seeds():
    spec = small_spec()
    prof = power_profile_trials(spec, 10.0, 50)
    assert prof.shape == (6, 128)
    rep = run_trial(replace(BROADSIDE, left_subarrays=0), spec.emitter(10.0), 1.0, 50, 3, 2, [Method.MAX_RP])
    assert BROADSIDE.sector_centers()[np.argmax(prof[2])] == rep.max_rp


@pytest.mark.parametrize("theta0", [41.0, 61.0])
def test_power_profile_peaks_at_source_sector(theta0):
    cfg = ArrayConfig(1024, 8, 128)
    spec = ExperimentSpec(cfg, theta0_deg=theta0, snr_grid_db=(10.0,), n_trials=100, methods=(Method.MAX_RP,))
    rows = power_profile_rows(spec)
    peak = max(rows, key=lambda r: r[4])
    assert cfg.sector_index(math.radians(peak[3])) == cfg.sector_index(math.radians(theta0))


def test_noise_only_profile_is_flat():
    spec = ExperimentSpec(ArrayConfig(1024, 8, 128), snr_grid_db=(-300.0,), n_trials=100, methods=(Method.MAX_RP,))
    mean = power_profile_trials(spec, -300.0, 100).mean(axis=0)
    # each sector mean averages 100 x 100 unit-mean exponentials; the band
    # keeps the 3-sigma false-alarm rate for all 128 sectors jointly
    z = NormalDist().inv_cdf(1 - (1 - NormalDist().cdf(3)) / 128)
    np.testing.assert_array_less(np.abs(mean - 1.0), z / math.sqrt(100 * 100))


# --- complexity / CRLB rows --------------------------------------------------------


def test_complexity_rows_spot_checks():
    rows = complexity_rows([1024, 2048], 8, [100])
    lookup = {(r[0], r[4]): r for r in rows}
    assert lookup[(1024, "MaxRP")][6] == "31998976"
    assert lookup[(1024, "TLHAD")][6] == "320615360"
    exact = flops_oracle("RootMusicPlusMaxRPQI", 256, 8, 100)
    assert lookup[(2048, "RootMusicPlusMaxRPQI")][6] == str(exact)
    assert lookup[(2048, "RootMusicPlusMaxRPQI")][5] == float(exact)
    assert len(rows[0]) == len(COMPLEXITY_COLUMNS)


def test_complexity_rows_tlhad_dominates_at_1024():
    rows = [r for r in complexity_rows([1024], 8, [100])]
    tlhad = next(r[5] for r in rows if r[4] == "TLHAD")
    assert all(r[5] < tlhad for r in rows if r[4] != "TLHAD")


def test_complexity_rows_monotone_in_antennas():
    rows = complexity_rows([1024, 2048, 4096, 8192], 8, [100])
    for m in Method:
        series = [r[5] for r in rows if r[4] == m.value]
        assert all(a < b for a, b in zip(series, series[1:]))


@pytest.mark.parametrize(("grid", "M"), [([], 8), ([1020], 8)])
def test_complexity_rows_reject_bad_grid(grid, M):
    with pytest.raises(ConfigError):
        complexity_rows(grid, M, [100])


def test_crlb_rows_include_all_steered_receiver():
    spec = small_spec(snr_grid_db=(10.0,), snapshot_grid=(100,))
    rows = crlb_rows(spec)
    assert [r[2] for r in rows] == [0, 8, 32]
    assert rows[2][3] == pytest.approx(0.0033601702590090746, rel=1e-9)
    with pytest.raises(ConfigError):
        crlb_rows(small_spec(noise_variance=0.0))


def test_crlb_attached_to_rmse_rows_matches_crlb_rows():
    spec = small_spec(snr_grid_db=(10.0,), snapshot_grid=(100,), n_trials=1)
    rm = {(r.method, r.k_left): r.crlb_deg for r in run_experiment(spec)}
    cr = {r[2]: r[3] for r in crlb_rows(spec)}
    assert rm[(Method.MAX_RP, 0)] == cr[0]
    assert rm[(Method.ROOT_MUSIC_QI, 32)] == cr[32]


# --- CSV and configuration ---------------------------------------------------------


def test_format_csv_layout():
    text = format_csv("rmse-sweep", ["a=1", "seed=0"], RMSE_COLUMNS, [("MaxRP", 0.1, 100, 0, 1 / 3, 5, 0, 0.25)])
    lines = text.splitlines()
    assert lines[0] == "# hybrid-doa rmse-sweep"
    assert lines[1:3] == ["# a=1", "# seed=0"]
    assert lines[3] == "# columns: " + ",".join(RMSE_COLUMNS)
    assert lines[4] == ",".join(RMSE_COLUMNS)
    assert lines[5] == "MaxRP,0.1,100,0,0.3333333333333333,5,0,0.25"
    assert text.endswith("\n") and "\r" not in text


def test_parse_config_handles_comments_and_lists():
    values = parse_config(
        "# header\n n_antennas = 2048 \nsnr_db_list=-10, 0,10  # trailing\n\nsnapshots_list = 50,100\n"
        "theta0_deg=41.5\nangle_reference=broadside\n"
    )
    assert values == {
        "n_antennas": 2048,
        "snr_db_list": [-10.0, 0.0, 10.0],
        "snapshots_list": [50, 100],
        "theta0_deg": 41.5,
        "angle_reference": "broadside",
    }


@pytest.mark.parametrize("text", ["bogus_key = 3", "n_antennas = 10.5", "snapshots_list = 1,x", "just words"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_defaults_and_left_list(tmp_path):
    values = load_config(None)
    assert values["n_antennas"] == 1024 and values["left_subarrays_list"] == [32]
    path = tmp_path / "c.cfg"
    path.write_text("left_subarrays = 16\n")
    assert load_config(path)["left_subarrays_list"] == [16]
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_spec_from_config_maps_errors():
    values = load_config(None) | {"n_subarrays": 100}
    with pytest.raises(ConfigError):
        spec_from_config(values, n_trials=1, seed=0)
    spec = spec_from_config(load_config(None), n_trials=7, seed=9)
    assert spec.n_trials == 7 and spec.master_seed == 9 and spec.cfg.left_subarrays == 0


def test_repository_config_loads():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "baseline.cfg"
    spec = spec_from_config(load_config(path), n_trials=1, seed=0)
    assert spec.cfg.angle_reference == "broadside"
    assert spec.cfg.n_antennas == 1024 and spec.theta0_deg == 41.0
    snaps = spec_from_config(load_config(path.with_name("snapshots.cfg")), n_trials=1, seed=0)
    assert snaps.snapshot_grid == (50, 100, 200, 400)
    assert snaps.methods == (Method.ROOT_MUSIC_QI,)
