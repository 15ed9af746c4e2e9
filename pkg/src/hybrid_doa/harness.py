"""
Seeded Monte Carlo experiments and CSV output.

Trial ``t`` of every grid point draws its random numbers from
``SeedSequence([master_seed, t, receiver])`` with ``receiver = 0`` for the
all-steered Max-RP receiver and ``1`` for the two-part Root-MUSIC receiver.
Seeds depend only on the trial index, so grid points share common random
numbers and results do not depend on how trials are scheduled.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .array_model import ArrayConfig, Emitter, synthesize_hybrid_snapshots, synthesize_snapshots
from .bench import ESTIMATORS, Method, flops, hybrid_crlb
from .estimators import (
    EstimateReport,
    max_rp,
    max_rp_qi,
    power_profile,
    root_music_plus_max_rp_qi,
)

SEED_DERIVATION = "trial seed = numpy SeedSequence([master_seed, trial_index, receiver]); receiver 0 = all-steered, 1 = Root-MUSIC two-part"

RMSE_COLUMNS = ("method", "snr_db", "n_snapshots", "k_left", "rmse_deg", "n_trials", "failures", "crlb_deg")
PROFILE_COLUMNS = ("theta0_deg", "snr_db", "n_snapshots", "sector_angle_deg", "mean_power")
COMPLEXITY_COLUMNS = ("n_antennas", "n_subarrays", "subarray_size", "n_snapshots", "method", "flops", "flops_exact")
CRLB_COLUMNS = ("snr_db", "n_snapshots", "k_left", "crlb_deg")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one Monte Carlo sweep. ``cfg.left_subarrays`` is unused; see ``left_subarray_grid``."""

    cfg: ArrayConfig
    theta0_deg: float = 41.0
    snr_grid_db: Sequence[float] = (-10, -5, 0, 5, 10, 15, 20)
    snapshot_grid: Sequence[int] = (100,)
    left_subarray_grid: Sequence[int] = (32,)
    n_trials: int = 500
    master_seed: int = 0
    methods: Sequence[Method] = ESTIMATORS
    noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(x) for x in self.snr_grid_db))
        object.__setattr__(self, "snapshot_grid", tuple(int(x) for x in self.snapshot_grid))
        object.__setattr__(self, "left_subarray_grid", tuple(int(x) for x in self.left_subarray_grid))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        if not (self.snr_grid_db and self.snapshot_grid and self.methods):
            raise ConfigError("grids and method list must be non-empty")
        if Method.TLHAD in self.methods:
            raise ConfigError("TLHAD has a complexity model only, it cannot be simulated")
        if Method.ROOT_MUSIC_QI in self.methods and not self.left_subarray_grid:
            raise ConfigError("left_subarray_grid must be non-empty for RootMusicPlusMaxRPQI")
        if any(n < 1 for n in self.snapshot_grid):
            raise ConfigError("snapshot counts must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.noise_variance >= 0:
            raise ConfigError("noise_variance must be >= 0")
        try:
            self.cfg.check_angle(self.theta0, "theta0")
            for q in self.left_subarray_grid:
                replace(self.cfg, left_subarrays=q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if Method.ROOT_MUSIC_QI in self.methods:
            for q in self.left_subarray_grid:
                if not 2 <= q <= self.cfg.n_subarrays - 3:
                    raise ConfigError(f"left subarray count {q} outside [2, K - 3]")

    @property
    def theta0(self) -> float:
        return float(np.radians(self.theta0_deg))

    def emitter(self, snr_db: float) -> Emitter:
        power = 10 ** (snr_db / 10) * (self.noise_variance if self.noise_variance > 0 else 1.0)
        return Emitter(self.theta0, power)

    def describe(self) -> list[str]:
        c = self.cfg
        return [
            f"n_antennas={c.n_antennas} subarray_size={c.subarray_size} n_subarrays={c.n_subarrays} "
            f"spacing_wavelengths={c.spacing_wavelengths} angle_reference={c.angle_reference}",
            f"theta0_deg={self.theta0_deg} noise_variance={self.noise_variance} n_trials={self.n_trials}",
            "snr_db_list=" + ",".join(f"{x:g}" for x in self.snr_grid_db),
            "snapshots_list=" + ",".join(str(x) for x in self.snapshot_grid),
            "left_subarrays_list=" + ",".join(str(x) for x in self.left_subarray_grid),
            "methods=" + ",".join(m.value for m in self.methods),
            f"seed={self.master_seed}",
            SEED_DERIVATION,
        ]


@dataclass(frozen=True)
class RmseRow:
    method: Method
    snr_db: float
    n_snapshots: int
    k_left: int
    rmse_deg: float
    n_trials: int
    failures: int
    crlb_deg: float

    def values(self) -> tuple:
        return (self.method.value, self.snr_db, self.n_snapshots, self.k_left,
                self.rmse_deg, self.n_trials, self.failures, self.crlb_deg)


def trial_seed(master_seed: int, trial: int, receiver: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(trial), int(receiver)])


def run_trial(
    cfg: ArrayConfig,
    emitter: Emitter,
    noise_variance: float,
    n_snapshots: int,
    master_seed: int,
    trial: int,
    methods: Iterable[Method] = ESTIMATORS,
) -> EstimateReport:
    """All requested estimators on one time slot; ``cfg.left_subarrays`` sizes the Root-MUSIC part."""
    methods = set(methods)
    report = EstimateReport(emitter.angle, np.nan, np.nan, None, (master_seed, trial))
    if methods & {Method.MAX_RP, Method.MAX_RP_QI}:
        snaps = synthesize_snapshots(
            cfg, emitter, noise_variance, n_snapshots, trial_seed(master_seed, trial, 0), cfg.sector_centers()
        )
        tic = time.perf_counter()
        profile = power_profile(snaps)
        report.max_rp = max_rp(profile)
        report.timings[Method.MAX_RP] = time.perf_counter() - tic
        tic = time.perf_counter()
        report.max_rp_qi = max_rp_qi(power_profile(snaps))
        report.timings[Method.MAX_RP_QI] = time.perf_counter() - tic
    if Method.ROOT_MUSIC_QI in methods:
        hyb = synthesize_hybrid_snapshots(cfg, emitter, noise_variance, n_snapshots, trial_seed(master_seed, trial, 1))
        tic = time.perf_counter()
        est = root_music_plus_max_rp_qi(hyb.right, hyb.left, cfg)
        report.timings[Method.ROOT_MUSIC_QI] = time.perf_counter() - tic
        report.root_music_qi = est.angle
        report.root_music_failed = est.fallback
    return report


def _map_trials(fn, n_trials: int, threads: int):
    if threads <= 1:
        return [fn(t) for t in range(n_trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_trials)))


def _rmse_deg(estimates, truth) -> float:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        return float("nan")
    return float(np.degrees(np.sqrt(np.mean((est - truth) ** 2))))


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list[RmseRow]:
    """RMSE of every method at every grid point, with the matching CRLB attached.

    Max-RP and Max-RP-QI run on a receiver whose ``K`` subarrays are all
    steered (reported with ``k_left = 0``); Root-MUSIC plus Max-RP-QI runs
    once per left-part size. Flagged Root-MUSIC failures are counted and
    left out of the RMSE.
    """
    rows: list[RmseRow] = []
    truth = spec.theta0
    steered = [m for m in spec.methods if m is not Method.ROOT_MUSIC_QI]
    cfg0 = replace(spec.cfg, left_subarrays=0)
    for L in spec.snapshot_grid:
        for snr in spec.snr_grid_db:
            em = spec.emitter(snr)
            if steered:
                reports = _map_trials(
                    lambda t: run_trial(cfg0, em, spec.noise_variance, L, spec.master_seed, t, steered),
                    spec.n_trials, threads,
                )
                bound = _crlb_or_nan(cfg0, em, spec.noise_variance, L)
                for m in steered:
                    attr = "max_rp" if m is Method.MAX_RP else "max_rp_qi"
                    rmse = _rmse_deg([getattr(r, attr) for r in reports], truth)
                    rows.append(RmseRow(m, snr, L, 0, rmse, spec.n_trials, 0, bound))
            if Method.ROOT_MUSIC_QI in spec.methods:
                for q in spec.left_subarray_grid:
                    cfg = replace(spec.cfg, left_subarrays=q)
                    reports = _map_trials(
                        lambda t: run_trial(cfg, em, spec.noise_variance, L, spec.master_seed, t, [Method.ROOT_MUSIC_QI]),
                        spec.n_trials, threads,
                    )
                    ok = [r.root_music_qi for r in reports if not r.root_music_failed]
                    rows.append(RmseRow(
                        Method.ROOT_MUSIC_QI, snr, L, q, _rmse_deg(ok, truth), spec.n_trials,
                        spec.n_trials - len(ok), _crlb_or_nan(cfg, em, spec.noise_variance, L),
                    ))
    return rows


def _crlb_or_nan(cfg, emitter, noise_variance, L) -> float:
    if noise_variance <= 0 or emitter.power <= 0:
        return float("nan")
    return hybrid_crlb(cfg, emitter, noise_variance, L).crlb_deg


def power_profile_trials(spec: ExperimentSpec, snr_db: float, n_snapshots: int, threads: int = 1) -> np.ndarray:
    """``n_trials x K`` matrix of Max-RP power profiles (same seeds as :func:`run_experiment`)."""
    cfg0 = replace(spec.cfg, left_subarrays=0)
    em = spec.emitter(snr_db)
    angles = cfg0.sector_centers()

    def one(t):
        snaps = synthesize_snapshots(cfg0, em, spec.noise_variance, n_snapshots, trial_seed(spec.master_seed, t, 0), angles)
        return power_profile(snaps).powers

    return np.vstack(_map_trials(one, spec.n_trials, threads))


def power_profile_rows(spec: ExperimentSpec, threads: int = 1) -> list[tuple]:
    """Trial-averaged power per sector for every SNR and snapshot count of ``spec``."""
    angles = np.degrees(spec.cfg.sector_centers())
    rows = []
    for L in spec.snapshot_grid:
        for snr in spec.snr_grid_db:
            mean = power_profile_trials(spec, snr, L, threads).mean(axis=0)
            rows.extend((spec.theta0_deg, snr, L, a, p) for a, p in zip(angles, mean))
    return rows


def complexity_rows(n_grid: Sequence[int], subarray_size: int, snapshots: Sequence[int]) -> list[tuple]:
    """FLOP counts of all four methods for ``N`` in ``n_grid`` with fixed ``M`` (so ``K = N / M``)."""
    if not n_grid:
        raise ConfigError("antenna grid must be non-empty")
    rows = []
    for n in n_grid:
        if n % subarray_size:
            raise ConfigError(f"n_antennas {n} is not a multiple of subarray_size {subarray_size}")
        cfg = ArrayConfig(n, subarray_size, n // subarray_size)
        for L in snapshots:
            for m in Method:
                f = flops(m, cfg, L)
                rows.append((n, cfg.n_subarrays, subarray_size, L, m.value, float(f), str(f)))
    return rows


def crlb_rows(spec: ExperimentSpec) -> list[tuple]:
    """CRLB of the all-steered receiver (``k_left = 0``) and of each two-part receiver."""
    if not spec.noise_variance > 0:
        raise ConfigError("CRLB needs noise_variance > 0")
    rows = []
    for q in (0, *spec.left_subarray_grid):
        cfg = replace(spec.cfg, left_subarrays=q)
        for L in spec.snapshot_grid:
            for snr in spec.snr_grid_db:
                point = hybrid_crlb(cfg, spec.emitter(snr), spec.noise_variance, L)
                rows.append((snr, L, q, point.crlb_deg))
    return rows


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def format_csv(command: str, metadata: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    """``#`` metadata lines, then a header row, then the data rows."""
    buf = io.StringIO()
    buf.write(f"# hybrid-doa {command}\n")
    for line in metadata:
        buf.write(f"# {line}\n")
    buf.write("# columns: " + ",".join(columns) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# key=value configuration files

_LIST_KEYS = {
    "snr_db_list": float,
    "snapshots_list": int,
    "left_subarrays_list": int,
    "n_antennas_list": int,
    "methods": str,
}
_SCALAR_KEYS = {
    "n_antennas": int,
    "subarray_size": int,
    "n_subarrays": int,
    "left_subarrays": int,
    "theta0_deg": float,
    "spacing_wavelengths": float,
    "angle_reference": str,
    "noise_variance": float,
}

DEFAULTS = {
    "n_antennas": 1024,
    "subarray_size": 8,
    "n_subarrays": 128,
    "left_subarrays": 32,
    "theta0_deg": 41.0,
    "spacing_wavelengths": 0.5,
    "angle_reference": "endfire",
    "noise_variance": 1.0,
    "snr_db_list": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
    "snapshots_list": [100],
    "n_antennas_list": [1024, 2048, 4096, 8192],
    "methods": [m.value for m in ESTIMATORS],
}


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text}")
    return int(value)


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma separated."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, _, val = (s.strip() for s in line.partition("="))
        try:
            if key in _LIST_KEYS:
                conv = _int if _LIST_KEYS[key] is int else _LIST_KEYS[key]
                values[key] = [conv(v.strip()) for v in val.split(",") if v.strip()]
            elif key in _SCALAR_KEYS:
                conv = _int if _SCALAR_KEYS[key] is int else _SCALAR_KEYS[key]
                values[key] = conv(val)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return values


def load_config(path: str | Path | None) -> dict:
    merged = dict(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        merged.update(parse_config(text))
    merged.setdefault("left_subarrays_list", [merged["left_subarrays"]])
    return merged


def spec_from_config(values: dict, *, n_trials: int, seed: int) -> ExperimentSpec:
    try:
        cfg = ArrayConfig(
            values["n_antennas"], values["subarray_size"], values["n_subarrays"],
            values["spacing_wavelengths"], 0, values["angle_reference"],
        )
        return ExperimentSpec(
            cfg,
            theta0_deg=values["theta0_deg"],
            snr_grid_db=values["snr_db_list"],
            snapshot_grid=values["snapshots_list"],
            left_subarray_grid=values["left_subarrays_list"],
            n_trials=n_trials,
            master_seed=seed,
            methods=values["methods"],
            noise_variance=values["noise_variance"],
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
