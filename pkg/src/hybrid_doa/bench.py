"""
Performance references: numerical hybrid CRLB and closed-form FLOP counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .array_model import ArrayConfig, Emitter, dirichlet
from .numerics import NumericalError

FD_STEP = 1e-6


class Method(str, Enum):
    MAX_RP = "MaxRP"
    MAX_RP_QI = "MaxRPQI"
    ROOT_MUSIC_QI = "RootMusicPlusMaxRPQI"
    TLHAD = "TLHAD"


ESTIMATORS = (Method.MAX_RP, Method.MAX_RP_QI, Method.ROOT_MUSIC_QI)


@dataclass(frozen=True)
class CrlbPoint:
    snr_db: float
    n_snapshots: int
    crlb_deg: float


def mean_response(cfg: ArrayConfig, angle: float, sector_angles) -> np.ndarray:
    """Noiseless per-unit-waveform output of every subarray of the receiver.

    The ``Q = cfg.left_subarrays`` all-ones subarrays come first, then one
    entry per steered subarray in ``sector_angles``.
    """
    M, d = cfg.subarray_size, cfg.spacing_wavelengths
    u = cfg.spatial_frequency(angle)
    q = np.arange(cfg.left_subarrays)
    left = dirichlet(M, 2 * np.pi * d * u) * np.exp(2j * np.pi * q * M * d * u)
    du = u - cfg.spatial_frequency(np.asarray(sector_angles, dtype=float))
    right = dirichlet(M, 2 * np.pi * d * du)
    return np.concatenate([left, np.atleast_1d(right)]) / np.sqrt(M)


def mean_response_derivative(cfg: ArrayConfig, angle: float, sector_angles) -> np.ndarray:
    """Analytic ``d/dtheta`` of :func:`mean_response`, summed element by element."""
    M, d = cfg.subarray_size, cfg.spacing_wavelengths
    u = cfg.spatial_frequency(angle)
    dudt = cfg.spatial_frequency_derivative(angle)
    m = np.arange(M)
    pos = np.arange(cfg.left_subarrays)[:, None] * M + m[None, :]
    left = (2j * np.pi * d * pos * np.exp(2j * np.pi * d * pos * u)).sum(axis=1)
    du = u - cfg.spatial_frequency(np.asarray(sector_angles, dtype=float))
    right = (2j * np.pi * d * m * np.exp(2j * np.pi * d * np.outer(np.atleast_1d(du), m))).sum(axis=1)
    return np.concatenate([left, right]) * dudt / np.sqrt(M)


def _fd_derivative(cfg, angle, sector_angles, step=FD_STEP):
    def central(h):
        return (mean_response(cfg, angle + h, sector_angles) - mean_response(cfg, angle - h, sector_angles)) / (2 * h)

    coarse, fine = central(step), central(step / 2)
    richardson = (4 * fine - coarse) / 3
    if not np.all(np.isfinite(richardson)):
        raise NumericalError("non-finite finite-difference derivative")
    scale = np.linalg.norm(richardson)
    if np.linalg.norm(richardson - coarse) > 1e-4 * max(scale, 1e-300):
        raise NumericalError("finite-difference derivative failed the Richardson check")
    return richardson


def fisher_information(
    cfg: ArrayConfig,
    emitter: Emitter,
    noise_variance: float,
    n_snapshots: int,
    sector_angles=None,
    *,
    nuisance_gain: bool = True,
    derivative: str = "finite-difference",
) -> float:
    """Fisher information about the DOA carried by ``n_snapshots`` snapshots.

    ``I = (2 L P_s / sigma^2) * ||D||^2`` with ``D`` the angle derivative of
    the noiseless response. With ``nuisance_gain`` the left (all-ones) and
    steered parts each see the waveform through their own unknown complex
    gain, so ``D`` is projected orthogonally to the response of each part.
    That removes the dependence on where each part's phase reference sits.
    Without it the waveform is taken as exactly known.
    """
    if not noise_variance > 0:
        raise ValueError("noise_variance must be > 0")
    if int(n_snapshots) != n_snapshots or n_snapshots < 1:
        raise ValueError("n_snapshots must be a positive integer")
    cfg.check_angle(emitter.angle, "emitter angle")
    if sector_angles is None:
        sector_angles = cfg.right_sector_angles()
    if derivative == "finite-difference":
        dh = _fd_derivative(cfg, emitter.angle, sector_angles)
    elif derivative == "analytic":
        dh = mean_response_derivative(cfg, emitter.angle, sector_angles)
    else:
        raise ValueError(f"unknown derivative mode {derivative!r}")
    energy = np.vdot(dh, dh).real
    if nuisance_gain:
        h = mean_response(cfg, emitter.angle, sector_angles)
        q = cfg.left_subarrays
        for part in (slice(0, q), slice(q, None)):
            hp, dp = h[part], dh[part]
            norm = np.vdot(hp, hp).real
            if norm > 0:
                energy -= abs(np.vdot(hp, dp)) ** 2 / norm
    return 2 * n_snapshots * emitter.power / noise_variance * energy


def hybrid_crlb(
    cfg: ArrayConfig,
    emitter: Emitter,
    noise_variance: float,
    n_snapshots: int,
    sector_angles=None,
    **kwargs,
) -> CrlbPoint:
    """Root-CRLB in degrees for the receiver described by ``cfg`` and ``sector_angles``.

    ``sector_angles`` defaults to the ``K - Q`` right-part sectors, so with
    ``left_subarrays == 0`` this is the Max-RP receiver with one sector per
    subarray. Extra keyword arguments go to :func:`fisher_information`.
    """
    info = fisher_information(cfg, emitter, noise_variance, n_snapshots, sector_angles, **kwargs)
    snr_db = 10 * np.log10(emitter.power / noise_variance) if emitter.power > 0 else -np.inf
    bound = np.degrees(1 / np.sqrt(info)) if info > 0 else np.inf
    return CrlbPoint(float(snr_db), int(n_snapshots), float(bound))


def flops(method: Method | str, cfg: ArrayConfig, n_snapshots: int) -> Fraction:
    """Closed-form FLOP count of ``method`` for ``K`` subarrays of ``M`` antennas and ``L`` snapshots.

    Evaluated exactly in rational arithmetic::

        MaxRP                 K (3 M L^2 + L^2 - M)
        MaxRPQI               MaxRP + K^3/3 + 2 K^2 + 2 K/3
        RootMusicPlusMaxRPQI  (K - 2) (3 M L^2 + L^2 - M + K^3/3 + 2 K^2 + 2 K/3) + M^3 + 2 M L^2
        TLHAD                 M^3 + M^2 (2 L - 1) + N^3/4 + N^2 (2 L - 1)/4
    """
    method = Method(method)
    L = n_snapshots
    if int(L) != L or L < 1:
        raise ValueError("n_snapshots must be a positive integer")
    K, M, N = cfg.n_subarrays, cfg.subarray_size, cfg.n_antennas
    per_subarray = 3 * M * L**2 + L**2 - M
    qi = Fraction(K**3, 3) + 2 * K**2 + Fraction(2 * K, 3)
    if method is Method.MAX_RP:
        return Fraction(K * per_subarray)
    if method is Method.MAX_RP_QI:
        return K * per_subarray + qi
    if method is Method.ROOT_MUSIC_QI:
        return (K - 2) * (per_subarray + qi) + M**3 + 2 * M * L**2
    return M**3 + M**2 * (2 * L - 1) + Fraction(N**3, 4) + Fraction(N**2 * (2 * L - 1), 4)
