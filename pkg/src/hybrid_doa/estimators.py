"""
Single-time-slot DOA estimators
===============================

* Max-RP: each steered subarray measures the power arriving from its sector;
  the loudest sector's center is the estimate.
* Max-RP-QI: a parabola through the peak power and its two neighbours,
  refined to its vertex.
* Root-MUSIC plus Max-RP-QI: Root-MUSIC on the all-ones left subarrays gives
  a precise but ambiguous spatial frequency (the subarray pitch ``M d``
  exceeds half a wavelength); the alias closest to the Max-RP-QI estimate
  from the steered subarrays is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .array_model import ArrayConfig, SnapshotMatrix
from .numerics import HermitianMatrix, hermitian_evd, noise_projector, poly_roots, sample_covariance


@dataclass(frozen=True)
class PowerProfile:
    """Average output power of each steered subarray next to its sector center."""

    sector_angles: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.sector_angles, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if angles.ndim != 1 or angles.shape != powers.shape or angles.size == 0:
            raise ValueError("sector_angles and powers must be non-empty 1-D arrays of equal length")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("sector_angles must be strictly increasing")
        if np.any(powers < 0) or not np.all(np.isfinite(powers)):
            raise ValueError("powers must be finite and nonnegative")
        object.__setattr__(self, "sector_angles", angles)
        object.__setattr__(self, "powers", powers)

    def __len__(self):
        return self.powers.size


class QIResult(NamedTuple):
    angle: float
    degenerate: bool


class Disambiguation(NamedTuple):
    angle: float
    fallback: bool


@dataclass(frozen=True)
class CandidateSet:
    """Alias family of the Root-MUSIC signal root.

    ``flagged`` is set (and ``angles`` left empty) when no signal eigenvalue
    stands out of the noise floor or no root lies near the unit circle.
    """

    angles: np.ndarray
    root: complex | None = None
    flagged: bool = False
    reason: str = ""

    def __len__(self):
        return self.angles.size


@dataclass(frozen=True)
class CombinedEstimate:
    angle: float
    reference: float
    candidates: CandidateSet
    fallback: bool = False
    low_confidence: bool = False


@dataclass
class EstimateReport:
    """Outcome of one Monte Carlo trial."""

    true_angle: float
    max_rp: float
    max_rp_qi: float
    root_music_qi: float | None
    seed: object
    timings: dict = field(default_factory=dict)
    root_music_failed: bool = False


def power_profile(snapshots: SnapshotMatrix, sector_angles=None) -> PowerProfile:
    """Per-row sample power ``(1/L) sum_l |y_k(l)|^2``.

    ``sector_angles`` defaults to the angles recorded on ``snapshots``.
    """
    if sector_angles is None:
        sector_angles = snapshots.sector_angles
    if sector_angles is None:
        raise ValueError("sector angles unknown for these snapshots")
    data = snapshots.data
    if len(sector_angles) != data.shape[0]:
        raise ValueError(f"{data.shape[0]} snapshot rows but {len(sector_angles)} sector angles")
    powers = np.mean(data.real**2 + data.imag**2, axis=1)
    return PowerProfile(np.asarray(sector_angles, dtype=float), powers)


def max_rp(profile: PowerProfile) -> float:
    """Center of the sector with the largest power; ties go to the lowest index."""
    return float(profile.sector_angles[np.argmax(profile.powers)])


def _three_points(profile: PowerProfile, k: int):
    th, p = profile.sector_angles, profile.powers
    n = len(profile)
    if n < 2:
        return None
    # Mirror padding at the ends keeps the three-point fit defined.
    if k == 0:
        return (2 * th[0] - th[1], th[0], th[1]), (p[1], p[0], p[1])
    if k == n - 1:
        return (th[k - 1], th[k], 2 * th[k] - th[k - 1]), (p[k - 1], p[k], p[k - 1])
    return (th[k - 1], th[k], th[k + 1]), (p[k - 1], p[k], p[k + 1])


def quadratic_interp(profile: PowerProfile, k_star: int | None = None) -> QIResult:
    """Vertex of the parabola through the powers at ``k_star - 1``, ``k_star``, ``k_star + 1``.

    ``k_star`` defaults to the arg-max sector. When the fitted parabola is
    not concave the sector center is returned with ``degenerate=True``.
    """
    if k_star is None:
        k_star = int(np.argmax(profile.powers))
    if not 0 <= k_star < len(profile):
        raise IndexError(f"k_star {k_star} out of range")
    center = float(profile.sector_angles[k_star])
    pts = _three_points(profile, k_star)
    if pts is None:
        return QIResult(center, True)
    (t0, t1, t2), (p0, p1, p2) = pts
    # Shift the abscissae so the center sits at zero; the vertex formula is
    # translation invariant and this avoids squaring large angles.
    a0, a2 = t0 - t1, t2 - t1
    num = (a0 * a0) * (p1 - p2) + (-(a2 * a2)) * (p1 - p0)
    den = (-a0) * (p1 - p2) - (-a2) * (p1 - p0)
    # Leading parabola coefficient is den / ((t0 - t1) (t0 - t2) (t1 - t2)).
    curvature = den / (a0 * (a0 - a2) * (-a2))
    if not curvature < 0:
        return QIResult(center, True)
    return QIResult(float(t1 - 0.5 * num / den), False)


def max_rp_qi(profile: PowerProfile) -> float:
    """Max-RP followed by three-point quadratic refinement."""
    return quadratic_interp(profile).angle


def root_music_coefficients(projector: np.ndarray) -> np.ndarray:
    """Coefficients (highest power first) of ``z^(Q-1) a_Q(z)^H P a_Q(z)``.

    The coefficient of ``z^(Q-1+d)`` is the sum of the ``d``-th diagonal of
    the projector, so the degree is ``2(Q-1)``.
    """
    q = projector.shape[0]
    return np.array([np.trace(projector, offset=o) for o in range(q - 1, -q, -1)])


_EDGE_TOL = 1e-9


def alias_angles(cfg: ArrayConfig, phase: float) -> np.ndarray:
    """Every angle whose virtual-array phase ``2 pi M (d/lambda) u`` equals ``phase`` mod ``2 pi``.

    Spatial frequencies on the boundary ``|u| = 1`` are excluded; a root
    phase that is only rounded away from an endpoint alias stays excluded
    through the ``_EDGE_TOL`` margin.
    """
    pitch = cfg.subarray_size * cfg.spacing_wavelengths
    base = phase / (2 * np.pi * pitch)
    step = 1 / pitch
    m = np.arange(np.floor((-1 - base) / step), np.ceil((1 - base) / step) + 1)
    u = base + m * step
    u = u[np.abs(u) < 1 - _EDGE_TOL]
    angles = np.sort(cfg.angle_from_frequency(u))
    if angles.size > 1:
        angles = angles[np.concatenate(([True], np.diff(angles) > 1e-9))]
    return angles


def _signal_present(values: np.ndarray, n_snapshots: int | None) -> bool:
    rest = values[1:]
    floor = float(np.mean(rest))
    if floor <= 1e-12 * max(values[0], 0.0):
        return values[0] > 0
    threshold = 1 + (3 / np.sqrt(n_snapshots) if n_snapshots else 1e-8)
    return values[0] / floor >= threshold


def root_music_candidates(left_snapshots, cfg: ArrayConfig) -> CandidateSet:
    """Candidate DOAs from Root-MUSIC over the ``Q`` all-ones left subarrays.

    ``left_snapshots`` is the ``Q x L`` left-part data, or an already formed
    :class:`HermitianMatrix` (e.g. an exact covariance, treated as ``L = inf``).
    The root nearest the unit circle among those with ``|z| <= 1`` is the
    signal root; all its aliases are returned.
    """
    q = cfg.left_subarrays
    if q < 2:
        raise ValueError("Root-MUSIC needs left_subarrays >= 2")
    if isinstance(left_snapshots, HermitianMatrix):
        cov, n_snapshots = left_snapshots, None
    else:
        left_snapshots = np.asarray(left_snapshots)
        cov, n_snapshots = sample_covariance(left_snapshots), left_snapshots.shape[1]
    if cov.order != q:
        raise ValueError(f"expected {q} left subarrays, got {cov.order}")
    empty = np.empty(0)

    pair = hermitian_evd(cov)
    if not _signal_present(pair.values, n_snapshots):
        return CandidateSet(empty, flagged=True, reason="no signal eigenvalue above noise floor")

    roots = poly_roots(root_music_coefficients(noise_projector(pair)))
    radius = np.abs(roots)
    inside = roots[radius <= 1] if np.any(radius <= 1) else roots
    root = inside[np.argmin(np.abs(1 - np.abs(inside)))]
    if abs(1 - abs(root)) > 0.5:
        return CandidateSet(empty, complex(root), flagged=True, reason="no root near the unit circle")
    return CandidateSet(alias_angles(cfg, float(np.angle(root))), complex(root))


def disambiguate(candidates: CandidateSet, reference: float) -> Disambiguation:
    """Candidate closest to ``reference``; falls back to ``reference`` when there are none."""
    angles = np.sort(np.asarray(candidates.angles, dtype=float))
    if angles.size == 0:
        return Disambiguation(float(reference), True)
    return Disambiguation(float(angles[np.argmin((angles - reference) ** 2)]), False)


def root_music_plus_max_rp_qi(
    snapshots: SnapshotMatrix, left_snapshots, cfg: ArrayConfig
) -> CombinedEstimate:
    """Root-MUSIC candidates on the left part, resolved by Max-RP-QI on the steered part.

    ``snapshots`` holds the steered subarrays; their sector angles default to
    ``cfg.sector_centers(rows)``.
    """
    angles = snapshots.sector_angles
    if angles is None:
        angles = cfg.sector_centers(snapshots.data.shape[0])
    reference = max_rp_qi(power_profile(snapshots, angles))
    cands = root_music_candidates(left_snapshots, cfg)
    pick = disambiguate(cands, reference)
    low = False
    if not pick.fallback:
        # Outside a quarter of the alias spacing the choice is a guess.
        spacing = 1 / (cfg.subarray_size * cfg.spacing_wavelengths)
        du = cfg.spatial_frequency(pick.angle) - cfg.spatial_frequency(reference)
        low = bool(abs(du) > spacing / 4)
    return CombinedEstimate(pick.angle, reference, cands, pick.fallback, low)
