"""
Hybrid ULA geometry and receive-signal model
============================================

A uniform linear array of ``N = K * M`` antennas is split into ``K``
contiguous subarrays of ``M`` elements. Each subarray owns one RF chain:
its ``M`` element signals are phase-shifted and summed in analog, so the
digital side sees one complex scalar per subarray and snapshot.

Angles are in radians. Every direction-dependent quantity goes through a
single spatial frequency ``u(theta)``:

* ``"endfire"`` reference (default): ``u = cos(theta)``, ``theta`` in (0, pi)
* ``"broadside"`` reference: ``u = sin(theta)``, ``theta`` in (-pi/2, pi/2)

Both map their open domain one-to-one onto (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_REFERENCES = ("endfire", "broadside")

# |sin(x/2)| below this is treated as the removable singularity of the
# Dirichlet ratio.
_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class ArrayConfig:
    """Static geometry and partition of the hybrid ULA.

    Parameters
    ----------
    n_antennas : int
        Total number of antennas ``N``.
    subarray_size : int
        Antennas per subarray ``M``.
    n_subarrays : int
        Number of subarrays ``K``; ``N == K * M`` is enforced.
    spacing_wavelengths : float
        Element spacing ``d / lambda``.
    left_subarrays : int
        Number ``Q`` of subarrays (taken from the start of the array) with
        all-zero analog phases feeding Root-MUSIC. ``0`` disables that stage.
    angle_reference : {"endfire", "broadside"}
        Axis the DOA is measured from, see the module docstring.
    """

    n_antennas: int
    subarray_size: int
    n_subarrays: int
    spacing_wavelengths: float = 0.5
    left_subarrays: int = 0
    angle_reference: str = "endfire"

    def __post_init__(self):
        for name in ("n_antennas", "subarray_size", "n_subarrays"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.n_antennas != self.n_subarrays * self.subarray_size:
            raise ValueError(
                f"n_antennas ({self.n_antennas}) must equal n_subarrays * subarray_size "
                f"({self.n_subarrays} * {self.subarray_size})"
            )
        if not self.spacing_wavelengths > 0:
            raise ValueError("spacing_wavelengths must be > 0")
        if not 0 <= self.left_subarrays <= self.n_subarrays:
            raise ValueError(
                f"left_subarrays must lie in [0, {self.n_subarrays}], got {self.left_subarrays}"
            )
        if self.angle_reference not in _REFERENCES:
            raise ValueError(f"angle_reference must be one of {_REFERENCES}")

    @property
    def domain(self) -> tuple[float, float]:
        """Open interval of admissible angles."""
        if self.angle_reference == "endfire":
            return 0.0, np.pi
        return -np.pi / 2, np.pi / 2

    def spatial_frequency(self, angle):
        """``u(theta)``; works on scalars and arrays."""
        if self.angle_reference == "endfire":
            return np.cos(angle)
        return np.sin(angle)

    def spatial_frequency_derivative(self, angle):
        """``du/dtheta``."""
        if self.angle_reference == "endfire":
            return -np.sin(angle)
        return np.cos(angle)

    def angle_from_frequency(self, u):
        """Inverse of :meth:`spatial_frequency` on (-1, 1)."""
        if self.angle_reference == "endfire":
            return np.arccos(u)
        return np.arcsin(u)

    def sector_centers(self, count: int | None = None) -> np.ndarray:
        """Centers of ``count`` equal sectors tiling the angle domain.

        With the endfire reference these are ``(2k - 1) * pi / (2 * count)``
        for ``k = 1..count``. Defaults to one sector per subarray.
        """
        count = self.n_subarrays if count is None else int(count)
        if count < 1:
            raise ValueError("sector count must be >= 1")
        lo, _ = self.domain
        return lo + (2 * np.arange(1, count + 1) - 1) * np.pi / (2 * count)

    def sector_index(self, angle: float, count: int | None = None) -> int:
        """Index of the sector (out of ``count``) containing ``angle``."""
        count = self.n_subarrays if count is None else int(count)
        lo, _ = self.domain
        return min(int((angle - lo) // (np.pi / count)), count - 1)

    def right_sector_angles(self) -> np.ndarray:
        """Sector centers served by the ``K - Q`` steered subarrays."""
        return self.sector_centers(self.n_subarrays - self.left_subarrays)

    def check_angle(self, angle, name: str = "angle") -> None:
        lo, hi = self.domain
        a = np.asarray(angle, dtype=float)
        if not np.all(np.isfinite(a)) or np.any(a <= lo) or np.any(a >= hi):
            raise ValueError(f"{name} must lie in the open interval ({lo:.6g}, {hi:.6g})")

    def _check_subarray(self, k: int) -> None:
        if not 0 <= k < self.n_subarrays:
            raise IndexError(f"subarray index {k} out of range [0, {self.n_subarrays})")


@dataclass(frozen=True)
class Emitter:
    """Single far-field narrowband source with direction ``angle`` and power ``power``."""

    angle: float
    power: float = 1.0

    def __post_init__(self):
        if not self.power >= 0:
            raise ValueError("emitter power must be >= 0")


@dataclass(frozen=True)
class SnapshotMatrix:
    """Subarray outputs after analog combining, one row per subarray."""

    data: np.ndarray
    noise_variance: float
    sector_angles: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] < 1:
            raise ValueError("snapshot data must be a 2-D array with at least one column")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class HybridSnapshots:
    """One time slot of the two-part receiver used by Root-MUSIC plus Max-RP-QI.

    ``left`` holds the ``Q`` all-ones-combined subarray outputs, ``right`` the
    ``K - Q`` sector-steered outputs. Both observe the same waveform.
    """

    left: np.ndarray
    right: SnapshotMatrix


def dirichlet(n: int, x):
    """``sum_{m=0}^{n-1} exp(j m x)`` evaluated without cancellation.

    Uses ``exp(j (n-1) x / 2) sin(n x / 2) / sin(x / 2)``, which equals the
    ratio ``(exp(j n x) - 1) / (exp(j x) - 1)``; the removable singularity
    at ``x = 2 pi p`` is replaced by the explicit phasor sum.
    """
    x = np.asarray(x, dtype=float)
    half = np.sin(x / 2)
    singular = np.abs(half) < _SINGULAR_TOL
    safe_half = np.where(singular, 1.0, half)
    out = np.asarray(np.exp(0.5j * (n - 1) * x) * np.sin(n * x / 2) / safe_half)
    if np.any(singular):
        m = np.arange(n)
        out[singular] = np.exp(1j * np.multiply.outer(x[singular], m)).sum(axis=-1)
    return out[()] if out.ndim == 0 else out


def steering_vector(cfg: ArrayConfig, k: int, angle: float) -> np.ndarray:
    """Array manifold of subarray ``k`` (0-based) for a source at ``angle``.

    Element ``m = 1..M`` is ``exp(j 2 pi psi_k) exp(j 2 pi (m - M/2) (d/lambda) u)``
    with the subarray offset ``psi_k = (k - K/2) M (d/lambda) u``.
    """
    cfg._check_subarray(k)
    cfg.check_angle(angle)
    M, K, d = cfg.subarray_size, cfg.n_subarrays, cfg.spacing_wavelengths
    u = cfg.spatial_frequency(angle)
    offset = (k - K / 2) * M * d * u
    m = np.arange(1, M + 1)
    return np.exp(2j * np.pi * offset) * np.exp(2j * np.pi * (m - M / 2) * d * u)


def analog_weights(cfg: ArrayConfig, k: int, sector_angle: float | None) -> np.ndarray:
    """Phase-shifter vector ``v`` of subarray ``k``; the subarray output is ``v^H a``.

    Steered weights are the subarray manifold at ``sector_angle`` scaled by
    ``1/sqrt(M)``, so post-combining noise variance equals the per-element
    one. ``sector_angle=None`` gives the all-zero-phase vector
    ``[1, ..., 1] / sqrt(M)`` used by the Root-MUSIC subarrays.
    """
    M = cfg.subarray_size
    if sector_angle is None:
        cfg._check_subarray(k)
        return np.full(M, 1 / np.sqrt(M), dtype=complex)
    return steering_vector(cfg, k, sector_angle) / np.sqrt(M)


def gamma_kernel(cfg: ArrayConfig, sector_angle, source_angle: float, normalized: bool = True):
    """Combined gain of a subarray steered to ``sector_angle`` for a source at ``source_angle``.

    This is the Dirichlet kernel ``sum_m exp(j 2 pi (d/lambda) m (u0 - u_k))``,
    divided by ``sqrt(M)`` when ``normalized``. ``sector_angle`` may be an array.
    """
    cfg.check_angle(sector_angle, "sector_angle")
    cfg.check_angle(source_angle, "source_angle")
    du = cfg.spatial_frequency(source_angle) - cfg.spatial_frequency(np.asarray(sector_angle))
    g = dirichlet(cfg.subarray_size, 2 * np.pi * cfg.spacing_wavelengths * du)
    return g / np.sqrt(cfg.subarray_size) if normalized else g


def g_factor(cfg: ArrayConfig, angle: float) -> complex:
    """Sum of the ``M`` element phasors of one subarray: ``sum_m exp(j 2 pi (m-1) (d/lambda) u)``."""
    cfg.check_angle(angle)
    u = cfg.spatial_frequency(angle)
    return complex(dirichlet(cfg.subarray_size, 2 * np.pi * cfg.spacing_wavelengths * u))


def virtual_manifold(cfg: ArrayConfig, angle: float) -> np.ndarray:
    """Manifold of the ``Q`` left subarrays viewed as a ULA with spacing ``M d``.

    Element ``q = 0..Q-1`` is ``exp(j 2 pi q M (d/lambda) u)``.
    """
    Q = cfg.left_subarrays
    if Q < 2:
        raise ValueError("virtual manifold needs left_subarrays >= 2")
    cfg.check_angle(angle)
    u = cfg.spatial_frequency(angle)
    q = np.arange(Q)
    return np.exp(2j * np.pi * q * cfg.subarray_size * cfg.spacing_wavelengths * u)


def left_response(cfg: ArrayConfig, angle: float) -> np.ndarray:
    """Noiseless gain vector of the left part: ``g(theta) a_Q(theta) / sqrt(M)``."""
    return g_factor(cfg, angle) * virtual_manifold(cfg, angle) / np.sqrt(cfg.subarray_size)


def _complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    z = rng.standard_normal((2, *shape))
    return np.sqrt(variance / 2) * (z[0] + 1j * z[1])


def synthesize_snapshots(
    cfg: ArrayConfig,
    emitter: Emitter,
    noise_variance: float,
    n_snapshots: int,
    seed=None,
    sector_angles: Sequence[float] | None = None,
) -> SnapshotMatrix:
    """Receive data of a Max-RP receiver whose ``K`` subarrays are steered to ``sector_angles``.

    Row ``k`` is ``gamma_k * s(l) + w_k(l)``; ``s`` and ``w_k`` are i.i.d.
    circular complex Gaussian with variances ``emitter.power`` and
    ``noise_variance``. ``seed`` may be anything accepted by
    :func:`numpy.random.default_rng`, including a ``Generator``.
    """
    if sector_angles is None:
        sector_angles = cfg.sector_centers()
    sector_angles = np.asarray(sector_angles, dtype=float)
    if sector_angles.shape != (cfg.n_subarrays,):
        raise ValueError(
            f"expected {cfg.n_subarrays} sector angles, got {sector_angles.shape[0] if sector_angles.ndim else 0}"
        )
    return _steered(cfg, emitter, noise_variance, n_snapshots, np.random.default_rng(seed), sector_angles)


def _check_draw(noise_variance: float, n_snapshots: int) -> None:
    if int(n_snapshots) != n_snapshots or n_snapshots < 1:
        raise ValueError("n_snapshots must be a positive integer")
    if not noise_variance >= 0:
        raise ValueError("noise_variance must be >= 0")


def _steered(cfg, emitter, noise_variance, n_snapshots, rng, sector_angles, waveform=None):
    _check_draw(noise_variance, n_snapshots)
    cfg.check_angle(emitter.angle, "emitter angle")
    if waveform is None:
        waveform = _complex_normal(rng, (n_snapshots,), emitter.power)
    gains = gamma_kernel(cfg, sector_angles, emitter.angle)
    noise = _complex_normal(rng, (len(sector_angles), n_snapshots), noise_variance)
    return SnapshotMatrix(np.outer(gains, waveform) + noise, noise_variance, sector_angles)


def synthesize_hybrid_snapshots(
    cfg: ArrayConfig,
    emitter: Emitter,
    noise_variance: float,
    n_snapshots: int,
    seed=None,
) -> HybridSnapshots:
    """Receive data of the two-part receiver: ``Q`` all-ones subarrays plus ``K - Q`` steered ones."""
    Q = cfg.left_subarrays
    if Q < 2 or Q > cfg.n_subarrays - 3:
        raise ValueError("hybrid receiver needs 2 <= left_subarrays <= n_subarrays - 3")
    _check_draw(noise_variance, n_snapshots)
    cfg.check_angle(emitter.angle, "emitter angle")
    rng = np.random.default_rng(seed)
    s = _complex_normal(rng, (n_snapshots,), emitter.power)
    left = np.outer(left_response(cfg, emitter.angle), s)
    left = left + _complex_normal(rng, (Q, n_snapshots), noise_variance)
    right = _steered(cfg, emitter, noise_variance, n_snapshots, rng, cfg.right_sector_angles(), s)
    return HybridSnapshots(left, right)
