"""Covariance, Hermitian eigendecomposition and polynomial rooting kernels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class NumericalError(RuntimeError):
    """A kernel could not meet its accuracy contract."""


@dataclass(frozen=True)
class HermitianMatrix:
    """Square complex matrix, symmetrized as ``(A + A^H) / 2`` on construction."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("Hermitian matrix must be square")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        object.__setattr__(self, "data", (a + a.conj().T) / 2)

    @property
    def order(self) -> int:
        return self.data.shape[0]


class EigenPair(NamedTuple):
    values: np.ndarray
    """Real eigenvalues, descending."""
    vectors: np.ndarray
    """Orthonormal eigenvectors as columns, same order as ``values``."""


def sample_covariance(rows) -> HermitianMatrix:
    """``(1/L) sum_l y(l) y(l)^H`` over the columns of a ``Q x L`` array."""
    y = np.asarray(rows)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.size == 0:
        raise ValueError("need a non-empty Q x L snapshot array")
    return HermitianMatrix(y @ y.conj().T / y.shape[1])


def hermitian_evd(a: HermitianMatrix) -> EigenPair:
    """Eigendecomposition with eigenvalues sorted in descending order."""
    if not isinstance(a, HermitianMatrix):
        a = HermitianMatrix(a)
    values, vectors = np.linalg.eigh(a.data)
    return EigenPair(values[::-1].copy(), vectors[:, ::-1].copy())


def noise_projector(pair: EigenPair, n_signals: int = 1) -> np.ndarray:
    """``U_N U_N^H`` from the eigenvectors beyond the ``n_signals`` largest."""
    un = pair.vectors[:, n_signals:]
    return un @ un.conj().T


def _trim(coeffs: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        raise ValueError("all-zero polynomial")
    keep = np.nonzero(np.abs(coeffs) >= 1e-14 * scale)[0]
    return coeffs[keep[0]:]


def _companion_roots(c: np.ndarray) -> np.ndarray:
    n = len(c) - 1
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(n - 1)
    # LAPACK geev balances the matrix before the QR iteration.
    return np.linalg.eigvals(comp)


def _aberth(c: np.ndarray, z: np.ndarray, iters: int = 200) -> np.ndarray:
    dc = np.polyder(c)
    z = z.astype(complex).copy()
    for _ in range(iters):
        f = np.polyval(c, z)
        df = np.polyval(dc, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = f / df
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            repulsion = np.sum(1 / diff, axis=1)
            step = ratio / (1 - ratio * repulsion)
        step = np.where(np.isfinite(step), step, 0)
        z -= step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(z))):
            break
    return z


def _residual_ok(c: np.ndarray, z: np.ndarray, scale: float) -> bool:
    deg = len(c) - 1
    bound = 1e-6 * scale * np.maximum(1.0, np.abs(z)) ** deg
    return bool(np.all(np.abs(np.polyval(c, z)) <= bound))


def poly_roots(coeffs) -> np.ndarray:
    """Roots of ``sum_i coeffs[i] z^(D-i)`` (highest power first).

    Leading coefficients below ``1e-14 * max|coeffs|`` are dropped before
    rooting. Roots come from the companion matrix; if any root misses the
    residual bound the whole set is refined by Aberth iteration.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    scale = np.max(np.abs(c)) if c.size else 0.0
    c = _trim(c)
    if len(c) < 2:
        raise ValueError("polynomial has degree 0")
    z = _companion_roots(c)
    if _residual_ok(c, z, scale):
        return z
    z = _aberth(c, z)
    if not _residual_ok(c, z, scale):
        raise NumericalError("polynomial roots failed the residual check")
    return z
