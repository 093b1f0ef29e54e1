"""LMMSE baseline and the error metrics used to compare estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionMismatch, SingularSystem


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    mse_magnitude: float
    mse_phase: float  # radians squared, phase error wrapped to (-pi, pi]


def lmmse_estimate(H, y, sigma2: float) -> np.ndarray:
    """Ridge-regularised least squares ``(H^H H + sigma2 I)^{-1} H^H y``.

    Quantized channels enter through their emitted representatives; the
    regulariser is ``sigma2 * I`` regardless of the prior variance.
    """
    H = np.asarray(H, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if H.ndim != 2 or y.shape != (H.shape[0],):
        raise DimensionMismatch(f"H is {H.shape}, y is {y.shape}")
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    G = H.conj().T @ H + sigma2 * np.eye(H.shape[1])
    rhs = H.conj().T @ y
    try:
        c = scipy.linalg.cho_factor(G, lower=False)
        return scipy.linalg.cho_solve(c, rhs)
    except np.linalg.LinAlgError:
        pass
    # not positive definite in floating point: fall back to LU with a rank check
    if np.linalg.matrix_rank(G) < G.shape[0]:
        raise SingularSystem("H^H H + sigma2 I is singular")
    return scipy.linalg.solve(G, rhs, assume_a="her")


def wrap_phase(d):
    """Map angles to (-pi, pi]."""
    d = np.asarray(d, dtype=float)
    w = np.mod(d + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def compute_metrics(x_true, x_hat) -> MetricsReport:
    x_true = np.asarray(x_true, dtype=complex).ravel()
    x_hat = np.asarray(x_hat, dtype=complex).ravel()
    if x_true.shape != x_hat.shape or x_true.size == 0:
        raise DimensionMismatch(f"cannot compare {x_true.shape} with {x_hat.shape}")
    mse = float(np.mean(np.abs(x_true - x_hat) ** 2))
    mse_mag = float(np.mean((np.abs(x_true) - np.abs(x_hat)) ** 2))
    # adding +0.0 clears signed zeros, whose angle would otherwise be pi
    dphi = wrap_phase(np.angle(x_true + 0.0) - np.angle(x_hat + 0.0))
    # each term is at most pi^2; the clip only absorbs summation rounding
    mse_phase = min(float(np.mean(dphi**2)), np.pi**2)
    return MetricsReport(mse, mse_mag, mse_phase)
