"""EM-assisted swept GAMP (EMSwGAMP) for complex linear state estimation.

Each iteration has three phases:

1. factor update: for every measurement mu, the Gaussian message
   ``z_mu ~ CN(omega_mu, rho_mu)`` and the posterior moments of ``z_mu`` under
   the channel likelihood (Gaussian for full-precision channels, Gaussian
   integrated over the quantizer cell otherwise), summarised as
   ``shat = (zhat - omega)/rho`` and ``zeta = (1 - varsigma/rho)/rho``;
2. swept variable update: buses are visited in a random order; after each
   bus the factors it touches are refreshed so the next bus sees them;
3. EM update of the prior mean and variance.

The Onsager term subtracted from ``omega`` is ``rho * shat`` with the most
recent ``shat``. On a full-precision channel this equals
``rho * (y - omega)/(sigma2 + rho)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, NumericBlowup
from .measurements import MeasurementSet
from .truncnorm import gaussian_interval_moments

log = logging.getLogger(__name__)


@dataclass
class Hyperparams:
    prior_mean: complex = 1.0 + 0.0j
    prior_variance: float = 1.0

    def __post_init__(self):
        if not self.prior_variance > 0:
            raise ValueError("prior variance must be positive")


@dataclass
class SolverOptions:
    max_iterations: int = 500
    epsilon: float = 1e-8
    em_enabled: bool = True
    em_rule: str = "posterior"
    damping: float = 0.0
    seed: int | None = 0
    # test switches: parallel (non-swept) variable updates, fixed sweep order
    sweep: bool = True
    permute: bool = True
    precision_floor: float = 1e-12

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class SolverState:
    xhat: np.ndarray
    tau: np.ndarray
    R: np.ndarray
    Sigma2: np.ndarray
    omega: np.ndarray
    rho: np.ndarray
    zhat: np.ndarray
    varsigma: np.ndarray
    shat: np.ndarray
    zeta: np.ndarray
    hyper: Hyperparams
    t: int = 1
    floor_events: int = 0


@dataclass
class Estimate:
    x: np.ndarray
    tau: np.ndarray
    hyper: Hyperparams
    iterations: int
    epsilon: float
    trace: list = field(default_factory=list)
    converged: bool = False
    floor_events: int = 0


# -- scalar channel and prior moments ------------------------------------------


def posterior_z_unquantized(omega, rho, y, sigma2):
    """Posterior mean and variance of z given ``y = z + e`` with e ~ CN(0, sigma2)."""
    omega = np.asarray(omega, dtype=complex)
    rho = np.asarray(rho, dtype=float)
    gain = rho / (rho + sigma2)
    zhat = omega + gain * (np.asarray(y) - omega)
    return zhat, gain * sigma2


def posterior_z_quantized(omega, rho, bounds_re, bounds_im, sigma2):
    """Posterior mean and variance of z when only the quantizer cell of y is known.

    ``y = z + e`` is CN(omega, sigma2 + rho) a priori. The cell is a
    rectangle, so the truncation splits into two independent real normals of
    variance ``(sigma2 + rho)/2``. Given y, z is Gaussian with mean
    ``omega + g (y - omega)`` and variance ``g sigma2``, ``g = rho/(rho + sigma2)``;
    averaging over the truncated y gives::

        zhat     = omega + g (E[y | cell] - omega)
        varsigma = g sigma2 + g^2 (Var[Re y | cell] + Var[Im y | cell])
    """
    omega = np.asarray(omega, dtype=complex)
    rho = np.asarray(rho, dtype=float)
    total = sigma2 + rho
    half = total / 2.0
    # one stacked call for both components keeps per-call overhead down in the sweep
    n = omega.size
    m, v = gaussian_interval_moments(
        np.concatenate([omega.real.ravel(), omega.imag.ravel()]),
        np.concatenate([np.broadcast_to(half, omega.shape).ravel()] * 2),
        np.concatenate([np.broadcast_to(bounds_re[0], omega.shape).ravel(),
                        np.broadcast_to(bounds_im[0], omega.shape).ravel()]),
        np.concatenate([np.broadcast_to(bounds_re[1], omega.shape).ravel(),
                        np.broadcast_to(bounds_im[1], omega.shape).ravel()]),
    )
    m_re, m_im = m[:n].reshape(omega.shape), m[n:].reshape(omega.shape)
    v_re, v_im = v[:n].reshape(omega.shape), v[n:].reshape(omega.shape)
    gain = rho / total
    zhat = omega + gain * ((m_re + 1j * m_im) - omega)
    varsigma = gain * sigma2 + gain * gain * (v_re + v_im)
    return zhat, varsigma


def posterior_x(R, Sigma2, hyper: Hyperparams):
    """Combine the message CN(R, Sigma2) with the prior CN(nu_x, sigma_x^2)."""
    R = np.asarray(R, dtype=complex)
    Sigma2 = np.asarray(Sigma2, dtype=float)
    s2x = hyper.prior_variance
    w = Sigma2 / (Sigma2 + s2x)
    return R + w * (hyper.prior_mean - R), w * s2x


def em_update(state: SolverState, rule: str = "messages") -> Hyperparams:
    """Refresh (nu_x, sigma_x^2).

    ``rule="messages"`` averages the prior-free messages (R, Sigma2);
    ``rule="posterior"`` averages the posterior moments (xhat, tau).
    """
    if rule == "messages":
        mean, spread = state.R, state.Sigma2
    elif rule == "posterior":
        mean, spread = state.xhat, state.tau
    else:
        raise ValueError(f"unknown EM rule {rule!r}")
    nu = complex(np.mean(mean))
    s2 = float(np.mean(np.abs(nu - mean) ** 2 + spread))
    return Hyperparams(nu, max(s2, np.finfo(float).tiny))


# -- solver -------------------------------------------------------------------


class _Channels:
    """Dispatch of channel moments to the full-precision or quantized formula."""

    def __init__(self, meas: MeasurementSet, sigma2: float):
        self.y = np.asarray(meas.values, dtype=complex)
        self.q = np.asarray(meas.quantized, dtype=bool)
        self.lo_re, self.hi_re = meas.lower_re, meas.upper_re
        self.lo_im, self.hi_im = meas.lower_im, meas.upper_im
        self.sigma2 = float(sigma2)
        self.any_q = bool(self.q.any())

    def moments(self, omega, rho, idx=None):
        if idx is None:
            idx = slice(None)
        y, q = self.y[idx], self.q[idx]
        zhat, varsigma = posterior_z_unquantized(omega, rho, y, self.sigma2)
        if self.any_q and q.any():
            zhat = np.array(zhat, dtype=complex, copy=True)
            varsigma = np.array(varsigma, dtype=float, copy=True)
            sel = np.flatnonzero(q)
            rows = np.arange(len(self.y))[idx][sel]
            zhat[sel], varsigma[sel] = posterior_z_quantized(
                omega[sel], rho[sel],
                (self.lo_re[rows], self.hi_re[rows]),
                (self.lo_im[rows], self.hi_im[rows]),
                self.sigma2,
            )
        return zhat, varsigma


def _messages(omega, rho, zhat, varsigma):
    shat = (zhat - omega) / rho
    zeta = (1.0 - varsigma / rho) / rho
    return shat, zeta


def init_state(measurements: MeasurementSet, H: np.ndarray, sigma2: float, hyper: Hyperparams | None = None):
    H = np.asarray(H)
    P, N = H.shape
    if len(measurements) != P:
        raise DimensionMismatch(f"{len(measurements)} measurements for H with {P} rows")
    hyper = Hyperparams() if hyper is None else Hyperparams(hyper.prior_mean, hyper.prior_variance)
    y = np.asarray(measurements.values, dtype=complex)
    return SolverState(
        xhat=np.ones(N, dtype=complex),
        tau=np.ones(N),
        R=np.zeros(N, dtype=complex),
        Sigma2=np.ones(N),
        omega=y.copy(),
        rho=np.ones(P),
        zhat=y.copy(),
        varsigma=np.zeros(P),
        # (y - omega)/(sigma2 + rho) with omega = y
        shat=np.zeros(P, dtype=complex),
        zeta=np.zeros(P),
        hyper=hyper,
    )


def _check_finite(state: SolverState, where: str):
    for name in ("xhat", "tau", "omega", "rho", "zhat", "varsigma"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise NumericBlowup(f"non-finite {name} after {where} at iteration {state.t}")


def factor_update(state: SolverState, H, channels: _Channels, damping: float = 0.0, H2=None):
    H2 = np.abs(H) ** 2 if H2 is None else H2
    rho = H2 @ state.tau
    omega = H @ state.xhat - rho * state.shat
    if damping > 0 and state.t > 1:
        rho = (1 - damping) * rho + damping * state.rho
        omega = (1 - damping) * omega + damping * state.omega
    rho = np.maximum(rho, np.finfo(float).tiny)
    zhat, varsigma = channels.moments(omega, rho)
    state.rho, state.omega, state.zhat, state.varsigma = rho, omega, zhat, varsigma
    state.shat, state.zeta = _messages(omega, rho, zhat, varsigma)
    _check_finite(state, "factor update")
    return state


def _column_support(H):
    cols = []
    for i in range(H.shape[1]):
        idx = np.flatnonzero(H[:, i])
        h = H[idx, i]
        cols.append((idx, h, np.conj(h), np.abs(h) ** 2))
    return cols


def _precision(h2, zeta, floor):
    prec = float(h2 @ zeta)
    scale = float(h2 @ np.abs(zeta))
    limit = floor * scale if scale > 0 else floor
    if prec <= limit:
        return max(limit, np.finfo(float).tiny), True
    return prec, False


def variable_sweep(state: SolverState, H, channels: _Channels, rng, options: SolverOptions, cols=None):
    """Sequential variable updates in a random order, refreshing touched factors."""
    cols = _column_support(H) if cols is None else cols
    N = len(state.xhat)
    order = rng.permutation(N) if options.permute else np.arange(N)
    xhat, tau = state.xhat, state.tau
    omega, rho, zhat, varsigma = state.omega, state.rho, state.zhat, state.varsigma
    shat, zeta = state.shat, state.zeta
    R, Sigma2 = state.R, state.Sigma2
    hyper = state.hyper
    for i in order:
        idx, h, hc, h2 = cols[i]
        prec, floored = _precision(h2, zeta[idx], options.precision_floor)
        state.floor_events += floored
        s2 = 1.0 / prec
        r = xhat[i] + s2 * (hc @ shat[idx])
        x_new, tau_new = posterior_x(r, s2, hyper)
        x_new, tau_new = complex(x_new), float(tau_new)
        d_rho = h2 * (tau_new - tau[i])
        rho_i = np.maximum(rho[idx] + d_rho, np.finfo(float).tiny)
        omega_i = omega[idx] + h * (x_new - xhat[i]) - shat[idx] * (rho_i - rho[idx])
        z_i, v_i = channels.moments(omega_i, rho_i, idx)
        rho[idx], omega[idx], zhat[idx], varsigma[idx] = rho_i, omega_i, z_i, v_i
        shat[idx], zeta[idx] = _messages(omega_i, rho_i, z_i, v_i)
        R[i], Sigma2[i], xhat[i], tau[i] = r, s2, x_new, tau_new
    _check_finite(state, "variable sweep")
    return state


def _parallel_update(state: SolverState, H, options: SolverOptions, H2=None):
    H2 = np.abs(H) ** 2 if H2 is None else H2
    prec = H2.T @ state.zeta
    scale = H2.T @ np.abs(state.zeta)
    limit = np.maximum(options.precision_floor * scale, np.finfo(float).tiny)
    low = prec <= limit
    state.floor_events += int(low.sum())
    prec = np.where(low, limit, prec)
    state.Sigma2 = 1.0 / prec
    state.R = state.xhat + state.Sigma2 * (H.conj().T @ state.shat)
    state.xhat, state.tau = posterior_x(state.R, state.Sigma2, state.hyper)
    _check_finite(state, "variable update")
    return state


def run(measurements: MeasurementSet, H, sigma2: float, options: SolverOptions | None = None,
        hyper: Hyperparams | None = None) -> Estimate:
    """Run EMSwGAMP until the squared change of the estimate drops below epsilon.

    Parameters
    ----------
    measurements : MeasurementSet
        Observed channels, in the row order of ``H``.
    H : (P, N) complex array
    sigma2 : float
        Measurement noise variance.
    options : SolverOptions, optional
    hyper : Hyperparams, optional
        Initial prior parameters; defaults to ``nu_x = 1``, ``sigma_x^2 = 1``.

    Returns
    -------
    Estimate
        ``converged`` is False when ``max_iterations`` was reached first.
    """
    options = SolverOptions() if options is None else options
    H = np.asarray(H, dtype=complex)
    state = init_state(measurements, H, sigma2, hyper)
    channels = _Channels(measurements, sigma2)
    rng = np.random.default_rng(options.seed)
    H2 = np.abs(H) ** 2
    cols = _column_support(H) if options.sweep else None

    trace = []
    eps = np.inf
    converged = False
    while state.t <= options.max_iterations:
        x_prev = state.xhat.copy()
        factor_update(state, H, channels, options.damping, H2)
        if options.sweep:
            variable_sweep(state, H, channels, rng, options, cols)
        else:
            _parallel_update(state, H, options, H2)
        if options.em_enabled:
            state.hyper = em_update(state, options.em_rule)
        eps = float(np.sum(np.abs(state.xhat - x_prev) ** 2))
        trace.append(eps)
        if eps < options.epsilon:
            converged = True
            break
        state.t += 1

    iterations = min(state.t, options.max_iterations)
    if not converged:
        log.info("EMSwGAMP stopped at max_iterations=%d with eps=%.3g", options.max_iterations, eps)
    return Estimate(
        x=state.xhat.copy(),
        tau=state.tau.copy(),
        hyper=Hyperparams(state.hyper.prior_mean, state.hyper.prior_variance),
        iterations=iterations,
        epsilon=eps,
        trace=trace,
        converged=converged,
        floor_events=state.floor_events,
    )
