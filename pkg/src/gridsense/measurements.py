"""Ground-truth states, noisy phasor measurements and resolution profiles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import DimensionMismatch, ProfileGap, UnsupportedK
from .network import NetworkModel
from .quantization import Full, Quantized, QuantizerSpec, cell_bounds, quantize_complex_array


@dataclass(frozen=True)
class StatePrior:
    magnitude_mean: float
    phase_mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("prior variance must be non-negative")

    @property
    def mean(self) -> complex:
        return complex(self.magnitude_mean * np.exp(1j * self.phase_mean))


# Bus-voltage priors, keyed by test-system label.
PRIORS = {
    "69": StatePrior(1.00, 5.60e-4, 5.46e-7),
    "69m": StatePrior(1.04, 1.71e-2, 5.66e-4),
    "37": StatePrior(0.01, 1.12, 9.86e-1),
}


def sample_state(prior: StatePrior, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. CN(nu_x, sigma_x^2) bus voltages."""
    if n < 1:
        raise ValueError("need at least one bus")
    scale = np.sqrt(prior.variance / 2.0)
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return prior.mean + scale * noise


def simulate_measurements(H: np.ndarray, x: np.ndarray, noise_variance: float, rng: np.random.Generator):
    """``y = H x + e`` with e ~ CN(0, noise_variance) i.i.d."""
    H = np.asarray(H)
    x = np.asarray(x)
    if H.ndim != 2 or x.ndim != 1 or H.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"H is {H.shape}, x is {x.shape}")
    if noise_variance < 0:
        raise ValueError("noise variance must be non-negative")
    P = H.shape[0]
    e = np.sqrt(noise_variance / 2.0) * (rng.standard_normal(P) + 1j * rng.standard_normal(P))
    return H @ x + e


@dataclass
class MeasurementSet:
    """Observed channels with their resolution.

    For quantized channels ``values`` holds the emitted representative and
    the four bound arrays hold the real/imaginary cell limits. Full channels
    carry ``-inf``/``inf`` there, which the solver never reads.
    """

    values: np.ndarray
    tags: list
    quantized: np.ndarray
    lower_re: np.ndarray
    upper_re: np.ndarray
    lower_im: np.ndarray
    upper_im: np.ndarray

    def __len__(self):
        return len(self.values)

    @property
    def quantized_channels(self) -> np.ndarray:
        return np.flatnonzero(self.quantized)

    @classmethod
    def full(cls, y) -> "MeasurementSet":
        y = np.asarray(y, dtype=complex)
        return apply_resolution_profile(y, [Full()] * len(y))


def apply_resolution_profile(y, profile) -> MeasurementSet:
    """Quantize the channels the profile marks as quantized.

    ``profile`` is either a sequence of resolution tags with one entry per
    channel or a mapping from 0-based channel index to tag.
    """
    y = np.asarray(y, dtype=complex)
    P = len(y)
    if isinstance(profile, Mapping):
        missing = [mu for mu in range(P) if mu not in profile]
        if missing:
            raise ProfileGap(f"profile misses channels {missing[:5]}{'...' if len(missing) > 5 else ''}")
        tags = [profile[mu] for mu in range(P)]
    else:
        tags = list(profile)
        if len(tags) != P:
            raise ProfileGap(f"profile has {len(tags)} entries for {P} channels")

    values = y.copy()
    quantized = np.zeros(P, dtype=bool)
    lo_re = np.full(P, -np.inf)
    hi_re = np.full(P, np.inf)
    lo_im = np.full(P, -np.inf)
    hi_im = np.full(P, np.inf)
    for mu, tag in enumerate(tags):
        if isinstance(tag, Full):
            continue
        if not isinstance(tag, Quantized):
            raise TypeError(f"channel {mu}: unknown resolution tag {tag!r}")
        spec = tag.spec
        emitted, b_re, b_im = quantize_complex_array(y[mu : mu + 1], spec)
        values[mu] = emitted[0]
        quantized[mu] = True
        lo_re[mu], hi_re[mu] = cell_bounds(int(b_re[0]), spec)
        lo_im[mu], hi_im[mu] = cell_bounds(int(b_im[0]), spec)
    return MeasurementSet(values, tags, quantized, lo_re, hi_re, lo_im, hi_im)


def auto_full_scale(H: np.ndarray, prior_mean: complex, prior_variance: float) -> np.ndarray:
    """Per-channel full-scale amplitude: four times the per-component rms of z.

    ``E|z_mu|^2 = |sum_i H_mu,i nu_x|^2 + sigma_x^2 sum_i |H_mu,i|^2`` for
    states drawn from the prior; the noise is not included.
    """
    H = np.asarray(H)
    power = np.abs(H.sum(axis=1) * prior_mean) ** 2 + prior_variance * (np.abs(H) ** 2).sum(axis=1)
    return 4.0 * np.sqrt(power / 2.0)


def build_profile(n_channels: int, channels: Sequence[int], bits: int, full_scale) -> list:
    """Resolution tags: ``bits``-bit quantizers on ``channels``, Full elsewhere.

    ``full_scale`` is a scalar or a per-channel array.
    """
    fs = np.broadcast_to(np.asarray(full_scale, dtype=float), (n_channels,))
    chosen = set(int(c) for c in channels)
    bad = [c for c in chosen if not 0 <= c < n_channels]
    if bad:
        raise ProfileGap(f"channels out of range: {sorted(bad)}")
    return [
        Quantized(QuantizerSpec.from_full_scale(bits, fs[mu])) if mu in chosen else Full()
        for mu in range(n_channels)
    ]


def selection_for_k(network: NetworkModel, k: int) -> np.ndarray:
    """Channels (0-based rows of H) of the side-chain meters quantized for ``k``.

    Networks with a ``k_ladder`` use the group list stored for ``k``;
    otherwise side-chain groups are accumulated in declaration order until
    exactly ``k`` meters are collected. Main-chain meters are never chosen.
    """
    groups = {g.name: g for g in network.side_chains}
    if not groups:
        raise UnsupportedK("network declares no side-chain groups")
    if network.k_ladder:
        if k not in network.k_ladder:
            raise UnsupportedK(f"K={k} not in ladder {sorted(network.k_ladder)}")
        names = network.k_ladder[k]
    else:
        names, total = [], 0
        for g in network.side_chains:
            if total >= k:
                break
            names.append(g.name)
            total += len(g.meters)
        if total != k:
            raise UnsupportedK(f"K={k} is not a cumulative group size")
    serials = [m for name in names for m in groups[name].meters]
    if len(serials) != k or len(set(serials)) != k:
        raise UnsupportedK(f"groups {names} hold {len(set(serials))} meters, not {k}")
    return np.array(sorted(network.meter_channel(s) for s in serials), dtype=int)


def trial_streams(seed: int, trial: int, n: int = 3) -> list[np.random.Generator]:
    """Independent generators for one trial (state, noise, solver)."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)])
    return [np.random.default_rng(s) for s in ss.spawn(n)]


@dataclass
class Scenario:
    network: NetworkModel
    prior: StatePrior
    noise_variance: float
    profile: dict = field(default_factory=lambda: {"mode": "full"})
    trials: int = 1
    seed: int = 0
    network_path: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")

    def quantized_channels(self) -> np.ndarray:
        mode = self.profile.get("mode", "full")
        if mode == "full":
            return np.array([], dtype=int)
        if mode == "k_ladder":
            return selection_for_k(self.network, int(self.profile["k"]))
        if mode == "explicit":
            return np.array(sorted(int(c) for c in self.profile["channels"]), dtype=int)
        raise ValueError(f"unknown profile mode {mode!r}")

    @property
    def bits(self) -> int:
        return int(self.profile.get("bits", 16))

    def full_scale(self, H: np.ndarray) -> np.ndarray:
        fs = self.profile.get("full_scale", "auto")
        if fs == "auto":
            return auto_full_scale(H, self.prior.mean, self.prior.variance)
        return np.full(H.shape[0], float(fs))

    def resolution_profile(self, H: np.ndarray) -> list:
        return build_profile(H.shape[0], self.quantized_channels(), self.bits, self.full_scale(H))
