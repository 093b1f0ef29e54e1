"""Uniform B-bit midrise quantizer and its componentwise complex extension.

Cells are indexed 1..2**B. With boundaries ``r_b = (b - 2**(B-1)) * step``
for ``b = 1..2**B - 1`` the cells are ``(-inf, r_1]``, ``(r_{b-1}, r_b]`` and
``(r_{2**B - 1}, inf)``. Every cell, end cells included, is represented by
``r_b - step/2``, so representatives are evenly spaced and symmetric about 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CellOutOfRange, NonFiniteInput


@dataclass(frozen=True)
class QuantizerSpec:
    bits: int
    step: float

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError(f"bits must be a positive integer, got {self.bits!r}")
        if not (np.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be positive and finite, got {self.step!r}")

    @classmethod
    def from_full_scale(cls, bits: int, full_scale: float) -> "QuantizerSpec":
        """Spread 2**bits cells evenly over ``[-full_scale, full_scale]``."""
        return cls(bits, 2.0 * full_scale / 2**bits)

    @property
    def levels(self) -> int:
        return 2**self.bits

    def boundaries(self) -> np.ndarray:
        """The 2**B - 1 finite boundary points r_1 < ... < r_{2**B-1}."""
        b = np.arange(1, self.levels)
        return (b - 2 ** (self.bits - 1)) * self.step


@dataclass(frozen=True)
class QuantizedComponent:
    cell: int
    representative: float


@dataclass(frozen=True)
class Full:
    """Full-precision channel: the observed value is used as is."""


@dataclass(frozen=True)
class Quantized:
    spec: QuantizerSpec


ResolutionTag = Full | Quantized


def _check_finite(v):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("quantizer input must be finite")
    return v


def _check_cell(b, spec: QuantizerSpec):
    b = np.asarray(b)
    if np.any((b < 1) | (b > spec.levels)) or np.any(b != np.round(b)):
        raise CellOutOfRange(f"cell index outside 1..{spec.levels}")
    return b.astype(np.int64)


def cell_index(v, spec: QuantizerSpec):
    """Index of the cell containing ``v`` (scalar or array)."""
    v = _check_finite(v)
    # number of boundaries strictly below v, plus one; v on a boundary stays low
    b = np.searchsorted(spec.boundaries(), v, side="left") + 1
    return int(b) if b.ndim == 0 else b


def representative(b, spec: QuantizerSpec):
    """Value emitted for cell ``b``."""
    b = _check_cell(b, spec)
    rep = (b - 2 ** (spec.bits - 1) - 0.5) * spec.step
    return float(rep) if rep.ndim == 0 else rep


def quantize(v, spec: QuantizerSpec):
    """Real quantizer: map each value to its cell representative."""
    return representative(cell_index(v, spec), spec)


def cell_bounds(b, spec: QuantizerSpec):
    """Lower (exclusive) and upper (inclusive) limits of cell ``b``.

    End cells return an infinite limit on their open side.
    """
    b = _check_cell(b, spec)
    lower = (b - 1 - 2 ** (spec.bits - 1)) * spec.step
    upper = (b - 2 ** (spec.bits - 1)) * spec.step
    lower = np.where(b == 1, -np.inf, lower).astype(float)
    upper = np.where(b == spec.levels, np.inf, upper).astype(float)
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def quantize_complex(y, spec: QuantizerSpec):
    """Quantize real and imaginary parts independently.

    Returns
    -------
    (QuantizedComponent, QuantizedComponent)
        Real and imaginary components. The emitted complex value is
        ``re.representative + 1j * im.representative``.
    """
    y = complex(y)
    out = []
    for part in (y.real, y.imag):
        b = cell_index(part, spec)
        out.append(QuantizedComponent(b, representative(b, spec)))
    return out[0], out[1]


def quantize_complex_array(y, spec: QuantizerSpec):
    """Vectorised complex quantizer.

    Returns the emitted complex values together with the real and imaginary
    cell indices.
    """
    y = np.asarray(y, dtype=complex)
    b_re = cell_index(y.real, spec)
    b_im = cell_index(y.imag, spec)
    emitted = representative(b_re, spec) + 1j * representative(b_im, spec)
    return emitted, b_re, b_im
