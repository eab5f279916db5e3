"""Gray-mapped square QAM built from two identical Gray-mapped PAM axes.

Bit labels are tuples of 0/1 with the most significant bit first.  The first
``M/2`` bits of a complex label select the in-phase PAM level and the last
``M/2`` bits select the quadrature level, using the same per-axis map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = ["PamAlphabet", "QamConstellation", "gray_code"]


def gray_code(n: int) -> int:
    return n ^ (n >> 1)


def _bits_of(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - j)) & 1 for j in range(width)], dtype=np.int8)


@dataclass(frozen=True)
class PamAlphabet:
    """Real ``2**m``-PAM axis with reflected Gray labels.

    ``points`` are sorted ascending.  The label of the level ``n`` steps below
    the most positive point is ``gray_code(n)``, so the MSB is 0 on the
    positive half and 1 on the negative half.
    """

    bits: int
    scale: float

    @cached_property
    def size(self) -> int:
        return 1 << self.bits

    @cached_property
    def points(self) -> np.ndarray:
        L = self.size
        return self.scale * (2.0 * np.arange(L) - (L - 1))

    @cached_property
    def labels(self) -> np.ndarray:
        """``labels[j]`` is the bit array (MSB first) of ``points[j]``."""
        L = self.size
        return np.array([_bits_of(gray_code(L - 1 - j), self.bits) for j in range(L)],
                        dtype=np.int8).reshape(L, self.bits)

    @cached_property
    def label_ints(self) -> np.ndarray:
        L = self.size
        return np.array([gray_code(L - 1 - j) for j in range(L)], dtype=np.int64)

    def subset(self, bit: int, value: int) -> np.ndarray:
        """Indices of the points whose label has ``value`` at position ``bit`` (0-based)."""
        return np.flatnonzero(self.labels[:, bit] == value)

    def subset_mask(self) -> np.ndarray:
        """Boolean array ``mask[bit, value, j]``."""
        mask = np.zeros((self.bits, 2, self.size), dtype=np.bool_)
        for i in range(self.bits):
            for b in (0, 1):
                mask[i, b] = self.labels[:, i] == b
        return mask

    def index_of(self, label_bits) -> np.ndarray:
        """Map label bit rows (..., bits) to point indices."""
        label_bits = np.asarray(label_bits, dtype=np.int64)
        weights = 1 << np.arange(self.bits - 1, -1, -1)
        code = label_bits @ weights
        lookup = np.empty(self.size, dtype=np.int64)
        lookup[self.label_ints] = np.arange(self.size)
        return lookup[code]

    def slice(self, y) -> np.ndarray:
        """Nearest point index; midpoints go to the smaller level."""
        t = np.asarray(y, dtype=float) / (2.0 * self.scale) + (self.size - 1) / 2.0
        idx = np.ceil(t - 0.5)
        return np.clip(idx, 0, self.size - 1).astype(np.int64)


@dataclass(frozen=True)
class QamConstellation:
    """Unit average energy square ``2**M``-QAM."""

    M: int
    pam: PamAlphabet = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be a positive even integer, got {self.M}")
        half = self.M // 2
        L = 1 << half
        # E|x|^2 = 2 * scale^2 * (L^2 - 1) / 3 = 1
        scale = np.sqrt(3.0 / (2.0 * (L * L - 1)))
        object.__setattr__(self, "pam", PamAlphabet(half, float(scale)))

    @property
    def size(self) -> int:
        return 1 << self.M

    @cached_property
    def labels(self) -> np.ndarray:
        """All ``2**M`` labels in natural binary order, shape (2**M, M)."""
        return np.array([_bits_of(n, self.M) for n in range(self.size)],
                        dtype=np.int8).reshape(self.size, self.M)

    @cached_property
    def points(self) -> np.ndarray:
        """``points[n]`` is the symbol carrying the natural-binary label ``n``."""
        return self.map_bits(self.labels)

    def map_bits(self, bits) -> np.ndarray:
        """Map bit rows of length M (any leading shape) to complex symbols."""
        bits = np.asarray(bits)
        half = self.M // 2
        re = self.pam.points[self.pam.index_of(bits[..., :half])]
        im = self.pam.points[self.pam.index_of(bits[..., half:])]
        return re + 1j * im

    def modulate(self, bits) -> np.ndarray:
        bits = np.asarray(bits)
        if bits.shape[-1] % self.M:
            raise ValueError(f"bit count {bits.shape[-1]} is not a multiple of M={self.M}")
        return self.map_bits(bits.reshape(*bits.shape[:-1], -1, self.M))

    def demodulate_hard(self, symbols) -> np.ndarray:
        symbols = np.asarray(symbols)
        re = self.pam.labels[self.pam.slice(symbols.real)]
        im = self.pam.labels[self.pam.slice(symbols.imag)]
        out = np.concatenate([re, im], axis=-1)
        return out.reshape(*symbols.shape[:-1], -1)

    def subset(self, bit: int, value: int) -> np.ndarray:
        """Symbols whose label carries ``value`` at complex bit position ``bit``."""
        return self.points[self.labels[:, bit] == value]
