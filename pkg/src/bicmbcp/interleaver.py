"""Spatial round-robin plus per-stream bit interleaving, and the coded-bit location map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["InterleaverSpec", "BitLocation", "LocationMap"]


@dataclass(frozen=True)
class BitLocation:
    """Where coded bit ``k_prime`` sits (all indices 0-based).

    ``(k, l, i)``: time instant, position in x', bit of the complex label.
    ``(l_hat, i_hat)``: real component (2l for the in-phase axis, 2l+1 for
    quadrature) and bit of its PAM label; only meaningful when ``l < P``.
    """

    k_prime: int
    k: int
    l: int
    i: int
    l_hat: int
    i_hat: int


def real_position(l: int, i: int, M: int) -> tuple[int, int]:
    half = M // 2
    return (2 * l, i) if i < half else (2 * l + 1, i - half)


def complex_position(l_hat: int, i_hat: int, M: int) -> tuple[int, int]:
    return l_hat // 2, i_hat + (M // 2) * (l_hat % 2)


@dataclass(frozen=True)
class InterleaverSpec:
    """Round-robin spatial interleaver followed by one permutation per stream.

    ``permutations[s][p]`` is the index (within stream ``s`` before
    interleaving) of the bit placed at position ``p``.
    """

    S: int
    permutations: tuple

    @classmethod
    def random(cls, S: int, stream_length: int, seed=None) -> "InterleaverSpec":
        rng = np.random.default_rng(seed)
        return cls(S, tuple(rng.permutation(stream_length) for _ in range(S)))

    @classmethod
    def identity(cls, S: int, stream_length: int) -> "InterleaverSpec":
        return cls(S, tuple(np.arange(stream_length) for _ in range(S)))

    def __post_init__(self):
        perms = tuple(np.asarray(p, dtype=np.int64) for p in self.permutations)
        object.__setattr__(self, "permutations", perms)
        if len(perms) != self.S:
            raise ValueError(f"need {self.S} stream permutations, got {len(perms)}")
        n = len(perms[0])
        for p in perms:
            if len(p) != n or not np.array_equal(np.sort(p), np.arange(n)):
                raise ValueError("each stream permutation must be a bijection of equal length")

    @property
    def stream_length(self) -> int:
        return len(self.permutations[0])

    @property
    def frame_length(self) -> int:
        return self.S * self.stream_length

    def interleave(self, codeword) -> np.ndarray:
        """Returns an (S, stream_length) array of interleaved stream bits."""
        codeword = np.asarray(codeword)
        if codeword.shape[0] != self.frame_length:
            raise ValueError(f"codeword length {codeword.shape[0]} != frame length "
                             f"{self.frame_length} (S={self.S})")
        streams = codeword.reshape(self.stream_length, self.S, *codeword.shape[1:]).swapaxes(0, 1)
        return np.stack([streams[s][self.permutations[s]] for s in range(self.S)])

    def deinterleave(self, streams) -> np.ndarray:
        streams = np.asarray(streams)
        out = np.empty_like(streams)
        for s in range(self.S):
            out[s][self.permutations[s]] = streams[s]
        return out.swapaxes(0, 1).reshape(self.frame_length, *streams.shape[2:])

    def location_map(self, M: int) -> "LocationMap":
        if self.stream_length % M:
            raise ValueError(f"stream length {self.stream_length} is not a multiple of M={M}")
        n = self.frame_length
        kp = np.arange(n)
        s = kp % self.S
        j = kp // self.S
        inv = np.empty((self.S, self.stream_length), dtype=np.int64)
        for t, perm in enumerate(self.permutations):
            inv[t][perm] = np.arange(self.stream_length)
        pos = inv[s, j]
        return LocationMap(M=M, k=pos // M, l=s, i=pos % M)


@dataclass(frozen=True)
class LocationMap:
    """Vectorized ``k' -> (k, l, i)`` over a whole frame."""

    M: int
    k: np.ndarray
    l: np.ndarray
    i: np.ndarray

    def __len__(self) -> int:
        return len(self.k)

    @property
    def l_hat(self) -> np.ndarray:
        return 2 * self.l + (self.i >= self.M // 2)

    @property
    def i_hat(self) -> np.ndarray:
        return self.i % (self.M // 2)

    def locate_bit(self, k_prime: int) -> BitLocation:
        if not 0 <= k_prime < len(self):
            raise IndexError(f"coded bit index {k_prime} outside frame of {len(self)} bits")
        k, l, i = int(self.k[k_prime]), int(self.l[k_prime]), int(self.i[k_prime])
        l_hat, i_hat = real_position(l, i, self.M)
        return BitLocation(k_prime, k, l, i, l_hat, i_hat)
