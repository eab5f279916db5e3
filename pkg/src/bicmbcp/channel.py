"""Rayleigh MIMO channels, SVD beamforming and the diagonal subchannel system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelMatrix",
    "SvdBeamformer",
    "SubchannelAssignment",
    "GammaMatrix",
    "DegenerateChannelError",
    "generate_channel",
    "decompose",
    "subchannel_system",
    "transmit_and_receive",
    "transmit_physical",
    "noise_variance",
]


class DegenerateChannelError(ValueError):
    """Raised when a channel realization is (numerically) rank deficient."""


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray
    seed: int | None = None

    @property
    def n_r(self) -> int:
        return self.entries.shape[0]

    @property
    def n_t(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SvdBeamformer:
    U_S: np.ndarray
    V_S: np.ndarray
    singular_values: np.ndarray

    @property
    def S(self) -> int:
        return len(self.singular_values)


@dataclass(frozen=True)
class SubchannelAssignment:
    """Which subchannels (0-based) carry precoded / non-precoded symbols."""

    b_p: tuple[int, ...]
    b_n: tuple[int, ...]

    def __post_init__(self):
        bp, bn = tuple(int(v) for v in self.b_p), tuple(int(v) for v in self.b_n)
        object.__setattr__(self, "b_p", bp)
        object.__setattr__(self, "b_n", bn)
        if any(a >= b for a, b in zip(bp, bp[1:])) or any(a >= b for a, b in zip(bn, bn[1:])):
            raise ValueError("b_p and b_n must be strictly increasing")
        if sorted(bp + bn) != list(range(len(bp) + len(bn))):
            raise ValueError(f"b_p={bp} and b_n={bn} must partition 0..S-1")

    @classmethod
    def full(cls, S: int) -> "SubchannelAssignment":
        return cls(tuple(range(S)), ())

    @property
    def S(self) -> int:
        return len(self.b_p) + len(self.b_n)

    @property
    def P(self) -> int:
        return len(self.b_p)

    @property
    def T(self) -> np.ndarray:
        """Permutation matrix sending position ``u`` of x' to its subchannel."""
        T = np.zeros((self.S, self.S))
        for u, s in enumerate(self.b_p + self.b_n):
            T[s, u] = 1.0
        return T


@dataclass(frozen=True)
class GammaMatrix:
    gamma_p: np.ndarray
    gamma_n: np.ndarray

    @property
    def full(self) -> np.ndarray:
        P, N = len(self.gamma_p), len(self.gamma_n)
        out = np.zeros((P + N, P + N))
        out[:P, :P] = self.gamma_p
        out[P:, P:] = self.gamma_n
        return out


def generate_channel(n_r: int, n_t: int, seed=None) -> ChannelMatrix:
    """i.i.d. CN(0, 1) channel; deterministic for a given seed."""
    if n_r < 1 or n_t < 1:
        raise ValueError(f"channel dimensions must be >= 1, got {n_r}x{n_t}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    H = (rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))) / np.sqrt(2.0)
    return ChannelMatrix(H, seed if isinstance(seed, (int, np.integer)) else None)


def decompose(H: ChannelMatrix | np.ndarray, S: int) -> SvdBeamformer:
    """Truncated SVD with each right singular vector's first nonzero entry real-positive."""
    mat = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)
    if not 1 <= S <= min(mat.shape):
        raise ValueError(f"S={S} must lie in 1..{min(mat.shape)}")
    U, lam, Vh = np.linalg.svd(mat)
    U_S, V_S, lam = U[:, :S].copy(), Vh.conj().T[:, :S].copy(), lam[:S].copy()
    for s in range(S):
        col = V_S[:, s]
        nz = np.flatnonzero(np.abs(col) > 1e-14)
        if nz.size:
            phase = col[nz[0]] / abs(col[nz[0]])
            V_S[:, s] *= np.conj(phase)
            U_S[:, s] *= np.conj(phase)
    return SvdBeamformer(U_S, V_S, lam)


def subchannel_system(bf: SvdBeamformer, assign: SubchannelAssignment) -> GammaMatrix:
    lam = bf.singular_values
    if assign.S != len(lam):
        raise ValueError(f"assignment covers {assign.S} subchannels, beamformer has {len(lam)}")
    return GammaMatrix(np.diag(lam[list(assign.b_p)]), np.diag(lam[list(assign.b_n)]))


def noise_variance(snr_db: float, S: int) -> float:
    """Per-entry complex noise variance N0 = S / SNR."""
    return S / 10.0 ** (snr_db / 10.0)


def _complex_noise(rng, shape, noise_var):
    if noise_var == 0:
        return np.zeros(shape, dtype=complex)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return np.sqrt(noise_var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit_and_receive(gamma: GammaMatrix, theta: np.ndarray, x_prime, noise_var=0.0, seed=None):
    """Diagonalized link ``r = Gamma Theta x' + n``.

    ``x_prime`` has shape (S,) or (K, S).  ``theta`` is the full S x S block
    precoder.  Returns ``(r, r_p, r_n)`` where the last two are the precoded
    and non-precoded parts.
    """
    x_prime = np.asarray(x_prime, dtype=complex)
    G = gamma.full @ theta
    if x_prime.shape[-1] != G.shape[1]:
        raise ValueError(f"symbol vector length {x_prime.shape[-1]} != S={G.shape[1]}")
    r = x_prime @ G.T + _complex_noise(seed, x_prime.shape, noise_var)
    P = len(gamma.gamma_p)
    return r, r[..., :P], r[..., P:]


def transmit_physical(H: ChannelMatrix | np.ndarray, bf: SvdBeamformer, assign: SubchannelAssignment,
                      theta: np.ndarray, x_prime, noise_var=0.0, seed=None):
    """Full path: precode, permute, beamform with V_S, channel, combine with U_S^H, un-permute.

    Returns ``(r, tx)`` with ``tx`` the per-antenna transmit vectors.
    """
    mat = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)
    x_prime = np.atleast_2d(np.asarray(x_prime, dtype=complex))
    T = assign.T
    tx = (bf.V_S @ T @ theta @ x_prime.T).T
    y = tx @ mat.T + _complex_noise(seed, (x_prime.shape[0], mat.shape[0]), noise_var)
    r = (T.T @ bf.U_S.conj().T @ y.T).T
    return r, tx
