"""Real-valued lattice view of the precoded subsystem.

The complex system ``r = G~ x~`` (P x P) becomes a 2P-dimensional real system
whose components are ordered ``(Re x1, Im x1, Re x2, Im x2, ...)``.  With this
pairing the two columns belonging to one complex symbol are orthogonal and of
equal norm, which makes ``R[u, u+1] == 0`` for every even (0-based) ``u`` after
QR factorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .channel import DegenerateChannelError
from .qam import PamAlphabet

__all__ = [
    "realify",
    "qr_paired",
    "householder_multiplications",
    "CheckTable",
    "build_check_table",
    "RealLatticeSystem",
    "BabaiResult",
    "zf_dfe",
    "STRUCTURAL_ZERO_TOL",
    "structural_residual",
]

STRUCTURAL_ZERO_TOL = 1e-10
DEGENERATE_TOL = 1e-12


def realify(G_tilde, r_tilde=None):
    """Paired real representation of a complex matrix (and optionally vectors).

    ``r_tilde`` may be a single vector (P,) or a batch (K, P).
    """
    G_tilde = np.atleast_2d(np.asarray(G_tilde, dtype=complex))
    p, q = G_tilde.shape
    G = np.empty((2 * p, 2 * q))
    G[0::2, 0::2] = G_tilde.real
    G[0::2, 1::2] = -G_tilde.imag
    G[1::2, 0::2] = G_tilde.imag
    G[1::2, 1::2] = G_tilde.real
    if r_tilde is None:
        return G
    r_tilde = np.asarray(r_tilde, dtype=complex)
    r = np.empty(r_tilde.shape[:-1] + (2 * r_tilde.shape[-1],))
    r[..., 0::2] = r_tilde.real
    r[..., 1::2] = r_tilde.imag
    return G, r


def complexify(x):
    """Inverse of the vector part of :func:`realify`."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def householder_multiplications(n: int) -> int:
    """Real multiplications of an n x n Householder QR that also forms Q.

    Per reflector on a trailing block of ``m`` rows and ``c`` columns: ``m``
    for the norm, ``m`` to scale the reflector, and ``2 m c`` for the rank-one
    update; Q is accumulated by applying the reflectors to the identity
    (``2 m n`` each).
    """
    total = 0
    for k in range(n - 1):
        m = n - k
        c = n - k - 1
        total += 2 * m + 2 * m * c + 2 * m * n
    return total


def _signed_qr(G):
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if G.shape != (n, n) or n % 2:
        raise ValueError(f"expected an even-sized square matrix, got {G.shape}")
    Q, R = np.linalg.qr(G)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, signs[:, None] * R


def structural_residual(G) -> float:
    """Largest ``|R[u, u+1]|`` (even ``u``) of the sign-normalized QR, before zeroing."""
    _, R = _signed_qr(G)
    idx = np.arange(0, R.shape[0], 2)
    return float(np.abs(R[idx, idx + 1]).max())


def qr_paired(G, check: bool = True):
    """QR factorization with positive diagonal and exact structural zeros.

    The entries ``R[u, u+1]`` (even ``u``) are asserted to be below
    ``STRUCTURAL_ZERO_TOL`` and then set to exactly zero.
    """
    Q, R = _signed_qr(G)
    n = R.shape[0]
    scale = max(np.abs(R).max(), 1.0)
    if np.diag(R).min() < DEGENERATE_TOL * scale:
        raise DegenerateChannelError(f"rank-deficient lattice basis (min |R_uu| = "
                                     f"{np.diag(R).min():.3g})")
    idx = np.arange(0, n, 2)
    if check:
        worst = np.abs(R[idx, idx + 1]).max()
        if worst >= STRUCTURAL_ZERO_TOL:
            raise AssertionError(f"paired structure lost: |R[u, u+1]| = {worst:.3g}")
    R[idx, idx + 1] = 0.0
    R = np.triu(R)
    return Q, R


def structural_zero_mask(n: int) -> np.ndarray:
    """True where R is zero by construction: below the diagonal and at (u, u+1), u even."""
    mask = ~np.triu(np.ones((n, n), dtype=bool))
    idx = np.arange(0, n, 2)
    mask[idx, idx + 1] = True
    return mask


@dataclass(frozen=True)
class CheckTable:
    """Products ``R[u, v] * x`` for structural nonzeros of R and negative PAM levels.

    Products for positive levels are recovered by negating the mirrored
    entry, which is exact in floating point since the PAM alphabet is
    symmetric.
    """

    stored: np.ndarray  # (n, n, L/2); zero where R is structurally zero
    zero: np.ndarray  # (n, n) structural zero mask
    L: int

    @property
    def entry_count(self) -> int:
        return int((~self.zero).sum()) * (self.L // 2)

    @cached_property
    def full(self) -> np.ndarray:
        """Dense lookup array ``full[u, v, j]`` over all L levels."""
        half = self.L // 2
        out = np.empty(self.stored.shape[:2] + (self.L,))
        out[..., :half] = self.stored
        out[..., half:] = -self.stored[..., ::-1]
        return out

    def lookup(self, u: int, v: int, j: int) -> float:
        half = self.L // 2
        if j < half:
            return self.stored[u, v, j]
        return -self.stored[u, v, self.L - 1 - j]


def build_check_table(R, pam: PamAlphabet) -> tuple[CheckTable, int]:
    """Returns the table and the number of multiplications spent building it."""
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    zero = structural_zero_mask(n)
    half = pam.size // 2
    negatives = pam.points[:half]
    stored = R[:, :, None] * negatives[None, None, :]
    stored[zero] = 0.0
    table = CheckTable(stored, zero, pam.size)
    return table, table.entry_count


@dataclass(frozen=True)
class RealLatticeSystem:
    """QR-factored real system for one channel realization, plus its check-table."""

    G: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    pam: PamAlphabet
    table: CheckTable
    preprocessing_multiplications: int

    @classmethod
    def from_complex(cls, G_tilde, pam: PamAlphabet) -> "RealLatticeSystem":
        G = realify(G_tilde)
        Q, R = qr_paired(G)
        table, table_mults = build_check_table(R, pam)
        return cls(G, Q, R, pam, table, householder_multiplications(len(R)) + table_mults)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @cached_property
    def inv_step(self) -> np.ndarray:
        return 1.0 / (np.diag(self.R) * 2.0 * self.pam.scale)

    @cached_property
    def subset_mask(self) -> np.ndarray:
        return self.pam.subset_mask()

    def rotate(self, r):
        """``Q^T r`` for a single real vector or a batch (K, n)."""
        return np.asarray(r, dtype=float) @ self.Q

    def weight(self, r_breve, x_idx) -> float:
        x = self.pam.points[np.asarray(x_idx)]
        e = r_breve - self.R @ x
        return float(e @ e)


@dataclass(frozen=True)
class BabaiResult:
    point: np.ndarray  # PAM indices
    radius_sq: float


def zf_dfe(r_breve, system: RealLatticeSystem, constraint, counters=None,
           use_table: bool = False) -> BabaiResult:
    """Babai point under the bit constraint ``(l_hat, i_hat, b)`` and its squared distance.

    ``constraint=None`` gives the unconstrained Babai point.
    """
    from .counters import OpCounters

    counters = counters if counters is not None else OpCounters()
    r_breve = np.ascontiguousarray(r_breve, dtype=float)
    if constraint is None:
        lhat, allowed = -1, np.ones(system.pam.size, dtype=np.bool_)
    else:
        lhat, ihat, b = constraint
        allowed = system.subset_mask[ihat, b]
    x = np.empty(system.n, dtype=np.int64)
    dist = _kernels.zf_dfe_kernel(r_breve, system.R, system.table.full, system.table.zero,
                                  system.pam.points, system.inv_step, lhat, allowed,
                                  use_table, x, counters.array)
    return BabaiResult(x, float(dist))
