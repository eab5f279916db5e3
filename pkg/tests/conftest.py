"""Shared fixtures and brute-force oracles.

The oracles work in the complex domain on the QAM points and labels directly,
so they share no code with the real-lattice / sphere-search path.
"""

import itertools

import numpy as np
import pytest

from bicmbcp.channel import generate_channel
from bicmbcp.interleaver import complex_position
from bicmbcp.lattice import RealLatticeSystem, realify
from bicmbcp.precoder import vandermonde_precoder
from bicmbcp.qam import QamConstellation


def random_unitary(P, rng):
    A = rng.standard_normal((P, P)) + 1j * rng.standard_normal((P, P))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def precoded_instance(P, M, rng, sigma=0.3, theta=None):
    """Random G~ = diag(lambda) Theta, transmitted x~ (indices) and r~."""
    qam = QamConstellation(M)
    H = generate_channel(P, P, rng).entries
    lam = np.linalg.svd(H, compute_uv=False)
    theta = vandermonde_precoder(P) if theta is None else theta
    G_tilde = np.diag(lam) @ theta
    sent = rng.integers(0, qam.size, P)
    noise = sigma * (rng.standard_normal(P) + 1j * rng.standard_normal(P)) / np.sqrt(2)
    r = G_tilde @ qam.points[sent] + noise
    return G_tilde, r, sent, qam


def brute_force_metrics(G_tilde, r, qam):
    """``out[l, i, b] = min |r - G~ x~|^2`` over x~ in QAM^P with bit i of x~_l equal to b."""
    P = G_tilde.shape[0]
    cands = np.array(list(itertools.product(range(qam.size), repeat=P)))  # (N, P)
    d = np.sum(np.abs(r[None, :] - qam.points[cands] @ G_tilde.T) ** 2, axis=1)
    out = np.empty((P, qam.M, 2))
    for l in range(P):
        bits = qam.labels[cands[:, l]]  # (N, M)
        for i in range(qam.M):
            for b in (0, 1):
                out[l, i, b] = d[bits[:, i] == b].min()
    return out


def to_complex_positions(metrics, M):
    """Convert ``[l_hat, i_hat, b]`` metrics of one instant to ``[l, i, b]``."""
    n, half, _ = metrics.shape
    out = np.empty((n // 2, M, 2))
    for lh in range(n):
        for ih in range(half):
            l, i = complex_position(lh, ih, M)
            out[l, i] = metrics[lh, ih]
    return out


def lattice_instance(P, M, rng, sigma=0.3):
    G_tilde, r, sent, qam = precoded_instance(P, M, rng, sigma)
    system = RealLatticeSystem.from_complex(G_tilde, qam.pam)
    _, r_real = realify(G_tilde, r)
    return system, system.rotate(r_real), G_tilde, r, sent, qam


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
