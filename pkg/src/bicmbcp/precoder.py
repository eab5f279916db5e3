"""Unitary constellation precoders and the block precoder/permutation of the transmitter."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import SubchannelAssignment

__all__ = ["PrecoderConfig", "vandermonde_precoder", "load_matrix", "save_matrix",
           "precode_and_permute"]


def vandermonde_precoder(P: int) -> np.ndarray:
    """``Theta[i, j] = a_i**j / sqrt(P)`` with ``a_i`` the roots of ``a**P = j``.

    For P = 2 this is ``[[1, e^{j pi/4}], [1, -e^{j pi/4}]] / sqrt(2)``.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    roots = np.exp(1j * np.pi * (4 * np.arange(P) + 1) / (2 * P))
    return np.vander(roots, P, increasing=True) / np.sqrt(P)


@dataclass(frozen=True)
class PrecoderConfig:
    theta_p: np.ndarray
    assignment: SubchannelAssignment

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta_p, dtype=complex))
        object.__setattr__(self, "theta_p", theta)
        P = self.assignment.P
        if theta.shape != (P, P):
            raise ValueError(f"theta_p has shape {theta.shape}, expected ({P}, {P})")
        err = np.abs(theta.conj().T @ theta - np.eye(P)).max()
        if err > 1e-12:
            raise ValueError(f"theta_p is not unitary (max deviation {err:.3g})")

    @classmethod
    def default(cls, assignment: SubchannelAssignment) -> "PrecoderConfig":
        return cls(vandermonde_precoder(assignment.P), assignment)

    @property
    def S(self) -> int:
        return self.assignment.S

    @property
    def P(self) -> int:
        return self.assignment.P

    @property
    def theta(self) -> np.ndarray:
        P, S = self.P, self.S
        out = np.eye(S, dtype=complex)
        out[:P, :P] = self.theta_p
        return out


def precode_and_permute(x, cfg: PrecoderConfig) -> np.ndarray:
    """Return ``T Theta x`` for x of shape (S,) or (K, S): entries indexed by subchannel."""
    x = np.asarray(x, dtype=complex)
    return x @ (cfg.assignment.T @ cfg.theta).T


def load_matrix(path) -> np.ndarray:
    """Read rows of whitespace-separated complex tokens such as ``0.5+0.5j``."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([complex(tok) for tok in line.split()])
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"{path}: ragged or empty matrix")
    return np.array(rows, dtype=complex)


def save_matrix(path, mat) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    lines = [" ".join(repr(complex(v)).strip("()") for v in row) for row in mat]
    Path(path).write_text("\n".join(lines) + "\n")
