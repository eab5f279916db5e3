"""Bit-metric engines for the precoded and non-precoded parts of a received vector.

Three engines compute the same precoded bit metrics

* ``EXH``: exhaustive minimum over every candidate of the constrained set;
* ``CSD``: one sphere search per metric (2MP per instant), each started from
  its ZF-DFE radius, with direct multiplication and no reuse;
* ``PSI``: MP + 1 searches per instant, check-table products and reuse of
  real-axis partial weights across the sibling imaginary-axis branches.

Metric arrays are indexed ``[l_hat, i_hat, b]`` where ``l_hat`` is the real
component (``2l`` in-phase, ``2l + 1`` quadrature of complex symbol ``l``) and
``i_hat`` the bit of its PAM label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from . import _kernels
from .counters import OpCounters
from .lattice import RealLatticeSystem, zf_dfe
from .qam import PamAlphabet, QamConstellation

__all__ = [
    "Mode",
    "SearchOptions",
    "sd_search",
    "compute_precoded_metrics",
    "frame_precoded_metrics",
    "exhaustive_precoded_metrics",
    "exhaustive_bit_metric",
    "exhaustive_multiplications_per_metric",
    "nonprecoded_metric",
    "nonprecoded_metrics",
    "node_cost",
]


class Mode(str, enum.Enum):
    EXH = "exh"
    CSD = "csd"
    PSI = "psi"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown mode {value!r}; expected one of exh, csd, psi") from None

    @property
    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class SearchOptions:
    """Knobs of the sphere-decoding engines; ``for_mode`` gives the named presets."""

    reduce_executions: bool = False
    use_table: bool = False
    recycle: bool = False
    ordered: bool = True

    @classmethod
    def for_mode(cls, mode) -> "SearchOptions":
        mode = Mode.parse(mode)
        if mode is Mode.PSI:
            return cls(reduce_executions=True, use_table=True, recycle=True)
        if mode is Mode.CSD:
            return cls()
        raise ValueError("exhaustive search has no sphere-search options")


def node_cost(u: int, n: int, use_table: bool) -> int:
    """Multiplications to weigh one node at 0-based layer ``u`` of an n-layer tree."""
    return 1 if use_table else n - u + 1


def sd_search(r_breve, system: RealLatticeSystem, constraint, radius_sq=None, counters=None,
              use_table=False, recycle=False, ordered=True, radius_trace=None):
    """Constrained closest point ``min ||r_breve - R x||^2`` with x[l_hat] in the bit subset.

    ``constraint`` is ``(l_hat, i_hat, b)`` or None.  Without ``radius_sq``
    the search starts from the ZF-DFE radius (whose multiplications are
    counted).  Returns ``(metric, argmin_indices)``; ``radius_trace``, if
    given, is a float array that receives the successive squared radii.
    """
    counters = counters if counters is not None else OpCounters()
    r_breve = np.ascontiguousarray(r_breve, dtype=float)
    n, L = system.n, system.pam.size
    if constraint is None:
        lhat, allowed = -1, np.ones(L, dtype=np.bool_)
    else:
        lhat, ihat, b = constraint
        if not 0 <= lhat < n:
            raise ValueError(f"l_hat={lhat} outside 0..{n - 1}")
        allowed = system.subset_mask[ihat, b]
    if radius_sq is None:
        radius_sq = zf_dfe(r_breve, system, constraint, counters, use_table).radius_sq
    best_x = np.zeros(n, dtype=np.int64)
    trace = np.empty(0) if radius_trace is None else radius_trace
    metric, ntrace = _kernels.sd_kernel(r_breve, system.R, system.table.full, system.table.zero,
                                        system.pam.points, lhat, allowed, float(radius_sq),
                                        use_table, recycle, ordered, best_x, counters.array,
                                        trace)
    return float(metric), best_x


def frame_precoded_metrics(r_breve, system: RealLatticeSystem, mode, counters=None,
                           options: SearchOptions | None = None):
    """Precoded metrics for a block of instants ``r_breve`` (K, 2P) -> (K, 2P, M/2, 2).

    Also returns the number of SD executions per instant.
    """
    counters = counters if counters is not None else OpCounters()
    opts = options if options is not None else SearchOptions.for_mode(mode)
    rb = np.ascontiguousarray(np.atleast_2d(r_breve), dtype=float)
    K, n = rb.shape
    pam = system.pam
    metrics = np.empty((K, n, pam.bits, 2))
    execs = np.zeros(K, dtype=np.int64)
    _kernels.frame_metrics_kernel(rb, system.R, system.table.full, system.table.zero, pam.points,
                                  system.inv_step, system.subset_mask, pam.labels.astype(np.int64),
                                  opts.reduce_executions, opts.use_table, opts.recycle,
                                  opts.ordered, metrics, counters.array, execs)
    return metrics, execs


def compute_precoded_metrics(r_breve, system: RealLatticeSystem, mode, counters=None,
                             options: SearchOptions | None = None):
    """All 2MP precoded metrics of one instant, shape (2P, M/2, 2)."""
    mode = Mode.parse(mode)
    if mode is Mode.EXH:
        r = np.asarray(r_breve, dtype=float) @ system.Q.T
        return exhaustive_precoded_metrics(r, system.G, system.pam, counters)[0]
    metrics, _ = frame_precoded_metrics(np.asarray(r_breve)[None], system, mode, counters, options)
    return metrics[0]


# ---- exhaustive search ------------------------------------------------------

def exhaustive_multiplications_per_metric(P: int, M: int) -> int:
    """Naive cost of one precoded bit metric: |QAM|^P / 2 candidates, each ||r - G x||^2."""
    n = 2 * P
    return (1 << (M * P)) // 2 * n * (n + 1)


def _triangularize(G):
    # Cholesky route, deliberately independent of the QR used by the sphere search.
    C = cholesky(G.T @ G, lower=False)
    return C


def exhaustive_precoded_metrics(r, G, pam: PamAlphabet, counters=None):
    """Exhaustive metrics for instants ``r`` (K, 2P) of the real system ``r = G x + n``.

    Every point of the full real lattice is enumerated once per instant; the
    bit metric is the smallest weight among the points satisfying the bit
    constraint.  The multiplication counter is charged the naive per-metric
    cost of :func:`exhaustive_multiplications_per_metric`, which is the
    accounting model for this engine (see :func:`exhaustive_bit_metric`
    for the literal per-metric evaluation).
    """
    G = np.asarray(G, dtype=float)
    r = np.atleast_2d(np.asarray(r, dtype=float))
    K, n = r.shape
    C = _triangularize(G)
    rb = solve_triangular(C, G.T @ r.T, trans="T", lower=False).T
    offsets = np.einsum("ij,ij->i", r, r) - np.einsum("ij,ij->i", rb, rb)
    mask = pam.subset_mask()
    metrics = np.empty((K, n, pam.bits, 2))
    for k in range(K):
        marg = _kernels.exhaustive_marginals(np.ascontiguousarray(rb[k]), C, pam.points,
                                             float(offsets[k]))
        for ih in range(pam.bits):
            for b in range(2):
                metrics[k, :, ih, b] = np.where(mask[ih, b], marg, np.inf).min(axis=1)
    if counters is not None:
        per_metric = exhaustive_multiplications_per_metric(n // 2, 2 * pam.bits)
        counters.add("real_multiplications", per_metric * K * n * pam.bits * 2)
    return metrics


def _candidates(pam: PamAlphabet, n: int, lhat: int, allowed_idx, start: int, stop: int):
    sizes = [pam.size] * n
    sizes[lhat] = len(allowed_idx)
    flat = np.arange(start, stop)
    idx = np.empty((n, len(flat)), dtype=np.int64)
    for u in range(n - 1, -1, -1):
        idx[u] = flat % sizes[u]
        flat //= sizes[u]
    idx[lhat] = np.asarray(allowed_idx)[idx[lhat]]
    return idx


def exhaustive_bit_metric(r, G, pam: PamAlphabet, constraint, counters=None, chunk=1 << 16):
    """Literal evaluation of ``min ||r - G x||^2`` over the constrained candidate set.

    Counts the ``n`` x ``n`` matrix-vector product and ``n`` squares of every
    candidate.  Returns ``(metric, argmin_indices)``.
    """
    G = np.asarray(G, dtype=float)
    r = np.asarray(r, dtype=float)
    n = G.shape[0]
    lhat, ihat, b = constraint
    allowed_idx = pam.subset(ihat, b)
    total = pam.size ** (n - 1) * len(allowed_idx)
    best, best_x = np.inf, None
    for start in range(0, total, chunk):
        idx = _candidates(pam, n, lhat, allowed_idx, start, min(start + chunk, total))
        e = r[:, None] - G @ pam.points[idx]
        d = np.einsum("ij,ij->j", e, e)
        j = int(np.argmin(d))
        if d[j] < best:
            best, best_x = float(d[j]), idx[:, j].copy()
    if counters is not None:
        counters.add("real_multiplications", total * n * (n + 1))
    return best, best_x


# ---- non-precoded subchannels -----------------------------------------------

def _axis_metrics(y, lam, pam: PamAlphabet):
    d = (np.asarray(y, dtype=float)[..., None] - lam[..., None] * pam.points) ** 2
    free = d.min(axis=-1)
    mask = pam.subset_mask()  # (bits, 2, L)
    constrained = np.where(mask, d[..., None, None, :], np.inf).min(axis=-1)
    return free, constrained  # (...), (..., bits, 2)


def nonprecoded_metrics(r_n, lambdas, qam: QamConstellation):
    """Metrics ``[..., l, i, b]`` for the non-precoded entries ``r_n`` (..., S - P).

    The QAM is separable, so each metric is the constrained per-axis minimum
    on the axis carrying bit ``i`` plus the free minimum on the other axis.
    """
    r_n = np.asarray(r_n, dtype=complex)
    lam = np.broadcast_to(np.asarray(lambdas, dtype=float), r_n.shape)
    pam = qam.pam
    free_re, con_re = _axis_metrics(r_n.real, lam, pam)
    free_im, con_im = _axis_metrics(r_n.imag, lam, pam)
    re_part = con_re + free_im[..., None, None]
    im_part = con_im + free_re[..., None, None]
    return np.concatenate([re_part, im_part], axis=-2)


def nonprecoded_metric(r_scalar, lam: float, i: int, b: int, qam: QamConstellation) -> float:
    """``min |r - lam x|^2`` over QAM points whose label has bit ``b`` at position ``i``."""
    return float(nonprecoded_metrics(np.array([r_scalar]), np.array([lam]), qam)[0, i, b])
