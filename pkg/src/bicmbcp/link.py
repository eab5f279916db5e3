"""Frame-level transmitter and receiver.

A frame is one quasi-static channel block of ``K`` symbol vectors.  The
codeword (information bits plus the zero tail, punctured) is padded with
zeros to exactly ``K * S * M`` bits before interleaving; padded positions are
dropped again before Viterbi decoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import SubchannelAssignment
from .coding import ConvCode
from .interleaver import InterleaverSpec, LocationMap, real_position
from .qam import QamConstellation

__all__ = ["FrameLayout", "MetricSet", "MetricFrame", "assemble_metrics", "route_metrics",
           "decode_frame"]


@dataclass(frozen=True)
class FrameLayout:
    code: ConvCode
    qam: QamConstellation
    assignment: SubchannelAssignment
    K: int
    interleaver: InterleaverSpec = field(repr=False)

    @classmethod
    def build(cls, code, qam, assignment, K, seed=None, interleave=True) -> "FrameLayout":
        stream_length = K * qam.M
        spec = (InterleaverSpec.random(assignment.S, stream_length, seed) if interleave
                else InterleaverSpec.identity(assignment.S, stream_length))
        layout = cls(code, qam, assignment, K, spec)
        if layout.n_info < 1:
            raise ValueError(f"K={K} instants cannot hold a single information bit")
        return layout

    @property
    def S(self) -> int:
        return self.assignment.S

    @property
    def P(self) -> int:
        return self.assignment.P

    @property
    def M(self) -> int:
        return self.qam.M

    @property
    def frame_bits(self) -> int:
        return self.K * self.S * self.M

    @property
    def n_info(self) -> int:
        """Largest information length whose terminated codeword fits the frame."""
        n = int(self.frame_bits * self.code.rate) - self.code.memory
        while n > 0 and self.code.coded_length(n + self.code.memory) > self.frame_bits:
            n -= 1
        return n

    @property
    def coded_bits(self) -> int:
        return self.code.coded_length(self.n_info + self.code.memory)

    @property
    def pad_bits(self) -> int:
        return self.frame_bits - self.coded_bits

    @property
    def location_map(self) -> LocationMap:
        return self.interleaver.location_map(self.M)

    def transmit(self, info_bits) -> tuple[np.ndarray, np.ndarray]:
        """Info bits -> (codeword incl. padding, symbol vectors x' of shape (K, S))."""
        info_bits = np.asarray(info_bits, dtype=np.int8)
        if len(info_bits) != self.n_info:
            raise ValueError(f"frame carries {self.n_info} information bits, got {len(info_bits)}")
        codeword = np.concatenate([self.code.encode(info_bits),
                                   np.zeros(self.pad_bits, dtype=np.int8)])
        streams = self.interleaver.interleave(codeword)  # (S, K*M)
        labels = streams.reshape(self.S, self.K, self.M).transpose(1, 0, 2)
        return codeword, self.qam.map_bits(labels)


@dataclass
class MetricSet:
    """Bit metrics of one instant.

    ``precoded[l_hat, i_hat, b]`` (2P, M/2, 2) and ``nonprecoded[l, i, b]``
    (S - P, M, 2).  ``gamma``/``xhat`` are the joint minimum and its PAM
    indices when the engine produced them.
    """

    precoded: np.ndarray
    nonprecoded: np.ndarray
    gamma: float | None = None
    xhat: np.ndarray | None = None

    def complex_positions(self) -> np.ndarray:
        return assemble_metrics(self.precoded[None], self.nonprecoded[None])[0]


def assemble_metrics(precoded, nonprecoded) -> np.ndarray:
    """Merge (K, 2P, M/2, 2) and (K, S-P, M, 2) into complex positions (K, S, M, 2)."""
    precoded = np.asarray(precoded)
    nonprecoded = np.asarray(nonprecoded)
    K, n, half, _ = precoded.shape
    P = n // 2
    M = 2 * half
    out = np.empty((K, P + nonprecoded.shape[1], M, 2))
    for l in range(P):
        for i in range(M):
            lh, ih = real_position(l, i, M)
            out[:, l, i] = precoded[:, lh, ih]
    out[:, P:] = nonprecoded
    return out


@dataclass(frozen=True)
class MetricFrame:
    """Per coded bit ``k'`` the pair (metric if 0, metric if 1), codeword order."""

    pairs: np.ndarray


def route_metrics(metric_sets, location_map: LocationMap) -> MetricFrame:
    """Gather each coded bit's metric pair from the instant and position it was sent on.

    ``metric_sets`` is a list of :class:`MetricSet` (one per instant) or an
    array (K, S, M, 2) in complex positions.
    """
    if isinstance(metric_sets, np.ndarray):
        table = metric_sets
    else:
        table = np.stack([m.complex_positions() for m in metric_sets])
    needed = int(location_map.k.max()) + 1 if len(location_map) else 0
    if table.shape[0] < needed:
        raise ValueError(f"metrics for {table.shape[0]} instants, frame spans {needed}")
    return MetricFrame(table[location_map.k, location_map.l, location_map.i])


def decode_frame(frame: MetricFrame, layout: FrameLayout) -> np.ndarray:
    """Drop padding and Viterbi-decode the frame's information bits."""
    pairs = frame.pairs[:layout.coded_bits]
    return layout.code.viterbi_decode(pairs, layout.n_info)
