"""Feedforward convolutional codes with puncturing and a soft-metric Viterbi decoder."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = ["ConvCode", "standard_code"]

PUNCTURE_PATTERNS = {
    Fraction(1, 2): None,
    Fraction(2, 3): ((1, 1), (1, 0)),
    Fraction(4, 5): ((1, 1, 1, 1), (1, 0, 0, 0)),
}


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    out = np.zeros_like(x)
    while np.any(x):
        out ^= x & 1
        x >>= 1
    return out


@dataclass(frozen=True)
class ConvCode:
    """Rate ``1/n_c`` feedforward code, optionally punctured.

    ``generators`` are octal strings or ints (given as octal digits, e.g.
    ``0o133``).  The MSB of each generator taps the current input bit.
    ``puncture_pattern`` has one row per generator output and one column per
    trellis step of the puncturing period; a 0 deletes that output bit.
    """

    generators: tuple = (0o133, 0o171)
    puncture_pattern: tuple | None = None
    k_c: int = field(default=1, init=False)

    def __post_init__(self):
        gens = tuple(int(g, 8) if isinstance(g, str) else int(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if self.puncture_pattern is not None:
            pat = np.asarray(self.puncture_pattern, dtype=np.int8)
            if pat.ndim != 2 or pat.shape[0] != len(gens) or not pat[:, 0].any():
                raise ValueError("puncture pattern must be n_c x period and keep bits at step 0")
            object.__setattr__(self, "puncture_pattern", tuple(map(tuple, pat.tolist())))

    @property
    def n_c(self) -> int:
        return len(self.generators)

    @property
    def memory(self) -> int:
        return max(g.bit_length() for g in self.generators) - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @property
    def period(self) -> int:
        return 1 if self.puncture_pattern is None else len(self.puncture_pattern[0])

    @property
    def rate(self) -> Fraction:
        if self.puncture_pattern is None:
            return Fraction(self.k_c, self.n_c)
        kept = int(np.sum(self.puncture_pattern))
        return Fraction(self.k_c * self.period, kept)

    # ---- trellis -----------------------------------------------------------
    def _trellis(self):
        """next_state[s, b] and outputs[s, b, j] for input bit b in state s."""
        m = self.memory
        s = np.arange(self.n_states)[:, None]
        b = np.arange(2)[None, :]
        reg = (b << m) | s
        outs = np.stack([_parity(reg & g) for g in self.generators], axis=-1).astype(np.int8)
        return (reg >> 1), outs

    # ---- encoding ----------------------------------------------------------
    def encode(self, info_bits, terminate: bool = True) -> np.ndarray:
        """Encode (and flush with ``memory`` zero tail bits if ``terminate``), then puncture.

        A trailing partial puncturing period is punctured with the leading
        columns of the pattern.
        """
        bits = np.asarray(info_bits, dtype=np.int64).ravel()
        if terminate:
            bits = np.concatenate([bits, np.zeros(self.memory, dtype=np.int64)])
        nxt, outs = self._trellis()
        coded = np.empty((len(bits), self.n_c), dtype=np.int8)
        state = 0
        for t, b in enumerate(bits):
            coded[t] = outs[state, b]
            state = nxt[state, b]
        return self.puncture(coded.ravel())

    def _keep_mask(self, steps: int) -> np.ndarray:
        if self.puncture_pattern is None:
            return np.ones(steps * self.n_c, dtype=bool)
        pat = np.asarray(self.puncture_pattern, dtype=bool)
        reps = -(-steps // self.period)
        return np.tile(pat.T, (reps, 1))[:steps].ravel()

    def puncture(self, coded) -> np.ndarray:
        coded = np.asarray(coded)
        return coded[self._keep_mask(len(coded) // self.n_c)]

    def coded_length(self, steps: int) -> int:
        return int(self._keep_mask(steps).sum())

    def depuncture(self, values, steps: int, fill=0):
        """Inverse of :meth:`puncture`: deleted positions get ``fill``.

        ``values`` may carry trailing dimensions (e.g. metric pairs).
        """
        values = np.asarray(values)
        mask = self._keep_mask(steps)
        if values.shape[0] != mask.sum():
            raise ValueError(f"{values.shape[0]} values for {mask.sum()} kept positions")
        out = np.full((len(mask),) + values.shape[1:], fill, dtype=values.dtype)
        out[mask] = values
        return out

    # ---- decoding ----------------------------------------------------------
    def viterbi_decode(self, metrics, n_info: int, terminated: bool = True) -> np.ndarray:
        """Minimum-sum-metric path through the trellis.

        ``metrics`` has shape (coded_length, 2): the cost of each coded bit
        being 0 or 1 (punctured positions are re-inserted as (0, 0)).  Ties
        between the two branches merging into a state go to the predecessor
        whose oldest register bit is 0, so a fully tied trellis decodes to
        the all-zero path.
        """
        steps = n_info + (self.memory if terminated else 0)
        metrics = np.asarray(metrics, dtype=float)
        if metrics.ndim != 2 or metrics.shape[1] != 2:
            raise ValueError("metrics must have shape (n, 2)")
        if metrics.shape[0] != self.coded_length(steps):
            raise ValueError(f"got {metrics.shape[0]} metric pairs, trellis of {steps} steps "
                             f"needs {self.coded_length(steps)}")
        full = self.depuncture(metrics, steps, fill=0.0).reshape(steps, self.n_c, 2)

        nxt, outs = self._trellis()
        m, ns = self.memory, self.n_states
        # predecessors of state t: p = ((t << 1) & mask) | q for q in {0,1}; input = t >> (m-1)
        t = np.arange(ns)
        b_in = t >> (m - 1)
        pred = np.stack([((t << 1) & (ns - 1)), ((t << 1) & (ns - 1)) | 1], axis=1)
        branch_out = outs[pred, b_in[:, None]]  # (ns, 2 preds, n_c)
        assert np.all(nxt[pred, b_in[:, None]] == t[:, None])
        j_idx = np.arange(self.n_c)

        pm = np.full(ns, np.inf)
        pm[0] = 0.0
        decisions = np.empty((steps, ns), dtype=np.int8)
        for k in range(steps):
            bm = full[k][j_idx, branch_out].sum(axis=-1)  # (ns, 2)
            cand = pm[pred] + bm
            choose = (cand[:, 1] < cand[:, 0]).astype(np.int8)
            decisions[k] = choose
            pm = cand[t, choose]

        state = 0 if terminated else int(np.argmin(pm))
        out = np.empty(steps, dtype=np.int8)
        for k in range(steps - 1, -1, -1):
            out[k] = state >> (m - 1)
            state = pred[state, decisions[k, state]]
        return out[:n_info]


def standard_code(rate) -> ConvCode:
    """64-state (133, 171) mother code punctured to ``rate`` (1/2, 2/3 or 4/5)."""
    rate = Fraction(rate).limit_denominator(16)
    if rate not in PUNCTURE_PATTERNS:
        raise ValueError(f"unsupported code rate {rate}; choose from "
                         f"{', '.join(str(r) for r in PUNCTURE_PATTERNS)}")
    return ConvCode((0o133, 0o171), PUNCTURE_PATTERNS[rate])
