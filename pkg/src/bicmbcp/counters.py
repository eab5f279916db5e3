"""Operation tallies shared by every decoding mode."""

from __future__ import annotations

import numpy as np

from ._kernels import COUNTER_SLOTS, N_COUNTERS

__all__ = ["OpCounters"]


class OpCounters:
    """Exact integer tallies.

    ``real_multiplications`` covers the bit-metric path only (ZF-DFE and tree
    search, or exhaustive evaluation).  QR and check-table construction go to
    ``preprocessing_multiplications``.  Counters merge by addition, so
    per-frame tallies can be combined in any order.
    """

    __slots__ = ("array", "preprocessing_multiplications")

    def __init__(self, array=None, preprocessing_multiplications: int = 0):
        self.array = np.zeros(N_COUNTERS, dtype=np.int64) if array is None else \
            np.asarray(array, dtype=np.int64).copy()
        self.preprocessing_multiplications = int(preprocessing_multiplications)

    def __getattr__(self, name):
        try:
            return int(self.array[COUNTER_SLOTS.index(name)])
        except ValueError:
            raise AttributeError(name) from None

    def add(self, name: str, value: int) -> None:
        self.array[COUNTER_SLOTS.index(name)] += int(value)

    def __iadd__(self, other: "OpCounters") -> "OpCounters":
        self.array += other.array
        self.preprocessing_multiplications += other.preprocessing_multiplications
        return self

    def __add__(self, other: "OpCounters") -> "OpCounters":
        out = self.copy()
        out += other
        return out

    def copy(self) -> "OpCounters":
        return OpCounters(self.array, self.preprocessing_multiplications)

    def as_dict(self) -> dict:
        d = {name: int(v) for name, v in zip(COUNTER_SLOTS, self.array)}
        d["preprocessing_multiplications"] = self.preprocessing_multiplications
        return d

    def __eq__(self, other):
        return isinstance(other, OpCounters) and self.as_dict() == other.as_dict()

    def __repr__(self):
        body = ", ".join(f"{k}={v}" for k, v in self.as_dict().items())
        return f"OpCounters({body})"
