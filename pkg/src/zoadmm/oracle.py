"""Black-box function-value oracle with exact query accounting.

Every f_i evaluation goes through query(), which bills exactly one unit to
one of three phases: "anchor" (periodic refresh batches), "inner" (recursive
difference steps), "diagnostic" (trace reporting). Diagnostic queries never
count toward algorithmic query complexity.
"""
from __future__ import annotations

import math
import threading

import numpy as np

from .errors import IndexOutOfRange, NonFiniteValue

PHASES = ("anchor", "inner", "diagnostic")


class QueryLedger:
    """Per-phase counters with atomic increments."""

    def __init__(self):
        self._counts = {p: 0 for p in PHASES}
        self._lock = threading.Lock()

    def add(self, phase: str, k: int = 1) -> None:
        if phase not in self._counts:
            raise ValueError(f"unknown phase {phase!r}")
        with self._lock:
            self._counts[phase] += k

    def snapshot(self) -> dict:
        with self._lock:
            out = dict(self._counts)
        out["total"] = sum(out[p] for p in PHASES)
        return out

    @property
    def total(self) -> int:
        return self.snapshot()["total"]

    @property
    def algorithmic(self) -> int:
        """Anchor plus inner queries; the complexity-relevant count."""
        s = self.snapshot()
        return s["anchor"] + s["inner"]


class BlackBoxOracle:
    """Wraps per-sample scalar functions f_i behind a counted query interface.

    fn(i, x) must be deterministic. n is the sample-index range: the dataset
    size in the finite_sum regime, or the generator pool size in the online
    regime (fresh draws are indices into that pool).
    """

    def __init__(self, fn, n: int, dim: int, regime: str = "finite_sum", kind: str = "custom"):
        if regime not in ("finite_sum", "online"):
            raise ValueError(f"unknown regime {regime!r}")
        if n < 1:
            raise ValueError("oracle needs at least one sample index")
        self._fn = fn
        self.n = int(n)
        self.dim = int(dim)
        self.regime = regime
        self.kind = kind
        self.ledger = QueryLedger()

    def query(self, i: int, x: np.ndarray, phase: str = "inner") -> float:
        if not 0 <= i < self.n:
            raise IndexOutOfRange(f"sample index {i} outside [0, {self.n})")
        val = float(self._fn(int(i), x))
        if not math.isfinite(val):
            raise NonFiniteValue(f"f_{i} returned {val!r}")
        self.ledger.add(phase)
        return val

    def ledger_snapshot(self) -> dict:
        return self.ledger.snapshot()


def sample_batch(rng: np.random.Generator, n: int, b: int) -> np.ndarray:
    """b indices drawn uniformly with replacement from range(n)."""
    if b < 1:
        raise ValueError("batch size must be positive")
    return rng.integers(0, n, size=b)
