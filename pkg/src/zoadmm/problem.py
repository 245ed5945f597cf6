"""Constrained composite problem container and its spectral summary.

A problem is  min_x,y  f(x) + sum_j psi_j(y_j)  s.t.  A x + sum_j B_j y_j = c,
with f accessible only through a black-box value oracle. Matrices are stored
dense; target scale is d up to a few thousand.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RankDeficientA
from .penalties import PenaltyDescriptor, scaled

_RANK_RTOL = 1e-10


@dataclass
class PenaltyBlock:
    B: np.ndarray
    penalty: PenaltyDescriptor
    weight: float = 1.0

    def effective_penalty(self) -> PenaltyDescriptor:
        """Descriptor with the block weight folded into the penalty."""
        return scaled(self.penalty, self.weight)


@dataclass
class SpectralSummary:
    sigma_min_A: float   # smallest eigenvalue of A^T A
    sigma_max_A: float   # largest eigenvalue of A^T A
    sigma_max_B: float   # largest eigenvalue of any B_j^T B_j (0 when m = 0)


@dataclass
class ProblemSpec:
    """Validated problem instance. Treat as immutable once built."""

    oracle: object
    A: np.ndarray
    blocks: list[PenaltyBlock]
    c: np.ndarray
    _AtA: np.ndarray = field(default=None, repr=False)
    _spectral: SpectralSummary = field(default=None, repr=False)
    _block_sigma_max: list = field(default=None, repr=False)
    _solver_cache: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def l(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def regime(self) -> str:
        return self.oracle.regime

    def block_sigma_max(self, j: int) -> float:
        return self._block_sigma_max[j]

    def constraint_residual(self, x: np.ndarray, y: list) -> np.ndarray:
        """A x + sum_j B_j y_j - c."""
        r = self.A @ x - self.c
        for blk, yj in zip(self.blocks, y):
            r += blk.B @ yj
        return r


def _sym_eig_range(M: np.ndarray) -> tuple[float, float]:
    if M.shape[0] == 0:
        return 0.0, 0.0
    w = np.linalg.eigvalsh(M)
    return float(w[0]), float(w[-1])


def build_problem(oracle, A, blocks, c) -> ProblemSpec:
    """Validate dimensions and rank, then cache the spectral quantities."""
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch("A must be a 2-d array")
    l, d = A.shape
    if c.shape != (l,):
        raise DimensionMismatch(f"c must have shape ({l},), got {c.shape}")
    if getattr(oracle, "dim", d) != d:
        raise DimensionMismatch(f"oracle dimension {oracle.dim} != A columns {d}")
    blocks = list(blocks)
    for j, blk in enumerate(blocks):
        blk.B = np.asarray(blk.B, dtype=float)
        if blk.B.ndim != 2 or blk.B.shape[0] != l:
            raise DimensionMismatch(f"B_{j} must have {l} rows, got shape {blk.B.shape}")
        if blk.penalty.dim != blk.B.shape[1]:
            raise DimensionMismatch(
                f"penalty dim {blk.penalty.dim} != B_{j} columns {blk.B.shape[1]}")
        if blk.weight < 0:
            raise DimensionMismatch(f"block {j} weight must be nonnegative")

    AtA = A.T @ A
    sig_min_A, sig_max_A = _sym_eig_range(AtA)
    if len(blocks) >= 1:
        # constraints present: A must have full column rank
        if sig_max_A <= 0 or sig_min_A < _RANK_RTOL * sig_max_A:
            raise RankDeficientA(
                f"A^T A eigenvalue range [{sig_min_A:.3e}, {sig_max_A:.3e}] "
                f"fails the rank tolerance {_RANK_RTOL:g}")

    block_sig = []
    for blk in blocks:
        _, smax = _sym_eig_range(blk.B.T @ blk.B)
        block_sig.append(smax)
    summary = SpectralSummary(
        sigma_min_A=sig_min_A,
        sigma_max_A=sig_max_A,
        sigma_max_B=max(block_sig) if block_sig else 0.0,
    )
    return ProblemSpec(oracle=oracle, A=A, blocks=blocks, c=c,
                       _AtA=AtA, _spectral=summary, _block_sigma_max=block_sig)


def spectral_summary(spec: ProblemSpec) -> SpectralSummary:
    return spec._spectral
