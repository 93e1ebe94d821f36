"""Rigidity matrix, flex and stress spaces, and the rank policy behind them.

All dimension claims come from one dense SVD of the rigidity matrix, thresholded
by :func:`numerical_rank`.  Flex and stress bases therefore always satisfy
rank-nullity against the same rank.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GeometryError

TOL_RANK = 1e-9
GAP_AMBIGUOUS = 10.0


class RankDecision(NamedTuple):
    rank: int
    gap_ratio: float
    ambiguous: bool


def numerical_rank(singular_values, tol_rel=TOL_RANK) -> RankDecision:
    """Count singular values above ``tol_rel * max``.

    ``gap_ratio`` is sigma_rank / sigma_{rank+1}.  It is infinite when no
    nonzero value sits below the threshold (missing trailing values of a
    wide matrix are structural zeros).
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size and np.any(np.diff(s) > 0):
        s = np.sort(s)[::-1]
    if s.size == 0 or s[0] <= 0.0:
        return RankDecision(0, float("inf"), False)
    rank = int(np.sum(s > tol_rel * s[0]))
    if rank == 0:
        return RankDecision(0, float("inf"), False)
    below = s[rank] if rank < s.size else 0.0
    gap = float(s[rank - 1] / below) if below > 0 else float("inf")
    return RankDecision(rank, gap, gap < GAP_AMBIGUOUS)


def rigidity_matrix(fw) -> np.ndarray:
    """One row per edge; (p_i - p_j) in vertex i's columns, (p_j - p_i) in j's."""
    p = fw.configuration
    n, d = p.shape
    pairs = fw.pairs
    r = np.zeros((len(pairs), n * d))
    for row, (i, j) in enumerate(pairs):
        diff = p[i] - p[j]
        r[row, i * d:(i + 1) * d] = diff
        r[row, j * d:(j + 1) * d] = -diff
    return r


def _orthonormal_rows(vectors, tol_rel=TOL_RANK):
    if len(vectors) == 0:
        return np.zeros((0, 0)), RankDecision(0, float("inf"), False)
    u, s, vt = np.linalg.svd(np.asarray(vectors), full_matrices=False)
    dec = numerical_rank(s, tol_rel)
    return vt[:dec.rank], dec


def _canonical_sign(rows):
    """Flip each row so its largest-magnitude entry is positive."""
    rows = np.array(rows, copy=True)
    for k in range(len(rows)):
        idx = np.argmax(np.abs(rows[k]))
        if rows[k, idx] < 0:
            rows[k] = -rows[k]
    return rows


def trivial_flex_basis(configuration, tol_rel=TOL_RANK) -> np.ndarray:
    """Orthonormal basis of {v : v_i = S p_i + t, S skew}, shaped (k, N, d)."""
    p = np.asarray(configuration, dtype=float)
    n, d = p.shape
    gens = []
    for a in range(d):
        t = np.zeros((n, d))
        t[:, a] = 1.0
        gens.append(t.ravel())
    for a, b in itertools.combinations(range(d), 2):
        s = np.zeros((d, d))
        s[a, b], s[b, a] = -1.0, 1.0
        gens.append((p @ s.T).ravel())
    basis, dec = _orthonormal_rows(gens, tol_rel)
    expected = d * (d + 1) // 2
    if dec.rank != expected:
        raise GeometryError(
            f"configuration is not full-span: trivial flexes span {dec.rank} < {expected}")
    return basis.reshape(-1, n, d)


@dataclass(frozen=True, eq=False)
class FlexBasis:
    """Orthonormal trivial and nontrivial flexes, each shaped (k, N, d)."""

    trivial: np.ndarray
    nontrivial: np.ndarray
    rank: RankDecision
    tol_used: float

    @property
    def all(self) -> np.ndarray:
        return np.concatenate([self.trivial, self.nontrivial])

    @property
    def dim_trivial(self) -> int:
        return len(self.trivial)

    @property
    def dim_nontrivial(self) -> int:
        return len(self.nontrivial)


@dataclass(frozen=True, eq=False)
class StressBasis:
    """Edge coefficient vectors (s, E) and their assembled matrices (s, N, N)."""

    coefficients: np.ndarray
    matrices: np.ndarray
    rank: RankDecision
    tol_used: float

    @property
    def dim(self) -> int:
        return len(self.coefficients)


def stress_matrix(fw, omega) -> np.ndarray:
    """Assemble sum over edges of w_ij (e_i - e_j)(e_i - e_j)^t."""
    n = fw.n_points
    pairs = fw.pairs
    omega = np.asarray(omega, dtype=float)
    m = np.zeros((n, n))
    i, j = pairs[:, 0], pairs[:, 1]
    np.add.at(m, (i, j), -omega)
    np.add.at(m, (j, i), -omega)
    np.add.at(m, (i, i), omega)
    np.add.at(m, (j, j), omega)
    return m


def _svd(fw):
    r = rigidity_matrix(fw)
    u, s, vt = np.linalg.svd(r, full_matrices=True)
    return r, u, s, vt


def flex_space(fw, tol_rel=TOL_RANK) -> FlexBasis:
    """Kernel of the rigidity matrix, split into trivial and nontrivial parts."""
    n, d = fw.configuration.shape
    _, _, s, vt = _svd(fw)
    dec = numerical_rank(s, tol_rel)
    kernel = vt[dec.rank:]
    trivial = trivial_flex_basis(fw.configuration, tol_rel)
    t_flat = trivial.reshape(len(trivial), -1)
    k_nontrivial = len(kernel) - len(trivial)
    if k_nontrivial > 0:
        projected = kernel - (kernel @ t_flat.T) @ t_flat
        _, _, pvt = np.linalg.svd(projected, full_matrices=False)
        nontrivial = _canonical_sign(pvt[:k_nontrivial])
    else:
        nontrivial = np.zeros((0, n * d))
    return FlexBasis(trivial, nontrivial.reshape(-1, n, d), dec, tol_rel)


def stress_space(fw, tol_rel=TOL_RANK) -> StressBasis:
    """Left nullspace of the rigidity matrix, with assembled stress matrices."""
    _, u, s, _ = _svd(fw)
    dec = numerical_rank(s, tol_rel)
    coeffs = _canonical_sign(u[:, dec.rank:].T)
    mats = np.array([stress_matrix(fw, w) for w in coeffs]).reshape(-1, fw.n_points, fw.n_points)
    return StressBasis(coeffs, mats, dec, tol_rel)


def equilibrium_defect(fw, omega) -> float:
    """max_i |sum_j w_ij (p_i - p_j)| relative to |w| times the configuration scale."""
    r = rigidity_matrix(fw)
    scale = np.linalg.norm(omega) * max(np.abs(r).max(), 1e-300)
    return float(np.max(np.abs(r.T @ omega)) / scale) if scale > 0 else 0.0


def flex_defect(fw, flex) -> float:
    """max over edges |(p_i - p_j).(v_i - v_j)| relative to |v| times the scale."""
    r = rigidity_matrix(fw)
    v = np.asarray(flex, dtype=float).ravel()
    scale = np.linalg.norm(v) * max(np.abs(r).max(), 1e-300)
    return float(np.max(np.abs(r @ v)) / scale) if scale > 0 and len(r) else 0.0
