"""Dense linear algebra over GF(2) on 0/1 numpy arrays."""

from __future__ import annotations

import numpy as np


class SingularMatrixError(ValueError):
    """Square system has no unique solution over GF(2)."""


def as_bits(data, copy: bool = True) -> np.ndarray:
    """Coerce to a uint8 array of 0/1 entries."""
    arr = np.array(data, dtype=np.uint8, copy=copy)
    if arr.size and arr.max() > 1:
        raise ValueError("entries must be bits")
    return arr


def frozen(arr: np.ndarray) -> np.ndarray:
    """Mark an array read-only and return it."""
    arr.flags.writeable = False
    return arr


def build_alignment_matrix(n: int) -> np.ndarray:
    """n x n full-rank matrix: identity block, appended ones column, final
    row zero except a trailing 1. Row j < n is e_j with a 1 appended; row n
    is (0,...,0,1). n = 1 degenerates to [[1]].
    """
    if n < 1:
        raise ValueError(f"alignment matrix needs n >= 1, got {n}")
    m = np.zeros((n, n), dtype=np.uint8)
    for j in range(n - 1):
        m[j, j] = 1
    m[:, n - 1] = 1
    return frozen(m)


def _eliminate(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    # Column-major sweep, first nonzero entry as pivot; deterministic.
    a = np.array(m, dtype=np.uint8, copy=True)
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        below = np.nonzero(a[r + 1:, c])[0]
        if below.size:
            a[r + 1 + below] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m) -> int:
    """GF(2) row rank by Gaussian elimination."""
    a = np.atleast_2d(np.asarray(m, dtype=np.uint8))
    _, pivots = _eliminate(a)
    return len(pivots)


def solve_square(a, b) -> np.ndarray:
    """Solve a @ x = b over GF(2) for square full-rank a.

    Raises SingularMatrixError when rank(a) < n.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    if b.shape != (n,):
        raise ValueError(f"rhs length {b.shape} does not match n={n}")
    aug = np.concatenate([a, b[:, None]], axis=1)
    ech, pivots = _eliminate(aug)
    rank_a = sum(1 for p in pivots if p < n)
    if rank_a < n:
        raise SingularMatrixError(f"matrix rank {rank_a} < {n}")
    x = np.zeros(n, dtype=np.uint8)
    for r in range(n - 1, -1, -1):
        x[r] = (ech[r, n] ^ (ech[r, r + 1:n] @ x[r + 1:])) & 1
    return x


def mat_vec(m, v) -> np.ndarray:
    """Matrix-vector product over GF(2)."""
    return (np.asarray(m, dtype=np.uint8) @ np.asarray(v, dtype=np.uint8)) & 1


def permute_rows(m, perm) -> np.ndarray:
    """Reorder rows: result row i is m[perm[i]]. perm must be a permutation
    of range(rows); rank is preserved.
    """
    m = np.asarray(m, dtype=np.uint8)
    perm = list(perm)
    if sorted(perm) != list(range(m.shape[0])):
        raise ValueError(f"{perm} is not a permutation of range({m.shape[0]})")
    return frozen(m[perm].copy())
