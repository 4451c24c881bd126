"""Dense matrix and tensor primitives.

Row-wise Khatri-Rao products, triple products, numerical and Kruskal rank,
clumping / de-clumping index algebra and Vandermonde witness matrices.

Composite index convention
--------------------------
Whenever several finite variables are merged into one composite variable, the
composite index is mixed-radix with the *last* variable varying fastest.  This
is the convention of :func:`khatri_rao` (binary definition applied as a left
fold) and of C-order ``reshape``; :func:`clump_tensor` and :func:`unclump`
rely on the two agreeing bit-exactly.

All operations are pure; inputs are never mutated.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence

import numpy as np

from .errors import (
    BadPartitionError,
    DimensionMismatchError,
    DuplicateValuesError,
    EmptyInputError,
    MismatchedRowsError,
    NonFiniteEntriesError,
    NotKhatriRaoError,
    TooManyRowsError,
)

#: relative singular-value cutoff for rank decisions
RANK_TOL = 1e-10
#: probability rows / distributions must sum to 1 within this
ROW_SUM_TOL = 1e-9
#: probability entries may undershoot zero by at most this
NEG_ENTRY_TOL = 1e-12
#: Kruskal-rank subset enumeration refuses matrices with more rows than this
KRUSKAL_ROW_CAP = 20


# ---------------------------------------------------------------------------
# validation helpers


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array, requiring finite entries."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got ndim={M.ndim}")
    if M.size == 0:
        raise DimensionMismatchError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(M)):
        raise NonFiniteEntriesError(f"{name} contains non-finite entries")
    return M


def check_stochastic(M, tol: float = ROW_SUM_TOL, name: str = "matrix") -> np.ndarray:
    """Validate a row-stochastic matrix: entries in [0, 1], rows summing to 1."""
    M = as_matrix(M, name)
    if M.min() < -NEG_ENTRY_TOL or M.max() > 1.0 + tol:
        raise ValueError(f"{name} entries must lie in [0, 1]")
    err = np.abs(M.sum(axis=1) - 1.0).max()
    if err > tol:
        raise ValueError(f"{name} rows must sum to 1 (max deviation {err:.3g})")
    return M


def check_probability_vector(pi, tol: float = ROW_SUM_TOL, name: str = "pi") -> np.ndarray:
    """Validate a strictly positive probability vector."""
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size == 0:
        raise DimensionMismatchError(f"{name} must be a nonempty 1-D array")
    if not np.all(np.isfinite(pi)):
        raise NonFiniteEntriesError(f"{name} contains non-finite entries")
    if pi.min() <= 1e-12:
        raise ValueError(f"{name} entries must be strictly positive")
    if abs(pi.sum() - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 (got {pi.sum():.12g})")
    return pi


def check_distribution_tensor(T, tol: float = ROW_SUM_TOL, name: str = "tensor") -> np.ndarray:
    """Validate a dense joint distribution: near-nonnegative, total mass 1."""
    T = np.asarray(T, dtype=float)
    if not np.all(np.isfinite(T)):
        raise NonFiniteEntriesError(f"{name} contains non-finite entries")
    if T.min() < -NEG_ENTRY_TOL:
        raise ValueError(f"{name} has entries below -{NEG_ENTRY_TOL}")
    if abs(T.sum() - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 (got {T.sum():.12g})")
    return T


# ---------------------------------------------------------------------------
# products


def khatri_rao(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Row-wise Khatri-Rao (row tensor) product of matrices with equal row count.

    Row ``i`` of the result is the flattened outer product of the factors'
    ``i``-th rows, with the last factor's column index varying fastest.  For
    row-stochastic factors the result is again row stochastic: each output row
    is the joint distribution of conditionally independent variables.

    Parameters
    ----------
    factors : sequence of (r, a_i) arrays

    Returns
    -------
    (r, prod a_i) array
    """
    if len(factors) == 0:
        raise EmptyInputError("khatri_rao requires at least one factor")
    mats = [as_matrix(F, f"factor {i}") for i, F in enumerate(factors)]
    rows = mats[0].shape[0]
    for i, M in enumerate(mats[1:], start=1):
        if M.shape[0] != rows:
            raise MismatchedRowsError(
                f"factor 0 has {rows} rows but factor {i} has {M.shape[0]}"
            )
    out = mats[0]
    for M in mats[1:]:
        a, b = out.shape[1], M.shape[1]
        out = (out[:, :, None] * M[:, None, :]).reshape(rows, a * b)
    return out


def triple_product(M1, M2, M3) -> np.ndarray:
    """Sum of outer products of corresponding rows of three matrices.

    Entry ``(u, v, w)`` equals ``sum_i M1[i, u] * M2[i, v] * M3[i, w]``.
    The result is unchanged by simultaneously permuting the rows of all three
    factors, or by row rescalings whose per-row scale product is 1.
    """
    M1 = as_matrix(M1, "M1")
    M2 = as_matrix(M2, "M2")
    M3 = as_matrix(M3, "M3")
    if not (M1.shape[0] == M2.shape[0] == M3.shape[0]):
        raise MismatchedRowsError(
            f"row counts differ: {M1.shape[0]}, {M2.shape[0]}, {M3.shape[0]}"
        )
    return np.einsum("iu,iv,iw->uvw", M1, M2, M3)


# ---------------------------------------------------------------------------
# rank


def numerical_rank(M, tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol * sigma_1 * max(rows, cols)``.

    Returns 0 for the zero matrix.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M)
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(M.shape)))


def kruskal_rank(M, tol: float = RANK_TOL, row_cap: int = KRUSKAL_ROW_CAP) -> int:
    """Largest ``I`` such that every set of ``I`` rows is linearly independent.

    Always at most the ordinary rank.  A matrix of full row rank has Kruskal
    rank equal to its row count (checked first, with a single SVD); otherwise
    row subsets are enumerated in increasing size with early exit at the first
    dependent subset.  Enumeration is refused above ``row_cap`` rows because
    the subset count grows combinatorially.
    """
    M = as_matrix(M)
    rows = M.shape[0]
    rank = numerical_rank(M, tol)
    if rank == rows:
        return rows
    if rows > row_cap:
        raise TooManyRowsError(
            f"subset enumeration over {rows} rows exceeds the cap of {row_cap}"
        )
    for size in range(1, rank + 1):
        for subset in itertools.combinations(range(rows), size):
            if numerical_rank(M[list(subset)], tol) < size:
                return size - 1
    return rank


# ---------------------------------------------------------------------------
# clumping index algebra


def unclump(A, col_dims: Sequence[int], tol: float = ROW_SUM_TOL) -> list[np.ndarray]:
    """Invert :func:`khatri_rao` on row-stochastic factors.

    ``A`` must be row stochastic with ``prod(col_dims)`` columns.  Factor
    ``i`` is recovered by summing, within each row, the entries whose ``i``-th
    mixed-radix column digit agrees; this is exact when ``A`` is a row tensor
    product of stochastic factors.  The round trip ``khatri_rao(result)`` is
    checked against ``A`` and :class:`NotKhatriRaoError` is raised when the
    residual exceeds ``tol``.
    """
    A = as_matrix(A, "A")
    dims = [int(d) for d in col_dims]
    if any(d < 1 for d in dims):
        raise DimensionMismatchError("col_dims must be positive")
    if int(np.prod(dims)) != A.shape[1]:
        raise DimensionMismatchError(
            f"prod(col_dims)={int(np.prod(dims))} does not match {A.shape[1]} columns"
        )
    row_err = np.abs(A.sum(axis=1) - 1.0).max()
    if row_err > tol:
        raise NotKhatriRaoError(
            f"rows must sum to 1 for de-clumping (max deviation {row_err:.3g})"
        )
    R = A.reshape(A.shape[0], *dims)
    factors = []
    for i in range(len(dims)):
        axes = tuple(ax for ax in range(1, len(dims) + 1) if ax != i + 1)
        factors.append(R.sum(axis=axes) if axes else R.copy())
    resid = np.abs(khatri_rao(factors) - A).max()
    if resid > tol:
        raise NotKhatriRaoError(
            f"input is not a row tensor product of stochastic factors "
            f"(round-trip residual {resid:.3g})"
        )
    return factors


def clump_tensor(T, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    """Regroup the axes of a p-way tensor into three composite axes.

    ``blocks`` are three disjoint, nonempty sets of axis indices covering
    ``range(T.ndim)``.  Within each block axes are taken in increasing order,
    so the composite index matches :func:`khatri_rao` applied to per-axis
    factors in the same order.  Entries are preserved exactly.
    """
    T = np.asarray(T, dtype=float)
    if len(blocks) != 3:
        raise BadPartitionError(f"need exactly 3 blocks, got {len(blocks)}")
    sorted_blocks = [sorted(int(j) for j in b) for b in blocks]
    flat = [j for b in sorted_blocks for j in b]
    if any(len(b) == 0 for b in sorted_blocks):
        raise BadPartitionError("blocks must be nonempty")
    if sorted(flat) != list(range(T.ndim)):
        raise BadPartitionError(
            f"blocks must disjointly cover all {T.ndim} axes, got {blocks}"
        )
    dims = tuple(
        int(np.prod([T.shape[j] for j in b])) for b in sorted_blocks
    )
    return T.transpose(flat).reshape(dims)


# ---------------------------------------------------------------------------
# witnesses


def first_primes(n: int) -> list[int]:
    """The first ``n`` prime numbers."""
    primes: list[int] = []
    candidate = 2
    while len(primes) < n:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return primes


def vandermonde_witness(r: int, col_values: Sequence[float]) -> np.ndarray:
    """Vandermonde matrix with entry ``(i, j) = col_values[j] ** i``.

    Node values must be distinct and positive; distinct primes make the
    monomial products of row-wise Khatri-Rao powers pairwise distinct, which
    is what rank witnesses are built from.
    """
    vals = np.asarray(col_values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise DimensionMismatchError("col_values must be a nonempty 1-D sequence")
    if len(np.unique(vals)) != len(vals):
        raise DuplicateValuesError(f"col_values must be distinct, got {col_values}")
    if vals.min() <= 0:
        raise ValueError("col_values must be positive")
    if r < 1:
        raise ValueError("r must be at least 1")
    return np.vander(vals, N=r, increasing=True).T


# ---------------------------------------------------------------------------
# JSON wire format


def array_to_json_dict(arr) -> dict:
    """Serialize an array as ``{"dims": [...], "data": [...]}`` (row-major)."""
    arr = np.asarray(arr, dtype=float)
    return {"dims": list(arr.shape), "data": arr.ravel(order="C").tolist()}


def array_from_json_dict(obj: dict) -> np.ndarray:
    """Inverse of :func:`array_to_json_dict`."""
    data = np.asarray(obj["data"], dtype=float)
    return data.reshape(obj["dims"])
