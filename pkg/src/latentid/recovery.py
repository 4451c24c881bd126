"""Parameter recovery from exact three-way probability tensors.

The decomposition is Jennrich-style simultaneous diagonalization: two random
mixtures of the third-mode slices share the first-mode directions as
generalized eigenvectors.  It is non-iterative and exact up to floating point,
but its preconditions (first two factors of full row rank, third of Kruskal
rank at least 2) are strictly stronger than the Kruskal uniqueness condition;
inputs in the gap raise an explicit error rather than being attempted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    DimensionMismatchError,
    NegativeWeightsError,
    RankDeficientError,
)
from .latent_class import LatentClassModel, Tripartition, joint_distribution
from .tensor_core import (
    check_distribution_tensor,
    clump_tensor,
    khatri_rao,
    numerical_rank,
    triple_product,
    unclump,
)

#: re-randomizations of the slice-mixture weights before giving up
MAX_RETRIES = 20
#: relative eigenvalue separation below which a draw is considered degenerate
EIGEN_GAP_TOL = 1e-7


@dataclass
class RecoveredFactors:
    """Decomposition result: weights, stochastic factors, and reconstruction error.

    ``triple_product(pi[:, None] * factors[0], factors[1], factors[2])``
    reproduces the input tensor within ``residual`` (max-abs).
    """

    pi: np.ndarray
    factors: tuple[np.ndarray, np.ndarray, np.ndarray]
    residual: float
    retries_used: int


@dataclass
class Alignment:
    """A class relabeling together with the parameter error it achieves.

    ``permutation[i]`` is the recovered class index matching reference class
    ``i``; applying it as ``recovered.pi[permutation]`` puts the recovered
    parameters in reference order.
    """

    permutation: np.ndarray
    max_abs_error: float


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _clean_rows(M: np.ndarray, tol: float) -> np.ndarray | None:
    """Clamp negatives within tol to zero and renormalize rows; None if worse."""
    if M.min() < -tol:
        return None
    M = np.where(M < 0.0, 0.0, M)
    sums = M.sum(axis=1, keepdims=True)
    if np.any(sums <= 0.0):
        return None
    return M / sums


def decompose3(
    T,
    r: int,
    seed=None,
    tol: float = 1e-8,
    max_retries: int = MAX_RETRIES,
) -> RecoveredFactors:
    """Rank-r decomposition of an exact three-way probability tensor.

    Draws two random weight vectors over the third mode, forms the two slice
    mixtures, and reads the first-mode directions off the eigen-structure of
    their quotient (in an r-dimensional projected basis); the second mode
    follows from the same eigenbasis and the third mode and the weights from a
    least-squares solve against the rank-1 terms.  Each factor row is
    normalized to sum 1, with the absorbed scales accumulating into ``pi``.

    Succeeds when the generating model has first and second factors of full
    row rank r and third factor of Kruskal rank at least 2; the reconstruction
    residual is at most ``tol`` on success.  Unlucky weight draws are retried
    up to ``max_retries`` times.

    Raises
    ------
    RankDeficientError
        A mode-1 or mode-2 unfolding (or persistently every slice mixture)
        has numerical rank below r.
    DegenerateSpectrumError
        Eigenvalue ratios collide, or the residual never meets ``tol``.
    NegativeWeightsError
        A recovered mixing weight stays below ``-tol``.
    """
    T = check_distribution_tensor(T)
    if T.ndim != 3:
        raise DimensionMismatchError(f"expected a 3-way tensor, got ndim={T.ndim}")
    k1, k2, k3 = T.shape
    if r < 1:
        raise ValueError("r must be at least 1")
    if k1 < r or k2 < r:
        raise RankDeficientError(
            f"first two dimensions {(k1, k2)} must both be at least r={r}"
        )

    if r == 1:
        m1 = T.sum(axis=(1, 2))[None, :]
        m2 = T.sum(axis=(0, 2))[None, :]
        m3 = T.sum(axis=(0, 1))[None, :]
        total = T.sum()
        factors = (m1 / total, m2 / total, m3 / total)
        pi = np.array([total])
        resid = float(np.abs(triple_product(pi[:, None] * factors[0], factors[1], factors[2]) - T).max())
        return RecoveredFactors(pi=pi, factors=factors, residual=resid, retries_used=0)

    T1 = T.reshape(k1, k2 * k3)
    T2 = T.transpose(1, 0, 2).reshape(k2, k1 * k3)
    if numerical_rank(T1) < r:
        raise RankDeficientError(f"mode-1 unfolding has rank below r={r}")
    if numerical_rank(T2) < r:
        raise RankDeficientError(f"mode-2 unfolding has rank below r={r}")
    U1 = np.linalg.svd(T1, full_matrices=False)[0][:, :r]
    U2 = np.linalg.svd(T2, full_matrices=False)[0][:, :r]
    T3 = T.transpose(2, 0, 1).reshape(k3, k1 * k2)

    rng = _as_rng(seed)
    last_reason = "spectrum"
    for attempt in range(max_retries + 1):
        a = rng.standard_normal(k3)
        b = rng.standard_normal(k3)
        Ta = U1.T @ np.einsum("uvw,w->uv", T, a) @ U2
        Tb = U1.T @ np.einsum("uvw,w->uv", T, b) @ U2

        sv = np.linalg.svd(Tb, compute_uv=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
            last_reason = "slice_rank"
            continue

        E = np.linalg.solve(Tb.T, Ta.T).T
        lam, V = np.linalg.eig(E)
        scale = np.abs(lam).max()
        if scale == 0.0 or np.abs(lam.imag).max() > EIGEN_GAP_TOL * scale:
            last_reason = "spectrum"
            continue
        gaps = [
            abs(lam[i] - lam[j])
            for i in range(r)
            for j in range(i + 1, r)
        ]
        if min(gaps) < EIGEN_GAP_TOL * scale:
            last_reason = "spectrum"
            continue

        V = V.real
        M1 = (U1 @ V).T
        sums1 = M1.sum(axis=1)
        if np.abs(sums1).min() < 1e-12:
            last_reason = "spectrum"
            continue
        M1 = M1 / sums1[:, None]

        W = np.linalg.solve(V, Tb)  # rows are scaled second-mode directions
        M2 = (U2 @ W.T).T
        sums2 = M2.sum(axis=1)
        if np.abs(sums2).min() < 1e-12:
            last_reason = "spectrum"
            continue
        M2 = M2 / sums2[:, None]

        G = khatri_rao([M1, M2])
        C = np.linalg.lstsq(G.T, T3.T, rcond=None)[0]
        pi = C.sum(axis=1)
        if pi.min() < -tol:
            last_reason = "negative"
            continue
        pi = np.where(pi < 0.0, 0.0, pi)
        if pi.min() <= 0.0:
            last_reason = "negative"
            continue
        M3 = C / pi[:, None]

        cleaned = [_clean_rows(M, tol) for M in (M1, M2, M3)]
        if any(M is None for M in cleaned):
            last_reason = "negative"
            continue
        M1, M2, M3 = cleaned  # type: ignore[assignment]
        pi = pi / pi.sum()

        resid = float(
            np.abs(triple_product(pi[:, None] * M1, M2, M3) - T).max()
        )
        if resid <= tol:
            return RecoveredFactors(
                pi=pi, factors=(M1, M2, M3), residual=resid, retries_used=attempt
            )
        last_reason = "residual"

    if last_reason == "negative":
        raise NegativeWeightsError(
            f"recovered weights stayed negative beyond tol={tol} "
            f"after {max_retries} retries"
        )
    if last_reason == "slice_rank":
        raise RankDeficientError(
            f"slice mixtures kept numerical rank below r={r} "
            f"after {max_retries} retries"
        )
    raise DegenerateSpectrumError(
        f"no weight draw gave separated eigenvalues and residual <= {tol} "
        f"after {max_retries} retries (last failure: {last_reason})"
    )


def _param_error(pi_a, factors_a, pi_b, factors_b, perm: Sequence[int]) -> float:
    """Max-abs parameter difference after reordering the a-side by perm."""
    perm = list(perm)
    err = np.abs(pi_a[perm] - pi_b).max()
    for Fa, Fb in zip(factors_a, factors_b):
        err = max(err, np.abs(Fa[perm] - Fb).max())
    return float(err)


def align_permutation(recovered, reference) -> Alignment:
    """Best class relabeling of ``recovered`` onto ``reference``.

    Both arguments are ``(pi, factors)`` pairs (a :class:`RecoveredFactors`
    is accepted for either).  For r <= 8 all permutations are tried and the
    max-abs parameter difference is minimized exactly; for larger r a greedy
    assignment on row correlation of the concatenated factors is used.
    """
    pi_a, factors_a = _as_params(recovered)
    pi_b, factors_b = _as_params(reference)
    if pi_a.shape != pi_b.shape or len(factors_a) != len(factors_b):
        raise DimensionMismatchError("class counts or factor counts differ")
    for Fa, Fb in zip(factors_a, factors_b):
        if Fa.shape != Fb.shape:
            raise DimensionMismatchError(
                f"factor shapes differ: {Fa.shape} vs {Fb.shape}"
            )
    r = pi_a.size

    if r <= 8:
        best_perm = None
        best_err = np.inf
        for perm in itertools.permutations(range(r)):
            err = _param_error(pi_a, factors_a, pi_b, factors_b, perm)
            if err < best_err:
                best_err = err
                best_perm = perm
        return Alignment(
            permutation=np.array(best_perm, dtype=int), max_abs_error=best_err
        )

    # greedy row-correlation matching for large r
    A = np.hstack([pi_a[:, None]] + list(factors_a))
    B = np.hstack([pi_b[:, None]] + list(factors_b))
    An = (A - A.mean(axis=1, keepdims=True))
    Bn = (B - B.mean(axis=1, keepdims=True))
    An = An / np.maximum(np.linalg.norm(An, axis=1, keepdims=True), 1e-300)
    Bn = Bn / np.maximum(np.linalg.norm(Bn, axis=1, keepdims=True), 1e-300)
    corr = Bn @ An.T  # corr[ref, rec]
    perm = np.full(r, -1, dtype=int)
    taken = np.zeros(r, dtype=bool)
    for ref in np.argsort(-np.abs(corr).max(axis=1)):
        order = np.argsort(-corr[ref])
        for rec in order:
            if not taken[rec]:
                perm[ref] = rec
                taken[rec] = True
                break
    err = _param_error(pi_a, factors_a, pi_b, factors_b, perm)
    return Alignment(permutation=perm, max_abs_error=err)


def _as_params(obj) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
    if isinstance(obj, RecoveredFactors):
        return obj.pi, obj.factors
    pi, factors = obj
    return np.asarray(pi, dtype=float), tuple(np.asarray(F, float) for F in factors)


def canonicalize(pi, factors):
    """Reorder classes by descending weight, ties by the first factor's rows.

    Makes recovery output a pure function of the input tensor: two runs with
    different seeds canonicalize to identical parameters (up to float noise).
    """
    pi = np.asarray(pi, dtype=float)
    factors = [np.asarray(F, dtype=float) for F in factors]
    order = sorted(
        range(pi.size), key=lambda i: (-pi[i], tuple(factors[0][i]))
    )
    return pi[order], tuple(F[order] for F in factors)


def recover_latent_class(
    T,
    r: int,
    tripartition,
    seed=None,
    tol: float = 1e-8,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Recover latent-class parameters from an exact p-variate joint table.

    Clumps the table into a three-way tensor along ``tripartition`` (a
    :class:`Tripartition` or three blocks of 0-based axis indices), decomposes
    it, then de-clumps each recovered composite factor back into per-variable
    conditional matrices.  The first two clumped dimensions must be at least
    r, and the underlying model must actually factor over the variables;
    otherwise the decomposition errors propagate
    (:class:`NotKhatriRaoError` signals a non-product input).

    Returns ``(pi, emissions)`` with emissions in original variable order.
    """
    T = np.asarray(T, dtype=float)
    blocks = (
        tripartition.blocks
        if isinstance(tripartition, Tripartition)
        else tuple(tuple(sorted(int(j) for j in b)) for b in tripartition)
    )
    kappas = T.shape
    N = clump_tensor(T, blocks)
    rec = decompose3(N, r, seed=seed, tol=tol)
    emissions_by_var: dict[int, np.ndarray] = {}
    for block, factor in zip(blocks, rec.factors):
        parts = unclump(factor, [kappas[j] for j in block])
        for j, M in zip(block, parts):
            emissions_by_var[j] = M
    emissions = [emissions_by_var[j] for j in range(T.ndim)]
    model = LatentClassModel(pi=rec.pi, emissions=tuple(emissions))
    resid = float(np.abs(joint_distribution(model) - T).max())
    if resid > tol:
        raise DegenerateSpectrumError(
            f"reassembled model misses the input table by {resid:.3g} > tol={tol}"
        )
    return rec.pi, emissions
