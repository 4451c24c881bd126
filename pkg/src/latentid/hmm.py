"""Discrete hidden Markov models: window bounds, embeddings and recovery.

A stationary chain observed through a memoryless emission channel becomes a
three-variable latent-class model once a window of ``2k + 1`` consecutive
observations is split into past block, future block and center symbol, all
conditioned on the hidden state at the center.  The block conditional
matrices are built by the recursion

    B1 = A'(B (x) (... A'(B (x) (A'B)) ...)),   B2 likewise with A,

``(x)`` denoting the row tensor product and ``A'`` the time-reversed
transition matrix.  Column conventions (fixed; the recursion and the
marginalization in :func:`recover_hmm` depend on them):

* ``B2`` columns index the future symbols ``(x_{k+1}, ..., x_{2k})`` in
  mixed radix with the latest symbol ``x_{2k}`` varying fastest;
* ``B1`` columns index the past symbols reversed, ``(x_{k-1}, ..., x_0)``,
  with the earliest symbol ``x_0`` varying fastest (it is produced by the
  innermost factor of the recursion).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IllConditionedError,
    NonUniqueStationaryError,
    NotStationaryError,
    TooLargeError,
)
from .latent_class import Certificate, ENTRY_CAP
from .recovery import Alignment, decompose3
from .tensor_core import (
    RANK_TOL,
    ROW_SUM_TOL,
    check_probability_vector,
    check_stochastic,
    khatri_rao,
    kruskal_rank,
    numerical_rank,
    triple_product,
)

#: the unit eigenvalue must be separated from the rest by this much
STATIONARY_GAP_TOL = 1e-8


def stationary_distribution(A, gap_tol: float = STATIONARY_GAP_TOL) -> np.ndarray:
    """Stationary distribution of a transition matrix with a simple unit eigenvalue.

    Raises :class:`NonUniqueStationaryError` when a second eigenvalue lies
    within ``gap_tol`` of 1 (the chain is reducible or periodic within
    numerical resolution), or when the stationary vector is not strictly
    positive.
    """
    A = check_stochastic(A, name="A")
    r = A.shape[0]
    if A.shape[1] != r:
        raise DimensionMismatchError(f"transition matrix must be square, got {A.shape}")
    lam, V = np.linalg.eig(A.T)
    dist = np.abs(lam - 1.0)
    order = np.argsort(dist)
    if r > 1 and dist[order[1]] <= gap_tol:
        raise NonUniqueStationaryError(
            "unit eigenvalue of the transition matrix is not simple"
        )
    v = V[:, order[0]].real
    pi = v / v.sum()
    if pi.min() <= 1e-12:
        raise NonUniqueStationaryError(
            "stationary distribution is not strictly positive"
        )
    return pi


def time_reversal(A, pi, tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Transition matrix of the reversed stationary chain.

    ``A_rev[i, j] = pi[j] * A[j, i] / pi[i]``; applying the reversal twice
    returns ``A`` exactly.  Raises :class:`NotStationaryError` when ``pi`` is
    not stationary for ``A``.
    """
    A = check_stochastic(A, name="A")
    pi = check_probability_vector(pi)
    if A.shape[0] != pi.size or A.shape[1] != pi.size:
        raise DimensionMismatchError("pi length must match the square matrix A")
    err = np.abs(pi @ A - pi).max()
    if err > tol:
        raise NotStationaryError(f"pi A differs from pi by {err:.3g} > {tol}")
    return (A.T * pi[None, :]) / pi[:, None]


@dataclass(frozen=True)
class HiddenMarkovModel:
    """Transition matrix, emission matrix and the stationary distribution.

    ``pi`` is derived from ``A`` when omitted, and validated against it when
    given.
    """

    A: np.ndarray
    B: np.ndarray
    pi: np.ndarray | None = None

    def __post_init__(self):
        A = check_stochastic(self.A, name="A")
        B = check_stochastic(self.B, name="B")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionMismatchError(
                f"B has {B.shape[0]} rows, expected r={A.shape[0]}"
            )
        if self.pi is None:
            pi = stationary_distribution(A)
        else:
            pi = check_probability_vector(self.pi)
            err = np.abs(pi @ A - pi).max()
            if err > ROW_SUM_TOL:
                raise NotStationaryError(
                    f"provided pi is not stationary (deviation {err:.3g})"
                )
        for arr in (A, B, pi):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "pi", pi)

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def kappa(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ConditionalBlocks:
    """Past and future window blocks conditioned on the center hidden state.

    Row ``i`` of ``B1`` is the joint law of the k symbols before the center
    given hidden state ``i`` there; row ``i`` of ``B2`` the law of the k
    symbols after.  ``A_rev`` is the reversed-chain transition matrix used to
    build ``B1``.
    """

    k: int
    B1: np.ndarray
    B2: np.ndarray
    A_rev: np.ndarray


def min_window(r: int, kappa: int) -> int:
    """Smallest half-window k with ``C(k + kappa - 1, kappa - 1) >= r``.

    The binomial counts distinct degree-k monomials in kappa symbols, which is
    what makes the window blocks generically full rank; the full window has
    ``2k + 1`` observations.  For binary observations this gives ``k = r - 1``
    (window ``2r - 1``); larger alphabets need shorter windows.
    """
    if r < 1 or kappa < 2:
        raise ValueError("need r >= 1 and kappa >= 2")
    k = 1
    while math.comb(k + kappa - 1, kappa - 1) < r:
        k += 1
    return k


def conditional_blocks(
    model: HiddenMarkovModel, k: int, entry_cap: int = ENTRY_CAP
) -> ConditionalBlocks:
    """Window block matrices for half-window k, built innermost-out."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if model.kappa**k > entry_cap:
        raise TooLargeError(
            f"kappa^k = {model.kappa ** k} exceeds the entry cap {entry_cap}"
        )
    A, B, pi = model.A, model.B, model.pi
    A_rev = time_reversal(A, pi)
    B1 = A_rev @ B
    B2 = A @ B
    for _ in range(k - 1):
        B1 = A_rev @ khatri_rao([B, B1])
        B2 = A @ khatri_rao([B, B2])
    return ConditionalBlocks(k=k, B1=B1, B2=B2, A_rev=A_rev)


def window_tensor(model: HiddenMarkovModel, k: int, entry_cap: int = ENTRY_CAP) -> np.ndarray:
    """Exact joint law of (past block, future block, center symbol).

    The tensor equals ``triple_product(diag(pi) B1, B2, B)`` and is the
    marginal distribution of ``2k + 1`` consecutive observations regrouped as
    ``((X_0..X_{k-1}), (X_{k+1}..X_{2k}), X_k)``.
    """
    blocks = conditional_blocks(model, k, entry_cap)
    return triple_product(
        model.pi[:, None] * blocks.B1, blocks.B2, model.B
    )


def hmm_certificate(model: HiddenMarkovModel, k: int, tol: float = RANK_TOL) -> Certificate:
    """Identifiability certificate for the window embedding at half-window k.

    Holds when both window blocks have full row rank r and the emission matrix
    has Kruskal rank at least 2.  This is what the constructive recovery in
    :func:`recover_hmm` needs; it implies the rank sum reaches ``2r + 2`` but
    is slightly stronger than the bare sum condition.  The reported ranks are
    the true Kruskal ranks of ``(B1, B2, B)``.
    """
    blocks = conditional_blocks(model, k)
    r = model.r
    i1 = kruskal_rank(blocks.B1, tol)
    i2 = kruskal_rank(blocks.B2, tol)
    i3 = kruskal_rank(model.B, tol)
    holds = (
        numerical_rank(blocks.B1, tol) == r
        and numerical_rank(blocks.B2, tol) == r
        and i3 >= 2
    )
    return Certificate(
        holds=holds,
        kruskal_ranks=(i1, i2, i3),
        threshold=2 * r + 2,
        mode="exact-matrix",
    )


def recover_hmm(
    T,
    r: int,
    kappa: int,
    k: int,
    seed=None,
    tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Recover (A, B, pi) from the exact window tensor, up to state relabeling.

    The three-way decomposition yields the permuted blocks ``(B1, B2, B)``
    and the stationary weights.  Marginalizing the last observed symbol out of
    the recovered future block leaves a matrix ``M`` with one fewer recursion
    level, so the future block factors as ``A (B (x) M)``; ``A`` then follows
    from one least-squares solve.

    Raises :class:`IllConditionedError` when ``B (x) M`` is rank deficient or
    the solved transition matrix fails to be row stochastic within ``tol``.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (kappa**k, kappa**k, kappa):
        raise DimensionMismatchError(
            f"window tensor shape {T.shape} does not match "
            f"(kappa^k, kappa^k, kappa) = {(kappa ** k, kappa ** k, kappa)}"
        )
    rec = decompose3(T, r, seed=seed, tol=tol)
    B_hat = rec.factors[2]
    F2 = rec.factors[1]
    if k == 1:
        M = np.ones((r, 1))
    else:
        M = F2.reshape(r, kappa ** (k - 1), kappa).sum(axis=2)
    G = khatri_rao([B_hat, M])
    if numerical_rank(G) < r:
        raise IllConditionedError(
            "emission-block product is rank deficient; transition solve aborted"
        )
    A_hat = np.linalg.lstsq(G.T, F2.T, rcond=None)[0].T
    row_err = np.abs(A_hat.sum(axis=1) - 1.0).max()
    if row_err > tol:
        raise IllConditionedError(
            f"solved transition matrix misses row sums by {row_err:.3g} > {tol}"
        )
    if A_hat.min() < -tol:
        raise IllConditionedError(
            f"solved transition matrix has entries below -{tol}"
        )
    A_hat = np.where(A_hat < 0.0, 0.0, A_hat)
    A_hat = A_hat / A_hat.sum(axis=1, keepdims=True)
    return A_hat, B_hat, rec.pi


def align_hmm(recovered, reference) -> Alignment:
    """Best simultaneous state relabeling of one (A, B, pi) triple onto another.

    The transition matrix is permuted on both axes.  Exhaustive for r <= 8.
    """
    A_a, B_a, pi_a = (np.asarray(x, dtype=float) for x in recovered)
    A_b, B_b, pi_b = (np.asarray(x, dtype=float) for x in reference)
    if A_a.shape != A_b.shape or B_a.shape != B_b.shape or pi_a.shape != pi_b.shape:
        raise DimensionMismatchError("recovered and reference shapes differ")
    r = pi_a.size
    if r > 8:
        raise DimensionMismatchError("exhaustive HMM alignment supports r <= 8")
    best_perm = None
    best_err = np.inf
    for perm in itertools.permutations(range(r)):
        p = list(perm)
        err = max(
            np.abs(pi_a[p] - pi_b).max(),
            np.abs(A_a[np.ix_(p, p)] - A_b).max(),
            np.abs(B_a[p] - B_b).max(),
        )
        if err < best_err:
            best_err = err
            best_perm = perm
    return Alignment(permutation=np.array(best_perm, dtype=int), max_abs_error=float(best_err))
