"""The r-class, p-feature latent-class model and its identifiability certificates.

A model mixes r product distributions over p finite variables, the j-th with
``kappas[j]`` states.  Certificates come in two modes:

* ``exact-matrix``: Kruskal ranks of the given conditional matrices are
  computed and summed against the threshold ``2r + 2``.
* ``generic-dimension``: only the dimensions enter, each clumped variable
  contributing ``min(r, prod of its state counts)``; this is the generic value
  of the Kruskal rank of a row tensor product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import (
    BadPartitionError,
    NotThreeVariablesError,
    TooFewVariablesError,
    TooLargeError,
)
from .tensor_core import (
    RANK_TOL,
    check_probability_vector,
    check_stochastic,
    khatri_rao,
    kruskal_rank,
)

#: dense joint distributions are refused above this many entries
ENTRY_CAP = 2**24
#: exhaustive tripartition enumeration is used up to this many variables
EXHAUSTIVE_PARTITION_LIMIT = 12


@dataclass(frozen=True)
class LatentClassModel:
    """Mixing weights plus one conditional stochastic matrix per variable.

    ``emissions[j]`` has shape ``(r, kappas[j])``; its row ``i`` is the
    distribution of variable ``j`` conditional on class ``i``.  All classes
    must have strictly positive weight.
    """

    pi: np.ndarray
    emissions: tuple[np.ndarray, ...]

    def __post_init__(self):
        pi = check_probability_vector(self.pi)
        mats = tuple(
            check_stochastic(M, name=f"emissions[{j}]")
            for j, M in enumerate(self.emissions)
        )
        if len(mats) < 1:
            raise ValueError("at least one variable is required")
        r = pi.size
        for j, M in enumerate(mats):
            if M.shape[0] != r:
                raise ValueError(
                    f"emissions[{j}] has {M.shape[0]} rows, expected r={r}"
                )
            if M.shape[1] < 2:
                raise ValueError(f"variable {j} must have at least 2 states")
        pi.flags.writeable = False
        for M in mats:
            M.flags.writeable = False
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "emissions", mats)

    @property
    def r(self) -> int:
        return self.pi.size

    @property
    def p(self) -> int:
        return len(self.emissions)

    @property
    def kappas(self) -> tuple[int, ...]:
        return tuple(M.shape[1] for M in self.emissions)


@dataclass(frozen=True)
class Tripartition:
    """Three disjoint nonempty blocks of 0-based variable indices covering all p."""

    blocks: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    clumped_dims: tuple[int, int, int]

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], kappas: Sequence[int]) -> "Tripartition":
        sorted_blocks = tuple(tuple(sorted(int(j) for j in b)) for b in blocks)
        if len(sorted_blocks) != 3 or any(len(b) == 0 for b in sorted_blocks):
            raise BadPartitionError("need three nonempty blocks")
        flat = sorted(j for b in sorted_blocks for j in b)
        if flat != list(range(len(kappas))):
            raise BadPartitionError(
                f"blocks {blocks} must disjointly cover range({len(kappas)})"
            )
        dims = tuple(int(np.prod([kappas[j] for j in b])) for b in sorted_blocks)
        return cls(blocks=sorted_blocks, clumped_dims=dims)  # type: ignore[arg-type]


@dataclass(frozen=True)
class Certificate:
    """Outcome of a Kruskal-condition identifiability check.

    ``holds`` is True when the reported ranks certify uniqueness of the
    decomposition against ``threshold = 2r + 2``; the exact certifying rule
    is documented at the operation that produced the certificate (window
    embeddings require both blocks at full row rank, slightly more than the
    bare sum).  ``witness`` carries the certifying tripartition when one was
    searched for.  When a heuristic (non-exhaustive) search fails to certify,
    ``exhaustive`` is False and :attr:`status` reports ``"unknown"`` rather
    than ``"not-certified"``.
    """

    holds: bool
    kruskal_ranks: tuple[int, int, int]
    threshold: int
    mode: str  # "exact-matrix" or "generic-dimension"
    witness: Tripartition | None = None
    exhaustive: bool = True

    @property
    def status(self) -> str:
        if self.holds:
            return "certified"
        return "not-certified" if self.exhaustive else "unknown"


# ---------------------------------------------------------------------------
# operations


def joint_distribution(model: LatentClassModel, entry_cap: int = ENTRY_CAP) -> np.ndarray:
    """Exact joint distribution of the p observed variables.

    Entry ``(l_1, ..., l_p)`` is ``sum_i pi[i] * prod_j emissions[j][i, l_j]``.
    Raises :class:`TooLargeError` when the dense table would exceed
    ``entry_cap`` entries.
    """
    K = int(np.prod(model.kappas))
    if K > entry_cap:
        raise TooLargeError(f"joint table has {K} entries, cap is {entry_cap}")
    flat = model.pi @ khatri_rao(list(model.emissions))
    return flat.reshape(model.kappas)


def kruskal_certificate(model: LatentClassModel, tol: float = RANK_TOL) -> Certificate:
    """Exact-matrix certificate for a three-variable model.

    Computes the Kruskal rank of each conditional matrix; the parameters are
    identifiable up to label swapping when the ranks sum to at least
    ``2r + 2``.
    """
    if model.p != 3:
        raise NotThreeVariablesError(f"model has p={model.p} variables, need exactly 3")
    ranks = tuple(kruskal_rank(M, tol) for M in model.emissions)
    threshold = 2 * model.r + 2
    return Certificate(
        holds=sum(ranks) >= threshold,
        kruskal_ranks=ranks,  # type: ignore[arg-type]
        threshold=threshold,
        mode="exact-matrix",
    )


def _partitions_into_three(p: int):
    """Set partitions of range(p) into exactly three nonempty blocks.

    Enumerated via restricted-growth assignment strings, so each partition
    appears once, in a deterministic lexicographic order.
    """
    for assign in itertools.product(range(3), repeat=p - 1):
        labels = (0,) + assign
        if max(labels) != 2:
            continue
        # restricted growth: a label may exceed previous labels by at most 1
        seen = 0
        ok = True
        for a in labels:
            if a > seen:
                if a != seen + 1:
                    ok = False
                    break
                seen = a
        if not ok:
            continue
        blocks: list[list[int]] = [[], [], []]
        for j, a in enumerate(labels):
            blocks[a].append(j)
        yield blocks


def _balanced_heuristic(r: int, kappas: Sequence[int]) -> list[list[int]]:
    """Greedy tripartition: assign high-arity variables to the smallest block.

    Variables are visited in decreasing state count (ties by index); each goes
    to the block whose current product is smallest, which tends to push all
    three clumped dimensions past r as soon as p allows.
    """
    order = sorted(range(len(kappas)), key=lambda j: (-kappas[j], j))
    blocks: list[list[int]] = [[], [], []]
    products = [1, 1, 1]
    for j in order:
        i = int(np.argmin(products))
        blocks[i].append(j)
        products[i] *= kappas[j]
    return [sorted(b) for b in blocks]


def tripartition_search(
    r: int,
    kappas: Sequence[int],
    exhaustive_limit: int = EXHAUSTIVE_PARTITION_LIMIT,
) -> Certificate:
    """Search tripartitions for a generic-dimension certificate.

    Each candidate partition scores ``sum_i min(r, prod of block state
    counts)``; the certificate holds when some partition reaches ``2r + 2``.
    For ``p <= exhaustive_limit`` all partitions are enumerated and the first
    maximizer wins ties; beyond that a balanced-product heuristic is used and
    a failure to certify is reported as status ``"unknown"``.
    """
    kappas = [int(k) for k in kappas]
    p = len(kappas)
    if p < 3:
        raise TooFewVariablesError(f"need at least 3 variables, got p={p}")
    if r < 1:
        raise ValueError("r must be at least 1")
    threshold = 2 * r + 2

    exhaustive = p <= exhaustive_limit
    if exhaustive:
        best_blocks = None
        best_score = -1
        for blocks in _partitions_into_three(p):
            score = sum(
                min(r, int(np.prod([kappas[j] for j in b]))) for b in blocks
            )
            if score > best_score:
                best_score = score
                best_blocks = blocks
                if best_score == 3 * r:
                    break  # cannot be beaten
    else:
        best_blocks = _balanced_heuristic(r, kappas)

    witness = Tripartition.from_blocks(best_blocks, kappas)
    ranks = tuple(min(r, d) for d in witness.clumped_dims)
    return Certificate(
        holds=sum(ranks) >= threshold,
        kruskal_ranks=ranks,  # type: ignore[arg-type]
        threshold=threshold,
        mode="generic-dimension",
        witness=witness,
        exhaustive=exhaustive,
    )


def min_variables_bound(r: int, kappa: int) -> int:
    """Number of kappa-state variables sufficient for generic identifiability.

    Returns ``2 * ceil(log_kappa(r)) + 1``: two blocks large enough for full
    generic rank plus one leftover variable.
    """
    if r < 1 or kappa < 2:
        raise ValueError("need r >= 1 and kappa >= 2")
    k = 0
    while kappa**k < r:
        k += 1
    return 2 * k + 1


def param_dimension(r: int, kappas: Sequence[int]) -> tuple[int, int]:
    """Parameter count L and table size K of the model.

    ``L = (r - 1) + r * sum(kappa_j - 1)`` free parameters against a joint
    table of ``K = prod(kappa_j)`` entries.  ``L < K`` is necessary for
    identifiability.
    """
    kappas = [int(k) for k in kappas]
    if r < 1 or any(k < 2 for k in kappas):
        raise ValueError("need r >= 1 and every kappa >= 2")
    L = (r - 1) + r * sum(k - 1 for k in kappas)
    K = int(np.prod(kappas))
    return L, K
