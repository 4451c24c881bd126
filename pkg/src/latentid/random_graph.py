"""Random graph mixtures: conditional subgraph matrices and parameter extraction.

Each node independently takes a hidden state with law ``pi``; conditional on
all node states, edges appear independently, edge ``(u, v)`` with probability
``P[state_u, state_v]``.  Certificates work on the single-group matrix of
subgraph probabilities and lift to many nodes through the Kronecker rank
identity; the huge lifted matrices are never materialized, and extraction
reads single-edge marginals through a lazy row oracle instead.

Index conventions (fixed, used by the serialization and the oracle tests):

* node state assignments are mixed radix with the first node as the slowest
  digit, matching the iterated Kronecker product of ``pi`` with itself;
* edges of the complete graph on m nodes are ordered lexicographically,
  ``(0,1), (0,2), ..., (0,m-1), (1,2), ...``;
* a subgraph's column index is the bitmask whose least significant bit is
  edge ``(0,1)``, so the first edge varies fastest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadEdgeError,
    DimensionMismatchError,
    InconsistentOracleError,
    NotDistinctError,
    TooLargeError,
)
from .latent_class import Certificate, ENTRY_CAP
from .tensor_core import RANK_TOL, check_probability_vector, khatri_rao, numerical_rank

#: relative tolerance for locating prior entries such as pi1^(n-1) * pi2
PRIOR_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class GraphMixtureModel:
    """Node-state prior and symmetric connection probability matrix."""

    pi: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        pi = check_probability_vector(self.pi)
        P = np.asarray(self.P, dtype=float)
        r = pi.size
        if P.shape != (r, r):
            raise DimensionMismatchError(f"P must be {r}x{r}, got {P.shape}")
        if not np.allclose(P, P.T, atol=1e-12):
            raise ValueError("connection matrix P must be symmetric")
        if P.min() < 0.0 or P.max() > 1.0:
            raise ValueError("connection probabilities must lie in [0, 1]")
        pi.flags.writeable = False
        P.flags.writeable = False
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "P", P)

    @property
    def r(self) -> int:
        return self.pi.size

    @property
    def Q(self) -> np.ndarray:
        """Non-connection probabilities ``1 - P``."""
        return 1.0 - self.P


def edge_list(m: int) -> list[tuple[int, int]]:
    """Edges of the complete graph on m nodes, lexicographic order."""
    return [(k, l) for k in range(m) for l in range(k + 1, m)]


def node_state_prior(pi, n: int, entry_cap: int = ENTRY_CAP) -> np.ndarray:
    """Joint prior over the r^n composite node-state assignments.

    Entry for assignment ``(i_1, ..., i_n)`` is ``prod_k pi[i_k]``; the
    extreme entries are ``min(pi)^n`` and ``max(pi)^n``.
    """
    pi = check_probability_vector(pi)
    r = pi.size
    if r**n > entry_cap:
        raise TooLargeError(f"r^n = {r ** n} exceeds the entry cap {entry_cap}")
    v = pi.copy()
    for _ in range(n - 1):
        v = np.kron(v, pi)
    return v


def assignment_of_index(index: int, r: int, n: int) -> tuple[int, ...]:
    """Node states for a composite row index (first node = slowest digit)."""
    states = []
    for k in range(n):
        states.append((index // r ** (n - 1 - k)) % r)
    return tuple(states)


def conditional_graph_matrix(
    model: GraphMixtureModel, m: int, entry_cap: int = ENTRY_CAP
) -> np.ndarray:
    """Probabilities of every subgraph of K_m conditional on every node assignment.

    Shape ``(r^m, 2^C(m,2))``; the ``(I, G)`` entry is the product over edges
    of ``P`` or ``1 - P`` according to the edge's presence in ``G``.  Rows sum
    to 1.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    r = model.r
    edges = edge_list(m)
    n_rows = r**m
    n_cols = 2 ** len(edges)
    if n_rows * n_cols > entry_cap:
        raise TooLargeError(
            f"matrix would have {n_rows}x{n_cols} entries, cap is {entry_cap}"
        )
    assigns = np.array(list(itertools.product(range(r), repeat=m)), dtype=int)
    per_edge = []
    for k, l in edges:
        p = model.P[assigns[:, k], assigns[:, l]]
        per_edge.append(np.column_stack([1.0 - p, p]))
    # first edge is the least significant bit, i.e. the fastest digit
    return khatri_rao(list(reversed(per_edge)))


@dataclass(frozen=True)
class PartitionFamily:
    """Three partitions of the m^2 grid nodes into m groups of m.

    Any two groups from different partitions share at most one node, so the
    unions of within-group complete graphs are pairwise edge disjoint.
    """

    m: int
    families: tuple[tuple[frozenset[int], ...], ...]

    def edges(self, i: int) -> frozenset[tuple[int, int]]:
        """Edge set of the union of complete graphs on partition ``i``'s groups."""
        out = set()
        for group in self.families[i]:
            nodes = sorted(group)
            for a in range(len(nodes)):
                for b in range(a + 1, len(nodes)):
                    out.add((nodes[a], nodes[b]))
        return frozenset(out)

    def pairwise_edge_disjoint(self) -> bool:
        sets = [self.edges(i) for i in range(3)]
        return all(
            not (sets[i] & sets[j]) for i in range(3) for j in range(i + 1, 3)
        )


def lattice_partitions(m: int) -> PartitionFamily:
    """Rows, columns and broken diagonals of the m x m node grid.

    Node ``(a, b)`` has flat index ``a * m + b``.  Group j of the third family
    is ``{(a, (a + j) mod m)}``, a diagonal; a row meets a column or a
    diagonal in exactly one node, and likewise column vs diagonal.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    rows = tuple(
        frozenset(a * m + b for b in range(m)) for a in range(m)
    )
    cols = tuple(
        frozenset(a * m + b for a in range(m)) for b in range(m)
    )
    diags = tuple(
        frozenset(a * m + (a + j) % m for a in range(m)) for j in range(m)
    )
    return PartitionFamily(m=m, families=(rows, cols, diags))


def graph_certificate(
    model: GraphMixtureModel, m: int, tol: float = RANK_TOL
) -> Certificate:
    """Identifiability certificate for the n = m^2 node model.

    Holds when (a) the lattice partitions give pairwise edge-disjoint
    subgraphs, and (b) the single-group matrix has full row rank ``r^m``.  The
    composite conditional matrix of each subgraph is the m-fold Kronecker
    power of the single-group matrix, so its rank is ``rank(A)^m`` without
    materializing anything; the reported ranks are these Kronecker-derived
    values (equal to ``r^n`` and to the Kruskal rank exactly when full).
    """
    partitions = lattice_partitions(m)
    disjoint = partitions.pairwise_edge_disjoint()
    A = conditional_graph_matrix(model, m)
    rank_A = numerical_rank(A, tol)
    r = model.r
    n = m * m
    lifted = rank_A**m
    full = r**n
    return Certificate(
        holds=disjoint and rank_A == r**m,
        kruskal_ranks=(lifted, lifted, lifted),
        threshold=2 * full + 2,
        mode="exact-matrix",
    )


def single_edge_marginal(model: GraphMixtureModel, states, edge: tuple[int, int]) -> float:
    """Probability that one fixed edge is present, given all node states.

    Equals the corresponding connection parameter directly; this is the lazy
    marginal of one row of the huge composite matrix, summing over all
    subgraphs that contain the edge without materializing them.
    """
    states = tuple(int(s) for s in states)
    k, l = int(edge[0]), int(edge[1])
    n = len(states)
    if k == l or not (0 <= k < n) or not (0 <= l < n):
        raise BadEdgeError(f"edge {edge} must join two distinct nodes in range({n})")
    if any(not (0 <= s < model.r) for s in states):
        raise ValueError(f"states must lie in range({model.r})")
    return float(model.P[states[k], states[l]])


def _cluster_values(values, tol: float) -> list[float]:
    """Representatives of value clusters separated by more than tol."""
    ordered = sorted(values)
    reps = [ordered[0]]
    for v in ordered[1:]:
        if v - reps[-1] > tol:
            reps.append(v)
    return reps


def extract_parameters(
    v_perm,
    row_oracle,
    n: int,
    r: int = 2,
    tol: float = PRIOR_MATCH_TOL,
) -> tuple[np.ndarray, float, float, float]:
    """Recover (pi, p11, p12, p22) from a permuted prior and a row oracle.

    ``v_perm`` is the composite node-state prior under an unknown assignment
    permutation; ``row_oracle(row_index, (k, l))`` returns the single-edge
    marginal of that (permuted) row.  Two-state models only, and the three
    connection parameters must be distinct.

    With unequal mixing the extreme prior entries locate the two uniform
    assignments, giving ``p11`` and ``p22`` directly, and a row with exactly
    one deviant node isolates ``p12``.  With equal mixing every prior entry
    ties, so all rows are marginalized to single-edge values: exactly two rows
    are constant (the uniform ones) and the value missing from them is
    ``p12``.  Output is exact up to label swapping; class 0 is the state with
    the smaller weight (unequal mixing) or the smaller within-state connection
    probability (equal mixing).
    """
    if r != 2:
        raise ValueError("extraction is implemented for two node states only")
    v = np.asarray(v_perm, dtype=float)
    if v.ndim != 1 or v.size != 2**n:
        raise DimensionMismatchError(f"prior must have 2^{n} entries, got {v.size}")
    if v.min() <= 0.0:
        raise ValueError("prior entries must be positive")
    edges = edge_list(n)
    vmin, vmax = float(v.min()), float(v.max())

    if vmax - vmin > tol * vmax:
        pi1 = vmin ** (1.0 / n)
        pi2 = vmax ** (1.0 / n)
        if abs(pi1 + pi2 - 1.0) > 1e-6:
            raise InconsistentOracleError(
                f"extreme prior entries give weights summing to {pi1 + pi2:.9f}"
            )
        low = np.flatnonzero(np.abs(v - vmin) <= tol * vmax)
        high = np.flatnonzero(np.abs(v - vmax) <= tol * vmax)
        if low.size != 1 or high.size != 1:
            raise InconsistentOracleError("extreme prior entries are not unique")
        row_all1, row_all2 = int(low[0]), int(high[0])
        p11 = float(row_oracle(row_all1, edges[0]))
        p22 = float(row_oracle(row_all2, edges[0]))
        for probe in (edges[-1],):
            if abs(float(row_oracle(row_all1, probe)) - p11) > tol:
                raise InconsistentOracleError("uniform row gave conflicting edge values")
            if abs(float(row_oracle(row_all2, probe)) - p22) > tol:
                raise InconsistentOracleError("uniform row gave conflicting edge values")
        target = pi1 ** (n - 1) * pi2
        deviant_rows = np.flatnonzero(np.abs(v - target) <= tol * target)
        if deviant_rows.size == 0:
            raise InconsistentOracleError(
                "no prior entry matches a single-deviant assignment"
            )
        row_dev = int(deviant_rows[0])
        p12 = None
        for e in edges:
            val = float(row_oracle(row_dev, e))
            if abs(val - p11) > tol:
                p12 = val
                break
        if p12 is None:
            raise NotDistinctError(
                "single-deviant row shows only one edge value; p12 equals p11"
            )
        pi = np.array([pi1, pi2])
    else:
        pi = np.full(2, 0.5)
        per_row = [
            [float(row_oracle(row, e)) for e in edges] for row in range(v.size)
        ]
        observed = _cluster_values(
            [val for vals in per_row for val in vals], tol
        )
        if len(observed) < 3:
            raise NotDistinctError(
                f"only {len(observed)} distinct edge values observed, need 3"
            )
        if len(observed) > 3:
            raise InconsistentOracleError(
                f"{len(observed)} distinct edge values observed, expected 3"
            )
        uniform = [
            row
            for row, vals in enumerate(per_row)
            if max(vals) - min(vals) <= tol
        ]
        if len(uniform) != 2:
            raise InconsistentOracleError(
                f"expected exactly 2 constant rows, found {len(uniform)}"
            )
        u_vals = sorted(per_row[row][0] for row in uniform)
        p11, p22 = float(u_vals[0]), float(u_vals[1])
        leftovers = [
            val
            for val in observed
            if abs(val - p11) > tol and abs(val - p22) > tol
        ]
        if len(leftovers) != 1:
            raise InconsistentOracleError("could not isolate the cross connection value")
        p12 = float(leftovers[0])

    values = (p11, p12, p22)
    for a, b in itertools.combinations(values, 2):
        if abs(a - b) <= tol:
            raise NotDistinctError(
                f"connection parameters {values} are not pairwise distinct"
            )
    return pi, p11, p12, p22
