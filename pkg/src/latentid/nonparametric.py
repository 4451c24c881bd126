"""Nonparametric product mixtures: cut points, binning and CDF recovery.

Components are piecewise-(multi)linear CDF tables over rectangular knot
grids, evaluated exactly between knots and clamped outside them.  Cut points
discretize each variate into bins whose conditional matrix has full row rank,
which turns the continuous mixture into an exactly solvable finite one; CDF
values at arbitrary query points are read back through the cumulative
transform after inserting the queries among the cuts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import (
    AmbiguousChainingError,
    DimensionMismatchError,
    GridExhaustedError,
    NonMonotoneCdfError,
    TooFewVariablesError,
)
from .recovery import decompose3
from .tensor_core import (
    NEG_ENTRY_TOL,
    RANK_TOL,
    check_probability_vector,
    numerical_rank,
    triple_product,
)

#: default threshold for a candidate cut to count as breaking a null vector
CUT_TOL = 1e-9
#: max-abs row distance for matching class labels across recovery runs
CHAIN_TOL = 1e-7


class CdfComponent:
    """Piecewise-multilinear CDF table on a rectangular knot grid.

    ``knots`` is a strictly increasing 1-D array (one real variate) or a
    sequence of such arrays (a block of several coordinates); ``values`` holds
    the CDF at every grid point.  Evaluation interpolates multilinearly
    between knots and clamps outside them, so the table must carry its limits:
    every slice at a minimal knot is 0 and the top corner is 1.
    """

    def __init__(self, knots, values):
        if np.ndim(knots[0]) == 0:
            knot_arrays = (np.asarray(knots, dtype=float),)
        else:
            knot_arrays = tuple(np.asarray(k, dtype=float) for k in knots)
        values = np.asarray(values, dtype=float)
        if values.ndim != len(knot_arrays):
            raise DimensionMismatchError(
                f"values has {values.ndim} axes for {len(knot_arrays)} knot arrays"
            )
        for c, kn in enumerate(knot_arrays):
            if kn.ndim != 1 or kn.size < 2:
                raise DimensionMismatchError(
                    f"knot array {c} must be 1-D with at least 2 entries"
                )
            if not np.all(np.isfinite(kn)) or np.any(np.diff(kn) <= 0):
                raise ValueError(f"knot array {c} must be finite and strictly increasing")
            if values.shape[c] != kn.size:
                raise DimensionMismatchError(
                    f"values axis {c} has length {values.shape[c]}, "
                    f"expected {kn.size}"
                )
        if not np.all(np.isfinite(values)):
            raise ValueError("CDF values must be finite")
        if values.min() < -1e-9 or values.max() > 1.0 + 1e-9:
            raise ValueError("CDF values must lie in [0, 1]")
        for c in range(values.ndim):
            if np.diff(values, axis=c).min() < -1e-12:
                raise NonMonotoneCdfError(
                    f"CDF table decreases along coordinate {c}"
                )
            floor = np.moveaxis(values, c, 0)[0]
            if np.abs(floor).max() > 1e-9:
                raise ValueError(
                    f"slice at the first knot of coordinate {c} must be 0 "
                    "(the table clamps to its endpoints)"
                )
        if abs(values.flat[-1] - 1.0) > 1e-9:
            raise ValueError("top corner of the CDF table must be 1")
        self.knots = knot_arrays
        self.values = values
        self.values.flags.writeable = False

    @property
    def block_dim(self) -> int:
        return len(self.knots)

    def evaluate_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """CDF on the product grid of the requested per-coordinate values.

        Coordinates are clamped to the knot range, so ``-inf`` and ``+inf``
        give the 0 and 1 limits.
        """
        if len(axes) != self.block_dim:
            raise DimensionMismatchError(
                f"need {self.block_dim} coordinate arrays, got {len(axes)}"
            )
        V = self.values
        for c, req in enumerate(axes):
            kn = self.knots[c]
            x = np.clip(np.asarray(req, dtype=float), kn[0], kn[-1])
            idx = np.clip(np.searchsorted(kn, x, side="right") - 1, 0, kn.size - 2)
            t = (x - kn[idx]) / (kn[idx + 1] - kn[idx])
            Vc = np.moveaxis(V, c, 0)
            shape = (-1,) + (1,) * (Vc.ndim - 1)
            blend = Vc[idx] * (1.0 - t).reshape(shape) + Vc[idx + 1] * t.reshape(shape)
            V = np.moveaxis(blend, 0, c)
        return V

    def __call__(self, point) -> float:
        if self.block_dim == 1 and np.ndim(point) == 0:
            point = (point,)
        if len(point) != self.block_dim:
            raise DimensionMismatchError(
                f"point has {len(point)} coordinates, expected {self.block_dim}"
            )
        return float(self.evaluate_grid([np.array([x]) for x in point]).ravel()[0])

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "CdfComponent":
        """CDF of the uniform distribution on [lo, hi]."""
        return cls([lo, hi], [0.0, 1.0])

    @classmethod
    def from_product(cls, parts: Sequence["CdfComponent"]) -> "CdfComponent":
        """Joint CDF of independent one-dimensional components.

        The product of piecewise-linear marginals is piecewise-multilinear on
        the product grid, so the table is exact.
        """
        if any(part.block_dim != 1 for part in parts):
            raise DimensionMismatchError("from_product expects one-dimensional parts")
        knots = tuple(part.knots[0] for part in parts)
        values = parts[0].values
        for part in parts[1:]:
            values = np.multiply.outer(values, part.values)
        return cls(knots, values)


@dataclass(frozen=True)
class NonparametricMixture:
    """Mixing weights and an r x p grid of CDF components.

    ``components[i][j]`` is the CDF of variate j under class i; all classes
    must agree on each variate's block dimension.
    """

    pi: np.ndarray
    components: tuple[tuple[CdfComponent, ...], ...]

    def __post_init__(self):
        pi = check_probability_vector(self.pi)
        comps = tuple(tuple(row) for row in self.components)
        if len(comps) != pi.size:
            raise DimensionMismatchError(
                f"{len(comps)} component rows for {pi.size} classes"
            )
        p = len(comps[0])
        if p < 1 or any(len(row) != p for row in comps):
            raise DimensionMismatchError("all classes must have the same variates")
        for j in range(p):
            dims = {row[j].block_dim for row in comps}
            if len(dims) != 1:
                raise DimensionMismatchError(
                    f"variate {j} has inconsistent block dimensions {dims}"
                )
        pi.flags.writeable = False
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "components", comps)

    @property
    def r(self) -> int:
        return self.pi.size

    @property
    def p(self) -> int:
        return len(self.components[0])

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(c.block_dim for c in self.components[0])

    def variate(self, j: int) -> list[CdfComponent]:
        """The r components of variate j."""
        return [row[j] for row in self.components]


@dataclass(frozen=True)
class CutPointSet:
    """Sorted cut points per coordinate, defining a binning into intervals.

    A coordinate with c cuts has c + 1 bins; :attr:`kappa` is the total bin
    count over the block.  Mandatory points (queries that must be readable
    from the binned matrix) are recorded as given.
    """

    cuts: tuple[np.ndarray, ...]
    mandatory: tuple = ()

    def __post_init__(self):
        arrays = tuple(np.asarray(c, dtype=float) for c in self.cuts)
        for c, arr in enumerate(arrays):
            if arr.ndim != 1 or arr.size == 0:
                raise DimensionMismatchError(f"cut array {c} must be nonempty 1-D")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"cut array {c} must be strictly increasing")
            arr.flags.writeable = False
        object.__setattr__(self, "cuts", arrays)

    @property
    def block_dim(self) -> int:
        return len(self.cuts)

    @property
    def bins_per_axis(self) -> tuple[int, ...]:
        return tuple(c.size + 1 for c in self.cuts)

    @property
    def kappa(self) -> int:
        return int(np.prod(self.bins_per_axis))


@dataclass
class CutPointSearchState:
    """Greedy search state: current value matrix, null vector, candidate pool."""

    matrix: np.ndarray
    null_vector: np.ndarray | None
    pool: list


def _as_cut_arrays(cuts) -> tuple[np.ndarray, ...]:
    if isinstance(cuts, CutPointSet):
        return cuts.cuts
    if np.ndim(cuts[0]) == 0:
        return (np.asarray(cuts, dtype=float),)
    return tuple(np.asarray(c, dtype=float) for c in cuts)


def _normalize_points(points, b: int) -> list[tuple[float, ...]]:
    if points is None:
        return []
    if b == 1 and np.ndim(points) == 0:
        return [(float(points),)]
    if b > 1 and len(points) == b and np.ndim(points[0]) == 0:
        return [tuple(float(x) for x in points)]
    out = []
    for pt in points:
        if b == 1 and np.ndim(pt) == 0:
            out.append((float(pt),))
        else:
            if len(pt) != b:
                raise DimensionMismatchError(
                    f"point {pt} has {len(pt)} coordinates, expected {b}"
                )
            out.append(tuple(float(x) for x in pt))
    return out


def default_grid(components: Sequence[CdfComponent]) -> list[np.ndarray]:
    """Per-coordinate candidate values: pooled knots plus their midpoints."""
    b = components[0].block_dim
    out = []
    for c in range(b):
        pool = np.unique(np.concatenate([comp.knots[c] for comp in components]))
        mids = (pool[:-1] + pool[1:]) / 2.0
        out.append(np.unique(np.concatenate([pool, mids])))
    return out


def _value_matrix(components, cut_lists) -> np.ndarray:
    """Rows of component CDF values on the product of cuts and +inf per axis."""
    axes = [
        np.concatenate([np.asarray(c, dtype=float), [np.inf]]) for c in cut_lists
    ]
    return np.vstack([comp.evaluate_grid(axes).ravel() for comp in components])


def select_cut_points(
    components: Sequence[CdfComponent],
    mandatory=None,
    grid: Sequence | None = None,
    tol: float = CUT_TOL,
) -> CutPointSet:
    """Choose cut points making the binned conditional matrix full row rank.

    Greedy loop: while the matrix of CDF values at the current cuts (plus the
    constant column from +inf) has a nontrivial left nullspace, pick a null
    vector ``alpha`` and append the first grid candidate ``u`` with
    ``|sum_i alpha_i F_i(u)| > tol``.  Terminates with numerical rank
    ``len(components)``; mandatory points are inserted first and never
    removed.  Candidates already among the cuts break no null vector and are
    skipped naturally.

    Raises :class:`GridExhaustedError` when no candidate makes progress,
    meaning the family is linearly dependent over the grid's span (or the
    grid is too coarse).
    """
    components = list(components)
    if not components:
        raise DimensionMismatchError("need at least one component")
    b = components[0].block_dim
    if any(c.block_dim != b for c in components):
        raise DimensionMismatchError("components must share the block dimension")
    r = len(components)

    if grid is None:
        grid_axes = default_grid(components)
    elif b == 1 and np.ndim(grid[0]) == 0:
        grid_axes = [np.asarray(grid, dtype=float)]
    else:
        grid_axes = [np.asarray(g, dtype=float) for g in grid]
    if len(grid_axes) != b or any(g.size == 0 for g in grid_axes):
        raise DimensionMismatchError("grid must supply candidates for every coordinate")
    candidates = list(itertools.product(*[g.tolist() for g in grid_axes]))

    cut_lists: list[list[float]] = [[] for _ in range(b)]

    def add_point(pt):
        for c, x in enumerate(pt):
            if x not in cut_lists[c]:
                cut_lists[c].append(x)
                cut_lists[c].sort()

    mandatory_points = _normalize_points(mandatory, b)
    for pt in mandatory_points:
        add_point(pt)

    state = CutPointSearchState(
        matrix=_value_matrix(components, cut_lists),
        null_vector=None,
        pool=candidates,
    )
    for _ in range(r + 1):
        A = state.matrix
        U, S, _ = np.linalg.svd(A)
        rank = 0 if S[0] == 0.0 else int(np.sum(S > RANK_TOL * S[0] * max(A.shape)))
        if rank == r:
            break
        state.null_vector = U[:, -1]
        found = False
        for cand in state.pool:
            s = sum(
                a * comp(cand) for a, comp in zip(state.null_vector, components)
            )
            if abs(s) > tol:
                add_point(cand)
                found = True
                break
        if not found:
            raise GridExhaustedError(
                "no grid candidate reduces the nullspace: the component family "
                "is linearly dependent over the grid's span"
            )
        state.matrix = _value_matrix(components, cut_lists)
    else:
        raise GridExhaustedError("cut selection failed to reach full rank")

    for c in range(b):
        if not cut_lists[c]:
            cut_lists[c].append(float(grid_axes[c][0]))

    mandatory_out = (
        tuple(pt[0] for pt in mandatory_points)
        if b == 1
        else tuple(mandatory_points)
    )
    return CutPointSet(
        cuts=tuple(np.asarray(c, dtype=float) for c in cut_lists),
        mandatory=mandatory_out,
    )


def binned_conditional_matrix(
    components: Sequence[CdfComponent], cuts
) -> np.ndarray:
    """Bin masses of each component over the product intervals of the cuts.

    Row i holds the probability of each bin under component i, ordered with
    the last coordinate's bin index varying fastest; rows sum to 1 by
    telescoping.  The cumulative column transform (running sums along each
    coordinate) recovers the CDF values at the cuts exactly.
    """
    cut_arrays = _as_cut_arrays(cuts)
    components = list(components)
    if any(c.block_dim != len(cut_arrays) for c in components):
        raise DimensionMismatchError(
            "components and cuts disagree on the block dimension"
        )
    axes = [
        np.concatenate([[-np.inf], c, [np.inf]]) for c in cut_arrays
    ]
    rows = []
    for i, comp in enumerate(components):
        E = comp.evaluate_grid(axes)
        mass = E
        for axis in range(len(cut_arrays)):
            mass = np.diff(mass, axis=axis)
        if mass.min() < -NEG_ENTRY_TOL:
            raise NonMonotoneCdfError(
                f"component {i} produced bin mass {mass.min():.3g}"
            )
        rows.append(np.maximum(mass, 0.0).ravel())
    return np.vstack(rows)


def binned_tensor3(
    mixture: NonparametricMixture,
    variates: tuple[int, int, int],
    cut_sets: Sequence,
) -> np.ndarray:
    """Exact joint probability tensor of three binned variates.

    Entry ``(a, b, c)`` is the probability that the three variates fall in
    their respective bins; this is everything an observer of the mixture can
    know about the chosen binning.
    """
    mats = [
        binned_conditional_matrix(mixture.variate(j), cuts)
        for j, cuts in zip(variates, cut_sets)
    ]
    return triple_product(mixture.pi[:, None] * mats[0], mats[1], mats[2])


def bivariate_rank(
    mixture: NonparametricMixture,
    j1: int,
    j2: int,
    cuts1,
    cuts2,
    tol: float = RANK_TOL,
) -> int:
    """Rank of the binned bivariate distribution of variates j1 and j2.

    Builds ``N = M1^T diag(pi) M2`` from the two binned conditional matrices.
    Rank r certifies that both per-variate component families are linearly
    independent as seen through these bins; rank 1 means the pair is an exact
    product measure.
    """
    M1 = binned_conditional_matrix(mixture.variate(j1), cuts1)
    M2 = binned_conditional_matrix(mixture.variate(j2), cuts2)
    if mixture.r > min(M1.shape[1], M2.shape[1]):
        raise ValueError("need at least r bins on both variates")
    N = M1.T @ (mixture.pi[:, None] * M2)
    return numerical_rank(N, tol)


def _cut_index(cuts: np.ndarray, x: float) -> int:
    pos = int(np.searchsorted(cuts, x))
    if pos >= cuts.size or abs(cuts[pos] - x) > 1e-12:
        raise ValueError(f"query point {x} is not among the cuts")
    return pos


def _cdf_at_queries(row: np.ndarray, cuts: CutPointSet, queries) -> np.ndarray:
    """Read CDF values at query points from one row of bin masses."""
    grid = row.reshape(cuts.bins_per_axis)
    for axis in range(cuts.block_dim):
        grid = np.cumsum(grid, axis=axis)
    out = []
    for pt in queries:
        idx = tuple(
            _cut_index(cuts.cuts[c], pt[c]) for c in range(cuts.block_dim)
        )
        out.append(grid[idx])
    return np.array(out)


def _match_rows(ref_a, ref_b, new_a, new_b, tol: float) -> list[int]:
    """Unique bijection sending new rows onto reference rows, or raise."""
    r = ref_a.shape[0]
    perm: list[int] = []
    for i in range(r):
        hits = [
            c
            for c in range(r)
            if np.abs(new_a[c] - ref_a[i]).max() <= tol
            and np.abs(new_b[c] - ref_b[i]).max() <= tol
        ]
        if len(hits) != 1:
            raise AmbiguousChainingError(
                f"reference class {i} matches {len(hits)} recovered classes"
            )
        perm.append(hits[0])
    if len(set(perm)) != r:
        raise AmbiguousChainingError("row matching is not a bijection")
    return perm


def recover_mixture(
    mixture: NonparametricMixture,
    query_points: Sequence,
    grid: Sequence | None = None,
    seed=None,
    tol: float = 1e-8,
    chain_tol: float = CHAIN_TOL,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Recover mixing weights and component CDF values at query points.

    For the first three variates: cut points are selected per variate with
    every query point inserted as mandatory, the exact binned three-way tensor
    is built and decomposed, and CDF values are read off through the
    cumulative transform.  Every further variate j reruns the decomposition on
    variates (0, 1, j) and aligns class labels by matching the recovered
    variate-0 and variate-1 binned rows to the first run's within
    ``chain_tol``, so labels are consistent across all variates.

    ``query_points[j]`` lists the evaluation points for variate j (floats, or
    coordinate tuples for blocks).  Returns ``(pi, tables)`` where
    ``tables[j][i, q]`` is the recovered CDF of class i, variate j at query
    q.

    Raises :class:`AmbiguousChainingError` when two classes cannot be told
    apart through variates 0 and 1, and propagates decomposition and cut
    selection errors.
    """
    p = mixture.p
    if p < 3:
        raise TooFewVariablesError(f"need at least 3 variates, got p={p}")
    if len(query_points) != p:
        raise DimensionMismatchError(
            f"query_points must have one entry per variate ({p})"
        )
    queries = [
        _normalize_points(query_points[j], mixture.block_dims[j]) for j in range(p)
    ]
    grids = list(grid) if grid is not None else [None] * p
    cuts = [
        select_cut_points(
            mixture.variate(j), mandatory=queries[j], grid=grids[j]
        )
        for j in range(p)
    ]

    seed_seq = (
        seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    )
    children = seed_seq.spawn(max(p - 2, 1))

    T = binned_tensor3(mixture, (0, 1, 2), (cuts[0], cuts[1], cuts[2]))
    rec = decompose3(T, mixture.r, seed=np.random.default_rng(children[0]), tol=tol)
    pi_hat = rec.pi
    ref0, ref1 = rec.factors[0], rec.factors[1]
    variate_rows: dict[int, np.ndarray] = {
        0: rec.factors[0],
        1: rec.factors[1],
        2: rec.factors[2],
    }
    for idx, j in enumerate(range(3, p), start=1):
        Tj = binned_tensor3(mixture, (0, 1, j), (cuts[0], cuts[1], cuts[j]))
        rec_j = decompose3(
            Tj, mixture.r, seed=np.random.default_rng(children[idx]), tol=tol
        )
        perm = _match_rows(ref0, ref1, rec_j.factors[0], rec_j.factors[1], chain_tol)
        variate_rows[j] = rec_j.factors[2][perm]

    tables = [
        np.vstack(
            [
                _cdf_at_queries(variate_rows[j][i], cuts[j], queries[j])
                for i in range(mixture.r)
            ]
        )
        if queries[j]
        else np.zeros((mixture.r, 0))
        for j in range(p)
    ]
    return pi_hat, tables
