"""Random model generators for simulation harnesses and tests.

All samplers draw independent uniform parameters and renormalize rows.  Trial
seeds derive from a master seed through a counter-based split,
``SeedSequence([master_seed, trial_index])``, so per-trial results are
reproducible and independent of execution order.
"""

from __future__ import annotations

import numpy as np

from .hmm import HiddenMarkovModel, stationary_distribution
from .latent_class import LatentClassModel
from .nonparametric import CdfComponent, NonparametricMixture
from .random_graph import GraphMixtureModel
from .errors import NonUniqueStationaryError


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Deterministic per-trial generator from a master seed and trial counter."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(trial)]))


def random_stochastic(rng, rows: int, cols: int) -> np.ndarray:
    M = rng.uniform(0.0, 1.0, size=(rows, cols))
    return M / M.sum(axis=1, keepdims=True)


def random_probability(rng, n: int) -> np.ndarray:
    v = rng.uniform(0.05, 1.0, size=n)
    return v / v.sum()


def random_latent_class(rng, r: int, kappas) -> LatentClassModel:
    rng = rng_from(rng)
    return LatentClassModel(
        pi=random_probability(rng, r),
        emissions=tuple(random_stochastic(rng, r, int(k)) for k in kappas),
    )


def random_hmm(
    rng, r: int, kappa: int, margin: float = 0.05, max_attempts: int = 200
) -> HiddenMarkovModel:
    """Random HMM with a numerically simple unit eigenvalue (generic case).

    Draws with a smallest singular value of A or B below ``margin`` are
    rejected: identifiability is a generic (measure-zero exception) property,
    and samples next to the degenerate set are identifiable in theory but
    carry no recoverable precision in floating point.
    """
    rng = rng_from(rng)
    for _ in range(max_attempts):
        A = random_stochastic(rng, r, r)
        B = random_stochastic(rng, r, kappa)
        if min(np.linalg.svd(A, compute_uv=False)) < margin:
            continue
        if min(np.linalg.svd(B, compute_uv=False)) < margin:
            continue
        try:
            stationary_distribution(A)
        except NonUniqueStationaryError:
            continue
        return HiddenMarkovModel(A=A, B=B)
    raise NonUniqueStationaryError(
        f"no well-conditioned irreducible transition matrix in {max_attempts} draws"
    )


def random_graph_mixture(
    rng, equal_mixing: bool = False, min_gap: float = 0.05, max_attempts: int = 100
) -> GraphMixtureModel:
    """Two-state graph mixture with pairwise well-separated connection values."""
    rng = rng_from(rng)
    if equal_mixing:
        pi = np.array([0.5, 0.5])
    else:
        p1 = rng.uniform(0.15, 0.45)
        pi = np.array([p1, 1.0 - p1])
    for _ in range(max_attempts):
        vals = np.sort(rng.uniform(0.0, 1.0, size=3))
        if np.diff(vals).min() >= min_gap:
            p11, p12, p22 = vals
            P = np.array([[p11, p12], [p12, p22]])
            return GraphMixtureModel(pi=pi, P=P)
    raise ValueError(f"no well-separated connection triple found in {max_attempts} draws")


def random_piecewise_cdf(rng, n_knots: int = 5, lo: float = 0.0, hi: float = 1.0) -> CdfComponent:
    """Random strictly increasing piecewise-linear CDF on [lo, hi]."""
    rng = rng_from(rng)
    inner = np.sort(rng.uniform(lo, hi, size=max(n_knots - 2, 0)))
    knots = np.unique(np.concatenate([[lo], inner, [hi]]))
    steps = rng.uniform(0.2, 1.0, size=knots.size - 1)
    values = np.concatenate([[0.0], np.cumsum(steps)])
    values /= values[-1]
    return CdfComponent(knots, values)


def random_nonparametric_mixture(
    rng, r: int, p: int, block_dims=None, n_knots: int = 5
) -> NonparametricMixture:
    """Random mixture of piecewise-linear product components.

    Per-variate families are generically linearly independent; blocks of
    dimension b > 1 are products of independent random marginals.
    """
    rng = rng_from(rng)
    if block_dims is None:
        block_dims = [1] * p
    rows = []
    for _ in range(r):
        row = []
        for b in block_dims:
            if b == 1:
                row.append(random_piecewise_cdf(rng, n_knots))
            else:
                row.append(
                    CdfComponent.from_product(
                        [random_piecewise_cdf(rng, n_knots) for _ in range(b)]
                    )
                )
        rows.append(tuple(row))
    return NonparametricMixture(pi=random_probability(rng, r), components=tuple(rows))
