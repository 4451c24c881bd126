import itertools

import numpy as np
import pytest

from latentid.errors import (
    NonUniqueStationaryError,
    NotStationaryError,
    TooLargeError,
)
from latentid.hmm import (
    HiddenMarkovModel,
    align_hmm,
    conditional_blocks,
    hmm_certificate,
    min_window,
    recover_hmm,
    stationary_distribution,
    time_reversal,
    window_tensor,
)
from latentid.sampling import random_hmm, trial_rng
from latentid.tensor_core import first_primes, khatri_rao, numerical_rank, vandermonde_witness


def path_joint(model, length):
    """Joint law of (X_0, ..., X_{length-1}) by exhaustive hidden-path sums.

    Independent of the block recursion: every hidden path contributes its
    probability times the outer product of emission rows.
    """
    r, kappa = model.r, model.kappa
    T = np.zeros((kappa,) * length)
    for path in itertools.product(range(r), repeat=length):
        prob = model.pi[path[0]]
        for a, b in zip(path[:-1], path[1:]):
            prob *= model.A[a, b]
        emit = model.B[path[0]]
        for z in path[1:]:
            emit = np.multiply.outer(emit, model.B[z])
        T += prob * emit
    return T


def oracle_blocks(model, k):
    """Window blocks by path enumeration over (Z_0..Z_k) and (Z_k..Z_2k)."""
    r, kappa = model.r, model.kappa
    B1 = np.zeros((r, kappa**k))
    B2 = np.zeros((r, kappa**k))
    for center in range(r):
        # past block: paths Z_0..Z_k ending at the center state
        for path in itertools.product(range(r), repeat=k):
            full = path + (center,)
            prob = model.pi[full[0]]
            for a, b in zip(full[:-1], full[1:]):
                prob *= model.A[a, b]
            prob /= model.pi[center]
            for xs in itertools.product(range(kappa), repeat=k):
                # column digits are (x_{k-1}, ..., x_0), earliest fastest
                col = 0
                for x in xs:
                    col = col * kappa + x
                emit = 1.0
                for z, x in zip(path, reversed(xs)):
                    emit *= model.B[z, x]
                B1[center, col] += prob * emit
        # future block: paths Z_k..Z_2k starting at the center state
        for path in itertools.product(range(r), repeat=k):
            full = (center,) + path
            prob = 1.0
            for a, b in zip(full[:-1], full[1:]):
                prob *= model.A[a, b]
            for xs in itertools.product(range(kappa), repeat=k):
                col = 0
                for x in xs:
                    col = col * kappa + x
                emit = 1.0
                for z, x in zip(path, xs):
                    emit *= model.B[z, x]
                B2[center, col] += prob * emit
    return B1, B2


class TestStationary:
    def test_symmetric(self):
        pi = stationary_distribution(np.full((2, 2), 0.5))
        assert np.allclose(pi, [0.5, 0.5])

    def test_hand_solved_balance(self):
        # pi solves pi = pi A: 0.1 pi1 = 0.3 pi2 gives pi = (0.75, 0.25)
        A = np.array([[0.9, 0.1], [0.3, 0.7]])
        assert np.allclose(stationary_distribution(A), [0.75, 0.25])

    def test_identity_rejected(self):
        with pytest.raises(NonUniqueStationaryError):
            stationary_distribution(np.eye(2))

    def test_reducible_rejected(self):
        A = np.array([[1.0, 0.0], [0.5, 0.5]])
        with pytest.raises(NonUniqueStationaryError):
            stationary_distribution(A)


class TestTimeReversal:
    def test_symmetric_chain_unchanged(self):
        A = np.array([[0.2, 0.8], [0.8, 0.2]])
        pi = np.array([0.5, 0.5])
        assert np.allclose(time_reversal(A, pi), A)

    def test_reversible_example(self):
        A = np.array([[0.9, 0.1], [0.3, 0.7]])
        pi = np.array([0.75, 0.25])
        # entrywise: A'[i, j] = pi_j A[j, i] / pi_i
        expected = np.array(
            [
                [0.75 * 0.9 / 0.75, 0.25 * 0.3 / 0.75],
                [0.75 * 0.1 / 0.25, 0.25 * 0.7 / 0.25],
            ]
        )
        out = time_reversal(A, pi)
        assert np.allclose(out, expected)
        assert np.allclose(out, A)  # this chain is reversible

    def test_involution_and_stationarity(self):
        model = random_hmm(trial_rng(40, 0), 3, 2)
        A_rev = time_reversal(model.A, model.pi)
        assert np.allclose(A_rev.sum(axis=1), 1.0)
        assert np.abs(model.pi @ A_rev - model.pi).max() <= 1e-12
        assert np.abs(time_reversal(A_rev, model.pi) - model.A).max() <= 1e-12

    def test_not_stationary(self):
        A = np.array([[0.9, 0.1], [0.3, 0.7]])
        with pytest.raises(NotStationaryError):
            time_reversal(A, np.array([0.5, 0.5]))


class TestMinWindow:
    def test_binary_base_case(self):
        assert min_window(2, 2) == 1

    @pytest.mark.parametrize("r", [2, 3, 4, 5, 6])
    def test_binary_window_is_2r_minus_1(self, r):
        k = min_window(r, 2)
        assert k == r - 1
        assert 2 * k + 1 == 2 * r - 1

    def test_ternary(self):
        assert min_window(5, 3) == 2

    def test_nonincreasing_in_kappa(self):
        for r in range(2, 9):
            ks = [min_window(r, kappa) for kappa in range(2, 7)]
            assert all(a >= b for a, b in zip(ks, ks[1:]))


class TestConditionalBlocks:
    def test_k1_base_case(self):
        model = random_hmm(trial_rng(41, 0), 2, 2)
        blocks = conditional_blocks(model, 1)
        A_rev = time_reversal(model.A, model.pi)
        assert np.allclose(blocks.B1, A_rev @ model.B)
        assert np.allclose(blocks.B2, model.A @ model.B)

    def test_identity_chain_gives_khatri_rao_power(self):
        # the identity transition lies outside the model class (no unique
        # stationary law), so the recursion is exercised directly
        B = np.array([[0.8, 0.2], [0.4, 0.6]])
        pi = np.array([0.5, 0.5])
        eye = np.eye(2)
        A_rev = time_reversal(eye, pi)
        k = 3
        X1, X2 = A_rev @ B, eye @ B
        for _ in range(k - 1):
            X1 = A_rev @ khatri_rao([B, X1])
            X2 = eye @ khatri_rao([B, X2])
        power = khatri_rao([B, B, B])
        assert np.allclose(X1, power)
        assert np.allclose(X2, power)

    def test_rows_are_distributions(self):
        model = random_hmm(trial_rng(41, 1), 3, 2)
        blocks = conditional_blocks(model, 3)
        assert np.allclose(blocks.B1.sum(axis=1), 1.0)
        assert np.allclose(blocks.B2.sum(axis=1), 1.0)
        assert blocks.B1.min() >= 0.0

    def test_against_path_oracle(self):
        model = random_hmm(trial_rng(41, 2), 2, 2)
        blocks = conditional_blocks(model, 2)
        B1, B2 = oracle_blocks(model, 2)
        assert np.abs(blocks.B1 - B1).max() <= 1e-13
        assert np.abs(blocks.B2 - B2).max() <= 1e-13

    def test_entry_cap(self):
        model = random_hmm(trial_rng(41, 3), 2, 2)
        with pytest.raises(TooLargeError):
            conditional_blocks(model, 3, entry_cap=7)


class TestWindowTensor:
    def test_total_mass(self):
        model = random_hmm(trial_rng(42, 0), 2, 3)
        T = window_tensor(model, 2)
        assert abs(T.sum() - 1.0) <= 1e-12

    def test_against_path_oracle(self):
        model = random_hmm(trial_rng(42, 1), 2, 2)
        k = 1
        T = window_tensor(model, k)
        J = path_joint(model, 3)  # axes (X_0, X_1, X_2)
        oracle = J.transpose(0, 2, 1)  # (past, future, center)
        assert np.abs(T - oracle).max() <= 1e-13

    def test_marginal_is_stationary_emission_law(self):
        model = random_hmm(trial_rng(42, 2), 3, 2)
        T = window_tensor(model, 2)
        assert np.allclose(T.sum(axis=(0, 1)), model.pi @ model.B)


class TestCertificate:
    def test_generic_models_hold(self):
        for t in range(100):
            model = random_hmm(trial_rng(43, t), 2, 2)
            assert hmm_certificate(model, 1).holds

    def test_duplicate_emission_rows_fail(self):
        A = np.array([[0.9, 0.1], [0.3, 0.7]])
        B = np.array([[0.4, 0.6], [0.4, 0.6]])
        model = HiddenMarkovModel(A=A, B=B)
        cert = hmm_certificate(model, 1)
        assert not cert.holds
        assert cert.kruskal_ranks[2] == 1

    def test_window_too_short_fails(self):
        # below the bound the monomial count caps the block rank; shown on the
        # identity-chain witness with prime Vandermonde emission rows
        r, kappa = 3, 2
        assert min_window(r, kappa) == 2
        B = vandermonde_witness(r, [float(x) for x in first_primes(kappa)])
        B1 = np.eye(r) @ B  # k = 1 recursion collapses to B itself
        assert numerical_rank(B1) < r
        # and on a valid random model: kappa^k = 2 columns cannot carry rank 3
        model = random_hmm(trial_rng(43, 200), 3, 2)
        assert not hmm_certificate(model, 1).holds
        assert hmm_certificate(model, 2).holds


class TestRecoverHmm:
    def test_round_trip_2_2(self):
        model = random_hmm(trial_rng(44, 0), 2, 2)
        T = window_tensor(model, 1)
        A, B, pi = recover_hmm(T, 2, 2, 1, seed=0, tol=1e-6)
        align = align_hmm((A, B, pi), (model.A, model.B, model.pi))
        assert align.max_abs_error <= 1e-6

    def test_near_identity_chain(self):
        A = np.array([[0.99, 0.01], [0.01, 0.99]])
        B = np.array([[0.8, 0.2], [0.3, 0.7]])
        model = HiddenMarkovModel(A=A, B=B)
        T = window_tensor(model, 1)
        A_hat, B_hat, pi_hat = recover_hmm(T, 2, 2, 1, seed=0, tol=1e-6)
        align = align_hmm((A_hat, B_hat, pi_hat), (A, B, model.pi))
        assert align.max_abs_error <= 1e-6

    def test_round_trip_3_3(self):
        model = random_hmm(trial_rng(44, 1), 3, 3)
        T = window_tensor(model, 1)
        A, B, pi = recover_hmm(T, 3, 3, 1, seed=0, tol=1e-6)
        align = align_hmm((A, B, pi), (model.A, model.B, model.pi))
        assert align.max_abs_error <= 1e-6

    def test_round_trip_k2(self):
        model = random_hmm(trial_rng(44, 2), 2, 2)
        T = window_tensor(model, 2)
        A, B, pi = recover_hmm(T, 2, 2, 2, seed=0, tol=1e-6)
        align = align_hmm((A, B, pi), (model.A, model.B, model.pi))
        assert align.max_abs_error <= 1e-6
