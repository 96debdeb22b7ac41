import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqmeas import (
    DensityMatrix,
    DimensionMismatch,
    NotHermitian,
    Observable,
    PureState,
    eigh,
    group_degenerate,
    variance_of,
)
from seqmeas import spin
from seqmeas.validate import random_density, random_hermitian, random_observable


class TestEigh:
    def test_already_diagonal(self):
        values, vectors = eigh(np.diag([1.0, 2.0]))
        np.testing.assert_allclose(values, [1.0, 2.0])
        np.testing.assert_allclose(np.abs(vectors), np.eye(2), atol=1e-15)

    def test_spin_x_spectrum(self):
        values, vectors = eigh(np.array([[0.0, 0.5], [0.5, 0.0]]))
        np.testing.assert_allclose(values, [-0.5, 0.5], atol=1e-15)
        # eigenvectors are |-> and |+> up to phase
        for col, ket in zip(vectors.T, (spin.KET_MINUS, spin.KET_PLUS)):
            assert abs(abs(np.vdot(col, ket)) - 1.0) < 1e-12

    def test_random_reconstruction(self, rng):
        for _ in range(20):
            h = random_hermitian(rng, 4)
            values, vectors = eigh(h)
            rebuilt = (vectors * values) @ vectors.conj().T
            assert np.max(np.abs(rebuilt - h)) < 1e-9
            assert np.max(np.abs(vectors.conj().T @ vectors - np.eye(4))) < 1e-10
            assert np.all(np.diff(values) >= 0)

    def test_eigen_equation_per_column(self, rng):
        h = random_hermitian(rng, 5)
        values, vectors = eigh(h)
        for lam, v in zip(values, vectors.T):
            assert np.max(np.abs(h @ v - lam * v)) < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestGroupDegenerate:
    def test_exact_degeneracy(self):
        assert group_degenerate([1.0, 1.0, 2.0]) == [[0, 1], [2]]

    def test_spin_levels_stay_split(self):
        assert group_degenerate([-0.5, 0.5]) == [[0], [1]]

    def test_merge_below_tolerance(self):
        assert group_degenerate([0.0, 1e-12, 1.0]) == [[0, 1], [2]]

    def test_rejects_descending(self):
        with pytest.raises(ValueError):
            group_degenerate([1.0, 0.0])


class TestObservable:
    def test_projector_algebra(self, rng):
        for dim in (2, 3, 4):
            obs = random_observable(rng, dim)
            total = obs.projectors.sum(axis=0)
            assert np.max(np.abs(total - np.eye(dim))) < 1e-10
            rebuilt = np.einsum("g,gij->ij", obs.levels, obs.projectors)
            assert np.max(np.abs(rebuilt - obs.matrix)) < 1e-10
            for i, p in enumerate(obs.projectors):
                assert np.max(np.abs(p @ p - p)) < 1e-10
                for q in obs.projectors[i + 1 :]:
                    assert np.max(np.abs(p @ q)) < 1e-10

    def test_degenerate_spectrum_grouped(self):
        obs = Observable.from_matrix(np.diag([1.0, 1.0, 3.0]))
        assert obs.levels.tolist() == [1.0, 3.0]
        assert obs.projectors.shape == (2, 3, 3)


class TestDensityMatrix:
    def test_pure_state_roundtrip(self):
        rho = DensityMatrix.pure(spin.KET_PLUS)
        assert abs(rho.trace - 1.0) < 1e-15
        assert rho.is_normalized

    def test_rejects_non_psd(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_log_scale_trace(self):
        rho = DensityMatrix(0.5 * np.eye(2), log_scale=-800.0)
        assert rho.trace == 0.0
        assert abs(rho.log_trace - (-800.0 + np.log(1.0))) < 1e-12
        assert rho.normalized().is_normalized


class TestVariance:
    def test_spin_values(self, plus, up):
        assert abs(variance_of(spin.s_z(), plus) - 0.25) < 1e-15
        assert variance_of(spin.s_x(), plus) < 1e-15
        assert variance_of(spin.s_z(), up) < 1e-15

    def test_dimension_mismatch(self, plus):
        with pytest.raises(DimensionMismatch):
            variance_of(Observable.from_matrix(np.diag([0.0, 1.0, 2.0])), plus)

    @given(seed=st.integers(0, 2**31 - 1), dim=st.sampled_from([2, 3, 4]))
    @settings(max_examples=60, deadline=None)
    def test_never_negative(self, seed, dim):
        rng = np.random.default_rng(seed)
        assert variance_of(random_observable(rng, dim), random_density(rng, dim)) >= 0.0

    def test_invariant_under_projector_relabeling(self, rng):
        h = random_hermitian(rng, 3)
        values, vectors = eigh(h)
        rho = random_density(rng, 3)
        base = variance_of(Observable.from_spectrum(values, vectors), rho)
        # same subspaces, different phases and intra-subspace labels
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=3))
        relabeled = Observable.from_spectrum(values, vectors * phases)
        assert abs(variance_of(relabeled, rho) - base) < 1e-12


class TestPureState:
    def test_norm_enforced(self):
        with pytest.raises(ValueError):
            PureState(np.array([1.0, 1.0]))

    def test_density_is_projector(self):
        psi = PureState(spin.KET_MINUS)
        rho = psi.density()
        assert np.max(np.abs(rho.matrix @ rho.matrix - rho.matrix)) < 1e-14
