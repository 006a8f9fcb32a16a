import numpy as np
import pytest

from uikf import onestep, r4skf
from uikf.checks import square_test_model
from uikf.errors import IllConditionedError
from uikf.model import discretize, moore_penrose_pinv


class TestOneStepEstimate:
    def test_identity_output_map(self):
        assert np.allclose(onestep.one_step_estimate(np.array([1.0, 2.0]), np.eye(2)),
                           [1.0, 2.0])

    def test_scalar_scaling(self):
        assert np.allclose(
            onestep.one_step_estimate(np.array([4.0, 6.0]), 2.0 * np.eye(2)), [2.0, 3.0]
        )

    def test_triangular_solve(self):
        C = np.array([[1.0, 1.0], [0.0, 1.0]])
        assert np.allclose(onestep.one_step_estimate(np.array([3.0, 1.0]), C), [2.0, 1.0])

    def test_singular_C_raises(self):
        with pytest.raises(IllConditionedError):
            onestep.one_step_estimate(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestOneStepErrorCov:
    def test_identity(self):
        R = np.diag([0.2, 0.5])
        assert np.allclose(onestep.one_step_error_cov(np.eye(2), R), R)

    def test_scaling(self):
        assert np.allclose(onestep.one_step_error_cov(2.0 * np.eye(2), np.eye(2)),
                           0.25 * np.eye(2))

    def test_monte_carlo_sample_covariance(self):
        rng = np.random.default_rng(7)
        C = np.array([[1.5, 0.4], [-0.2, 0.9]])
        R = np.array([[0.5, 0.1], [0.1, 0.3]])
        pred = onestep.one_step_error_cov(C, R)
        v = rng.multivariate_normal(np.zeros(2), R, size=100_000)
        e = np.linalg.solve(C, v.T).T
        sample = e.T @ e / len(e)
        assert np.abs(sample - pred).max() <= 0.05 * np.abs(pred).max()


class TestEquivalenceCheck:
    def test_zero_unknown_input(self):
        model = square_test_model()
        dev = onestep.equivalence_check(model, steps=50, seed=0, d_scale=0.0)
        assert dev <= 1e-9

    def test_random_inputs_500_steps(self):
        model = square_test_model()
        assert onestep.equivalence_check(model, 500, seed=42) < 1e-9

    def test_initial_condition_robustness(self):
        model = square_test_model()
        dev = onestep.equivalence_check(model, 500, seed=42, x0_hat=[100.0, 100.0])
        assert dev < 1e-9

    def test_requires_square_case(self):
        from uikf.benchmark import benchmark_model

        with pytest.raises(ValueError):
            onestep.equivalence_check(benchmark_model(), 10, seed=0)


class TestSquareCaseStability:
    def test_A_bar_vanishes(self):
        model = square_test_model()
        dm = discretize(model, 0.0)
        C = np.asarray(model.C(0), dtype=float)
        F_d = moore_penrose_pinv(C @ dm.E_d)
        A_bar, *_ = r4skf.stability_matrices(dm, C, F_d, np.zeros((2, 2)))
        assert np.linalg.norm(A_bar) <= 1e-12 * np.linalg.norm(dm.A_d)

    def test_predictor_independent_of_initial_state_after_first_update(self):
        # K = 0 path: after one measurement the estimate only uses y
        model = square_test_model()
        rng = np.random.default_rng(5)
        ys = [rng.standard_normal(2) for _ in range(5)]
        K0 = np.zeros((2, 2))
        outs = []
        for x0 in ([0.0, 0.0], [100.0, -50.0]):
            state = r4skf.initial_state(model, np.array(x0))
            seq = []
            for y in ys:
                state, _ = r4skf.step(state, np.zeros(1), y, model, gain_override=K0)
                seq.append(state.x_hat.copy())
            outs.append(np.array(seq))
        assert np.abs(outs[0] - outs[1]).max() <= 1e-10


class TestSquareCaseModel:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            onestep.SquareCaseModel(C=np.ones((2, 3)), E=np.eye(2), R=np.eye(2), dt=0.1)

    def test_rejects_ill_conditioned(self):
        C = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-15]])
        with pytest.raises(IllConditionedError):
            onestep.SquareCaseModel(C=C, E=np.eye(2), R=np.eye(2), dt=0.1)
