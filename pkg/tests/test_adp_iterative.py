import numpy as np
import pytest
from conftest import central_fd, random_signal, random_square_op

from adp_lab import (
    AdpProblem,
    DivergenceError,
    EarlyStop,
    ElasticNet,
    IftConfig,
    InvalidParameterError,
    InvalidSubgradientError,
    IstaConfig,
    LinearOp,
    Signal,
    SquaredL2,
    StopReason,
    adp_beta_param_solve,
    adp_exact_solve,
    adp_ift_solve,
    bregman_distance,
    ift_gradient,
    kernel_data_gradient,
    min_subgradient,
    outer_loss,
    solve_inner,
)
from adp_lab.adp_iterative import _DivergenceGuard, sobolev_sq_norm
from adp_lab.experiments.problems import build_instance
from adp_lab.operators import convolution_operator, gaussian_kernel

TIGHT = IstaConfig(tol=1e-12)


def data_loss(A, y, pen, alpha, M, B):
    Bm = B.with_matrix(M)
    x = solve_inner(Bm, y, pen, alpha, TIGHT).final
    r = A.matrix @ x.samples - y.samples
    return 0.5 * A.h_out * float(r @ r)


class TestIftGradient:
    def test_zero_when_outer_residual_vanishes(self, rng):
        B = random_square_op(rng, 8)
        pen = ElasticNet(0.1, 0.5)
        y = random_signal(rng, 8)
        x = solve_inner(B, y, pen, 1.0, TIGHT).final
        A_data = B.apply(x)
        g = ift_gradient(B, x, B, A_data, pen, 1.0)
        assert np.abs(g).max() <= 1e-10

    def test_matches_finite_differences(self, rng):
        n = 15
        A = random_square_op(rng, n)
        B = A.with_matrix(A.matrix + 0.1 * rng.standard_normal((n, n)))
        y = random_signal(rng, n)
        pen = ElasticNet(0.05, 0.5)
        x = solve_inner(B, y, pen, 1.0, TIGHT).final
        g = ift_gradient(B, x, A, y, pen, 1.0)
        fd = central_fd(lambda M: data_loss(A, y, pen, 1.0, M, B), B.matrix, 1e-5)
        assert np.linalg.norm(g - fd) <= 1e-4 * np.linalg.norm(fd)

    def test_smooth_case_matrix_calculus(self, rng):
        # a1 = 0: x = K^-1 M^T y with K = M^T M + a I, so
        # dx = K^-1 (dM^T (y - M x) - M^T dM x) for each unit direction dM
        n = 5
        y = Signal(rng.standard_normal(n))
        B = LinearOp.on(np.diag(rng.uniform(0.5, 2.0, n)), y)
        A = LinearOp.on(rng.standard_normal((n, n)), y)
        a, h = 0.3, y.h
        M = B.matrix
        K = M.T @ M + a * np.eye(n)
        xs = np.linalg.solve(K, M.T @ y.samples)
        outer = h * (A.matrix.T @ (A.matrix @ xs - y.samples))
        expected = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n))
                E[i, j] = 1.0
                dx = np.linalg.solve(K, E.T @ (y.samples - M @ xs) - M.T @ (E @ xs))
                expected[i, j] = outer @ dx
        x = solve_inner(B, y, ElasticNet(0.0, 1.0), a, IstaConfig(tol=1e-14)).final
        g = ift_gradient(B, x, A, y, ElasticNet(0.0, 1.0), a)
        np.testing.assert_allclose(g, expected, atol=1e-8)

    def test_zero_iterate_gives_zero_gradient(self, rng):
        B = random_square_op(rng, 4)
        y = random_signal(rng, 4)
        g = ift_gradient(B, Signal(np.zeros(4)), B, y, ElasticNet(1.0, 1.0), 1.0)
        assert not np.any(g)


class TestIftSolve:
    def test_first_iterate_is_inner_solution_of_A(self, rng):
        A = random_square_op(rng, 10)
        y = random_signal(rng, 10)
        pen = ElasticNet(0.05, 0.3)
        p = AdpProblem(A, y, pen, 0.5)
        rep = adp_ift_solve(p, IftConfig(lr=0.1, outer_iters=0))
        ref = solve_inner(A, y, pen, 0.5, IstaConfig(tol=1e-11)).final
        assert rep.final.like(rep.final.samples - ref.samples).norm() <= 1e-9
        assert rep.iterations == 0

    def test_huge_beta_stays_at_A(self, rng):
        A = random_square_op(rng, 8)
        y = random_signal(rng, 8)
        pen = ElasticNet(0.05, 0.3)
        beta = 1e6
        p = AdpProblem(A, y, pen, 0.5, beta=beta)
        rep = adp_ift_solve(p, IftConfig(lr=0.4 / beta, outer_iters=50))
        B = rep.extras["B"]
        assert np.linalg.norm(B.matrix - A.matrix) <= 1e-3
        ref = solve_inner(A, y, pen, 0.5, TIGHT).final
        assert rep.final.like(rep.final.samples - ref.samples).norm() <= 1e-3

    def test_long_run_reaches_exact_adp_loss(self):
        inst = build_instance("integration", "step", 32, (0.0, 1.0), 0.03, 40.0, 0)
        p = AdpProblem(inst.A, inst.y, SquaredL2(), 0.1)
        exact = adp_exact_solve(inst.A, inst.y, SquaredL2(), 0.1)
        rep = adp_ift_solve(p, IftConfig(lr=1.0, outer_iters=2000))
        assert abs(rep.loss_trace[-1] - p.misfit(exact.final)) <= 1e-4

    def test_loss_nonincreasing_and_norm_nondecreasing(self):
        inst = build_instance("integration", "hat", 32, (0.0, 1.0), 0.03, 40.0, 1)
        p = AdpProblem(inst.A, inst.y, SquaredL2(), 0.05)
        rep = adp_ift_solve(p, IftConfig(lr=0.5, outer_iters=100))
        assert np.all(np.diff(rep.loss_trace) <= 1e-14)
        norms = rep.extras["norm_trace"]
        assert np.all(np.diff(norms) >= -1e-12)
        assert norms[-1] > norms[0]

    @pytest.mark.parametrize("kind", ["integration", "convolution"])
    def test_elastic_net_descent_on_presets(self, kind):
        inst = build_instance(kind, "step", 32, (0.0, 1.0), 0.03, 40.0, 2)
        p = AdpProblem(inst.A, inst.y, ElasticNet(1e-3, 0.1), 1.0)
        rep = adp_ift_solve(p, IftConfig(lr=0.25, outer_iters=100))
        assert np.all(np.diff(rep.loss_trace) <= 1e-12 * rep.loss_trace[0])

    def test_beta_objective_nonincreasing(self):
        inst = build_instance("integration", "sines", 32, (0.0, 1.0), 0.03, 40.0, 3)
        p = AdpProblem(inst.A, inst.y, SquaredL2(), 0.05, beta=1.0)
        rep = adp_ift_solve(p, IftConfig(lr=0.25, outer_iters=100))
        # inner solves stop at 1e-11, which bounds how flat the trace can look
        assert np.all(np.diff(rep.loss_trace) <= 1e-9 * rep.loss_trace[0])
        assert rep.loss_trace[-1] < rep.loss_trace[0]

    def test_discrepancy_early_stop(self):
        inst = build_instance("integration", "step", 32, (0.0, 1.0), 0.03, 40.0, 0)
        p = AdpProblem(inst.A, inst.y, SquaredL2(), 0.05)
        stop = EarlyStop(tau=1.1, delta=inst.delta)
        rep = adp_ift_solve(p, IftConfig(lr=1.0, outer_iters=5000, early_stop=stop))
        assert rep.stop_reason is StopReason.EARLY_STOPPED
        res = np.sqrt(2 * rep.extras["misfit_trace"])
        assert res[-1] <= 1.1 * inst.delta
        assert np.all(res[:-1] > 1.1 * inst.delta)

    def test_fixed_k_early_stop(self, rng):
        A = random_square_op(rng, 6)
        p = AdpProblem(A, random_signal(rng, 6), SquaredL2(), 0.5)
        rep = adp_ift_solve(p, IftConfig(lr=0.05, outer_iters=100, early_stop=EarlyStop(k=7)))
        assert rep.extras["stop_k"] == 7
        assert len(rep.loss_trace) == 8

    def test_record_iterates(self, rng):
        A = random_square_op(rng, 6)
        p = AdpProblem(A, random_signal(rng, 6), SquaredL2(), 0.5)
        rep = adp_ift_solve(p, IftConfig(lr=0.05, outer_iters=4, record_iterates=True))
        assert len(rep.extras["iterates"]) == 5

    def test_divergence_detected(self, rng):
        A = random_square_op(rng, 6)
        p = AdpProblem(A, random_signal(rng, 6), ElasticNet(0.01, 0.5), 0.5)
        with pytest.raises(DivergenceError, match="smaller learning rate"):
            adp_ift_solve(p, IftConfig(lr=1e2, outer_iters=200, divergence_window=2))

    def test_guard_ignores_plateau_noise(self):
        guard = _DivergenceGuard(3)
        for v in (1.0, 1.0 + 1e-15, 1.0 + 2e-15, 1.0 + 3e-15, 1.0 + 4e-15):
            guard(v)
        guard = _DivergenceGuard(3)
        with pytest.raises(DivergenceError):
            for v in (1.0, 1.1, 1.2, 1.3):
                guard(v)

    def test_unstable_beta_step_rejected(self, rng):
        A = random_square_op(rng, 4)
        p = AdpProblem(A, random_signal(rng, 4), SquaredL2(), 0.5, beta=10.0)
        with pytest.raises(InvalidParameterError):
            adp_ift_solve(p, IftConfig(lr=0.2))

    @pytest.mark.parametrize("kw", [{"lr": 0.0}, {"beta": -1.0}, {"outer_iters": -1}])
    def test_config_validation(self, kw):
        with pytest.raises(InvalidParameterError):
            IftConfig(**kw)

    def test_early_stop_validation(self):
        with pytest.raises(InvalidParameterError):
            EarlyStop()
        with pytest.raises(InvalidParameterError):
            EarlyStop(tau=1.0, delta=0.1)

    def test_outer_loss_includes_proximity(self, rng):
        A = random_square_op(rng, 4)
        y = random_signal(rng, 4)
        x = random_signal(rng, 4)
        B = A.with_matrix(A.matrix + 1.0)
        plain = outer_loss(AdpProblem(A, y, SquaredL2()), B, x)
        with_beta = outer_loss(AdpProblem(A, y, SquaredL2(), beta=2.0), B, x)
        assert with_beta - plain == pytest.approx(2.0 * 16.0)


class TestKernelParametrization:
    def setup_method(self):
        n = 48
        self.f = gaussian_kernel(n, (0.0, 1.0), 0.05)
        self.A = convolution_operator(self.f, n)
        t = Signal(np.zeros(n)).grid
        self.y = self.A.apply(Signal(np.where((t > 0.3) & (t < 0.6), 1.0, 0.0)))
        self.y = self.y.like(self.y.samples + 0.01 * np.random.default_rng(0).standard_normal(n))
        self.pen = ElasticNet(1e-3, 0.1)

    def test_huge_beta_keeps_kernel(self):
        beta = 1e8
        W_top = 2 * beta * (1.0 / self.f.h) * 5  # generous curvature bound
        g, rep = adp_beta_param_solve(self.f, self.y, self.pen, 1.0, beta,
                                      IftConfig(lr=0.5 / W_top, outer_iters=20))
        assert np.max(np.abs(g.g - self.f.g)) <= 1e-6

    def test_data_gradient_matches_finite_differences(self):
        p = AdpProblem(self.A, self.y, self.pen, 1.0)
        g = self.f.with_samples(self.f.g * 1.05)

        def loss(samples):
            B = convolution_operator(g.with_samples(samples), self.y.n)
            x = solve_inner(B, self.y, self.pen, 1.0, TIGHT).final
            return p.misfit(x)

        x = solve_inner(convolution_operator(g, self.y.n), self.y, self.pen, 1.0, TIGHT).final
        grad = kernel_data_gradient(g, p, x)
        eps = 1e-5
        fd = np.array([(loss(g.g + eps * e) - loss(g.g - eps * e)) / (2 * eps)
                       for e in np.eye(g.g.size)])
        assert np.linalg.norm(grad - fd) <= 1e-4 * np.linalg.norm(fd)

    def test_loss_nonincreasing(self):
        g, rep = adp_beta_param_solve(self.f, self.y, self.pen, 1.0, 1e-4,
                                      IftConfig(lr=1e-3, outer_iters=40))
        assert np.all(np.diff(rep.loss_trace) <= 1e-12 * rep.loss_trace[0])
        assert rep.loss_trace[-1] < rep.loss_trace[0]

    def test_rejects_bad_beta_and_step(self):
        with pytest.raises(InvalidParameterError):
            adp_beta_param_solve(self.f, self.y, self.pen, 1.0, 0.0, IftConfig())
        with pytest.raises(InvalidParameterError):
            adp_beta_param_solve(self.f, self.y, self.pen, 1.0, 10.0, IftConfig(lr=1.0))

    def test_sobolev_norm_of_constant(self):
        d = np.ones(5)
        # forward differences vanish except the last one, which sees the zero boundary
        assert sobolev_sq_norm(d, 0.5) == pytest.approx(0.5 * (5 + 4.0))


class TestBregman:
    def test_zero_at_same_point(self, rng):
        x = random_signal(rng, 7)
        pen = ElasticNet(0.4, 0.3)
        assert bregman_distance(pen, x, x, min_subgradient(pen, x)) == pytest.approx(0.0, abs=1e-15)

    def test_squared_l2_identity(self, rng):
        x, xt = random_signal(rng, 7), random_signal(rng, 7)
        d = bregman_distance(SquaredL2(), xt, x, x)
        assert d == pytest.approx(0.5 * xt.like(xt.samples - x.samples).norm() ** 2, rel=1e-12)

    def test_elastic_net_nonnegative(self, rng):
        pen = ElasticNet(0.5, 0.2)
        for _ in range(200):
            x = Signal(rng.standard_normal(6) * (rng.random(6) < 0.5))
            xt = random_signal(rng, 6)
            assert bregman_distance(pen, xt, x, min_subgradient(pen, x)) >= -1e-14

    def test_rejects_non_subgradient(self, rng):
        x = random_signal(rng, 5)
        with pytest.raises(InvalidSubgradientError):
            bregman_distance(SquaredL2(), x, x, x.like(x.samples + 1.0))
