import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adp_lab import (
    ElasticNet,
    InvalidParameterError,
    Signal,
    SquaredL2,
    min_subgradient,
    penalty_value,
    prox,
    subgradient_pairing,
)
from adp_lab.penalties import (
    conjugate_value,
    is_subgradient,
    skewed_cone_pairing,
    skewed_cone_penalty,
    subgradient_distance,
)



def on_unit_grid(values):
    values = np.asarray(values, float)
    return Signal(values, (0.0, float(values.size)))


class TestValue:
    def test_zero(self):
        assert penalty_value(ElasticNet(1.0, 1.0), Signal(np.zeros(5))) == 0.0
        assert penalty_value(SquaredL2(), Signal(np.zeros(5))) == 0.0

    def test_single_sample(self):
        x = on_unit_grid([2.0, 0.0])
        assert penalty_value(ElasticNet(1.0, 1.0), x) == pytest.approx(4.0)

    def test_naive_summation(self, rng):
        pen = ElasticNet(0.3, 0.7)
        for _ in range(20):
            x = Signal(rng.standard_normal(13), (0.0, 3.0))
            h = 3.0 / 13
            ref = 0.0
            for v in x.samples:
                ref += h * (0.3 * abs(v) + 0.35 * v * v)
            assert penalty_value(pen, x) == pytest.approx(ref, rel=1e-12, abs=1e-14)

    def test_squared_l2_is_half_norm(self, rng):
        x = Signal(rng.standard_normal(9))
        assert penalty_value(SquaredL2(), x) == pytest.approx(0.5 * x.norm() ** 2, rel=1e-14)

    @pytest.mark.parametrize("a1,a2", [(-1.0, 1.0), (1.0, -1.0), (0.0, 0.0)])
    def test_invalid_weights(self, a1, a2):
        with pytest.raises(InvalidParameterError):
            ElasticNet(a1, a2)


class TestProx:
    def test_inside_threshold_is_zero(self, rng):
        z = Signal(rng.uniform(-0.5, 0.5, 10))
        assert not np.any(prox(ElasticNet(1.0, 0.3), z, 0.6).samples)

    def test_pure_shrink(self, rng):
        z = Signal(rng.standard_normal(10))
        np.testing.assert_allclose(prox(ElasticNet(0.0, 1.0), z, 1.0).samples, z.samples / 2)

    def test_scalar_against_grid_search(self):
        out = prox(ElasticNet(1.0, 1.0), np.array([2.0]), 1.0)
        grid = np.linspace(-3, 3, 600001)
        f = 0.5 * (grid - 2.0) ** 2 + np.abs(grid) + 0.5 * grid**2
        assert out[0] == pytest.approx(0.5)
        assert abs(grid[np.argmin(f)] - out[0]) <= 1e-5

    def test_minimizes_prox_objective(self, rng):
        pen, step = ElasticNet(0.4, 0.6), 0.8
        z = rng.standard_normal(6)
        x = prox(pen, z, step)

        def obj(u):
            return 0.5 * np.sum((u - z) ** 2) + step * (0.4 * np.abs(u).sum() + 0.3 * u @ u)

        for _ in range(200):
            assert obj(x) <= obj(x + 0.1 * rng.standard_normal(6)) + 1e-14

    def test_rejects_nonpositive_step(self):
        with pytest.raises(InvalidParameterError):
            prox(ElasticNet(1.0, 1.0), np.ones(2), 0.0)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**16), a1=st.floats(0, 3), a2=st.floats(0, 3),
           step=st.floats(1e-3, 10))
    def test_nonexpansive(self, seed, a1, a2, step):
        if a1 + a2 == 0:
            return
        r = np.random.default_rng(seed)
        pen = ElasticNet(a1, a2)
        z, w = r.standard_normal(8), r.standard_normal(8)
        d = np.linalg.norm(prox(pen, z, step) - prox(pen, w, step))
        assert d <= np.linalg.norm(z - w) * (1 + 1e-12)


class TestSubgradient:
    def test_zero(self):
        x = Signal(np.zeros(4))
        assert not np.any(min_subgradient(ElasticNet(1.0, 1.0), x).samples)
        assert subgradient_pairing(ElasticNet(1.0, 1.0), x) == 0.0

    def test_squared_l2_gradient(self, rng):
        x = Signal(rng.standard_normal(7))
        np.testing.assert_array_equal(min_subgradient(SquaredL2(), x).samples, x.samples)

    def test_componentwise_rule(self):
        x = on_unit_grid([1.0, 0.0, -2.0])
        pen = ElasticNet(1.0, 0.5)
        v = min_subgradient(pen, x)
        np.testing.assert_allclose(v.samples, [1.5, 0.0, -2.0])
        assert is_subgradient(pen, x, v)

    def test_membership_rejects_wrong_vectors(self):
        x = on_unit_grid([1.0, 0.0, -2.0])
        pen = ElasticNet(1.0, 0.5)
        assert is_subgradient(pen, x, on_unit_grid([1.5, 0.9, -2.0]))
        assert not is_subgradient(pen, x, on_unit_grid([1.5, 1.1, -2.0]))
        assert not is_subgradient(pen, x, on_unit_grid([1.4, 0.0, -2.0]))
        assert subgradient_distance(pen, x, on_unit_grid([1.5, 1.1, -2.0])) == pytest.approx(0.1)

    def test_pairing_of_squared_l2(self):
        x = on_unit_grid([3.0, 0.0])
        assert subgradient_pairing(SquaredL2(), x) == pytest.approx(9.0)

    def test_pairing_equals_min_subgradient_product(self, rng):
        pen = ElasticNet(0.7, 0.2)
        for _ in range(50):
            x = Signal(rng.standard_normal(11) * (rng.random(11) < 0.5))
            v = min_subgradient(pen, x)
            assert subgradient_pairing(pen, x) == pytest.approx(x.inner(v), rel=1e-12, abs=1e-15)

    def test_subgradient_inequality(self, rng):
        pen = ElasticNet(0.5, 0.8)
        for _ in range(1000):
            x = Signal(rng.standard_normal(6) * (rng.random(6) < 0.6))
            w = Signal(rng.standard_normal(6))
            v = min_subgradient(pen, x)
            lhs = penalty_value(pen, w)
            rhs = penalty_value(pen, x) + v.inner(w.like(w.samples - x.samples))
            assert lhs >= rhs - 1e-12

    def test_fenchel_identity_squared_l2(self, rng):
        x = Signal(rng.standard_normal(9))
        pen = ElasticNet(0.0, 1.0)
        v = min_subgradient(pen, x)
        lhs = subgradient_pairing(pen, x)
        assert lhs == pytest.approx(x.norm() ** 2)
        assert lhs == pytest.approx(penalty_value(pen, x) + conjugate_value(pen, v), rel=1e-12)

    def test_fenchel_identity_elastic_net(self, rng):
        pen = ElasticNet(0.3, 0.6)
        x = Signal(rng.standard_normal(9) * (rng.random(9) < 0.5))
        v = min_subgradient(pen, x)
        assert subgradient_pairing(pen, x) == pytest.approx(
            penalty_value(pen, x) + conjugate_value(pen, v), rel=1e-12, abs=1e-15)

    def test_conjugate_needs_quadratic_part(self):
        with pytest.raises(InvalidParameterError):
            conjugate_value(ElasticNet(1.0, 0.0), np.ones(2))

    def test_pairing_coercive(self, rng):
        pen = ElasticNet(0.2, 0.1)
        x = Signal(rng.standard_normal(5))
        ratios = [subgradient_pairing(pen, x.like(t * x.samples)) / t for t in (1, 10, 100, 1000)]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] > 100 * ratios[0]


class TestSkewedCone:
    @pytest.mark.parametrize("pt,val", [((5.0, 0.0), 0.0), ((6.0, 0.0), 3.0), ((5.0, 1.0), 1.0)])
    def test_values(self, pt, val):
        assert float(skewed_cone_penalty(*pt)) == pytest.approx(val)

    def test_pairing_symmetric_in_second_coordinate(self, rng):
        x1 = rng.uniform(0, 10, 200)
        x2 = rng.uniform(0, 10, 200)
        np.testing.assert_allclose(skewed_cone_pairing(x1, x2), skewed_cone_pairing(x1, -x2))

    def test_vectorized(self):
        out = skewed_cone_penalty(np.array([5.0, 6.0]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, [1.0, 3.0])
