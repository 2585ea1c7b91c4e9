import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhdlab.ensembles import embedding_ensemble, gn_ensemble, holder_ensemble, random_scalar
from mhdlab.fields import Grid, ScalarField, VectorField, lp_norm, random_bandlimited
from mhdlab.lorentz import (
    check_gn,
    check_lorentz_holder,
    check_weak_embedding,
    distribution_measure,
    indicator,
    lorentz_norm,
    rearrange,
    weak_lp_norm,
)


@pytest.fixture
def box():
    return Grid(8, 1.0)


def octant(grid):
    x, y, z = grid.coords
    half = grid.box_length / 2
    return np.broadcast_to((x < half) & (y < half) & (z < half), grid.shape)


def lorentz_indicator(m, p, q):
    """Closed form ``||1_E||_{L^{p,q}} = (p/q)^{1/q} m^{1/p}``."""
    return (p / q) ** (1 / q) * m ** (1 / p)


class TestRearrangement:
    def test_sorted_and_measure(self, grid16, rng):
        r = rearrange(ScalarField(grid16, random_bandlimited(grid16, rng)))
        assert np.all(np.diff(r.values) <= 0)
        assert np.all(np.diff(r.cumulative_measure) > 0)
        assert r.cumulative_measure[-1] == pytest.approx(grid16.volume, rel=1e-14)


class TestDistribution:
    def test_constant(self, box):
        f = ScalarField(box, np.full(box.shape, 3.0))
        assert distribution_measure(f, 2.0) == pytest.approx(1.0, rel=1e-14)
        assert distribution_measure(f, 3.0) == 0.0

    def test_octant(self, box):
        f = indicator(box, octant(box))
        assert distribution_measure(f, 0.5) == pytest.approx(0.125, rel=1e-14)

    def test_negative_threshold(self, box):
        with pytest.raises(ValueError):
            distribution_measure(ScalarField.zeros(box), -1.0)

    def test_non_increasing(self, grid16, rng):
        f = ScalarField(grid16, random_bandlimited(grid16, rng))
        lams = np.linspace(0, 4, 50)
        m = [distribution_measure(f, lam) for lam in lams]
        assert np.all(np.diff(m) <= 0)


class TestWeakNorm:
    def test_indicator(self, box):
        f = indicator(box, octant(box))
        assert weak_lp_norm(f, 2) == pytest.approx(np.sqrt(1 / 8), rel=1e-14)

    def test_constant(self, box):
        assert weak_lp_norm(ScalarField(box, np.full(box.shape, 3.0)), 4) == pytest.approx(3.0, rel=1e-14)

    def test_two_level(self):
        g = Grid(16, 1.0)
        data = np.ones(g.shape)
        data[:8, :8, :4] = 4.0  # measure 1/2 * 1/2 * 1/4 = 1/16
        f = ScalarField(g, data)
        # exhaustive candidate enumeration
        vals = np.sort(data, axis=None)[::-1]
        cands = vals * (np.arange(1, vals.size + 1) * g.cell_volume) ** 0.5
        assert weak_lp_norm(f, 2) == pytest.approx(cands.max(), rel=1e-14)
        assert weak_lp_norm(f, 2) == pytest.approx(1.0, rel=1e-14)

    def test_rejects_p(self, box):
        with pytest.raises(ValueError):
            weak_lp_norm(ScalarField.zeros(box), 1.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3),
           p=st.sampled_from([1.5, 2.0, 4.0, 6.0]))
    def test_bounded_by_strong_and_homogeneous(self, seed, c, p):
        g = Grid(8)
        f = random_scalar(g, np.random.default_rng(seed))
        w = weak_lp_norm(f, p)
        assert w <= lp_norm(f, p) * (1 + 1e-12)
        assert weak_lp_norm(f * c, p) == pytest.approx(abs(c) * w, rel=1e-12)

    def test_vector_uses_magnitude(self, grid16, rng):
        v = VectorField(grid16, random_bandlimited(grid16, rng, components=3))
        s = ScalarField(grid16, np.sqrt(np.sum(v.data**2, axis=0)))
        assert weak_lp_norm(v, 6) == weak_lp_norm(s, 6)


class TestLorentzNorm:
    def test_q_inf_bitwise(self, grid16, rng):
        f = ScalarField(grid16, random_bandlimited(grid16, rng))
        assert lorentz_norm(f, 3.0, np.inf) == weak_lp_norm(f, 3.0)

    def test_q_equals_p(self, grid16, rng):
        for p in (2.0, 3.0, 5.0):
            f = random_scalar(grid16, rng)
            assert lorentz_norm(f, p, p) == pytest.approx(lp_norm(f, p), rel=1e-8)

    def test_indicator_q1(self, box):
        f = indicator(box, octant(box))
        assert lorentz_norm(f, 2, 1) == pytest.approx(2 * np.sqrt(1 / 8), rel=1e-13)

    def test_rejects(self, box):
        with pytest.raises(ValueError):
            lorentz_norm(ScalarField.zeros(box), 1.0, 2.0)
        with pytest.raises(ValueError):
            lorentz_norm(ScalarField.zeros(box), 2.0, 0.5)


class TestGN:
    def test_p2_identity(self, grid16, rng):
        f = ScalarField(grid16, random_bandlimited(grid16, rng))
        assert check_gn(f, 2).ratio == pytest.approx(1.0, rel=1e-14)

    def test_p6_sine(self):
        g = Grid(32, 1.0)
        f = ScalarField.from_function(g, lambda x, y, z: np.sin(2 * np.pi * x) + 0 * y + 0 * z)
        rep = check_gn(f, 6)
        assert rep.alpha == 0.0
        # ||sin||_6^6 = 5/16 on the unit box, ||grad f||_2 = 2 pi / sqrt 2
        expected = (5 / 16) ** (1 / 6) / (2 * np.pi / np.sqrt(2))
        assert rep.ratio == pytest.approx(expected, rel=1e-12)

    def test_scale_invariant(self, grid16, rng):
        f = random_scalar(grid16, rng)
        for p in (3.0, 4.5, 6.0):
            assert check_gn(f * 7.5, p).ratio == pytest.approx(check_gn(f, p).ratio, rel=1e-12)

    def test_degenerate_and_range(self, grid16):
        assert check_gn(ScalarField.zeros(grid16), 4).degenerate
        with pytest.raises(ValueError):
            check_gn(ScalarField.zeros(grid16), 7)

    def test_ensemble_regression(self):
        worst = gn_ensemble(7, 1000, 16)
        frozen = {3.0: 0.5029054945589151, 4.0: 0.38044303057627293,
                  5.0: 0.32926605598468994, 6.0: 0.302272200812157}
        for p, v in frozen.items():
            assert worst[p] == pytest.approx(v, rel=1e-10)


class TestEmbedding:
    def test_f_zero(self, grid16, rng):
        g = ScalarField(grid16, random_bandlimited(grid16, rng))
        rep = check_weak_embedding(ScalarField.zeros(grid16), g, 6, 0.1, constant=0.0)
        assert rep.lhs == 0.0 and rep.slack >= 0

    def test_g_zero(self, grid16, rng):
        f = ScalarField(grid16, random_bandlimited(grid16, rng))
        rep = check_weak_embedding(f, ScalarField.zeros(grid16), 6, 0.1)
        assert rep.lhs == 0.0 and rep.rhs == 0.0

    def test_serrin_exponent_default(self, grid16, rng):
        f = ScalarField(grid16, random_bandlimited(grid16, rng))
        assert check_weak_embedding(f, f, 6, 0.1).s == 4.0

    def test_required_constant_closes_gap(self, grid16, rng):
        f, g = random_scalar(grid16, rng), random_scalar(grid16, rng)
        rep = check_weak_embedding(f, g, 6, 1e-3)
        c = rep.required_constant
        rep2 = check_weak_embedding(f, g, 6, 1e-3, constant=c)
        assert rep2.slack >= -1e-12 * rep2.lhs

    def test_rejects_r(self, grid16):
        z = ScalarField.zeros(grid16)
        with pytest.raises(ValueError):
            check_weak_embedding(z, z, 3.0, 0.1)

    def test_ensemble_regression(self):
        assert embedding_ensemble(7, 500, 32) == pytest.approx(0.027230069904643557, rel=1e-10)


class TestHolder:
    def test_indicators(self, box):
        f = indicator(box, octant(box))
        m = 1 / 8
        rep = check_lorentz_holder(f, f, 4.0, 2.0, 4.0, 4.0)
        expected = lorentz_indicator(m, 2.0, 2.0) / (lorentz_indicator(m, 4, 2) * lorentz_indicator(m, 4, 4))
        assert rep.p == 2.0 and rep.q == 2.0
        assert rep.ratio == pytest.approx(expected, rel=1e-13)

    def test_homogeneous_in_g(self, grid16, rng):
        f = random_scalar(grid16, rng)
        g = ScalarField(grid16, np.ones(grid16.shape))
        a = check_lorentz_holder(f, g, 6, np.inf, 3, 2).ratio
        b = check_lorentz_holder(f, g * 3.0, 6, np.inf, 3, 2).ratio
        assert a == pytest.approx(b, rel=1e-12)

    def test_rejects_exponents(self, grid16):
        z = ScalarField.zeros(grid16)
        with pytest.raises(ValueError):
            check_lorentz_holder(z, z, 2, 2, 2, 2)

    def test_ensemble_regression(self):
        worst = holder_ensemble(7, 500, 32)
        assert np.isfinite(worst)
        assert worst == pytest.approx(0.6863434523146791, rel=1e-10)
