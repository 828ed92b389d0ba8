import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjbprice.discretization import NumericalParams
from hjbprice.grid import GridSpec, build_mesh
from hjbprice.model import ModelParams, UtilityFunction, payoff, shift_A
from hjbprice.pricing import (beta_variation, certainty_equivalent, check_closed_form_bound, complementarity,
                              indifference_price, interior_mask, recover_script_v)
from hjbprice.solver import ValueField, solve, terminal_condition

LIN = UtilityFunction.linear()
EXP = UtilityFunction.exponential(0.1)


class TestCertaintyEquivalent:
    def test_linear(self):
        assert certainty_equivalent(3.0, 10.0, LIN) == 7.0

    def test_own_utility(self):
        assert certainty_equivalent(EXP(10.0), 10.0, EXP) == pytest.approx(0.0, abs=1e-12)

    def test_exponential(self):
        assert certainty_equivalent(EXP(4.0), 10.0, EXP) == pytest.approx(6.0, rel=1e-12)

    def test_range_error(self):
        from hjbprice.errors import UtilityDomainError
        with pytest.raises(UtilityDomainError):
            certainty_equivalent(1.5, 0.0, EXP)


class TestIndifferencePrice:
    def test_identical_fields(self, exp_fields, exp_utility, market):
        v = exp_fields[0][0]
        s = indifference_price(v, v, exp_utility, market)
        assert np.all(s.price[np.isfinite(s.price)] == 0.0)

    def test_linear_zero_rate(self):
        p = ModelParams(r=0.0)
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(3, 3, 4)), rng.normal(size=(3, 3, 4))
        s = indifference_price(ValueField(a, 0), ValueField(b, 0, delta=-1), LIN, p)
        np.testing.assert_array_equal(s.price, a - b)

    def test_antisymmetric(self, exp_fields, exp_utility, market):
        v0, vd = exp_fields[0][0], exp_fields[-1][0]
        a = indifference_price(v0, vd, exp_utility, market).price
        b = indifference_price(vd, v0, exp_utility, market).price
        ok = np.isfinite(a)
        assert np.array_equal(a[ok], -b[ok])

    def test_discounting(self):
        p = ModelParams()
        s = indifference_price(ValueField(np.full((2, 2, 2), 5.0), 0),
                               ValueField(np.full((2, 2, 2), 3.0), 0), LIN, p)
        np.testing.assert_allclose(s.price, 2.0 * math.exp(-0.05))

    def test_buyer_price_nonnegative(self, exp_surface, linear_fields, ref_mesh, market):
        K = market.K
        sol = ref_mesh.solvent
        assert np.all(exp_surface.price[sol] >= -1e-6 * K)
        lin = indifference_price(linear_fields[0][0], linear_fields[-1][0], LIN, market)
        assert np.all(lin.price[sol] >= -1e-6 * K)

    def test_mismatched_levels(self):
        with pytest.raises(ValueError):
            indifference_price(ValueField(np.zeros((2, 2, 2)), 0), ValueField(np.zeros((2, 2, 2)), 1),
                               LIN, ModelParams())

    def test_slice(self, exp_surface, ref_mesh):
        i, j = ref_mesh.nearest(0.467, 33.3)
        sl = exp_surface.slice(i, j)
        assert set(sl) == {"price", "bs_bound", "script_v0", "script_vdelta"}
        assert sl["price"].shape == ref_mesh.prices.shape


class TestRecover:
    @pytest.mark.parametrize("u", [LIN, EXP], ids=["linear", "exponential"])
    def test_terminal_no_option(self, u):
        p = ModelParams(delta=0)
        m = build_mesh(GridSpec(N_S=40), p)
        F = recover_script_v(terminal_condition(m, p, u), m, p, u, t=p.T)
        w = np.abs(m.wealth())
        assert np.all(np.abs(F[m.solvent]) <= 1e-10 * (1 + w[m.solvent]))

    @pytest.mark.parametrize("u", [LIN, EXP], ids=["linear", "exponential"])
    def test_terminal_long_call(self, u):
        p = ModelParams(delta=1)
        m = build_mesh(GridSpec(N_S=40), p)
        F = recover_script_v(terminal_condition(m, p, u), m, p, u, t=p.T)
        C = np.broadcast_to(payoff(m.prices, p)[None, None, :], m.shape)
        xi = m.wealth() + C
        # 1 - U(xi) underflows relative precision once gamma * xi is large
        ok = m.solvent.copy()
        if u is EXP:
            ok &= u.gamma * xi <= 15.0
        assert np.all(np.abs(F - C)[ok] <= 1e-10 * (1 + np.abs(xi[ok])))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(0.0, 1.0))
    def test_round_trip(self, seed, t):
        p = ModelParams()
        m = build_mesh(GridSpec(N_alpha=3, N_beta=3, N_S=10), p)
        F = np.random.default_rng(seed).uniform(-5, 5, m.shape)
        xi = math.exp(p.mu * (p.T - t)) * (m.wealth() + shift_A(m.betas, t, p)[None, :, None] + F)
        back = recover_script_v(EXP(xi), m, p, EXP, t)
        scale = np.abs(m.wealth()) + np.abs(F) + 1
        assert np.all(np.abs(back - F) <= 1e-10 * scale * 100)

    def test_nan_passthrough(self):
        p = ModelParams()
        m = build_mesh(GridSpec(N_alpha=2, N_beta=2, N_S=4), p)
        v = np.zeros(m.shape)
        v[0, 0, 0] = np.nan
        F = recover_script_v(v, m, p, EXP)
        assert np.isnan(F[0, 0, 0]) and np.isfinite(F[1, 1, 1])


class TestClosedFormBound:
    def test_reference_exponential(self, exp_surface, market, ref_mesh, exp_utility):
        rep = check_closed_form_bound(exp_surface, market, ref_mesh, exp_utility)
        assert rep.passed and rep.n_violations == 0 and rep.n_nodes > 100

    def test_no_option_field(self, exp_fields, market, ref_mesh, exp_utility):
        v0 = exp_fields[0][0]
        s = indifference_price(v0, v0, exp_utility, market, ref_mesh)
        assert np.all(s.bs_bound == 0.0)
        assert check_closed_form_bound(s, market, ref_mesh, exp_utility).max_excess <= 0.0

    def test_linear_zero_cost_difference_form(self):
        p = ModelParams(theta=0.0)
        m = build_mesh(GridSpec(N_S=100, N=10), p)
        num = NumericalParams()
        v0, _ = solve(m, p, num, LIN, delta=0)
        vd, _ = solve(m, p, num, LIN, delta=-1)
        rep = check_closed_form_bound(indifference_price(v0, vd, LIN, p, m), p, m, LIN)
        assert rep.bound_ok
        assert rep.difference_deviation <= 0.005 * p.K

    def test_rejects_other_families(self, exp_surface, market, ref_mesh):
        with pytest.raises(ValueError):
            check_closed_form_bound(exp_surface, market, ref_mesh, UtilityFunction.power(0.5))

    def test_needs_mesh(self, exp_fields, market, exp_utility, ref_mesh):
        s = indifference_price(exp_fields[0][0], exp_fields[-1][0], exp_utility, market)
        with pytest.raises(ValueError):
            check_closed_form_bound(s, market, ref_mesh)


def test_interior_mask_layers(ref_mesh):
    m0 = interior_mask(ref_mesh, 0)
    np.testing.assert_array_equal(m0, ref_mesh.interior)
    m2 = interior_mask(ref_mesh, 2)
    assert not m2[:2].any() and not m2[-2:].any() and not m2[:, :, :2].any()
    assert np.all(m2 <= m0)


def test_beta_variation():
    f = np.zeros((1, 3, 1))
    f[0, :, 0] = [1.0, 2.0, 6.0]
    mask = np.ones_like(f, dtype=bool)
    assert beta_variation(f, mask) == pytest.approx(3.0)
    mask[0, 2, 0] = False
    assert beta_variation(f, mask) == pytest.approx(0.5)


def test_complementarity_report(exp_fields, ref_mesh, market):
    rep = complementarity(exp_fields[-1][0], ref_mesh, market, NumericalParams())
    assert rep.fraction_violating == 0.0
    assert rep.n_nodes == int(ref_mesh.interior.sum())
    assert rep.worst_residual_trade >= rep.worst_residual >= 0.0
