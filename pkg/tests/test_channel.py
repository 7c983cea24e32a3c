import numpy as np
import pytest
from scipy import integrate

from qbm1d import channel as ch
from qbm1d.errors import (EmptyRegion, EqualMassSingularity, GridTooCoarse,
                          NegativeEigenvalueBeyondTolerance)
from qbm1d.packets import CollisionPair, classical_collision_map, overlap
from qbm1d.thermal import ThermalGasSpec, adjusted_temperature, mean_relative_speed


@pytest.fixture(scope="module")
def pair():
    return CollisionPair.matched(1.0, 0.3, 1.0)


@pytest.fixture(scope="module")
def grid():
    return ch.SpatialGrid(n=256, length=24.0)


@pytest.fixture(scope="module")
def effect0(pair, grid):
    return ch.build_effect_operator(pair, 0.0, 0.0, grid)


@pytest.fixture(scope="module")
def sqrt_effect0(effect0):
    return ch.operator_sqrt(effect0)


class TestSmearingWeight:
    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.9])
    def test_normalization_by_quadrature(self, alpha):
        pr = CollisionPair.matched(1.0, alpha, 1.0)
        wx, wp = ch.smearing_widths(pr)
        val, err = integrate.dblquad(
            lambda p, x: ch.smearing_weight(pr, x, p),
            -8 * wx, 8 * wx, lambda x: -8 * wp, lambda x: 8 * wp,
            epsabs=1e-10)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_peak_value(self, pair):
        a, hb = pair.alpha, pair.hbar
        expected = 2 * a / (np.pi * hb * (1 - a) ** 2)
        assert ch.smearing_weight(pair, 0.0, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_width_vanishes_at_equal_mass(self):
        for alpha in (0.9, 0.99, 0.999):
            pr = CollisionPair.matched(1.0, alpha, 1.0)
            wx, wp = ch.smearing_widths(pr)
            assert wx < (1 - alpha) and wp < (1 - alpha)

    def test_equal_mass_raises(self):
        pr = CollisionPair.matched(1.0, 1.0, 1.0)
        with pytest.raises(EqualMassSingularity):
            ch.smearing_weight(pr, 0.0, 0.0)


class TestDisplacement:
    def test_creates_coherent_state(self, pair, grid):
        v0 = ch.grid_packet(grid, pair.brownian_packet(0.0, 0.0))
        va = ch.displace_vector(grid, v0, 1.7, -0.9, pair.hbar)
        target = ch.grid_packet(grid, pair.brownian_packet(1.7, -0.9))
        assert abs(np.vdot(target, va)) == pytest.approx(1.0, abs=1e-12)
        # including the symmetric phase convention, not just up to phase
        assert np.vdot(target, va) == pytest.approx(1.0 + 0j, abs=1e-12)

    def test_kraus_shift_moments(self, pair, grid):
        # displacement moves a grid Gaussian by the collision map's shift
        x_t, p_t = 0.4, -0.3
        gas_state = (-2.0, 1.5)
        da, db = ch.kraus_displacement(pair, gas_state, x_t, p_t)
        a = pair.alpha
        assert da == pytest.approx(2 * a / (1 + a) * (gas_state[0] - x_t))
        assert db == pytest.approx(2 / (1 + a) * (gas_state[1] - a * p_t))
        v = ch.grid_packet(grid, pair.brownian_packet(x_t, p_t))
        vd = ch.displace_vector(grid, v, da, db, pair.hbar)
        dens = np.abs(vd) ** 2
        mean_x = float(np.sum(grid.x * dens))
        k_density = np.abs(np.fft.fft(vd)) ** 2
        k_density /= k_density.sum()
        mean_p = float(pair.hbar * np.sum(grid.k * k_density))
        assert mean_x == pytest.approx(x_t + da, abs=1e-9)
        assert mean_p == pytest.approx(p_t + db, abs=1e-9)


class TestEffectOperator:
    def test_positive_semidefinite(self, effect0):
        lo, hi = effect0.eigenvalue_range()
        assert lo >= -1e-8
        assert hi <= 1.0 + 1e-3

    def test_hermitian(self, effect0):
        assert np.max(np.abs(effect0.matrix - effect0.matrix.conj().T)) < 1e-12

    def test_diagonal_expectation_vs_quadrature(self, pair, grid):
        # <xt,pt| effect |xt,pt> equals the w-weighted coherent overlap
        x_t, p_t = 0.6, 0.8
        eff = ch.build_effect_operator(pair, x_t, p_t, grid)
        v = ch.grid_packet(grid, pair.brownian_packet(x_t, p_t))
        lhs = eff.expectation(v)
        wx, wp = ch.smearing_widths(pair)
        probe = pair.brownian_packet(x_t, p_t)

        def integrand(p, x):
            shifted = pair.brownian_packet(x_t + x, p_t + p)
            return (ch.smearing_weight(pair, x, p)
                    * abs(overlap(probe, shifted)) ** 2 / (2 * np.pi * pair.hbar))

        rhs, _ = integrate.dblquad(integrand, -8 * wx, 8 * wx,
                                   lambda x: -8 * wp, lambda x: 8 * wp,
                                   epsabs=1e-10)
        assert lhs == pytest.approx(rhs, abs=1e-6)

    def test_completeness_on_interior(self, pair, grid):
        from qbm1d.cli import _completeness_residual
        assert _completeness_residual(pair, grid) <= 1e-3

    def test_grid_resolution_guard(self, pair):
        with pytest.raises(GridTooCoarse):
            ch.build_effect_operator(pair, 0.0, 0.0, ch.SpatialGrid(64, 24.0))

    def test_equal_mass_branch_is_projector(self, grid):
        pr = CollisionPair.matched(1.0, 1.0, 1.0)
        eff = ch.build_effect_operator(pr, 0.5, -0.2, grid)
        v = ch.grid_packet(grid, pr.brownian_packet(0.5, -0.2))
        np.testing.assert_allclose(eff.matrix, np.outer(v, v.conj()), atol=1e-12)


class TestKraus:
    def test_ktk_equals_effect(self, pair, grid, effect0, sqrt_effect0):
        K = ch.build_kraus(pair, (-2.0, 1.5), 0.0, 0.0, grid,
                           sqrt_effect_center=sqrt_effect0.matrix)
        ktk = K.matrix.conj().T @ K.matrix
        assert np.max(np.abs(ktk - effect0.matrix)) < 1e-8

    def test_ktk_displaced(self, pair, grid, sqrt_effect0):
        x_t, p_t = 0.8, -0.6
        K = ch.build_kraus(pair, (-2.0, 1.5), x_t, p_t, grid,
                           sqrt_effect_center=sqrt_effect0.matrix)
        eff = ch.build_effect_operator(pair, x_t, p_t, grid)
        ktk = K.matrix.conj().T @ K.matrix
        assert np.max(np.abs(ktk - eff.matrix)) < 1e-6

    def test_negative_eigenvalue_guard(self, grid):
        mat = -1e-3 * np.eye(grid.n)
        with pytest.raises(NegativeEigenvalueBeyondTolerance):
            ch.operator_sqrt(ch.OperatorGrid(mat, grid))


class TestChannel:
    @pytest.fixture(scope="class")
    def channel_output(self, pair, grid):
        psi = ch.grid_packet(grid, pair.brownian_packet(1.0, 0.5))
        rho = ch.OperatorGrid(np.outer(psi, psi.conj()), grid)
        out = ch.apply_collision_channel(rho, pair, (-2.0, 1.5), t=0.8)
        return rho, out

    def test_trace_preserved(self, channel_output):
        rho, out = channel_output
        assert out.trace() == pytest.approx(rho.trace(), abs=1e-3)

    def test_output_positive(self, channel_output):
        _, out = channel_output
        lo, _ = out.eigenvalue_range()
        assert lo >= -1e-6

    def test_pointer_fidelity(self, pair, grid, channel_output):
        # the collision maps the matched Gaussian onto the classically
        # collided, freely evolving Gaussian
        _, out = channel_output
        _, _, x_o, p_o = classical_collision_map(pair, -2.0, 1.5, 1.0, 0.5)
        tgt = ch.grid_packet(grid, pair.brownian_packet(x_o, p_o))
        tgt = ch.free_evolve_vector(grid, tgt, pair.brownian_mass, 0.8, pair.hbar)
        fid = out.expectation(tgt) / out.trace()
        assert fid >= 0.95
        assert fid == pytest.approx(1.0, abs=1e-3)


class TestProjection:
    @pytest.fixture(scope="class")
    def region(self, pair):
        return ch.PhaseSpaceRegion(x_g=-2.0, p_g=1.2, delta=4.0,
                                   brownian_mass=pair.brownian_mass,
                                   gas_mass=pair.gas_mass)

    @pytest.fixture(scope="class")
    def gamma(self, region, pair, grid):
        return ch.build_projection(region, pair, grid)

    def test_membership_predicate(self, region):
        # gas at -2 moving right at v_g = 4; brownian at rest at 0 collides
        # after tau = 0.5 < delta
        assert region.contains(0.0, 0.0)
        assert not region.contains(-3.0, 0.0)      # behind the gas packet
        assert not region.contains(30.0, 0.0)      # too far to reach in delta
        assert not region.contains(0.0, region.p_g * region.brownian_mass
                                   / region.gas_mass)  # co-moving: empty

    def test_eigenvalue_window(self, gamma):
        lo, hi = gamma.eigenvalue_range()
        assert lo >= -1e-8
        assert hi <= 1.0 + 1e-3

    def test_far_outside_state(self, pair, grid, gamma):
        v = ch.grid_packet(grid, pair.brownian_packet(-9.0, -3.0))
        assert gamma.expectation(v) < 1e-8

    def test_deep_inside_state(self, pair, grid, gamma):
        v = ch.grid_packet(grid, pair.brownian_packet(3.0, 0.0))
        assert gamma.expectation(v) == pytest.approx(1.0, abs=1e-3)

    def test_idempotency_deviation_reported(self, pair, grid, gamma):
        # approximate projection: report how far Gamma^2 falls from Gamma on
        # a deep-inside state (a transition-layer effect, not asserted small)
        v = ch.grid_packet(grid, pair.brownian_packet(3.0, 0.0))
        g1 = gamma.expectation(v)
        g2 = float(np.real(np.vdot(v, gamma.matrix @ (gamma.matrix @ v))))
        deviation = abs(g2 - g1)
        assert 0.0 <= deviation < 0.1
        print(f"projection idempotency deviation on deep state: {deviation:.3e}")

    def test_empty_region_raises(self, pair, grid):
        region = ch.PhaseSpaceRegion(x_g=500.0, p_g=1.0, delta=1e-6,
                                     brownian_mass=1.0, gas_mass=0.3)
        with pytest.raises(EmptyRegion):
            ch.build_projection(region, pair, grid)


class TestCollisionProbability:
    @pytest.fixture(scope="class")
    def gas(self, pair):
        # wide packets so the label temperature is indistinguishable from T
        return ThermalGasSpec(temperature=4.0, number_density=0.05,
                              gas_mass=pair.gas_mass, packet_width=50.0)

    def test_linear_in_density(self, pair, grid, gas):
        region = ch.PhaseSpaceRegion(x_g=-2.0, p_g=1.2, delta=4.0,
                                     brownian_mass=pair.brownian_mass,
                                     gas_mass=pair.gas_mass)
        gamma = ch.build_projection(region, pair, grid)
        v = ch.grid_packet(grid, pair.brownian_packet(3.0, 0.0))
        rho = ch.OperatorGrid(np.outer(v, v.conj()), grid)
        from dataclasses import replace
        lo = ch.collision_probability(rho, region, replace(gas, number_density=0.01),
                                      gamma=gamma)
        hi = ch.collision_probability(rho, region, replace(gas, number_density=0.03),
                                      gamma=gamma)
        assert hi == pytest.approx(3 * lo, rel=1e-12)

    def test_total_probability_against_flux(self, pair, gas):
        # localized state: total collision probability = n_g delta E|v_rel|
        grid = ch.SpatialGrid(n=320, length=36.0)
        pr = CollisionPair.matched(1.0, 0.3, 3.0)
        delta = 0.05
        rate_op = ch.aggregate_rate_operator(pr, gas, grid)
        p0 = 0.8
        v = ch.grid_packet(grid, pr.brownian_packet(0.0, p0))
        rho = ch.OperatorGrid(np.outer(v, v.conj()), grid)
        got = ch.total_collision_probability(rho, pr, gas, delta, rate_op=rate_op)
        expected = gas.number_density * delta * float(
            mean_relative_speed(gas, p0, pr.brownian_mass,
                                temperature=adjusted_temperature(gas)))
        assert got == pytest.approx(expected, rel=2e-2)

    def test_rest_rate_closed_form(self, pair, gas):
        # at p = 0 the thermal rate reduces to n_g sqrt(2 kT / (pi m_g))
        grid = ch.SpatialGrid(n=320, length=36.0)
        pr = CollisionPair.matched(1.0, 0.3, 3.0)
        rate_op = ch.aggregate_rate_operator(pr, gas, grid)
        v = ch.grid_packet(grid, pr.brownian_packet(0.0, 0.0))
        rho = ch.OperatorGrid(np.outer(v, v.conj()), grid)
        rate = ch.total_collision_probability(rho, pr, gas, 1.0, rate_op=rate_op)
        expected = gas.number_density * np.sqrt(2 * gas.kT / (np.pi * gas.gas_mass))
        assert rate == pytest.approx(expected, rel=1e-2)
