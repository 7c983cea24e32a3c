import numpy as np
import pytest

from qbm1d import exact_collision as ec
from qbm1d import grid_oracle as go
from qbm1d.errors import GridTooCoarse, GridTooSmall
from qbm1d.packets import CollisionPair, GaussianPacket


@pytest.fixture(scope="module")
def pair():
    return CollisionPair.matched(1.0, 0.3, 4.0)


@pytest.fixture(scope="module")
def init(pair):
    return ec.com_condition(pair, 10.0, -2.0)


@pytest.fixture(scope="module")
def t_c(pair, init):
    return ec.collision_time(pair, init.p_g)


@pytest.fixture(scope="module")
def params():
    return go.GridParams(n_R=1024, n_r=1024, R_halfwidth=50.0, r_length=160.0)


class TestDiscretize:
    def test_unit_norm(self, pair, init, params):
        state = go.discretize(pair, init, params)
        assert state.norm() == pytest.approx(1.0, abs=1e-6)

    def test_wall_leakage_negligible(self, pair, init):
        # mass of the free product state on the forbidden side r <= 0
        s_r = np.sqrt((pair.brownian_width**2 + pair.gas_width**2) / 2)
        r0 = init.x - init.x_g
        from scipy.special import erfc
        tail = 0.5 * erfc(r0 / (np.sqrt(2) * s_r))
        assert tail < 1e-10

    def test_matches_product_amplitudes(self, pair, init, params):
        state = go.discretize(pair, init, params)
        xg, xb = state.lab_coordinates(pair.alpha)
        prod = (pair.gas_packet(init.x_g, init.p_g).amplitude(xg)
                * pair.brownian_packet(init.x, init.p).amplitude(xb))
        assert np.max(np.abs(state.psi - prod)) < 1e-8

    def test_nyquist_guard(self, pair, init):
        with pytest.raises(GridTooCoarse):
            go.discretize(pair, init, go.GridParams(64, 64, 50.0, 160.0))

    def test_support_guard(self, pair, init):
        with pytest.raises(GridTooSmall):
            go.discretize(pair, init,
                          go.GridParams(1024, 1024, 50.0, 60.0))


class TestPropagate:
    def test_identity_at_zero(self, pair, init, params):
        state = go.discretize(pair, init, params)
        out = go.propagate(state, pair, 0.0)
        np.testing.assert_array_equal(out.psi, state.psi)

    def test_norm_conserved(self, pair, init, params, t_c):
        state = go.propagate(go.discretize(pair, init, params), pair, 3 * t_c)
        assert state.norm() == pytest.approx(1.0, abs=1e-8)

    def test_total_momentum_conserved(self, pair, init, params, t_c):
        state0 = go.discretize(pair, init, params)
        state1 = go.propagate(state0, pair, 3 * t_c)
        p0 = state0.total_momentum(pair)
        p1 = state1.total_momentum(pair)
        assert p1 == pytest.approx(p0, abs=1e-10)
        assert p0 == pytest.approx(init.p + init.p_g, abs=1e-6)

    def test_energy_conserved(self, pair, init, params, t_c):
        state0 = go.discretize(pair, init, params)
        state1 = go.propagate(state0, pair, 3 * t_c)
        assert state1.energy(pair) == pytest.approx(state0.energy(pair), rel=1e-8)

    def test_mirror_bounce(self, pair):
        # relative-coordinate Gaussian thrown at the wall: after the bounce
        # its modulus equals the freely evolved mirror packet
        mu = pair.reduced_mass
        r0, pr, sig = 30.0, -3.0, 2.5
        n = 1024
        prm = go.GridParams(n_R=n, n_r=n, R_halfwidth=40.0, r_length=220.0)
        R, r = prm.axes()
        chi = GaussianPacket(0.0, 0.0, 6.0, pair.total_mass).amplitude(R)
        phi = GaussianPacket(r0, pr, sig, mu).amplitude(r)
        state = go.GridWavefunction((chi[:, None] * phi[None, :]).astype(complex),
                                    R, r, 0.0)
        t_star = 3.5 * r0 * mu / abs(pr)  # well past the bounce at r0 mu/|pr|
        out = go.propagate(state, pair, t_star)
        mirror = GaussianPacket(-r0, -pr, sig, mu).evolve(t_star)
        chi_t = GaussianPacket(0.0, 0.0, 6.0, pair.total_mass).evolve(t_star)
        target = np.abs(chi_t.amplitude(R)[:, None] * mirror.amplitude(r)[None, :])
        assert np.max(np.abs(np.abs(out.psi) - target)) < 1e-6


class TestCompareToAnalytic:
    def test_certification_at_tc(self, pair, init, params, t_c):
        err = go.compare_to_analytic(pair, init, t_c, params)
        assert err < 1e-3

    def test_initial_agreement(self, pair, init, params):
        assert go.compare_to_analytic(pair, init, 0.0, params) < 1e-6

    def test_refinement_reduces_error(self, pair, init, t_c):
        # resolution-limited regime: these grids deliberately violate the
        # Nyquist margin, hence validate=False; beyond ~192 the error sits on
        # the initial-state truncation floor (~3e-7), far below tolerance
        errs = {}
        for n in (128, 256):
            prm = go.GridParams(n_R=n, n_r=n, R_halfwidth=50.0, r_length=160.0)
            errs[n] = go.compare_to_analytic(pair, init, t_c, prm, validate=False)
        assert errs[256] < errs[128]
        order = np.log2(errs[128] / errs[256])
        assert order >= 2.0


class TestDensityDump:
    def test_roundtrip(self, pair, init, tmp_path):
        prm = go.GridParams(n_R=256, n_r=256, R_halfwidth=50.0, r_length=160.0)
        s0 = go.discretize(pair, init, prm, validate=False)
        s1 = go.propagate(s0, pair, 1.0)
        path = tmp_path / "frames.bin"
        go.save_density_frames(path, [s0, s1])
        meta, frames = go.load_density_frames(path)
        assert meta["dR"] == pytest.approx(s0.dR)
        assert meta["r0"] == pytest.approx(float(s0.r[0]))
        assert len(frames) == 2
        assert frames[0][0] == 0.0 and frames[1][0] == 1.0
        np.testing.assert_allclose(frames[1][1], np.abs(s1.psi) ** 2, rtol=1e-12)
