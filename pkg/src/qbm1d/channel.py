"""Collision channel on a discretized single-particle Hilbert space.

Verifies the measurement-theoretic layer numerically: phase-space-smeared
effect operators, their square roots, the displacement-composed collision
Kraus operators, approximate phase-space projections, and collision
probability/rate operators.  Everything lives on a uniform position grid
with periodic FFT displacements; states are l2-normalized grid vectors.

This module certifies algebraic structure on modest grids (N <= 512); the
trajectory unraveling carries production dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.fft import fft, ifft

from .errors import (EmptyRegion, EqualMassSingularity, GridTooCoarse,
                     NegativeEigenvalueBeyondTolerance)
from .packets import CollisionPair, GaussianPacket
from .thermal import ThermalGasSpec, adjusted_temperature, mean_relative_speed, momentum_weight

__all__ = [
    "SpatialGrid",
    "OperatorGrid",
    "PhaseSpaceMesh",
    "PhaseSpaceRegion",
    "grid_packet",
    "displace_vector",
    "displacement_operator",
    "free_evolve_vector",
    "smearing_weight",
    "smearing_widths",
    "build_effect_operator",
    "operator_sqrt",
    "build_kraus",
    "apply_collision_channel",
    "build_projection",
    "collision_probability",
    "aggregate_rate_operator",
    "total_collision_probability",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform position grid of n points centered on the origin."""

    n: int
    length: float

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 points")
        if self.length <= 0:
            raise ValueError("length must be > 0")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.length / 2 + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def momentum_cutoff(self, hbar: float) -> float:
        return np.pi * hbar / self.dx


@dataclass
class OperatorGrid:
    """Dense operator on a SpatialGrid, with positivity bookkeeping."""

    matrix: np.ndarray
    grid: SpatialGrid

    def hermitized(self, tol: float = 1e-10) -> "OperatorGrid":
        drift = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if drift > tol * max(1.0, np.max(np.abs(self.matrix))):
            raise ValueError(f"hermiticity drift {drift:.3e} beyond tolerance")
        return OperatorGrid(0.5 * (self.matrix + self.matrix.conj().T), self.grid)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def expectation(self, vec: np.ndarray) -> float:
        return float(np.real(np.vdot(vec, self.matrix @ vec)))

    def eigenvalue_range(self):
        ev = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        return float(ev[0]), float(ev[-1])


@dataclass(frozen=True)
class PhaseSpaceMesh:
    """Uniform phase-space quadrature resolution: nodes per std, half-span."""

    points_per_std: float = 6.0
    span_std: float = 4.5


def grid_packet(grid: SpatialGrid, packet: GaussianPacket) -> np.ndarray:
    """l2-normalized grid vector of a Gaussian packet (1e-12 tail budget)."""
    v = packet.amplitude(grid.x) * np.sqrt(grid.dx)
    nrm = np.linalg.norm(v)
    if abs(nrm**2 - 1.0) > 1e-6:
        raise GridTooCoarse(
            f"packet mass on grid {nrm**2:.6f}; widen the grid or the packet")
    return v / nrm


def displace_vector(grid: SpatialGrid, v: np.ndarray, a: float, b: float,
                    hbar: float = 1.0) -> np.ndarray:
    """Glauber displacement: shift position by a, then boost momentum by b.

    Split form with the symmetric phase e^{-i a b / 2 hbar}; exact on the
    periodic grid for any real displacements.
    """
    out = ifft(np.exp(-1j * grid.k * a) * fft(v))
    return np.exp(-1j * a * b / (2 * hbar)) * np.exp(1j * b * grid.x / hbar) * out


def displacement_operator(grid: SpatialGrid, a: float, b: float,
                          hbar: float = 1.0) -> np.ndarray:
    phase = np.exp(-1j * a * b / (2 * hbar)) * np.exp(1j * b * grid.x / hbar)
    cols = ifft(np.exp(-1j * grid.k * a)[:, None] * fft(np.eye(grid.n), axis=0), axis=0)
    return phase[:, None] * cols


def free_evolve_vector(grid: SpatialGrid, v: np.ndarray, mass: float, t: float,
                       hbar: float = 1.0) -> np.ndarray:
    return ifft(np.exp(-1j * hbar * grid.k**2 * t / (2 * mass)) * fft(v))


def smearing_widths(pair: CollisionPair):
    """Standard deviations (in x and p) of the smearing weight w."""
    a, s, hb = pair.alpha, pair.brownian_width, pair.hbar
    if a == 1.0:
        return 0.0, 0.0
    return (abs(1 - a) * s / (2 * np.sqrt(a)),
            abs(1 - a) * hb / (2 * np.sqrt(a) * s))


def smearing_weight(pair: CollisionPair, x, p):
    """Phase-space weight w(x, p); normalized so its double integral is 1.

    Degenerates to a point mass at alpha = 1, which is handled as a
    dedicated branch elsewhere; here it raises.
    """
    a, s, hb = pair.alpha, pair.brownian_width, pair.hbar
    if a == 1.0:
        raise EqualMassSingularity("w(x,p) is a point mass at alpha = 1")
    x = np.asarray(x)
    p = np.asarray(p)
    pref = 2 * a / (np.pi * hb * (1 - a) ** 2)
    return pref * np.exp(-2 * a / (1 - a) ** 2 * (x**2 / s**2 + s**2 * p**2 / hb**2))


def _check_grid_resolution(pair: CollisionPair, grid: SpatialGrid):
    if grid.dx > pair.brownian_width / 8:
        raise GridTooCoarse(
            f"dx = {grid.dx:.4g} > sigma/8 = {pair.brownian_width / 8:.4g}")


def _w_mesh(pair: CollisionPair, mesh: PhaseSpaceMesh):
    wx, wp = smearing_widths(pair)
    nx = max(3, int(np.ceil(2 * mesh.span_std * mesh.points_per_std)) | 1)
    xs = np.linspace(-mesh.span_std * wx, mesh.span_std * wx, nx)
    ps = np.linspace(-mesh.span_std * wp, mesh.span_std * wp, nx)
    return xs, ps


def build_effect_operator(pair: CollisionPair, x_t: float, p_t: float,
                          grid: SpatialGrid,
                          mesh: PhaseSpaceMesh = PhaseSpaceMesh()) -> OperatorGrid:
    """Effect operator: w-weighted mixture of displaced packet projectors.

    At alpha = 1 the weight is a point mass and the effect operator is the
    bare coherent projector at (x_t, p_t).
    """
    _check_grid_resolution(pair, grid)
    hb = pair.hbar
    if pair.alpha == 1.0:
        v = grid_packet(grid, pair.brownian_packet(x_t, p_t))
        return OperatorGrid(np.outer(v, v.conj()), grid)
    xs, ps = _w_mesh(pair, mesh)
    dxm, dpm = xs[1] - xs[0], ps[1] - ps[0]
    if abs(p_t) + ps[-1] + 6 * hb / pair.brownian_width > 0.9 * grid.momentum_cutoff(hb):
        raise GridTooCoarse("displaced packets approach the grid momentum cutoff")
    cols = np.empty((grid.n, xs.size * ps.size), dtype=complex)
    wts = np.empty(xs.size * ps.size)
    i = 0
    for xv in xs:
        for pv in ps:
            cols[:, i] = grid_packet(grid, pair.brownian_packet(x_t + xv, p_t + pv))
            wts[i] = smearing_weight(pair, xv, pv) * dxm * dpm / (2 * np.pi * hb)
            i += 1
    mat = (cols * wts) @ cols.conj().T
    return OperatorGrid(0.5 * (mat + mat.conj().T), grid)


def operator_sqrt(op: OperatorGrid, clamp_tol: float = 1e-6) -> OperatorGrid:
    """Positive square root by Hermitian eigendecomposition.

    Eigenvalues in [-clamp_tol, 0) are grid noise and are clamped to zero;
    anything lower raises NegativeEigenvalueBeyondTolerance.
    """
    h = 0.5 * (op.matrix + op.matrix.conj().T)
    ev, U = np.linalg.eigh(h)
    if ev[0] < -clamp_tol:
        raise NegativeEigenvalueBeyondTolerance(
            f"eigenvalue {ev[0]:.3e} below -{clamp_tol:.1e}")
    root = (U * np.sqrt(np.clip(ev, 0.0, None))) @ U.conj().T
    return OperatorGrid(root, op.grid)


def kraus_displacement(pair: CollisionPair, gas_state, x_t: float, p_t: float):
    """Displacement arguments of the collision Kraus operator."""
    a = pair.alpha
    x_g, p_g = gas_state
    return (2 * a / (1 + a) * (x_g - x_t), 2 / (1 + a) * (p_g - a * p_t))


def build_kraus(pair: CollisionPair, gas_state, x_t: float, p_t: float,
                grid: SpatialGrid, mesh: PhaseSpaceMesh = PhaseSpaceMesh(),
                sqrt_effect_center: np.ndarray | None = None) -> OperatorGrid:
    """Collision Kraus operator: displacement composed with sqrt(effect).

    ``sqrt_effect_center`` may carry a cached sqrt of the origin-centered
    effect operator; displacement covariance supplies every other (x_t, p_t).
    """
    hb = pair.hbar
    if sqrt_effect_center is None:
        sqrt_effect_center = operator_sqrt(
            build_effect_operator(pair, 0.0, 0.0, grid, mesh)).matrix
    da, db = kraus_displacement(pair, gas_state, x_t, p_t)
    D_shift = displacement_operator(grid, da, db, hb)
    D_center = displacement_operator(grid, x_t, p_t, hb)
    root = D_center @ sqrt_effect_center @ D_center.conj().T
    return OperatorGrid(D_shift @ root, grid)


def _state_moments(rho: OperatorGrid, hbar: float):
    g = rho.grid
    dpos = np.real(np.diag(rho.matrix))
    tr = dpos.sum()
    mx = float(np.sum(g.x * dpos) / tr)
    sx = float(np.sqrt(max(np.sum((g.x - mx) ** 2 * dpos) / tr, g.dx**2)))
    mom = fft(rho.matrix, axis=0)
    mom = ifft(mom, axis=1)
    dmom = np.real(np.diag(mom))
    dmom = np.maximum(dmom, 0.0)
    ks = g.k
    mp = float(np.sum(ks * dmom) / dmom.sum() * hbar)
    sp = float(hbar * np.sqrt(max(np.sum((ks - mp / hbar) ** 2 * dmom) / dmom.sum(),
                                  (2 * np.pi / (g.n * g.dx)) ** 2)))
    return mx, sx, mp, sp


def apply_collision_channel(rho: OperatorGrid, pair: CollisionPair, gas_state,
                            t: float, mesh: PhaseSpaceMesh = PhaseSpaceMesh(),
                            pointer_mesh: PhaseSpaceMesh = PhaseSpaceMesh(6.0, 4.5),
                            ) -> OperatorGrid:
    """One full collision with the gas packet ``gas_state``, then U(t).

    The (x_t, p_t) quadrature mesh is centered on the input state's phase
    space support, widened by the smearing and packet widths.  Trace is
    preserved up to the reported mesh truncation (~1e-3 budget).
    """
    grid = rho.grid
    hb = pair.hbar
    _check_grid_resolution(pair, grid)
    wx, wp = smearing_widths(pair)
    sig = pair.brownian_width
    mx, sx, mp, sp = _state_moments(rho, hb)
    span_x = pointer_mesh.span_std * np.hypot(np.hypot(sx, sig / np.sqrt(2)), wx)
    span_p = pointer_mesh.span_std * np.hypot(np.hypot(sp, hb / (sig * np.sqrt(2))), wp)
    step_x = min(sig, sig if wx == 0 else wx) / pointer_mesh.points_per_std
    step_p = min(hb / sig, hb / sig if wp == 0 else wp) / pointer_mesh.points_per_std
    xts = np.arange(mx - span_x, mx + span_x + step_x / 2, step_x)
    pts = np.arange(mp - span_p, mp + span_p + step_p / 2, step_p)

    ev, U = np.linalg.eigh(0.5 * (rho.matrix + rho.matrix.conj().T))
    keep = ev > max(1e-12, 1e-12 * ev[-1])
    vecs = U[:, keep] * np.sqrt(ev[keep])

    sqrt_c = operator_sqrt(build_effect_operator(pair, 0.0, 0.0, grid, mesh)).matrix
    area = (xts[1] - xts[0]) * (pts[1] - pts[0])
    out_cols = []
    for x_t in xts:
        for p_t in pts:
            da, db = kraus_displacement(pair, gas_state, x_t, p_t)
            for j in range(vecs.shape[1]):
                v = displace_vector(grid, vecs[:, j], -x_t, -p_t, hb)
                v = sqrt_c @ v
                v = displace_vector(grid, v, x_t, p_t, hb)
                v = displace_vector(grid, v, da, db, hb)
                out_cols.append(v * np.sqrt(area))
    C = np.array(out_cols).T
    out = C @ C.conj().T
    if t:
        phase = np.exp(-1j * hb * grid.k**2 * t / (2 * pair.brownian_mass))
        out = ifft(phase[:, None] * fft(out, axis=0), axis=0)
        out = fft(phase.conj()[None, :] * ifft(out, axis=1), axis=1)
    return OperatorGrid(0.5 * (out + out.conj().T), grid)


# ---------------------------------------------------------------------------
# phase-space projection and collision probability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSpaceRegion:
    """Wedge 0 < (x - x_g)/(p_g/m_g - p/m) < delta of states that collide
    with the gas packet (x_g, p_g) within one coarse step."""

    x_g: float
    p_g: float
    delta: float
    brownian_mass: float
    gas_mass: float

    def relative_velocity(self, p):
        return self.p_g / self.gas_mass - np.asarray(p) / self.brownian_mass

    def contains(self, x, p):
        dv = self.relative_velocity(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = (np.asarray(x) - self.x_g) / dv
        return (dv != 0) & (tau > 0) & (tau < self.delta)


def build_projection(region: PhaseSpaceRegion, pair: CollisionPair,
                     grid: SpatialGrid, points_per_std: float = 6.0,
                     p_span_std: float = 6.0, p_center: float = 0.0) -> OperatorGrid:
    """Approximate projection onto the region: coherent integral over S.

    The momentum window is [p_center - span, p_center + span] in units of
    the packet momentum width; positions cover the grid interior.  Raises
    EmptyRegion when no mesh node lands inside S.
    """
    hb = pair.hbar
    sig = pair.brownian_width
    step_x = sig / points_per_std
    step_p = hb / sig / points_per_std
    margin = 6 * sig
    xs = np.arange(grid.x[0] + margin, grid.x[-1] - margin + step_x / 2, step_x)
    p_half = p_span_std * hb / sig + abs(region.p_g / region.gas_mass) * pair.brownian_mass
    ps = np.arange(p_center - p_half, p_center + p_half + step_p / 2, step_p)
    XX, PP = np.meshgrid(xs, ps, indexing="ij")
    inside = region.contains(XX, PP)
    if not inside.any():
        raise EmptyRegion("no phase-space mesh nodes inside the region")
    nodes = np.argwhere(inside)
    cols = np.empty((grid.n, len(nodes)), dtype=complex)
    for i, (ix, ip) in enumerate(nodes):
        cols[:, i] = grid_packet(grid, pair.brownian_packet(xs[ix], ps[ip]))
    weight = step_x * step_p / (2 * np.pi * hb)
    mat = weight * (cols @ cols.conj().T)
    return OperatorGrid(0.5 * (mat + mat.conj().T), grid)


def collision_probability(rho: OperatorGrid, region: PhaseSpaceRegion,
                          gas: ThermalGasSpec, gamma: OperatorGrid | None = None,
                          pair: CollisionPair | None = None) -> float:
    """Collision probability density n_g mu(p_g) Tr[rho Gamma_delta].

    This is a density over the gas labels (x_g, p_g); integrate it over
    both to obtain the total collision probability (see
    :func:`total_collision_probability` for the closed-form reduction).
    """
    if gamma is None:
        if pair is None:
            raise ValueError("supply either gamma or pair to build it")
        gamma = build_projection(region, pair, rho.grid)
    mu = float(momentum_weight(gas, region.p_g))
    val = float(np.real(np.trace(rho.matrix @ gamma.matrix)))
    return gas.number_density * mu * val


def aggregate_rate_operator(pair: CollisionPair, gas: ThermalGasSpec,
                            grid: SpatialGrid, points_per_std: float = 6.0,
                            p_span_std: float = 8.0) -> OperatorGrid:
    """Total collision rate operator R = P_delta / delta.

    The gas-label integral of the probability operators reduces exactly to
    a coherent smearing of the flux function n_g E|p_g/m_g - p/m| (the
    x_g-integral of the wedge has measure delta * |relative velocity|), so
    R does not depend on delta.
    """
    hb = pair.hbar
    sig = pair.brownian_width
    m = pair.brownian_mass
    t_adj = adjusted_temperature(gas)
    step_x = sig / points_per_std
    step_p = hb / sig / points_per_std
    margin = 6 * sig
    xs = np.arange(grid.x[0] + margin, grid.x[-1] - margin + step_x / 2, step_x)
    p_half = p_span_std * max(hb / sig, np.sqrt(m * gas.kT) if m * gas.kT > 0 else 0)
    ps = np.arange(-p_half, p_half + step_p / 2, step_p)
    flux = mean_relative_speed(gas, ps, m, temperature=t_adj)
    mat = np.zeros((grid.n, grid.n), dtype=complex)
    weight = step_x * step_p / (2 * np.pi * hb)
    for pv, fl in zip(ps, flux):
        cols = np.empty((grid.n, xs.size), dtype=complex)
        for i, xv in enumerate(xs):
            cols[:, i] = grid_packet(grid, pair.brownian_packet(xv, pv))
        mat += (gas.number_density * fl * weight) * (cols @ cols.conj().T)
    return OperatorGrid(0.5 * (mat + mat.conj().T), grid)


def total_collision_probability(rho: OperatorGrid, pair: CollisionPair,
                                gas: ThermalGasSpec, delta: float,
                                rate_op: OperatorGrid | None = None) -> float:
    """Tr[rho P_delta] with P_delta integrated over all gas labels."""
    if rate_op is None:
        rate_op = aggregate_rate_operator(pair, gas, rho.grid)
    return delta * float(np.real(np.trace(rho.matrix @ rate_op.matrix)))
