"""Thermal ideal-gas ensemble as a mixture of Gaussian packets.

A thermal gas particle at temperature T is statistically identical to a
mixture of minimum-uncertainty packets of width sigma_g whose centers are
uniform in space and whose label momenta follow a Gaussian at the reduced
temperature

    T_sigma = T - hbar^2 / (2 m_g k_B sigma_g^2).

The packet's internal momentum spread hbar^2/(2 sigma_g^2) restores exactly
what the label distribution lacks, so the physical momentum distribution is
the sigma_g-independent Maxwell-Boltzmann law at T:

    m_g k_B T_sigma + hbar^2/(2 sigma_g^2) = m_g k_B T.

The infinite normalization length of the homogeneous mixture is replaced by
a caller-supplied finite window; physical rates depend only on the number
density, so the window cancels everywhere it should.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.special import erf

from .errors import EmptyWindow, NonPositiveAdjustedTemperature

__all__ = [
    "ThermalGasSpec",
    "adjusted_temperature",
    "momentum_weight",
    "sample_gas_state",
    "sample_mixture_momentum",
    "mean_relative_speed",
]


@dataclass(frozen=True)
class ThermalGasSpec:
    """Thermal gas parameters: T in energy/k_B units, n_g per length."""

    temperature: float
    number_density: float
    gas_mass: float
    packet_width: float
    hbar: float = 1.0
    k_B: float = 1.0

    def __post_init__(self):
        for name in ("temperature", "number_density", "gas_mass", "packet_width",
                     "hbar", "k_B"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def kT(self) -> float:
        return self.k_B * self.temperature

    @property
    def thermal_momentum(self) -> float:
        """sqrt(m_g k_B T), the Maxwell-Boltzmann momentum scale."""
        return np.sqrt(self.gas_mass * self.kT)


def adjusted_temperature(spec: ThermalGasSpec) -> float:
    """Width-adjusted temperature T_sigma of the packet-label momenta.

    Raises NonPositiveAdjustedTemperature when the packet is too narrow
    (or the gas too cold) for the Gaussian mixture to exist.
    """
    t_adj = spec.temperature - spec.hbar**2 / (
        2 * spec.gas_mass * spec.k_B * spec.packet_width**2
    )
    if t_adj <= 0:
        raise NonPositiveAdjustedTemperature(
            f"T_sigma = {t_adj!r} <= 0; enlarge packet_width or raise temperature"
        )
    return t_adj


def momentum_weight(spec: ThermalGasSpec, p_g) -> np.ndarray:
    """Label-momentum density mu(p_g): Gaussian with variance m_g k_B T_sigma."""
    var = spec.gas_mass * spec.k_B * adjusted_temperature(spec)
    p_g = np.asarray(p_g)
    return np.exp(-(p_g**2) / (2 * var)) / np.sqrt(2 * np.pi * var)


def sample_gas_state(spec: ThermalGasSpec, window, rng):
    """Draw one (x_g, p_g) packet label from the mixture restricted to window.

    ``window`` is an (x_lo, x_hi) interval; the position is uniform on it and
    the momentum is a Gaussian draw at T_sigma.  Deterministic given ``rng``.
    """
    x_lo, x_hi = float(window[0]), float(window[1])
    if not np.isfinite(x_lo) or not np.isfinite(x_hi) or x_hi <= x_lo:
        raise EmptyWindow(f"window ({x_lo}, {x_hi}) is empty or not finite")
    std = np.sqrt(spec.gas_mass * spec.k_B * adjusted_temperature(spec))
    x_g = rng.uniform(x_lo, x_hi)
    p_g = rng.normal(0.0, std)
    return x_g, p_g


def sample_mixture_momentum(spec: ThermalGasSpec, rng, size=None):
    """Physical gas momentum: packet label plus internal packet spread.

    The sum is exactly Maxwell-Boltzmann at T, independent of sigma_g.
    """
    label_std = np.sqrt(spec.gas_mass * spec.k_B * adjusted_temperature(spec))
    internal_std = spec.hbar / (np.sqrt(2) * spec.packet_width)
    return rng.normal(0.0, label_std, size) + rng.normal(0.0, internal_std, size)


def mean_relative_speed(spec: ThermalGasSpec, p, mass, temperature=None):
    """E|p_g/m_g - p/m| for Gaussian gas momenta, closed form.

    Defaults to the mixture's full-T Maxwell-Boltzmann distribution;
    pass ``temperature=adjusted_temperature(spec)`` to integrate over the
    packet-label distribution instead.  Multiplied by n_g this is the
    collision rate of a particle of momentum p and mass ``mass``.
    Vectorized over p (folded normal mean).
    """
    kT = spec.k_B * (spec.temperature if temperature is None else temperature)
    su = np.sqrt(kT / spec.gas_mass)            # gas velocity std
    v = np.asarray(p) / mass
    return (su * np.sqrt(2 / np.pi) * np.exp(-(v**2) / (2 * su**2))
            + v * erf(v / (np.sqrt(2) * su)))
