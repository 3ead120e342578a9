"""Pointwise optical response of a Lambda-type three-level gas.

All frequencies, detunings, decay rates and Rabi frequencies are angular
(rad/s). The control Rabi frequency is the symbol that competes with
``4*Delta*delta`` in the susceptibility; no half/full Rabi convention is
imposed on top of that.

The functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, EPSILON_0, HBAR, RB87_D1, wavelength_to_angular
from .errors import ChiTooLarge, ConfigInvalid, DegenerateDenominator, GuardViolated, ZeroRabi

# denominators below DEGENERATE_SCALE * Gamma**4 are treated as exactly zero
DEGENERATE_SCALE = 1e-30


@dataclass(frozen=True)
class AtomicMedium:
    """Gas parameters fixing the susceptibility prefactor.

    Attributes
    ----------
    density_N : float
        Number density in atoms/m^3.
    dipole_dab : float
        |d_ab| in C*m.
    gamma, gamma_prime : float
        Radiative decay rates a->b and a->c in rad/s.
    signal_omega : float
        Signal angular frequency in rad/s.
    """

    density_N: float
    dipole_dab: float
    gamma: float
    gamma_prime: float
    signal_omega: float

    def __post_init__(self):
        for name in ("density_N", "dipole_dab", "gamma", "gamma_prime", "signal_omega"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigInvalid(f"{name} must be finite and > 0, got {value!r}")

    @classmethod
    def rb87_d1(cls, density_per_cm3: float = 1e12, **overrides) -> "AtomicMedium":
        """Rb-87 D1 defaults; total decay split evenly between the two lower levels."""
        Gamma = RB87_D1["Gamma"]
        params = dict(
            density_N=density_per_cm3 * 1e6,
            dipole_dab=RB87_D1["dipole_Cm"],
            gamma=Gamma / 2,
            gamma_prime=Gamma / 2,
            signal_omega=wavelength_to_angular(RB87_D1["wavelength_m"]),
        )
        params.update(overrides)
        return cls(**params)

    @property
    def Gamma(self) -> float:
        return self.gamma + self.gamma_prime

    @property
    def chi0(self) -> float:
        """4 N |d_ab|^2 / (eps0 hbar Gamma), dimensionless."""
        return 4.0 * self.density_N * self.dipole_dab**2 / (EPSILON_0 * HBAR * self.Gamma)

    @property
    def wavenumber(self) -> float:
        return self.signal_omega / C_LIGHT


@dataclass(frozen=True)
class Detunings:
    """One-photon detuning ``Delta`` and two-photon detuning ``delta`` (rad/s)."""

    delta_one_photon: float
    delta_two_photon: float


def chi_full(m: AtomicMedium, d: Detunings, rabi):
    """Complex linear susceptibility for a weak signal field.

    Returns ``chi0*Gamma*delta*(D + 2j*delta*Gamma) / (D**2 + 4*delta**2*Gamma**2)``
    with ``D = rabi**2 - 4*Delta*delta``. The imaginary part is non-negative
    for every real input (passive medium).
    """
    Delta = np.asarray(d.delta_one_photon, dtype=float)
    delta = np.asarray(d.delta_two_photon, dtype=float)
    rabi = np.asarray(rabi, dtype=float)
    if np.any(rabi < 0):
        raise ConfigInvalid("rabi must be >= 0")
    Gamma = m.Gamma
    D = rabi**2 - 4.0 * Delta * delta
    denom = D**2 + 4.0 * delta**2 * Gamma**2
    if np.any(denom <= DEGENERATE_SCALE * Gamma**4):
        raise DegenerateDenominator(
            "susceptibility denominator vanishes (delta = 0 with zero control field)"
        )
    chi = m.chi0 * Gamma * delta * (D + 2j * delta * Gamma) / denom
    return chi if chi.ndim else complex(chi)


def chi_first_order(m: AtomicMedium, delta_two_photon, rabi):
    """Real susceptibility deep inside the transparency window, chi0*Gamma*delta/rabi**2."""
    rabi = np.asarray(rabi, dtype=float)
    if np.any(rabi == 0):
        raise ZeroRabi("first-order susceptibility needs a nonzero control field")
    chi = m.chi0 * m.Gamma * np.asarray(delta_two_photon, dtype=float) / rabi**2
    return chi if chi.ndim else float(chi)


def refraction_index(chi, threshold: float = 0.1):
    """n = 1 + Re(chi)/2, valid only while |chi| stays small."""
    chi = np.asarray(chi)
    if np.any(np.abs(chi) >= threshold):
        raise ChiTooLarge(f"|chi| >= {threshold}; n ~ 1 + chi/2 is not valid")
    n = 1.0 + 0.5 * np.real(chi)
    return n if n.ndim else float(n)


def group_velocity_guard_ratio(m: AtomicMedium, rabi: float) -> float:
    """chi0*Gamma*omega/(2*rabi**2); must be >> 1 for :func:`group_velocity`."""
    return m.chi0 * m.Gamma * m.signal_omega / (2.0 * rabi**2)


def group_velocity(m: AtomicMedium, rabi: float, guard: float = 10.0) -> float:
    """Slow-light group velocity (c/omega) * 2 rabi^2 / (chi0 Gamma) in m/s.

    Raises :class:`GuardViolated` if the dispersive term does not dominate,
    i.e. when ``chi0*Gamma*omega/(2*rabi**2) <= guard``.
    """
    if rabi <= 0:
        raise ZeroRabi("group velocity needs a nonzero control field")
    ratio = group_velocity_guard_ratio(m, rabi)
    if ratio <= guard:
        raise GuardViolated(f"dispersion ratio {ratio:.3g} not >> 1 (guard {guard})")
    return (C_LIGHT / m.signal_omega) * 2.0 * rabi**2 / (m.chi0 * m.Gamma)
