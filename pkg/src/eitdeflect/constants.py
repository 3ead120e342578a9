"""Physical constants and default atomic data.

CODATA values come from :mod:`scipy.constants`. The rubidium table holds the
D1-line numbers used as defaults everywhere; override them through
:class:`eitdeflect.medium.AtomicMedium` or the scenario config.
"""

import math

from scipy import constants as _sc

EPSILON_0 = _sc.epsilon_0
HBAR = _sc.hbar
C_LIGHT = _sc.c
MU_B = _sc.physical_constants["Bohr magneton"][0]

TWO_PI = 2.0 * math.pi

# 87Rb D1 line (closed three-level reduction)
RB87_D1 = {
    "Gamma": TWO_PI * 5.746e6,  # total decay of |a>, rad/s
    "dipole_Cm": 2.537e-29,
    "wavelength_m": 794.978851e-9,
}


def hz_to_angular(f_hz):
    """Convert an ordinary frequency in Hz to rad/s."""
    return TWO_PI * f_hz


def wavelength_to_angular(wavelength_m):
    return TWO_PI * C_LIGHT / wavelength_m
