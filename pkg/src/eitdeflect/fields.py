"""External-field models and the position-dependent susceptibility.

Each atom-sized cell of the gas sees the pointwise response of
:mod:`eitdeflect.medium` evaluated with its local detunings and local
control Rabi frequency. :class:`SusceptibilityField` assembles that into
chi(r) and its gradient.

Points are arrays whose last axis has length 3, ``(x, y, z)`` in metres.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .constants import HBAR, MU_B
from .errors import ConfigInvalid, OutOfCell
from .medium import AtomicMedium, Detunings, chi_full

FD_STEP_FLOOR = 1e-9
FD_STEP_DIVISOR = 1e4

# kernel kinds understood by eitdeflect._kernels
KIND_LINEAR = 0
KIND_GAUSS_FIRST = 1
KIND_GAUSS_FULL = 2
KIND_MAG_FULL = 3


class Order(enum.Enum):
    FIRST = "first"  # chi0*Gamma*delta/rabi**2
    FULL = "full"  # real part of the complete linear response

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigInvalid(f"order must be 'first' or 'full', got {value!r}") from None


def _xyz(r):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise ValueError(f"points need a trailing axis of length 3, got shape {r.shape}")
    return r[..., 0], r[..., 1], r[..., 2]


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True)
class GaussianControlField:
    """Control beam with Rabi profile rabi_peak*exp(-(x^2+y^2)/sigma^2) and no magnetic field."""

    rabi_peak: float
    sigma: float
    delta_two_photon: float
    delta_one_photon: float = 0.0

    def __post_init__(self):
        if not self.rabi_peak > 0 or not self.sigma > 0:
            raise ConfigInvalid("GaussianControlField needs rabi_peak > 0 and sigma > 0")

    def rabi_at(self, r):
        x, y, _ = _xyz(r)
        return _scalar(self.rabi_peak * np.exp(-(x * x + y * y) / self.sigma**2))

    def two_photon_detuning_at(self, r):
        x, _, _ = _xyz(r)
        return _scalar(np.full_like(x, self.delta_two_photon))

    def one_photon_detuning_at(self, r):
        x, _, _ = _xyz(r)
        return _scalar(np.full_like(x, self.delta_one_photon))


@dataclass(frozen=True)
class LinearMagneticField:
    """Uniform control beam in a field B_z = b0 + b1*x.

    The Zeeman shift of the two-photon detuning is ``lande_g*mu_B*B/hbar``.
    """

    b0: float
    b1: float
    rabi_uniform: float
    omega_minus_omega_prime: float
    delta_one_photon: float = 0.0
    lande_g: float = 1.0

    def __post_init__(self):
        if not self.rabi_uniform > 0:
            raise ConfigInvalid("LinearMagneticField needs rabi_uniform > 0")

    @classmethod
    def resonant_at_origin(cls, b0, b1, rabi_uniform, delta_one_photon=0.0, lande_g=1.0):
        """Pick omega - omega' so that the two-photon detuning vanishes at x = 0."""
        rate = lande_g * MU_B / HBAR
        return cls(b0, b1, rabi_uniform, rate * b0, delta_one_photon, lande_g)

    @property
    def zeeman_rate(self) -> float:
        """Angular-frequency shift per tesla, rad/(s*T)."""
        return self.lande_g * MU_B / HBAR

    @property
    def detuning_slope(self) -> float:
        """d(delta)/dx in rad/(s*m)."""
        return -self.zeeman_rate * self.b1

    @property
    def detuning_at_origin(self) -> float:
        return self.omega_minus_omega_prime - self.zeeman_rate * self.b0

    def rabi_at(self, r):
        x, _, _ = _xyz(r)
        return _scalar(np.full_like(x, self.rabi_uniform))

    def two_photon_detuning_at(self, r):
        x, _, _ = _xyz(r)
        return _scalar(self.omega_minus_omega_prime - self.zeeman_rate * (self.b0 + self.b1 * x))

    def one_photon_detuning_at(self, r):
        x, _, _ = _xyz(r)
        return _scalar(np.full_like(x, self.delta_one_photon))


@dataclass(frozen=True)
class ConstantGradientField:
    """Prescribed affine susceptibility chi_ref + gradient . (r - origin).

    With a zero gradient this is a uniform medium. Used for oracle checks
    of the tracer; the medium order setting has no effect on it.
    """

    chi_ref: float = 0.0
    gradient: tuple = (0.0, 0.0, 0.0)
    origin: tuple = (0.0, 0.0, 0.0)


FieldConfiguration = Union[GaussianControlField, LinearMagneticField, ConstantGradientField]


def rabi_at(f: FieldConfiguration, r):
    """Local control Rabi frequency (rad/s)."""
    return f.rabi_at(r)


def two_photon_detuning_at(f: FieldConfiguration, r):
    """Local two-photon detuning (rad/s)."""
    return f.two_photon_detuning_at(r)


@dataclass(frozen=True)
class CellGeometry:
    """Gas cell occupying 0 <= z <= length_L, |x| <= half_width_x, |y| <= half_width_y."""

    length_L: float
    half_width_x: float
    half_width_y: float

    def __post_init__(self):
        if not (self.length_L > 0 and self.half_width_x > 0 and self.half_width_y > 0):
            raise ConfigInvalid("cell dimensions must be positive")

    @classmethod
    def default_for(cls, config: FieldConfiguration, length_L: float) -> "CellGeometry":
        """2*sigma transverse half-width for a Gaussian beam, 0.05*L otherwise."""
        if isinstance(config, GaussianControlField):
            hw = 2.0 * config.sigma
        else:
            hw = 0.05 * length_L
        return cls(length_L, hw, hw)

    def contains(self, r, pad: float = 0.0):
        x, y, z = _xyz(r)
        inside = (
            (np.abs(x) <= self.half_width_x + pad)
            & (np.abs(y) <= self.half_width_y + pad)
            & (z >= -pad)
            & (z <= self.length_L + pad)
        )
        return bool(inside) if np.ndim(inside) == 0 else inside


@dataclass(frozen=True)
class SusceptibilityField:
    """chi(r) for a medium in a given external-field configuration.

    ``order`` selects the first-order transparency-window formula or the
    real part of the full response. When ``cell`` is set, evaluation
    outside the cell (padded by one finite-difference step) raises
    :class:`OutOfCell`.
    """

    medium: AtomicMedium
    config: FieldConfiguration
    order: Order = Order.FIRST
    cell: CellGeometry | None = None
    _fd_step: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "order", Order.parse(self.order))
        object.__setattr__(self, "_fd_step", self._choose_fd_step())

    def _choose_fd_step(self) -> float:
        cfg = self.config
        if isinstance(cfg, GaussianControlField):
            scale = cfg.sigma
        elif isinstance(cfg, LinearMagneticField):
            slope = abs(cfg.detuning_slope)
            if slope == 0:
                scale = 1.0
            elif cfg.detuning_at_origin != 0:
                scale = abs(cfg.detuning_at_origin) / slope
            else:
                # distance over which delta sweeps one linewidth
                scale = self.medium.Gamma / slope
            scale = min(scale, 1.0)
        else:
            scale = 1.0
        return max(scale / FD_STEP_DIVISOR, FD_STEP_FLOOR)

    @property
    def fd_step(self) -> float:
        return self._fd_step

    def _check(self, r):
        if self.cell is not None and not np.all(self.cell.contains(r, pad=self._fd_step)):
            raise OutOfCell("point outside the gas cell")

    def _local(self, r):
        cfg = self.config
        return cfg.one_photon_detuning_at(r), cfg.two_photon_detuning_at(r), cfg.rabi_at(r)

    def _chi_unchecked(self, r):
        cfg = self.config
        m = self.medium
        if isinstance(cfg, ConstantGradientField):
            g = np.asarray(cfg.gradient, dtype=float)
            dr = np.asarray(r, dtype=float) - np.asarray(cfg.origin, dtype=float)
            return cfg.chi_ref + dr @ g
        Delta, delta, rabi = self._local(r)
        if self.order is Order.FIRST:
            return m.chi0 * m.Gamma * np.asarray(delta) / np.asarray(rabi) ** 2
        return np.real(chi_full(m, Detunings(Delta, delta), rabi))

    def chi_at(self, r):
        """Real susceptibility at ``r``."""
        self._check(r)
        return _scalar(self._chi_unchecked(r))

    def imag_chi_at(self, r):
        """Im chi from the full response with local parameters (zero for prescribed fields)."""
        self._check(r)
        if isinstance(self.config, ConstantGradientField):
            return _scalar(np.zeros(np.shape(r)[:-1]))
        Delta, delta, rabi = self._local(r)
        return _scalar(np.imag(chi_full(self.medium, Detunings(Delta, delta), rabi)))

    def fd_gradient(self, r, h: float | None = None):
        """Second-order central-difference gradient of :meth:`chi_at`."""
        h = self._fd_step if h is None else h
        r = np.asarray(r, dtype=float)
        grad = np.empty(r.shape)
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            grad[..., axis] = (self._chi_unchecked(r + step) - self._chi_unchecked(r - step)) / (2 * h)
        return grad

    def grad_chi_at(self, r):
        """Gradient of chi in 1/m; analytic where a closed form exists."""
        self._check(r)
        cfg = self.config
        m = self.medium
        r = np.asarray(r, dtype=float)
        if isinstance(cfg, ConstantGradientField):
            return np.broadcast_to(np.asarray(cfg.gradient, dtype=float), r.shape).copy()
        if self.order is Order.FULL:
            return self.fd_gradient(r)
        grad = np.zeros(r.shape)
        if isinstance(cfg, GaussianControlField):
            chi = self._chi_unchecked(r)
            grad[..., 0] = chi * 4.0 * r[..., 0] / cfg.sigma**2
            grad[..., 1] = chi * 4.0 * r[..., 1] / cfg.sigma**2
        else:
            grad[..., 0] = m.chi0 * m.Gamma * cfg.detuning_slope / cfg.rabi_uniform**2
        return grad

    def kernel_spec(self):
        """``(kind, params)`` describing this field to the compiled tracer."""
        cfg = self.config
        m = self.medium
        if isinstance(cfg, ConstantGradientField):
            g = np.asarray(cfg.gradient, dtype=float)
            o = np.asarray(cfg.origin, dtype=float)
            return KIND_LINEAR, np.array([cfg.chi_ref, *g, *o])
        if isinstance(cfg, GaussianControlField):
            if self.order is Order.FIRST:
                amp = m.chi0 * m.Gamma * cfg.delta_two_photon / cfg.rabi_peak**2
                return KIND_GAUSS_FIRST, np.array([amp, cfg.sigma])
            return KIND_GAUSS_FULL, np.array(
                [m.chi0, m.Gamma, cfg.delta_one_photon, cfg.delta_two_photon,
                 cfg.rabi_peak, cfg.sigma, self._fd_step]
            )
        if self.order is Order.FIRST:
            # affine in x
            scale = m.chi0 * m.Gamma / cfg.rabi_uniform**2
            return KIND_LINEAR, np.array(
                [scale * cfg.detuning_at_origin, scale * cfg.detuning_slope, 0.0, 0.0, 0.0, 0.0, 0.0]
            )
        return KIND_MAG_FULL, np.array(
            [m.chi0, m.Gamma, cfg.delta_one_photon, cfg.detuning_at_origin,
             cfg.detuning_slope, cfg.rabi_uniform, self._fd_step]
        )


__all__ = [
    "CellGeometry",
    "ConstantGradientField",
    "FieldConfiguration",
    "GaussianControlField",
    "LinearMagneticField",
    "Order",
    "SusceptibilityField",
    "rabi_at",
    "two_photon_detuning_at",
]
