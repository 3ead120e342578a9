"""Geometric-optics ray tracing through a weakly inhomogeneous gas.

With n = 1 + chi/2 the ray equation in arclength s reads

    r'' + (grad(chi)/2 . r') r' = grad(chi)/2,

integrated here as a first-order system in (r, t = r') with fixed-step
classical RK4. Only Re chi bends the ray; Im chi is integrated separately
into an optional absorbance diagnostic.

For a constant transverse gradient grad(chi)/2 = e_x/eta two closed forms
are provided:

* :func:`analytic_path` -- x = x0 + eta*ln cosh(s/eta), z = eta*sinh(s/eta),
  with exit slope (L/eta)/(1 + L^2/eta^2). Its x(s) is exact but its z(s)
  is not unit-speed, so it departs from the true ray at O((s/eta)^3).
* :func:`constant_gradient_path` -- the exact solution of the equation
  above: same x(s), z = eta*gd(s/eta), exit slope tan(L/eta).
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import _kernels
from .errors import (
    GradientNotAxial,
    NoZExit,
    NonUnitDirection,
    NumericalGuardError,
    StartOutsideCell,
    StepSizeInvalid,
    ZeroGradient,
)
from .fields import CellGeometry, SusceptibilityField

DEFAULT_STEPS_PER_LENGTH = 100_000
CHUNK = 1 << 17


class ExitFace(enum.Enum):
    Z_END = "z_end"
    LATERAL = "lateral"  # side walls, or back through z = 0
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class TraceOptions:
    """Integrator settings; ``step=None`` means L/1e5."""

    step: float | None = None
    max_steps: int = 10_000_000
    frozen_gradient: bool = False
    track_absorption: bool = False


@dataclass(frozen=True)
class RayState:
    position: np.ndarray
    direction: np.ndarray
    arclength: float
    accumulated_absorbance: float | None = None


@dataclass
class Trajectory:
    """Sampled ray: one row per accepted RK4 step, starting at the launch point."""

    s: np.ndarray
    positions: np.ndarray
    directions: np.ndarray
    exit_face: ExitFace
    absorbance: np.ndarray | None = None
    max_direction_drift: float = 0.0

    def __len__(self):
        return len(self.s)

    def __getitem__(self, i) -> RayState:
        a = None if self.absorbance is None else float(self.absorbance[i])
        return RayState(self.positions[i].copy(), self.directions[i].copy(), float(self.s[i]), a)

    @property
    def samples(self) -> list[RayState]:
        return [self[i] for i in range(len(self))]

    @property
    def exit_state(self) -> RayState:
        return self[-1]

    def x_of_z(self, z):
        """Transverse position interpolated at the given z-planes (monotone z assumed)."""
        zs = self.positions[:, 2]
        return np.interp(z, zs, self.positions[:, 0]), np.interp(z, zs, self.positions[:, 1])


@dataclass(frozen=True)
class EtaGradient:
    """Signed length eta with grad(chi)/2 = e_x / eta."""

    eta: float

    @property
    def inverse(self) -> float:
        return 1.0 / self.eta


def trace(
    field: SusceptibilityField,
    geom: CellGeometry,
    r0,
    dir0,
    opts: TraceOptions | None = None,
) -> Trajectory:
    """Integrate one ray from ``r0`` along unit vector ``dir0`` until it leaves the cell.

    The final step is shortened so an exiting ray lands on z = L. When
    ``opts.frozen_gradient`` is set, grad(chi) is evaluated once at ``r0``
    and held fixed along the path.
    """
    opts = opts or TraceOptions()
    r0 = np.asarray(r0, dtype=float)
    dir0 = np.asarray(dir0, dtype=float)
    h = geom.length_L / DEFAULT_STEPS_PER_LENGTH if opts.step is None else float(opts.step)
    if not (math.isfinite(h) and h > 0):
        raise StepSizeInvalid(f"step must be positive and finite, got {h!r}")
    if abs(np.linalg.norm(dir0) - 1.0) > 1e-9:
        raise NonUnitDirection(f"|dir0| = {np.linalg.norm(dir0)!r}")
    if not geom.contains(r0) or r0[2] >= geom.length_L:
        raise StartOutsideCell(f"start point {r0} is not inside the cell")

    kind, params = field.kernel_spec()
    if opts.frozen_gradient:
        g0 = 0.5 * np.asarray(field.grad_chi_at(r0), dtype=float)
    else:
        g0 = np.zeros(3)

    state = np.concatenate([r0, dir0])
    s_chunks = [np.zeros(1)]
    u_chunks = [state[None, :].copy()]
    s = 0.0
    drift = 0.0
    taken = 0
    status = _kernels.STATUS_RUNNING
    while taken < opts.max_steps:
        n = min(CHUNK, opts.max_steps - taken)
        out_s = np.empty(n)
        out_u = np.empty((n, 6))
        count, status, s, d = _kernels.rk4_run(
            kind, params, opts.frozen_gradient, g0, state, s, h,
            geom.length_L, geom.half_width_x, geom.half_width_y, n, out_s, out_u,
        )
        drift = max(drift, d)
        taken += count
        s_chunks.append(out_s[:count])
        u_chunks.append(out_u[:count])
        if status != _kernels.STATUS_RUNNING:
            break
    if status == _kernels.STATUS_NONFINITE:
        raise NumericalGuardError("ray state became non-finite (field overflow along the path)")

    face = {
        _kernels.STATUS_Z_EXIT: ExitFace.Z_END,
        _kernels.STATUS_LATERAL: ExitFace.LATERAL,
    }.get(status, ExitFace.MAX_STEPS)
    u = np.concatenate(u_chunks)
    traj = Trajectory(
        s=np.concatenate(s_chunks),
        positions=u[:, :3].copy(),
        directions=u[:, 3:].copy(),
        exit_face=face,
        max_direction_drift=drift,
    )
    if opts.track_absorption:
        traj.absorbance = absorbance_along(field, traj)
    return traj


def absorbance_along(field: SusceptibilityField, traj: Trajectory) -> np.ndarray:
    """Cumulative optical depth k * integral(Im chi ds) along the sampled path."""
    unbounded = dataclasses.replace(field, cell=None)
    im = np.asarray(unbounded.imag_chi_at(traj.positions), dtype=float)
    return field.medium.wavenumber * cumulative_trapezoid(im, traj.s, initial=0.0)


def deflection_angle(traj: Trajectory) -> float:
    """Exit slope t_x / t_z of a ray that left through z = L."""
    if traj.exit_face is not ExitFace.Z_END:
        raise NoZExit(f"ray did not reach z = L (exit face: {traj.exit_face.value})")
    t = traj.directions[-1]
    return float(t[0] / t[2])


def eta_at_incidence(field: SusceptibilityField, r_i) -> EtaGradient:
    """eta = 2 / (d chi/dx) at ``r_i``; the gradient there must point along x."""
    g = np.asarray(field.grad_chi_at(r_i), dtype=float)
    gx, gy, gz = g
    if gx == 0.0 and gy == 0.0 and gz == 0.0:
        raise ZeroGradient(f"grad chi vanishes at {r_i}")
    if not (abs(gy) < 1e-6 * abs(gx) and abs(gz) < 1e-6 * abs(gx)):
        raise GradientNotAxial(f"grad chi at {r_i} is not along x: {g}")
    return EtaGradient(2.0 / gx)


def _as_eta(eta) -> float:
    eta = eta.eta if isinstance(eta, EtaGradient) else float(eta)
    if eta == 0 or not math.isfinite(eta):
        raise ValueError("eta must be finite and nonzero")
    return eta


def analytic_path(eta, x0, s):
    """cosh/sinh closed form (x0 + eta ln cosh(s/eta), 0, eta sinh(s/eta)); last axis is xyz."""
    eta = _as_eta(eta)
    u = np.asarray(s, dtype=float) / eta
    if np.any(np.abs(u) >= 700):
        raise OverflowError("|s/eta| >= 700")
    return np.stack([x0 + eta * np.log(np.cosh(u)), np.zeros_like(u), eta * np.sinh(u)], axis=-1)


def analytic_exit_angle(length, eta) -> float:
    """(L/eta) / (1 + L^2/eta^2), the exit slope of :func:`analytic_path`."""
    q = length / _as_eta(eta)
    return q / (1.0 + q * q)


def constant_gradient_path(eta, x0, s):
    """Exact ray for grad(chi)/2 = e_x/eta launched along +z from (x0, 0, 0)."""
    eta = _as_eta(eta)
    u = np.asarray(s, dtype=float) / eta
    if np.any(np.abs(u) >= 700):
        raise OverflowError("|s/eta| >= 700")
    gd = 2.0 * np.arctan(np.tanh(0.5 * u))
    return np.stack([x0 + eta * np.log(np.cosh(u)), np.zeros_like(u), eta * gd], axis=-1)


def constant_gradient_exit_angle(length, eta) -> float:
    """tan(L/eta): the ray turns by exactly dz/eta per unit z."""
    return math.tan(length / _as_eta(eta))
