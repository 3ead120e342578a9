import math

import numpy as np
import pytest

from eitdeflect.errors import (
    GradientNotAxial,
    NoZExit,
    NonUnitDirection,
    StartOutsideCell,
    StepSizeInvalid,
    ZeroGradient,
)
from eitdeflect.fields import CellGeometry, ConstantGradientField, GaussianControlField, LinearMagneticField, Order, SusceptibilityField
from eitdeflect.medium import Detunings, chi_full
from eitdeflect.raytracer import (
    EtaGradient,
    ExitFace,
    TraceOptions,
    analytic_exit_angle,
    analytic_path,
    constant_gradient_exit_angle,
    constant_gradient_path,
    deflection_angle,
    eta_at_incidence,
    trace,
)

L = 0.05
Z = np.array([0.0, 0.0, 1.0])


def gradient_setup(rb, q, x0=0.0):
    eta = L / q
    fld = SusceptibilityField(rb, ConstantGradientField(0.0, (2.0 / eta, 0.0, 0.0)))
    geom = CellGeometry(L, 0.5 * L, 0.5 * L)
    return fld, geom, eta, np.array([x0, 0.0, 0.0])


def test_eta_gradient():
    e = EtaGradient(-4.0)
    assert e.inverse == -0.25


@pytest.mark.parametrize("q", [1e-4, 1e-3, 1e-2, 1e-1])
def test_matches_exact_constant_gradient_ray(rb, q):
    fld, geom, eta, r0 = gradient_setup(rb, q, x0=1e-3)
    traj = trace(fld, geom, r0, Z)
    assert traj.exit_face is ExitFace.Z_END
    exact = constant_gradient_path(eta, 1e-3, traj.s)
    err = np.max(np.linalg.norm(traj.positions - exact, axis=1))
    assert err < 1e-9 * L
    assert traj.positions[-1, 2] == pytest.approx(L, abs=1e-14)
    assert deflection_angle(traj) == pytest.approx(constant_gradient_exit_angle(L, eta), rel=1e-10, abs=1e-15)


def test_eta_at_incidence_on_constant_gradient(rb):
    fld, _, eta, r0 = gradient_setup(rb, 0.01)
    assert eta_at_incidence(fld, r0).eta == pytest.approx(eta, rel=1e-14)


def test_frozen_gradient_is_exact_for_affine_chi(rb):
    fld, geom, _, r0 = gradient_setup(rb, 0.05)
    a = trace(fld, geom, r0, Z)
    b = trace(fld, geom, r0, Z, TraceOptions(frozen_gradient=True))
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-15)


def test_step_halving_reduces_error_sixteenfold(rb):
    fld, geom, eta, r0 = gradient_setup(rb, 0.3)
    exact = constant_gradient_exit_angle(L, eta)
    errs = [abs(deflection_angle(trace(fld, geom, r0, Z, TraceOptions(step=L / n))) - exact) for n in (10, 20, 40)]
    assert errs[0] / errs[1] > 12
    assert errs[1] / errs[2] > 12


def test_direction_stays_unit(rb):
    fld, geom, _, r0 = gradient_setup(rb, 0.1)
    traj = trace(fld, geom, r0, Z)
    assert traj.max_direction_drift < 1e-12
    assert np.max(np.abs(np.linalg.norm(traj.directions, axis=1) - 1)) < 1e-14


def test_planarity_and_uniform_line(rb):
    fld, geom, _, r0 = gradient_setup(rb, 0.1)
    traj = trace(fld, geom, r0, Z)
    assert np.all(traj.positions[:, 1] == 0.0)

    uniform = SusceptibilityField(rb, ConstantGradientField(3e-4))
    d = np.array([0.01, -0.02, 1.0])
    d /= np.linalg.norm(d)
    line = trace(uniform, geom, r0, d)
    np.testing.assert_allclose(line.positions, line.s[:, None] * d, atol=1e-15)
    np.testing.assert_allclose(line.directions, np.broadcast_to(d, line.directions.shape), atol=1e-15)


def test_two_photon_resonance_gives_straight_ray(rb):
    G = rb.Gamma
    for order in Order:
        fld = SusceptibilityField(rb, GaussianControlField(5 * G, 5e-3, 0.0), order)
        geom = CellGeometry(L, 1e-2, 1e-2)
        traj = trace(fld, geom, [2.5e-3, 0.0, 0.0], Z)
        assert abs(deflection_angle(traj)) < 1e-12
        np.testing.assert_array_equal(traj.positions[:, 0], 2.5e-3)


def test_lateral_exit_and_no_z_exit(rb):
    fld, _, _, r0 = gradient_setup(rb, 0.5)
    geom = CellGeometry(L, 1e-4, 1e-4)
    traj = trace(fld, geom, r0, Z)
    assert traj.exit_face is ExitFace.LATERAL
    with pytest.raises(NoZExit):
        deflection_angle(traj)


def test_max_steps(rb):
    fld, geom, _, r0 = gradient_setup(rb, 0.01)
    traj = trace(fld, geom, r0, Z, TraceOptions(max_steps=100))
    assert traj.exit_face is ExitFace.MAX_STEPS
    assert len(traj) == 101


@pytest.mark.parametrize(
    "kwargs,start,direction,exc",
    [
        ({"step": 0.0}, [0, 0, 0], Z, StepSizeInvalid),
        ({"step": math.nan}, [0, 0, 0], Z, StepSizeInvalid),
        ({}, [0, 0, 0], [0.0, 0.0, 1.1], NonUnitDirection),
        ({}, [1.0, 0, 0], Z, StartOutsideCell),
        ({}, [0, 0, L], Z, StartOutsideCell),
    ],
)
def test_trace_input_errors(rb, kwargs, start, direction, exc):
    fld, geom, _, _ = gradient_setup(rb, 0.01)
    with pytest.raises(exc):
        trace(fld, geom, start, direction, TraceOptions(**kwargs))


def test_eta_errors(rb):
    uniform = SusceptibilityField(rb, ConstantGradientField(1e-4))
    with pytest.raises(ZeroGradient):
        eta_at_incidence(uniform, [0, 0, 0])
    oblique = SusceptibilityField(rb, ConstantGradientField(0.0, (1e-3, 1e-3, 0.0)))
    with pytest.raises(GradientNotAxial):
        eta_at_incidence(oblique, [0, 0, 0])


def test_closed_forms():
    assert analytic_exit_angle(0.05, 5.0) == pytest.approx(0.01 / 1.0001, rel=1e-15)
    assert constant_gradient_exit_angle(0.05, 5.0) == pytest.approx(math.tan(0.01), rel=1e-15)
    s = np.linspace(0, 1, 5)
    p = analytic_path(2.0, 0.1, s)
    np.testing.assert_allclose(p[:, 0], 0.1 + 2 * np.log(np.cosh(s / 2)))
    np.testing.assert_allclose(p[:, 2], 2 * np.sinh(s / 2))
    e = constant_gradient_path(-2.0, 0.0, s)
    assert np.all(e[:, 0] <= 0) and np.all(np.diff(e[:, 2]) > 0)  # negative eta bends toward -x
    with pytest.raises(OverflowError):
        analytic_path(1e-3, 0.0, np.array([1.0]))
    with pytest.raises(ValueError):
        analytic_exit_angle(1.0, 0.0)


def test_exact_path_is_unit_speed():
    s = np.linspace(0, 3, 30001)
    p = constant_gradient_path(1.3, 0.0, s)
    speed = np.linalg.norm(np.gradient(p, s, axis=0), axis=1)
    np.testing.assert_allclose(speed[1:-1], 1.0, atol=1e-7)


def test_absorbance_in_uniform_full_response(rb):
    G = rb.Gamma
    mag = LinearMagneticField(1e-4, 0.0, 5 * G, 0.0, 0.0)  # delta = -rate*b0, uniform
    fld = SusceptibilityField(rb, mag, Order.FULL)
    geom = CellGeometry(L, 1e-2, 1e-2)
    traj = trace(fld, geom, [0.0, 0.0, 0.0], Z, TraceOptions(track_absorption=True))
    im = chi_full(rb, Detunings(0.0, mag.detuning_at_origin), 5 * G).imag
    expected = rb.wavenumber * im * traj.s
    np.testing.assert_allclose(traj.absorbance, expected, rtol=1e-10)
    assert traj.exit_state.accumulated_absorbance == pytest.approx(rb.wavenumber * im * L, rel=1e-10)


def test_trajectory_access(rb):
    fld, geom, _, r0 = gradient_setup(rb, 0.01)
    traj = trace(fld, geom, r0, Z, TraceOptions(step=L / 10))
    # the bent ray needs slightly more than L of arclength: ten full steps plus a short one
    assert len(traj) == 12
    assert len(traj.samples) == 12
    assert traj.s[-1] - traj.s[-2] < L / 10 and traj.positions[-1, 2] == pytest.approx(L, abs=1e-15)
    first = traj[0]
    np.testing.assert_array_equal(first.position, r0)
    assert first.arclength == 0.0 and first.accumulated_absorbance is None
    x, y = traj.x_of_z([0.0, L])
    assert x[0] == 0.0 and x[1] == traj.positions[-1, 0]
