import numpy as np
import pytest

from eitdeflect.errors import ConfigInvalid, NotConverged, OutOfCell
from eitdeflect.fermat import (
    DiscretePath,
    FermatOptions,
    minimize_path,
    optical_length,
    optical_length_gradient,
)
from eitdeflect.fields import CellGeometry, ConstantGradientField, GaussianControlField, SusceptibilityField
from eitdeflect.raytracer import trace

L = 0.05
SIGMA = 5e-3


@pytest.fixture
def gauss(rb):
    G = rb.Gamma
    geom = CellGeometry(L, 2 * SIGMA, 2 * SIGMA)
    return SusceptibilityField(rb, GaussianControlField(5 * G, SIGMA, 0.1 * G), cell=geom), geom


def ode_endpoints(fld, geom, x0):
    traj = trace(fld, geom, [x0, 0.0, 0.0], [0.0, 0.0, 1.0])
    return traj, traj.positions[0], traj.positions[-1]


def test_chord():
    p = DiscretePath.chord([0, 0, 0], [1e-3, 0, L], 9)
    assert p.K == 9
    np.testing.assert_allclose(p.z, np.linspace(0, L, 11)[1:-1])
    assert p.points.shape == (11, 3)
    with pytest.raises(ConfigInvalid):
        DiscretePath.chord([0, 0, L], [0, 0, 0], 9)


def test_uniform_medium_keeps_chord(rb):
    fld = SusceptibilityField(rb, ConstantGradientField(2e-4))
    geom = CellGeometry(L, 0.01, 0.01)
    start, end = np.array([1e-3, -5e-4, 0.0]), np.array([-2e-3, 1e-3, L])
    path = minimize_path(fld, geom, start, end, K=32)
    chord = DiscretePath.chord(start, end, 32)
    np.testing.assert_allclose(path.nodes, chord.nodes, atol=1e-15)
    assert optical_length(fld, path) == pytest.approx((1 + 1e-4) * np.linalg.norm(end - start), rel=1e-14)


def test_gradient_matches_finite_differences(gauss):
    fld, _ = gauss
    rng = np.random.default_rng(5)
    path = DiscretePath.chord([2.5e-3, 0.0, 0.0], [3e-3, 1e-4, L], 20)
    path = path.with_xy(path.nodes[:, :2] + rng.normal(0, 2e-4, (20, 2)))
    grad = optical_length_gradient(fld, path)
    h = 1e-6
    fd = np.empty_like(grad)
    for k in range(path.K):
        for a in range(2):
            xy = path.nodes[:, :2].copy()
            xy[k, a] += h
            up = optical_length(fld, path.with_xy(xy))
            xy[k, a] -= 2 * h
            dn = optical_length(fld, path.with_xy(xy))
            fd[k, a] = (up - dn) / (2 * h)
    np.testing.assert_allclose(fd, grad, rtol=1e-6, atol=1e-6 * np.max(np.abs(grad)))


def test_minimum_is_local(gauss):
    fld, geom = gauss
    _, start, end = ode_endpoints(fld, geom, 2.5e-3)
    path = minimize_path(fld, geom, start, end, K=64)
    assert path.grad_norm < 1e-12
    best = optical_length(fld, path)
    rng = np.random.default_rng(2)
    for _ in range(5):
        bumped = path.with_xy(path.nodes[:, :2] + rng.normal(0, 1e-6, (64, 2)))
        assert optical_length(fld, bumped) > best


def test_constant_gradient_agrees_with_ode(rb):
    eta = 5.0
    fld = SusceptibilityField(rb, ConstantGradientField(0.0, (2.0 / eta, 0.0, 0.0)))
    geom = CellGeometry(L, 0.01, 0.01)
    traj, start, end = ode_endpoints(fld, geom, 0.0)
    path = minimize_path(fld, geom, start, end, K=128)
    x, y = traj.x_of_z(path.z)
    assert np.max(np.abs(path.nodes[:, 0] - x)) < 1e-6 * L
    np.testing.assert_array_equal(path.nodes[:, 1], 0.0)


def test_mirror_symmetry(rb):
    geom = CellGeometry(L, 0.01, 0.01)
    paths = []
    for sign in (1, -1):
        fld = SusceptibilityField(rb, ConstantGradientField(0.0, (sign * 0.4, 0.0, 0.0)))
        paths.append(minimize_path(fld, geom, [0, 0, 0], [sign * 2.5e-4, 0, L], K=64))
    np.testing.assert_allclose(paths[0].nodes[:, 0], -paths[1].nodes[:, 0], rtol=1e-10, atol=1e-18)


def test_refinement_self_convergence(gauss):
    """Successive K doublings shrink the change in the path, roughly as K^-2."""
    fld, geom = gauss
    _, start, end = ode_endpoints(fld, geom, 2.5e-3)
    zq = np.linspace(0, L, 9)[1:-1]
    xs = []
    for K in (31, 63, 127, 255):  # (K + 1) doubles, so the coarse planes are shared
        p = minimize_path(fld, geom, start, end, K=K)
        xs.append(np.interp(zq, p.z, p.nodes[:, 0]))
    d = [np.max(np.abs(xs[i + 1] - xs[i])) for i in range(3)]
    assert d[0] > d[1] > d[2]
    assert d[0] / d[1] > 3 and d[1] / d[2] > 3


def test_failure_modes(gauss):
    fld, geom = gauss
    _, start, end = ode_endpoints(fld, geom, 2.5e-3)
    with pytest.raises(NotConverged) as info:
        minimize_path(fld, geom, start, end, K=64, opts=FermatOptions(max_iters=1))
    assert info.value.grad_norm > 0
    with pytest.raises(ConfigInvalid):
        minimize_path(fld, geom, start, end, K=4)
    with pytest.raises(OutOfCell):
        minimize_path(fld, geom, [0, 0, 0], [0.05, 0, L], K=16)
