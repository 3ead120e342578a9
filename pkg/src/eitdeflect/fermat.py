"""Ray paths from Fermat's principle, independent of the ODE tracer.

A path between two pinned endpoints is a polyline with K interior nodes on
fixed, equally spaced z-planes; the transverse coordinates of those nodes
are the decision variables. The discretised optical length

    sum_k n(midpoint_k) * |segment_k|,   n = 1 + chi/2,

is minimised with Polak-Ribiere+ nonlinear conjugate gradients,
preconditioned by the Hessian of the bare Euclidean length of a chord
(tridiagonal, one per transverse axis). Evaluation
goes through the numpy field methods in :mod:`eitdeflect.fields`, not the
compiled tracer kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from scipy.linalg import solveh_banded

from .errors import ConfigInvalid, NotConverged, OutOfCell
from .fields import CellGeometry, SusceptibilityField
from .medium import refraction_index


@dataclass(frozen=True)
class DiscretePath:
    """Polyline start -> nodes -> end; ``nodes`` has shape (K, 3)."""

    start: np.ndarray
    end: np.ndarray
    nodes: np.ndarray
    iterations: int = 0
    grad_norm: float = float("nan")

    @property
    def K(self) -> int:
        return len(self.nodes)

    @property
    def z(self) -> np.ndarray:
        return self.nodes[:, 2]

    @property
    def points(self) -> np.ndarray:
        return np.vstack([self.start, self.nodes, self.end])

    @classmethod
    def chord(cls, start, end, K: int) -> "DiscretePath":
        """Straight line between the endpoints, sampled on K interior z-planes."""
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        if not end[2] > start[2]:
            raise ConfigInvalid("end must lie downstream (larger z) of start")
        w = np.arange(1, K + 1)[:, None] / (K + 1)
        return cls(start, end, start + w * (end - start))

    def with_xy(self, xy: np.ndarray) -> "DiscretePath":
        nodes = self.nodes.copy()
        nodes[:, :2] = xy.reshape(-1, 2)
        return replace(self, nodes=nodes)


@dataclass(frozen=True)
class FermatOptions:
    tol: float = 1e-12  # on the infinity norm of d(length)/d(node), dimensionless
    max_iters: int = 100_000
    restart_every: int | None = None  # None means 10*K
    armijo_c1: float = 1e-4


def _check_nodes(field: SusceptibilityField, path: DiscretePath):
    if field.cell is not None and not np.all(field.cell.contains(path.points)):
        raise OutOfCell("path node outside the gas cell")


def optical_length(field: SusceptibilityField, path: DiscretePath) -> float:
    """Midpoint-rule optical length in metres."""
    _check_nodes(field, path)
    pts = path.points
    seg = np.diff(pts, axis=0)
    n = refraction_index(field.chi_at(0.5 * (pts[1:] + pts[:-1])))
    return float(np.sum(n * np.linalg.norm(seg, axis=1)))


def _excess_and_gradient(field: SusceptibilityField, path: DiscretePath):
    """Optical length minus the axial span, and its gradient w.r.t. node (x, y).

    Subtracting the constant span keeps the significant digits that the
    minimiser needs near convergence.
    """
    pts = path.points
    seg = np.diff(pts, axis=0)
    dz = seg[:, 2]
    perp2 = seg[:, 0] ** 2 + seg[:, 1] ** 2
    ell = np.sqrt(perp2 + dz**2)
    mid = 0.5 * (pts[1:] + pts[:-1])
    chi = np.asarray(field.chi_at(mid))
    grad_chi = field.grad_chi_at(mid)
    n = 1.0 + 0.5 * chi
    excess = float(np.sum(perp2 / (ell + dz) + 0.5 * chi * ell))

    unit = seg[:, :2] / ell[:, None]
    push = 0.25 * ell[:, None] * grad_chi[:, :2]  # d n(mid)/d node, times |segment|
    pull = n[:, None] * unit
    grad = (pull[:-1] + push[:-1]) + (-pull[1:] + push[1:])
    return excess, grad.ravel()


def optical_length_gradient(field: SusceptibilityField, path: DiscretePath) -> np.ndarray:
    """d(optical_length)/d(x_k, y_k), shape (K, 2)."""
    _check_nodes(field, path)
    return _excess_and_gradient(field, path)[1].reshape(-1, 2)


def minimize_path(
    field: SusceptibilityField,
    geom: CellGeometry,
    start,
    end,
    K: int = 256,
    opts: FermatOptions | None = None,
) -> DiscretePath:
    """Local minimiser of the optical length between fixed endpoints.

    Starts from the straight chord. Each iteration picks the step by a
    secant on the directional derivative, then backtracks until an Armijo
    decrease holds (or, once function differences drown in round-off, until
    the directional derivative shrinks).
    """
    opts = opts or FermatOptions()
    if K < 8:
        raise ConfigInvalid("K must be >= 8")
    if field.cell is None:
        field = replace(field, cell=geom)
    path = DiscretePath.chord(start, end, K)
    _check_nodes(field, path)
    restart = opts.restart_every or 10 * K

    dz = (path.end[2] - path.start[2]) / (K + 1)
    # upper banded form of tridiag(-1, 2, -1) / dz
    banded = np.vstack([np.r_[0.0, -np.ones(K - 1)], 2.0 * np.ones(K)]) / dz

    def precondition(grad):
        return solveh_banded(banded, grad.reshape(K, 2)).ravel()

    def evaluate(xy):
        p = path.with_xy(xy)
        _check_nodes(field, p)
        return _excess_and_gradient(field, p)

    xy = path.nodes[:, :2].ravel().copy()
    f, g = evaluate(xy)
    z = precondition(g)
    d = -z
    alpha = 1.0
    it = 0
    gnorm = float(np.max(np.abs(g)))
    while gnorm >= opts.tol:
        if it >= opts.max_iters:
            raise NotConverged(f"no convergence after {it} iterations, |grad|_inf = {gnorm:.3e}", gnorm)
        slope = float(g @ d)
        if slope >= 0:
            d = -z
            slope = float(g @ d)

        _, g_try = evaluate(xy + alpha * d)
        slope_try = float(g_try @ d)
        curvature = slope_try - slope
        step = -alpha * slope / curvature if curvature > 0 else 2.0 * alpha

        for _ in range(60):
            f_new, g_new = evaluate(xy + step * d)
            slope_new = float(g_new @ d)
            if f_new <= f + opts.armijo_c1 * step * slope:
                break
            noise = 1e-13 * max(abs(f), 1e-300)
            if abs(f_new - f) <= noise and abs(slope_new) < abs(slope):
                break
            step *= 0.5
        else:
            raise NotConverged(f"line search failed at iteration {it}, |grad|_inf = {gnorm:.3e}", gnorm)

        xy = xy + step * d
        alpha = step
        it += 1
        z_new = precondition(g_new)
        beta = 0.0 if it % restart == 0 else max(0.0, float(g_new @ (z_new - z)) / float(g @ z))
        f, g, z = f_new, g_new, z_new
        d = -z + beta * d
        gnorm = float(np.max(np.abs(g)))

    return replace(path.with_xy(xy), iterations=it, grad_norm=gnorm)
