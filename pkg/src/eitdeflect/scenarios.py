"""End-to-end deflection scenarios, parameter sweeps and table output.

Two configurations are modelled:

``optical``
    Gaussian control beam, no magnetic field, constant two-photon detuning.
``magnetic``
    Uniform control beam, field B_z = b0 + b1*x shifting the two-photon
    detuning linearly across the cell.

A third kind, ``custom``, prescribes chi directly as an affine function.

Configs are flat JSON objects with the units spelled out in the key names
(see :data:`CONFIG_KEYS`); inputs relative to Gamma or sigma are resolved to
SI at load time. Sweep values are reported in axis units: ``x_i`` in sigma,
``delta`` and ``rabi_peak`` in Gamma, ``b1`` in T/m, ``sigma`` and ``L`` in m.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .constants import C_LIGHT, RB87_D1
from .errors import (
    ConfigError,
    ConfigInvalid,
    GuardWarning,
    IoFailure,
    NumericalGuardError,
    UnknownAxis,
    ZeroGradient,
)
from .fermat import DiscretePath, minimize_path
from .fields import (
    CellGeometry,
    ConstantGradientField,
    GaussianControlField,
    LinearMagneticField,
    Order,
    SusceptibilityField,
)
from .medium import AtomicMedium, group_velocity
from .raytracer import ExitFace, TraceOptions, Trajectory, deflection_angle, eta_at_incidence, trace

KINDS = ("optical", "magnetic", "custom")
SWEEP_AXES = ("x_i", "delta", "rabi_peak", "b1", "sigma", "L")

CONFIG_KEYS = {
    "kind": "optical | magnetic | custom",
    "density_per_cm3": "atomic number density, cm^-3",
    "dipole_Cm": "|d_ab|, C*m",
    "gamma_rad_s": "decay a->b, rad/s",
    "gamma_prime_rad_s": "decay a->c, rad/s",
    "wavelength_m": "signal vacuum wavelength, m",
    "sigma_m": "control-beam width, m",
    "length_m": "cell length L, m",
    "length_over_sigma": "cell length in units of sigma",
    "rabi_over_Gamma": "peak (optical) or uniform (magnetic) control Rabi frequency / Gamma",
    "delta_over_Gamma": "two-photon detuning / Gamma (optical)",
    "Delta_over_Gamma": "one-photon detuning / Gamma",
    "x_i_over_sigma": "incidence x / sigma",
    "x_i_m": "incidence x, m",
    "direction": "launch direction [dx, dy, dz]",
    "b0_T": "bias field, T",
    "b1_T_per_m": "field gradient, T/m",
    "lande_g": "multiplier on mu_B in the Zeeman shift",
    "omega_minus_omega_prime_rad_s": "signal minus control frequency; default zeroes delta at x = 0",
    "chi_ref": "custom: chi at the origin",
    "chi_gradient_per_m": "custom: grad chi, 1/m",
    "half_width_x_m": "cell half-width in x, m",
    "half_width_y_m": "cell half-width in y, m",
    "order": "first | full",
    "step_m": "RK4 arclength step, m (default L/1e5)",
    "max_steps": "RK4 step cap",
    "frozen_gradient": "hold grad chi at its incidence value",
    "track_absorption": "accumulate k*Im(chi) along the ray",
    "rabi_guard": "warn when local Rabi / Gamma falls below this",
    "sweep_param": "one of x_i, delta, rabi_peak, b1, sigma, L",
    "sweep_start": "first sweep value (axis units)",
    "sweep_stop": "last sweep value (axis units)",
    "sweep_num": "number of sweep samples (>= 2)",
    "workers": "threads used for sweeps",
}

CSV_HEADER = (
    "sweep_param",
    "sweep_value",
    "theta_traced_rad",
    "theta_closed_rad",
    "eta_m",
    "vg_mps",
    "absorbance",
)


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    num: int

    def __post_init__(self):
        if self.param not in SWEEP_AXES:
            raise UnknownAxis(f"unknown sweep axis {self.param!r}; expected one of {SWEEP_AXES}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigInvalid("sweep range must be finite")
        if self.num < 2:
            raise ConfigInvalid("sweep_num must be >= 2")

    def values(self) -> np.ndarray:
        return np.sort(np.linspace(self.start, self.stop, self.num))


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario; every quantity in SI / rad s^-1."""

    kind: str = "optical"
    medium: AtomicMedium = field(default_factory=AtomicMedium.rb87_d1)
    length_m: float = 0.05
    sigma_m: float = 5e-3
    rabi: float = 5.0 * RB87_D1["Gamma"]
    delta: float = 0.1 * RB87_D1["Gamma"]
    Delta: float = 0.0
    x_i_m: float = 2.5e-3
    direction: tuple = (0.0, 0.0, 1.0)
    b0_T: float = 1e-4
    b1_T_per_m: float = 1e-3
    lande_g: float = 1.0
    omega_minus_omega_prime: float | None = None
    chi_ref: float = 0.0
    chi_gradient_per_m: tuple = (0.0, 0.0, 0.0)
    half_width_x_m: float | None = None
    half_width_y_m: float | None = None
    order: Order = Order.FIRST
    trace: TraceOptions = TraceOptions()
    rabi_guard: float = 3.0
    sweep: SweepSpec | None = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigInvalid(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("length_m", "sigma_m", "rabi"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigInvalid(f"{name} must be finite and > 0, got {v!r}")
        if len(self.direction) != 3 or len(self.chi_gradient_per_m) != 3:
            raise ConfigInvalid("direction and chi_gradient_per_m need three components")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")

    @property
    def Gamma(self) -> float:
        return self.medium.Gamma

    def field_config(self):
        if self.kind == "optical":
            return GaussianControlField(self.rabi, self.sigma_m, self.delta, self.Delta)
        if self.kind == "magnetic":
            if self.omega_minus_omega_prime is None:
                return LinearMagneticField.resonant_at_origin(
                    self.b0_T, self.b1_T_per_m, self.rabi, self.Delta, self.lande_g
                )
            return LinearMagneticField(
                self.b0_T, self.b1_T_per_m, self.rabi, self.omega_minus_omega_prime, self.Delta, self.lande_g
            )
        return ConstantGradientField(self.chi_ref, tuple(self.chi_gradient_per_m))

    def geometry(self) -> CellGeometry:
        default = CellGeometry.default_for(self.field_config(), self.length_m)
        return CellGeometry(
            self.length_m,
            self.half_width_x_m or default.half_width_x,
            self.half_width_y_m or default.half_width_y,
        )

    def build(self) -> tuple[SusceptibilityField, CellGeometry]:
        geom = self.geometry()
        return SusceptibilityField(self.medium, self.field_config(), self.order, geom), geom

    def incidence(self):
        d = np.asarray(self.direction, dtype=float)
        return np.array([self.x_i_m, 0.0, 0.0]), d / np.linalg.norm(d)

    def at(self, axis: str, value: float) -> "ScenarioConfig":
        """Copy with one sweep axis set to ``value`` (axis units)."""
        G = self.Gamma
        if axis == "x_i":
            return replace(self, x_i_m=value * self.sigma_m)
        if axis == "delta":
            return replace(self, delta=value * G)
        if axis == "rabi_peak":
            return replace(self, rabi=value * G)
        if axis == "b1":
            return replace(self, b1_T_per_m=value)
        if axis == "sigma":
            return replace(self, sigma_m=value)
        if axis == "L":
            return replace(self, length_m=value)
        raise UnknownAxis(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _get(doc, key, default):
    v = doc.get(key, default)
    return default if v is None else v


def config_from_dict(doc: dict, kind: str | None = None) -> ScenarioConfig:
    """Resolve a flat JSON config dict to a :class:`ScenarioConfig`."""
    unknown = set(doc) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    try:
        kind = kind or doc.get("kind", "optical")
        Gamma_default = RB87_D1["Gamma"]
        medium = AtomicMedium.rb87_d1(
            density_per_cm3=float(_get(doc, "density_per_cm3", 1e12)),
            dipole_dab=float(_get(doc, "dipole_Cm", RB87_D1["dipole_Cm"])),
            gamma=float(_get(doc, "gamma_rad_s", Gamma_default / 2)),
            gamma_prime=float(_get(doc, "gamma_prime_rad_s", Gamma_default / 2)),
            signal_omega=2 * math.pi * C_LIGHT / float(_get(doc, "wavelength_m", RB87_D1["wavelength_m"])),
        )
        G = medium.Gamma
        sigma = float(_get(doc, "sigma_m", 5e-3))
        if "length_m" in doc and "length_over_sigma" in doc:
            raise ConfigInvalid("give length_m or length_over_sigma, not both")
        if "length_m" in doc:
            length = float(doc["length_m"])
        else:
            length = float(_get(doc, "length_over_sigma", 10.0)) * sigma
        if "x_i_m" in doc and "x_i_over_sigma" in doc:
            raise ConfigInvalid("give x_i_m or x_i_over_sigma, not both")
        if "x_i_m" in doc:
            x_i = float(doc["x_i_m"])
        else:
            x_i = float(_get(doc, "x_i_over_sigma", 0.5 if kind == "optical" else 0.0)) * sigma
        omp = doc.get("omega_minus_omega_prime_rad_s")

        trace_opts = TraceOptions(
            step=None if doc.get("step_m") is None else float(doc["step_m"]),
            max_steps=int(_get(doc, "max_steps", 10_000_000)),
            frozen_gradient=bool(_get(doc, "frozen_gradient", False)),
            track_absorption=bool(_get(doc, "track_absorption", False)),
        )
        sweep = None
        if doc.get("sweep_param") is not None:
            sweep = SweepSpec(
                str(doc["sweep_param"]),
                float(doc["sweep_start"]),
                float(doc["sweep_stop"]),
                int(doc["sweep_num"]),
            )
        hwx = doc.get("half_width_x_m")
        hwy = doc.get("half_width_y_m")
        return ScenarioConfig(
            kind=kind,
            medium=medium,
            length_m=length,
            sigma_m=sigma,
            rabi=float(_get(doc, "rabi_over_Gamma", 5.0)) * G,
            delta=float(_get(doc, "delta_over_Gamma", 0.1)) * G,
            Delta=float(_get(doc, "Delta_over_Gamma", 0.0)) * G,
            x_i_m=x_i,
            direction=tuple(float(c) for c in _get(doc, "direction", (0.0, 0.0, 1.0))),
            b0_T=float(_get(doc, "b0_T", 1e-4)),
            b1_T_per_m=float(_get(doc, "b1_T_per_m", 1e-3)),
            lande_g=float(_get(doc, "lande_g", 1.0)),
            omega_minus_omega_prime=None if omp is None else float(omp),
            chi_ref=float(_get(doc, "chi_ref", 0.0)),
            chi_gradient_per_m=tuple(float(c) for c in _get(doc, "chi_gradient_per_m", (0.0, 0.0, 0.0))),
            half_width_x_m=None if hwx is None else float(hwx),
            half_width_y_m=None if hwy is None else float(hwy),
            order=Order.parse(_get(doc, "order", "first")),
            trace=trace_opts,
            rabi_guard=float(_get(doc, "rabi_guard", 3.0)),
            sweep=sweep,
            workers=int(_get(doc, "workers", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigInvalid(f"bad config: {exc}") from exc


def load_config(path, kind: str | None = None) -> ScenarioConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid("config must be a JSON object")
    return config_from_dict(doc, kind)


# -- closed forms -----------------------------------------------------------


def optical_closed_form_angle(medium: AtomicMedium, beam: GaussianControlField, x_i: float, length: float) -> float:
    """chi0 * 4 Gamma delta x_i L exp(2 x_i^2/sigma^2) / (rabi0^2 sigma^2).

    Note this equals 2 L * (d chi/dx)/2 at the incidence point, i.e. twice
    the small-angle estimate L/eta that the ray equation itself implies.
    """
    s2 = beam.sigma**2
    return (
        medium.chi0 * 4.0 * medium.Gamma * beam.delta_two_photon * x_i * length
        * math.exp(2.0 * x_i**2 / s2) / (beam.rabi_peak**2 * s2)
    )


def magnetic_closed_form_angle(medium: AtomicMedium, mag: LinearMagneticField, length: float) -> float:
    """-chi0 Gamma (g mu_B / hbar) b1 L / (2 rabi^2)."""
    return -medium.chi0 * medium.Gamma * mag.zeeman_rate * mag.b1 * length / (2.0 * mag.rabi_uniform**2)


def magnetic_angle_from_group_velocity(medium: AtomicMedium, mag: LinearMagneticField, length: float, vg: float) -> float:
    """-c (g mu_B / hbar) b1 L / (v_g omega)."""
    return -C_LIGHT * mag.zeeman_rate * mag.b1 * length / (vg * medium.signal_omega)


# -- records ------------------------------------------------------------------


@dataclass(frozen=True)
class DeflectionRecord:
    sweep_param: str
    sweep_value: float
    theta_traced_rad: float
    theta_closed_rad: float
    eta_m: float
    vg_mps: float = float("nan")
    absorbance: float = float("nan")
    exit_face: str = ExitFace.Z_END.value
    theta_group_velocity_rad: float = float("nan")

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CSV_HEADER}


def _trace_point(cfg: ScenarioConfig) -> tuple[Trajectory, SusceptibilityField, CellGeometry]:
    fld, geom = cfg.build()
    r0, d0 = cfg.incidence()
    return trace(fld, geom, r0, d0, cfg.trace), fld, geom


def _eta(fld, r0) -> float:
    try:
        return eta_at_incidence(fld, r0).eta
    except ZeroGradient:
        return math.inf


def _traced_angle(traj: Trajectory, cfg: ScenarioConfig) -> float:
    if traj.exit_face is ExitFace.Z_END:
        return deflection_angle(traj)
    warnings.warn(
        f"{cfg.kind}: ray left through {traj.exit_face.value} before z = L (x_i = {cfg.x_i_m:.6g} m)",
        GuardWarning,
        stacklevel=3,
    )
    return math.nan


def _absorbance(traj: Trajectory) -> float:
    return float(traj.absorbance[-1]) if traj.absorbance is not None else math.nan


def _optical_point(cfg: ScenarioConfig, axis: str, value: float) -> DeflectionRecord:
    beam = cfg.field_config()
    local = beam.rabi_at([cfg.x_i_m, 0.0, 0.0]) / cfg.Gamma
    if local < cfg.rabi_guard:
        warnings.warn(
            f"optical: local control Rabi {local:.3g} Gamma at x_i is not >> Gamma",
            GuardWarning,
            stacklevel=3,
        )
    traj, fld, _ = _trace_point(cfg)
    r0, _ = cfg.incidence()
    return DeflectionRecord(
        sweep_param=axis,
        sweep_value=value,
        theta_traced_rad=_traced_angle(traj, cfg),
        theta_closed_rad=optical_closed_form_angle(cfg.medium, beam, cfg.x_i_m, cfg.length_m),
        eta_m=_eta(fld, r0),
        absorbance=_absorbance(traj),
        exit_face=traj.exit_face.value,
    )


def _magnetic_point(cfg: ScenarioConfig, axis: str, value: float) -> DeflectionRecord:
    mag = cfg.field_config()
    vg = group_velocity(cfg.medium, mag.rabi_uniform)
    theta_grad = magnetic_closed_form_angle(cfg.medium, mag, cfg.length_m)
    theta_vg = magnetic_angle_from_group_velocity(cfg.medium, mag, cfg.length_m, vg)
    if abs(theta_grad - theta_vg) > 1e-9 * max(abs(theta_grad), abs(theta_vg)):
        raise NumericalGuardError(f"closed forms disagree: {theta_grad!r} vs {theta_vg!r}")
    traj, fld, _ = _trace_point(cfg)
    r0, _ = cfg.incidence()
    return DeflectionRecord(
        sweep_param=axis,
        sweep_value=value,
        theta_traced_rad=_traced_angle(traj, cfg),
        theta_closed_rad=theta_grad,
        eta_m=_eta(fld, r0),
        vg_mps=vg,
        absorbance=_absorbance(traj),
        exit_face=traj.exit_face.value,
        theta_group_velocity_rad=theta_vg,
    )


def _custom_point(cfg: ScenarioConfig, axis: str, value: float) -> DeflectionRecord:
    traj, fld, _ = _trace_point(cfg)
    r0, _ = cfg.incidence()
    eta = _eta(fld, r0)
    return DeflectionRecord(
        sweep_param=axis,
        sweep_value=value,
        theta_traced_rad=_traced_angle(traj, cfg),
        theta_closed_rad=cfg.length_m / eta,
        eta_m=eta,
        absorbance=_absorbance(traj),
        exit_face=traj.exit_face.value,
    )


_POINT = {"optical": _optical_point, "magnetic": _magnetic_point, "custom": _custom_point}


def run_point(cfg: ScenarioConfig, axis: str = "none", value: float = math.nan) -> DeflectionRecord:
    """Single record; when ``axis`` names a sweep axis, ``value`` is applied first."""
    if axis != "none":
        cfg = cfg.at(axis, value)
    return _POINT[cfg.kind](cfg, axis, value)


def sweep(cfg: ScenarioConfig) -> list[DeflectionRecord]:
    """Run every sample of ``cfg.sweep``; output is ordered by sweep value."""
    if cfg.sweep is None:
        raise ConfigInvalid("config has no sweep")
    axis = cfg.sweep.param
    values = [float(v) for v in cfg.sweep.values()]
    if cfg.workers == 1:
        return [run_point(cfg, axis, v) for v in values]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda v: run_point(cfg, axis, v), values))


def _run_kind(cfg: ScenarioConfig, kind: str) -> list[DeflectionRecord]:
    if cfg.kind != kind:
        cfg = replace(cfg, kind=kind)
    return sweep(cfg) if cfg.sweep is not None else [run_point(cfg)]


def run_optical_scenario(cfg: ScenarioConfig) -> list[DeflectionRecord]:
    """Gaussian-beam scenario: traced and closed-form angle per sweep point."""
    return _run_kind(cfg, "optical")


def run_magnetic_scenario(cfg: ScenarioConfig) -> list[DeflectionRecord]:
    """Field-gradient scenario; also checks the two closed forms against each other."""
    return _run_kind(cfg, "magnetic")


# -- emission -----------------------------------------------------------------


def _fmt(v) -> str:
    return v if isinstance(v, str) else f"{float(v):.17g}"


def _json_value(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def format_records(records, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            row = r.row() if isinstance(r, DeflectionRecord) else r
            w.writerow([_fmt(row[k]) for k in CSV_HEADER])
        return buf.getvalue()
    if fmt == "json":
        rows = [r.row() if isinstance(r, DeflectionRecord) else r for r in records]
        out = [{k: _json_value(row[k]) for k in CSV_HEADER} for row in rows]
        return json.dumps(out, indent=2) + "\n"
    raise ConfigInvalid(f"format must be csv or json, got {fmt!r}")


def records_from_json(text: str) -> list[DeflectionRecord]:
    rows = json.loads(text)
    return [
        DeflectionRecord(**{k: (math.nan if row[k] is None else row[k]) for k in CSV_HEADER})
        for row in rows
    ]


def emit(records, path, fmt: str = "csv") -> Path:
    """Write records as CSV (17 significant digits) or JSON."""
    text = format_records(records, fmt)
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


# -- ODE vs Fermat ----------------------------------------------------------


@dataclass
class Crosscheck:
    trajectory: Trajectory
    path: DiscretePath
    x_ode: np.ndarray
    y_ode: np.ndarray

    @property
    def sup_deviation(self) -> float:
        return float(
            np.max(np.hypot(self.path.nodes[:, 0] - self.x_ode, self.path.nodes[:, 1] - self.y_ode))
        )


def crosscheck(cfg: ScenarioConfig, K: int = 256) -> Crosscheck:
    """Trace the configured ray, then minimise optical length between its endpoints."""
    traj, fld, geom = _trace_point(cfg)
    if traj.exit_face is not ExitFace.Z_END:
        raise NumericalGuardError("crosscheck needs a ray that exits through z = L")
    path = minimize_path(fld, geom, traj.positions[0], traj.positions[-1], K)
    x, y = traj.x_of_z(path.z)
    return Crosscheck(traj, path, x, y)
