import math

import pytest

from eitdeflect import _kernels
from eitdeflect.constants import EPSILON_0, HBAR
from eitdeflect.medium import AtomicMedium
from eitdeflect.scenarios import ScenarioConfig, config_from_dict

# criterion id -> list of (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_sessionstart(session):
    _kernels.warmup()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    groups = {}
    for cid, entries in ACCEPTANCE.items():
        groups.setdefault(cid.split(".")[0], []).extend((cid, *e) for e in entries)
    for base in sorted(groups, key=lambda c: int(c[1:])):
        cases = sorted(groups[base])
        ok = sum(passed for _, passed, _ in cases)
        verdict = "PASS" if ok == len(cases) else "FAIL"
        terminalreporter.write_line(f"{verdict}  {base}  ({ok}/{len(cases)} cases)")
        for cid, passed, detail in cases:
            terminalreporter.write_line(f"      {'pass' if passed else 'FAIL'}  {cid}  {detail}")


@pytest.fixture
def record():
    def _record(cid, passed, detail):
        ACCEPTANCE.setdefault(cid, []).append((bool(passed), detail))
        return passed

    return _record


def medium_with_chi0(chi0, **kw):
    """Rb-87 D1 medium with the density tuned so that chi0 takes the given value."""
    base = AtomicMedium.rb87_d1(**kw)
    density = chi0 * EPSILON_0 * HBAR * base.Gamma / (4 * base.dipole_dab**2)
    return AtomicMedium(density, base.dipole_dab, base.gamma, base.gamma_prime, base.signal_omega)


@pytest.fixture
def rb():
    return AtomicMedium.rb87_d1()


@pytest.fixture
def medium_0764():
    return medium_with_chi0(0.0764)


@pytest.fixture
def optical_cfg() -> ScenarioConfig:
    # sigma = 5 mm, L = 10 sigma, rabi0 = 5 Gamma, N = 1e12 cm^-3, delta = 0.1 Gamma, x_i = 0.5 sigma
    return config_from_dict({"kind": "optical"})


@pytest.fixture
def magnetic_cfg() -> ScenarioConfig:
    return config_from_dict({"kind": "magnetic"})


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), math.ulp(0.0))
