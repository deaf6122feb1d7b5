import math

import numpy as np
import pytest

from strobocat.analysis import (
    DetectionCoefficients,
    decoherence_estimate,
    detection_coefficients,
    entropy_from_eigenvalues,
    fidelity,
    fit_decay_rate,
    position_density,
    qubit_reduced,
)
from strobocat.errors import DimensionError, TruncationError, ValidationError
from strobocat.fock import FockSpace, StateVector, coherent_state
from strobocat.spinboson import SystemParams, temperature_to_units

LN2 = math.log(2.0)


def branch_cat(beta, n_trunc):
    """(|up, beta> + |down, -beta>)/sqrt(2) on the composite space."""
    space = FockSpace(n_trunc)
    full = np.zeros(2 * n_trunc, dtype=complex)
    full[:n_trunc] = coherent_state(beta, space).amplitudes
    full[n_trunc:] = coherent_state(-beta, space).amplitudes
    return StateVector.normalized(full)


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------

def test_fidelity_trivials():
    space = FockSpace(64)
    psi = coherent_state(0.7, space)
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)
    e0 = StateVector(np.eye(64)[0].astype(complex))
    e1 = StateVector(np.eye(64)[1].astype(complex))
    assert fidelity(e0, e1) == 0.0


def test_fidelity_coherent_overlap():
    # |<0|alpha>|^2 = exp(-|alpha|^2)
    space = FockSpace(64)
    f = fidelity(coherent_state(0.0, space), coherent_state(2.4, space))
    assert f == pytest.approx(math.exp(-5.76), rel=1e-9)


def test_fidelity_symmetric_exactly():
    rng = np.random.default_rng(1610)
    for _ in range(25):
        a = StateVector.normalized(rng.normal(size=16)
                                   + 1j * rng.normal(size=16))
        b = StateVector.normalized(rng.normal(size=16)
                                   + 1j * rng.normal(size=16))
        assert fidelity(a, b) == fidelity(b, a)


def test_fidelity_dim_mismatch():
    with pytest.raises(DimensionError):
        fidelity(StateVector(np.array([1.0 + 0j])),
                 StateVector(np.array([1.0, 0.0], dtype=complex)))


# ---------------------------------------------------------------------------
# qubit reduced state
# ---------------------------------------------------------------------------

def test_qubit_reduced_product_state():
    n = 32
    osc = coherent_state(0.9, FockSpace(n)).amplitudes
    full = np.zeros(2 * n, dtype=complex)
    full[:n] = osc
    red = qubit_reduced(StateVector(full))
    assert red.entropy < 1e-12
    assert red.p_up == pytest.approx(1.0, abs=1e-12)
    assert red.p_down == pytest.approx(0.0, abs=1e-12)


def test_qubit_reduced_cat_spectrum():
    """Branch coherent states of opposite sign: eigenvalues (1 +- o)/2 with
    o = exp(-2 beta^2)."""
    red = qubit_reduced(branch_cat(2.4, 64))
    o = math.exp(-2 * 2.4 ** 2)           # 9.92e-6
    assert red.eigenvalues[0] == pytest.approx((1 - o) / 2, abs=1e-9)
    assert red.eigenvalues[1] == pytest.approx((1 + o) / 2, abs=1e-9)
    assert red.entropy == pytest.approx(LN2, abs=1e-9)


def test_qubit_reduced_weak_entanglement_entropy():
    # closed form at beta = 0.2: eigenvalues (1 +- e^{-0.08})/2 give
    # S = 0.16296017 (frozen from the analytic expression)
    red = qubit_reduced(branch_cat(0.2, 32))
    o = math.exp(-0.08)
    expected = entropy_from_eigenvalues([(1 + o) / 2, (1 - o) / 2])
    assert expected == pytest.approx(0.16296017, abs=1e-7)
    assert red.entropy == pytest.approx(expected, abs=1e-9)


def test_entropy_invariant_under_oscillator_unitary():
    rng = np.random.default_rng(2024)
    n = 12
    psi = StateVector.normalized(rng.normal(size=2 * n)
                                 + 1j * rng.normal(size=2 * n))
    base = qubit_reduced(psi).entropy
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    herm = (g + g.conj().T) / 2
    evals, evecs = np.linalg.eigh(herm)
    u = evecs @ np.diag(np.exp(-1j * evals)) @ evecs.conj().T
    rotated = psi.amplitudes.reshape(2, n) @ u.T
    after = qubit_reduced(StateVector(rotated.reshape(-1))).entropy
    assert abs(after - base) < 1e-10


def test_qubit_reduced_rejects_odd_dim():
    with pytest.raises(DimensionError):
        qubit_reduced(StateVector(np.array([1, 0, 0], dtype=complex)))


# ---------------------------------------------------------------------------
# detection coefficients
# ---------------------------------------------------------------------------

def test_detection_resonant_limit():
    c = detection_coefficients(1.0, 0.0)
    assert c.c_up == pytest.approx(-1j, abs=1e-15)
    assert abs(c.c_down) < 1e-15
    assert c.eps_bar == 1.0


def test_detection_equal_shift():
    c = detection_coefficients(1.92, 1.92)
    expected = math.sin(math.pi / math.sqrt(2)) ** 2 / 2
    assert abs(c.c_up) ** 2 == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.3166, abs=5e-4)


def test_detection_far_detuned():
    c = detection_coefficients(0.05, 5.0)
    assert abs(c.c_down) > 0.999


def test_detection_normalization_many_draws():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(10_000):
        eps_d = rng.uniform(0.01, 20.0)
        shift = rng.uniform(-20.0, 20.0)
        c = detection_coefficients(eps_d, shift)
        worst = max(worst, abs(abs(c.c_up) ** 2 + abs(c.c_down) ** 2 - 1.0))
    assert worst < 1e-12


def test_detection_invalid_inputs():
    with pytest.raises(ValidationError):
        detection_coefficients(0.0, 1.0)
    with pytest.raises(ValidationError):
        DetectionCoefficients(1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# position density
# ---------------------------------------------------------------------------

def grid_for(alpha_max):
    half = 2 * abs(alpha_max) + 8
    return np.arange(-half, half + 0.025, 0.05)


def test_position_density_vacuum():
    """Vacuum: variance 1 and zero mean in the x = a + a^dag convention."""
    n = 32
    full = np.zeros(2 * n, dtype=complex)
    full[0] = 1.0
    x = grid_for(0.0)
    rows = position_density(StateVector(full), x)
    mass = np.trapezoid(rows[0], x)
    mean = np.trapezoid(x * rows[0], x)
    var = np.trapezoid(x * x * rows[0], x)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert abs(mean) < 1e-9
    assert var == pytest.approx(1.0, abs=1e-5)
    assert np.max(rows[1]) == 0.0


def test_position_density_coherent_mean():
    n = 64
    full = np.zeros(2 * n, dtype=complex)
    full[n:] = coherent_state(1.5, FockSpace(n)).amplitudes
    x = grid_for(1.5)
    rows = position_density(StateVector(full), x)
    mean = np.trapezoid(x * rows[1], x)
    assert mean == pytest.approx(3.0, abs=1e-6)


def test_position_density_cat_mass_split():
    psi = branch_cat(2.4, 64)
    x = grid_for(2.4)
    rows = position_density(psi, x)
    assert np.trapezoid(rows.sum(axis=0), x) == pytest.approx(1.0, abs=1e-6)
    assert np.trapezoid(rows[0], x) == pytest.approx(0.5, abs=1e-6)
    # peaks on opposite sides
    assert x[np.argmax(rows[0])] > 0 > x[np.argmax(rows[1])]


def test_position_density_truncation_guard():
    n = 16
    full = np.zeros(2 * n, dtype=complex)
    full[n - 1] = 1.0                      # all weight at the edge
    with pytest.raises(TruncationError):
        position_density(StateVector(full), np.linspace(-4, 4, 41))


# ---------------------------------------------------------------------------
# decoherence estimate
# ---------------------------------------------------------------------------

def test_decoherence_estimate_zero_temperature():
    params = SystemParams(q_factor=1e4, temperature=0.0)
    assert decoherence_estimate(12, params) == 0.0


def test_decoherence_estimate_scaling_and_magnitude():
    """(2 n alpha0)^2 kT/Q, with the kT/Q point worth 41.67 kHz at a
    100 MHz oscillator (Q = 1e4, 20 mK)."""
    theta = temperature_to_units(20.0, 100.0)
    params = SystemParams(q_factor=1e4, temperature=theta)
    base = decoherence_estimate(5, params)           # 2 n alpha0 = 1
    assert decoherence_estimate(25, params) == pytest.approx(25 * base,
                                                             rel=1e-12)
    # convert the kT/Q prefactor to laboratory units
    rate_hz = theta * 100e6 / 1e4
    assert rate_hz == pytest.approx(41_674, rel=2e-3)
    # natural-units value: (2 n alpha0)^2 * theta / Q
    assert decoherence_estimate(12, params) == pytest.approx(
        5.76 * theta / 1e4, rel=1e-12)


def test_fit_decay_rate_exact_exponential():
    t = np.linspace(0.0, 10.0, 12)
    v = 3.0 * np.exp(-0.37 * t)
    assert fit_decay_rate(t, v) == pytest.approx(0.37, abs=1e-12)
    with pytest.raises(ValidationError):
        fit_decay_rate([1.0], [1.0])
