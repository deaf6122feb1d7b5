import math

import numpy as np
import pytest

from strobocat.errors import DimensionError, ValidationError
from strobocat.fock import (
    FockSpace,
    OperatorMatrix,
    coherent_state,
    interior_dim,
    ladder_ops,
    matrix_exponential,
)
from strobocat.spinboson import (
    SIGMA_X,
    SIGMA_Z,
    CompositeSpace,
    PhysicalDeviceParams,
    SystemParams,
    build_h_detect,
    build_h_rot,
    conditional_displacement,
    coupling_from_physical,
    embed,
    temperature_to_units,
)


def test_params_validation_and_derived():
    p = SystemParams(lambda0=0.2)
    assert p.alpha0 == 0.1
    assert p.tau0 == math.pi
    with pytest.raises(ValidationError):
        SystemParams(omega0=0.0)
    with pytest.raises(ValidationError):
        SystemParams(temperature=-1.0)
    with pytest.raises(ValidationError):
        SystemParams(n_trunc=1)


def test_h_rot_uncoupled_spectrum():
    p = SystemParams(lambda0=0.0, n_trunc=16)
    h = build_h_rot(p).entries
    evals = np.sort(np.linalg.eigvalsh(h))
    want = np.sort(np.concatenate([np.arange(16), np.arange(16)]).astype(float))
    assert np.max(np.abs(evals - want)) < 1e-12


def test_h_rot_displaced_ground_energy():
    # completing the square: E0 = -lambda0^2 / (4 w0)
    p = SystemParams(lambda0=0.2, n_trunc=64)
    evals = np.linalg.eigvalsh(build_h_rot(p).entries)
    assert abs(evals[0] - (-0.01)) < 1e-9


def test_h_rot_displaced_spectrum_interior():
    p = SystemParams(lambda0=0.2, n_trunc=64)
    evals = np.sort(np.linalg.eigvalsh(build_h_rot(p).entries))
    want = np.sort(
        np.concatenate([np.arange(64), np.arange(64)]) - 0.2**2 / 4.0
    )
    # interior eigenvalues only; the top of the ladder is truncation-corrupted
    assert np.max(np.abs(evals[:80] - want[:80])) < 1e-8


def test_h_rot_hermitian_exact():
    h = build_h_rot(SystemParams(eps_z=3.2, eps_perp_amp=10.0), True).entries
    assert np.array_equal(h, h.conj().T)


def test_h_rot_pulse_term_toggle():
    p = SystemParams(eps_perp_amp=10.0, n_trunc=8)
    diff = build_h_rot(p, True).entries - build_h_rot(p, False).entries
    assert np.allclose(diff, 5.0 * np.kron(SIGMA_X, np.eye(8)))


def test_h_rot_commutes_with_sigma_z_when_uncoupled():
    p = SystemParams(lambda0=0.0, eps_z=1.3, n_trunc=8)
    h = build_h_rot(p).entries
    sz = np.kron(SIGMA_Z, np.eye(8))
    assert np.max(np.abs(h @ sz - sz @ h)) == 0.0


def test_h_detect_drive_amplitude():
    p = SystemParams(lambda0=0.0, eps_z=4.0, eps_d=1.9, omega_d=3.04, n_trunc=4)
    h0 = build_h_detect(p, 0.0).entries
    drive = h0 - build_h_rot(p).entries
    assert np.allclose(drive, 1.9 * np.kron(SIGMA_X, np.eye(4)))
    # bare-qubit splitting is eps_z exactly when lambda0 = eps_d = 0
    pz = SystemParams(lambda0=0.0, eps_z=4.0, n_trunc=4)
    hz = build_h_rot(pz).entries
    assert abs((hz[4, 4] - hz[0, 0]) - 4.0) < 1e-14


def test_h_detect_frozen_resonator_shift():
    # <+-2na0 | -(lambda0/2)(a+a^dag) | +-2na0> = -+ 2 n a0 lambda0
    p = SystemParams(lambda0=0.2, n_trunc=64)
    n = 12
    amp = 2 * n * p.alpha0
    lower, raise_, _ = ladder_ops(p.space.fock)
    x = lower.entries + raise_.entries
    for sgn in (+1, -1):
        v = coherent_state(sgn * amp, p.space.fock).amplitudes
        got = np.vdot(v, -(p.lambda0 / 2.0) * (x @ v)).real
        assert abs(got - (-sgn * 2 * n * p.alpha0 * p.lambda0)) < 1e-8


def test_embed_conventions():
    space = CompositeSpace(FockSpace(4))
    sz = embed(SIGMA_Z, np.eye(4), space).entries
    assert np.allclose(np.diag(sz)[:4], 1.0) and np.allclose(np.diag(sz)[4:], -1.0)
    sx = embed(SIGMA_X, np.eye(4), space).entries
    assert np.allclose(sx @ sx, np.eye(8))
    _, _, number = ladder_ops(space.fock)
    nn = embed(np.eye(2), number.entries, space).entries
    v = np.zeros(8)
    v[4 + 3] = 1.0  # |down> (x) e3
    assert np.allclose(nn @ v, 3.0 * v)
    with pytest.raises(DimensionError):
        embed(np.eye(3), np.eye(4), space)
    with pytest.raises(DimensionError):
        embed(np.eye(2), np.eye(5), space)


def test_sigma_x_conjugates_displacement_to_inverse():
    # sigma_x D sigma_x = D^dag for the sigma_z-conditional displacement
    space = CompositeSpace(FockSpace(64))
    d = conditional_displacement(1.1, space).entries
    sx = embed(SIGMA_X, np.eye(64), space).entries
    lhs = sx @ d @ sx
    rhs = d.conj().T
    k = interior_dim(space.fock, 2 * 1.1)
    mask = np.concatenate([np.arange(k), 64 + np.arange(k)])
    assert np.max(np.abs(lhs[np.ix_(mask, mask)] - rhs[np.ix_(mask, mask)])) < 1e-10


def test_parity_conjugates_displacement_to_inverse():
    space = FockSpace(64)
    lower, raise_, number = ladder_ops(space)
    gen = 1.1 * (raise_.entries - lower.entries)
    d = matrix_exponential(OperatorMatrix(1j * gen, hermitian=True), -1j).entries
    par = matrix_exponential(number, 1j * math.pi).entries
    lhs = par @ d @ par.conj().T
    k = interior_dim(space, 2 * 1.1)
    assert np.max(np.abs(lhs[:k, :k] - d.conj().T[:k, :k])) < 1e-10


def test_coupling_from_physical_paper_point():
    dev = PhysicalDeviceParams(
        e_j0=10e9,
        e_c=50e9,
        c_x0=20e-18,
        c_g=1e-18,
        v_x0=1.0,
        v_g0=0.1,
        d0=1e-8,
        mass=3.28e-16,
        omega0=2 * math.pi * 100e6,
    )
    assert abs(dev.delta_x0 / dev.d0 - 1.6e-6) / 1.6e-6 < 0.01
    lam, eps_z = coupling_from_physical(dev)
    assert abs(lam - 20e6) / 20e6 < 0.05
    assert eps_z > 0

    # linearity in dx0/d0: doubling d0 halves lambda0 exactly
    dev2 = PhysicalDeviceParams(**{**dev.__dict__, "d0": 2e-8})
    lam2, _ = coupling_from_physical(dev2)
    assert abs(lam2 - lam / 2) < 1e-9 * lam

    with pytest.raises(ValidationError):
        PhysicalDeviceParams(**{**dev.__dict__, "mass": 0.0})


def test_coupling_zero_bias():
    dev = PhysicalDeviceParams(
        e_j0=10e9, e_c=50e9, c_x0=20e-18, c_g=1e-18, v_x0=1e-30, v_g0=0.1,
        d0=1e-8, mass=3.28e-16, omega0=2 * math.pi * 100e6,
    )
    lam, _ = coupling_from_physical(dev)
    assert lam < 1e-15


def test_temperature_conversion():
    theta = temperature_to_units(20.0, 100.0)
    assert abs(theta - 4.1674) < 1e-3
