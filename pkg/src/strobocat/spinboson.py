"""Composite qubit (x) oscillator space and rotating-frame Hamiltonians.

Internal unit convention: hbar = 1, energies in units of omega0, times in
units of 1/omega0.  The composite index is ``qubit * n_trunc + fock`` with
qubit index 0 = |up>, 1 = |down> and sigma_z |up> = +|up>.

H_rot = w0 a^dag a - (lambda0/2)(a + a^dag) sigma_z - (eps_z/2) sigma_z
        [+ (eps_perp/2) sigma_x during an amplification pulse]

H_detect(t) = H_rot + eps_d cos(w_d t) sigma_x
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as const

from .errors import DimensionError, ValidationError
from .fock import FockSpace, OperatorMatrix, ladder_ops, matrix_exponential

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class SystemParams:
    """Rotating-frame model parameters (energies in units of omega0)."""

    omega0: float = 1.0
    lambda0: float = 0.2
    eps_z: float = 0.0
    eps_perp_amp: float = 0.0
    eps_d: float = 0.0
    omega_d: float = 0.0
    q_factor: float = 1.0e4
    temperature: float = 0.0  # k_B T in energy units
    n_trunc: int = 64

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValidationError("must be > 0", "omega0")
        if not self.q_factor > 0:
            raise ValidationError("must be > 0", "q_factor")
        if self.n_trunc < 2:
            raise ValidationError("must be >= 2", "n_trunc")
        if self.temperature < 0:
            raise ValidationError("must be >= 0", "temperature")

    @property
    def alpha0(self) -> float:
        """Dimensionless coupling lambda0 / (2 omega0); never stored."""
        return self.lambda0 / (2.0 * self.omega0)

    @property
    def tau0(self) -> float:
        """Half oscillation period pi/omega0 (the stroboscopic interval)."""
        return math.pi / self.omega0

    @property
    def space(self) -> "CompositeSpace":
        return CompositeSpace(FockSpace(self.n_trunc))


@dataclass(frozen=True)
class PhysicalDeviceParams:
    """Device-level inputs in SI units (energies in Hz, i.e. E/h)."""

    e_j0: float  # static Josephson energy [Hz]
    e_c: float  # charging energy [Hz]
    c_x0: float  # coupling capacitance [F]
    c_g: float  # gate capacitance [F]
    v_x0: float  # resonator bias amplitude [V]
    v_g0: float  # gate ac amplitude [V]
    d0: float  # qubit-resonator distance [m]
    mass: float  # resonator effective mass [kg]
    omega0: float  # mechanical angular frequency [rad/s]

    def __post_init__(self):
        for name in ("e_j0", "e_c", "c_x0", "c_g", "v_x0", "v_g0", "d0",
                     "mass", "omega0"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be > 0", name)

    @property
    def delta_x0(self) -> float:
        """Zero-point motion sqrt(hbar / (2 m omega0)) [m]."""
        return math.sqrt(const.hbar / (2.0 * self.mass * self.omega0))


def coupling_from_physical(dev: PhysicalDeviceParams) -> tuple[float, float]:
    """(lambda0, eps_z) from device values, in the units of ``e_c``.

    lambda0 = 4 E_c (V_x0 C_x0 / 2e)(dx0 / d0)
    eps_z   = 8 E_c (C_g V_g0 + C_x0 V_x0) / 2e
    """
    two_e = 2.0 * const.e
    lam = 4.0 * dev.e_c * (dev.v_x0 * dev.c_x0 / two_e) * (dev.delta_x0 / dev.d0)
    eps_z = 8.0 * dev.e_c * (dev.c_g * dev.v_g0 + dev.c_x0 * dev.v_x0) / two_e
    return lam, eps_z


def temperature_to_units(t_millikelvin: float, frequency_mhz: float) -> float:
    """k_B T in units of the oscillator quantum h*f (hbar=1, omega0=1)."""
    return (const.k * t_millikelvin * 1e-3) / (const.h * frequency_mhz * 1e6)


@dataclass(frozen=True)
class CompositeSpace:
    """Qubit (x) truncated oscillator, index = qubit*n_trunc + fock."""

    fock: FockSpace

    @property
    def n_trunc(self) -> int:
        return self.fock.n_trunc

    @property
    def dim(self) -> int:
        return 2 * self.fock.n_trunc


def embed(qubit_op: np.ndarray, osc_op: np.ndarray,
          space: CompositeSpace) -> OperatorMatrix:
    """Kronecker product respecting the qubit-major ordering convention."""
    q = np.asarray(qubit_op, dtype=complex)
    o = np.asarray(osc_op, dtype=complex)
    if q.shape != (2, 2):
        raise DimensionError(f"qubit operator must be 2x2, got {q.shape}")
    if o.shape != (space.n_trunc, space.n_trunc):
        raise DimensionError(
            f"oscillator operator {o.shape} does not match n_trunc "
            f"{space.n_trunc}"
        )
    return OperatorMatrix(np.kron(q, o))


def build_h_rot(params: SystemParams, include_pulse: bool = False) -> OperatorMatrix:
    """Rotating-frame Hamiltonian on the composite space (hermitian)."""
    space = params.space
    lower, raise_, number = ladder_ops(space.fock)
    x = lower.entries + raise_.entries
    i2 = np.eye(2)
    i_f = np.eye(space.n_trunc)
    h = params.omega0 * np.kron(i2, number.entries)
    h -= (params.lambda0 / 2.0) * np.kron(SIGMA_Z, x)
    h -= (params.eps_z / 2.0) * np.kron(SIGMA_Z, i_f)
    if include_pulse:
        h += (params.eps_perp_amp / 2.0) * np.kron(SIGMA_X, i_f)
    return OperatorMatrix(h, hermitian=True)


def build_h_detect(params: SystemParams, t: float) -> OperatorMatrix:
    """H_rot plus the spectroscopy drive eps_d cos(w_d t) sigma_x at time t."""
    h = build_h_rot(params, include_pulse=False).entries.copy()
    g = params.eps_d * math.cos(params.omega_d * t)
    h += g * np.kron(SIGMA_X, np.eye(params.n_trunc))
    return OperatorMatrix(h, hermitian=True)


def conditional_displacement(alpha: complex, space: CompositeSpace) -> OperatorMatrix:
    """Block-diagonal D = exp[(alpha a^dag - alpha* a) sigma_z].

    Displaces the |up> branch by +alpha and the |down> branch by -alpha.
    """
    space.fock.check_amplitude(abs(alpha))
    lower, raise_, _ = ladder_ops(space.fock)
    gen = alpha * raise_.entries - np.conj(alpha) * lower.entries
    g = np.kron(SIGMA_Z, gen)
    out = matrix_exponential(OperatorMatrix(1j * g, hermitian=True), -1j)
    return OperatorMatrix(out.entries, unitary=True)
