"""Observables and closed-form oracles.

Fidelities, qubit reduced states and their entanglement entropy, the
analytic spectroscopy amplitudes, position-space densities for plotting,
and the thermal decoherence-rate estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, TruncationError, ValidationError
from .fock import StateVector
from .spinboson import SystemParams

_LN2 = math.log(2.0)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    if a.dim != b.dim:
        raise DimensionError(f"state dims differ: {a.dim} vs {b.dim}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def entropy_from_eigenvalues(eigenvalues) -> float:
    """Von Neumann entropy -sum(p ln p) with 0 ln 0 = 0, in natural-log units."""
    s = 0.0
    for p in np.asarray(eigenvalues, dtype=float):
        if p > 1e-300:
            s -= p * math.log(p)
    return s


@dataclass(frozen=True)
class QubitReducedState:
    """2x2 reduced density matrix of the qubit, with spectrum and entropy."""

    rho: np.ndarray
    eigenvalues: tuple[float, float]
    entropy: float

    def __post_init__(self):
        if abs(np.trace(self.rho) - 1.0) > 1e-10:
            raise ValidationError("trace not 1", field="rho")
        for p in self.eigenvalues:
            if p < -1e-10 or p > 1 + 1e-10:
                raise ValidationError(f"eigenvalue {p} outside [0, 1]",
                                      field="eigenvalues")
        if self.entropy < 0 or self.entropy > _LN2 + 1e-9:
            raise ValidationError(f"entropy {self.entropy} outside "
                                  "[0, ln 2]", field="entropy")

    @property
    def p_up(self) -> float:
        return float(self.rho[0, 0].real)

    @property
    def p_down(self) -> float:
        return float(self.rho[1, 1].real)


def qubit_reduced(state: StateVector) -> QubitReducedState:
    """Partial trace over the oscillator factor of a composite state."""
    if state.dim % 2:
        raise DimensionError(f"composite dim {state.dim} is odd")
    n = state.dim // 2
    up = state.amplitudes[:n]
    dn = state.amplitudes[n:]
    rho = np.array([
        [np.vdot(up, up), np.vdot(dn, up)],
        [np.vdot(up, dn), np.vdot(dn, dn)],
    ])
    evals = np.linalg.eigvalsh(rho)
    evals = np.clip(evals, 0.0, 1.0)
    return QubitReducedState(rho, (float(evals[0]), float(evals[1])),
                             entropy_from_eigenvalues(evals))


@dataclass(frozen=True)
class DetectionCoefficients:
    """Analytic flip/no-flip amplitudes of the calibrated probe drive.

    For a drive of amplitude eps_d applied for pi/eps_d against a level
    shift ``shift``, the qubit starting in the shifted level acquires
    amplitude ``c_up`` to flip and ``c_down`` to stay.
    """

    c_up: complex
    c_down: complex
    eps_bar: float

    def __post_init__(self):
        nrm = abs(self.c_up) ** 2 + abs(self.c_down) ** 2
        if abs(nrm - 1.0) > 1e-12:
            raise ValidationError(f"|c_up|^2 + |c_down|^2 = {nrm!r}",
                                  field="c_up")


def detection_coefficients(eps_d: float, shift: float) -> DetectionCoefficients:
    """Two-level Rabi amplitudes at detuning ``shift``, duration pi/eps_d."""
    if eps_d <= 0:
        raise ValidationError("must be > 0", field="eps_d")
    eps_bar = math.hypot(eps_d, shift)
    phase = math.pi * eps_bar / (2.0 * eps_d)
    c_up = -1j * math.sin(phase) * (eps_d / eps_bar)
    c_down = math.cos(phase) - 1j * math.sin(phase) * (shift / eps_bar)
    return DetectionCoefficients(c_up, c_down, eps_bar)


def _hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions for the convention x = a + a^dag.

    psi_n(x) = 2^{-1/4} phi_n(x/sqrt 2) with phi_n the standard normalized
    Hermite functions, evaluated by the stable normalized upward recurrence.
    Row n of the result is psi_n on the grid.
    """
    y = x / math.sqrt(2.0)
    out = np.empty((n_max, x.size))
    out[0] = 2.0 ** -0.25 * np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for n in range(2, n_max):
        out[n] = (math.sqrt(2.0 / n) * y * out[n - 1]
                  - math.sqrt((n - 1.0) / n) * out[n - 2])
    return out


def position_density(state: StateVector, grid) -> np.ndarray:
    """Per-qubit-branch position densities |<x|psi_branch>|^2.

    Positions are measured in units of the zero-point length, i.e.
    x = a + a^dag, so the vacuum has variance 1 and a coherent state
    |alpha> is centered at 2 Re alpha.  Returns shape (2, len(grid));
    each row integrates to its branch probability.

    Raises TruncationError when either branch carries more than 1e-6 of
    its weight in the top guard band, since the density is then shaped
    by the truncation edge rather than the physics.
    """
    x = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("grid must be finite", field="grid")
    if state.dim % 2:
        raise DimensionError(f"composite dim {state.dim} is odd")
    n = state.dim // 2
    guard = math.ceil(0.1 * n)
    for half in (state.amplitudes[:n], state.amplitudes[n:]):
        top = float(np.sum(np.abs(half[n - guard:]) ** 2))
        if top > 1e-6:
            raise TruncationError(
                f"branch holds {top:.2e} of its weight in the top "
                f"{guard} levels; enlarge n_trunc")
    funcs = _hermite_functions(n, x)
    rows = np.empty((2, x.size))
    rows[0] = np.abs(state.amplitudes[:n] @ funcs) ** 2
    rows[1] = np.abs(state.amplitudes[n:] @ funcs) ** 2
    return rows


def decoherence_estimate(n_pulses: int, params: SystemParams) -> float:
    """Order-of-magnitude thermal decoherence rate (2 n alpha0)^2 kT/Q.

    ``params.temperature`` holds k_B T / (hbar omega0), so the returned
    rate is in the same natural units as omega0.
    """
    size = 2.0 * n_pulses * params.alpha0
    return size * size * params.temperature * params.omega0 / params.q_factor


def fit_decay_rate(times, values) -> float:
    """Least-squares exponential rate: fits log|v| = log v0 - rate * t."""
    t = np.asarray(times, dtype=float)
    v = np.abs(np.asarray(values))
    if t.size < 2:
        raise ValidationError("need at least two samples", field="times")
    slope = np.polyfit(t, np.log(v), 1)[0]
    return float(-slope)
