"""The experiments: stroboscopic amplification (ideal and finite pulses),
spectroscopic detection, the coherence probe, the two-resonator variant,
force-microscopy figures of merit, and the energy-balance saturation model.

Conventions used throughout: qubit index 0 is |up> (sigma_z = +1), the
amplification stage runs at the charge degeneracy point (eps_z = 0), flips
happen every half period tau0 = pi/omega0, and after n flips the oscillator
branch conditioned on |up> sits at -2 n alpha0 (|down> at +2 n alpha0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .analysis import detection_coefficients, fidelity
from .errors import DimensionError, ValidationError
from .evolve import (
    HannPulse,
    InstantFlip,
    PulseSchedule,
    RectPulse,
    apply_schedule,
    propagate_driven,
    propagate_static,
)
from .fock import (
    FockSpace,
    StateVector,
    coherent_state,
    ladder_ops,
    required_truncation,
)
from .spinboson import SystemParams, build_h_rot

_TWO_MODE_DIM_CAP = 8192


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmplifyResult:
    """Outcome of an amplification run."""

    final_state: StateVector
    n_pulses: int
    conditional_amplitudes: tuple[complex, complex]
    fidelity_vs_ideal: float

    def __post_init__(self):
        if not -1e-12 <= self.fidelity_vs_ideal <= 1.0 + 1e-12:
            raise ValidationError(
                f"fidelity {self.fidelity_vs_ideal} outside [0, 1]",
                field="fidelity_vs_ideal")


@dataclass(frozen=True)
class DetectResult:
    """Measured and analytic sigma_x statistics of a detection run."""

    p_plus: float
    p_minus: float
    analytic_p_plus: float
    analytic_p_minus: float

    def __post_init__(self):
        if abs(self.p_plus + self.p_minus - 1.0) > 1e-9:
            raise ValidationError("p_plus + p_minus != 1", field="p_plus")
        if abs(self.analytic_p_plus + self.analytic_p_minus - 1.0) > 1e-9:
            raise ValidationError("analytic probabilities do not sum to 1",
                                  field="analytic_p_plus")


@dataclass(frozen=True)
class SaturationModel:
    q_factor: float
    alpha0: float
    n_s: float

    def __post_init__(self):
        expected = 2.0 * self.q_factor / math.pi
        if math.isfinite(expected) and abs(self.n_s - expected) > 0.5:
            raise ValidationError("n_s != 2 Q / pi", field="n_s")


class SigmaXMeasurement(NamedTuple):
    p_plus: float
    p_minus: float
    collapsed_plus: StateVector | None
    collapsed_minus: StateVector | None


class MrfmFigures(NamedTuple):
    amplitude: float
    resolution: float
    q_threshold: float
    resolvable: bool


@dataclass(frozen=True)
class TwoModeResult:
    """Two-resonator run: branch amplitudes and post-measurement states.

    ``post_plus``/``post_minus`` are the joint oscillator states after a
    sigma_x outcome, as (n1, n2) arrays.
    """

    p_plus: float
    p_minus: float
    post_plus: np.ndarray
    post_minus: np.ndarray
    amplitudes_up: tuple[complex, complex]
    amplitudes_down: tuple[complex, complex]
    mode_dims: tuple[int, int]


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def plus_vacuum_state(params: SystemParams) -> StateVector:
    """(|up> + |down>)/sqrt(2) with the oscillator in vacuum."""
    n = params.n_trunc
    full = np.zeros(2 * n, dtype=complex)
    full[0] = full[n] = 1.0 / math.sqrt(2.0)
    return StateVector(full)


def conditional_amplitudes(state: StateVector) -> tuple[complex, complex]:
    """<a> in each qubit branch (normalized within the branch)."""
    n = state.dim // 2
    sqrt_k = np.sqrt(np.arange(1, n))
    out = []
    for half in (state.amplitudes[:n], state.amplitudes[n:]):
        w = float(np.vdot(half, half).real)
        if w < 1e-14:
            out.append(0.0 + 0.0j)
        else:
            amp = np.sum(half[:-1].conj() * sqrt_k * half[1:]) / w
            out.append(complex(amp))
    return out[0], out[1]


def _flip(vec: np.ndarray, n: int) -> np.ndarray:
    out = np.empty_like(vec)
    out[:n] = -1j * vec[n:]
    out[n:] = -1j * vec[:n]
    return out


def _half_flip(vec: np.ndarray, n: int) -> np.ndarray:
    s = 1.0 / math.sqrt(2.0)
    out = np.empty_like(vec)
    out[:n] = s * (vec[:n] + vec[n:])
    out[n:] = s * (vec[:n] - vec[n:])
    return out


def _require_degeneracy(params: SystemParams) -> None:
    if params.eps_z != 0.0:
        raise ValidationError(
            "the amplification stage runs at the degeneracy point; "
            "set eps_z = 0", field="eps_z")


def _period_propagator(params: SystemParams):
    evals, evecs = np.linalg.eigh(build_h_rot(params).entries)
    phases = np.exp(-1j * evals * params.tau0)
    return evecs @ (phases[:, None] * evecs.conj().T)


def stroboscopic_unitary(n: int, params: SystemParams) -> np.ndarray:
    """((-i sigma_x) U1)^n composed numerically from the exact period map."""
    _require_degeneracy(params)
    nt = params.n_trunc
    u1 = _period_propagator(params)
    step = np.empty_like(u1)
    step[:nt] = -1j * u1[nt:]
    step[nt:] = -1j * u1[:nt]
    return np.linalg.matrix_power(step, n)


def ideal_stroboscopic_unitary(n: int, params: SystemParams) -> np.ndarray:
    """Closed form of the same map, global phase omitted.

    Even n: the conditional displacement taking each branch to -/+ 2 n
    alpha0.  Odd n: the same displacement followed by oscillator parity
    and a qubit flip.
    """
    nt = params.n_trunc
    space = params.space
    shift = 2.0 * n * params.alpha0
    lower, raise_, _ = ladder_ops(space)
    gen = raise_.entries - lower.entries            # a^dag - a
    evals, evecs = np.linalg.eigh(1j * gen)
    d_up = evecs @ (np.exp(1j * evals * shift)[:, None] * evecs.conj().T)
    d_dn = evecs @ (np.exp(-1j * evals * shift)[:, None] * evecs.conj().T)

    out = np.zeros((2 * nt, 2 * nt), dtype=complex)
    if n % 2 == 0:
        out[:nt, :nt] = d_up
        out[nt:, nt:] = d_dn
    else:
        parity = (-1.0) ** np.arange(nt)
        out[nt:, :nt] = parity[:, None] * d_up
        out[:nt, nt:] = parity[:, None] * d_dn
    return out


def ideal_cat_state(n: int, params: SystemParams,
                    initial: StateVector) -> StateVector:
    """Apply the closed-form n-flip map to ``initial``."""
    vec = ideal_stroboscopic_unitary(n, params) @ initial.amplitudes
    return StateVector(vec)


# ---------------------------------------------------------------------------
# amplification
# ---------------------------------------------------------------------------

def amplify_ideal(n: int, params: SystemParams,
                  initial: StateVector | None = None) -> AmplifyResult:
    """n repetitions of (free half period, instantaneous flip), exactly."""
    _require_degeneracy(params)
    if n < 0:
        raise ValidationError("must be >= 0", field="n")
    params.space.fock.check_amplitude(2.0 * n * params.alpha0)
    if initial is None:
        initial = plus_vacuum_state(params)
    nt = params.n_trunc
    if initial.dim != 2 * nt:
        raise DimensionError(f"initial dim {initial.dim} != {2 * nt}")

    u1 = _period_propagator(params)
    vec = initial.amplitudes
    for _ in range(n):
        vec = _flip(u1 @ vec, nt)
    final = StateVector(vec)
    ref = ideal_cat_state(n, params, initial)
    return AmplifyResult(final, n, conditional_amplitudes(final),
                         fidelity(ref, final))


def amplify_finite(n: int, eps_perp: float, params: SystemParams,
                   initial: StateVector | None = None, shape: str = "hann",
                   tol: float = 1e-9) -> AmplifyResult:
    """Amplification with finite-duration transverse pi pulses.

    Pulses are centered on the flip times k tau0.  ``shape`` selects the
    envelope: ``"hann"`` (raised cosine, peak ``eps_perp``, duration
    2 pi / eps_perp, area pi) or ``"rect"`` (constant ``eps_perp`` for
    pi / eps_perp).  The fidelity reference is the ideal-flip state
    propagated freely to the same physical end time n tau0 + T/2.
    """
    _require_degeneracy(params)
    if n < 1:
        raise ValidationError("must be >= 1", field="n")
    if eps_perp <= 0:
        raise ValidationError("must be > 0", field="eps_perp")
    params.space.fock.check_amplitude(2.0 * n * params.alpha0)
    if initial is None:
        initial = plus_vacuum_state(params)

    if shape == "hann":
        dur = 2.0 * math.pi / eps_perp
        events = [HannPulse(start=k * params.tau0 - dur / 2, duration=dur,
                            amplitude=eps_perp) for k in range(1, n + 1)]
    elif shape == "rect":
        dur = math.pi / eps_perp
        events = [RectPulse(start=k * params.tau0 - dur / 2, duration=dur,
                            amplitude=eps_perp) for k in range(1, n + 1)]
    else:
        raise ValidationError(f"unknown pulse shape {shape!r}", field="shape")

    total = n * params.tau0 + dur / 2
    schedule = PulseSchedule(events, total)
    final = apply_schedule(params, schedule, initial, tol=tol)

    ref = ideal_cat_state(n, params, initial)
    ref = propagate_static(build_h_rot(params), dur / 2, ref)
    return AmplifyResult(final, n, conditional_amplitudes(final),
                         fidelity(ref, final))


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def measure_sigma_x(state: StateVector) -> SigmaXMeasurement:
    """Project onto the qubit |+>/|-> blocks.

    Collapsed states keep the measured qubit factor; a branch with
    probability below 1e-12 is returned as None.
    """
    n = state.dim // 2
    up = state.amplitudes[:n]
    dn = state.amplitudes[n:]
    s = 1.0 / math.sqrt(2.0)
    osc_p = s * (up + dn)
    osc_m = s * (up - dn)
    p_plus = float(np.vdot(osc_p, osc_p).real)
    p_minus = float(np.vdot(osc_m, osc_m).real)

    def collapse(osc, prob, sign):
        if prob < 1e-12:
            return None
        full = np.empty(2 * n, dtype=complex)
        full[:n] = s * osc
        full[n:] = sign * s * osc
        return StateVector(full / math.sqrt(prob))

    return SigmaXMeasurement(p_plus, p_minus,
                             collapse(osc_p, p_plus, +1.0),
                             collapse(osc_m, p_minus, -1.0))


def detection_shift(n: int, params: SystemParams) -> float:
    """Splitting difference 8 n alpha0 lambda0 between the two branches."""
    return 8.0 * n * params.alpha0 * params.lambda0


def detect_spectroscopy(
        state: StateVector, params: SystemParams, n: int,
        duration_convention: str = "calibrated-pi-over-epsd") -> DetectResult:
    """Probe drive, instantaneous pi/2 pulse, then sigma_x statistics.

    The carrier is put in resonance with the branch shifted to -2 n alpha0,
    omega_d = eps_z - 4 n alpha0 lambda0, overriding ``params.omega_d``.
    The drive lasts pi/eps_d under the calibrated convention (for which the
    analytic amplitudes hold) or pi/omega_d under the alternative.
    """
    if params.eps_d <= 0:
        raise ValidationError("must be > 0", field="eps_d")
    omega_d = params.eps_z - 4.0 * n * params.alpha0 * params.lambda0
    run = replace(params, omega_d=omega_d)
    if duration_convention == "calibrated-pi-over-epsd":
        t_d = math.pi / run.eps_d
    elif duration_convention == "paper-pi-over-omegad":
        t_d = math.pi / omega_d
    else:
        raise ValidationError(f"unknown convention {duration_convention!r}",
                              field="duration_convention")

    driven = propagate_driven(run, t_d, state)
    vec = _half_flip(driven.amplitudes, run.n_trunc)
    meas = measure_sigma_x(StateVector(vec))

    coeff = detection_coefficients(run.eps_d, detection_shift(n, run))
    ap = abs(coeff.c_up) ** 2 / 2.0
    return DetectResult(meas.p_plus, meas.p_minus, ap, 1.0 - ap)


def coherence_probe(state: StateVector, params: SystemParams, n: int,
                    coherent_input: bool = True) -> DetectResult:
    """pi/2 pulse, n further ideal flips, then sigma_x statistics.

    With ``coherent_input`` the given state is probed as is; otherwise it
    is treated as the classical mixture of its two qubit branches, each
    probed separately and averaged with its branch weight.  The analytic
    pair is the closed form p_plus = (6 - 2 e^{-8 A^2})/8 with A = 2 n
    alpha0, exact for the ideal cat input.
    """
    _require_degeneracy(params)
    nt = params.n_trunc
    params.space.fock.check_amplitude(4.0 * n * params.alpha0)
    u1 = _period_propagator(params)

    def probe(vec: np.ndarray) -> float:
        vec = _half_flip(vec, nt)
        for _ in range(n):
            vec = _flip(u1 @ vec, nt)
        up = vec[:nt]
        dn = vec[nt:]
        osc_p = (up + dn) / math.sqrt(2.0)
        return float(np.vdot(osc_p, osc_p).real)

    if coherent_input:
        p_plus = probe(state.amplitudes)
    else:
        up = state.amplitudes[:nt]
        dn = state.amplitudes[nt:]
        w_up = float(np.vdot(up, up).real)
        w_dn = float(np.vdot(dn, dn).real)
        p_plus = 0.0
        for w, branch in ((w_up, up), (w_dn, dn)):
            if w < 1e-14:
                continue
            vec = np.zeros(2 * nt, dtype=complex)
            if branch is up:
                vec[:nt] = branch / math.sqrt(w)
            else:
                vec[nt:] = branch / math.sqrt(w)
            p_plus += w * probe(vec)

    size = 2.0 * n * params.alpha0
    if coherent_input:
        ap = (6.0 - 2.0 * math.exp(-8.0 * size * size)) / 8.0
    else:
        ap = 0.5
    return DetectResult(p_plus, 1.0 - p_plus, ap, 1.0 - ap)


# ---------------------------------------------------------------------------
# two resonators
# ---------------------------------------------------------------------------

def two_mode_cat(n: int, lambda01: float, lambda02: float,
                 params: SystemParams) -> TwoModeResult:
    """Ideal flip protocol with two oscillators coupled through sigma_z.

    Each qubit branch keeps the joint oscillator state as a product, so the
    modes are evolved independently per branch and combined only for the
    final sigma_x measurement.  Branch amplitudes reach -/+ n lambda_i /
    omega0.
    """
    if n < 1:
        raise ValidationError("must be >= 1", field="n")
    for name, lam in (("lambda01", lambda01), ("lambda02", lambda02)):
        if lam < 0:
            raise ValidationError("must be >= 0", field=name)
    _require_degeneracy(params)

    alphas = (n * lambda01 / params.omega0, n * lambda02 / params.omega0)
    dims = tuple(required_truncation(a) for a in alphas)
    if 2 * dims[0] * dims[1] > _TWO_MODE_DIM_CAP:
        raise DimensionError(
            f"joint dimension 2*{dims[0]}*{dims[1]} exceeds "
            f"{_TWO_MODE_DIM_CAP}")

    # per-mode, per-branch half-period propagators
    props = []
    for lam, nt in zip((lambda01, lambda02), dims):
        ks = np.arange(nt)
        x = np.zeros((nt, nt))
        x[ks[:-1], ks[1:]] = x[ks[1:], ks[:-1]] = np.sqrt(ks[1:])
        per_branch = []
        for sign in (+1.0, -1.0):
            h = np.diag(params.omega0 * ks.astype(float)) - sign * (lam / 2) * x
            evals, evecs = np.linalg.eigh(h)
            per_branch.append(
                evecs @ (np.exp(-1j * evals * params.tau0)[:, None]
                         * evecs.conj().T))
        props.append(per_branch)

    # branch registers: index 0 follows |up> (sigma_z = +1)
    branch = [[np.zeros(nt, dtype=complex) for nt in dims] for _ in range(2)]
    for b in range(2):
        for i in range(2):
            branch[b][i][0] = 1.0
    for _ in range(n):
        for i in range(2):
            branch[0][i] = props[i][0] @ branch[0][i]
            branch[1][i] = props[i][1] @ branch[1][i]
        branch[0], branch[1] = branch[1], branch[0]   # qubit flip

    def mode_amp(vec):
        return complex(np.sum(vec[:-1].conj()
                              * np.sqrt(np.arange(1, vec.size)) * vec[1:]))

    amp_up = (mode_amp(branch[0][0]), mode_amp(branch[0][1]))
    amp_dn = (mode_amp(branch[1][0]), mode_amp(branch[1][1]))

    joint_up = np.outer(branch[0][0], branch[0][1])
    joint_dn = np.outer(branch[1][0], branch[1][1])
    plus = (joint_up + joint_dn) / 2.0        # includes the 1/sqrt2 weights
    minus = (joint_up - joint_dn) / 2.0
    p_plus = float(np.sum(np.abs(plus) ** 2))
    p_minus = float(np.sum(np.abs(minus) ** 2))
    post_plus = plus / math.sqrt(p_plus) if p_plus > 1e-12 else plus * 0
    post_minus = minus / math.sqrt(p_minus) if p_minus > 1e-12 else minus * 0
    return TwoModeResult(p_plus, p_minus, post_plus, post_minus,
                         amp_up, amp_dn, dims)


# ---------------------------------------------------------------------------
# scaling figures and saturation
# ---------------------------------------------------------------------------

def mrfm_amplitude(n: int, m: int, params: SystemParams) -> MrfmFigures:
    """Force-microscopy scaling: m equal spins multiply the coupling."""
    if n < 1:
        raise ValidationError("must be >= 1", field="n")
    if m < 1:
        raise ValidationError("must be >= 1", field="m")
    resolution = 2.0 * n * params.alpha0
    n_s = 2.0 * params.q_factor / math.pi
    return MrfmFigures(
        amplitude=m * resolution,
        resolution=resolution,
        q_threshold=math.pi / (4.0 * params.alpha0),
        resolvable=resolution > 1.0 and n_s >= n,
    )


def flip_energy_gain(n: int, params: SystemParams) -> float:
    """Energy gained at flip n: 8 n omega0 alpha0^2 (displaced-frame
    bookkeeping: alpha0^2 omega0 [(2n+1)^2 - (2n-1)^2])."""
    return 8.0 * n * params.omega0 * params.alpha0 ** 2


def kicked_amplitude_trajectory(params: SystemParams,
                                n_flips: int) -> np.ndarray:
    """|beta_k| of the classical damped kicked oscillator, k = 0..n_flips.

    Between flips the deviation from the current equilibrium rotates by pi
    and damps by e^{-pi/2Q} (energy decay e^{-omega0 t / Q}); each flip
    swaps the equilibrium sign.  In the co-flipping frame the map is
    beta <- d beta - (1 + d) alpha0.
    """
    d = 1.0 if math.isinf(params.q_factor) else math.exp(
        -math.pi / (2.0 * params.q_factor))
    out = np.empty(n_flips + 1)
    beta = 0.0
    out[0] = 0.0
    for k in range(1, n_flips + 1):
        beta = d * beta - (1.0 + d) * params.alpha0
        out[k] = abs(beta)
    return out


def saturation(params: SystemParams,
               rel_tol: float = 1e-12) -> tuple[SaturationModel, float]:
    """Analytic saturation flip count and its simulated counterpart.

    The simulation iterates the kicked-damped map to its fixed point and
    reports |beta_inf| / (2 alpha0), the flip count at which the per-flip
    gain 2 alpha0 balances the per-cycle damping loss.  Infinite Q never
    saturates and reports inf.
    """
    q = params.q_factor
    model = SaturationModel(q, params.alpha0, 2.0 * q / math.pi)
    if math.isinf(q):
        return model, math.inf
    d = math.exp(-math.pi / (2.0 * q))
    beta = 0.0
    for _ in range(100_000_000):
        new = d * beta - (1.0 + d) * params.alpha0
        if abs(new - beta) <= rel_tol * params.alpha0:
            beta = new
            break
        beta = new
    return model, abs(beta) / (2.0 * params.alpha0)
