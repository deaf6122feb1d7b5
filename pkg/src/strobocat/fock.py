"""Truncated Fock-space primitives.

Everything downstream works in a hard-truncated oscillator basis
|0>, ..., |n_trunc - 1>.  Truncation corrupts the top of the basis by
construction, so two guard notions are provided: a fixed 10% band for
unitarity checks, and a displacement-budget interior for operator-identity
comparisons (see :func:`interior_dim`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, TruncationError

_EXPM_DIM_CAP = 4096


def required_truncation(alpha_max: float) -> int:
    """Minimum Fock dimension for amplitudes up to ``alpha_max``.

    Poisson tail bound with a wide safety margin:
    ``ceil(|a|^2 + 8|a| + 20)``.
    """
    a = abs(alpha_max)
    return math.ceil(a * a + 8.0 * a + 20.0)


@dataclass(frozen=True)
class FockSpace:
    """Oscillator Hilbert space truncated to ``n_trunc`` levels."""

    n_trunc: int

    def __post_init__(self):
        if self.n_trunc < 2:
            raise DimensionError(f"n_trunc must be >= 2, got {self.n_trunc}")

    @property
    def guard_band(self) -> int:
        """Number of top Fock levels excluded from unitarity checks (10%)."""
        return math.ceil(0.1 * self.n_trunc)

    def check_amplitude(self, alpha_max: float) -> None:
        need = required_truncation(alpha_max)
        if need > self.n_trunc:
            raise TruncationError(
                f"amplitude {abs(alpha_max):.3f} needs n_trunc >= {need}, "
                f"space has {self.n_trunc}"
            )


def interior_dim(space: FockSpace, alpha_budget: float) -> int:
    """Dimension of the Fock block unaffected by truncation edge effects.

    Operator products that displace by a total of ``alpha_budget`` corrupt
    the top ``required_truncation(alpha_budget)`` rows; comparisons of such
    products against closed forms are only meaningful on the remaining
    interior block.  (The flat 10% guard band is far too small once the
    accumulated displacement grows past ~1.)
    """
    w = space.n_trunc - required_truncation(alpha_budget)
    if w < 1:
        raise TruncationError(
            f"no interior left: n_trunc={space.n_trunc}, "
            f"displacement budget {alpha_budget:.3f}"
        )
    return w


@dataclass(frozen=True)
class StateVector:
    """Normalized complex state vector."""

    amplitudes: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if self.dim == 0:
            object.__setattr__(self, "dim", amps.shape[0])
        if amps.shape != (self.dim,):
            raise DimensionError(
                f"amplitude vector shape {amps.shape} != ({self.dim},)"
            )

    @classmethod
    def normalized(cls, amplitudes: np.ndarray) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / nrm)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex square matrix with optional structure flags.

    ``hermitian`` asserts max|M - M^dag| < 1e-12.  ``unitary`` asserts
    max|M^dag M - I| < 1e-10 on the interior block (rows/columns below
    ``n_trunc - guard_band``); the flagged check is performed at
    construction time against the matrix itself.
    """

    entries: np.ndarray
    dim: int = field(default=0)
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", m)
        if self.dim == 0:
            object.__setattr__(self, "dim", m.shape[0])
        if m.shape != (self.dim, self.dim):
            raise DimensionError(f"matrix shape {m.shape} != square {self.dim}")
        if self.hermitian:
            dev = np.max(np.abs(m - m.conj().T))
            if dev >= 1e-12:
                raise ValueError(f"hermitian flag violated: max dev {dev:.2e}")
        if self.unitary:
            g = math.ceil(0.1 * self.dim)
            k = self.dim - g
            blk = (m.conj().T @ m)[:k, :k] - np.eye(k)
            dev = np.max(np.abs(blk))
            if dev >= 1e-10:
                raise ValueError(f"unitary flag violated on interior: {dev:.2e}")


def ladder_ops(space: FockSpace):
    """Lowering, raising and number operators on the truncated space.

    Returns
    -------
    (lower, raise_, number) : tuple of OperatorMatrix
        ``lower[n-1, n] = sqrt(n)``; ``raise_ = lower^dag``;
        ``number = raise_ @ lower`` (diagonal 0..n_trunc-1).
    """
    n = space.n_trunc
    lower = np.zeros((n, n), dtype=complex)
    idx = np.arange(1, n)
    lower[idx - 1, idx] = np.sqrt(idx)
    raise_ = lower.conj().T
    number = np.diag(np.arange(n, dtype=float)).astype(complex)
    return (
        OperatorMatrix(lower),
        OperatorMatrix(raise_),
        OperatorMatrix(number, hermitian=True),
    )


def coherent_state(alpha: complex, space: FockSpace) -> StateVector:
    """Coherent state |alpha> in the truncated Fock basis.

    Amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``, built by the stable
    ratio recurrence and renormalized.  Raises TruncationError when the
    truncation rule ``|a|^2 + 8|a| + 20 <= n_trunc`` fails.
    """
    space.check_amplitude(abs(alpha))
    n = space.n_trunc
    amps = np.zeros(n, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for k in range(1, n):
        amps[k] = amps[k - 1] * alpha / math.sqrt(k)
    return StateVector.normalized(amps)


def displacement(alpha: complex, space: FockSpace) -> OperatorMatrix:
    """Displacement operator D(alpha) = exp(alpha a^dag - alpha* a)."""
    space.check_amplitude(abs(alpha))
    lower, raise_, _ = ladder_ops(space)
    gen = alpha * raise_.entries - np.conj(alpha) * lower.entries
    # generator is anti-hermitian: i*gen is hermitian, use the exact path
    herm = OperatorMatrix(1j * gen, hermitian=True)
    out = matrix_exponential(herm, -1j)
    return OperatorMatrix(out.entries, unitary=True)


def matrix_exponential(m: OperatorMatrix, scale: complex) -> OperatorMatrix:
    """exp(scale * M).

    Hermitian M is diagonalized (exact to machine precision; unitary result
    for imaginary scale); anything else falls back to scaling-and-squaring
    (scipy's Pade implementation).
    """
    if m.dim > _EXPM_DIM_CAP:
        raise DimensionError(f"dimension {m.dim} exceeds expm cap {_EXPM_DIM_CAP}")
    if m.hermitian:
        evals, vecs = np.linalg.eigh(m.entries)
        out = (vecs * np.exp(scale * evals)) @ vecs.conj().T
        return OperatorMatrix(out)
    return OperatorMatrix(scipy.linalg.expm(scale * m.entries))
