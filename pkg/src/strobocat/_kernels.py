"""JIT-compiled hot loops for the midpoint-exponential stepper.

The driven Hamiltonians all share one shape on the composite space:

    H(t) = [ T_up    g(t) I ]      T_up/T_dn real symmetric tridiagonal,
           [ g(t) I  T_dn   ]      g(t) a scalar sigma_x drive amplitude.

exp(-i dt H) psi is applied by a scaled Taylor series on that structure;
one matrix-vector product costs O(n) instead of O(n^2), which is what makes
the 1e-9 step-halving convergence affordable.
"""

import numpy as np
from numba import njit

_THETA = 0.2  # max ||H||*dt per Taylor substep
_MAX_TERMS = 30


@njit(cache=True, nogil=True)
def _matvec(dup, ddn, oup, odn, g, x, out):
    n = dup.shape[0]
    # up block: tridiagonal + g * lower half
    out[0] = dup[0] * x[0] + g * x[n]
    if n > 1:
        out[0] += oup[0] * x[1]
    for i in range(1, n - 1):
        out[i] = (dup[i] * x[i] + oup[i] * x[i + 1] + oup[i - 1] * x[i - 1]
                  + g * x[n + i])
    if n > 1:
        out[n - 1] = (dup[n - 1] * x[n - 1] + oup[n - 2] * x[n - 2]
                      + g * x[2 * n - 1])
    # down block
    out[n] = ddn[0] * x[n] + g * x[0]
    if n > 1:
        out[n] += odn[0] * x[n + 1]
    for i in range(1, n - 1):
        out[n + i] = (ddn[i] * x[n + i] + odn[i] * x[n + i + 1]
                      + odn[i - 1] * x[n + i - 1] + g * x[i])
    if n > 1:
        out[2 * n - 1] = (ddn[n - 1] * x[2 * n - 1] + odn[n - 2] * x[2 * n - 2]
                          + g * x[n - 1])


@njit(cache=True, nogil=True)
def midpoint_steps(dup, ddn, oup, odn, g_mid, dt, psi0):
    """Apply exp(-i dt H(t_k)) for each midpoint sample g_mid[k]."""
    n = dup.shape[0]
    dim = 2 * n
    psi = psi0.copy()
    y = np.empty(dim, dtype=np.complex128)
    term = np.empty(dim, dtype=np.complex128)
    ht = np.empty(dim, dtype=np.complex128)

    base = 0.0
    for i in range(n):
        da = abs(dup[i])
        db = abs(ddn[i])
        if da > base:
            base = da
        if db > base:
            base = db
    omax = 0.0
    for i in range(n - 1):
        oa = abs(oup[i])
        ob = abs(odn[i])
        if oa > omax:
            omax = oa
        if ob > omax:
            omax = ob
    base += 2.0 * omax

    for k in range(g_mid.shape[0]):
        g = g_mid[k]
        hnorm = base + abs(g)
        m = int(hnorm * dt / _THETA) + 1
        sdt = dt / m
        for _ in range(m):
            for i in range(dim):
                y[i] = psi[i]
                term[i] = psi[i]
            for p in range(1, _MAX_TERMS + 1):
                _matvec(dup, ddn, oup, odn, g, term, ht)
                c = -1j * sdt / p
                tn2 = 0.0
                for i in range(dim):
                    t = c * ht[i]
                    term[i] = t
                    y[i] += t
                    tn2 += t.real * t.real + t.imag * t.imag
                if tn2 < 1e-34:
                    break
            for i in range(dim):
                psi[i] = y[i]
    return psi
