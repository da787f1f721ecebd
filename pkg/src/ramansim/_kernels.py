"""Compiled marching kernels for the transient Raman equations.

Both kernels march in retarded time tau. At each tau sample the fields are
integrated along x with Heun's rule using the coherences stored at every x
node; the coherences are then advanced to the next tau sample with the
trapezoidal rule, using a predicted slice to supply the right-hand side
at the far end. Every step is second order in both dx and dtau.

Status rows are ``(code, x_slice, tau_index)`` with code 0 = ok,
1 = diverged, 2 = non-finite sample.
"""

import numpy as np
from numba import njit

OK = 0
DIVERGED = 1
NONFINITE = 2

DIVERGENCE_FACTOR = 1e6


@njit(cache=True, nogil=True)
def _check(E, nx, limit):
    for j in range(nx):
        for c in range(E.shape[1]):
            v = E[j, c]
            if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                return NONFINITE, j
            if abs(v) > limit:
                return DIVERGED, j
    return OK, 0


# ---------------------------------------------------------------- single mode


@njit(cache=True, nogil=True)
def _sweep1(e_in, q, E, h, nx):
    E[0, 0] = e_in
    E[0, 1] = 0.0
    for j in range(nx - 1):
        L = E[j, 0]
        S = E[j, 1]
        a = q[j]
        b = q[j + 1]
        dL = -a * S
        dS = L * np.conj(a)
        Lp = L + h * dL
        Sp = S + h * dS
        E[j + 1, 0] = L + 0.5 * h * (dL - b * Sp)
        E[j + 1, 1] = S + 0.5 * h * (dS + Lp * np.conj(b))


@njit(cache=True, nogil=True)
def _rhs1(E, q, gain, out, nx):
    for j in range(nx):
        out[j] = gain * E[j, 0] * np.conj(E[j, 1])


@njit(cache=True, nogil=True)
def single_mode(pump, q0, nx, h, dtau, gain, out_fields, out_q, status):
    """Integrate dL/dx = -q S, dS/dx = q* L, dq/dtau = gain L S*.

    ``q0`` holds one seed per trial, applied at the first tau sample on
    every x node. Writes x_max fields to ``out_fields[trial, 0|1, tau]``
    and x_max coherence to ``out_q[trial, tau]``.
    """
    ntau = pump.shape[0]
    scale = 0.0
    for k in range(ntau):
        scale = max(scale, abs(pump[k]))
    if scale == 0.0:
        scale = 1.0
    limit = DIVERGENCE_FACTOR * scale
    for tr in range(q0.shape[0]):
        q = np.empty(nx, np.complex128)
        qp = np.empty(nx, np.complex128)
        f = np.empty(nx, np.complex128)
        g = np.empty(nx, np.complex128)
        E = np.zeros((nx, 2), np.complex128)
        for j in range(nx):
            q[j] = q0[tr]
        _sweep1(pump[0], q, E, h, nx)
        out_fields[tr, 0, 0] = E[nx - 1, 0]
        out_fields[tr, 1, 0] = E[nx - 1, 1]
        out_q[tr, 0] = q[nx - 1]
        status[tr, 0] = OK
        for k in range(ntau - 1):
            _rhs1(E, q, gain, f, nx)
            for j in range(nx):
                qp[j] = q[j] + dtau * f[j]
            _sweep1(pump[k + 1], qp, E, h, nx)
            _rhs1(E, qp, gain, g, nx)
            for j in range(nx):
                q[j] = q[j] + 0.5 * dtau * (f[j] + g[j])
            _sweep1(pump[k + 1], q, E, h, nx)
            code, where = _check(E, nx, limit)
            if code != OK:
                status[tr, 0] = code
                status[tr, 1] = where
                status[tr, 2] = k + 1
                break
            out_fields[tr, 0, k + 1] = E[nx - 1, 0]
            out_fields[tr, 1, k + 1] = E[nx - 1, 1]
            out_q[tr, k + 1] = q[nx - 1]


# ------------------------------------------------------------------- two mode


@njit(cache=True, nogil=True)
def _sweep2(e_in, q, E, h, nx, use_q3):
    E[0, 0] = e_in
    E[0, 1] = 0.0
    E[0, 2] = 0.0
    for j in range(nx - 1):
        L = E[j, 0]
        S1 = E[j, 1]
        S2 = E[j, 2]
        a1 = q[j, 0]
        a2 = q[j, 1]
        a3 = q[j, 2]
        dL = -S1 * a1 - S2 * a2
        d1 = L * np.conj(a1)
        d2 = L * np.conj(a2)
        if use_q3:
            dL += 0.25 * L * (np.conj(a3) - a3)
            d1 += 0.25 * S2 * np.conj(a3)
            d2 -= 0.25 * S1 * a3
        Lp = L + h * dL
        S1p = S1 + h * d1
        S2p = S2 + h * d2
        b1 = q[j + 1, 0]
        b2 = q[j + 1, 1]
        b3 = q[j + 1, 2]
        eL = -S1p * b1 - S2p * b2
        e1 = Lp * np.conj(b1)
        e2 = Lp * np.conj(b2)
        if use_q3:
            eL += 0.25 * Lp * (np.conj(b3) - b3)
            e1 += 0.25 * S2p * np.conj(b3)
            e2 -= 0.25 * S1p * b3
        E[j + 1, 0] = L + 0.5 * h * (dL + eL)
        E[j + 1, 1] = S1 + 0.5 * h * (d1 + e1)
        E[j + 1, 2] = S2 + 0.5 * h * (d2 + e2)


@njit(cache=True, nogil=True)
def _rhs2(E, q, alpha, w1, w2, rot, use_q3, out, nx):
    # rot = exp(i delta tau) carries the pump-beat frame mismatch
    for j in range(nx):
        L = E[j, 0]
        S1 = E[j, 1]
        S2 = E[j, 2]
        q1 = q[j, 0]
        q2 = q[j, 1]
        q3 = q[j, 2]
        LL = L * np.conj(L)
        S21 = S2 * np.conj(S1)
        f1 = -w1 * L * np.conj(S1) - 1j * alpha * LL * rot * q2 - 1j * S21 * q2
        f2 = -w2 * L * np.conj(S2) + 1j * alpha * LL * np.conj(rot) * q1 + 1j * np.conj(S21) * q1
        if use_q3:
            f1 += -1j * L * np.conj(S2) * q3
            f2 += -1j * L * np.conj(S1) * np.conj(q3)
            out[j, 2] = (
                1j * S2 * np.conj(L) * q1
                + 1j * L * np.conj(S1) * np.conj(q2)
                - (LL * rot + S21) * (w1 - w2)
            )
        else:
            out[j, 2] = 0.0
        out[j, 0] = f1
        out[j, 1] = f2


@njit(cache=True, nogil=True)
def two_mode(
    pump, seeds, nx, h, dtau, alpha, w1, w2, delta, use_q3,
    out_fields, out_q, snap_idx, snap_fields, snap_q, status,
):
    """Integrate the three-field, three-coherence system.

    ``seeds[trial, j, :]`` are the (q1, q2) values at the first tau sample
    on x node ``j`` (``seeds.shape[1] == 1`` broadcasts one pair over x).
    ``snap_idx`` lists x nodes whose fields and coherences are recorded for
    every tau in ``snap_fields`` / ``snap_q`` (first trial only).
    """
    ntau = pump.shape[0]
    scale = 0.0
    for k in range(ntau):
        scale = max(scale, abs(pump[k]))
    if scale == 0.0:
        scale = 1.0
    limit = DIVERGENCE_FACTOR * scale
    nsnap = snap_idx.shape[0]
    for tr in range(seeds.shape[0]):
        q = np.zeros((nx, 3), np.complex128)
        qp = np.zeros((nx, 3), np.complex128)
        f = np.zeros((nx, 3), np.complex128)
        g = np.zeros((nx, 3), np.complex128)
        E = np.zeros((nx, 3), np.complex128)
        spatial = seeds.shape[1] > 1
        for j in range(nx):
            s = j if spatial else 0
            q[j, 0] = seeds[tr, s, 0]
            q[j, 1] = seeds[tr, s, 1]
        _sweep2(pump[0], q, E, h, nx, use_q3)
        for c in range(3):
            out_fields[tr, c, 0] = E[nx - 1, c]
            out_q[tr, c, 0] = q[nx - 1, c]
        if tr == 0:
            for s in range(nsnap):
                for c in range(3):
                    snap_fields[s, c, 0] = E[snap_idx[s], c]
                    snap_q[s, c, 0] = q[snap_idx[s], c]
        status[tr, 0] = OK
        for k in range(ntau - 1):
            rot0 = np.exp(1j * delta * k * dtau)
            rot1 = np.exp(1j * delta * (k + 1) * dtau)
            _rhs2(E, q, alpha, w1, w2, rot0, use_q3, f, nx)
            for j in range(nx):
                for c in range(3):
                    qp[j, c] = q[j, c] + dtau * f[j, c]
            _sweep2(pump[k + 1], qp, E, h, nx, use_q3)
            _rhs2(E, qp, alpha, w1, w2, rot1, use_q3, g, nx)
            for j in range(nx):
                for c in range(3):
                    q[j, c] = q[j, c] + 0.5 * dtau * (f[j, c] + g[j, c])
            _sweep2(pump[k + 1], q, E, h, nx, use_q3)
            code, where = _check(E, nx, limit)
            if code != OK:
                status[tr, 0] = code
                status[tr, 1] = where
                status[tr, 2] = k + 1
                break
            for c in range(3):
                out_fields[tr, c, k + 1] = E[nx - 1, c]
                out_q[tr, c, k + 1] = q[nx - 1, c]
            if tr == 0:
                for s in range(nsnap):
                    for c in range(3):
                        snap_fields[s, c, k + 1] = E[snap_idx[s], c]
                        snap_q[s, c, k + 1] = q[snap_idx[s], c]
