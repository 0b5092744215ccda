"""Pure-numpy reference implementations of the hot lattice kernels.

Same contracts as ``_kernels_numba``; rows are processed with vectorized
numpy operations instead of compiled loops.  Selected via the
SHARPWAVE_BACKEND environment variable (see ``backend``).
"""

import math

import numpy as np

BACKEND = "numpy"

SQRT2 = math.sqrt(2.0)
N_COMBOS = 15


def apply_nonlinearity(f_code: int, u: np.ndarray, out: np.ndarray) -> None:
    if f_code == 0:
        out[:] = 0.0
    elif f_code == 1:
        np.multiply(u, u, out=out)
    elif f_code == 2:
        np.multiply(u, u, out=out)
        np.multiply(out, u, out=out)
    elif f_code == 3:
        np.sin(u, out=out)
    elif f_code == 4:
        np.divide(u, 1.0 + u * u, out=out)
    else:
        raise ValueError(f"unknown nonlinearity code {f_code}")


def diag_cumtrapz(A: np.ndarray, h: float, sign: int) -> np.ndarray:
    """Cumulative trapezoid along lattice diagonals, zero on the first row.

    sign +1 integrates along columns drifting right with time (the
    ascending characteristic through each node), sign -1 along columns
    drifting left.  Diagonals entering through the lateral boundary
    accumulate from zero.
    """
    nt, nx = A.shape
    B = np.zeros_like(A)
    half = 0.5 * h
    for i in range(1, nt):
        if sign > 0:
            B[i, 1:] = B[i - 1, :-1] + half * (A[i - 1, :-1] + A[i, 1:])
            B[i, 0] = half * A[i, 0]
        else:
            B[i, :-1] = B[i - 1, 1:] + half * (A[i - 1, 1:] + A[i, :-1])
            B[i, -1] = half * A[i, -1]
    return B


def _cumtrapz_row(s: np.ndarray, h: float, out: np.ndarray) -> None:
    out[0] = 0.0
    np.cumsum(0.5 * h * (s[1:] + s[:-1]), out=out[1:])


def _combo_rows(V, W, G, U, h):
    """All mixed characteristic derivatives of the solution at the center
    row of five consecutive rows; returns an (N_COMBOS, nx-4) block.

    Ordering (i, j) = D_+^i D_-^j applied to the reconstructed solution:
    (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),(3,0),(2,1),(1,2),(0,3),
    (4,0),(3,1),(2,2),(1,3),(0,4).
    Pure derivatives route through the characteristic fields
    (D_+^i U = D_+^{i-1} W / sqrt2, likewise for V); mixed ones through
    G = D_+ D_- U, lattice-differenced beyond first order.
    """
    inv_r2 = 1.0 / SQRT2
    inv_2s = 1.0 / (2.0 * SQRT2 * h)     # first diagonal difference
    inv_s2 = 1.0 / (2.0 * h * h)         # second diagonal difference
    inv_2s3 = 1.0 / (4.0 * SQRT2 * h ** 3)  # third diagonal difference
    c = 2  # center row in the 5-row window
    sl = slice(2, -2)

    def dplus1(F):
        return (F[c + 1][3:-1] - F[c - 1][1:-3]) * inv_2s

    def dminus1(F):
        return (F[c + 1][1:-3] - F[c - 1][3:-1]) * inv_2s

    def dplus2(F):
        return (F[c + 1][3:-1] - 2.0 * F[c][sl] + F[c - 1][1:-3]) * inv_s2

    def dminus2(F):
        return (F[c + 1][1:-3] - 2.0 * F[c][sl] + F[c - 1][3:-1]) * inv_s2

    def dplus3(F):
        return (F[c + 2][4:] - 2.0 * F[c + 1][3:-1]
                + 2.0 * F[c - 1][1:-3] - F[c - 2][:-4]) * inv_2s3

    def dminus3(F):
        return (F[c + 2][:-4] - 2.0 * F[c + 1][1:-3]
                + 2.0 * F[c - 1][3:-1] - F[c - 2][4:]) * inv_2s3

    def dpm(F):
        d_tt = F[c + 1][sl] - 2.0 * F[c][sl] + F[c - 1][sl]
        d_xx = F[c][3:-1] - 2.0 * F[c][sl] + F[c][1:-3]
        return (d_tt - d_xx) * inv_s2

    rows = [
        U[c][sl],
        W[c][sl] * inv_r2,
        V[c][sl] * inv_r2,
        dplus1(W) * inv_r2,
        G[c][sl],
        dminus1(V) * inv_r2,
        dplus2(W) * inv_r2,
        dplus1(G),
        dminus1(G),
        dminus2(V) * inv_r2,
        dplus3(W) * inv_r2,
        dplus2(G),
        dpm(G),
        dminus2(G),
        dminus3(V) * inv_r2,
    ]
    return np.abs(np.stack(rows))


def _bin_max_into_cells(block, colcell, p, cell_sups):
    # block: (N_COMBOS, nx-4); colcell aligned to columns 2..nx-3
    cc = colcell[2:-2]
    valid = cc >= 0
    if not valid.any():
        return
    cols = cc[valid]
    order = np.argsort(cols, kind="stable")
    cols_sorted = cols[order]
    bounds = np.flatnonzero(np.diff(cols_sorted)) + 1
    starts = np.concatenate(([0], bounds))
    ids = cols_sorted[starts]
    sub = block[:, valid][:, order]
    maxima = np.maximum.reduceat(sub, starts, axis=1)
    np.maximum(cell_sups[p, ids, :], maxima.T, out=cell_sups[p, ids, :])


def march_sweep(v0ext, w0ext, u0ext, h, nt, nx, amp, f_code, passes,
                a_margin, x_lo,
                do_oracle, do_cells, do_store,
                cell_h, cell_t0, cell_x0, n_ct, n_cx, colcell,
                cell_sups, audit_out, oracle_out,
                V_store, W_store, U_store):
    """Row-streaming characteristic solve with fused measurement sinks.

    Marches the discrete fixed point of the characteristic integral
    equations row by row (trapezoid along exact lattice diagonals, the
    implicit endpoint resolved by ``passes`` corrector sweeps), holding
    only a five-row window.  Optional sinks: per-cell sups of the mixed
    characteristic derivatives (classification), sup deviation from the
    closed-form linear evolution (oracle), and sup of |V|, |W|, |U| over
    the exterior of the support cone |x| > t + a_margin (audit).
    """
    off = nt - 1
    half = 0.5 * h
    xs = x_lo + h * np.arange(nx)

    ring = 5
    Vr = [np.zeros(nx) for _ in range(ring)]
    Wr = [np.zeros(nx) for _ in range(ring)]
    Gr = [np.zeros(nx) for _ in range(ring)]
    Ur = [np.zeros(nx) for _ in range(ring)]

    P = np.zeros(nx)       # plus-diagonal running integral (explicit part)
    Q = np.zeros(nx)
    g_prev = np.zeros(nx)
    g_new = np.zeros(nx)
    fbuf = np.zeros(nx)
    S = np.zeros(nx)

    def emit(i):
        # stencil row centered two rows behind the freshly computed one
        c = i - 2
        if c < 2 or c > nt - 3:
            return
        idx = [(c + k) % ring for k in range(-2, 3)]
        V5 = [Vr[k] for k in idx]
        W5 = [Wr[k] for k in idx]
        G5 = [Gr[k] for k in idx]
        U5 = [Ur[k] for k in idx]
        p = int(math.floor((c * h - cell_t0) / cell_h + 1e-12))
        if 0 <= p < n_ct:
            block = _combo_rows(V5, W5, G5, U5, h)
            _bin_max_into_cells(block, colcell, p, cell_sups)

    for i in range(nt):
        slot = i % ring
        V = Vr[slot]
        W = Wr[slot]
        U = Ur[slot]
        v0row = v0ext[off - i: off - i + nx]
        w0row = w0ext[off + i: off + i + nx]
        if i == 0:
            V[:] = v0row
            W[:] = w0row
            S[:] = 0.5 * (W - V)
            _cumtrapz_row(S, h, U)
            apply_nonlinearity(f_code, U, fbuf)
            g_new[:] = amp * fbuf
        else:
            # explicit part of the diagonal trapezoid integrals
            P[1:] = P[:-1] + half * g_prev[:-1]
            P[0] = 0.0
            Q[:-1] = Q[1:] + half * g_prev[1:]
            Q[-1] = 0.0
            if f_code == 0:
                V[:] = v0row
                W[:] = w0row
                S[:] = 0.5 * (W - V)
                _cumtrapz_row(S, h, U)
                g_new[:] = 0.0
            else:
                for _ in range(passes):
                    V[:] = v0row + P + half * g_new
                    W[:] = w0row + Q + half * g_new
                    S[:] = 0.5 * (W - V)
                    _cumtrapz_row(S, h, U)
                    apply_nonlinearity(f_code, U, fbuf)
                    g_new[:] = amp * fbuf
            P += half * g_new
            Q += half * g_new
        Gr[slot][:] = 0.5 * g_new
        g_prev[:] = g_new

        # audits over the support-cone exterior
        xth = i * h + a_margin + 1e-12
        ext = np.abs(xs) > xth
        if ext.any():
            audit_out[0] = max(audit_out[0], float(np.max(np.abs(V[ext]))))
            audit_out[1] = max(audit_out[1], float(np.max(np.abs(W[ext]))))
            audit_out[2] = max(audit_out[2], float(np.max(np.abs(U[ext]))))

        if do_oracle:
            left = u0ext[off - i: off - i + nx]
            right = u0ext[off + i: off + i + nx]
            err = float(np.max(np.abs(U - 0.5 * (left + right))))
            oracle_out[0] = max(oracle_out[0], err)

        if do_store:
            V_store[i, :] = V
            W_store[i, :] = W
            U_store[i, :] = U

        if do_cells and i >= 4:
            emit(i)
