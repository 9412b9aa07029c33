"""Numba-jitted GRU recurrence kernels.

Same contracts and layout as gru_numpy. The gate math runs in explicit
per-element loops: numba promotes float32-array/float64-literal expressions
to float64, which would poison the np.dot operand dtypes, while scalar loops
store straight back into the output dtype. Compiled lazily per dtype;
fastmath stays off so results are reproducible run to run.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def gru_recurrence_forward(xg, wh, bh):
    l, b, three_h = xg.shape
    h_dim = three_h // 3
    h_seq = np.empty((l, b, h_dim), dtype=xg.dtype)
    r_seq = np.empty((l, b, h_dim), dtype=xg.dtype)
    z_seq = np.empty((l, b, h_dim), dtype=xg.dtype)
    n_seq = np.empty((l, b, h_dim), dtype=xg.dtype)
    hnp_seq = np.empty((l, b, h_dim), dtype=xg.dtype)
    h = np.zeros((b, h_dim), dtype=xg.dtype)
    for t in range(l):
        hg = np.dot(h, wh)
        for i in range(b):
            for j in range(h_dim):
                r = 1.0 / (1.0 + math.exp(-(xg[t, i, j] + hg[i, j] + bh[j])))
                z = 1.0 / (1.0 + math.exp(
                    -(xg[t, i, h_dim + j] + hg[i, h_dim + j] + bh[h_dim + j])))
                hnp = hg[i, 2 * h_dim + j] + bh[2 * h_dim + j]
                n = math.tanh(xg[t, i, 2 * h_dim + j] + r * hnp)
                hv = (1.0 - z) * n + z * h[i, j]
                h[i, j] = hv
                h_seq[t, i, j] = hv
                r_seq[t, i, j] = r
                z_seq[t, i, j] = z
                n_seq[t, i, j] = n
                hnp_seq[t, i, j] = hnp
    return h_seq, r_seq, z_seq, n_seq, hnp_seq


@njit(cache=True)
def gru_recurrence_backward(dh_out, h_seq, r_seq, z_seq, n_seq, hnp_seq, wh):
    l, b, h_dim = dh_out.shape
    dxg = np.empty((l, b, 3 * h_dim), dtype=dh_out.dtype)
    wh_t = np.ascontiguousarray(wh.T)
    dh = np.zeros((b, h_dim), dtype=dh_out.dtype)
    dh_gate = np.empty((b, h_dim), dtype=dh_out.dtype)
    dhg = np.empty((b, 3 * h_dim), dtype=dh_out.dtype)
    for t in range(l - 1, -1, -1):
        for i in range(b):
            for j in range(h_dim):
                d = dh[i, j] + dh_out[t, i, j]
                h_prev = h_seq[t - 1, i, j] if t > 0 else 0.0
                r = r_seq[t, i, j]
                z = z_seq[t, i, j]
                n = n_seq[t, i, j]
                dn = d * (1.0 - z)
                dz = d * (h_prev - n)
                da_n = dn * (1.0 - n * n)
                dr = da_n * hnp_seq[t, i, j]
                da_z = dz * z * (1.0 - z)
                da_r = dr * r * (1.0 - r)
                dxg[t, i, j] = da_r
                dxg[t, i, h_dim + j] = da_z
                dxg[t, i, 2 * h_dim + j] = da_n
                dhg[i, j] = da_r
                dhg[i, h_dim + j] = da_z
                dhg[i, 2 * h_dim + j] = da_n * r
                dh_gate[i, j] = d * z
        dh = dh_gate + np.dot(dhg, wh_t)
    return dxg
