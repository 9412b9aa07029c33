"""Pure-numpy GRU recurrence kernels (reference / fallback backend).

Arrays are time-major: xg is (L, B, 3H) holding the precomputed input-side
gate pre-activations, gates packed [reset | update | candidate] on the last
axis. Only the sequential hidden-state chain lives here; the large
input-projection and weight-gradient matmuls stay in BLAS at the call site.
"""

import numpy as np


def gru_recurrence_forward(xg, wh, bh):
    """Run the forward hidden-state chain.

    Returns (h_seq, r_seq, z_seq, n_seq, hnp_seq), each (L, B, H); hnp is the
    hidden-side candidate pre-activation needed for the backward pass.
    """
    l, b, three_h = xg.shape
    h_dim = three_h // 3
    dt = xg.dtype
    h_seq = np.empty((l, b, h_dim), dtype=dt)
    r_seq = np.empty((l, b, h_dim), dtype=dt)
    z_seq = np.empty((l, b, h_dim), dtype=dt)
    n_seq = np.empty((l, b, h_dim), dtype=dt)
    hnp_seq = np.empty((l, b, h_dim), dtype=dt)
    h = np.zeros((b, h_dim), dtype=dt)
    for t in range(l):
        hg = np.dot(h, wh) + bh
        r = 1.0 / (1.0 + np.exp(-(xg[t, :, :h_dim] + hg[:, :h_dim])))
        z = 1.0 / (1.0 + np.exp(-(xg[t, :, h_dim:2 * h_dim] + hg[:, h_dim:2 * h_dim])))
        hnp = hg[:, 2 * h_dim:]
        n = np.tanh(xg[t, :, 2 * h_dim:] + r * hnp)
        h = (1.0 - z) * n + z * h
        h_seq[t] = h
        r_seq[t] = r
        z_seq[t] = z
        n_seq[t] = n
        hnp_seq[t] = hnp
    return h_seq, r_seq, z_seq, n_seq, hnp_seq


def gru_recurrence_backward(dh_out, h_seq, r_seq, z_seq, n_seq, hnp_seq, wh):
    """Backpropagate through the hidden-state chain.

    dh_out is (L, B, H): the loss gradient w.r.t. each emitted hidden state.
    Returns dxg (L, B, 3H), the gradient w.r.t. the input-side gate
    pre-activations. The hidden-weight gradient is recoverable at the call
    site from dxg, r_seq and the shifted h_seq, so it is not accumulated here.
    """
    l, b, h_dim = dh_out.shape
    dt = dh_out.dtype
    dxg = np.empty((l, b, 3 * h_dim), dtype=dt)
    wh_t = np.ascontiguousarray(wh.T)
    dh = np.zeros((b, h_dim), dtype=dt)
    for t in range(l - 1, -1, -1):
        dh = dh + dh_out[t]
        h_prev = h_seq[t - 1] if t > 0 else np.zeros((b, h_dim), dtype=dt)
        r = r_seq[t]
        z = z_seq[t]
        n = n_seq[t]
        hnp = hnp_seq[t]
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dh_prev = dh * z
        da_n = dn * (1.0 - n * n)
        dhnp = da_n * r
        dr = da_n * hnp
        da_z = dz * z * (1.0 - z)
        da_r = dr * r * (1.0 - r)
        dxg[t, :, :h_dim] = da_r
        dxg[t, :, h_dim:2 * h_dim] = da_z
        dxg[t, :, 2 * h_dim:] = da_n
        dhg = np.concatenate((da_r, da_z, dhnp), axis=1)
        dh = dh_prev + np.dot(dhg, wh_t)
    return dxg
