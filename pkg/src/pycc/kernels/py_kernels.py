"""Pure-numpy LSTM chunk kernels; reference for the compiled extension.

Shared contract (time-major, gate order i, f, g, o along the last axis):

    lstm_forward(xproj, U, h0, c0) -> (h_all, c_all, gates)
        xproj : (t, B, 4H)  input projections with bias already added
        U     : (H, 4H)     recurrent weights
        h0,c0 : (B, H)      incoming state (constants under truncated BPTT)
        gates hold post-activation values, needed for the backward pass.

    lstm_backward(dh_all, U, h0, c0, h_all, c_all, gates)
        -> (dxproj, dU, dh0, dc0)
        dh_all: (t, B, H)   upstream gradient w.r.t. every h_t output
"""

import numpy as np

BACKEND = "python"


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_forward(xproj, U, h0, c0):
    t, B, H4 = xproj.shape
    H = H4 // 4
    h_all = np.empty((t, B, H), dtype=xproj.dtype)
    c_all = np.empty((t, B, H), dtype=xproj.dtype)
    gates = np.empty((t, B, H4), dtype=xproj.dtype)
    h = h0
    c = c0
    for step in range(t):
        raw = xproj[step] + h @ U
        i = _sigmoid(raw[:, 0 * H:1 * H])
        f = _sigmoid(raw[:, 1 * H:2 * H])
        g = np.tanh(raw[:, 2 * H:3 * H])
        o = _sigmoid(raw[:, 3 * H:4 * H])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[step, :, 0 * H:1 * H] = i
        gates[step, :, 1 * H:2 * H] = f
        gates[step, :, 2 * H:3 * H] = g
        gates[step, :, 3 * H:4 * H] = o
        h_all[step] = h
        c_all[step] = c
    return h_all, c_all, gates


def lstm_backward(dh_all, U, h0, c0, h_all, c_all, gates):
    t, B, H = dh_all.shape
    dtype = dh_all.dtype
    dxproj = np.empty((t, B, 4 * H), dtype=dtype)
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, H), dtype=dtype)
    dc_next = np.zeros((B, H), dtype=dtype)
    for step in range(t - 1, -1, -1):
        i = gates[step, :, 0 * H:1 * H]
        f = gates[step, :, 1 * H:2 * H]
        g = gates[step, :, 2 * H:3 * H]
        o = gates[step, :, 3 * H:4 * H]
        c_prev = c_all[step - 1] if step > 0 else c0
        h_prev = h_all[step - 1] if step > 0 else h0

        dh = dh_all[step] + dh_next
        tc = np.tanh(c_all[step])
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev

        draw = dxproj[step]
        draw[:, 0 * H:1 * H] = di * i * (1.0 - i)
        draw[:, 1 * H:2 * H] = df * f * (1.0 - f)
        draw[:, 2 * H:3 * H] = dg * (1.0 - g * g)
        draw[:, 3 * H:4 * H] = do * o * (1.0 - o)

        dU += h_prev.T @ draw
        dh_next = draw @ U.T
        dc_next = dc * f
    return dxproj, dU, dh_next, dc_next
