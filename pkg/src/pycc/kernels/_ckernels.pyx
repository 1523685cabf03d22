# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM chunk kernels: BLAS GEMM inside the time loop plus fused
element-wise gate math on contiguous spans (auto-vectorized).  Contract
mirrors py_kernels exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh, floorf, fabsf, copysignf
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport sgemm, dgemm

ctypedef fused floating:
    float
    double

BACKEND = "cython"


cdef inline float _expf_fast(float x) noexcept nogil:
    """Branchless cephes-style expf (~2 ulp); auto-vectorizes under -O3.

    Clamps use ternaries, not fminf/fmaxf: the libm calls block gcc's
    vectorizer when non-finite semantics are kept.
    """
    cdef float z, nf, r, y, p2
    cdef int n
    x = <float>-87.0 if x < <float>-87.0 else x
    x = <float>88.0 if x > <float>88.0 else x
    z = x * <float>1.44269504088896341
    nf = floorf(z + <float>0.5)
    r = x - nf * <float>0.693359375 - nf * <float>-2.12194440e-4
    y = <float>1.9875691500e-4
    y = y * r + <float>1.3981999507e-3
    y = y * r + <float>8.3334519073e-3
    y = y * r + <float>4.1665795894e-2
    y = y * r + <float>1.6666665459e-1
    y = y * r + <float>5.0000001201e-1
    y = y * r * r + r + <float>1.0
    n = (<int>nf + 127) << 23
    memcpy(&p2, &n, 4)
    return y * p2


cdef void _gemm(bint ta, bint tb, int m, int n, int k,
                floating alpha, floating* A, floating* B,
                floating beta, floating* C) noexcept nogil:
    """Row-major C(m,n) = alpha*op(A)(m,k)*op(B)(k,n) + beta*C via Fortran BLAS."""
    cdef char cta = b'T' if ta else b'N'
    cdef char ctb = b'T' if tb else b'N'
    cdef int lda = (m if ta else k)
    cdef int ldb = (k if tb else n)
    cdef int ldc = n
    if floating is float:
        sgemm(&ctb, &cta, &n, &m, &k, <float*>&alpha, <float*>B, &ldb,
              <float*>A, &lda, <float*>&beta, <float*>C, &ldc)
    else:
        dgemm(&ctb, &cta, &n, &m, &k, <double*>&alpha, <double*>B, &ldb,
              <double*>A, &lda, <double*>&beta, <double*>C, &ldc)


cdef inline void _sigmoid_span(floating* p, int n) noexcept nogil:
    cdef int j
    if floating is float:
        for j in range(n):
            p[j] = <float>1.0 / (<float>1.0 + _expf_fast(-p[j]))
    else:
        for j in range(n):
            p[j] = 1.0 / (1.0 + exp(-p[j]))


cdef inline void _tanh_span(floating* p, int n) noexcept nogil:
    # tanh(x) = (1 - e^(-2|x|)) / (1 + e^(-2|x|)), sign restored at the end;
    # the f64 path keeps libm accuracy for the gradient-check harness.
    cdef int j
    cdef float e, t, ax
    if floating is float:
        for j in range(n):
            ax = fabsf(p[j])
            ax = <float>20.0 if ax > <float>20.0 else ax
            e = _expf_fast(<float>-2.0 * ax)
            t = (<float>1.0 - e) / (<float>1.0 + e)
            p[j] = copysignf(t, p[j])
    else:
        for j in range(n):
            p[j] = tanh(p[j])


def lstm_forward(floating[:, :, ::1] xproj, floating[:, ::1] U,
                 floating[:, ::1] h0, floating[:, ::1] c0):
    cdef int t = xproj.shape[0]
    cdef int B = xproj.shape[1]
    cdef int H4 = xproj.shape[2]
    cdef int H = H4 // 4
    dtype = np.float32 if floating is float else np.float64
    h_np = np.empty((t, B, H), dtype=dtype)
    c_np = np.empty((t, B, H), dtype=dtype)
    g_np = np.asarray(xproj).copy()     # becomes post-activation gates
    cdef floating[:, :, ::1] h_all = h_np
    cdef floating[:, :, ::1] c_all = c_np
    cdef floating[:, :, ::1] gates = g_np

    cdef floating* hp
    cdef floating* cp
    cdef floating* gp
    cdef floating* cw
    cdef floating* hw
    cdef int step, b, j
    cdef floating cv
    with nogil:
        for step in range(t):
            hp = &h0[0, 0] if step == 0 else &h_all[step - 1, 0, 0]
            gp = &gates[step, 0, 0]
            # gates[step] += h_prev @ U
            _gemm(False, False, B, H4, H, <floating>1.0, hp, &U[0, 0],
                  <floating>1.0, gp)
            cp = &c0[0, 0] if step == 0 else &c_all[step - 1, 0, 0]
            for b in range(B):
                gp = &gates[step, b, 0]
                _sigmoid_span(gp, 2 * H)            # input + forget gates
                _tanh_span(gp + 2 * H, H)           # candidate
                _sigmoid_span(gp + 3 * H, H)        # output gate
                cw = &c_all[step, b, 0]
                hw = &h_all[step, b, 0]
                for j in range(H):
                    cv = gp[H + j] * cp[b * H + j] + gp[j] * gp[2 * H + j]
                    cw[j] = cv
                    hw[j] = cv
                _tanh_span(hw, H)
                for j in range(H):
                    hw[j] *= gp[3 * H + j]
    return h_np, c_np, g_np


def lstm_backward(floating[:, :, ::1] dh_all, floating[:, ::1] U,
                  floating[:, ::1] h0, floating[:, ::1] c0,
                  floating[:, :, ::1] h_all, floating[:, :, ::1] c_all,
                  floating[:, :, ::1] gates):
    cdef int t = dh_all.shape[0]
    cdef int B = dh_all.shape[1]
    cdef int H = dh_all.shape[2]
    cdef int H4 = 4 * H
    dtype = np.float32 if floating is float else np.float64
    dx_np = np.empty((t, B, H4), dtype=dtype)
    dU_np = np.zeros((H, H4), dtype=dtype)
    dh_np = np.zeros((B, H), dtype=dtype)
    dc_np = np.zeros((B, H), dtype=dtype)
    tc_np = np.empty(H, dtype=dtype)    # tanh(c_t) scratch, per row
    cdef floating[:, :, ::1] dxproj = dx_np
    cdef floating[:, ::1] dU = dU_np
    cdef floating[:, ::1] dh_next = dh_np
    cdef floating[:, ::1] dc_next = dc_np
    cdef floating[::1] tc_buf = tc_np

    cdef floating* cprev
    cdef floating* hprev
    cdef floating* gp
    cdef floating* dp
    cdef floating* tc
    cdef int step, b, j
    cdef floating iv, fv, gv, ov, dh, dc, di, dg, df, do
    with nogil:
        for step in range(t - 1, -1, -1):
            cprev = &c0[0, 0] if step == 0 else &c_all[step - 1, 0, 0]
            hprev = &h0[0, 0] if step == 0 else &h_all[step - 1, 0, 0]
            tc = &tc_buf[0]
            for b in range(B):
                gp = &gates[step, b, 0]
                dp = &dxproj[step, b, 0]
                for j in range(H):
                    tc[j] = c_all[step, b, j]
                _tanh_span(tc, H)
                for j in range(H):
                    iv = gp[j]
                    fv = gp[H + j]
                    gv = gp[2 * H + j]
                    ov = gp[3 * H + j]
                    dh = dh_all[step, b, j] + dh_next[b, j]
                    do = dh * tc[j]
                    dc = dc_next[b, j] + dh * ov * (<floating>1.0 - tc[j] * tc[j])
                    di = dc * gv
                    dg = dc * iv
                    df = dc * cprev[b * H + j]
                    dp[j] = di * iv * (<floating>1.0 - iv)
                    dp[H + j] = df * fv * (<floating>1.0 - fv)
                    dp[2 * H + j] = dg * (<floating>1.0 - gv * gv)
                    dp[3 * H + j] = do * ov * (<floating>1.0 - ov)
                    dc_next[b, j] = dc * fv
            # dU += h_prev^T @ draw ; dh_next = draw @ U^T
            _gemm(True, False, H, H4, B, <floating>1.0, hprev,
                  &dxproj[step, 0, 0], <floating>1.0, &dU[0, 0])
            _gemm(False, True, B, H, H4, <floating>1.0, &dxproj[step, 0, 0],
                  &U[0, 0], <floating>0.0, &dh_next[0, 0])
    return dx_np, dU_np, dh_np, dc_np
