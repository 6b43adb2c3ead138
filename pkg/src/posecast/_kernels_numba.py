"""Numba-jitted convolution kernels.

Fused direct convolutions: no im2col buffer is materialized, which keeps
memory traffic low for the skinny channel counts used by the networks here.
All loops are serial, so results are bitwise deterministic run to run.

Layouts match ``_kernels_numpy`` (see that module's docstring).
"""

import numpy as np
from numba import njit

# fastmath lets LLVM vectorize the channel-reduction loops; reassociation is
# fixed at compile time, so results stay bitwise deterministic run to run
_JIT = dict(cache=True, fastmath=True)


@njit(**_JIT)
def conv1d_fwd(x, w, b, stride, pad):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    t_out = (t + 2 * pad - k) // stride + 1
    if t_out < 1:
        raise ValueError("conv1d input too short for kernel/stride/pad")
    y = np.empty((bs, t_out, c_out), dtype=x.dtype)
    for n in range(bs):
        for tt in range(t_out):
            for o in range(c_out):
                y[n, tt, o] = b[o]
            for kk in range(k):
                ti = tt * stride + kk - pad
                if ti < 0 or ti >= t:
                    continue
                for c in range(c_in):
                    xv = x[n, ti, c]
                    for o in range(c_out):
                        y[n, tt, o] += xv * w[kk, c, o]
    return y


@njit(**_JIT)
def conv1d_bwd(x, w, gy, stride, pad):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    t_out = gy.shape[1]
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for tt in range(t_out):
            for o in range(c_out):
                gb[o] += gy[n, tt, o]
            for kk in range(k):
                ti = tt * stride + kk - pad
                if ti < 0 or ti >= t:
                    continue
                for c in range(c_in):
                    acc = 0.0
                    xv = x[n, ti, c]
                    for o in range(c_out):
                        g = gy[n, tt, o]
                        acc += g * w[kk, c, o]
                        gw[kk, c, o] += xv * g
                    gx[n, ti, c] += acc
    return gx, gw, gb


@njit(**_JIT)
def conv1d_bwd_nogx(x, w, gy, stride, pad):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    t_out = gy.shape[1]
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for tt in range(t_out):
            for o in range(c_out):
                gb[o] += gy[n, tt, o]
            for kk in range(k):
                ti = tt * stride + kk - pad
                if ti < 0 or ti >= t:
                    continue
                for c in range(c_in):
                    xv = x[n, ti, c]
                    for o in range(c_out):
                        gw[kk, c, o] += xv * gy[n, tt, o]
    return gw, gb


@njit(**_JIT)
def convt1d_fwd(x, w, b, stride, pad):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    t_out = (t - 1) * stride + k - 2 * pad
    y = np.empty((bs, t_out, c_out), dtype=x.dtype)
    for n in range(bs):
        for tt in range(t_out):
            for o in range(c_out):
                y[n, tt, o] = b[o]
    for n in range(bs):
        for tt in range(t):
            for kk in range(k):
                to = tt * stride + kk - pad
                if to < 0 or to >= t_out:
                    continue
                for c in range(c_in):
                    xv = x[n, tt, c]
                    for o in range(c_out):
                        y[n, to, o] += xv * w[kk, c, o]
    return y


@njit(**_JIT)
def convt1d_bwd(x, w, gy, stride, pad):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    t_out = gy.shape[1]
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for tt in range(t_out):
            for o in range(c_out):
                gb[o] += gy[n, tt, o]
    for n in range(bs):
        for tt in range(t):
            for kk in range(k):
                to = tt * stride + kk - pad
                if to < 0 or to >= t_out:
                    continue
                for c in range(c_in):
                    acc = 0.0
                    xv = x[n, tt, c]
                    for o in range(c_out):
                        g = gy[n, to, o]
                        acc += g * w[kk, c, o]
                        gw[kk, c, o] += xv * g
                    gx[n, tt, c] += acc
    return gx, gw, gb


@njit(**_JIT)
def conv2d_fwd(x, w, b, stride, pad):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out = (h + 2 * pad - k) // stride + 1
    w_out = (wd + 2 * pad - k) // stride + 1
    if h_out < 1 or w_out < 1:
        raise ValueError("conv2d input too small for kernel/stride/pad")
    y = np.empty((bs, h_out, w_out, c_out), dtype=x.dtype)
    for n in range(bs):
        for i in range(h_out):
            for j in range(w_out):
                for o in range(c_out):
                    y[n, i, j, o] = b[o]
                for ky in range(k):
                    yi = i * stride + ky - pad
                    if yi < 0 or yi >= h:
                        continue
                    for kx in range(k):
                        xj = j * stride + kx - pad
                        if xj < 0 or xj >= wd:
                            continue
                        for c in range(c_in):
                            xv = x[n, yi, xj, c]
                            for o in range(c_out):
                                y[n, i, j, o] += xv * w[ky, kx, c, o]
    return y


@njit(**_JIT)
def conv2d_bwd(x, w, gy, stride, pad):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out, w_out = gy.shape[1], gy.shape[2]
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for i in range(h_out):
            for j in range(w_out):
                for o in range(c_out):
                    gb[o] += gy[n, i, j, o]
                for ky in range(k):
                    yi = i * stride + ky - pad
                    if yi < 0 or yi >= h:
                        continue
                    for kx in range(k):
                        xj = j * stride + kx - pad
                        if xj < 0 or xj >= wd:
                            continue
                        for c in range(c_in):
                            acc = 0.0
                            xv = x[n, yi, xj, c]
                            for o in range(c_out):
                                g = gy[n, i, j, o]
                                acc += g * w[ky, kx, c, o]
                                gw[ky, kx, c, o] += xv * g
                            gx[n, yi, xj, c] += acc
    return gx, gw, gb


@njit(**_JIT)
def conv2d_bwd_nogx(x, w, gy, stride, pad):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out, w_out = gy.shape[1], gy.shape[2]
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for i in range(h_out):
            for j in range(w_out):
                for o in range(c_out):
                    gb[o] += gy[n, i, j, o]
                for ky in range(k):
                    yi = i * stride + ky - pad
                    if yi < 0 or yi >= h:
                        continue
                    for kx in range(k):
                        xj = j * stride + kx - pad
                        if xj < 0 or xj >= wd:
                            continue
                        for c in range(c_in):
                            xv = x[n, yi, xj, c]
                            for o in range(c_out):
                                gw[ky, kx, c, o] += xv * gy[n, i, j, o]
    return gw, gb


@njit(**_JIT)
def convt2d_fwd(x, w, b, stride, pad):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out = (h - 1) * stride + k - 2 * pad
    w_out = (wd - 1) * stride + k - 2 * pad
    y = np.empty((bs, h_out, w_out, c_out), dtype=x.dtype)
    for n in range(bs):
        for i in range(h_out):
            for j in range(w_out):
                for o in range(c_out):
                    y[n, i, j, o] = b[o]
    for n in range(bs):
        for i in range(h):
            for j in range(wd):
                for ky in range(k):
                    yo = i * stride + ky - pad
                    if yo < 0 or yo >= h_out:
                        continue
                    for kx in range(k):
                        xo = j * stride + kx - pad
                        if xo < 0 or xo >= w_out:
                            continue
                        for c in range(c_in):
                            xv = x[n, i, j, c]
                            for o in range(c_out):
                                y[n, yo, xo, o] += xv * w[ky, kx, c, o]
    return y


@njit(**_JIT)
def convt2d_bwd(x, w, gy, stride, pad):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out, w_out = gy.shape[1], gy.shape[2]
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for i in range(h_out):
            for j in range(w_out):
                for o in range(c_out):
                    gb[o] += gy[n, i, j, o]
    for n in range(bs):
        for i in range(h):
            for j in range(wd):
                for ky in range(k):
                    yo = i * stride + ky - pad
                    if yo < 0 or yo >= h_out:
                        continue
                    for kx in range(k):
                        xo = j * stride + kx - pad
                        if xo < 0 or xo >= w_out:
                            continue
                        for c in range(c_in):
                            acc = 0.0
                            xv = x[n, i, j, c]
                            for o in range(c_out):
                                g = gy[n, yo, xo, o]
                                acc += g * w[ky, kx, c, o]
                                gw[ky, kx, c, o] += xv * g
                            gx[n, i, j, c] += acc
    return gx, gw, gb
