"""Pure-numpy convolution kernels (im2col/col2im + BLAS matmul).

Fallback backend used when numba is unavailable or when
``POSECAST_BACKEND=numpy`` is set. All functions share the layouts of the
numba backend:

* 1D: activations ``(B, T, C)``, weights ``(K, C_in, C_out)``
* 2D: activations ``(B, H, W, C)``, weights ``(K, K, C_in, C_out)``

Transposed convolutions reuse the same weight layout; ``C_in`` is always the
channel count of the tensor flowing *into* the layer.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided


def _out_len(n, k, stride, pad):
    return (n + 2 * pad - k) // stride + 1


def _im2col1d(xp, k, stride, t_out):
    # xp: padded input (B, Tp, C) -> patches (B, t_out, k, C)
    b, _, c = xp.shape
    sb, st, sc = xp.strides
    view = as_strided(xp, shape=(b, t_out, k, c), strides=(sb, st * stride, st, sc))
    return np.ascontiguousarray(view)


def _col2im1d(cols, tp, stride):
    # cols: (B, t_out, k, C) scattered back to (B, tp, C)
    b, t_out, k, c = cols.shape
    xp = np.zeros((b, tp, c), dtype=cols.dtype)
    for kk in range(k):
        xp[:, kk : kk + stride * (t_out - 1) + 1 : stride, :] += cols[:, :, kk, :]
    return xp


def _im2col2d(xp, k, stride, h_out, w_out):
    b, _, _, c = xp.shape
    sb, sh, sw, sc = xp.strides
    view = as_strided(
        xp,
        shape=(b, h_out, w_out, k, k, c),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
    )
    return np.ascontiguousarray(view)


def _col2im2d(cols, hp, wp, stride):
    b, h_out, w_out, k, _, c = cols.shape
    xp = np.zeros((b, hp, wp, c), dtype=cols.dtype)
    for ky in range(k):
        ye = ky + stride * (h_out - 1) + 1
        for kx in range(k):
            xe = kx + stride * (w_out - 1) + 1
            xp[:, ky:ye:stride, kx:xe:stride, :] += cols[:, :, :, ky, kx, :]
    return xp


def conv1d_fwd(x, w, b, stride, pad):
    bs, t, _ = x.shape
    k, c_in, c_out = w.shape
    t_out = _out_len(t, k, stride, pad)
    if t_out < 1:
        raise ValueError("conv1d input too short for kernel/stride/pad")
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    cols = _im2col1d(xp, k, stride, t_out)
    y = cols.reshape(bs * t_out, k * c_in) @ w.reshape(k * c_in, c_out)
    return y.reshape(bs, t_out, c_out) + b


def conv1d_bwd(x, w, gy, stride, pad, need_gx=True):
    bs, t, _ = x.shape
    k, c_in, c_out = w.shape
    t_out = gy.shape[1]
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    cols = _im2col1d(xp, k, stride, t_out).reshape(bs * t_out, k * c_in)
    gy2 = gy.reshape(bs * t_out, c_out)
    gw = (cols.T @ gy2).reshape(k, c_in, c_out)
    gb = gy2.sum(axis=0)
    if not need_gx:
        return None, gw, gb
    gcols = (gy2 @ w.reshape(k * c_in, c_out).T).reshape(bs, t_out, k, c_in)
    gxp = _col2im1d(gcols, t + 2 * pad, stride)
    gx = gxp[:, pad : pad + t, :] if pad else gxp
    return gx, gw, gb


def convt1d_fwd(x, w, b, stride, pad):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    t_out = (t - 1) * stride + k - 2 * pad
    wm = w.transpose(1, 0, 2).reshape(c_in, k * c_out)
    cols = (x.reshape(bs * t, c_in) @ wm).reshape(bs, t, k, c_out)
    yp = _col2im1d(cols, t_out + 2 * pad, stride)
    y = yp[:, pad : pad + t_out, :] if pad else yp
    return y + b


def convt1d_bwd(x, w, gy, stride, pad, need_gx=True):
    bs, t, c_in = x.shape
    k, _, c_out = w.shape
    gyp = np.pad(gy, ((0, 0), (pad, pad), (0, 0)))
    gcols = _im2col1d(gyp, k, stride, t).reshape(bs * t, k * c_out)
    wm = w.transpose(1, 0, 2).reshape(c_in, k * c_out)
    gx = (gcols @ wm.T).reshape(bs, t, c_in) if need_gx else None
    gw = (x.reshape(bs * t, c_in).T @ gcols).reshape(c_in, k, c_out).transpose(1, 0, 2)
    gb = gy.sum(axis=(0, 1))
    return gx, gw, gb


def conv2d_fwd(x, w, b, stride, pad):
    bs, h, wd, _ = x.shape
    k, _, c_in, c_out = w.shape
    h_out = _out_len(h, k, stride, pad)
    w_out = _out_len(wd, k, stride, pad)
    if h_out < 1 or w_out < 1:
        raise ValueError("conv2d input too small for kernel/stride/pad")
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = _im2col2d(xp, k, stride, h_out, w_out)
    y = cols.reshape(bs * h_out * w_out, k * k * c_in) @ w.reshape(k * k * c_in, c_out)
    return y.reshape(bs, h_out, w_out, c_out) + b


def conv2d_bwd(x, w, gy, stride, pad, need_gx=True):
    # one small GEMM per kernel offset against strided views of the padded
    # input; avoids materializing the (B*Ho*Wo, K*K*C) patch matrix, which
    # dominates memory traffic at full resolution
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out, w_out = gy.shape[1], gy.shape[2]
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    gy2 = gy.reshape(bs * h_out * w_out, c_out)
    gw = np.empty_like(w)
    gxp = np.zeros_like(xp) if need_gx else None
    for ky in range(k):
        ye = ky + stride * (h_out - 1) + 1
        for kx in range(k):
            xe = kx + stride * (w_out - 1) + 1
            view = np.ascontiguousarray(xp[:, ky:ye:stride, kx:xe:stride, :])
            gw[ky, kx] = view.reshape(-1, c_in).T @ gy2
            if need_gx:
                gxp[:, ky:ye:stride, kx:xe:stride, :] += (gy2 @ w[ky, kx].T).reshape(
                    bs, h_out, w_out, c_in
                )
    gb = gy2.sum(axis=0)
    if not need_gx:
        return None, gw, gb
    gx = gxp[:, pad : pad + h, pad : pad + wd, :] if pad else gxp
    return gx, gw, gb


def convt2d_fwd(x, w, b, stride, pad):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    h_out = (h - 1) * stride + k - 2 * pad
    w_out = (wd - 1) * stride + k - 2 * pad
    wm = w.transpose(2, 0, 1, 3).reshape(c_in, k * k * c_out)
    cols = (x.reshape(bs * h * wd, c_in) @ wm).reshape(bs, h, wd, k, k, c_out)
    yp = _col2im2d(cols, h_out + 2 * pad, w_out + 2 * pad, stride)
    y = yp[:, pad : pad + h_out, pad : pad + w_out, :] if pad else yp
    return y + b


def convt2d_bwd(x, w, gy, stride, pad, need_gx=True):
    bs, h, wd, c_in = x.shape
    k, _, _, c_out = w.shape
    gyp = np.pad(gy, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    gcols = _im2col2d(gyp, k, stride, h, wd).reshape(bs * h * wd, k * k * c_out)
    wm = w.transpose(2, 0, 1, 3).reshape(c_in, k * k * c_out)
    gx = (gcols @ wm.T).reshape(bs, h, wd, c_in) if need_gx else None
    gw = (
        (x.reshape(bs * h * wd, c_in).T @ gcols)
        .reshape(c_in, k, k, c_out)
        .transpose(1, 2, 0, 3)
    )
    gb = gy.sum(axis=(0, 1, 2))
    return gx, gw, gb
