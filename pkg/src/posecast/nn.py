"""Minimal neural-network building blocks on top of the kernel backends.

Layers are stateless with respect to activations: ``forward`` returns the
output together with a cache, and ``backward`` consumes that cache. This
keeps inference pure (safe to call concurrently on shared parameters) while
training threads the caches through explicitly.

Shapes: sequence layers take ``(B, T, C)``, image layers ``(B, H, W, C)``,
dense layers ``(B, F)``.
"""

import json

import numpy as np

from . import kernels

DTYPE = np.float64

CHECKPOINT_FORMAT = "posecast-ckpt-v1"


class CheckpointError(RuntimeError):
    pass


def init_weight(rng, shape, scale=None, dtype=DTYPE):
    """Gaussian init; default scale is fan-in based (He) so conditioning
    signals survive deep stacks even in short trainings."""
    if scale is None:
        fan_in = int(np.prod(shape[:-1]))
        scale = np.sqrt(2.0 / fan_in)
    return rng.normal(0.0, scale, size=shape).astype(dtype)


class Dense:
    def __init__(self, rng, n_in, n_out, dtype=DTYPE):
        self.w = init_weight(rng, (n_in, n_out), dtype=dtype)
        self.b = np.zeros(n_out, dtype=dtype)

    def forward(self, x):
        return x @ self.w + self.b, x

    def backward(self, gy, x, need_gx=True):
        gw = x.T @ gy
        gb = gy.sum(axis=0)
        return (gy @ self.w.T if need_gx else None), [gw, gb]

    def params(self):
        return [self.w, self.b]

    def param_names(self):
        return ["w", "b"]


class _ConvBase:
    fwd = None
    bwd = None

    def __init__(self, rng, c_in, c_out, kernel=4, stride=2, pad=1, dtype=DTYPE):
        self.stride = stride
        self.pad = pad
        self.w = init_weight(rng, self._wshape(kernel, c_in, c_out), dtype=dtype)
        self.b = np.zeros(c_out, dtype=dtype)

    def forward(self, x):
        return type(self).fwd(x, self.w, self.b, self.stride, self.pad), x

    def backward(self, gy, x, need_gx=True):
        gx, gw, gb = type(self).bwd(x, self.w, gy, self.stride, self.pad, need_gx)
        return gx, [gw, gb]

    def params(self):
        return [self.w, self.b]

    def param_names(self):
        return ["w", "b"]


class Conv1d(_ConvBase):
    fwd = staticmethod(kernels.conv1d_fwd)
    bwd = staticmethod(kernels.conv1d_bwd)

    @staticmethod
    def _wshape(k, c_in, c_out):
        return (k, c_in, c_out)


class ConvT1d(_ConvBase):
    fwd = staticmethod(kernels.convt1d_fwd)
    bwd = staticmethod(kernels.convt1d_bwd)

    @staticmethod
    def _wshape(k, c_in, c_out):
        return (k, c_in, c_out)


class Conv2d(_ConvBase):
    fwd = staticmethod(kernels.conv2d_fwd)
    bwd = staticmethod(kernels.conv2d_bwd)

    @staticmethod
    def _wshape(k, c_in, c_out):
        return (k, k, c_in, c_out)


class ConvT2d(_ConvBase):
    fwd = staticmethod(kernels.convt2d_fwd)
    bwd = staticmethod(kernels.convt2d_bwd)

    @staticmethod
    def _wshape(k, c_in, c_out):
        return (k, k, c_in, c_out)


class _Stateless:
    def params(self):
        return []

    def param_names(self):
        return []

    def backward(self, gy, cache, need_gx=True):
        return self._grad(gy, cache), []


class ReLU(_Stateless):
    def forward(self, x):
        return np.maximum(x, 0.0), x

    def _grad(self, gy, x):
        return gy * (x > 0.0)


class LeakyReLU(_Stateless):
    def __init__(self, alpha=0.2):
        self.alpha = alpha

    def forward(self, x):
        return np.where(x > 0.0, x, self.alpha * x), x

    def _grad(self, gy, x):
        return gy * np.where(x > 0.0, 1.0, self.alpha)


class Tanh(_Stateless):
    def forward(self, x):
        y = np.tanh(x)
        return y, y

    def _grad(self, gy, y):
        return gy * (1.0 - y * y)


class Sigmoid(_Stateless):
    def forward(self, x):
        y = sigmoid(x)
        return y, y

    def _grad(self, gy, y):
        return gy * y * (1.0 - y)


class ScaleShift(_Stateless):
    """y = x * scale + shift with fixed constants (e.g. tanh -> [0, 1])."""

    def __init__(self, scale, shift):
        self.scale = scale
        self.shift = shift

    def forward(self, x):
        return x * self.scale + self.shift, None

    def _grad(self, gy, _):
        return gy * self.scale


class Flatten(_Stateless):
    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def _grad(self, gy, shape):
        return gy.reshape(shape)


class Sequential:
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, gy, caches, need_input_grad=True):
        grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            gy, g = self.layers[i].backward(gy, caches[i], need_gx=(i > 0 or need_input_grad))
            grads[i] = g
        return gy, [g for group in grads for g in group]

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def named_params(self, prefix=""):
        out = []
        for i, layer in enumerate(self.layers):
            for name, p in zip(layer.param_names(), layer.params()):
                out.append((f"{prefix}{i}.{name}", p))
        return out


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x):
    z = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Adam:
    """Adaptive-moment gradient descent over a fixed parameter list.

    Updates are applied in place so that networks keep referencing the same
    arrays. ``state_dict``/``load_state`` exist for checkpoint resume.
    """

    def __init__(self, params, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        if len(grads) != len(self.params):
            raise ValueError(
                f"expected {len(self.params)} gradients, got {len(grads)}"
            )
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self, prefix):
        out = {f"{prefix}t": np.array(self.t, dtype=np.int64)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"{prefix}{i}.m"] = m
            out[f"{prefix}{i}.v"] = v
        return out

    def load_state(self, arrays, prefix):
        self.t = int(arrays[f"{prefix}t"])
        for i in range(len(self.params)):
            self.m[i][...] = arrays[f"{prefix}{i}.m"]
            self.v[i][...] = arrays[f"{prefix}{i}.v"]


def save_checkpoint(path, named_params, step=0, optimizers=None, rng_state=None):
    """Write a versioned container of named parameter arrays.

    ``named_params`` is an iterable of (name, array). ``optimizers`` maps a
    prefix to an Adam instance whose moment buffers are stored alongside, and
    ``rng_state`` is any JSON-serializable object (numpy bit-generator state).
    """
    arrays = {"format": np.array(CHECKPOINT_FORMAT), "step": np.array(step, dtype=np.int64)}
    for name, p in named_params:
        key = "p/" + name
        if key in arrays:
            raise ValueError(f"duplicate parameter name {name!r}")
        arrays[key] = p
    for prefix, opt in (optimizers or {}).items():
        arrays.update(opt.state_arrays(f"opt/{prefix}/"))
    if rng_state is not None:
        arrays["rng"] = np.array(json.dumps(rng_state))
    np.savez(path, **arrays)


def load_checkpoint(path, named_params, optimizers=None, expect_format=CHECKPOINT_FORMAT):
    """Load parameters in place; returns (step, rng_state or None)."""
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files}
    fmt = str(arrays.get("format", ""))
    if fmt != expect_format:
        raise CheckpointError(
            f"checkpoint format tag {fmt!r} does not match expected {expect_format!r}"
        )
    for name, p in named_params:
        key = "p/" + name
        if key not in arrays:
            raise CheckpointError(f"checkpoint is missing parameter {name!r}")
        if arrays[key].shape != p.shape:
            raise CheckpointError(
                f"parameter {name!r} has shape {arrays[key].shape}, expected {p.shape}"
            )
        p[...] = arrays[key]
    for prefix, opt in (optimizers or {}).items():
        opt.load_state(arrays, f"opt/{prefix}/")
    rng_state = json.loads(str(arrays["rng"])) if "rng" in arrays else None
    return int(arrays["step"]), rng_state
