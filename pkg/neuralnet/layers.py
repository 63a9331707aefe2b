"""
Differentiable layers on NHWC float64 arrays.

Every layer caches what its backward pass needs during forward(x) and
exposes parameters / gradients as dicts keyed by short names ("W", "b").
Convolution kernels are stored as W[p, q, c_in, c_out].
"""
import numpy as np

from core.errors import DimensionError, DivergenceError, UsageError


def check_finite(x, where):
    if not np.all(np.isfinite(x)):
        raise DivergenceError("non-finite values", term=where)
    return x


def _he(rng, shape, fan_in):
    if rng is None:
        return np.zeros(shape)
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Layer:
    """Base: parameter-free identity."""

    def __init__(self):
        self.params = {}
        self.grads = {}
        self._cache = None

    def forward(self, x, cache=True):
        y, saved = self._forward(x)
        if cache:
            self._cache = saved
        return y

    def backward(self, grad):
        if self._cache is None:
            raise UsageError(f"{type(self).__name__}.backward called without a cached forward pass")
        return self._backward(grad, self._cache)

    def zero_grad(self):
        for name, value in self.params.items():
            self.grads[name] = np.zeros_like(value)

    def _forward(self, x):
        return x, ()

    def _backward(self, grad, saved):
        return grad

    def config(self):
        return {"type": type(self).__name__}

    def output_shape(self, shape):
        return shape

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(f'{k}={v}' for k, v in self.config().items() if k != 'type')})"


# --- Parametric layers ---

class Dense(Layer):

    def __init__(self, n_in, n_out, rng=None, zero_init=False):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.params["W"] = np.zeros((n_in, n_out)) if zero_init else _he(rng, (n_in, n_out), n_in)
        self.params["b"] = np.zeros(n_out)
        self.zero_grad()

    def _forward(self, x):
        if x.shape[-1] != self.n_in:
            raise DimensionError(f"Dense expects {self.n_in} inputs, got {x.shape[-1]}")
        return x @ self.params["W"] + self.params["b"], x

    def _backward(self, grad, x):
        self.grads["W"] = x.T @ grad
        self.grads["b"] = grad.sum(axis=0)
        return grad @ self.params["W"].T

    def config(self):
        return {"type": "Dense", "n_in": self.n_in, "n_out": self.n_out}

    def output_shape(self, shape):
        return shape[:-1] + (self.n_out,)


class Conv2D(Layer):
    """y[i, j, k] = b[k] + sum_{p, q, l} W[p, q, l, k] x[s i + p, s j + q, l] on the zero-padded input."""

    def __init__(self, c_in, c_out, kernel, stride=1, padding=0, rng=None):
        super().__init__()
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.stride, self.padding = kernel, stride, padding
        self.params["W"] = _he(rng, (kernel, kernel, c_in, c_out), kernel * kernel * c_in)
        self.params["b"] = np.zeros(c_out)
        self.zero_grad()

    def _out_size(self, n):
        return (n + 2 * self.padding - self.kernel) // self.stride + 1

    def _forward(self, x):
        if x.ndim != 4 or x.shape[-1] != self.c_in:
            raise DimensionError(f"Conv2D expects (B, H, W, {self.c_in}), got {x.shape}")
        pad, s, k = self.padding, self.stride, self.kernel
        xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
        ho, wo = self._out_size(x.shape[1]), self._out_size(x.shape[2])
        if ho < 1 or wo < 1:
            raise DimensionError(f"Conv2D input {x.shape[1:3]} too small for kernel {k}")
        W = self.params["W"]
        y = np.zeros((x.shape[0], ho, wo, self.c_out))
        for p in range(k):
            for q in range(k):
                patch = xp[:, p:p + s * (ho - 1) + 1:s, q:q + s * (wo - 1) + 1:s, :]
                y += patch @ W[p, q]
        return y + self.params["b"], (xp, x.shape, ho, wo)

    def _backward(self, grad, saved):
        xp, shape, ho, wo = saved
        pad, s, k = self.padding, self.stride, self.kernel
        W = self.params["W"]
        dW = np.zeros_like(W)
        dxp = np.zeros_like(xp)
        for p in range(k):
            for q in range(k):
                rows = slice(p, p + s * (ho - 1) + 1, s)
                cols = slice(q, q + s * (wo - 1) + 1, s)
                dW[p, q] = np.einsum("bhwc,bhwk->ck", xp[:, rows, cols, :], grad)
                dxp[:, rows, cols, :] += grad @ W[p, q].T
        self.grads["W"] = dW
        self.grads["b"] = grad.sum(axis=(0, 1, 2))
        if pad:
            return dxp[:, pad:pad + shape[1], pad:pad + shape[2], :]
        return dxp

    def config(self):
        return {"type": "Conv2D", "c_in": self.c_in, "c_out": self.c_out,
                "kernel": self.kernel, "stride": self.stride, "padding": self.padding}

    def output_shape(self, shape):
        return (shape[0], self._out_size(shape[1]), self._out_size(shape[2]), self.c_out)


class ConvTranspose2D(Layer):
    """Adjoint of Conv2D: output size (n - 1) s - 2 pad + kernel."""

    def __init__(self, c_in, c_out, kernel, stride=1, padding=0, rng=None):
        super().__init__()
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.stride, self.padding = kernel, stride, padding
        self.params["W"] = _he(rng, (kernel, kernel, c_in, c_out), kernel * kernel * c_in / (stride * stride))
        self.params["b"] = np.zeros(c_out)
        self.zero_grad()

    def _out_size(self, n):
        return (n - 1) * self.stride - 2 * self.padding + self.kernel

    def _forward(self, x):
        if x.ndim != 4 or x.shape[-1] != self.c_in:
            raise DimensionError(f"ConvTranspose2D expects (B, H, W, {self.c_in}), got {x.shape}")
        b, h, w, _ = x.shape
        s, k, pad = self.stride, self.kernel, self.padding
        full = np.zeros((b, (h - 1) * s + k, (w - 1) * s + k, self.c_out))
        W = self.params["W"]
        for p in range(k):
            for q in range(k):
                full[:, p:p + s * (h - 1) + 1:s, q:q + s * (w - 1) + 1:s, :] += x @ W[p, q]
        ho, wo = self._out_size(h), self._out_size(w)
        y = full[:, pad:pad + ho, pad:pad + wo, :]
        return y + self.params["b"], (x, full.shape, ho, wo)

    def _backward(self, grad, saved):
        x, full_shape, ho, wo = saved
        _, h, w, _ = x.shape
        s, k, pad = self.stride, self.kernel, self.padding
        gfull = np.zeros(full_shape)
        gfull[:, pad:pad + ho, pad:pad + wo, :] = grad
        W = self.params["W"]
        dW = np.zeros_like(W)
        dx = np.zeros_like(x)
        for p in range(k):
            for q in range(k):
                g = gfull[:, p:p + s * (h - 1) + 1:s, q:q + s * (w - 1) + 1:s, :]
                dW[p, q] = np.einsum("bhwc,bhwk->ck", x, g)
                dx += g @ W[p, q].T
        self.grads["W"] = dW
        self.grads["b"] = grad.sum(axis=(0, 1, 2))
        return dx

    def config(self):
        return {"type": "ConvTranspose2D", "c_in": self.c_in, "c_out": self.c_out,
                "kernel": self.kernel, "stride": self.stride, "padding": self.padding}

    def output_shape(self, shape):
        return (shape[0], self._out_size(shape[1]), self._out_size(shape[2]), self.c_out)


# --- Shape and activation layers ---

class Reshape(Layer):

    def __init__(self, shape):
        super().__init__()
        self.shape = tuple(int(n) for n in shape)

    def _forward(self, x):
        return x.reshape((x.shape[0],) + self.shape), x.shape

    def _backward(self, grad, shape):
        return grad.reshape(shape)

    def config(self):
        return {"type": "Reshape", "shape": list(self.shape)}

    def output_shape(self, shape):
        return (shape[0],) + self.shape


class LeakyReLU(Layer):

    def __init__(self, slope=0.2):
        super().__init__()
        self.slope = float(slope)

    def _forward(self, x):
        positive = x > 0
        return np.where(positive, x, self.slope * x), positive

    def _backward(self, grad, positive):
        return np.where(positive, grad, self.slope * grad)

    def config(self):
        return {"type": "LeakyReLU", "slope": self.slope}


class ReLU(Layer):

    def _forward(self, x):
        positive = x > 0
        return np.where(positive, x, 0.0), positive

    def _backward(self, grad, positive):
        return np.where(positive, grad, 0.0)


class MeanPool2D(Layer):

    def __init__(self, size=2):
        super().__init__()
        self.size = size

    def _forward(self, x):
        b, h, w, c = x.shape
        n = self.size
        if h % n or w % n:
            raise DimensionError(f"MeanPool2D({n}) needs sizes divisible by {n}, got {h}x{w}")
        return x.reshape(b, h // n, n, w // n, n, c).mean(axis=(2, 4)), x.shape

    def _backward(self, grad, shape):
        n = self.size
        up = np.repeat(np.repeat(grad, n, axis=1), n, axis=2)
        return up.reshape(shape) / (n * n)

    def config(self):
        return {"type": "MeanPool2D", "size": self.size}

    def output_shape(self, shape):
        if shape[1] % self.size or shape[2] % self.size:
            raise DimensionError(f"MeanPool2D({self.size}) cannot pool {shape[1]}x{shape[2]}")
        return (shape[0], shape[1] // self.size, shape[2] // self.size, shape[3])


class ChannelSoftmax(Layer):
    """Softmax over the last (channel) axis."""

    def _forward(self, x):
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=-1, keepdims=True)
        return y, y

    def _backward(self, grad, y):
        return y * (grad - np.sum(grad * y, axis=-1, keepdims=True))


LAYER_TYPES = {cls.__name__: cls for cls in (
    Dense, Conv2D, ConvTranspose2D, Reshape, LeakyReLU, ReLU, MeanPool2D, ChannelSoftmax,
)}


def layer_from_config(config):
    """Rebuild a zero-initialized layer from its config dict."""
    config = dict(config)
    kind = config.pop("type")
    if kind not in LAYER_TYPES:
        raise DimensionError(f"unknown layer type '{kind}'")
    if kind == "Reshape":
        return Reshape(tuple(config["shape"]))
    return LAYER_TYPES[kind](**config)
