"""Minimal layer toolkit: parameters plus forward/backward building blocks.

Every layer caches what its backward pass needs during forward, so the usage
pattern is one forward followed by at most one backward per step. Gradients
accumulate into ``Param.grad``; the trainer zeroes them between steps.
"""

from __future__ import annotations

import numpy as np

GELU_C = float(np.sqrt(2.0 / np.pi))
GELU_A = 0.044715


class Param:
    """A learnable array with its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    """Uniform in +-sqrt(1/fan_in), the default for every affine map here."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(y: np.ndarray, dy: np.ndarray, axis: int = -1) -> np.ndarray:
    """Gradient through softmax given its output y."""
    return y * (dy - np.sum(dy * y, axis=axis, keepdims=True))


def gelu(x: np.ndarray) -> np.ndarray:
    """Smooth rectifier (tanh-form gaussian error linear unit)."""
    return 0.5 * x * (1.0 + np.tanh(GELU_C * (x + GELU_A * x ** 3)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    t = np.tanh(GELU_C * (x + GELU_A * x ** 3))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)


class Affine:
    """y = x @ w + b over the last axis."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, dtype, name: str):
        self.w = Param(f"{name}.w", uniform_init(rng, (d_in, d_out), d_in, dtype))
        self.b = Param(f"{name}.b", uniform_init(rng, (d_out,), d_in, dtype))
        self._x = None

    def params(self):
        yield self.w
        yield self.b

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._x
        d_in = x.shape[-1]
        d_out = dout.shape[-1]
        self.w.grad += x.reshape(-1, d_in).T @ dout.reshape(-1, d_out)
        self.b.grad += dout.reshape(-1, d_out).sum(axis=0)
        return dout @ self.w.value.T


class LayerNorm:
    """Normalization over the feature axis with learnable gain/offset."""

    EPS = 1e-5

    def __init__(self, d: int, dtype, name: str):
        self.gain = Param(f"{name}.gain", np.ones(d, dtype=dtype))
        self.offset = Param(f"{name}.offset", np.zeros(d, dtype=dtype))
        self._xhat = None
        self._inv = None

    def params(self):
        yield self.gain
        yield self.offset

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = np.mean(xc * xc, axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.EPS)
        xhat = xc * inv
        self._xhat = xhat
        self._inv = inv
        return self.gain.value * xhat + self.offset.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, inv = self._xhat, self._inv
        axes = tuple(range(dout.ndim - 1))
        self.gain.grad += np.sum(dout * xhat, axis=axes)
        self.offset.grad += np.sum(dout, axis=axes)
        dxhat = dout * self.gain.value
        return inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
        )


class Dropout:
    """Inverted dropout; identity when not training."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate
        self._mask = None

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        keep = (rng.random(x.shape) >= self.rate).astype(x.dtype)
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return dout
        return dout * self._mask


class Gelu:
    def __init__(self):
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return gelu(x)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * gelu_grad(self._x)
