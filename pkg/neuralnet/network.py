"""
Sequential network container and the three reference layouts.

    generator : z(2) -> dense 8*8*64 -> 2x transposed conv (k4 s2) -> 32x32x3 softmax
    critic    : 32x32x3 -> 2x conv (k4 s2, leaky 0.2) -> dense 1
    regressor : 32x32x3 -> 2x (conv 3x3, relu, mean-pool 2) -> dense 64 -> dense 2
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import GAN_LATENT_DIM, IMAGE_SIZE, LEAKY_SLOPE
from core.errors import DimensionError
from neuralnet.layers import (
    ChannelSoftmax, Conv2D, ConvTranspose2D, Dense, LeakyReLU, MeanPool2D, ReLU,
    Reshape, check_finite, layer_from_config,
)

GENERATOR_CHANNELS = 64


class Network:

    def __init__(self, layers, name="network", input_shape=None):
        self.layers = list(layers)
        self.name = name
        self.input_shape = tuple(input_shape) if input_shape is not None else None
        if self.input_shape is not None:
            self.output_shape()

    def forward(self, x, cache=True):
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out, cache=cache)
        return check_finite(out, f"{self.name}.forward")

    __call__ = forward

    def backward(self, grad):
        """Backpropagate dLoss/dOutput; returns dLoss/dInput and fills layer grads."""
        grad = np.asarray(grad, dtype=np.float64)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return check_finite(grad, f"{self.name}.backward")

    def parameters(self):
        """Ordered {"<layer index>.<name>": array}. Arrays are live views."""
        out = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                out[f"{i}.{name}"] = value
        return out

    def gradients(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                out[f"{i}.{name}"] = layer.grads[name]
        return out

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    @property
    def n_params(self):
        return int(sum(v.size for v in self.parameters().values()))

    def output_shape(self, shape=None):
        shape = tuple(shape or (1,) + self.input_shape)
        for layer in self.layers:
            new = layer.output_shape(shape)
            if any(n < 1 for n in new[1:]):
                raise DimensionError(f"{self.name}: {layer!r} maps {shape} to invalid {new}")
            shape = new
        return shape

    def descriptor(self):
        return {
            "name": self.name,
            "input_shape": list(self.input_shape) if self.input_shape else None,
            "layers": [layer.config() for layer in self.layers],
        }

    @classmethod
    def from_descriptor(cls, descriptor):
        layers = [layer_from_config(c) for c in descriptor["layers"]]
        return cls(layers, descriptor.get("name", "network"), descriptor.get("input_shape"))

    def copy_parameters_from(self, other):
        mine, theirs = self.parameters(), other.parameters()
        for key, value in theirs.items():
            mine[key][...] = value

    def __repr__(self):
        body = "\n".join(f"  {i}: {layer!r}" for i, layer in enumerate(self.layers))
        return f"Network '{self.name}' ({self.n_params} params)\n{body}"


def build_generator(rng=None, latent_dim=GAN_LATENT_DIM, size=IMAGE_SIZE):
    seed = size // 4
    ch = GENERATOR_CHANNELS
    layers = [
        Dense(latent_dim, seed * seed * ch, rng),
        LeakyReLU(LEAKY_SLOPE),
        Reshape((seed, seed, ch)),
        ConvTranspose2D(ch, ch // 2, 4, stride=2, padding=1, rng=rng),
        LeakyReLU(LEAKY_SLOPE),
        ConvTranspose2D(ch // 2, 3, 4, stride=2, padding=1, rng=rng),
        ChannelSoftmax(),
    ]
    return Network(layers, "generator", (latent_dim,))


def build_critic(rng=None, size=IMAGE_SIZE):
    quarter = size // 4
    layers = [
        Conv2D(3, 32, 4, stride=2, padding=1, rng=rng),
        LeakyReLU(LEAKY_SLOPE),
        Conv2D(32, 64, 4, stride=2, padding=1, rng=rng),
        LeakyReLU(LEAKY_SLOPE),
        Reshape((quarter * quarter * 64,)),
        Dense(quarter * quarter * 64, 1, rng),
    ]
    return Network(layers, "critic", (size, size, 3))


def build_regressor(rng=None, size=IMAGE_SIZE, hidden=64):
    quarter = size // 4
    layers = [
        Conv2D(3, 8, 3, padding=1, rng=rng),
        ReLU(),
        MeanPool2D(2),
        Conv2D(8, 16, 3, padding=1, rng=rng),
        ReLU(),
        MeanPool2D(2),
        Reshape((quarter * quarter * 16,)),
        Dense(quarter * quarter * 16, hidden, rng),
        ReLU(),
        Dense(hidden, 2, rng, zero_init=True),
    ]
    return Network(layers, "regressor", (size, size, 3))
