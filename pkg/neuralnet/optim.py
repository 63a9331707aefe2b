"""
Adam with bias correction; moments are kept per parameter key.
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from core.errors import DimensionError


class Adam:

    def __init__(self, lr=1e-4, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        """Update params in place. params / grads: dicts of equally-shaped arrays."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t

        for key, p in params.items():
            g = grads[key]
            if g.shape != p.shape:
                raise DimensionError(f"gradient for '{key}' has shape {g.shape}, parameter {p.shape}")
            if key not in self.m:
                self.m[key] = np.zeros_like(p)
                self.v[key] = np.zeros_like(p)

            self.m[key] *= self.beta1
            self.m[key] += (1.0 - self.beta1) * g
            self.v[key] *= self.beta2
            self.v[key] += (1.0 - self.beta2) * (g * g)

            m_hat = self.m[key] / bc1
            v_hat = self.v[key] / bc2
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def hyperparameters(self):
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t}

    def ensure_state(self, params):
        """Allocate zero moments for every key (checkpoint layout needs all of them)."""
        for key, p in params.items():
            if key not in self.m:
                self.m[key] = np.zeros_like(p)
                self.v[key] = np.zeros_like(p)


def adam_step(params, grads, state):
    state.step(params, grads)
    return params
