"""Two-group adaptive optimizer with linear learning-rate decay.

The encoder group (the embedding table at desk scale) is updated with
decoupled weight decay at its own learning rate; every other block uses
the second rate with no decay. Both groups share first/second-moment
accumulation with bias correction. The learning rate decays linearly to 0
at the final step.
"""

from __future__ import annotations

import numpy as np

from corefkit.learning.params import ParameterStore


class TwoGroupAdam:
    def __init__(
        self,
        store: ParameterStore,
        lr_encoder: float = 1e-5,
        lr_rest: float = 3e-4,
        weight_decay: float = 0.01,
        total_steps: int = 1,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        if lr_encoder <= 0 or lr_rest <= 0:
            raise ValueError("learning rates must be positive")
        if total_steps < 1:
            raise ValueError("total_steps must be positive")
        self.store = store
        self.lr_encoder = lr_encoder
        self.lr_rest = lr_rest
        self.weight_decay = weight_decay
        self.total_steps = total_steps
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.count = 0
        self.m = {k: np.zeros_like(v) for k, v in store.blocks.items()}
        self.v = {k: np.zeros_like(v) for k, v in store.blocks.items()}

    def lr_fraction(self, step_index: int) -> float:
        """Linear decay from 1 at step 0 to 0 at the final step."""
        if self.total_steps <= 1:
            return 1.0
        return max(0.0, 1.0 - step_index / (self.total_steps - 1))

    def step(self, step_index: int) -> None:
        self.count += 1
        t = self.count
        fraction = self.lr_fraction(step_index)
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for name, param in self.store.blocks.items():
            if name in self.store.frozen:
                continue
            grad = self.store.grads[name]
            encoder = name in self.store.encoder_keys
            lr = (self.lr_encoder if encoder else self.lr_rest) * fraction
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            if encoder and self.weight_decay:
                param -= lr * self.weight_decay * param

    def state(self) -> dict:
        return {"step": self.count, "m": self.m, "v": self.v}

    def load_state(self, state: dict) -> None:
        self.count = int(state["step"])
        for k in self.m:
            self.m[k][...] = state["m"][k]
            self.v[k][...] = state["v"][k]
