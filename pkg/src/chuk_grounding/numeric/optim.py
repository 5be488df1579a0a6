"""
AdamW with decoupled weight decay and per-prefix learning rates.
"""

from collections.abc import Sequence
from typing import Any

import numpy as np

from chuk_grounding.errors import NonFiniteGradientError
from chuk_grounding.numeric.params import ParamStore
from chuk_grounding.numeric.tape import FloatArray


class AdamW:
    """
    Adam moments with decoupled weight decay.

    ``lr_groups`` maps a parameter-name prefix to its learning rate; the first
    matching prefix wins, everything else uses ``lr``. Frozen parameters are
    skipped (their gradients are still cleared).
    """

    def __init__(
        self,
        store: ParamStore,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 1e-4,
        lr_groups: Sequence[tuple[str, float]] = (),
    ) -> None:
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.lr_groups = list(lr_groups)
        self.step_count = 0
        self.m: dict[str, FloatArray] = {}
        self.v: dict[str, FloatArray] = {}

    def lr_for(self, name: str) -> float:
        for prefix, lr in self.lr_groups:
            if name.startswith(prefix):
                return lr
        return self.lr

    def step(self) -> None:
        """Apply one update to every trainable parameter, then zero all gradients."""
        for param in self.store:
            if param.grad is not None and not param.frozen and not np.all(np.isfinite(param.grad)):
                raise NonFiniteGradientError(param.name)

        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - self.beta1**t
        correction2 = 1.0 - self.beta2**t

        for param in self.store:
            if param.frozen or param.grad is None:
                continue
            name = param.name
            g = param.grad
            m = self.m.get(name)
            v = self.v.get(name)
            if m is None or v is None:
                m = np.zeros_like(param.value)
                v = np.zeros_like(param.value)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[name] = m
            self.v[name] = v
            lr = self.lr_for(name)
            update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            param.value = param.value - lr * (update + self.weight_decay * param.value)

        self.store.zero_grad()

    def state_dict(self) -> dict[str, Any]:
        return {
            "step": self.step_count,
            "m": {name: arr.tolist() for name, arr in self.m.items()},
            "v": {name: arr.tolist() for name, arr in self.v.items()},
        }

    def load_state_dict(self, state: dict[str, Any]) -> None:
        self.step_count = int(state["step"])
        self.m = {name: np.asarray(arr, dtype=np.float64) for name, arr in state["m"].items()}
        self.v = {name: np.asarray(arr, dtype=np.float64) for name, arr in state["v"].items()}
