"""
Named parameter registry.

Every trainable matrix of the model lives here under a dotted name
(``encoder.layer0.self_v.wq``). Creation order is fixed by the module
initialisers, so a seed fully determines the initial values.
"""

import math
from collections.abc import Iterator

import numpy as np

from chuk_grounding.errors import ConfigError, PreconditionError
from chuk_grounding.numeric.tape import Param


class ParamStore:
    """Ordered mapping of parameter name to ``Param`` plus the init RNG."""

    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self._params: dict[str, Param] = {}

    def __getitem__(self, name: str) -> Param:
        if name not in self._params:
            raise KeyError(f"Unknown parameter: {name}")
        return self._params[name]

    def __contains__(self, name: object) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Param]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def add(self, param: Param) -> Param:
        if param.name in self._params:
            raise PreconditionError(f"Parameter '{param.name}' registered twice")
        self._params[param.name] = param
        return param

    def uniform(
        self, name: str, rows: int, cols: int, fan_in: int | None = None, frozen: bool = False
    ) -> Param:
        """Uniform in ``[-1/sqrt(fan_in), +1/sqrt(fan_in)]``; fan_in defaults to ``rows``."""
        bound = 1.0 / math.sqrt(fan_in if fan_in is not None else rows)
        value = self.rng.uniform(-bound, bound, size=(rows, cols))
        return self.add(Param(name, value, frozen=frozen))

    def zeros(self, name: str, rows: int, cols: int, frozen: bool = False) -> Param:
        return self.add(Param(name, np.zeros((rows, cols)), frozen=frozen))

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def scalar_count(self) -> int:
        return sum(param.value.size for param in self._params.values())

    def freeze(self, prefix: str) -> int:
        """Freeze every parameter whose name starts with ``prefix``; returns how many."""
        count = 0
        for name, param in self._params.items():
            if name.startswith(prefix):
                param.frozen = True
                count += 1
        return count

    def to_lists(self) -> dict[str, list[list[float]]]:
        return {name: param.value.tolist() for name, param in self._params.items()}

    def load_lists(self, values: dict[str, list[list[float]]]) -> None:
        """Overwrite parameter values in place; names and shapes must match exactly."""
        missing = set(self._params) - set(values)
        extra = set(values) - set(self._params)
        if missing or extra:
            raise ConfigError(
                f"checkpoint parameters do not match the model "
                f"(missing: {sorted(missing)[:5]}, unexpected: {sorted(extra)[:5]})"
            )
        for name, param in self._params.items():
            array = np.asarray(values[name], dtype=np.float64)
            if array.shape != param.value.shape:
                raise ConfigError(
                    f"parameter '{name}' has shape {array.shape} in the checkpoint, "
                    f"model expects {param.value.shape}"
                )
            param.value = array.copy()
            param.zero_grad()
