from typing import Iterator

import numpy as np

from vampvae.autodiff import Tensor
from vampvae.errors import ContractError, DimensionError


class Module:
    """
    Base class for everything that owns parameters.

    Tensors, sub-modules and lists of sub-modules stored as public attributes
    are discovered in assignment order, which fixes the declaration order used
    by checkpoints. Attributes starting with an underscore are references, not
    owned state (a VampPrior keeps its encoder that way).
    """

    def named_tensors(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            path = f"{prefix}{name}"
            if isinstance(value, Tensor):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_tensors(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_tensors(f"{path}.{i}.")

    def named_parameters(self) -> dict[str, Tensor]:
        """Trainable tensors only."""
        return {name: t for name, t in self.named_tensors() if t.requires_grad}

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of every tensor, frozen ones included."""
        return {name: t.data.copy() for name, t in self.named_tensors()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        tensors = dict(self.named_tensors())
        missing = set(tensors) - set(state)
        unexpected = set(state) - set(tensors)
        if missing or unexpected:
            raise ContractError(
                f"state does not match module: missing {sorted(missing)}, unexpected {sorted(unexpected)}"
            )
        for name, tensor in tensors.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise DimensionError(f"{name}: expected shape {tensor.shape}, got {value.shape}")
            tensor.data = np.array(value, order="C")
