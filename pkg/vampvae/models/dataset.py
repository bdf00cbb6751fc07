from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from vampvae.config import DEFAULT_PSEUDO_INPUTS
from vampvae.models.model_spec import Likelihood


class Binarization(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    NONE = "none"


class Dataset(BaseModel):
    """
    Train/validation/test matrices with values in [0, 1].

    Static datasets hold only {0, 1}; Dynamic ones are resampled to binary
    pixels during training.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    binarization: Binarization = Binarization.NONE
    image_shape: tuple[int, int]

    @property
    def dim(self) -> int:
        return self.train.shape[1]

    @model_validator(mode="after")
    def _check_splits(self):
        widths = {split.shape[1] for split in (self.train, self.val, self.test) if split.ndim == 2}
        if len(widths) != 1 or any(split.ndim != 2 for split in (self.train, self.val, self.test)):
            raise ValueError("all splits must be 2-D with the same row width")
        width = widths.pop()
        if self.image_shape[0] * self.image_shape[1] != width:
            raise ValueError(f"image_shape {self.image_shape} does not cover {width} columns")
        for split in (self.train, self.val, self.test):
            if split.size and (split.min() < 0.0 or split.max() > 1.0):
                raise ValueError("dataset values must lie in [0, 1]")
            if self.binarization == Binarization.STATIC and split.size and not np.all((split == 0.0) | (split == 1.0)):
                raise ValueError("static dataset contains non-binary values")
        return self


class DatasetProfile(BaseModel):
    """Per-dataset defaults: how pixels are modelled and how the splits are formed."""
    model_config = ConfigDict(frozen=True)

    name: str
    binarization: Binarization
    likelihood: Likelihood
    image_shape: tuple[int, int]
    split: Literal["holdout_tail", "random_val", "fixed", "random_all", "synthetic"]
    val_rows: int = 0
    test_rows: int = 0
    expected_rows: tuple[int, int] | None = None
    pseudo_inputs: int = DEFAULT_PSEUDO_INPUTS
