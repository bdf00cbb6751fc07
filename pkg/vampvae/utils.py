import math

import numpy as np

# Independent random streams derived from one user seed
STREAM_NETWORK = 0
STREAM_PRIOR = 1
STREAM_TRAINING = 2
STREAM_VALIDATION = 3
STREAM_EVALUATION = 4


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for `seed`, optionally split into a named sub-stream."""
    return np.random.default_rng([seed, *stream]) if stream else np.random.default_rng(seed)


def square_side(n: int) -> int | None:
    """Side length when n is a perfect square, else None."""
    side = math.isqrt(n)
    return side if side * side == n else None


def infer_image_shape(dim: int) -> tuple[int, int]:
    side = square_side(dim)
    return (side, side) if side else (1, dim)
