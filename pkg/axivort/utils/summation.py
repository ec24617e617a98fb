"""
Order-fixed reductions.

Kernel sums fold the source axis pairwise so that each target's total depends only on its
own row; norm sums go through math.fsum which is exactly rounded.
"""
import math
from typing import Iterable

import numpy as np


def pairwise_sum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along ``axis`` with a fixed binary-tree order.

    The axis is zero padded to a power of two and halves are added elementwise until one
    entry is left, so the result is independent of chunking and worker count.

    Args:
        values: Array to reduce
        axis: Axis to fold

    Returns:
        Array with ``axis`` removed
    """
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = a.shape[-1]
    if n == 0:
        return np.zeros(a.shape[:-1])
    width = 1 << (n - 1).bit_length()
    if width != n:
        pad = [(0, 0)] * (a.ndim - 1) + [(0, width - n)]
        a = np.pad(a, pad)
    while width > 1:
        width //= 2
        a = a[..., :width] + a[..., width:]
    return a[..., 0]


def exact_sum(values: Iterable[float]) -> float:
    """Exactly rounded sum; invariant under any permutation of the inputs."""
    return math.fsum(np.ravel(np.asarray(values, dtype=float)).tolist())
