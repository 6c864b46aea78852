import numpy as np

from .exceptions import ShapeError

#: lower clamp applied to probabilities before taking the log
EPSILON = 1e-12


def cost_cross_entropy(output, expected):
    """Mean over batch columns of ``-sum_i e_i * log(max(x_i, EPSILON))``."""
    if output.shape != expected.shape:
        raise ShapeError(f"cost: output {output.shape} vs expected {expected.shape}")
    if output.ndim != 2 or output.shape[1] == 0:
        raise ShapeError(f"cost: expected a non-empty 2-D batch, got {output.shape}")
    per_column = -(expected * np.log(np.maximum(output, EPSILON))).sum(axis=0)
    return float(per_column.mean())
