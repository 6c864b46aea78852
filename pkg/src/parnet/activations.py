"""Activation functions and their derivatives.

Softmax works column-wise (one column per instance) and is only valid on
the output layer; its derivative is never materialised because the
softmax/cross-entropy pair collapses to ``output - expected``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, ValidationError

SIGMOID = "sigmoid"
TANH = "tanh"
RELU = "relu"
LEAKY_RELU = "leaky_relu"
SOFTMAX = "softmax"

KINDS = (SIGMOID, TANH, RELU, LEAKY_RELU, SOFTMAX)

_ALIASES = {
    "sigmoid": SIGMOID,
    "logistic": SIGMOID,
    "tanh": TANH,
    "relu": RELU,
    "rectifier": RELU,
    "leaky_relu": LEAKY_RELU,
    "leaky-relu": LEAKY_RELU,
    "leakyrelu": LEAKY_RELU,
    "softmax": SOFTMAX,
}

DEFAULT_LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class ActivationKind:
    """An activation tag plus the slope used by leaky ReLU."""

    name: str
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        name = _ALIASES.get(str(self.name).lower())
        if name is None:
            raise ValidationError(
                f"unknown activation {self.name!r}; expected one of {', '.join(KINDS)}"
            )
        object.__setattr__(self, "name", name)
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValidationError(f"leaky_slope must lie in (0, 1), got {self.leaky_slope}")

    def __str__(self):
        return self.name


def resolve(kind, leaky_slope=DEFAULT_LEAKY_SLOPE):
    """Coerce a string or :class:`ActivationKind` to an :class:`ActivationKind`."""
    if isinstance(kind, ActivationKind):
        return kind
    return ActivationKind(kind, leaky_slope)


def softmax(z):
    shifted = z - z.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def activate(kind, z):
    kind = resolve(kind)
    name = kind.name
    if name == RELU:
        return np.maximum(z, 0.0)
    if name == LEAKY_RELU:
        return np.where(z >= 0.0, z, kind.leaky_slope * z)
    if name == SIGMOID:
        # split by sign so exp never overflows
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if name == TANH:
        return np.tanh(z)
    return softmax(z)


def activate_derivative(kind, z):
    """Entry-wise first derivative. ReLU'(0) is taken as 0."""
    kind = resolve(kind)
    name = kind.name
    if name == RELU:
        return (z > 0.0).astype(np.float64)
    if name == LEAKY_RELU:
        return np.where(z >= 0.0, 1.0, kind.leaky_slope)
    if name == SIGMOID:
        s = activate(kind, z)
        return s * (1.0 - s)
    if name == TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    raise ContractError(
        "softmax has no entry-wise derivative; it is fused with cross-entropy in backward()"
    )
