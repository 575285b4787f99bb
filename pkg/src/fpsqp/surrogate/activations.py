"""Twice-differentiable activation functions with closed-form derivatives."""

import numpy as np
from scipy.special import expit

from fpsqp.errors import ConfigurationError

# identity is kept for affine test networks; the others are C^2.
ACTIVATIONS = ("swish", "tanh", "sigmoid", "identity")


def _swish(z):
    sig = expit(z)
    dsig = sig * (1.0 - sig)
    d2sig = dsig * (1.0 - 2.0 * sig)
    return z * sig, sig + z * dsig, 2.0 * dsig + z * d2sig


def _tanh(z):
    t = np.tanh(z)
    dt = 1.0 - t * t
    return t, dt, -2.0 * t * dt


def _sigmoid(z):
    sig = expit(z)
    dsig = sig * (1.0 - sig)
    return sig, dsig, dsig * (1.0 - 2.0 * sig)


def _identity(z):
    return z, np.ones_like(z), np.zeros_like(z)


_TABLE = {"swish": _swish, "tanh": _tanh, "sigmoid": _sigmoid, "identity": _identity}


def activation_eval(kind: str, z):
    """Return ``(phi(z), phi'(z), phi''(z))`` elementwise.

    ``z`` may be a scalar or an array; the outputs follow its shape.
    """
    try:
        fn = _TABLE[kind]
    except KeyError:
        raise ConfigurationError(
            f"unknown activation {kind!r}; expected one of {ACTIVATIONS}"
        ) from None
    z = np.asarray(z, dtype=float)
    phi, d1, d2 = fn(z)
    if z.ndim == 0:
        return float(phi), float(d1), float(d2)
    return phi, d1, d2


def check_activation(kind: str) -> str:
    if kind not in _TABLE:
        raise ConfigurationError(
            f"unknown activation {kind!r}; expected one of {ACTIVATIONS}"
        )
    return kind
