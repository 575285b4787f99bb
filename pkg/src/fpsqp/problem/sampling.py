"""Latin hypercube sampling."""

import numpy as np

from fpsqp.errors import ConfigurationError


def lhs_sample(n_samples: int, dims: int, bounds, seed=None) -> np.ndarray:
    """Latin hypercube design of shape ``(n_samples, dims)``.

    Each dimension is cut into ``n_samples`` equal strata and every stratum
    receives exactly one point, placed uniformly within it. ``bounds`` is a
    single ``(lo, hi)`` pair or one pair per dimension.
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise ConfigurationError(f"n_samples must be a positive integer, got {n_samples}")
    if int(dims) != dims or dims < 1:
        raise ConfigurationError(f"dims must be a positive integer, got {dims}")
    b = np.asarray(bounds, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dims, 1))
    if b.shape != (dims, 2):
        raise ConfigurationError(f"bounds must be (lo, hi) or {dims} such pairs")
    lo, hi = b[:, 0], b[:, 1]
    if not (np.all(np.isfinite(b)) and np.all(lo < hi)):
        raise ConfigurationError("each dimension needs finite bounds with lo < hi")

    rng = np.random.default_rng(seed)
    unit = np.empty((n_samples, dims))
    for k in range(dims):
        strata = rng.permutation(n_samples)
        unit[:, k] = (strata + rng.random(n_samples)) / n_samples
    return lo + unit * (hi - lo)
