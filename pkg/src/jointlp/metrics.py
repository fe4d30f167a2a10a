"""Branch metrics b[i, e] on a trellis."""
from __future__ import annotations

import numpy as np

from .channel import Trellis

# stands in for -ln 0 on impossible start states so the LP stays bounded
ZERO_PROB_SURROGATE = 1e6


def initial_state_cost(trellis: Trellis) -> np.ndarray:
    """-ln P0(s(e)) per edge, with the finite surrogate for zero probabilities."""
    p0 = np.asarray(trellis.spec.initial_dist, dtype=float)[trellis.s]
    with np.errstate(divide="ignore"):
        cost = -np.log(p0)
    cost[p0 == 0] = ZERO_PROB_SURROGATE
    return cost


def awgn_metrics(trellis: Trellis, y, include_p0: bool = False,
                 sigma: float | None = None) -> np.ndarray:
    """b[i, e] = (y_i - a(e))^2, or divided by 2 sigma^2 when `sigma` is given."""
    y = np.asarray(y, dtype=float)
    if y.shape != (trellis.n,):
        raise ValueError(f"received vector has shape {y.shape}, trellis length is {trellis.n}")
    b = (y[:, None] - trellis.a[None, :]) ** 2
    if sigma is not None:
        if sigma <= 0:
            raise ValueError("scaled metrics need sigma > 0")
        b = b / (2.0 * sigma ** 2)
    if include_p0:
        b[0] += initial_state_cost(trellis)
    return b


def general_metrics(trellis: Trellis, loglik) -> np.ndarray:
    """Metrics from per-edge negative log-likelihoods -ln P(y_i, s'|x, s).

    The initial-state term is always added to section 1; a uniform P0 only
    shifts that section by a constant.
    """
    b = np.array(loglik, dtype=float)
    if b.shape != (trellis.n, trellis.num_edges):
        raise ValueError(f"loglik has shape {b.shape}, expected {(trellis.n, trellis.num_edges)}")
    if not np.all(np.isfinite(b)):
        raise ValueError("log-likelihoods must be finite")
    b[0] += initial_state_cost(trellis)
    return b


def path_metric(b: np.ndarray, path) -> float:
    path = np.asarray(path)
    return float(b[np.arange(len(path)), path].sum())
