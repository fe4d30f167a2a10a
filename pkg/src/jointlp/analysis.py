"""Pseudo-codeword analysis, error-rate bounds and duality-gap tools."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .channel import Trellis
from .ldpc import LdpcCode, check_configs
from . import ijlp
from .lpexact import simplex

DGEN_DECIMALS = 4
F_DECIMALS = 4


# ---------------------------------------------------------------- projections

def _x_labels(g, trellis):
    if trellis is not None:
        return trellis.x
    # canonical order (state-major, bit-minor) of a binary-input FSISIC
    return np.arange(np.shape(g)[-1]) % 2


def project_symbolwise(g, trellis: Trellis | None = None) -> np.ndarray:
    """f_i = total flow on edges carrying input bit 1."""
    g = np.asarray(g, dtype=float)
    return g[:, _x_labels(g, trellis) == 1].sum(axis=1)


def project_signal_space(g, trellis: Trellis) -> np.ndarray:
    """p_i = flow-weighted noiseless output of section i."""
    return np.asarray(g, dtype=float) @ trellis.a


def classify(g, tol: float = 1e-6) -> str:
    g = np.asarray(g, dtype=float)
    dev = np.minimum(np.abs(g), np.abs(g - 1.0)).max()
    return "TCW" if dev <= tol else "JD-TPCW"


def output_variance(g, trellis: Trellis) -> float:
    """sum_i (E[a^2] - E[a]^2) under the per-section flow distributions."""
    g = np.asarray(g, dtype=float)
    p = g @ trellis.a
    return float((g @ trellis.a ** 2).sum() - (p ** 2).sum())


def d_gen(c, p, g, trellis: Trellis) -> float:
    """Generalized Euclidean distance between a signal-space codeword c and a
    pseudo-codeword with flows g and signal projection p:
    (|c - p|^2 + var) / |c - p|.
    """
    d2 = float(np.sum((np.asarray(c, float) - np.asarray(p, float)) ** 2))
    if d2 <= 0.0:
        raise ValueError("pseudo-codeword coincides with the reference in signal space")
    var = max(output_variance(g, trellis), 0.0)
    return (d2 + var) / math.sqrt(d2)


def pairwise_error_prob(dgen: float, sigma: float) -> float:
    """Q(d_gen / (2 sigma))."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if dgen < 0:
        raise ValueError("distance must be non-negative")
    return float(0.5 * erfc(dgen / (2.0 * sigma) / math.sqrt(2.0)))


def entropy(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    nz = x[x > 0]
    return float(-(nz * np.log(nz)).sum())


# ---------------------------------------------------------------- spectrum

@dataclass
class DistanceSpectrum:
    reference: tuple
    entries: dict = field(default_factory=dict)
    examples: dict = field(default_factory=dict)
    approximate: bool = False

    def add(self, dist: float, f=None) -> float:
        key = round(float(dist), DGEN_DECIMALS)
        self.entries[key] = self.entries.get(key, 0) + 1
        if f is not None and key not in self.examples:
            self.examples[key] = [round(float(v), F_DECIMALS) for v in f]
        return key

    @property
    def distances(self):
        return sorted(self.entries)

    def __len__(self):
        return len(self.entries)

    def to_json(self) -> str:
        rows = [{"d_gen": d, "multiplicity": self.entries[d], "example_f": self.examples.get(d)}
                for d in self.distances]
        return json.dumps({"reference": list(self.reference), "approximate": self.approximate,
                           "entries": rows}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DistanceSpectrum":
        obj = json.loads(text)
        sp = cls(tuple(obj["reference"]), approximate=bool(obj.get("approximate", False)))
        for row in obj["entries"]:
            d = float(row["d_gen"])
            mult = int(row["multiplicity"])
            if mult < 1 or d <= 0:
                raise ValueError(f"invalid spectrum entry {row}")
            sp.entries[d] = mult
            if row.get("example_f") is not None:
                sp.examples[d] = row["example_f"]
        return sp

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "DistanceSpectrum":
        return cls.from_json(Path(path).read_text())


def union_bound(spectrum: DistanceSpectrum | dict, sigma: float) -> float:
    """sum_d K_d Q(d / 2 sigma) over the (possibly truncated) spectrum."""
    entries = spectrum.entries if isinstance(spectrum, DistanceSpectrum) else spectrum
    return float(sum(k * pairwise_error_prob(d, sigma) for d, k in entries.items()))


# ---------------------------------------------------------------- gap bounds

@dataclass
class GapBound:
    delta: float
    code_term: float
    trellis_term: float
    eps_term: float = 0.0
    eps: float = 0.0
    C: float = 0.0

    def total(self, n: int) -> float:
        return self.delta * n


def gap_delta(code: LdpcCode, trellis: Trellis, k1: float, k2: float,
              eps: float | None = None, metrics=None, C: float | None = None) -> GapBound:
    """Per-bit gap delta between softened and exact optimum.

    (1 - R + Nbar) ln2 / K1 + ln O / (K2 N), plus eps (3/N sum|b| + C) when
    eps and the metrics are supplied.
    """
    if k1 <= 0 or k2 <= 0:
        raise ValueError("temperatures must be positive")
    n = code.n
    ct = (1.0 - code.rate + code.avg_check_degree_per_bit) * math.log(2.0) / k1
    tt = math.log(trellis.num_edges) / (k2 * n)
    et = 0.0
    if eps is not None:
        if metrics is None:
            raise ValueError("the eps term needs the branch metrics")
        C = 0.0 if C is None else C
        et = eps * (3.0 / n * float(np.abs(metrics).sum()) + C)
    return GapBound(ct + tt + et, ct, tt, et, eps or 0.0, C or 0.0)


# ---------------------------------------------------------------- primal from dual

@dataclass
class PrimalFromDual:
    g: np.ndarray
    w: tuple
    value: float
    ps_value: float
    eps: float
    C: float


def maxent_config_weights(configs: np.ndarray, target, tol: float = 1e-13,
                          max_iter: int = 200) -> np.ndarray | None:
    """Max-entropy distribution over `configs` (rows) whose marginals equal `target`.

    Newton's method on the convex dual. Returns None if it does not converge
    (e.g. target on the boundary of the parity polytope).
    """
    A = configs.astype(float)
    target = np.asarray(target, dtype=float)
    theta = np.zeros(A.shape[1])
    for _ in range(max_iter):
        v = A @ theta
        w = np.exp(v - v.max())
        w /= w.sum()
        mu = A.T @ w
        r = mu - target
        if np.abs(r).max() <= tol:
            return w
        cov = (A * w[:, None]).T @ A - np.outer(mu, mu)
        try:
            step = np.linalg.solve(cov + 1e-14 * np.eye(len(theta)), r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        obj = lambda th: np.log(np.exp(A @ th - (A @ th).max()).sum()) + (A @ th).max() - th @ target  # noqa: E731
        f0 = obj(theta)
        while t > 1e-12 and obj(theta - t * step) > f0 - 1e-4 * t * (r @ step):
            t *= 0.5
        theta = theta - t * step
        if not np.all(np.isfinite(theta)):
            return None
    return None


def lp_config_weights(configs: np.ndarray, target) -> np.ndarray:
    """Any feasible distribution over `configs` with the given marginals (simplex)."""
    A = configs.astype(float)
    rows = np.vstack([np.ones(len(A)), A.T])
    rhs = np.concatenate([[1.0], target])
    x, _, _, _ = simplex(rows, rhs, np.zeros(len(A)))
    return x


def primal_from_dual(m, code: LdpcCode, trellis: Trellis, metrics, k1: float, k2: float,
                     p: int = 0) -> PrimalFromDual:
    """Feasible primal point built from (near-)converged dual messages.

    Trellis flows are the edge posteriors, mixed with the uniform edge
    distribution in proportion 6 eps; check weights are recovered by
    maximum-entropy fitting to the smoothed bit marginals.
    """
    graph = ijlp.CodeGraph.from_code(code)
    m = np.asarray(m, dtype=float)
    st = ijlp.refresh_state(metrics, graph, trellis, k2, m)
    g = ijlp.edge_posteriors(st, trellis)
    big_m = ijlp.refresh_check_messages(m, graph, k1)
    lam_j = ijlp.check_marginals(m, big_m, k1)
    f = g[:, trellis.x == 1].sum(axis=1)
    eps = float(np.abs(lam_j - f[graph.edge_var]).max()) if len(lam_j) else 0.0
    if eps > 1.0 / 6.0:
        raise ValueError(f"messages too inconsistent for the construction (eps={eps:.4g} > 1/6)")
    O = trellis.num_edges
    g_hat = (1.0 - 6.0 * eps) * g + 6.0 * eps / O
    f_hat = g_hat[:, trellis.x == 1].sum(axis=1)
    w_hat = []
    for j, nb in enumerate(code.check_neighbors):
        cfg = check_configs(code, j)
        target = f_hat[list(nb)]
        w = maxent_config_weights(cfg, target)
        if w is None:
            w = lp_config_weights(cfg, target)
        w_hat.append(w)
    b = np.asarray(metrics, dtype=float)
    value = float((b * g_hat).sum())
    ps = value - sum(entropy(w) for w in w_hat) / k1 - entropy(g_hat[p]) / k2
    C = float(np.abs(m).sum()) / code.n
    return PrimalFromDual(g_hat, tuple(w_hat), value, ps, eps, C)
