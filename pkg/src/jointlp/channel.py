"""Finite-state ISI channels, their trellises and AWGN simulation.

Inputs are bits {0, 1} filtered directly by the channel polynomial, so the
dicode channel has noiseless outputs in {-1, 0, 1} and PR2 in {0, ..., 4}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    state: int
    bit: int
    next_state: int
    output: float


@dataclass(frozen=True)
class FscSpec:
    name: str
    num_states: int
    edges: tuple[Edge, ...]
    initial_dist: tuple[float, ...]
    state_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        p0 = np.asarray(self.initial_dist, dtype=float)
        if p0.shape != (self.num_states,):
            raise ChannelError("initial_dist must have one entry per state")
        if np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-12:
            raise ChannelError("initial_dist must be a probability vector")
        for e in self.edges:
            if not (0 <= e.state < self.num_states and 0 <= e.next_state < self.num_states):
                raise ChannelError(f"edge {e} references an unknown state")
            if e.bit not in (0, 1):
                raise ChannelError(f"edge {e} has a non-binary input")

    @property
    def output_alphabet(self) -> tuple[float, ...]:
        return tuple(sorted({e.output for e in self.edges}))

    @property
    def is_fsisic(self) -> bool:
        """True when every (state, bit) pair has exactly one outgoing edge."""
        pairs = [(e.state, e.bit) for e in self.edges]
        want = {(s, x) for s in range(self.num_states) for x in (0, 1)}
        return len(pairs) == len(set(pairs)) and set(pairs) == want

    def next_state(self, state: int, bit: int) -> Edge:
        for e in self.edges:
            if e.state == state and e.bit == bit:
                return e
        raise ChannelError(f"no edge for state={state}, bit={bit}")

    def with_start_state(self, state: int) -> "FscSpec":
        """Same channel with P0 a point mass on `state`."""
        p0 = [0.0] * self.num_states
        p0[state] = 1.0
        return FscSpec(self.name, self.num_states, self.edges, tuple(p0), self.state_labels)


def _uniform(n):
    return tuple([1.0 / n] * n)


def build_dicode() -> FscSpec:
    # state = previous input bit, output x - x_prev
    edges = tuple(Edge(s, x, x, float(x - s)) for s in (0, 1) for x in (0, 1))
    return FscSpec("dic", 2, edges, _uniform(2), ("0", "1"))


def build_precoded_dicode() -> FscSpec:
    # state = current precoder output b; b' = x xor b; output b' - b
    edges = tuple(Edge(b, x, x ^ b, float((x ^ b) - b)) for b in (0, 1) for x in (0, 1))
    return FscSpec("pdic", 2, edges, _uniform(2), ("0", "1"))


def build_pr2() -> FscSpec:
    """Class-II partial response 1 + 2D + D^2.

    State index 2*x1 + x2 encodes the last two inputs (x1 most recent).
    """
    edges = []
    for s in range(4):
        x1, x2 = s >> 1, s & 1
        for x in (0, 1):
            edges.append(Edge(s, x, 2 * x + x1, float(x + 2 * x1 + x2)))
    labels = tuple(f"({s >> 1},{s & 1})" for s in range(4))
    return FscSpec("pr2", 4, tuple(edges), _uniform(4), labels)


CHANNELS = {
    "dic": build_dicode,
    "pdic": build_precoded_dicode,
    "pr2": build_pr2,
}


def get_channel(name: str) -> FscSpec:
    try:
        return CHANNELS[name.lower()]()
    except KeyError:
        raise ChannelError(f"unknown channel {name!r}; choose from {sorted(CHANNELS)}") from None


@dataclass(frozen=True)
class Trellis:
    """Time-invariant trellis of length `n`.

    Every section shares the same edge arrays, sorted by (state, bit).
    """
    spec: FscSpec
    n: int
    s: np.ndarray
    x: np.ndarray
    sn: np.ndarray
    a: np.ndarray

    @property
    def num_edges(self) -> int:
        return len(self.s)

    @property
    def num_states(self) -> int:
        return self.spec.num_states

    def edge_index(self, state: int, bit: int) -> int:
        hits = np.flatnonzero((self.s == state) & (self.x == bit))
        if len(hits) != 1:
            raise ChannelError(f"no unique edge for state={state}, bit={bit}")
        return int(hits[0])

    def path(self, bits, start_state: int) -> np.ndarray:
        """Edge indices of the unique path driven by `bits` from `start_state`."""
        out = np.empty(len(bits), dtype=np.int64)
        k = start_state
        for i, b in enumerate(bits):
            e = self.edge_index(k, int(b))
            out[i] = e
            k = int(self.sn[e])
        return out

    def path_flow(self, path) -> np.ndarray:
        """Indicator flow g (n x O) of an edge path."""
        g = np.zeros((len(path), self.num_edges))
        g[np.arange(len(path)), path] = 1.0
        return g


def build_trellis(spec: FscSpec, n: int) -> Trellis:
    if n < 1:
        raise ChannelError("trellis length must be >= 1")
    order = sorted(spec.edges, key=lambda e: (e.state, e.bit, e.next_state))
    s = np.array([e.state for e in order], dtype=np.int64)
    x = np.array([e.bit for e in order], dtype=np.int64)
    sn = np.array([e.next_state for e in order], dtype=np.int64)
    a = np.array([e.output for e in order], dtype=float)
    for arr in (s, x, sn, a):
        arr.setflags(write=False)
    return Trellis(spec, n, s, x, sn, a)


def simulate(spec: FscSpec, bits, sigma: float, rng: np.random.Generator,
             start_state: int | None = None):
    """Transmit `bits` through the channel; returns (y, path)."""
    if not spec.is_fsisic:
        raise ChannelError("simulation needs a deterministic-state (FSISIC) channel")
    if sigma < 0:
        raise ChannelError("sigma must be non-negative")
    bits = np.asarray(bits, dtype=np.int64)
    if start_state is None:
        start_state = int(rng.choice(spec.num_states, p=np.asarray(spec.initial_dist)))
    trellis = build_trellis(spec, max(len(bits), 1))
    path = trellis.path(bits, start_state)
    y = trellis.a[path].copy()
    if sigma > 0:
        y += sigma * rng.standard_normal(len(bits))
    return y, path


def stationary_distribution(spec: FscSpec) -> np.ndarray:
    """State distribution of the chain driven by i.i.d. uniform input bits."""
    P = np.zeros((spec.num_states, spec.num_states))
    for e in spec.edges:
        P[e.state, e.next_state] += 0.5
    w, v = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, k])
    return pi / pi.sum()


def output_power(spec: FscSpec) -> float:
    """E[a^2] under uniform inputs at the stationary state distribution."""
    if not spec.is_fsisic:
        raise ChannelError("output power is defined for FSISIC channels only")
    pi = stationary_distribution(spec)
    return float(sum(pi[e.state] * 0.5 * e.output ** 2 for e in spec.edges))


def snr_to_sigma(snr_db: float, power: float) -> float:
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def sigma_to_snr(sigma: float, power: float) -> float:
    return float(10.0 * np.log10(power / sigma ** 2))
