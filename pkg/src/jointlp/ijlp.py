"""Iterative joint LP decoder.

Messages live on the Tanner-graph edges in check-major order (see
``LdpcCode.edges``): ``m`` are bit-to-check, ``M`` check-to-bit. All
trellis arithmetic is in the log domain. Section ``i`` (0-based) joins
state-time ``i`` to ``i + 1``, so ``abar[i]`` is the normalized forward
vector entering section ``i`` and ``bbar[i + 1]`` the backward vector
leaving it.

Two schedules are provided. ``decode`` runs the printed algorithm: one
trellis pass, then a few rounds of check updates with the trellis output
held fixed. ``cyclic_decode`` maximizes the softened dual exactly over one
bit's messages at a time, which is the variant with a convergence proof.
"""
from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
from numba import njit

from .channel import Trellis
from .ldpc import LdpcCode, check_configs, MAX_ENUM_DEGREE

L_CLAMP = 1.0 - 1e-15
MAX_DUAL_CONFIGS = 1 << 15


class NumericalAbort(FloatingPointError):
    pass


@dataclass
class DecoderParams:
    k1: float = 1000.0
    k2: float = 100.0
    inner_rounds: int = 2
    outer_max: int = 100
    schedule: str = "simultaneous"
    big_arg_threshold: float = 35.0
    eps_stop: float = 1e-9
    eps_residual: float | None = None
    max_sweeps: int = 5000

    def __post_init__(self):
        bad = []
        if not self.k1 > 0:
            bad.append("k1 must be > 0")
        if not self.k2 > 0:
            bad.append("k2 must be > 0")
        if self.inner_rounds < 1:
            bad.append("inner_rounds must be >= 1")
        if self.outer_max < 1:
            bad.append("outer_max must be >= 1")
        if self.schedule not in ("simultaneous", "cyclic"):
            bad.append("schedule must be 'simultaneous' or 'cyclic'")
        if bad:
            raise ValueError("; ".join(bad))


@dataclass
class CodeGraph:
    """Flat CSR view of a code for the compiled kernels."""
    n: int
    edge_var: np.ndarray
    check_ptr: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray

    @classmethod
    def from_code(cls, code: LdpcCode) -> "CodeGraph":
        edge_var = np.array([i for _, i in code.edges], dtype=np.int64)
        check_ptr = np.zeros(code.m + 1, dtype=np.int64)
        for j, nb in enumerate(code.check_neighbors):
            check_ptr[j + 1] = check_ptr[j] + len(nb)
        by_var = [[] for _ in range(code.n)]
        for t, i in enumerate(edge_var):
            by_var[i].append(t)
        var_ptr = np.zeros(code.n + 1, dtype=np.int64)
        for i in range(code.n):
            var_ptr[i + 1] = var_ptr[i] + len(by_var[i])
        var_edges = np.array([t for lst in by_var for t in lst], dtype=np.int64)
        return cls(code.n, edge_var, check_ptr, var_ptr, var_edges)

    @property
    def num_edges(self) -> int:
        return len(self.edge_var)


@dataclass
class MessageState:
    m: np.ndarray
    big_m: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    abar: np.ndarray
    bbar: np.ndarray
    zf: np.ndarray
    zb: np.ndarray
    saturations: int = 0

    def bit_sums(self, graph: CodeGraph) -> np.ndarray:
        return np.bincount(graph.edge_var, weights=self.m, minlength=graph.n)


@dataclass
class DecodeResult:
    bits: np.ndarray
    status: str
    gamma: np.ndarray
    iterations: int
    state: MessageState = field(repr=False)

    @property
    def parity_ok(self) -> bool:
        return self.status == "parity_ok"


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _lse2(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def _bit_sums(m, edge_var, n):
    out = np.zeros(n)
    for t in range(len(m)):
        out[edge_var[t]] += m[t]
    return out


@njit(cache=True)
def _lambda_bar(b, x, bitsum, k2):
    n, O = b.shape
    lam = np.empty((n, O))
    for i in range(n):
        for e in range(O):
            lam[i, e] = -k2 * (b[i, e] - x[e] * bitsum[i])
    return lam


@njit(cache=True)
def _forward_section(a_in, lam_i, s, sn, S, out):
    """One normalized forward step; writes ln alpha into `out`, returns ln z."""
    for k in range(S):
        out[k] = -np.inf
    for e in range(len(s)):
        out[sn[e]] = _lse2(out[sn[e]], a_in[s[e]] + lam_i[e])
    z = -np.inf
    for k in range(S):
        z = _lse2(z, out[k])
    if not z > -np.inf or z != z:
        return np.nan
    for k in range(S):
        out[k] -= z
    return z


@njit(cache=True)
def _backward_section(b_in, lam_i, s, sn, S, out):
    for k in range(S):
        out[k] = -np.inf
    for e in range(len(s)):
        out[s[e]] = _lse2(out[s[e]], b_in[sn[e]] + lam_i[e])
    z = -np.inf
    for k in range(S):
        z = _lse2(z, out[k])
    if not z > -np.inf or z != z:
        return np.nan
    for k in range(S):
        out[k] -= z
    return z


@njit(cache=True)
def _forward_backward(lam, s, sn, S, a0):
    n = lam.shape[0]
    abar = np.empty((n + 1, S))
    bbar = np.empty((n + 1, S))
    zf = np.zeros(n + 1)
    zb = np.zeros(n + 1)
    abar[0] = a0
    for k in range(S):
        bbar[n, k] = -math.log(S)
    ok = True
    for i in range(n):
        zf[i + 1] = _forward_section(abar[i], lam[i], s, sn, S, abar[i + 1])
        if zf[i + 1] != zf[i + 1]:
            ok = False
    for i in range(n - 1, -1, -1):
        zb[i] = _backward_section(bbar[i + 1], lam[i], s, sn, S, bbar[i])
        if zb[i] != zb[i]:
            ok = False
    return abar, bbar, zf, zb, ok


@njit(cache=True)
def _gamma_section(a_in, b_out, lam_i, s, sn, x):
    """ln(sum_{x=0} alpha*lambda*beta / sum_{x=1} ...), max-shifted."""
    mx0 = -np.inf
    mx1 = -np.inf
    for e in range(len(s)):
        v = a_in[s[e]] + lam_i[e] + b_out[sn[e]]
        if x[e] == 0:
            if v > mx0:
                mx0 = v
        elif v > mx1:
            mx1 = v
    s0 = 0.0
    s1 = 0.0
    for e in range(len(s)):
        v = a_in[s[e]] + lam_i[e] + b_out[sn[e]]
        if x[e] == 0:
            if mx0 > -np.inf:
                s0 += math.exp(v - mx0)
        elif mx1 > -np.inf:
            s1 += math.exp(v - mx1)
    if mx0 == -np.inf and mx1 == -np.inf:
        return np.nan
    if mx0 == -np.inf:
        return -np.inf
    if mx1 == -np.inf:
        return np.inf
    return mx0 - mx1 + math.log(s0) - math.log(s1)


@njit(cache=True)
def _check_value(m, lo, hi, skip, k1, thr):
    """M for the edge `skip` of the check occupying m[lo:hi].

    Returns (M, saturated). The large-argument branch is the log-domain
    form of (1/K1) ln((1 - l)/(1 + l)) when every K1|m| is large.
    """
    mn = np.inf
    sign = 1.0
    zero = False
    for r in range(lo, hi):
        if r == skip:
            continue
        a = abs(m[r])
        if a < mn:
            mn = a
        if m[r] < 0:
            sign = -sign
        elif m[r] == 0:
            zero = True
    if mn == np.inf or zero:
        return 0.0, False
    if k1 * mn >= thr:
        acc = 0.0
        for r in range(lo, hi):
            if r != skip:
                acc += math.exp(-k1 * (abs(m[r]) - mn))
        return sign * (math.log(acc) / k1 - mn), False
    # l = prod tanh(K1 m / 2), carried as sign * exp(log_abs) so that 1 - |l|
    # keeps full relative precision when |l| is close to one
    log_abs = 0.0
    for r in range(lo, hi):
        if r != skip:
            z = k1 * abs(m[r])
            log_abs += math.log1p(-2.0 / (math.exp(z) + 1.0)) if z < 700.0 else 0.0
    near = -math.expm1(log_abs)          # 1 - |l|
    far = 1.0 + math.exp(log_abs)        # 1 + |l|
    sat = False
    if near < 1.0 - L_CLAMP:
        near = 1.0 - L_CLAMP
        sat = True
    val = (math.log(near) - math.log(far)) / k1
    return (val if sign > 0 else -val), sat


@njit(cache=True)
def _check_update(m, big_m, check_ptr, k1, thr):
    sat = 0
    for j in range(len(check_ptr) - 1):
        lo = check_ptr[j]
        hi = check_ptr[j + 1]
        for t in range(lo, hi):
            v, s_ = _check_value(m, lo, hi, t, k1, thr)
            big_m[t] = v
            if s_:
                sat += 1
    return sat


@njit(cache=True)
def _edge_check(t, check_ptr):
    lo = 0
    hi = len(check_ptr) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if check_ptr[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def _outer_iteration(b, s, x, sn, S, a0, m, big_m, edge_var, check_ptr,
                     k1, k2, thr, inner_rounds, n):
    bitsum = _bit_sums(m, edge_var, n)
    lam = _lambda_bar(b, x, bitsum, k2)
    abar, bbar, zf, zb, ok = _forward_backward(lam, s, sn, S, a0)
    gamma = np.empty(n)
    for i in range(n):
        gamma[i] = _gamma_section(abar[i], bbar[i + 1], lam[i], s, sn, x)
        if gamma[i] != gamma[i]:
            ok = False
    sat = 0
    if ok:
        for _ in range(inner_rounds):
            for t in range(len(m)):
                m[t] = big_m[t] + gamma[edge_var[t]] / k1
            sat += _check_update(m, big_m, check_ptr, k1, thr)
    return gamma, lam, abar, bbar, zf, zb, ok, sat


@njit(cache=True)
def _hard_and_syndrome(gamma, edge_var, check_ptr):
    n = len(gamma)
    bits = np.zeros(n, dtype=np.int8)
    for i in range(n):
        if gamma[i] < 0:
            bits[i] = 1
    w = 0
    for j in range(len(check_ptr) - 1):
        par = 0
        for t in range(check_ptr[j], check_ptr[j + 1]):
            par ^= bits[edge_var[t]]
        w += par
    return bits, w


@njit(cache=True)
def _cyclic_block(p, b, s, x, sn, a_in, b_out, m, big_m, edge_var, check_ptr,
                  var_ptr, var_edges, k1, k2, thr):
    """Exact maximization of the softened dual over bit p's messages.

    gamma_ext is the trellis log-ratio with bit p's own messages removed;
    the full ratio is gamma_ext - K2 * S where S is the sum of the new
    messages, which gives a scalar linear equation for S.
    """
    O = len(s)
    lam = np.empty(O)
    for e in range(O):
        lam[e] = -k2 * b[p, e]
    g_ext = _gamma_section(a_in, b_out, lam, s, sn, x)
    d = var_ptr[p + 1] - var_ptr[p]
    if d == 0:
        return g_ext
    sum_m = 0.0
    for q in range(var_ptr[p], var_ptr[p + 1]):
        t = var_edges[q]
        j = _edge_check(t, check_ptr)
        v, _ = _check_value(m, check_ptr[j], check_ptr[j + 1], t, k1, thr)
        big_m[t] = v
        sum_m += v
    tot = (k1 * sum_m + d * g_ext) / (k1 + d * k2)
    g_new = g_ext - k2 * tot
    for q in range(var_ptr[p], var_ptr[p + 1]):
        t = var_edges[q]
        m[t] = big_m[t] + g_new / k1
    return g_new


@njit(cache=True)
def _backward_all(b, s, x, sn, S, m, edge_var, k2, n):
    bitsum = _bit_sums(m, edge_var, n)
    lam = _lambda_bar(b, x, bitsum, k2)
    bbar = np.empty((n + 1, S))
    for k in range(S):
        bbar[n, k] = -math.log(S)
    ok = True
    for i in range(n - 1, -1, -1):
        z = _backward_section(bbar[i + 1], lam[i], s, sn, S, bbar[i])
        if z != z:
            ok = False
    return bbar, ok


@njit(cache=True)
def _cyclic_sweep(b, s, x, sn, S, a0, m, big_m, edge_var, check_ptr, var_ptr,
                  var_edges, k1, k2, thr, n):
    bbar, ok = _backward_all(b, s, x, sn, S, m, edge_var, k2, n)
    a = a0.copy()
    nxt = np.empty(S)
    gamma = np.empty(n)
    lam_i = np.empty(len(s))
    for p in range(n):
        gamma[p] = _cyclic_block(p, b, s, x, sn, a, bbar[p + 1], m, big_m, edge_var,
                                 check_ptr, var_ptr, var_edges, k1, k2, thr)
        bs = 0.0
        for q in range(var_ptr[p], var_ptr[p + 1]):
            bs += m[var_edges[q]]
        for e in range(len(s)):
            lam_i[e] = -k2 * (b[p, e] - x[e] * bs)
        z = _forward_section(a, lam_i, s, sn, S, nxt)
        if z != z:
            ok = False
        a[:] = nxt
    return gamma, ok


# ---------------------------------------------------------------- drivers

def _trellis_arrays(trellis: Trellis):
    return trellis.s, trellis.x, trellis.sn, trellis.num_states


def _uniform_a0(S):
    return np.full(S, -math.log(S))


def refresh_state(metrics, graph: CodeGraph, trellis: Trellis, k2: float,
                  m: np.ndarray, big_m: np.ndarray | None = None) -> MessageState:
    """Recompute lambda, alpha, beta and gamma from the messages m."""
    s, x, sn, S = _trellis_arrays(trellis)
    b = np.asarray(metrics, dtype=float)
    bitsum = _bit_sums(m, graph.edge_var, graph.n)
    lam = _lambda_bar(b, x, bitsum, float(k2))
    abar, bbar, zf, zb, ok = _forward_backward(lam, s, sn, S, _uniform_a0(S))
    if not ok:
        raise NumericalAbort("forward/backward normalization vanished")
    gamma = np.array([_gamma_section(abar[i], bbar[i + 1], lam[i], s, sn, x)
                      for i in range(graph.n)])
    if big_m is None:
        big_m = np.zeros_like(m)
    return MessageState(m.copy(), big_m.copy(), gamma, lam, abar, bbar, zf, zb)


def _trace_line(fh, record):
    fh.write(json.dumps(record) + "\n")


def gamma_hash(gamma) -> str:
    return hashlib.sha1(np.ascontiguousarray(gamma, dtype=float).tobytes()).hexdigest()[:16]


def decode(metrics, code: LdpcCode, trellis: Trellis, params: DecoderParams | None = None,
           trace=None, graph: CodeGraph | None = None) -> DecodeResult:
    """Run the iterative joint LP decoder with the schedule in `params`."""
    params = params or DecoderParams()
    if params.schedule == "cyclic":
        return _decode_cyclic_hard(metrics, code, trellis, params, trace, graph)
    graph = graph or CodeGraph.from_code(code)
    b = np.ascontiguousarray(metrics, dtype=float)
    if b.shape != (trellis.n, trellis.num_edges) or trellis.n != code.n:
        raise ValueError("metrics, code and trellis dimensions disagree")
    s, x, sn, S = _trellis_arrays(trellis)
    a0 = _uniform_a0(S)
    m = np.zeros(graph.num_edges)
    big_m = np.zeros(graph.num_edges)
    sat_total = 0
    status = "max_iter"
    it = 0
    for it in range(1, params.outer_max + 1):
        gamma, lam, abar, bbar, zf, zb, ok, sat = _outer_iteration(
            b, s, x, sn, S, a0, m, big_m, graph.edge_var, graph.check_ptr,
            float(params.k1), float(params.k2), float(params.big_arg_threshold),
            int(params.inner_rounds), graph.n)
        if not ok:
            raise NumericalAbort(f"non-finite trellis quantities at outer iteration {it}")
        sat_total += sat
        bits, synd = _hard_and_syndrome(gamma, graph.edge_var, graph.check_ptr)
        if trace is not None:
            _trace_line(trace, {"iteration": it, "syndrome_weight": int(synd),
                                "gamma_hash": gamma_hash(gamma), "saturations": int(sat)})
        if synd == 0:
            status = "parity_ok"
            break
    state = MessageState(m, big_m, gamma, lam, abar, bbar, zf, zb, sat_total)
    return DecodeResult(bits, status, gamma, it, state)


@njit(cache=True)
def _te_iteration(b, s, x, sn, S, a0, lcv, edge_var, check_ptr, inner_rounds, n):
    """One round of extrinsic turbo equalization in LLR form (ln P0/P1).

    The BCJR prior is the sum of check-to-bit LLRs; the equalizer passes
    back only its extrinsic part, and each bit-to-check message excludes
    the destination check.
    """
    la = _bit_sums(lcv, edge_var, n)
    O = b.shape[1]
    lam = np.empty((n, O))
    for i in range(n):
        for e in range(O):
            lam[i, e] = -b[i, e] - x[e] * la[i]
    abar, bbar, zf, zb, ok = _forward_backward(lam, s, sn, S, a0)
    ext = np.empty(n)
    for i in range(n):
        ext[i] = _gamma_section(abar[i], bbar[i + 1], lam[i], s, sn, x) - la[i]
        if not math.isfinite(ext[i]):
            ok = False
    lvc = np.empty(len(lcv))
    if ok:
        for _ in range(inner_rounds):
            tot = _bit_sums(lcv, edge_var, n)
            for t in range(len(lcv)):
                lvc[t] = ext[edge_var[t]] + tot[edge_var[t]] - lcv[t]
            # the check rule returns ln((1-l)/(1+l)) = -2 atanh(l) at unit temperature
            _check_update(lvc, lcv, check_ptr, 1.0, 35.0)
            for t in range(len(lcv)):
                lcv[t] = -lcv[t]
    post = ext + _bit_sums(lcv, edge_var, n)
    return post, lvc, ok


def turbo_equalize(metrics, code: LdpcCode, trellis: Trellis, iters: int = 100,
                   inner_rounds: int = 1, trace=None, graph: CodeGraph | None = None) -> DecodeResult:
    """Standard BCJR + sum-product turbo equalizer (the comparison baseline).

    `metrics` should be negative log-likelihoods, i.e. awgn metrics scaled
    by 1/(2 sigma^2). The returned state carries bit-to-check LLRs in ``m``
    and check-to-bit LLRs in ``big_m``.
    """
    graph = graph or CodeGraph.from_code(code)
    b = np.ascontiguousarray(metrics, dtype=float)
    if b.shape != (trellis.n, trellis.num_edges) or trellis.n != code.n:
        raise ValueError("metrics, code and trellis dimensions disagree")
    s, x, sn, S = _trellis_arrays(trellis)
    a0 = _uniform_a0(S)
    lcv = np.zeros(graph.num_edges)
    lvc = np.zeros(graph.num_edges)
    post = np.zeros(graph.n)
    status = "max_iter"
    it = 0
    bits = np.zeros(graph.n, dtype=np.int8)
    for it in range(1, iters + 1):
        post, lvc, ok = _te_iteration(b, s, x, sn, S, a0, lcv, graph.edge_var,
                                      graph.check_ptr, int(inner_rounds), graph.n)
        if not ok:
            raise NumericalAbort(f"non-finite equalizer output at iteration {it}")
        bits, synd = _hard_and_syndrome(post, graph.edge_var, graph.check_ptr)
        if trace is not None:
            _trace_line(trace, {"iteration": it, "syndrome_weight": int(synd),
                                "gamma_hash": gamma_hash(post)})
        if synd == 0:
            status = "parity_ok"
            break
    empty = np.zeros((0, 0))
    st = MessageState(lvc, lcv, post, empty, empty, empty, np.zeros(0), np.zeros(0))
    return DecodeResult(bits, status, post, it, st)


# ---------------------------------------------------------------- dual objective

@functools.lru_cache(maxsize=32)
def _float_configs(code: LdpcCode) -> tuple:
    out = []
    for j, nb in enumerate(code.check_neighbors):
        d = len(nb)
        if d > MAX_ENUM_DEGREE or (1 << (d - 1)) > MAX_DUAL_CONFIGS:
            raise ValueError(f"check {j}: 2^{d - 1} configurations is too many to enumerate")
        out.append(check_configs(code, j).astype(float))
    return tuple(out)


def code_term(m, code: LdpcCode, k1: float) -> float:
    """-(1/K1) sum_j ln sum_{B in E_j} exp(-K1 sum_{i in B} m_ij), by enumeration."""
    total = 0.0
    t = 0
    for cfg in _float_configs(code):
        d = cfg.shape[1]
        v = -k1 * (cfg @ m[t: t + d])
        mx = v.max()
        total += mx + math.log(np.exp(v - mx).sum())
        t += d
    return -total / k1


def trellis_term(state: MessageState, trellis: Trellis, k2: float, p: int = 0) -> float:
    """Softened trellis term evaluated at section p.

    With alpha_i = exp(abar_i) normalized, the unnormalized forward vector
    exp(K2 n_fwd) equals alpha_i * exp(L_i) with L_0 = ln|S| and
    L_i = L_{i-1} + zf_i; the backward side is analogous from the end.
    """
    S = trellis.num_states
    L = math.log(S) + state.zf[1: p + 1].sum()
    R = math.log(S) + state.zb[p + 1:].sum()
    v = (state.abar[p][trellis.s] + L + state.lam[p] + state.bbar[p + 1][trellis.sn] + R)
    mx = v.max()
    return -(mx + math.log(np.exp(v - mx).sum())) / k2


def soft_path_values(state: MessageState, trellis: Trellis, k2: float):
    """Softened forward/backward path costs in the units of the hard recursions.

    Undoes the per-section normalization: row i of the first array is
    -(1/K2) ln of the unnormalized forward vector (all start states at
    zero cost), which softmins the same path sums the hard forward recursion
    minimizes; the second array is the backward analogue.
    """
    S = trellis.num_states
    n = state.lam.shape[0]
    lf = math.log(S) + np.concatenate([[0.0], np.cumsum(state.zf[1:])])
    lb = math.log(S) + np.concatenate([np.cumsum(state.zb[:n][::-1])[::-1], [0.0]])
    fwd = -(state.abar + lf[:, None]) / k2
    bwd = -(state.bbar + lb[:, None]) / k2
    return fwd, bwd


def dual_objective(state: MessageState, code: LdpcCode, trellis: Trellis, k1: float,
                   k2: float, p: int = 0) -> float:
    return code_term(state.m, code, k1) + trellis_term(state, trellis, k2, p)


def dual_objective_from_messages(m, metrics, code, trellis, k1, k2, graph=None, p=0):
    graph = graph or CodeGraph.from_code(code)
    st = refresh_state(metrics, graph, trellis, k2, np.asarray(m, dtype=float))
    return dual_objective(st, code, trellis, k1, k2, p)


def check_marginals(m, big_m, k1):
    """lambda_i^j = 1 / (1 + exp(K1 (m - M))): the check-side belief that x_i = 1."""
    z = k1 * (np.asarray(m) - np.asarray(big_m))
    return 0.5 * (1.0 - np.tanh(z / 2.0))


def edge_posteriors(state: MessageState, trellis: Trellis) -> np.ndarray:
    """Normalized alpha*lambda*beta per section: the trellis-side flows."""
    v = state.abar[:-1][:, trellis.s] + state.lam + state.bbar[1:][:, trellis.sn]
    v = v - v.max(axis=1, keepdims=True)
    g = np.exp(v)
    return g / g.sum(axis=1, keepdims=True)


def residual_eps(state: MessageState, graph: CodeGraph, trellis: Trellis, k1: float) -> float:
    g = edge_posteriors(state, trellis)
    f = g[:, trellis.x == 1].sum(axis=1)
    lam_j = check_marginals(state.m, refresh_check_messages(state.m, graph, k1), k1)
    if len(lam_j) == 0:
        return 0.0
    return float(np.abs(lam_j - f[graph.edge_var]).max())


def refresh_check_messages(m, graph: CodeGraph, k1: float, thr: float = 35.0) -> np.ndarray:
    big_m = np.zeros_like(m)
    _check_update(np.asarray(m, dtype=float), big_m, graph.check_ptr, float(k1), float(thr))
    return big_m


@dataclass
class CyclicResult:
    state: MessageState
    dual_trace: list
    sweeps: int
    converged: bool
    eps: float
    bits: np.ndarray
    block_trace: list = field(default_factory=list)

    @property
    def m(self):
        return self.state.m


def _enumerable(code: LdpcCode) -> bool:
    return all(len(nb) <= MAX_ENUM_DEGREE for nb in code.check_neighbors)


def cyclic_decode(metrics, code: LdpcCode, trellis: Trellis, params: DecoderParams | None = None,
                  eps_stop: float | None = None, m0=None,
                  block_callback: Callable | None = None, trace=None) -> CyclicResult:
    """Coordinate ascent on the softened dual, one bit's messages per block.

    Each sweep refreshes the backward recursion once and then walks the
    bits in order, advancing the forward recursion as it goes; this equals a
    full forward/backward refresh before every block. With `block_callback`
    the sweep runs block by block in Python and calls
    ``block_callback(p, m)`` after each update.
    """
    params = params or DecoderParams(schedule="cyclic")
    eps_stop = params.eps_stop if eps_stop is None else eps_stop
    graph = CodeGraph.from_code(code)
    b = np.ascontiguousarray(metrics, dtype=float)
    s, x, sn, S = _trellis_arrays(trellis)
    a0 = _uniform_a0(S)
    k1, k2, thr = float(params.k1), float(params.k2), float(params.big_arg_threshold)
    m = np.zeros(graph.num_edges) if m0 is None else np.array(m0, dtype=float)
    big_m = np.zeros(graph.num_edges)
    can_eval = _enumerable(code)

    def objective(st):
        return dual_objective(st, code, trellis, k1, k2) if can_eval else float("nan")

    duals = [objective(refresh_state(b, graph, trellis, k2, m))]
    block_trace = []
    converged = False
    eps = float("inf")
    sweep = 0
    for sweep in range(1, params.max_sweeps + 1):
        m_before = m.copy()
        if block_callback is None:
            _, ok = _cyclic_sweep(b, s, x, sn, S, a0, m, big_m, graph.edge_var, graph.check_ptr,
                                  graph.var_ptr, graph.var_edges, k1, k2, thr, graph.n)
        else:
            ok = _python_sweep(b, trellis, graph, a0, m, big_m, k1, k2, thr, block_callback)
        if not ok:
            raise NumericalAbort(f"non-finite trellis quantities in sweep {sweep}")
        st = refresh_state(b, graph, trellis, k2, m)
        duals.append(objective(st))
        eps = residual_eps(st, graph, trellis, k1)
        change = abs(duals[-1] - duals[-2]) if can_eval else float(np.abs(m - m_before).max())
        if trace is not None:
            bits, synd = _hard_and_syndrome(st.gamma, graph.edge_var, graph.check_ptr)
            _trace_line(trace, {"iteration": sweep, "dual_objective": duals[-1],
                                "syndrome_weight": int(synd), "gamma_hash": gamma_hash(st.gamma),
                                "eps": eps})
        if change < eps_stop or (params.eps_residual is not None and eps <= params.eps_residual):
            converged = True
            break
    st = refresh_state(b, graph, trellis, k2, m, refresh_check_messages(m, graph, k1, thr))
    bits, _ = _hard_and_syndrome(st.gamma, graph.edge_var, graph.check_ptr)
    return CyclicResult(st, duals, sweep, converged, eps, bits, block_trace)


def _python_sweep(b, trellis, graph, a0, m, big_m, k1, k2, thr, callback):
    s, x, sn, S = _trellis_arrays(trellis)
    bbar, ok = _backward_all(b, s, x, sn, S, m, graph.edge_var, k2, graph.n)
    a = a0.copy()
    nxt = np.empty(S)
    for p in range(graph.n):
        _cyclic_block(p, b, s, x, sn, a, bbar[p + 1], m, big_m, graph.edge_var, graph.check_ptr,
                      graph.var_ptr, graph.var_edges, k1, k2, thr)
        callback(p, m)
        bs = m[graph.var_edges[graph.var_ptr[p]: graph.var_ptr[p + 1]]].sum()
        lam_i = -k2 * (b[p] - x * bs)
        z = _forward_section(a, lam_i, s, sn, S, nxt)
        ok = ok and z == z
        a[:] = nxt
    return ok


def _decode_cyclic_hard(metrics, code, trellis, params, trace, graph):
    """Cyclic schedule with the decoder's stopping rule (parity or sweep budget)."""
    graph = graph or CodeGraph.from_code(code)
    b = np.ascontiguousarray(metrics, dtype=float)
    s, x, sn, S = _trellis_arrays(trellis)
    a0 = _uniform_a0(S)
    k1, k2, thr = float(params.k1), float(params.k2), float(params.big_arg_threshold)
    m = np.zeros(graph.num_edges)
    big_m = np.zeros(graph.num_edges)
    status = "max_iter"
    gamma = None
    it = 0
    for it in range(1, params.outer_max + 1):
        for _ in range(params.inner_rounds):
            gamma, ok = _cyclic_sweep(b, s, x, sn, S, a0, m, big_m, graph.edge_var,
                                      graph.check_ptr, graph.var_ptr, graph.var_edges,
                                      k1, k2, thr, graph.n)
            if not ok:
                raise NumericalAbort(f"non-finite trellis quantities at iteration {it}")
        bits, synd = _hard_and_syndrome(gamma, graph.edge_var, graph.check_ptr)
        if trace is not None:
            _trace_line(trace, {"iteration": it, "syndrome_weight": int(synd),
                                "gamma_hash": gamma_hash(gamma)})
        if synd == 0:
            status = "parity_ok"
            break
    st = refresh_state(b, graph, trellis, k2, m, big_m)
    return DecodeResult(bits, status, gamma, it, st)


def params_dict(p: DecoderParams) -> dict:
    return asdict(p)
