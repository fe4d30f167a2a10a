"""Exact joint LP decoding and the brute-force oracles it is checked against.

The primal LP lives on trellis flows g[i, e] and per-check configuration
weights w[j, B]. It is written as equality constraints with non-negative
variables and solved by a dense two-phase simplex using Bland's rule.
Section indices are 0-based throughout; ``p`` picks the section whose flow
is normalized explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Trellis
from .ldpc import LdpcCode, check_configs, codewords, MAX_ENUM_DEGREE

PIVOT_TOL = 1e-9
INTEGRAL_TOL = 1e-6


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpProblemP:
    A: np.ndarray
    rhs: np.ndarray
    cost: np.ndarray
    n: int
    num_edges: int
    configs: tuple[np.ndarray, ...]
    w_offsets: tuple[int, ...]
    p: int
    row_kinds: tuple[str, ...]

    @property
    def num_g(self) -> int:
        return self.n * self.num_edges

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    def split(self, x):
        g = np.asarray(x[: self.num_g]).reshape(self.n, self.num_edges)
        w = tuple(np.asarray(x[o: o + len(c)]) for o, c in zip(self.w_offsets, self.configs))
        return g, w


def build_problem_p(trellis: Trellis, code: LdpcCode | None, metrics, p: int = 0) -> LpProblemP:
    n, O, S = trellis.n, trellis.num_edges, trellis.num_states
    b = np.asarray(metrics, dtype=float)
    if b.shape != (n, O):
        raise ValueError(f"metrics shape {b.shape} does not match trellis {(n, O)}")
    if not 0 <= p < n:
        raise ValueError(f"p must lie in 0..{n - 1}")
    checks = code.check_neighbors if code is not None else ()
    if code is not None and code.n != n:
        raise ValueError("code length and trellis length differ")
    for j, nb in enumerate(checks):
        if len(nb) > MAX_ENUM_DEGREE:
            raise ValueError(f"check {j} has degree {len(nb)}; too large for the exact LP")
    configs = tuple(check_configs(code, j) for j in range(len(checks)))
    offsets, off = [], n * O
    for c in configs:
        offsets.append(off)
        off += len(c)
    nv = off
    gi = lambda i, e: i * O + e  # noqa: E731

    rows, rhs, kinds = [], [], []

    for j, c in enumerate(configs):                      # (a) config weights sum to one
        r = np.zeros(nv)
        r[offsets[j]: offsets[j] + len(c)] = 1.0
        rows.append(r); rhs.append(1.0); kinds.append("a")
    r = np.zeros(nv)                                     # (b) normalization at p
    r[gi(p, 0): gi(p, 0) + O] = 1.0
    rows.append(r); rhs.append(1.0); kinds.append("b")
    ones = np.flatnonzero(trellis.x == 1)
    for j, nb in enumerate(checks):                      # (c) code/trellis agreement
        for col, i in enumerate(nb):
            r = np.zeros(nv)
            r[offsets[j] + np.flatnonzero(configs[j][:, col])] = 1.0
            r[gi(i, 0) + ones] -= 1.0
            rows.append(r); rhs.append(0.0); kinds.append("c")
    for i in range(n - 1):                               # (d) flow conservation
        for k in range(S):
            r = np.zeros(nv)
            r[gi(i, 0) + np.flatnonzero(trellis.sn == k)] += 1.0
            r[gi(i + 1, 0) + np.flatnonzero(trellis.s == k)] -= 1.0
            rows.append(r); rhs.append(0.0); kinds.append("d")

    cost = np.zeros(nv)
    cost[: n * O] = b.ravel()
    A = np.array(rows)
    return LpProblemP(A, np.array(rhs), cost, n, O, configs, tuple(offsets), p, tuple(kinds))


@dataclass
class LpSolution:
    g: np.ndarray
    w: tuple[np.ndarray, ...]
    objective: float
    vertex_kind: str
    x: np.ndarray = field(repr=False)
    pivots: int = 0

    def is_integral(self) -> bool:
        return self.vertex_kind == "integral"


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex_phase(T, basis, ncols, max_iter):
    """Minimize the objective in the last row of T over columns [0, ncols)."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        red = T[-1, :ncols]
        cand = np.flatnonzero(red < -PIVOT_TOL)
        if len(cand) == 0:
            return it
        c = int(cand[0])                                 # Bland: lowest index enters
        colv = T[:m, c]
        pos = colv > PIVOT_TOL
        if not pos.any():
            raise LpError("LP is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))
        r = int(min(ties, key=lambda k: basis[k]))      # Bland: lowest basic index leaves
        _pivot(T, r, c)
        basis[r] = c
    raise LpError(f"simplex did not terminate in {max_iter} pivots")


def simplex(A, rhs, cost, max_iter: int = 100000):
    """min cost.x s.t. A x = rhs, x >= 0. Returns (x, objective, basis, pivots)."""
    A = np.array(A, dtype=float)
    rhs = np.array(rhs, dtype=float)
    cost = np.asarray(cost, dtype=float)
    neg = rhs < 0
    A[neg] *= -1
    rhs[neg] *= -1
    m, nv = A.shape

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = A
    T[:m, nv: nv + m] = np.eye(m)
    T[:m, -1] = rhs
    T[-1, :nv] = -A.sum(axis=0)
    T[-1, -1] = -rhs.sum()
    basis = list(range(nv, nv + m))
    piv = _simplex_phase(T, basis, nv + m, max_iter)
    if -T[-1, -1] > 1e-7:
        raise LpError(f"LP is infeasible (phase-1 residual {-T[-1, -1]:.3g})")

    # drive artificials out of the basis; rows that cannot pivot are redundant
    keep = []
    for r in range(m):
        if basis[r] >= nv:
            cols = np.flatnonzero(np.abs(T[r, :nv]) > PIVOT_TOL)
            if len(cols):
                _pivot(T, r, int(cols[0]))
                basis[r] = int(cols[0])
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[keep][:, list(range(nv)) + [T.shape[1] - 1]], np.zeros(nv + 1)])
    basis = [basis[r] for r in keep]

    # phase 2
    T[-1, :nv] = cost
    for r, bvar in enumerate(basis):
        T[-1] -= cost[bvar] * T[r]
    piv += _simplex_phase(T, basis, nv, max_iter)

    # polish the basic solution against the original system
    x = np.zeros(nv)
    B = A[keep][:, basis]
    try:
        xb = np.linalg.solve(B, rhs[keep])
    except np.linalg.LinAlgError:
        xb = T[:-1, -1]
    xb[np.abs(xb) < 1e-13] = 0.0
    x[basis] = np.maximum(xb, 0.0)
    return x, float(cost @ x), basis, piv


def simplex_solve(problem: LpProblemP) -> LpSolution:
    x, obj, _, piv = simplex(problem.A, problem.rhs, problem.cost)
    g, w = problem.split(x)
    integral = bool(np.all(np.minimum(np.abs(g), np.abs(g - 1.0)) <= INTEGRAL_TOL))
    sol = LpSolution(g, w, obj, "integral" if integral else "fractional", x, piv)
    return sol


def solve_joint_lp(trellis, code, metrics, p: int = 0) -> LpSolution:
    return simplex_solve(build_problem_p(trellis, code, metrics, p))


def constraint_residuals(problem: LpProblemP, x) -> dict:
    """Largest violation per constraint family, plus non-negativity."""
    x = np.asarray(x, dtype=float)
    res = np.abs(problem.A @ x - problem.rhs)
    kinds = np.array(problem.row_kinds)
    out = {k: float(res[kinds == k].max()) if np.any(kinds == k) else 0.0 for k in "abcd"}
    out["nonneg"] = float(max(0.0, -x.min()))
    return out


def flow_residuals(trellis: Trellis, code: LdpcCode | None, g, w=None) -> dict:
    """Same checks as constraint_residuals but for free-standing (g, w) and all sections."""
    g = np.asarray(g, dtype=float)
    out = {"section_sum": float(np.abs(g.sum(axis=1) - 1.0).max())}
    flow = 0.0
    for i in range(trellis.n - 1):
        for k in range(trellis.num_states):
            d = g[i, trellis.sn == k].sum() - g[i + 1, trellis.s == k].sum()
            flow = max(flow, abs(d))
    out["flow"] = flow
    neg = -g.min()
    if w is not None and code is not None:
        f = g[:, trellis.x == 1].sum(axis=1)
        a = c = 0.0
        for j, nb in enumerate(code.check_neighbors):
            cfg = check_configs(code, j)
            wj = np.asarray(w[j], dtype=float)
            a = max(a, abs(wj.sum() - 1.0))
            c = max(c, float(np.abs(cfg.T @ wj - f[list(nb)]).max()))
            neg = max(neg, -wj.min())
        out["config_sum"] = a
        out["agreement"] = c
    out["nonneg"] = float(max(0.0, neg))
    return out


def lcp_violation(code: LdpcCode, f) -> float:
    """Largest violation of the local codeword polytope inequalities.

    For each check j and odd subset V of N(j):
    sum_{i in V} f_i - sum_{i in N(j)\\V} f_i <= |V| - 1, plus 0 <= f <= 1.
    Evaluated with the standard separation step instead of listing every V.
    """
    f = np.asarray(f, dtype=float)
    worst = max(0.0, float(-f.min()), float(f.max() - 1.0))
    for nb in code.check_neighbors:
        v = f[list(nb)]
        chosen = v > 0.5
        if chosen.sum() % 2 == 0:
            k = int(np.argmin(np.abs(v - 0.5)))
            chosen[k] = ~chosen[k]
        lhs = v[chosen].sum() - v[~chosen].sum()
        worst = max(worst, float(lhs - (chosen.sum() - 1)))
    return worst


# ---------------------------------------------------------------- oracles

def viterbi_ml_edge_path(trellis: Trellis, metrics):
    """Minimum-cost edge path. Ties go to the lower edge index at every step."""
    b = np.asarray(metrics, dtype=float)
    n, O, S = trellis.n, trellis.num_edges, trellis.num_states
    cost = np.zeros(S)
    back = np.zeros((n, S), dtype=np.int64)
    for i in range(n - 1):
        tot = cost[trellis.s] + b[i]
        new = np.full(S, np.inf)
        for e in range(O):
            k = trellis.sn[e]
            if tot[e] < new[k]:
                new[k] = tot[e]
                back[i + 1, k] = e
        cost = new
    tot = cost[trellis.s] + b[n - 1]
    e = int(np.argmin(tot))
    value = float(tot[e])
    path = np.empty(n, dtype=np.int64)
    path[n - 1] = e
    for i in range(n - 1, 0, -1):
        e = int(back[i, trellis.s[e]])
        path[i - 1] = e
    return path, value


def exhaustive_joint_ml(trellis: Trellis, code: LdpcCode, metrics, max_n: int = 20):
    """Brute-force joint ML: best codeword-labelled path over all start states.

    Returns (codeword, value, path). Ties go to the lexicographically
    smallest codeword, then to the smallest start state.
    """
    if trellis.n > max_n:
        raise ValueError(f"exhaustive search limited to N <= {max_n}")
    b = np.asarray(metrics, dtype=float)
    rows = np.arange(trellis.n)
    best = (None, np.inf, None)
    for cw in codewords(code):
        for s0 in range(trellis.num_states):
            path = trellis.path(cw, s0)
            v = float(b[rows, path].sum())
            if v < best[1]:
                best = (cw.astype(np.int8), v, path)
    return best


def hard_min_recursions(trellis: Trellis, metrics, bit_sums, p: int = 0):
    """Viterbi-style recursions of the second dual formulation.

    ``bit_sums[i]`` is sum_j m[i, j]. Returns (fwd, bwd, value) where
    fwd[i, k] = -n_fwd[i, k] for i = 0..N and bwd[i, k] = n_bwd[i, k]; the
    value is min_e Gamma[p, e] + fwd[p, s(e)] + bwd[p + 1, s'(e)].
    """
    b = np.asarray(metrics, dtype=float)
    n, S = trellis.n, trellis.num_states
    gam = b - np.outer(np.asarray(bit_sums, dtype=float), trellis.x)
    fwd = np.zeros((n + 1, S))
    bwd = np.zeros((n + 1, S))
    for i in range(n):
        tot = fwd[i][trellis.s] + gam[i]
        fwd[i + 1] = [tot[trellis.sn == k].min() for k in range(S)]
    for i in range(n - 1, -1, -1):
        tot = bwd[i + 1][trellis.sn] + gam[i]
        bwd[i] = [tot[trellis.s == k].min() for k in range(S)]
    val = float((gam[p] + fwd[p][trellis.s] + bwd[p + 1][trellis.sn]).min())
    return fwd, bwd, val


# ---------------------------------------------------------------- export

def to_lp_format(problem: LpProblemP) -> str:
    """The problem in CPLEX LP text format, for cross-checking elsewhere."""
    names = [f"g_{i}_{e}" for i in range(problem.n) for e in range(problem.num_edges)]
    for j, c in enumerate(problem.configs):
        names += [f"w_{j}_{k}" for k in range(len(c))]

    def expr(coefs):
        terms = []
        for k in np.flatnonzero(coefs):
            v = coefs[k]
            terms.append(f"{'-' if v < 0 else '+'} {abs(v):.17g} {names[k]}")
        s = " ".join(terms) or "0 " + names[0]
        return s[2:] if s.startswith("+ ") else s

    out = ["\\ joint LP decoding problem", "Minimize", " obj: " + expr(problem.cost), "Subject To"]
    for r, (row, kind) in enumerate(zip(problem.A, problem.row_kinds)):
        out.append(f" {kind}{r}: {expr(row)} = {problem.rhs[r]:.17g}")
    out.append("End")
    return "\n".join(out) + "\n"
