"""Binary LDPC codes: structure, random regular construction, alist I/O."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

MAX_ENUM_DEGREE = 16


class CodeError(ValueError):
    pass


class AlistError(CodeError):
    def __init__(self, msg, line=None, col=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + msg)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class LdpcCode:
    n: int
    check_neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for j, nb in enumerate(self.check_neighbors):
            if len(set(nb)) != len(nb):
                raise CodeError(f"check {j} has a repeated variable (double edge)")
            if any(not 0 <= i < self.n for i in nb):
                raise CodeError(f"check {j} references a variable outside 0..{self.n - 1}")

    @property
    def m(self) -> int:
        return len(self.check_neighbors)

    @cached_property
    def var_neighbors(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.n)]
        for j, nb in enumerate(self.check_neighbors):
            for i in nb:
                out[i].append(j)
        return tuple(tuple(v) for v in out)

    @property
    def rate(self) -> float:
        return 1.0 - self.m / self.n

    @property
    def avg_check_degree_per_bit(self) -> float:
        return sum(len(nb) for nb in self.check_neighbors) / self.n

    @property
    def convergence_warning(self) -> bool:
        # the cyclic-schedule convergence argument needs every check of weight >= 3
        return any(len(nb) < 3 for nb in self.check_neighbors)

    @cached_property
    def H(self) -> np.ndarray:
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        for j, nb in enumerate(self.check_neighbors):
            h[j, list(nb)] = 1
        return h

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """All (check, variable) pairs, check-major. Message arrays use this order."""
        return tuple((j, i) for j, nb in enumerate(self.check_neighbors) for i in nb)

    def girth(self) -> int:
        return tanner_girth(self)


def check_configs(code: LdpcCode, j: int) -> np.ndarray:
    """Even-weight configurations E_j of check j as a 0/1 matrix (rows = configs).

    Columns follow the order of ``code.check_neighbors[j]``.
    """
    d = len(code.check_neighbors[j])
    if d > MAX_ENUM_DEGREE:
        raise CodeError(f"check {j} has degree {d} > {MAX_ENUM_DEGREE}; E_j not enumerable")
    rows = [b for b in itertools.product((0, 1), repeat=d) if sum(b) % 2 == 0]
    return np.array(rows, dtype=np.int8).reshape(len(rows), d)


def syndrome_ok(code: LdpcCode, word) -> bool:
    word = np.asarray(word)
    if word.shape != (code.n,):
        raise CodeError(f"word length {word.shape} does not match n={code.n}")
    w = word.astype(np.int64)
    return all(int(w[list(nb)].sum()) % 2 == 0 for nb in code.check_neighbors)


def syndrome_weight(code: LdpcCode, word) -> int:
    w = np.asarray(word).astype(np.int64)
    return sum(int(w[list(nb)].sum()) % 2 for nb in code.check_neighbors)


def spc(n: int) -> LdpcCode:
    if n < 2:
        raise CodeError("single parity-check code needs n >= 2")
    return LdpcCode(n, (tuple(range(n)),))


def from_H(H) -> LdpcCode:
    H = np.asarray(H)
    return LdpcCode(H.shape[1], tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in H))


def random_regular(n: int, dv: int, dc: int, seed: int = 0, max_retries: int = 1000,
                   allow_4cycles: bool = False) -> LdpcCode:
    """(dv, dc)-regular code without double edges or 4-cycles.

    Edges are grown variable by variable. Each new edge goes to a check with
    spare capacity that would not close a 4-cycle, preferring the least
    loaded checks and breaking ties at random. Tiny codes that cannot avoid
    4-cycles need ``allow_4cycles=True``; double edges are never allowed.
    """
    if n < 1 or dv < 1 or dc < 2:
        raise CodeError("need n >= 1, dv >= 1, dc >= 2")
    if (n * dv) % dc:
        raise CodeError(f"n*dv = {n * dv} is not divisible by dc = {dc}")
    m = n * dv // dc
    if dv > m:
        raise CodeError("variable degree exceeds the number of checks")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        code = _try_build(n, m, dv, dc, rng, allow_4cycles)
        if code is not None:
            return code
    kind = "" if allow_4cycles else "4-cycle-free "
    raise CodeError(f"no {kind}({dv},{dc}) code of length {n} after {max_retries} tries")


def _try_build(n, m, dv, dc, rng, allow_4cycles=False):
    check_vars = [[] for _ in range(m)]
    var_checks = [[] for _ in range(n)]
    load = np.zeros(m, dtype=np.int64)
    for i in rng.permutation(n):
        for _ in range(dv):
            blocked = np.zeros(m, dtype=bool)
            for c in var_checks[i]:
                blocked[c] = True
                if allow_4cycles:
                    continue
                for v in check_vars[c]:
                    blocked[var_checks[v]] = True
            ok = (~blocked) & (load < dc)
            if not ok.any():
                return None
            cand = np.flatnonzero(ok)
            low = cand[load[cand] == load[cand].min()]
            c = int(rng.choice(low))
            check_vars[c].append(int(i))
            var_checks[i].append(c)
            load[c] += 1
    return LdpcCode(n, tuple(tuple(sorted(v)) for v in check_vars))


def tanner_girth(code: LdpcCode) -> int:
    """Length of the shortest cycle in the Tanner graph (0 if acyclic)."""
    n = code.n
    adj = [[] for _ in range(n + code.m)]
    for j, nb in enumerate(code.check_neighbors):
        for i in nb:
            adj[i].append(n + j)
            adj[n + j].append(i)
    best = 0
    for src in range(n):
        dist = {src: 0}
        parent = {src: -1}
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w == parent[u]:
                        continue
                    if w in dist:
                        cyc = dist[u] + dist[w] + 1
                        if best == 0 or cyc < best:
                            best = cyc
                    else:
                        dist[w] = dist[u] + 1
                        parent[w] = u
                        nxt.append(w)
            frontier = nxt
            if best and frontier and 2 * dist[frontier[0]] >= best:
                break
    return best


# ---------------------------------------------------------------- GF(2)

def gf2_nullspace(H) -> np.ndarray:
    """Basis of {x : Hx = 0 mod 2}, one basis vector per row."""
    A = np.array(H, dtype=np.uint8) % 2
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        rows = np.flatnonzero(A[r:, c]) + r
        if len(rows) == 0:
            continue
        p = rows[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        hit = np.flatnonzero(A[:, c])
        hit = hit[hit != r]
        A[hit] ^= A[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for k, fcol in enumerate(free):
        basis[k, fcol] = 1
        for row, pc in enumerate(pivots):
            basis[k, pc] = A[row, fcol]
    return basis


def gf2_rank(H) -> int:
    return H.shape[1] - len(gf2_nullspace(H)) if np.size(H) else 0


def codewords(code: LdpcCode, limit: int = 1 << 20) -> np.ndarray:
    """All codewords, lexicographically sorted. Refuses more than `limit`."""
    basis = gf2_nullspace(code.H)
    k = len(basis)
    if (1 << k) > limit:
        raise CodeError(f"2^{k} codewords exceed the enumeration limit {limit}")
    coeffs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(-1, k)
    words = (coeffs @ basis) % 2 if k else np.zeros((1, code.n), dtype=np.uint8)
    order = np.lexsort(words.T[::-1])
    return words[order].astype(np.int8)


def find_codeword(code: LdpcCode, rng: np.random.Generator, weight: int | None = None,
                  tries: int = 200000) -> np.ndarray:
    """A random nonzero codeword, optionally of an exact Hamming weight."""
    basis = gf2_nullspace(code.H)
    if len(basis) == 0:
        raise CodeError("code has only the zero codeword")
    for _ in range(tries):
        coeff = rng.integers(0, 2, size=len(basis), dtype=np.uint8)
        if not coeff.any():
            continue
        w = (coeff @ basis) % 2
        if weight is None or int(w.sum()) == weight:
            return w.astype(np.int8)
    raise CodeError(f"no codeword of weight {weight} found in {tries} random draws")


# ---------------------------------------------------------------- alist

def save_alist(code: LdpcCode, path) -> None:
    vn = code.var_neighbors
    cn = code.check_neighbors
    lines = [
        f"{code.n} {code.m}",
        f"{max((len(v) for v in vn), default=0)} {max((len(c) for c in cn), default=0)}",
        " ".join(str(len(v)) for v in vn),
        " ".join(str(len(c)) for c in cn),
    ]
    dv = max((len(v) for v in vn), default=0)
    dc = max((len(c) for c in cn), default=0)
    for v in vn:
        idx = [j + 1 for j in v] + [0] * (dv - len(v))
        lines.append(" ".join(map(str, idx)))
    for c in cn:
        idx = [i + 1 for i in c] + [0] * (dc - len(c))
        lines.append(" ".join(map(str, idx)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_alist(path) -> LdpcCode:
    text = Path(path).read_text().splitlines()
    rows = [(k + 1, line.split()) for k, line in enumerate(text) if line.strip()]
    pos = 0

    def take(expected=None, what="row"):
        nonlocal pos
        if pos >= len(rows):
            raise AlistError(f"unexpected end of file while reading {what}", len(text) + 1)
        lineno, toks = rows[pos]
        pos += 1
        vals = []
        for c, t in enumerate(toks, start=1):
            try:
                vals.append(int(t))
            except ValueError:
                raise AlistError(f"non-integer token {t!r} in {what}", lineno, c) from None
        if expected is not None and len(vals) != expected:
            raise AlistError(f"{what} has {len(vals)} entries, expected {expected}",
                             lineno, min(len(vals), expected) + 1)
        return lineno, vals

    _, (n, m) = take(2, "header")
    if n < 1 or m < 0:
        raise AlistError("header must give N >= 1 and M >= 0", rows[0][0])
    take(2, "max degrees")
    _, col_w = take(n, "column weights")
    _, row_w = take(m, "row weights")
    var_nb = []
    for i in range(n):
        lineno, vals = take(None, f"column {i + 1}")
        nz = [v for v in vals if v != 0]
        if len(nz) != col_w[i]:
            raise AlistError(f"column {i + 1} lists {len(nz)} checks, weight says {col_w[i]}", lineno)
        for c, v in enumerate(vals, start=1):
            if v < 0 or v > m:
                raise AlistError(f"check index {v} out of range 1..{m}", lineno, c)
        var_nb.append(sorted(v - 1 for v in nz))
    check_nb = []
    for j in range(m):
        lineno, vals = take(None, f"row {j + 1}")
        nz = [v for v in vals if v != 0]
        if len(nz) != row_w[j]:
            raise AlistError(f"row {j + 1} lists {len(nz)} variables, weight says {row_w[j]}", lineno)
        for c, v in enumerate(vals, start=1):
            if v < 0 or v > n:
                raise AlistError(f"variable index {v} out of range 1..{n}", lineno, c)
        check_nb.append(tuple(sorted(v - 1 for v in nz)))
    code = LdpcCode(n, tuple(check_nb))
    if [sorted(v) for v in code.var_neighbors] != var_nb:
        raise AlistError("column and row lists describe different matrices")
    return code
