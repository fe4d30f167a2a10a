"""Monte Carlo word-error-rate sweeps, pseudo-codeword harvesting and
union-bound prediction.

Every trial draws its noise from its own generator seeded by
``(seed, snr_index, trial_index)``, so the rows do not depend on how trials
are split across worker processes.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import analysis, channel, ijlp, ldpc, lpexact, metrics
from .analysis import DistanceSpectrum

MAX_SNR_DB = 100.0
CSV_HEADER = ("snr_db", "sigma", "trials", "errors", "wer", "ci_lo", "ci_hi", "mean_iters")
DECODERS = ("ijlp", "te", "exact_lp")
STATIONARY_TOP = 5


class ConfigError(ValueError):
    """Raised with every offending key listed, one per line."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass
class ExperimentConfig:
    channel: str = "dic"
    code: dict = field(default_factory=lambda: {"kind": "spc", "n": 3})
    codeword: object = "zero"
    decoder: str = "exact_lp"
    k1: float = 1000.0
    k2: float = 100.0
    inner_rounds: int = 2
    outer_max: int = 100
    schedule: str = "simultaneous"
    scaled_metrics: bool = False
    start_state: int | None = 0
    snr_db: list = field(default_factory=lambda: [6.0])
    max_trials: int = 100000
    max_errors: int = 100
    max_seconds: float | None = None
    seed: int = 0
    workers: int = 1
    chunk: int = 256

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        bad = []
        if self.channel not in channel.CHANNELS:
            bad.append(f"channel: unknown channel {self.channel!r} (known: {', '.join(channel.CHANNELS)})")
        if not isinstance(self.code, dict) or self.code.get("kind") not in ("spc", "regular", "alist"):
            bad.append("code: needs kind = 'spc' | 'regular' | 'alist'")
        if self.decoder not in DECODERS:
            bad.append(f"decoder: must be one of {', '.join(DECODERS)}")
        if not self.k1 > 0:
            bad.append("k1: must be > 0")
        if not self.k2 > 0:
            bad.append("k2: must be > 0")
        if self.inner_rounds < 1:
            bad.append("inner_rounds: must be >= 1")
        if self.outer_max < 1:
            bad.append("outer_max: must be >= 1")
        if self.schedule not in ("simultaneous", "cyclic"):
            bad.append("schedule: must be 'simultaneous' or 'cyclic'")
        if not isinstance(self.snr_db, (list, tuple)) or len(self.snr_db) == 0:
            bad.append("snr_db: needs a nonempty list")
        elif not all(isinstance(v, (int, float)) for v in self.snr_db):
            bad.append("snr_db: entries must be numbers")
        if self.max_trials < 1:
            bad.append("max_trials: must be >= 1")
        if self.max_errors < 1:
            bad.append("max_errors: must be >= 1")
        if self.max_seconds is not None and not self.max_seconds > 0:
            bad.append("max_seconds: must be > 0")
        if self.start_state is not None and not (isinstance(self.start_state, int)
                                                 and 0 <= self.start_state < channel.get_channel(
                                                     self.channel).num_states
                                                 if self.channel in channel.CHANNELS else True):
            bad.append("start_state: must be a state index or 'unknown'")
        if self.workers < 1:
            bad.append("workers: must be >= 1")
        if self.chunk < 1:
            bad.append("chunk: must be >= 1")
        return bad

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = [f"{k}: unknown key" for k in d if k not in known]
        kwargs = {k: v for k, v in d.items() if k in known}
        if kwargs.get("start_state") == "unknown":  # TOML has no null
            kwargs["start_state"] = None
        try:
            cfg = cls.__new__(cls)
            for name, f in cls.__dataclass_fields__.items():
                default = f.default_factory() if callable(f.default_factory) else f.default
                setattr(cfg, name, kwargs.get(name, default))
            problems = unknown + cfg.problems()
        except TypeError as exc:  # e.g. comparing a string with a number
            problems = unknown + [str(exc)]
        if problems:
            raise ConfigError(problems)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def decoder_params(self) -> ijlp.DecoderParams:
        return ijlp.DecoderParams(k1=self.k1, k2=self.k2, inner_rounds=self.inner_rounds,
                                  outer_max=self.outer_max, schedule=self.schedule)


@dataclass
class WerRow:
    snr_db: float
    sigma: float
    trials: int
    errors: int
    wer: float
    ci_lo: float
    ci_hi: float
    mean_iters: float
    aborts: int = 0
    stopped_by: str = "errors"

    def csv_values(self):
        return [getattr(self, k) for k in CSV_HEADER]


# ---------------------------------------------------------------- setup

def build_code(src: dict) -> ldpc.LdpcCode:
    kind = src.get("kind")
    if kind == "spc":
        return ldpc.spc(int(src["n"]))
    if kind == "regular":
        return ldpc.random_regular(int(src["n"]), int(src["dv"]), int(src["dc"]),
                                   seed=int(src.get("seed", 0)),
                                   allow_4cycles=bool(src.get("allow_4cycles", False)))
    if kind == "alist":
        return ldpc.load_alist(src["path"])
    raise ldpc.CodeError(f"unknown code source {kind!r}")


def build_codeword(code: ldpc.LdpcCode, spec) -> np.ndarray:
    """Codeword selection: 'zero', explicit bits, {'file': path} or {'weight': w, 'seed': s}."""
    if isinstance(spec, str):
        if spec != "zero":
            raise ldpc.CodeError(f"unknown codeword selection {spec!r}")
        return np.zeros(code.n, dtype=np.int8)
    if isinstance(spec, dict):
        if "file" in spec:
            text = Path(spec["file"]).read_text().split()
            bits = np.array([int(t) for t in text], dtype=np.int8)
        else:
            rng = np.random.default_rng(int(spec.get("seed", 0)))
            bits = ldpc.find_codeword(code, rng, weight=spec.get("weight"))
    else:
        bits = np.asarray(spec, dtype=np.int8)
    if bits.shape != (code.n,) or not np.isin(bits, (0, 1)).all():
        raise ldpc.CodeError(f"codeword must be {code.n} bits")
    if not ldpc.syndrome_ok(code, bits):
        raise ldpc.CodeError("selected word violates the parity checks")
    return bits


def snr_sigma(snr_db: float, power: float) -> tuple[float, float]:
    snr = min(float(snr_db), MAX_SNR_DB)
    return snr, channel.snr_to_sigma(snr, power)


@dataclass
class Setup:
    """Everything a worker needs to run trials; picklable."""
    cfg: ExperimentConfig
    code: ldpc.LdpcCode
    spec: object
    trellis: channel.Trellis
    codeword: np.ndarray
    power: float

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "Setup":
        code = build_code(cfg.code)
        spec = channel.get_channel(cfg.channel)
        power = channel.output_power(spec)
        if cfg.start_state is not None:
            spec = spec.with_start_state(int(cfg.start_state))
        trellis = channel.build_trellis(spec, code.n)
        return cls(cfg, code, spec, trellis, build_codeword(code, cfg.codeword), power)


def trial_rng(seed: int, snr_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(snr_index), int(trial)]))


def _receive(setup: Setup, sigma: float, rng):
    y, path = channel.simulate(setup.spec, setup.codeword, sigma, rng)
    return y, path


def decode_once(setup: Setup, y, sigma: float):
    """Returns (decoded bits or None, iterations, lp solution or None)."""
    cfg, tr, code = setup.cfg, setup.trellis, setup.code
    p0 = cfg.start_state is not None
    if cfg.decoder == "exact_lp":
        sol = lpexact.solve_joint_lp(tr, code, metrics.awgn_metrics(tr, y, include_p0=p0))
        bits = None
        if sol.is_integral():
            bits = np.rint(analysis.project_symbolwise(sol.g, tr)).astype(np.int8)
        return bits, sol.pivots, sol
    if cfg.decoder == "te":
        b = metrics.awgn_metrics(tr, y, include_p0=p0, sigma=sigma)
        res = ijlp.turbo_equalize(b, code, tr, iters=cfg.outer_max, inner_rounds=cfg.inner_rounds)
    else:
        b = metrics.awgn_metrics(tr, y, include_p0=p0, sigma=sigma if cfg.scaled_metrics else None)
        res = ijlp.decode(b, code, tr, cfg.decoder_params())
    return (res.bits if res.parity_ok else None), res.iterations, None


def _run_chunk(setup: Setup, snr_index: int, sigma: float, start: int, stop: int):
    out = []
    for t in range(start, stop):
        rng = trial_rng(setup.cfg.seed, snr_index, t)
        y, _ = _receive(setup, sigma, rng)
        try:
            bits, iters, _ = decode_once(setup, y, sigma)
        except ijlp.NumericalAbort:
            out.append((1, 0, 1))
            continue
        err = bits is None or not np.array_equal(bits, setup.codeword)
        out.append((int(err), int(iters), 0))
    return out


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _chunks(cfg: ExperimentConfig):
    start = 0
    while start < cfg.max_trials:
        stop = min(start + cfg.chunk, cfg.max_trials)
        yield start, stop
        start = stop


def wer_sweep(cfg: ExperimentConfig, setup: Setup | None = None, progress=None) -> list[WerRow]:
    """Per-SNR Monte Carlo until min(max_errors word errors, max_trials).

    Trials are consumed strictly in index order, so the stopping point and
    the counts are the same for any worker count.
    """
    setup = setup or Setup.from_config(cfg)
    rows = []
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        for si, snr_in in enumerate(cfg.snr_db):
            snr, sigma = snr_sigma(snr_in, setup.power)
            trials = errors = iters = aborts = 0
            stopped = "trials"
            t0 = time.monotonic()
            chunks = list(_chunks(cfg))
            pos = 0
            done = False
            while pos < len(chunks) and not done:
                batch = chunks[pos:pos + max(cfg.workers, 1)]
                pos += len(batch)
                if pool is None:
                    results = [_run_chunk(setup, si, sigma, a, b) for a, b in batch]
                else:
                    futs = [pool.submit(_run_chunk, setup, si, sigma, a, b) for a, b in batch]
                    results = [f.result() for f in futs]
                for res in results:
                    for err, it, ab in res:
                        trials += 1
                        errors += err
                        iters += it
                        aborts += ab
                        if errors >= cfg.max_errors:
                            stopped, done = "errors", True
                            break
                    if done:
                        break
                if not done and cfg.max_seconds is not None and time.monotonic() - t0 > cfg.max_seconds:
                    stopped, done = "time", True
            lo, hi = wilson_interval(errors, trials)
            row = WerRow(snr, sigma, trials, errors, errors / trials, lo, hi,
                         iters / trials, aborts, stopped)
            rows.append(row)
            if progress is not None:
                progress(row)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def rows_to_csv(rows, header=CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        vals = r.csv_values() if hasattr(r, "csv_values") else [r[k] for k in header]
        w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in vals])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


# ---------------------------------------------------------------- harvesting

@dataclass
class HarvestStats:
    trials: int = 0
    errors: int = 0
    fractional: int = 0
    since_new: int = 0
    stationary: bool = False


def _competitor(setup: Setup, y, sigma: float, rng):
    """Decoder output as trellis flows when it differs from the transmission."""
    cfg = setup.cfg
    tr = setup.trellis
    if cfg.decoder == "exact_lp":
        _, _, sol = decode_once(setup, y, sigma)
        return sol.g, not sol.is_integral()
    p0 = cfg.start_state is not None
    b = metrics.awgn_metrics(tr, y, include_p0=p0, sigma=sigma if cfg.scaled_metrics else None)
    res = ijlp.cyclic_decode(b, setup.code, tr, cfg.decoder_params())
    pf = analysis.primal_from_dual(res.m, setup.code, tr, b, cfg.k1, cfg.k2)
    return pf.g, analysis.classify(pf.g) != "TCW"


def harvest_pcws(cfg: ExperimentConfig, low_snr_db: float, stop_when_stationary: bool = True,
                 stationary_errors: int = 10000, max_errors: int | None = None,
                 setup: Setup | None = None, stats: HarvestStats | None = None) -> DistanceSpectrum:
    """Collect the generalized-distance spectrum of decoding errors at one SNR.

    Distinct competitors are keyed by (f on a 1e-4 grid, d_gen to 1e-4);
    each distinct competitor adds one to the multiplicity of its d_gen. The run
    stops once no new distance has entered the current five smallest for
    `stationary_errors` consecutive errors, or at max_errors / max_trials.
    """
    setup = setup or Setup.from_config(cfg)
    stats = stats if stats is not None else HarvestStats()
    tr = setup.trellis
    spectrum = DistanceSpectrum(tuple(int(v) for v in setup.codeword),
                                approximate=cfg.decoder != "exact_lp")
    _, sigma = snr_sigma(low_snr_db, setup.power)
    if math.isinf(low_snr_db) and low_snr_db > 0 or sigma == 0.0:
        return spectrum
    seen = set()
    for t in range(cfg.max_trials):
        rng = trial_rng(cfg.seed, 0, t)
        y, path = _receive(setup, sigma, rng)
        ref_flow = tr.path_flow(path)
        c = tr.a[path]
        stats.trials += 1
        g, frac = _competitor(setup, y, sigma, rng)
        if np.abs(g - ref_flow).max() <= lpexact.INTEGRAL_TOL:
            continue
        stats.errors += 1
        stats.fractional += int(frac)
        p = analysis.project_signal_space(g, tr)
        try:
            d = analysis.d_gen(c, p, g, tr)
        except ValueError:
            d = None  # same signal-space image as the transmission; nothing to record
        new_small = False
        if d is not None:
            f = analysis.project_symbolwise(g, tr)
            rd = round(d, analysis.DGEN_DECIMALS)
            key = (tuple(np.round(f, analysis.F_DECIMALS) + 0.0), rd)
            if key not in seen:
                seen.add(key)
                smallest = spectrum.distances[:STATIONARY_TOP]
                if rd not in spectrum.entries and (len(smallest) < STATIONARY_TOP or rd < smallest[-1]):
                    new_small = True
                spectrum.add(d, f)
        stats.since_new = 0 if new_small else stats.since_new + 1
        if stop_when_stationary and stats.since_new >= stationary_errors:
            stats.stationary = True
            break
        if max_errors is not None and stats.errors >= max_errors:
            break
    return spectrum


# ---------------------------------------------------------------- prediction

PREDICT_HEADER = ("snr_db", "sigma", "wer_pred")


def predict_wer(spectrum: DistanceSpectrum, snr_list, power: float) -> list[dict]:
    rows = []
    for snr_in in snr_list:
        snr, sigma = snr_sigma(snr_in, power)
        rows.append({"snr_db": snr, "sigma": sigma,
                     "wer_pred": analysis.union_bound(spectrum, sigma)})
    return rows
