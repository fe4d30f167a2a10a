"""Command-line front end: ``jointlp <subcommand> ...``.

Exit status is 0 on success, 1 for usage or configuration problems and 2
when a decoder aborts on non-finite numbers.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis, channel, ijlp, ldpc, lpexact, metrics, sim

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


# ---------------------------------------------------------------- files

def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_manifest(output: Path, command: str, config: dict, seed, started: str, extra=None) -> Path:
    man = {
        "command": command,
        "tool_version": _version(),
        "seed": seed,
        "started": started,
        "finished": _now(),
        "config": config,
        "outputs": [str(output)],
    }
    if extra:
        man.update(extra)
    return atomic_write(output.with_name(output.name + ".manifest.json"),
                        json.dumps(man, indent=1, default=_jsonable))


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path, overrides=()) -> sim.ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text())
        except OSError as exc:
            raise sim.ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from exc
        except tomllib.TOMLDecodeError as exc:
            raise sim.ConfigError([f"config: {path}: {exc}"]) from exc
    problems = []
    for item in overrides:
        if "=" not in item:
            problems.append(f"--set {item}: expected key=value")
            continue
        key, val = item.split("=", 1)
        key = key.strip()
        if "." in key:
            outer, inner = key.split(".", 1)
            data.setdefault(outer, {})[inner] = _parse_value(val)
        else:
            data[key] = _parse_value(val)
    if problems:
        raise sim.ConfigError(problems)
    return sim.ExperimentConfig.from_dict(data)


def read_vector(path) -> np.ndarray:
    vals = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        for col, tok in enumerate(line.split(), 1):
            try:
                v = float(tok)
            except ValueError:
                raise sim.ConfigError([f"{path}:{ln}: token {col} ({tok!r}) is not a number"]) from None
            if not np.isfinite(v):
                raise sim.ConfigError([f"{path}:{ln}: token {col} is not finite"])
            vals.append(v)
    if not vals:
        raise sim.ConfigError([f"{path}: no values"])
    return np.array(vals)


# ---------------------------------------------------------------- commands

def cmd_channels(args) -> int:
    for name in channel.CHANNELS:
        spec = channel.get_channel(name)
        print(f"{name}: {spec.name}, {spec.num_states} states, "
              f"outputs {list(spec.output_alphabet)}, power {channel.output_power(spec):.6g}")
    return EXIT_OK


def cmd_codegen(args) -> int:
    if args.spc is not None:
        code = ldpc.spc(args.spc)
    else:
        if None in (args.n, args.dv, args.dc):
            raise UsageError("codegen needs --spc N or all of --n --dv --dc")
        code = ldpc.random_regular(args.n, args.dv, args.dc, seed=args.seed,
                                   allow_4cycles=args.allow_4cycles)
    out = Path(args.out)
    started = _now()
    tmp = out.with_name(f".{out.name}.tmp")
    ldpc.save_alist(code, tmp)
    os.replace(tmp, out)
    params = {k: getattr(args, k) for k in ("spc", "n", "dv", "dc", "seed", "allow_4cycles")}
    write_manifest(out, "codegen", params, args.seed, started,
                   {"n": code.n, "m": code.m, "girth": code.girth()})
    print(f"wrote {out} (n={code.n}, m={code.m}, girth={code.girth()})")
    if code.convergence_warning:
        print("warning: some node degree is below 3", file=sys.stderr)
    return EXIT_OK


def cmd_decode(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.decoder:
        cfg.decoder = args.decoder.replace("-", "_")
        problems = cfg.problems()
        if problems:
            raise sim.ConfigError(problems)
    setup = sim.Setup.from_config(cfg)
    y = read_vector(args.input)
    if len(y) != setup.code.n:
        raise sim.ConfigError([f"{args.input}: {len(y)} values, code length is {setup.code.n}"])
    sigma = args.sigma
    if sigma is None and cfg.decoder == "te" or cfg.scaled_metrics and sigma is None:
        raise UsageError("this decoder needs --sigma for likelihood-scaled metrics")
    tr = setup.trellis
    p0 = cfg.start_state is not None
    if cfg.decoder == "exact_lp":
        sol = lpexact.solve_joint_lp(tr, setup.code, metrics.awgn_metrics(tr, y, include_p0=p0))
        f = analysis.project_symbolwise(sol.g, tr)
        out = {"vertex_kind": sol.vertex_kind, "objective": sol.objective,
               "f": [round(float(v), 6) for v in f]}
        if sol.is_integral():
            out["bits"] = [int(round(v)) for v in f]
    else:
        bits, iters, _ = sim.decode_once(setup, y, sigma if sigma is not None else 1.0)
        out = {"status": "parity_ok" if bits is not None else "max_iter", "iterations": iters}
        if bits is not None:
            out["bits"] = [int(v) for v in bits]
    print(json.dumps(out))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.workers is not None:
        cfg.workers = args.workers
    started = _now()

    def show(row):
        print(f"snr {row.snr_db:g} dB: {row.errors}/{row.trials} errors, wer {row.wer:.4g}"
              f" [{row.ci_lo:.3g}, {row.ci_hi:.3g}]", file=sys.stderr)

    rows = sim.wer_sweep(cfg, progress=show)
    out = atomic_write(args.out, sim.rows_to_csv(rows))
    write_manifest(out, "sweep", cfg.to_dict(), cfg.seed, started,
                   {"aborts": [r.aborts for r in rows], "stopped_by": [r.stopped_by for r in rows]})
    print(f"wrote {out}")
    return EXIT_OK


def cmd_harvest(args) -> int:
    cfg = load_config(args.config, args.set)
    started = _now()
    stats = sim.HarvestStats()
    spec = sim.harvest_pcws(cfg, args.snr, stop_when_stationary=not args.no_stationary,
                            stationary_errors=args.stationary_errors, max_errors=args.max_errors,
                            stats=stats)
    out = atomic_write(args.out, spec.to_json())
    write_manifest(out, "harvest", cfg.to_dict(), cfg.seed, started,
                   {"snr_db": args.snr, "trials": stats.trials, "errors": stats.errors,
                    "fractional": stats.fractional, "stationary": stats.stationary})
    print(f"wrote {out}: {len(spec)} distances from {stats.errors} errors in {stats.trials} trials")
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        spectrum = analysis.DistanceSpectrum.load(args.spectrum)
    except (OSError, ValueError, KeyError) as exc:
        raise sim.ConfigError([f"{args.spectrum}: unreadable spectrum ({exc})"]) from exc
    power = args.power if args.power is not None else channel.output_power(channel.get_channel(args.channel))
    started = _now()
    rows = sim.predict_wer(spectrum, args.snr, power)
    out = atomic_write(args.out, sim.rows_to_csv(rows, sim.PREDICT_HEADER))
    write_manifest(out, "predict", {"spectrum": str(args.spectrum), "snr_db": args.snr,
                                    "power": power}, None, started)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_gap(args) -> int:
    cfg = load_config(args.config, args.set)
    code = sim.build_code(cfg.code)
    trellis = channel.build_trellis(channel.get_channel(cfg.channel), code.n)
    gb = analysis.gap_delta(code, trellis, cfg.k1, cfg.k2)
    print(f"delta = {gb.delta:.6g} per bit (code {gb.code_term:.4g}, trellis {gb.trellis_term:.4g}); "
          f"N*delta = {gb.total(code.n):.6g}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="jointlp", description="Joint LP decoding over ISI channels.")
    ap.add_argument("--version", action="version", version=_version())
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(p, required=True):
        p.add_argument("--config", required=required, help="TOML experiment file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (TOML value syntax)")

    p = sub.add_parser("channels", help="list the built-in channels")
    p.set_defaults(func=cmd_channels)

    p = sub.add_parser("codegen", help="write a parity-check matrix as alist")
    p.add_argument("--spc", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--dv", type=int)
    p.add_argument("--dc", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-4cycles", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_codegen)

    p = sub.add_parser("decode", help="decode one received vector")
    with_config(p, required=False)
    p.add_argument("--input", required=True, help="whitespace-separated received samples")
    p.add_argument("--decoder", choices=["ijlp", "te", "exact-lp", "exact_lp"])
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="Monte Carlo WER over the configured SNR grid")
    with_config(p)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("harvest", help="collect the pseudo-codeword distance spectrum")
    with_config(p)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stationary-errors", type=int, default=10000)
    p.add_argument("--max-errors", type=int)
    p.add_argument("--no-stationary", action="store_true")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("predict", help="union-bound WER from a spectrum file")
    p.add_argument("--spectrum", required=True)
    p.add_argument("--snr", type=float, nargs="+", required=True)
    p.add_argument("--channel", default="dic", choices=list(channel.CHANNELS))
    p.add_argument("--power", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gap", help="print the softening gap bound delta")
    with_config(p)
    p.set_defaults(func=cmd_gap)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except sim.ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for line in exc.problems:
            print(f"  {line}", file=sys.stderr)
        return EXIT_USAGE
    except (ldpc.CodeError, channel.ChannelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ijlp.NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
