"""WER of the iterative joint LP decoder against turbo equalization on a
(3,5)-regular length-155 code over the precoded dicode channel.

    python3 scripts/fig4_compare.py --snr 3 3.5 4 4.5 5 --max-errors 100 --out fig4.csv
"""
import argparse
import sys

from jointlp import sim


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr", type=float, nargs="+", default=[3.0, 3.5, 4.0, 4.5, 5.0])
    ap.add_argument("--decoders", nargs="+", default=["te", "ijlp"], choices=list(sim.DECODERS))
    ap.add_argument("--max-errors", type=int, default=100)
    ap.add_argument("--max-trials", type=int, default=100000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="fig4.csv")
    args = ap.parse_args()

    base = dict(channel="pdic", code={"kind": "regular", "n": 155, "dv": 3, "dc": 5, "seed": 0},
                codeword={"seed": 1}, k1=1000.0, k2=100.0, inner_rounds=2, outer_max=100,
                snr_db=args.snr, max_errors=args.max_errors, max_trials=args.max_trials,
                workers=args.workers, seed=args.seed)
    lines = ["decoder," + ",".join(sim.CSV_HEADER)]
    for dec in args.decoders:
        cfg = sim.ExperimentConfig(**base, decoder=dec)

        def show(row, dec=dec):
            print(f"{dec:5s} {row.snr_db:5.2f} dB  {row.errors:4d}/{row.trials:<6d} wer {row.wer:.3e}",
                  file=sys.stderr, flush=True)

        rows = sim.wer_sweep(cfg, progress=show)
        lines += [f"{dec}," + line for line in sim.rows_to_csv(rows).splitlines()[1:]]
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
