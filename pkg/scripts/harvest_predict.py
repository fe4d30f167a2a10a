"""Harvest the exact-LP distance spectrum of SPC(3,2) on the dicode channel
at low SNR, then compare the truncated union bound with simulation."""
import argparse

from jointlp import sim


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--harvest-snr", type=float, default=0.0)
    ap.add_argument("--snr", type=float, nargs="+", default=[6.0, 7.0, 8.0, 10.0, 11.0])
    ap.add_argument("--max-errors", type=int, default=100)
    ap.add_argument("--spectrum", default="spectrum.json")
    args = ap.parse_args()

    base = dict(channel="dic", code={"kind": "spc", "n": 3}, codeword=[1, 1, 0], decoder="exact_lp",
                start_state=0, max_trials=400000)
    cfg = sim.ExperimentConfig(**base, snr_db=[args.harvest_snr], seed=8)
    setup = sim.Setup.from_config(cfg)
    stats = sim.HarvestStats()
    spectrum = sim.harvest_pcws(cfg, args.harvest_snr, stats=stats, setup=setup)
    spectrum.save(args.spectrum)
    print(f"harvested {stats.errors} errors in {stats.trials} trials "
          f"({stats.fractional} fractional, stationary={stats.stationary})")
    for d in spectrum.distances:
        print(f"  d_gen {d:.4f}  x{spectrum.entries[d]}  f = {spectrum.examples.get(d)}")

    pred = {r["snr_db"]: r["wer_pred"] for r in sim.predict_wer(spectrum, args.snr, setup.power)}
    rows = sim.wer_sweep(sim.ExperimentConfig(**base, snr_db=args.snr, max_errors=args.max_errors, seed=88))
    print(f"{'snr':>6} {'simulated':>11} {'predicted':>11} {'ratio':>6}")
    for r in rows:
        ratio = pred[r.snr_db] / r.wer if r.wer else float("inf")
        print(f"{r.snr_db:6.1f} {r.wer:11.3e} {pred[r.snr_db]:11.3e} {ratio:6.2f}")


if __name__ == "__main__":
    main()
