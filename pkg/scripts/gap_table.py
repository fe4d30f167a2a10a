"""Measured gap between the softened optimum and the exact LP optimum,
next to the bound delta*N, for a few temperatures."""
import argparse

import numpy as np

from jointlp import analysis, channel, ijlp, ldpc, lpexact, metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=4)
    ap.add_argument("--sigma", type=float, default=0.6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    spec = channel.get_channel("dic").with_start_state(0)
    codes = {"SPC(3,2)": ldpc.spc(3), "(3,4) N=8": ldpc.random_regular(8, 3, 4, seed=0, allow_4cycles=True)}
    print(f"{'code':10} {'draw':>4} {'K1':>6} {'K2':>5} {'gap':>10} {'delta*N':>10} {'eps':>8} {'sweeps':>7}")
    for name, code in codes.items():
        tr = channel.build_trellis(spec, code.n)
        for d in range(args.draws):
            cw = ldpc.find_codeword(code, rng) if d % 2 else np.zeros(code.n, dtype=int)
            y, _ = channel.simulate(spec, cw, args.sigma, rng)
            b = metrics.awgn_metrics(tr, y)
            p_star = lpexact.solve_joint_lp(tr, code, b).objective
            for k1, k2 in ((10.0, 10.0), (100.0, 100.0), (1000.0, 100.0)):
                res = ijlp.cyclic_decode(b, code, tr, ijlp.DecoderParams(
                    k1=k1, k2=k2, max_sweeps=100000, eps_residual=1e-10), eps_stop=0.0)
                pd = analysis.primal_from_dual(res.m, code, tr, b, k1, k2)
                bound = analysis.gap_delta(code, tr, k1, k2, eps=pd.eps, metrics=b, C=pd.C).total(code.n)
                print(f"{name:10} {d:4d} {k1:6g} {k2:5g} {pd.value - p_star:10.3e} {bound:10.3e} "
                      f"{pd.eps:8.1e} {res.sweeps:7d}")


if __name__ == "__main__":
    main()
