"""Monte-Carlo identification under relative torque noise, with the Cramer-Rao bound.

For white noise of per-joint standard deviation s_j the estimator covariance
is (Y^T W Y)^-1 with W = diag(1/s_j^2); the expected median of |N(0, v)| is
0.6745 sqrt(v). Parameters whose bound already exceeds the target cannot
meet it with this excitation, whatever the solver.

    python scripts/identification_noise.py [--f-base 1.0] [--fill 0.5] [--seeds 10]
"""

import argparse
import warnings

import numpy as np

from bilateral import identify as ident
from bilateral import robots


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--duration", type=float, default=60.0)
    ap.add_argument("--rate", type=float, default=500.0)
    ap.add_argument("--f-base", type=float, default=1.0)
    ap.add_argument("--fill", type=float, default=0.5)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--target", type=float, default=0.02)
    args = ap.parse_args()
    model = robots.crane_x7()
    true = model.phi.values
    t, q, qd, qdd = ident.multisine(model, args.duration, args.rate, f_base=args.f_base, fill=args.fill)
    data = ident.synthesize(model, t, q, qd, qdd)
    Y, tau = ident.stack_regressor(model, data)
    n = model.n_joints
    sigma = args.noise * np.sqrt(np.mean(data.tau ** 2, axis=0))
    print(f"peak |qd| {np.abs(qd).max():.1f} rad/s, peak |qdd| {np.abs(qdd).max():.0f} rad/s^2")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, diag = ident.least_squares_identify(Y, tau, model.phi.names)
        errs = []
        for seed in range(args.seeds):
            noisy = tau + (np.random.default_rng(seed).normal(size=data.tau.shape) * sigma).ravel()
            est, _ = ident.weighted_identify(Y, noisy, n, model.phi.names)
            errs.append(np.abs(est - true) / np.abs(true))
    ok = diag.identifiable
    w = np.tile(1 / sigma ** 2, len(data))
    info = (Y[:, ok] * w[:, None]).T @ Y[:, ok]
    crb = 0.6745 * np.sqrt(np.diag(np.linalg.inv(info))) / np.abs(true[ok])
    med = np.median(errs, axis=0)[ok]
    names = np.array(model.phi.names)[ok]
    print(f"rank {diag.rank}/{len(true)}; {n} joints, {len(data)} samples")
    print(f"{'param':<6} {'median':>8} {'bound':>8}")
    for i in np.argsort(-np.maximum(med, crb)):
        flag = " *" if med[i] > args.target else ""
        print(f"{names[i]:<6} {med[i]:8.4f} {crb[i]:8.4f}{flag}")
    print(f"{np.sum(med > args.target)} parameters above {args.target:g}; "
          f"{np.sum(crb > args.target)} have a bound above it")


if __name__ == "__main__":
    main()
