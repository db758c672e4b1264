"""Sensitivity of the mode ordering to the simulated operator's hand.

Runs Unilateral, SymmetricPosition and FourChProposed (angle MAE) and
FourChPseudoDiff against FourChProposed with quantized encoders (velocity
MAE) for a grid of hand stiffness, torque limit and limb inertia.

    python scripts/operator_scan.py
"""

import itertools
from dataclasses import replace

from bilateral import robots, sim
from bilateral.controller import TeleopMode as M
from bilateral.metrics import compute_mae


def run(model, mode, scenario):
    cl, cf = sim.mode_configs(mode)
    return compute_mae(sim.run_session(model, model, cl, cf, scenario))


def main():
    model = robots.crane_x7()
    print(f"{'k':>4} {'max':>5} {'m':>5} | {'U':>6} {'S':>6} {'P':>6} ord | {'PD':>7} {'P(q)':>7} ord")
    for k, tmax, m in itertools.product((20.0, 40.0), (1.25, 1.5, 1.75), (0.01, 0.02, 0.03)):
        op = replace(sim.OperatorProfile(), stiffness=k, max_torque=tmax, inertia=m)
        sc = sim.Scenario(operator=op)
        U, S, P = (run(model, x, sc).angle_mae for x in (M.UNILATERAL, M.SYMMETRIC_POSITION,
                                                          M.FOURCH_PROPOSED))
        q = replace(sc, encoder_quantization=True)
        PD, PQ = (run(model, x, q).velocity_mae for x in (M.FOURCH_PSEUDO_DIFF, M.FOURCH_PROPOSED))
        print(f"{k:4.0f} {tmax:5.2f} {m:5.2f} | {U:6.3f} {S:6.3f} {P:6.3f} {'ok' if P < S < U else '--'}"
              f"  | {PD:7.3f} {PQ:7.3f} {'ok' if PD > PQ else '--'}", flush=True)


if __name__ == "__main__":
    main()
