"""Run all seven modes on the default swing and print MAE and observer errors.

    python scripts/compare_modes.py [--quantize] [--concurrent] [--duration 11]
"""

import argparse
import warnings

from bilateral import robots, sim
from bilateral.controller import MODES
from bilateral.metrics import compute_mae


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quantize", action="store_true")
    ap.add_argument("--concurrent", action="store_true")
    ap.add_argument("--duration", type=float, default=11.0)
    args = ap.parse_args()
    model = robots.crane_x7()
    scenario = sim.Scenario(duration=args.duration, encoder_quantization=args.quantize)
    print(f"{'mode':<20} {'angle':>7} {'vel':>8} {'torque':>7} {'vel rms l/f':>14} {'tau rms l/f':>14}")
    for mode in MODES:
        cl, cf = sim.mode_configs(mode)
        if args.concurrent:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                log, rep = sim.concurrent_session(model, model, cl, cf, scenario, max_missed=1.0)
            extra = f"  missed {rep.missed}"
        else:
            log, extra = sim.run_session(model, model, cl, cf, scenario), ""
        r = compute_mae(log)
        o = r.observer_rms
        print(f"{mode.value:<20} {r.angle_mae:7.3f} {r.velocity_mae:8.3f} {r.torque_mae:7.3f} "
              f"{o['l']['velocity']:6.3f}/{o['f']['velocity']:<6.3f} "
              f"{o['l']['torque']:6.3f}/{o['f']['torque']:<6.3f}{extra}")


if __name__ == "__main__":
    main()
