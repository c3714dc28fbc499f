"""Print a comparison: reported values, literal reported gains, recomputed ZN gains, and a fresh EVOA run."""

import argparse

from vulture_pid import TANK_PLANT, EvoaConfig, ObjectiveConfig, SimConfig, find_ultimate, tune, zn_gains
from vulture_pid.tuner import REFERENCE_EVOA_GAINS, REFERENCE_ZN_GAINS, response_metrics

REPORTED = {
    "ZN (reported)": (0.038, 0.001, 0.170, 32.7, 189.0, 41.0),
    "EVOA (reported)": (0.098, 0.006, 2.01, 8.85, 81.27, 42.0),
}


def row(name, gains, m):
    ts = "  never" if m.settling_time is None else f"{m.settling_time:7.2f}"
    return f"{name:<24}{gains.kp:8.4f}{gains.ki:9.5f}{gains.kd:8.3f}{m.ise:9.3f} {ts}{m.overshoot_pct:8.1f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--band", type=float, default=0.02)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iters", type=int, default=200)
    args = ap.parse_args()
    sim = SimConfig(settling_band=args.band)

    print(f"{'method':<24}{'kp':>8}{'ki':>9}{'kd':>8}{'ISE':>9}{'t_s':>8}{'M_p%':>8}")
    for name, (kp, ki, kd, ise, ts, mp) in REPORTED.items():
        print(f"{name:<24}{kp:8.4f}{ki:9.5f}{kd:8.3f}{ise:9.3f} {ts:7.2f}{mp:8.1f}")
    for name, g in (("ZN (reported gains)", REFERENCE_ZN_GAINS), ("EVOA (reported gains)", REFERENCE_EVOA_GAINS)):
        print(row(name, g, response_metrics(g, TANK_PLANT, sim)))
    u = find_ultimate(TANK_PLANT)
    g = zn_gains(u, "PID")
    print(row("ZN (rule, ku/tu)", g, response_metrics(g, TANK_PLANT, sim)))
    rep = tune(TANK_PLANT, EvoaConfig(rng_seed=args.seed, max_iterations=args.iters), ObjectiveConfig(sim=sim))
    print(row(f"EVOA (this run, seed {args.seed})", rep.best_gains, rep.best_metrics))
    print(f"\nku={u.ku:.9f}  tu={u.tu:.4f} s  settling band {args.band:g}")


if __name__ == "__main__":
    main()
