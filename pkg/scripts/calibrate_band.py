"""Settling time of the reference gain sets under the 2% and 5% bands."""

from vulture_pid import TANK_PLANT, SimConfig, find_ultimate, zn_gains
from vulture_pid.tuner import REFERENCE_EVOA_GAINS, REFERENCE_ZN_GAINS, response_metrics

CASES = [
    ("ZN reported gains", REFERENCE_ZN_GAINS, 189.0),
    ("ZN rule gains", zn_gains(find_ultimate(TANK_PLANT), "PID"), 189.0),
    ("EVOA reported gains", REFERENCE_EVOA_GAINS, 81.27),
]

if __name__ == "__main__":
    print(f"{'gain set':<22}{'reported':>10}{'2% band':>10}{'5% band':>10}")
    for name, gains, ref in CASES:
        ts = [response_metrics(gains, TANK_PLANT, SimConfig(settling_band=b)).settling_time for b in (0.02, 0.05)]
        print(f"{name:<22}{ref:10.2f}{ts[0]:10.2f}{ts[1]:10.2f}")
