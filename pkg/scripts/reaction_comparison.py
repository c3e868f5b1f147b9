"""Termination times of every reaction strategy for the collision and clamping scenarios."""
import argparse
import csv
import os

from prcontact.sim.experiments import REACTIONS, clamping_scenario, reaction_comparison
from prcontact.sim.scenario import load_scenario

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, "..", "configs")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="reactions.csv")
    args = p.parse_args()
    cases = [("platform-collision", load_scenario(os.path.join(CONFIGS, "platform_collision.yaml")))]
    cases += [(f"clamping-chain{c}", clamping_scenario(os.path.join(CONFIGS, "clamping.yaml"), c)) for c in (1, 2, 3)]
    rows = []
    for name, s in cases:
        for strategy, sm in reaction_comparison(s, REACTIONS).items():
            row = {"case": name, "strategy": strategy, **sm.as_dict()}
            rows.append(row)
            dur = sm.reaction_duration
            print(f"{name:20s} {strategy:6s} detection {sm.detection_time:.3f} s  "
                  f"reaction {'-' if dur is None else f'{dur * 1e3:.0f} ms':>7s}  f_C,max {sm.f_C_max:.1f} N")
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
