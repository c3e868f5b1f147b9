"""Reaction-stiffness and velocity sweeps for the collision and clamping scenarios."""
import argparse
import os

from prcontact.sim.harness import sweep, write_table
from prcontact.sim.scenario import load_scenario

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, "..", "configs")
SCENARIOS = ("platform_collision", "link_collision", "clamping")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--outdir", default="sweeps")
    p.add_argument("--speed", type=float, default=0.4, help="task speed of the stiffness sweep (m/s)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = p.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    for name in SCENARIOS:
        s = load_scenario(os.path.join(CONFIGS, f"{name}.yaml"))
        s.planner.strategy = "RM"
        stiff = s.replace()
        stiff.task.speed = args.speed
        for axis, base, values in (("stiffness", stiff, [2000.0, 1000.0, 500.0, 100.0]),
                                   ("velocity", s, [0.05, 0.1, 0.2, 0.3, 0.42])):
            rows = sweep(base, axis, values, workers=args.workers)
            write_table(rows, os.path.join(args.outdir, f"{name}_{axis}.csv"))
            for r in rows:
                dur = r["reaction_duration"]
                print(f"{name:18s} {axis:9s} {r['value']:8.3f}  "
                      f"reaction {'-' if dur is None else f'{dur * 1e3:.0f} ms':>7s}  f_C,max {r['f_C_max']:.1f} N  "
                      f"{r['mode']}")


if __name__ == "__main__":
    main()
