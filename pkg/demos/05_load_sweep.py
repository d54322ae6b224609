"""
Delay, loss and verification load versus traffic
================================================

Runs the discrete-event simulator for the cooperative scheme and the
check-everything baseline. The first table uses the 3 km x 3 km grid with
default parameters; the second packs vehicles into 1 km x 1 km so the
baseline processor hits its 43-checks-per-300-ms ceiling.

Pass a duration in seconds as the first argument for longer runs (default 20).
"""

import sys

from coopauth.sim import Protocol, ScenarioConfig, sweep

duration = float(sys.argv[1]) if len(sys.argv) > 1 else 20.0


def table(title, base, loads):
    print(f"\n{title}")
    print(f"{'protocol':>12} {'load':>5} {'delay ms':>9} {'loss':>7} {'approval':>9}"
          f" {'offered':>8} {'checked':>8}   per vehicle per 300 ms")
    for protocol in Protocol:
        for load, r in sweep(loads, base.with_(protocol=protocol)):
            print(f"{protocol.value:>12} {load:>5} {r.mean_e2e_delay * 1000:>9.1f}"
                  f" {r.loss_ratio:>7.3f} {r.approval_ratio:>9.3f}"
                  f" {r.offered_per_300ms:>8.1f} {r.verified_per_300ms:>8.1f}")


table(
    "3x3 km grid",
    ScenarioConfig(duration=duration, warmup=min(2.0, duration / 10)),
    [50, 100, 150, 200],
)
table(
    "1x1 km grid (dense)",
    ScenarioConfig(area=1000.0, grid_spacing=250.0, zone_size=500.0,
                   duration=min(duration, 10.0), warmup=1.0),
    [150, 250],
)
