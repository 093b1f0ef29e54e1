"""Sweep the number of 1-bit channels along the side-chain selection ladder.

Each row quantizes K current channels to one bit and keeps the rest at
full precision. The error grows with K while the transmitted bits fall.
Run with a larger ``TRIALS`` for smoother numbers.
"""

from pathlib import Path

from gridsense.bench import RunConfig, load_scenario, render_sweep, sweep_k

TRIALS = 10
scenario = load_scenario(Path(__file__).parent / "scenarios" / "feeder69_k17_1bit.json")
scenario.trials = TRIALS
results = sweep_k(RunConfig(scenario), [2, 4, 17, 19, 23, 27, 34, 42])
print(render_sweep(results, "pretty"))
for k, rep in results:
    b = rep.bits
    print(f"K={k:2d}: {b.bits_total} of {b.baseline_bits} bits per snapshot, {b.saved_pct:.2f}% saved")
