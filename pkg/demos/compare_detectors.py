"""Compare the three receivers on a short code at a couple of SNR points.

Runs the mixture detector, grid detectors with 8 and 64 levels and the
single-Tikhonov detector on the same frames (same seed, same substreams) and
prints frame error rate, the mean mixture order per outer iteration and the
abstract operation count per symbol. A few hundred frames take about a minute.
"""
import dataclasses
import sys
import time

from tikmix.harness import load_code, parse_config, run_experiment

FRAMES = int(sys.argv[1]) if len(sys.argv) > 1 else 200

base = parse_config("""
M = 4
pilot_period = 20
sigma_delta = 0.1
n_outer = 5
n_inner_ldpc = 5
snr_grid_db = 4.0, 5.0
target_frame_errors = 1000000
seed = 11
code = peg:n=480,rate=0.5,dv=3,seed=3
""")
base = dataclasses.replace(base, max_frames=FRAMES)
code = load_code(base.code_source)
print(f"code n={code.n} k={code.k}, {FRAMES} frames per point")

for algorithm, levels in (("multi_hyp", 0), ("dp", 8), ("dp", 64), ("barb", 0)):
    cfg = dataclasses.replace(base, algorithm=algorithm, dp_levels=max(levels, 2))
    label = f"dp{levels}" if levels else algorithm
    t0 = time.perf_counter()
    stats = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    for p in stats.points:
        gamma = " ".join(f"{g:.2f}" for g in p.gamma[:3])
        ops = p.ops_per_symbol[0] if p.ops_per_symbol else float("nan")
        print(f"{label:10s} {p.snr_db:4.1f} dB  PER {p.per:.3f} ({p.frame_errors}/{p.frames})  "
              f"gamma[0:3] {gamma:16s} ops/symbol {ops:7.1f}")
    print(f"{'':10s} {elapsed:.1f} s")
