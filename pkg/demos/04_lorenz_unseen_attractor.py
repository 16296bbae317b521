"""Reconstructing an unseen chaotic attractor.

The Lorenz-like flow here has two coexisting chaotic lobes, mirror images
under (y, z) -> (-y, -z).  A reservoir trained on a single long trajectory
that settles onto the upper lobe is synchronized to short test signals from
both basins.  Forecast tails are compared to each lobe's reference
distribution with a kernel-mixture divergence: small against the matching
lobe, large against the other.

Run from the repository root:  python demos/04_lorenz_unseen_attractor.py
"""

import numpy as np

from rcbasin.classify import kl_divergence
from rcbasin.experiment import (
    default_config,
    generate_training_set,
    make_grid,
    reservoir_spec_from_config,
    system_from_config,
    train_config_from_config,
    truth_and_test_signals,
)
from rcbasin.reservoir import build_reservoir, drive_open_loop_batch, run_closed_loop_batch
from rcbasin.training import train

cfg = default_config("multistable_lorenz", resolution=6, restrict_to_basin=0,
                     seed_reservoir=1, seed_sampling=1, seed_noise=2)
sys = system_from_config(cfg)

print("integrating the single training trajectory (upper lobe) ...")
signals = generate_training_set(cfg, sys)
res = build_reservoir(reservoir_spec_from_config(cfg))
readout = train(res, signals, train_config_from_config(cfg))

print("forecasting from a 6 x 6 grid of test signals in the x = 0 plane ...")
_, ics = make_grid(cfg)
labels, prefixes = truth_and_test_signals(cfg, ics)
states = drive_open_loop_batch(res, readout.standardizer.apply_values(prefixes))
tails = run_closed_loop_batch(res, readout, states, cfg.horizon - cfg.n_test,
                              keep_last=cfg.kl_tail)

refs = [a.reference for a in sys.attractors]
inter = 0.5 * (kl_divergence(refs[0], refs[1]) + kl_divergence(refs[1], refs[0]))
rows = {0: [], 1: []}
for i, truth in enumerate(labels):
    if truth < 0 or not np.all(np.isfinite(tails[i])):
        continue
    rows[int(truth)].append(kl_divergence(refs[int(truth)], tails[i]))

for lobe, name in ((0, "seen (upper)"), (1, "unseen (lower)")):
    vals = np.array(rows[lobe])
    print(f"lobe {lobe} {name}: {vals.size} forecasts, divergence to the true "
          f"attractor median {np.median(vals):.3f} "
          f"(min {vals.min():.3f}, max {vals.max():.3f})")
print(f"divergence between the true attractors: {inter:.2f}")
print(f"convergence threshold: {cfg.kl_threshold}")
print()
print("both medians sit far below the inter-attractor divergence: the")
print("reservoir rebuilds the mirror lobe it never observed.")
