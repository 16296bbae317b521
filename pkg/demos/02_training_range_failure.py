"""How training-data diversity controls generalization.

Same Duffing setup as demo 01, but the width of the box the training
initial conditions are drawn from shrinks step by step.  With a narrow box
the trajectories hug the attractor, the transient dynamics far from the
wells go unseen, and closed-loop forecasts invent spurious attractors
instead of finding the real unseen well.

Run from the repository root:  python demos/02_training_range_failure.py
"""

from rcbasin.experiment import default_config, run_basin_experiment

for half_width in (10.0, 7.0, 4.0):
    cfg = default_config(
        "duffing",
        n_train=10, restrict_to_basin=0,
        train_half_width=half_width,
        resolution=30, n_test=10,
        seed_reservoir=0, seed_sampling=1, seed_noise=2,
    )
    basin_map = run_basin_experiment(cfg, parallel=2)
    m = basin_map.metrics
    unseen = next(pb for pb in m.per_basin if pb.basin == 1)
    print(f"train box half-width {half_width:4.1f}:  f_c {m.f_c:.3f}   "
          f"unseen-basin f_c {unseen.f_c:.3f}   "
          f"wrong {m.f_wrong:.3f}   spurious {m.f_spurious:.3f}")

print()
print("wide boxes sample the transients and recover the unseen basin;")
print("narrow boxes collapse onto the trained well and spurious points.")
