"""
How a sluggish stock impounds a jump: the efficient price jumps at once,
the observed price climbs in a few random steps whose levels follow a
Brownian bridge from 0 to 1.
"""

import numpy as np

from jumpsync.simgen import JumpEvent, SimConfig, draw_step_function, observed_jump_component

config = SimConfig(max_delay_seconds=600)
rng = np.random.default_rng(12)

for k in range(5):
    sf = draw_step_function(JumpEvent(k, 10_000, 0.01, 0), config, rng)
    print(f"jump {k}: {sf.n_steps} step(s), delay {sf.total_delay:4d}s, "
          f"offsets {sf.offsets.tolist()}, levels {np.round(sf.levels, 3).tolist()}")

# Observed jump path of one 1% jump with at least three steps
jump = JumpEvent(0, 60, 0.01, 0)
rng_path = np.random.default_rng(3)
sf = draw_step_function(jump, config, rng_path)
while sf.n_steps < 3:
    sf = draw_step_function(jump, config, rng_path)
path = observed_jump_component([jump], [sf], 60 + 601, 1)[:, 0]
print(f"\nstep offsets {sf.offsets.tolist()} s; observed jump level every 10 s:")
for t in range(0, sf.total_delay + 11, 10):
    print(f"{t:4d}  {path[60 + t]:.5f}")

# Step counts across many draws: Binomial(5, 0.4), zero steps means no delay
counts = [draw_step_function(jump, config, rng).n_steps for _ in range(5000)]
print("\nstep-count frequencies:", np.bincount(counts, minlength=6) / 5000)
