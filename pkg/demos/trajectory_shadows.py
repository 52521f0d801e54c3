"""Where subsampled trajectories go: shadow flows around shifted centers.

A fixed data subset defines its own Hamiltonian, so a leapfrog trajectory
driven by that subset does not wander off randomly. It tracks the exact flow
of the subset posterior, an ellipse around a slightly different center, and
the smaller the subset the larger the shift. The full-data trajectory, by
contrast, stays within a hair of the true flow for the whole period.

Run:  python3 demos/trajectory_shadows.py
CLI equivalent:  subhmc trajectory model.sigma=31.622776601683793 \
    model.s=1.4142135623730951 trajectory.subsets=20,100,400,500
"""
import numpy as np

from subhmc import (
    ModelConfig,
    PhaseState,
    exact_flow,
    full_potential,
    generate_data,
    leapfrog_step,
    subsample_potential,
    to_quadratic,
)

# A deliberately soft posterior (curvature 1.0): the orbit is wide and slow,
# so discretization error stays tiny and the subset shifts dominate the story.
mc = ModelConfig(sigma=31.622776601683793, s=1.4142135623730951, seed=1)
data = generate_data(mc)

eps = 0.01
tau = 2.0 * np.pi
L = round(tau / eps)
start = PhaseState(np.array([0.0]), np.array([1.0]))

full = full_potential(mc, data)
full_form = to_quadratic(full)
print(f"full posterior center {full_form.center[0]:+.4f}, "
      f"curvature {full_form.stiffness[0]:.4f}")
print(f"integrating {L} steps of size {eps} (one full period)\n")

print(f"{'subset':>8} {'center shift':>13} {'max dist from true flow':>24}")
for count in (500, 400, 100, 20):
    pot = subsample_potential(mc, data, count)
    shift = to_quadratic(pot).center[0] - full_form.center[0]

    state = start
    worst = 0.0
    for k in range(1, L + 1):
        state = leapfrog_step(state, eps, pot)
        truth = exact_flow(full_form, start, k * eps)
        worst = max(worst, float(np.hypot(state.q[0] - truth.q[0],
                                          state.p[0] - truth.p[0])))
    print(f"{count:>8} {shift:>+13.5f} {worst:>24.6f}")

print("\nThe B=500 subset is the full data set, so its shift is exactly zero")
print("and its distance from the true flow is pure discretization error.")
print("Every smaller subset orbits a shifted center; running longer or with")
print("a finer step does not shrink that offset, only the wiggles around it.")
