"""Allen-Cahn and Cahn-Hilliard flows of the same double-well energy.

The L^2 flow (Allen-Cahn) relaxes pointwise into the wells; the H^-1 flow
(Cahn-Hilliard) does the same while conserving the mean, which forces
phase separation and coarsening.

Run:  python3 demos/08_phase_field.py
"""

import numpy as np

from gradflow.models import PhaseFieldState, allen_cahn_solve, cahn_hilliard_solve

rng = np.random.default_rng(3)
L, cells = 64.0, 64


def sparkline(u, buckets="_.-~^"):
    idx = np.clip(((u + 1.2) / 2.4 * len(buckets)).astype(int), 0, len(buckets) - 1)
    return "".join(buckets[i] for i in idx)


ac_state = PhaseFieldState(0.0, L, 0.4 * rng.normal(size=cells))
ac = allen_cahn_solve(ac_state, 1.0, 60.0, 0.02, store_every=1000)
print("Allen-Cahn (L^2 flow): pointwise relaxation into the wells")
for t, snap in list(zip(ac.snapshot_times, ac.snapshots))[::1]:
    k = int(round(t / 0.02))
    print(f"  t={t:6.1f}  E={ac.energies[k]:8.4f}  {sparkline(snap.u)}")

ch_state = PhaseFieldState(0.0, L, 0.05 * rng.normal(size=cells))
ch = cahn_hilliard_solve(ch_state, 1.0, 400.0, 0.04, store_every=2500)
print("\nCahn-Hilliard (H^-1 flow): conserved mean, spinodal coarsening")
for t, snap in zip(ch.snapshot_times, ch.snapshots):
    k = int(round(t / 0.04))
    print(f"  t={t:6.1f}  E={ch.energies[k]:8.4f}  {sparkline(snap.u)}")

means = ch.extra["mean"]
print(f"\nCH mean drift over {means.size - 1} steps: "
      f"{np.abs(means - means[0]).max():.2e}")
print(f"largest energy increase (AC, CH): "
      f"{ac.max_energy_increase():.2e}, {ch.max_energy_increase():.2e}")
