"""Minimize the coupled energy by alternating exact partial steps.

Each iteration solves the particle ground state at the current field, then
the closed-form field update at the new particle state; the energy trace is
non-increasing by construction.  The cosine-coupled trap is compared against
a brute-force scan over the field plane.
"""

import numpy as np

from qcfield import (alternating_minimize, best_particle_energy, field_z,
                     multi_start)
from qcfield.presets import cosine_coupled_reference

spec = cosine_coupled_reference()
result = alternating_minimize(spec)

print("alternating minimization on the cosine-coupled trap")
print(f"  converged: {result.converged} in {result.iterations} iterations")
print(f"  energy:    {result.energy:.12f}")
print(f"  field:     z* = {result.z_star.values[0]:.8f}")
print(f"  residuals: psi {result.el_residuals.psi_residual:.2e}, "
      f"field {result.el_residuals.field_residual:.2e}")

print("\nenergy trace (non-increasing):")
for i, e in enumerate(result.energy_trace):
    print(f"  step {i:2d}: {e:.12f}")

# Coarse scan of the fixed-field relaxed energy over the real axis; the
# minimizer sits where the scan dips.
print("\nfixed-field relaxed energy along the real axis:")
for re in np.linspace(-0.8, 0.2, 11):
    e = best_particle_energy(spec, field_z([re]))
    marker = " <-- alternating minimizer" \
        if abs(re - result.z_star.values.real[0]) < 0.05 else ""
    print(f"  z = {re:+.2f}: {e:.8f}{marker}")

# Random restarts land on the same minimum (no spurious basins here).
ms = multi_start(spec, n_starts=4, seed=2)
print(f"\nmulti-start: energies within "
      f"{ms.max_energy - ms.min_energy:.2e} of each other, "
      f"max pairwise minimizer distance {ms.max_pair_distance:.2e}")
