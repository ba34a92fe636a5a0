"""Strict convexity in the field and measure-level energy bounds.

At fixed particle state the energy is strictly convex in the field, with a
gap given exactly by its quadratic part.  At the level of measures, no
convex combination of configurations undercuts the coupled minimum, and any
near-minimizing measure concentrates near the minimizing energy.
"""

import numpy as np

from qcfield import (alternating_minimize, atomic_measure_energy,
                     concentration_tally, convexity_gap, dirac_measure,
                     field_eta, near_minimizing_measure, pekar_minimize,
                     random_atomic_measure, random_wavefunction,
                     shared_state_measure_energy)
from qcfield.presets import decoupled_reference, small_minimal_coupling

# --- convexity ---------------------------------------------------------------
pf = small_minimal_coupling()
rng = np.random.default_rng(8)
print("convexity gaps vs their analytic quadratic values (minimal coupling):")
for _ in range(5):
    psi = random_wavefunction(pf.grid, rng)
    k = pf.n_modes
    eta1 = field_eta(rng.standard_normal(k) + 1j * rng.standard_normal(k))
    eta2 = field_eta(rng.standard_normal(k) + 1j * rng.standard_normal(k))
    beta = float(rng.uniform(0.1, 0.9))
    g = convexity_gap(pf, psi, eta1, eta2, beta)
    print(f"  beta = {beta:.3f}: gap = {g.gap:.10f}, "
          f"prediction = {g.prediction:.10f}, "
          f"diff = {abs(g.gap - g.prediction):.1e}")

# --- measure energies --------------------------------------------------------
spec = decoupled_reference()
reference = alternating_minimize(spec)
e_qc = reference.energy
print(f"\ncoupled minimum: {e_qc:.12f}")

dirac = dirac_measure(reference.z_star, reference.psi_star)
print(f"Dirac measure at the minimizer: "
      f"{atomic_measure_energy(spec, dirac):.12f}")

print("random atomic measures (all above the minimum):")
for _ in range(5):
    m = random_atomic_measure(spec, rng)
    e = atomic_measure_energy(spec, m)
    print(f"  {m.n_atoms} atoms: energy = {e:+.6f}  "
          f"excess = {e - e_qc:+.3e}")

shared_psi = random_wavefunction(spec.grid, rng)
points = [reference.z_star,
          type(reference.z_star)(reference.z_star.values + 0.5, "z")]
e_pm = shared_state_measure_energy(spec, shared_psi, [0.5, 0.5], points)
print(f"shared-state two-point measure: {e_pm:+.6f} "
      f"(excess {e_pm - e_qc:+.3e})")

# --- concentration ----------------------------------------------------------
delta = 1e-2
measure = near_minimizing_measure(spec, reference, delta, rng)
excess = atomic_measure_energy(spec, measure) - e_qc
print(f"\nnear-minimizing measure: excess {excess:.2e} <= delta = {delta}")
tally = concentration_tally(spec, measure, e_qc, delta, range(2, 11))
print("weight of atoms with energy >= minimum + k*delta (must be < 1/k):")
for k, weight in tally.items():
    print(f"  k = {k:2d}: weight {weight:.2e} < {1.0 / k:.3f}")

pk = pekar_minimize(spec)
print(f"\nfive-way agreement at the minimizer:")
print(f"  coupled minimum        {e_qc:.12f}")
print(f"  Dirac (state-valued)   {atomic_measure_energy(spec, dirac):.12f}")
print(f"  Dirac (shared state)   "
      f"{shared_state_measure_energy(spec, reference.psi_star, [1.0], [reference.z_star]):.12f}")
print(f"  reduced functional     {pk.energy:.12f}")
