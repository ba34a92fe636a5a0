"""Build the three model families and inspect their validation reports.

Walks through grid construction, mode sets with quadrature weights, the
family form factors, and the coupling bounds each family must satisfy.
"""

import numpy as np

from qcfield import (build_dispersion, build_field_modes, build_particle_grid,
                     make_model, nelson_form_factor, polaron_form_factor,
                     pauli_fierz_form_factor, save_model, validate_model)
from qcfield.model import is_trapping

# A 1-d box of half-width 8 with 64 cell-centered points (h = 0.25).
grid = build_particle_grid(dim=1, n_particles=1, extent=8.0, points_per_axis=64)
print(f"grid: {grid.points_per_axis} points, spacing {grid.spacing}, "
      f"measure h^dN = {grid.measure}")

# Five modes on a 1-d lattice; trapezoid weights are filled in automatically.
modes = build_field_modes([[-2.0], [-1.0], [0.5], [1.0], [2.0]])
print("mode weights (trapezoid):", modes.weights)
dispersion = build_dispersion([1.0, 1.0, 1.2, 1.5, 2.0])

# --- linearly coupled scalar field -----------------------------------------
lam0 = [0.1, 0.2, 0.3, 0.2, 0.1]
nelson = make_model(
    "nelson", grid, modes, dispersion,
    nelson_form_factor(grid, modes, lam0, dispersion=dispersion), "harmonic")
print("\nlinear scalar coupling:")
print(validate_model(nelson).summary())
print("trapping potential:", is_trapping(nelson))

# --- phonon coupling (unit dispersion, |k|-singular form factor) -----------
unit = build_dispersion(np.ones(5))
polaron = make_model(
    "polaron", grid, modes, unit,
    polaron_form_factor(grid, modes, alpha=1.5), "harmonic", alpha=1.5)
print("\nphonon coupling:")
print(validate_model(polaron).summary())

# --- minimal coupling (per-particle charge densities) -----------------------
pf = make_model(
    "pauli_fierz", grid, modes, dispersion,
    pauli_fierz_form_factor(grid, modes, [lam0]), "harmonic",
    masses=[1.0], charge=0.5)
print("\nminimal coupling:")
print(validate_model(pf).summary())

# Models serialize to versioned JSON with complex entries as [re, im] pairs.
save_model(nelson, "nelson_demo_model.json")
print("\nwrote nelson_demo_model.json")
