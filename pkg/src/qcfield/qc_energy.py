"""Effective particle Hamiltonian at a fixed classical field and its energies.

For a field configuration z the particle feels

    H_z = K_0 + sum_i V_z(x_i) + <z|omega|z>,

with V_z(x) = 2 Re <z|lambda(x)> for the linearly coupled families and the
first-order minimal-coupling operator for the vector family.  The energy
qc_energy(psi, z) = <psi|H_z|psi> and its eta-gauge variant (eta = omega^(1/2) z)
drive everything downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GaugeError, NormalizationError
from .model import (Dispersion, ModelSpec, ParticleGrid, grid_inner,
                    grid_norm)

NORM_TOL = 1e-10
HERMITICITY_TOL = 1e-12


# ---------------------------------------------------------------------------
# state containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitudes on the N-particle grid, L2-normalized."""

    values: np.ndarray
    grid: ParticleGrid
    norm_tolerance: float = NORM_TOL

    def __post_init__(self):
        if self.values.shape != (self.grid.total_points,):
            raise ValueError("wave function shape does not match the grid")

    def norm(self) -> float:
        return grid_norm(self.grid, self.values)

    def require_normalized(self) -> None:
        if abs(self.norm() - 1.0) > self.norm_tolerance:
            raise NormalizationError(
                f"wave function norm {self.norm():.12g} is not 1 within "
                f"{self.norm_tolerance:g}")

    @staticmethod
    def normalized(values: np.ndarray, grid: ParticleGrid) -> "WaveFunction":
        values = np.asarray(values, dtype=complex).ravel()
        n = grid_norm(grid, values)
        if n == 0:
            raise NormalizationError("cannot normalize the zero vector")
        return WaveFunction(values=values / n, grid=grid)


@dataclass(frozen=True, eq=False)
class FieldAmplitudes:
    """Complex mode amplitudes, tagged with the gauge they live in.

    gauge "z" is the bare configuration; gauge "eta" stores omega^(1/2) z.
    """

    values: np.ndarray
    gauge: str = "z"

    def __post_init__(self):
        if self.gauge not in ("z", "eta"):
            raise ValueError(f"unknown gauge {self.gauge!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field amplitudes must be finite")

    def require_gauge(self, gauge: str) -> None:
        if self.gauge != gauge:
            raise GaugeError(f"expected field amplitudes in gauge {gauge!r}, "
                             f"got {self.gauge!r}")


def field_z(values) -> FieldAmplitudes:
    return FieldAmplitudes(np.asarray(values, dtype=complex).ravel(), "z")


def field_eta(values) -> FieldAmplitudes:
    return FieldAmplitudes(np.asarray(values, dtype=complex).ravel(), "eta")


def eta_to_z(eta: FieldAmplitudes, dispersion: Dispersion) -> FieldAmplitudes:
    eta.require_gauge("eta")
    dispersion.require_gap("the gauge change omega^(-1/2)")
    return FieldAmplitudes(eta.values / np.sqrt(dispersion.values), "z")


def z_to_eta(z: FieldAmplitudes, dispersion: Dispersion) -> FieldAmplitudes:
    z.require_gauge("z")
    return FieldAmplitudes(z.values * np.sqrt(dispersion.values), "eta")


def random_wavefunction(grid: ParticleGrid, rng: np.random.Generator) -> WaveFunction:
    raw = rng.standard_normal(grid.total_points) \
        + 1j * rng.standard_normal(grid.total_points)
    return WaveFunction.normalized(raw, grid)


# ---------------------------------------------------------------------------
# sparse operators on the particle grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ParticleOperator:
    """Sparse Hermitian operator on the particle grid plus a scalar offset.

    The offset carries the field self-energy <z|omega|z>; expectation values
    are <psi|matrix|psi> + constant_offset.
    """

    matrix: sp.csr_matrix
    grid: ParticleGrid
    constant_offset: float = 0.0

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        if d.nnz == 0:
            return 0.0
        return float(np.max(np.abs(d.data)))

    def expectation(self, psi: WaveFunction) -> float:
        val = grid_inner(self.grid, psi.values, self.matrix @ psi.values)
        return float(val.real) + self.constant_offset

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _axis_laplacian(n: int, h: float) -> sp.csr_matrix:
    """Second-order central differences with Dirichlet walls; zero for a
    single frozen site."""
    if n == 1:
        return sp.csr_matrix((1, 1), dtype=complex)
    main = np.full(n, 2.0 / h ** 2)
    off = np.full(n - 1, -1.0 / h ** 2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr", dtype=complex)


def _axis_momentum(n: int, h: float) -> sp.csr_matrix:
    """-i d/dx as central differences; Hermitian with Dirichlet walls."""
    if n == 1:
        return sp.csr_matrix((1, 1), dtype=complex)
    off = np.full(n - 1, 1.0 / (2.0 * h))
    return sp.diags([1j * off, -1j * off], [-1, 1], format="csr", dtype=complex)


def _lift_axis(grid: ParticleGrid, op1d: sp.spmatrix, axis: int) -> sp.csr_matrix:
    """Embed a one-axis operator into the full configuration grid."""
    g = grid.points_per_axis
    left = g ** axis
    right = g ** (grid.n_axes - axis - 1)
    out = op1d
    if left > 1:
        out = sp.kron(sp.identity(left, format="csr"), out, format="csr")
    if right > 1:
        out = sp.kron(out, sp.identity(right, format="csr"), format="csr")
    return out.tocsr()


def kinetic_matrix(spec: ModelSpec) -> sp.csr_matrix:
    grid = spec.grid
    total = sp.csr_matrix((grid.total_points, grid.total_points), dtype=complex)
    lap1d = _axis_laplacian(grid.points_per_axis, grid.spacing)
    for p in range(grid.n_particles):
        coeff = spec.kinetic_coefficient(p)
        for d in range(grid.dim):
            total = total + coeff * _lift_axis(grid, lap1d, p * grid.dim + d)
    return total.tocsr()


def momentum_matrix(grid: ParticleGrid, particle: int, axis: int = 0) -> sp.csr_matrix:
    """Momentum -i d/dx of one particle coordinate on the full grid."""
    mom1d = _axis_momentum(grid.points_per_axis, grid.spacing)
    return _lift_axis(grid, mom1d, particle * grid.dim + axis)


def assemble_k0(spec: ModelSpec) -> ParticleOperator:
    """Free particle Hamiltonian: Dirichlet Laplacian plus external potential."""
    mat = kinetic_matrix(spec) + sp.diags(
        spec.external_potential.astype(complex), format="csr")
    return ParticleOperator(matrix=mat.tocsr(), grid=spec.grid)


def box_ground_energy(grid: ParticleGrid) -> float:
    """Closed-form lowest eigenvalue of the discrete Dirichlet Laplacian.

    With G cell-centered points the walls sit at +-(L + h/2), so the lowest
    mode reads 2 (1 - cos(pi h / (2L + h))) / h^2 per axis.
    """
    h = grid.spacing
    per_axis = 2.0 * (1.0 - np.cos(np.pi * h / (2.0 * grid.extent + h))) / h ** 2
    return float(grid.n_axes * per_axis)


# ---------------------------------------------------------------------------
# interaction at fixed field configuration
# ---------------------------------------------------------------------------

def field_self_energy(spec: ModelSpec, z: FieldAmplitudes) -> float:
    z.require_gauge("z")
    w = spec.modes.weights
    om = spec.dispersion.values
    return float(np.sum(w * om * np.abs(z.values) ** 2))


def classical_vector_potential(spec: ModelSpec, z: FieldAmplitudes,
                               particle: int) -> np.ndarray:
    """a_z(x) = 2 Re <z|lambda_particle(x)> on the single-particle grid."""
    z.require_gauge("z")
    table = spec.form_factor.particle_table(particle)
    return 2.0 * np.real(table @ (spec.modes.weights * np.conj(z.values)))


def effective_potential(spec: ModelSpec, z: FieldAmplitudes):
    """Field-induced particle potential.

    Linear families: the real single-particle potential
    V_z(x) = 2 Re sum_j w_j conj(z_j) lambda(x;k_j), returned as an array.
    Minimal coupling: the full first-order interaction operator
    sum_p (e/2m_p){a_z(x_p), -i d_p} + (e^2/2m_p) a_z(x_p)^2 on the
    configuration grid, returned as a ParticleOperator.
    """
    z.require_gauge("z")
    if spec.family in ("nelson", "polaron"):
        table = spec.form_factor.table
        return 2.0 * np.real(table @ (spec.modes.weights * np.conj(z.values)))
    return _minimal_coupling_operator(spec, z)


def _minimal_coupling_operator(spec: ModelSpec, z: FieldAmplitudes) -> ParticleOperator:
    grid = spec.grid
    e = spec.charge
    total = sp.csr_matrix((grid.total_points, grid.total_points), dtype=complex)
    for p in range(grid.n_particles):
        a_vals = grid.lift_single(classical_vector_potential(spec, z, p), p)
        a_diag = sp.diags(a_vals.astype(complex), format="csr")
        mom = momentum_matrix(grid, p)
        m = spec.mass_of(p)
        cross = (e / (2.0 * m)) * (mom @ a_diag + a_diag @ mom)
        quad = (e ** 2 / (2.0 * m)) * sp.diags((a_vals ** 2).astype(complex),
                                               format="csr")
        total = total + cross + quad
    return ParticleOperator(matrix=total.tocsr(), grid=grid)


def assemble_hz(spec: ModelSpec, z: FieldAmplitudes) -> ParticleOperator:
    """Effective Hamiltonian H_z with the field self-energy as offset."""
    k0 = assemble_k0(spec)
    offset = field_self_energy(spec, z)
    if spec.family in ("nelson", "polaron"):
        pot = spec.grid.sum_over_particles(effective_potential(spec, z))
        mat = k0.matrix + sp.diags(pot.astype(complex), format="csr")
    else:
        mat = k0.matrix + _minimal_coupling_operator(spec, z).matrix
    return ParticleOperator(matrix=mat.tocsr(), grid=spec.grid,
                            constant_offset=offset)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def qc_energy(spec: ModelSpec, psi: WaveFunction, z: FieldAmplitudes) -> float:
    """Coupled energy <psi|H_z|psi> including the field self-energy."""
    psi.require_normalized()
    return assemble_hz(spec, z).expectation(psi)


def qc_energy_eta(spec: ModelSpec, psi: WaveFunction,
                  eta: FieldAmplitudes) -> float:
    """Same energy in the eta = omega^(1/2) z gauge (needs a mass gap)."""
    return qc_energy(spec, psi, eta_to_z(eta, spec.dispersion))


def coupling_expectation(spec: ModelSpec, psi: WaveFunction) -> np.ndarray:
    """Per-mode expectation m_j = <psi| sum_i lambda(x_i;k_j) |psi>.

    This is the field-gradient source of the linear families; the minimizing
    configuration solves omega_j z_j + m_j = 0.
    """
    grid = spec.grid
    density = np.abs(psi.values) ** 2 * grid.measure
    out = np.zeros(spec.n_modes, dtype=complex)
    for p in range(grid.n_particles):
        table = spec.form_factor.particle_table(p)
        # marginal density of particle p on the single-particle grid
        marg = density.reshape((grid.single_count,) * grid.n_particles)
        axes = tuple(i for i in range(grid.n_particles) if i != p)
        marg = marg.sum(axis=axes) if axes else marg
        out += table.T @ marg
    return out


def field_gradient(spec: ModelSpec, psi: WaveFunction,
                   z: FieldAmplitudes) -> np.ndarray:
    """Gradient of qc_energy in the field coordinates.

    Component j is d/d(Re z_j) + i d/d(Im z_j); matches central finite
    differences of qc_energy and vanishes at a stationary field.
    """
    return 2.0 * spec.modes.weights * _el_field_vector(spec, psi, z)


def _el_field_vector(spec: ModelSpec, psi: WaveFunction,
                     z: FieldAmplitudes) -> np.ndarray:
    """Left side omega_j z_j + <psi| d/d(conj z_j) sum_i V_z(x_i) |psi>."""
    z.require_gauge("z")
    om = spec.dispersion.values
    if spec.family in ("nelson", "polaron"):
        return om * z.values + coupling_expectation(spec, psi)

    grid = spec.grid
    e = spec.charge
    density = np.abs(psi.values) ** 2 * grid.measure
    source = np.zeros(spec.n_modes, dtype=complex)
    for p in range(grid.n_particles):
        m = spec.mass_of(p)
        table = spec.form_factor.particle_table(p)
        mom = momentum_matrix(grid, p)
        mom_psi = mom @ psi.values
        # symmetrized current <psi|{ -i d_p, lambda_j(x_p) }|psi> / 2
        cross_density = 2.0 * np.real(np.conj(psi.values) * mom_psi) * grid.measure
        marg_cross = _particle_marginal(grid, cross_density, p)
        a_vals = classical_vector_potential(spec, z, p)
        marg_quad = _particle_marginal(grid, density, p) * a_vals
        source += (e / (2.0 * m)) * (table.T @ marg_cross)
        source += (e ** 2 / m) * (table.T @ marg_quad)
    return om * z.values + source


def _particle_marginal(grid: ParticleGrid, flat: np.ndarray, p: int) -> np.ndarray:
    arr = flat.reshape((grid.single_count,) * grid.n_particles)
    axes = tuple(i for i in range(grid.n_particles) if i != p)
    return arr.sum(axis=axes) if axes else arr


@dataclass(frozen=True)
class ELResiduals:
    """Stationarity residuals of the coupled minimization."""

    psi_residual: float
    field_residual: float


def el_residual(spec: ModelSpec, psi: WaveFunction,
                z: FieldAmplitudes) -> ELResiduals:
    """Residuals of the two stationarity equations at (psi, z).

    psi_residual is ||H_z psi - eps psi|| with eps = <psi|H_z|psi>;
    field_residual is the omega-weighted mode norm of
    omega z + <psi| d/d(conj z) sum_i V_z(x_i) |psi>.
    """
    psi.require_normalized()
    op = assemble_hz(spec, z)
    h_psi = op.apply(psi.values)
    eps = grid_inner(spec.grid, psi.values, h_psi).real
    psi_res = grid_norm(spec.grid, h_psi - eps * psi.values)
    r = _el_field_vector(spec, psi, z)
    w = spec.modes.weights
    om = spec.dispersion.values
    field_res = float(np.sqrt(np.sum(w * om * np.abs(r) ** 2)))
    return ELResiduals(psi_residual=psi_res, field_residual=field_res)
