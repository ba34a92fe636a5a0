"""Field reduction: the minimizing field for fixed psi and the reduced energy.

Minimizing the coupled energy over the field at fixed psi is an exact
quadratic problem.  For the linear families the minimizer is closed-form,

    eta_pekar_j = - <psi| sum_i (omega^(-1/2) lambda)(x_i; k_j) |psi>,

and substituting it back yields a self-interaction kernel for the particles
alone.  For minimal coupling the minimizer solves a real-linear system
(1 + T) eta = -b instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConsistencyError, SolverError
from .model import ModelSpec, ParticleGrid, mode_norm
from .qc_energy import (FieldAmplitudes, WaveFunction, assemble_k0,
                        coupling_expectation, field_eta, momentum_matrix,
                        qc_energy_eta, _particle_marginal)

PEKAR_AGREE_TOL = 1e-10
DEFAULT_KERNEL_CAP = 4_000_000


# ---------------------------------------------------------------------------
# minimizing field
# ---------------------------------------------------------------------------

def eta_pekar(spec: ModelSpec, psi: WaveFunction) -> FieldAmplitudes:
    """Unique field minimizer of the energy at fixed psi, in the eta gauge."""
    eta, _ = eta_pekar_info(spec, psi)
    return eta


def eta_pekar_info(spec: ModelSpec, psi: WaveFunction):
    """Minimizing field plus solver metadata (condition estimate for the
    minimal-coupling linear system)."""
    psi.require_normalized()
    spec.dispersion.require_gap("the field reduction")
    if spec.family in ("nelson", "polaron"):
        m = coupling_expectation(spec, psi)
        eta = -m / np.sqrt(spec.dispersion.values)
        return field_eta(eta), {"method": "closed-form"}

    mat, b = _minimal_coupling_system(spec, psi)
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > 1e12:
        raise SolverError(f"singular field-minimizer system (cond={cond:.3g})")
    sol = np.linalg.solve(mat, -b)
    k = spec.n_modes
    eta = sol[:k] + 1j * sol[k:]
    return field_eta(eta), {"method": "direct", "condition": cond}


def _pf_b_vector(spec: ModelSpec, psi: WaveFunction) -> np.ndarray:
    """b_j = sum_p (e/2m_p) <psi|{ -i d_p, xi_j(x_p) }|psi>, xi = omega^(-1/2) lambda."""
    grid = spec.grid
    e = spec.charge
    sq = np.sqrt(spec.dispersion.values)
    b = np.zeros(spec.n_modes, dtype=complex)
    for p in range(grid.n_particles):
        table = spec.form_factor.particle_table(p) / sq[None, :]
        mom_psi = momentum_matrix(grid, p) @ psi.values
        cross_density = 2.0 * np.real(np.conj(psi.values) * mom_psi) * grid.measure
        marg = _particle_marginal(grid, cross_density, p)
        b += (e / (2.0 * spec.mass_of(p))) * (table.T @ marg)
    return b


def _pf_t_apply(spec: ModelSpec, psi: WaveFunction, eta: np.ndarray) -> np.ndarray:
    """(T eta)_j = sum_p (e^2/m_p) <psi| 2 Re<eta|xi(x_p)> xi_j(x_p) |psi>."""
    grid = spec.grid
    e = spec.charge
    w = spec.modes.weights
    sq = np.sqrt(spec.dispersion.values)
    density = np.abs(psi.values) ** 2 * grid.measure
    out = np.zeros(spec.n_modes, dtype=complex)
    for p in range(grid.n_particles):
        table = spec.form_factor.particle_table(p) / sq[None, :]
        u = 2.0 * np.real(table @ (w * np.conj(eta)))  # 2 Re<eta|xi(x)>
        marg = _particle_marginal(grid, density, p) * u
        out += (e ** 2 / spec.mass_of(p)) * (table.T @ marg)
    return out


def _minimal_coupling_system(spec: ModelSpec, psi: WaveFunction):
    """Real 2K x 2K matrix of (1 + T) in (Re eta, Im eta) coordinates."""
    k = spec.n_modes
    b = _pf_b_vector(spec, psi)
    mat = np.eye(2 * k)
    for col in range(2 * k):
        unit = np.zeros(k, dtype=complex)
        unit[col % k] = 1.0 if col < k else 1.0j
        t = _pf_t_apply(spec, psi, unit)
        mat[:k, col] += t.real
        mat[k:, col] += t.imag
    return mat, np.concatenate([b.real, b.imag])


def fixed_point_eta(spec: ModelSpec, psi: WaveFunction,
                    start: np.ndarray | None = None,
                    tol: float = 1e-12, max_iter: int = 500):
    """Iterate eta <- -b - T eta; cross-check for the direct solve.

    Converges when the quadratic coupling is weak (||T|| < 1).
    """
    psi.require_normalized()
    if spec.family != "pauli_fierz":
        raise ValueError("fixed-point iteration applies to minimal coupling only")
    b = _pf_b_vector(spec, psi)
    eta = np.zeros(spec.n_modes, dtype=complex) if start is None \
        else np.asarray(start, dtype=complex).copy()
    for it in range(1, max_iter + 1):
        new = -b - _pf_t_apply(spec, psi, eta)
        if mode_norm(spec.modes, new - eta) <= tol:
            return field_eta(new), it
        eta = new
    raise SolverError(f"fixed-point field iteration did not reach {tol:g} "
                      f"in {max_iter} steps")


# ---------------------------------------------------------------------------
# self-interaction kernel
# ---------------------------------------------------------------------------

def kernel_convolve(spec: ModelSpec, density: np.ndarray) -> np.ndarray:
    """(V_kernel * rho)(X) via the mode-sum factorization (no kernel storage).

    Applies the induced kernel -Re sum_{i,j} U(x_i, y_j) to a configuration
    density: apply lambda, divide by omega, apply the adjoint.
    """
    grid = spec.grid
    w = spec.modes.weights
    om = spec.dispersion.values
    s_k = np.zeros(spec.n_modes, dtype=complex)
    for p in range(grid.n_particles):
        marg = _particle_marginal(grid, density, p)
        s_k += spec.form_factor.particle_table(p).T @ marg
    out = np.zeros(grid.total_points)
    coef = w / om * np.conj(s_k)
    for p in range(grid.n_particles):
        vals = -np.real(spec.form_factor.particle_table(p) @ coef)
        out += grid.lift_single(vals, p)
    return out


@dataclass(frozen=True, eq=False)
class PekarKernel:
    """Self-interaction kernel induced by eliminating the field.

    single_particle holds U(x, y) = <lambda(x)|omega^(-1)|lambda(y)> on
    single-particle grid pairs; config_matrix holds the N-particle kernel
    -Re sum_{i,j} U(x_i, y_j) when it fits under the memory cap.
    """

    single_particle: np.ndarray
    config_matrix: np.ndarray | None
    grid: ParticleGrid


def pekar_kernel(spec: ModelSpec,
                 memory_cap: int = DEFAULT_KERNEL_CAP) -> PekarKernel:
    """Materialize the self-interaction kernel (symmetric by construction)."""
    spec.dispersion.require_gap("the self-interaction kernel")
    w = spec.modes.weights
    om = spec.dispersion.values
    table = spec.form_factor.table
    # U(x, y) = sum_j (w_j/om_j) conj(lambda(x;k_j)) lambda(y;k_j)
    u = (table.conj() * (w / om)[None, :]) @ table.T
    grid = spec.grid
    if grid.total_points ** 2 > memory_cap:
        raise CapacityError(
            f"kernel would need {grid.total_points ** 2} entries, over the "
            f"cap {memory_cap}; use kernel_convolve instead")
    if grid.n_particles == 1 and spec.form_factor.per_particle is None:
        config = -np.real(u)
    else:
        config = np.zeros((grid.total_points, grid.total_points))
        for i in range(grid.n_particles):
            ti = spec.form_factor.particle_table(i)
            for j in range(grid.n_particles):
                tj = spec.form_factor.particle_table(j)
                uij = (ti.conj() * (w / om)[None, :]) @ tj.T
                config -= np.real(_lift_pair(grid, uij, i, j))
    return PekarKernel(single_particle=u, config_matrix=config, grid=grid)


def _lift_pair(grid: ParticleGrid, u: np.ndarray, i: int, j: int) -> np.ndarray:
    """Broadcast U(x_i, y_j) to configuration-pair indices (X, Y)."""
    s = grid.single_count
    n = grid.n_particles
    shape_x = [1] * n
    shape_x[i] = s
    shape_y = [1] * n
    shape_y[j] = s
    full = u.reshape(tuple(shape_x) + tuple(shape_y))
    full = np.broadcast_to(full, (s,) * (2 * n))
    t = grid.total_points
    return np.ascontiguousarray(full).reshape(t, t)


# ---------------------------------------------------------------------------
# reduced energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PekarEnergy:
    """Reduced energy with both evaluation routes.

    value comes from the coupled energy at the minimizing field; for the
    linear families kernel_value re-derives it through the self-interaction
    kernel and the two must agree.
    """

    value: float
    kernel_value: float | None
    eta: FieldAmplitudes


def pekar_energy(spec: ModelSpec, psi: WaveFunction,
                 agree_tol: float = PEKAR_AGREE_TOL) -> PekarEnergy:
    psi.require_normalized()
    eta = eta_pekar(spec, psi)
    value = qc_energy_eta(spec, psi, eta)
    if spec.family == "pauli_fierz":
        return PekarEnergy(value=value, kernel_value=None, eta=eta)

    grid = spec.grid
    density = np.abs(psi.values) ** 2 * grid.measure
    conv = kernel_convolve(spec, density)
    k0 = assemble_k0(spec).expectation(psi)
    kernel_value = k0 + float(density @ conv)
    scale = max(abs(value), abs(kernel_value), 1e-30)
    if abs(value - kernel_value) > agree_tol * scale:
        raise ConsistencyError(
            f"kernel route {kernel_value!r} and field route {value!r} "
            f"disagree beyond {agree_tol:g} relative")
    return PekarEnergy(value=value, kernel_value=kernel_value, eta=eta)


def pekar_energy_value(spec: ModelSpec, psi: WaveFunction) -> float:
    return pekar_energy(spec, psi).value


# ---------------------------------------------------------------------------
# one-particle density
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Density:
    """One-particle density on the single-particle grid; integrates to N."""

    values: np.ndarray
    grid: ParticleGrid

    def total(self) -> float:
        return float(np.sum(self.values) * self.grid.spacing ** self.grid.dim)


def one_particle_density(psi: WaveFunction, grid: ParticleGrid) -> Density:
    """rho(x) = N * integral over the remaining coordinates of |psi|^2."""
    psi.require_normalized()
    sq = np.abs(psi.values) ** 2
    arr = sq.reshape((grid.single_count,) * grid.n_particles)
    if grid.n_particles > 1:
        arr = arr.sum(axis=tuple(range(1, grid.n_particles)))
        arr = arr * grid.spacing ** (grid.dim * (grid.n_particles - 1))
    vals = grid.n_particles * np.ascontiguousarray(arr).ravel()
    return Density(values=vals, grid=grid)


def eta_pekar_from_density(spec: ModelSpec, rho: Density) -> FieldAmplitudes:
    """Minimizing field from the one-particle density (identical particles)."""
    spec.dispersion.require_gap("the field reduction")
    table = spec.form_factor.table
    m = table.T @ (rho.values * spec.grid.spacing ** spec.grid.dim)
    return field_eta(-m / np.sqrt(spec.dispersion.values))


# ---------------------------------------------------------------------------
# convexity diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gap:
    """Convex-combination energy gap and its analytic quadratic value."""

    gap: float
    prediction: float


def convexity_gap(spec: ModelSpec, psi: WaveFunction,
                  eta1: FieldAmplitudes, eta2: FieldAmplitudes,
                  beta: float) -> Gap:
    """Strict-convexity gap of the field energy at fixed psi.

    gap = beta f(eta1) + (1-beta) f(eta2) - f(beta eta1 + (1-beta) eta2);
    for a quadratic functional it equals beta (1-beta) Q(eta1 - eta2) with Q
    the purely quadratic part.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    eta1.require_gauge("eta")
    eta2.require_gauge("eta")
    mix = field_eta(beta * eta1.values + (1.0 - beta) * eta2.values)
    f1 = qc_energy_eta(spec, psi, eta1)
    f2 = qc_energy_eta(spec, psi, eta2)
    fm = qc_energy_eta(spec, psi, mix)
    gap = beta * f1 + (1.0 - beta) * f2 - fm
    delta = eta1.values - eta2.values
    quad = mode_norm(spec.modes, delta) ** 2
    if spec.family == "pauli_fierz":
        grid = spec.grid
        w = spec.modes.weights
        sq = np.sqrt(spec.dispersion.values)
        density = np.abs(psi.values) ** 2 * grid.measure
        for p in range(grid.n_particles):
            table = spec.form_factor.particle_table(p) / sq[None, :]
            u = 2.0 * np.real(table @ (w * np.conj(delta)))
            marg = _particle_marginal(grid, density, p)
            quad += (spec.charge ** 2 / (2.0 * spec.mass_of(p))) \
                * float(marg @ u ** 2)
    return Gap(gap=gap, prediction=beta * (1.0 - beta) * quad)


# ---------------------------------------------------------------------------
# phonon-coupling splitting diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingReport:
    """Norms of the low/high-momentum pieces of the phonon coupling at a
    cutoff, and the stability bound they induce."""

    cutoff: float
    low_norm: float
    high_norm: float
    lower_bound: float


def polaron_splitting(spec: ModelSpec, cutoff: float) -> SplittingReport:
    """Split the phonon coupling at |k| = cutoff and report both norms.

    low_norm is ||1_{|k|<=cutoff} |k|^(-(d-1)/2)||, high_norm is
    ||1_{|k|>cutoff} |k|^(-(d+1)/2)||, both in the weighted mode space;
    the induced bound is E >= -2 alpha N^2 low_norm^2.
    """
    if spec.family != "polaron":
        raise ValueError("the splitting diagnostic applies to the polaron family")
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    mags = spec.modes.magnitudes
    w = spec.modes.weights
    d = spec.grid.dim
    safe = np.where(mags > 0, mags, 1.0)
    low_sq = float(np.sum(w[mags <= cutoff] * safe[mags <= cutoff] ** (-(d - 1))))
    high_sq = float(np.sum(w[mags > cutoff] * safe[mags > cutoff] ** (-(d + 1))))
    n = spec.grid.n_particles
    return SplittingReport(cutoff=cutoff,
                           low_norm=float(np.sqrt(low_sq)),
                           high_norm=float(np.sqrt(high_sq)),
                           lower_bound=-2.0 * spec.alpha * n ** 2 * low_sq)
