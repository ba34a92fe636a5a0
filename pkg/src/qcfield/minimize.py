"""Ground-state search for the coupled energy and the reduced functional.

The coupled problem is minimized by alternating two exact partial steps:
an eigensolve in psi at fixed field, and the closed-form (or linear-solve)
field update at fixed psi.  Each step is an exact partial minimization, so
the energy trace is non-increasing by construction.  The reduced functional
is minimized independently by projected gradient descent on the unit sphere,
and the two routes are compared by the equivalence check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .errors import SolverError
from .model import ModelSpec, grid_inner, grid_norm, mode_norm
from .pekar import eta_pekar, pekar_energy, kernel_convolve
from .qc_energy import (ELResiduals, FieldAmplitudes, ParticleOperator,
                        WaveFunction, assemble_hz, assemble_k0, el_residual,
                        eta_to_z, field_eta, qc_energy_eta,
                        random_wavefunction)

DENSE_EIG_CUTOFF = 900
EIG_RESIDUAL_TOL = 1e-9
DEFAULT_TOL_ENERGY = 1e-10
DEFAULT_TOL_RESIDUAL = 1e-7


# ---------------------------------------------------------------------------
# deterministic ground eigenpair
# ---------------------------------------------------------------------------

def _fix_phase(vec: np.ndarray) -> np.ndarray:
    """Make the first significant component real and positive."""
    idx = np.flatnonzero(np.abs(vec) > 1e-8 * np.max(np.abs(vec)))[0]
    phase = vec[idx] / abs(vec[idx])
    return vec / phase


def ground_eigenpair(op: ParticleOperator,
                     residual_tol: float = EIG_RESIDUAL_TOL):
    """Smallest eigenvalue and normalized eigenvector of a Hermitian operator.

    The constant offset is not added to the returned eigenvalue.  Dense
    diagonalization below a size cutoff, Lanczos iteration with a fixed
    all-ones start vector above it; deterministic either way.
    """
    mat = op.matrix
    n = mat.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        vals, vecs = scipy.linalg.eigh(mat.toarray())
        e0, v0 = float(vals[0]), vecs[:, 0]
    else:
        start = np.ones(n) / np.sqrt(n)
        try:
            vals, vecs = spla.eigsh(mat, k=1, which="SA", v0=start,
                                    maxiter=20 * n)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"eigensolver did not converge: {exc}") from exc
        e0, v0 = float(vals[0]), vecs[:, 0]
    residual = float(np.linalg.norm(mat @ v0 - e0 * v0))
    if residual > residual_tol:
        raise SolverError("ground eigenpair residual too large", residual)
    v0 = _fix_phase(v0)
    return e0, WaveFunction.normalized(v0, op.grid)


def best_particle_energy(spec: ModelSpec, z: FieldAmplitudes) -> float:
    """Lowest coupled energy at a fixed field: min over psi of <psi|H_z|psi>."""
    op = assemble_hz(spec, z)
    e0, _ = ground_eigenpair(op)
    return e0 + op.constant_offset


# ---------------------------------------------------------------------------
# alternating minimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MinimizeResult:
    psi_star: WaveFunction
    z_star: FieldAmplitudes
    eta_star: FieldAmplitudes
    energy: float
    iterations: int
    energy_trace: np.ndarray
    iteration_rows: tuple[tuple[int, float, float, float], ...]
    el_residuals: ELResiduals
    converged: bool


def random_field_start(spec: ModelSpec, rng: np.random.Generator) -> FieldAmplitudes:
    """Gaussian field draw scaled to the coupling strength."""
    sup = 0.0
    tables = (spec.form_factor.per_particle
              if spec.form_factor.per_particle is not None
              else (spec.form_factor.table,))
    w = spec.modes.weights
    om = spec.dispersion.values
    for t in tables:
        vals = (np.abs(t) ** 2) @ (w / om)
        sup = max(sup, float(np.sqrt(vals.max().real)))
    scale = sup if sup > 0 else 1.0
    k = spec.n_modes
    draw = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return field_eta(scale * draw)


def alternating_minimize(spec: ModelSpec,
                         init_psi: WaveFunction | None = None,
                         init_eta: FieldAmplitudes | None = None,
                         tol_energy: float = DEFAULT_TOL_ENERGY,
                         tol_residual: float = DEFAULT_TOL_RESIDUAL,
                         max_iter: int = 200,
                         seed: int | None = None) -> MinimizeResult:
    """Alternate exact psi- and field-steps until stationary.

    Convergence requires both the energy decrement below tol_energy and the
    stationarity residuals below tol_residual; the energy stalls before the
    residuals do in flat valleys, so both are checked.
    """
    spec.dispersion.require_gap("alternating minimization")
    if init_psi is None and init_eta is None and seed is not None:
        init_psi = random_wavefunction(spec.grid, np.random.default_rng(seed))
    if init_eta is None:
        if init_psi is not None:
            eta = eta_pekar(spec, init_psi)
        else:
            eta = field_eta(np.zeros(spec.n_modes))
    else:
        init_eta.require_gauge("eta")
        eta = init_eta

    trace: list[float] = []
    rows: list[tuple[int, float, float, float]] = []
    psi = init_psi
    energy = np.inf
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        z = eta_to_z(eta, spec.dispersion)
        op = assemble_hz(spec, z)
        e0, psi = ground_eigenpair(op)
        e_psi_step = e0 + op.constant_offset
        trace.append(e_psi_step)

        eta = eta_pekar(spec, psi)
        e_eta_step = qc_energy_eta(spec, psi, eta)
        trace.append(e_eta_step)

        res = el_residual(spec, psi, eta_to_z(eta, spec.dispersion))
        rows.append((it, e_eta_step, res.psi_residual, res.field_residual))
        reference = energy if np.isfinite(energy) else e_psi_step
        decrement = reference - e_eta_step
        energy = e_eta_step
        if decrement < tol_energy and res.psi_residual <= tol_residual \
                and res.field_residual <= tol_residual:
            converged = True
            break

    z_star = eta_to_z(eta, spec.dispersion)
    res = el_residual(spec, psi, z_star)
    return MinimizeResult(psi_star=psi, z_star=z_star, eta_star=eta,
                          energy=energy, iterations=iterations,
                          energy_trace=np.asarray(trace),
                          iteration_rows=tuple(rows),
                          el_residuals=res, converged=converged)


# ---------------------------------------------------------------------------
# multi-start
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultiStartResult:
    best: MinimizeResult
    results: tuple[MinimizeResult, ...]
    min_energy: float
    max_energy: float
    max_pair_distance: float


def minimizer_distance(a: MinimizeResult, b: MinimizeResult,
                       spec: ModelSpec) -> float:
    """Distance between minimizers modulo a global phase on psi."""
    overlap = abs(grid_inner(spec.grid, a.psi_star.values, b.psi_star.values))
    d_psi = float(np.sqrt(max(0.0, 2.0 - 2.0 * overlap)))
    d_z = mode_norm(spec.modes, a.z_star.values - b.z_star.values)
    return d_psi + d_z


def multi_start(spec: ModelSpec, n_starts: int, seed: int = 0,
                **kwargs) -> MultiStartResult:
    """Deterministic multi-start sweep; start 0 is the zero-field start,
    the rest draw random (psi, eta) pairs from the seeded generator.

    Starts run sequentially in index order, so the merged report does not
    depend on scheduling.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    results = []
    for s in range(n_starts):
        if s == 0:
            results.append(alternating_minimize(spec, **kwargs))
        else:
            psi0 = random_wavefunction(spec.grid, rng)
            eta0 = random_field_start(spec, rng)
            results.append(alternating_minimize(spec, init_psi=psi0,
                                                init_eta=eta0, **kwargs))
    converged = [r for r in results if r.converged] or results
    best = min(converged, key=lambda r: r.energy)
    energies = [r.energy for r in converged]
    max_dist = 0.0
    for i in range(len(converged)):
        for j in range(i + 1, len(converged)):
            max_dist = max(max_dist,
                           minimizer_distance(converged[i], converged[j], spec))
    return MultiStartResult(best=best, results=tuple(results),
                            min_energy=float(min(energies)),
                            max_energy=float(max(energies)),
                            max_pair_distance=max_dist)


# ---------------------------------------------------------------------------
# direct minimization of the reduced functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PekarMinimizeResult:
    psi_star: WaveFunction
    energy: float
    iterations: int
    grad_norm: float
    energy_trace: np.ndarray
    converged: bool


def _pekar_gradient(spec: ModelSpec, psi: WaveFunction) -> np.ndarray:
    """Unconstrained gradient of the reduced energy at psi.

    Linear families: (K_0 + 2 V_kernel * |psi|^2) psi.  Minimal coupling:
    H_{z(psi)} psi by the envelope identity (the field equation holds at the
    solved field, so its psi-dependence drops out).
    """
    if spec.family in ("nelson", "polaron"):
        density = np.abs(psi.values) ** 2 * spec.grid.measure
        conv = kernel_convolve(spec, density)
        k0 = assemble_k0(spec)
        return k0.apply(psi.values) + 2.0 * conv * psi.values
    eta = eta_pekar(spec, psi)
    op = assemble_hz(spec, eta_to_z(eta, spec.dispersion))
    return op.apply(psi.values) + op.constant_offset * psi.values


def _pekar_value(spec: ModelSpec, psi: WaveFunction) -> float:
    if spec.family in ("nelson", "polaron"):
        density = np.abs(psi.values) ** 2 * spec.grid.measure
        conv = kernel_convolve(spec, density)
        return assemble_k0(spec).expectation(psi) + float(density @ conv)
    eta = eta_pekar(spec, psi)
    return qc_energy_eta(spec, psi, eta)


def pekar_minimize(spec: ModelSpec,
                   init_psi: WaveFunction | None = None,
                   tol_grad: float = 1e-8,
                   max_iter: int = 2000,
                   restart_every: int = 40) -> PekarMinimizeResult:
    """Minimize the reduced energy over normalized psi.

    Projected gradient descent with Barzilai-Borwein steps and sphere
    retraction; every restart_every iterations the iterate is replaced by the
    ground eigenvector of the current effective Hamiltonian whenever that
    lowers the energy (an exact partial step, so the safeguard never harms).
    """
    grid = spec.grid
    if init_psi is None:
        _, psi = ground_eigenpair(assemble_k0(spec))
    else:
        psi = init_psi
    energy = _pekar_value(spec, psi)
    trace = [energy]
    grad = _pekar_gradient(spec, psi)
    proj = grad - grid_inner(grid, psi.values, grad).real * psi.values
    step = 1.0 / max(1.0, grid_norm(grid, proj))
    grad_norm = grid_norm(grid, proj)
    converged = grad_norm <= tol_grad
    iterations = 0

    for it in range(1, max_iter + 1):
        iterations = it
        if converged:
            break
        psi_new = WaveFunction.normalized(psi.values - step * proj, grid)
        energy_new = _pekar_value(spec, psi_new)
        for _ in range(30):  # backtrack on uphill moves
            if energy_new <= energy + 1e-13:
                break
            step *= 0.5
            psi_new = WaveFunction.normalized(psi.values - step * proj, grid)
            energy_new = _pekar_value(spec, psi_new)
        grad_new = _pekar_gradient(spec, psi_new)
        s = psi_new.values - psi.values
        y = grad_new - grad
        sy = grid_inner(grid, s, y).real
        if abs(sy) > 1e-300:
            bb = grid_inner(grid, s, s).real / sy
            if np.isfinite(bb) and bb > 0:
                step = min(max(bb, 1e-6), 1e3)
        psi, grad, energy = psi_new, grad_new, energy_new
        proj = grad - grid_inner(grid, psi.values, grad).real * psi.values
        grad_norm = grid_norm(grid, proj)
        trace.append(energy)

        if it % restart_every == 0 or grad_norm <= tol_grad:
            eta = eta_pekar(spec, psi)
            op = assemble_hz(spec, eta_to_z(eta, spec.dispersion))
            e0, psi_eig = ground_eigenpair(op)
            energy_eig = _pekar_value(spec, psi_eig)
            if energy_eig < energy - 1e-14:
                psi, energy = psi_eig, energy_eig
                grad = _pekar_gradient(spec, psi)
                trace.append(energy)
            proj = grad - grid_inner(grid, psi.values, grad).real * psi.values
            grad_norm = grid_norm(grid, proj)
            if grad_norm <= tol_grad:
                converged = True

    return PekarMinimizeResult(psi_star=psi, energy=energy,
                               iterations=iterations, grad_norm=grad_norm,
                               energy_trace=np.asarray(trace),
                               converged=converged)


# ---------------------------------------------------------------------------
# equivalence of the two variational routes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    e_qc: float
    e_pekar: float
    gap: float
    pekar_at_qc_minimizer: float
    qc_at_pekar_minimizer: float
    passes: bool
    qc_result: MinimizeResult
    pekar_result: PekarMinimizeResult
    notes: tuple[str, ...]


def equivalence_check(spec: ModelSpec, tol: float = 1e-6,
                      n_starts: int = 3, seed: int = 17) -> EquivalenceReport:
    """Verify that the coupled and reduced minimizations reach the same energy.

    Computes the coupled minimum by multi-start alternating minimization and
    the reduced minimum by sphere-projected descent, then cross-evaluates
    each minimizer in the other functional.
    """
    from .model import is_trapping

    notes = []
    if not is_trapping(spec):
        notes.append("external potential not declared trapping; Dirichlet "
                     "walls still confine the box")
    ms = multi_start(spec, n_starts=n_starts, seed=seed)
    qc = ms.best
    pk = pekar_minimize(spec)
    e_pekar = pekar_energy(spec, pk.psi_star).value
    pekar_at_qc = pekar_energy(spec, qc.psi_star).value
    eta_at_pk = eta_pekar(spec, pk.psi_star)
    qc_at_pekar = qc_energy_eta(spec, pk.psi_star, eta_at_pk)
    gap = abs(qc.energy - e_pekar)
    passes = (gap <= tol
              and abs(pekar_at_qc - e_pekar) <= tol
              and abs(qc_at_pekar - qc.energy) <= tol)
    return EquivalenceReport(e_qc=qc.energy, e_pekar=e_pekar, gap=gap,
                             pekar_at_qc_minimizer=pekar_at_qc,
                             qc_at_pekar_minimizer=qc_at_pekar,
                             passes=passes, qc_result=qc, pekar_result=pk,
                             notes=tuple(notes))
