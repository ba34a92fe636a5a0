"""Truncated Fock space and the scaled quantization of each model.

The field is quantized with scaled ladder operators obeying
[a_eps, a_eps^dag] = eps; concretely a_eps = sqrt(eps) a on a standard
bosonic basis with a total-excitation cutoff n_max.  Smearing against a mode
function u pairs with the quadrature weights,

    a_eps(u) = sum_j sqrt(w_j) conj(u_j) a_eps_j,

so commutators reproduce the weighted mode inner product.  As eps shrinks,
the ground energy of the quantized Hamiltonian approaches the coupled
classical-field minimum, which is what the sweep measures.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb, ceil

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import gammainc, gammaln

from .errors import CapacityError, SolverError, TruncationError
from .model import ModelSpec, mode_norm
from .qc_energy import (FieldAmplitudes, WaveFunction, assemble_k0,
                        momentum_matrix, qc_energy)

DENSE_FOCK_CUTOFF = 1600
EIG_RESIDUAL_TOL = 1e-9
DEFAULT_DIMENSION_CAP = 3_000_000
COHERENT_TAIL_TOL = 1e-8
UNRELIABLE_TAIL = 1e-3
MONOTONE_SLACK = 1e-8


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation vectors (n_1 .. n_K) with sum n_j <= n_max.

    Enumeration is graded lexicographic: by total excitation number first,
    then lexicographically within each shell; the enumeration is total.
    """

    n_modes: int
    n_max: int
    states: np.ndarray  # (dim, K) int

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @cached_property
    def index(self) -> dict:
        return {tuple(row): i for i, row in enumerate(self.states)}

    @cached_property
    def totals(self) -> np.ndarray:
        return self.states.sum(axis=1)

    def top_shell(self) -> np.ndarray:
        return np.flatnonzero(self.totals == self.n_max)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def build_fock_basis(n_modes: int, n_max: int) -> FockBasis:
    if n_modes < 1 or n_max < 0:
        raise ValueError("need n_modes >= 1 and n_max >= 0")
    states = []
    for total in range(n_max + 1):
        states.extend(_compositions(total, n_modes))
    arr = np.asarray(states, dtype=np.int64)
    expected = comb(n_modes + n_max, n_max)
    if arr.shape[0] != expected:
        raise AssertionError("basis enumeration does not match the binomial count")
    return FockBasis(n_modes=n_modes, n_max=n_max, states=arr)


# ---------------------------------------------------------------------------
# operators on the truncated basis
# ---------------------------------------------------------------------------

def ladder_operators(basis: FockBasis, epsilon: float):
    """Per-mode scaled lowering and raising matrices.

    a_j removes one excitation from mode j with amplitude sqrt(eps n_j); the
    raising matrices are the adjoints.  The scaled commutation relation
    [a_j, a_j^dag] = eps holds exactly below the top shell.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    lowering = []
    index = basis.index
    for j in range(basis.n_modes):
        rows, cols, vals = [], [], []
        for col, state in enumerate(basis.states):
            nj = state[j]
            if nj == 0:
                continue
            tgt = list(state)
            tgt[j] -= 1
            rows.append(index[tuple(tgt)])
            cols.append(col)
            vals.append(np.sqrt(epsilon * nj))
        lowering.append(sp.csr_matrix(
            (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex))
    raising = [a.conj().T.tocsr() for a in lowering]
    return lowering, raising


def dgamma(basis: FockBasis, dispersion, epsilon: float) -> sp.csr_matrix:
    """Second-quantized field energy: diagonal eps * sum_j omega_j n_j."""
    diag = epsilon * (basis.states @ np.asarray(dispersion.values))
    return sp.diags(diag.astype(complex), format="csr")


def _coupling_diag(spec: ModelSpec, mode: int, particle: int | None = None
                   ) -> np.ndarray:
    """Summed form-factor values for one mode on the configuration grid."""
    grid = spec.grid
    if particle is not None:
        return grid.lift_single(spec.form_factor.particle_table(particle)[:, mode],
                                particle)
    return grid.sum_over_particles(spec.form_factor.table[:, mode])


def assemble_h_eps(spec: ModelSpec, basis: FockBasis, epsilon: float,
                   dimension_cap: int = DEFAULT_DIMENSION_CAP) -> sp.csr_matrix:
    """Quantized Hamiltonian on the (particle grid) x (Fock basis) space."""
    grid = spec.grid
    dim = grid.total_points * basis.dim
    if dim > dimension_cap:
        raise CapacityError(f"tensor dimension {dim} exceeds the cap "
                            f"{dimension_cap}")
    k0 = assemble_k0(spec).matrix
    eye_f = sp.identity(basis.dim, format="csr", dtype=complex)
    eye_g = sp.identity(grid.total_points, format="csr", dtype=complex)
    h = sp.kron(k0, eye_f, format="csr") \
        + sp.kron(eye_g, dgamma(basis, spec.dispersion, epsilon), format="csr")
    lowering, raising = ladder_operators(basis, epsilon)
    sqw = np.sqrt(spec.modes.weights)

    if spec.family in ("nelson", "polaron"):
        for j in range(spec.n_modes):
            lam = _coupling_diag(spec, j)
            d = sp.diags(lam.astype(complex), format="csr")
            h = h + sqw[j] * (sp.kron(d, raising[j], format="csr")
                              + sp.kron(d.conj(), lowering[j], format="csr"))
        return h.tocsr()

    e = spec.charge
    for p in range(grid.n_particles):
        m = spec.mass_of(p)
        field_op = sp.csr_matrix((dim, dim), dtype=complex)
        for j in range(spec.n_modes):
            lam = _coupling_diag(spec, j, particle=p)
            d = sp.diags(lam.astype(complex), format="csr")
            field_op = field_op + sqw[j] * (
                sp.kron(d, raising[j], format="csr")
                + sp.kron(d.conj(), lowering[j], format="csr"))
        mom = sp.kron(momentum_matrix(grid, p), eye_f, format="csr")
        h = h + (e / (2.0 * m)) * (mom @ field_op + field_op @ mom)
        h = h + (e ** 2 / (2.0 * m)) * (field_op @ field_op)
    return h.tocsr()


def ground_energy_eps(h: sp.spmatrix,
                      residual_tol: float = EIG_RESIDUAL_TOL):
    """Lowest eigenvalue of the quantized Hamiltonian, with its eigenvector.

    Deterministic: dense solve at small dimension, otherwise Lanczos from the
    normalized all-ones vector with full reorthogonalization handled by the
    underlying implicitly restarted iteration.
    """
    n = h.shape[0]
    if n <= DENSE_FOCK_CUTOFF:
        vals, vecs = scipy.linalg.eigh(h.toarray())
        e0, v0 = float(vals[0]), vecs[:, 0]
    else:
        start = np.ones(n) / np.sqrt(n)
        try:
            vals, vecs = spla.eigsh(h, k=1, which="SA", v0=start,
                                    maxiter=50 * n)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"Fock eigensolver did not converge: {exc}") from exc
        e0, v0 = float(vals[0]), vecs[:, 0]
    residual = float(np.linalg.norm(h @ v0 - e0 * v0))
    if residual > residual_tol:
        raise SolverError("Fock ground-state residual too large", residual)
    return e0, v0


# ---------------------------------------------------------------------------
# coherent product trial states
# ---------------------------------------------------------------------------

def coherent_tail(nu: float, n_max: int) -> float:
    """Mass of a coherent state beyond the cutoff.

    The total occupation of a multimode coherent state is Poisson with mean
    nu = ||z||^2 / eps, so the discarded mass is P(N > n_max) exactly.
    """
    if nu == 0.0:
        return 0.0
    return float(gammainc(n_max + 1, nu))


def required_n_max(nu: float, tail_tol: float, min_shells: int = 0) -> int:
    n = max(0, ceil(nu)) + min_shells
    while coherent_tail(nu, n) > tail_tol:
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class ProductState:
    """Particle state tensored with a truncated, renormalized coherent state."""

    values: np.ndarray  # (grid_points * fock_dim,), grid-major
    psi: WaveFunction
    fock_coeffs: np.ndarray
    tail_mass: float
    epsilon: float


def coherent_fock_coefficients(spec: ModelSpec, basis: FockBasis,
                               epsilon: float, z: FieldAmplitudes):
    """Truncated expansion of the displaced vacuum with per-mode displacement
    sqrt(w_j) z_j / sqrt(eps); returns (coefficients, discarded tail mass)."""
    z.require_gauge("z")
    alpha = np.sqrt(spec.modes.weights) * z.values / np.sqrt(epsilon)
    n = basis.states  # (dim, K)
    mag = np.abs(alpha)
    safe_log = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), 0.0)
    log_abs = n @ safe_log - 0.5 * gammaln(n + 1).sum(axis=1) \
        - 0.5 * np.sum(mag ** 2)
    dead = np.any((n > 0) & (mag[None, :] == 0), axis=1)
    log_abs[dead] = -np.inf
    phase = np.exp(1j * (n @ np.angle(alpha)))
    coeffs = np.exp(log_abs) * phase
    tail = max(0.0, 1.0 - float(np.sum(np.abs(coeffs) ** 2)))
    return coeffs, tail


def coherent_product_state(spec: ModelSpec, basis: FockBasis, epsilon: float,
                           psi: WaveFunction, z: FieldAmplitudes,
                           tail_tol: float = COHERENT_TAIL_TOL) -> ProductState:
    psi.require_normalized()
    coeffs, tail = coherent_fock_coefficients(spec, basis, epsilon, z)
    if tail > tail_tol:
        nu = mode_norm(spec.modes, z.values) ** 2 / epsilon
        raise TruncationError(
            f"coherent tail mass {tail:.3e} above {tail_tol:g}; "
            f"need n_max >= {required_n_max(nu, tail_tol)}",
            required_n_max=required_n_max(nu, tail_tol))
    coeffs = coeffs / np.linalg.norm(coeffs)
    values = np.kron(psi.values, coeffs)
    return ProductState(values=values, psi=psi, fock_coeffs=coeffs,
                        tail_mass=tail, epsilon=epsilon)


@dataclass(frozen=True)
class TrialEnergy:
    energy: float
    gap: float
    tail_mass: float


def trial_energy(spec: ModelSpec, basis: FockBasis, epsilon: float,
                 psi: WaveFunction, z: FieldAmplitudes,
                 tail_tol: float = COHERENT_TAIL_TOL) -> TrialEnergy:
    """Expectation of the quantized Hamiltonian in the coherent product state
    and its distance from the classical-field energy at (psi, z)."""
    state = coherent_product_state(spec, basis, epsilon, psi, z, tail_tol)
    h = assemble_h_eps(spec, basis, epsilon)
    vec = state.values
    energy = float((np.vdot(vec, h @ vec) * spec.grid.measure).real)
    gap = abs(energy - qc_energy(spec, psi, z))
    return TrialEnergy(energy=energy, gap=gap, tail_mass=state.tail_mass)


# ---------------------------------------------------------------------------
# epsilon sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    energy: float
    abs_err: float
    n_max: int
    tail_indicator: float
    reliable: bool


@dataclass(frozen=True, eq=False)
class SweepReport:
    rows: tuple[SweepRow, ...]
    e_qc_ref: float
    monotone_ok: bool
    all_reliable: bool


def shell_rule_n_max(spec: ModelSpec, z_ref: FieldAmplitudes, epsilon: float,
                     tail_budget: float, min_shells: int = 4) -> int:
    """Cutoff for one sweep point: at least min_shells above the coherent
    occupation of the reference field, and deep enough that the discarded
    coherent mass stays under the budget."""
    nu = mode_norm(spec.modes, z_ref.values) ** 2 / epsilon
    return required_n_max(nu, tail_budget, min_shells=min_shells)


def epsilon_sweep(spec: ModelSpec, eps_list, e_qc_ref: float,
                  z_ref: FieldAmplitudes, n_max: int | None = None,
                  tail0: float = COHERENT_TAIL_TOL, min_shells: int = 4,
                  dimension_cap: int = DEFAULT_DIMENSION_CAP) -> SweepReport:
    """Ground energies of the quantized model along a decreasing eps list.

    Unless n_max is pinned, each point uses the shell rule with a tail budget
    tail0 * (eps/eps_0)^2: the budget shrinks quadratically so truncation
    stays subdominant to the linear-in-eps convergence being measured.  Rows
    whose ground vector leaves more than 1e-3 of its mass on the top shell
    are flagged unreliable; across reliable rows (top-shell mass <= 1e-6) the
    error sequence must be non-increasing within a 1e-8 slack.
    """
    eps = [float(e) for e in eps_list]
    if any(not 0.0 < e <= 1.0 for e in eps) \
            or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list must be strictly decreasing within (0, 1]")
    z_ref.require_gauge("z")
    rows = []
    for e in eps:
        if n_max is not None:
            cutoff = n_max
        else:
            budget = tail0 * (e / eps[0]) ** 2
            cutoff = shell_rule_n_max(spec, z_ref, e, budget, min_shells)
        basis = build_fock_basis(spec.n_modes, cutoff)
        h = assemble_h_eps(spec, basis, e, dimension_cap=dimension_cap)
        energy, vec = ground_energy_eps(h)
        grid_pts = spec.grid.total_points
        resh = np.abs(vec.reshape(grid_pts, basis.dim)) ** 2
        tail_ind = float(resh[:, basis.top_shell()].sum() / resh.sum())
        rows.append(SweepRow(epsilon=e, energy=energy,
                             abs_err=abs(energy - e_qc_ref), n_max=cutoff,
                             tail_indicator=tail_ind,
                             reliable=tail_ind <= UNRELIABLE_TAIL))
    checked = [r for r in rows if r.tail_indicator <= 1e-6]
    monotone = all(b.abs_err <= a.abs_err + MONOTONE_SLACK
                   for a, b in zip(checked, checked[1:]))
    return SweepReport(rows=tuple(rows), e_qc_ref=e_qc_ref,
                       monotone_ok=monotone,
                       all_reliable=all(r.reliable for r in rows))


def stability_lower_bound(spec: ModelSpec) -> float:
    """A-priori bound E_eps >= -N^2 sup||omega^(-1/2) lambda||^2 - sup||lambda||.

    Both sup-norms are over grid points of the weighted mode norm; valid for
    the linearly coupled families with a nonnegative external potential.
    """
    w = spec.modes.weights
    om = spec.dispersion.values
    table = spec.form_factor.table
    sup_lam = float(np.sqrt(np.max((np.abs(table) ** 2 @ w).real)))
    sup_weighted = float(np.sqrt(np.max((np.abs(table) ** 2 @ (w / om)).real)))
    n = spec.grid.n_particles
    return -(n ** 2) * sup_weighted ** 2 - sup_lam
