"""Propagation, stationary states, entropy production, and heat transport."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .generator import ThermoSpec, build_restricted_generator, kms_rates
from .liouville import devectorize, vectorize

log = logging.getLogger(__name__)

_DIAGONALIZABLE_COND = 1e8


class Propagator:
    """Evaluates exp(L t) for a fixed superoperator L at arbitrary t.

    Uses the eigendecomposition of L when its eigenvector matrix is well
    conditioned (cond < 1e8) and falls back to scaling-and-squaring
    otherwise.  Both routes agree to 1e-10 on diagonalizable input.
    """

    def __init__(self, superoperator):
        self.superoperator = np.asarray(superoperator, dtype=complex)
        if self.superoperator.ndim != 2 or self.superoperator.shape[0] != self.superoperator.shape[1]:
            raise ValueError(f"superoperator must be square, got {self.superoperator.shape}")
        evals, evecs = np.linalg.eig(self.superoperator)
        try:
            cond = float(np.linalg.cond(evecs))
        except np.linalg.LinAlgError:
            cond = math.inf
        if not math.isfinite(cond):
            cond = math.inf
        self.condition_number = cond
        self.diagonalizable = cond < _DIAGONALIZABLE_COND
        if self.diagonalizable:
            self._evals = evals
            self._evecs = evecs
            self._inv = np.linalg.inv(evecs)
        else:
            log.debug("eigenvector condition %.3e; using expm fallback", cond)

    def __call__(self, t):
        if self.diagonalizable:
            return (self._evecs * np.exp(self._evals * t)) @ self._inv
        return scipy.linalg.expm(self.superoperator * t)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list = field(repr=False)
    hermitization_defects: np.ndarray = field(repr=False)


def _check_density_matrix(rho, tol=1e-10):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"state must be square, got shape {rho.shape}")
    herm = np.linalg.norm(rho - rho.conj().T) / 2
    if herm > tol:
        raise ValueError(f"state is not Hermitian (defect {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"state trace is {tr}, expected 1")
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if min_eig < -tol:
        raise ValueError(f"state has negative eigenvalue {min_eig:.3e}")
    return (rho + rho.conj().T) / 2


def propagate(superoperator, rho0, times):
    """Evolve rho0 under exp(L t) for each t in times.

    States are re-Hermitized as (rho + rho^dag)/2; the defect removed at
    each step is recorded in the trajectory.
    """
    if hasattr(superoperator, "superoperator") and not isinstance(superoperator, Propagator):
        superoperator = superoperator.superoperator
    rho0 = _check_density_matrix(rho0)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    prop = superoperator if isinstance(superoperator, Propagator) else Propagator(superoperator)
    v0 = vectorize(rho0)
    states = []
    defects = np.empty(times.size)
    for idx, t in enumerate(times):
        rho = devectorize(prop(t) @ v0)
        defect = float(np.linalg.norm(rho - rho.conj().T) / 2)
        defects[idx] = defect
        states.append((rho + rho.conj().T) / 2)
    if defects.size and defects.max() > 1e-12:
        log.debug("max hermitization defect along trajectory: %.3e", defects.max())
    return Trajectory(times=times, states=states, hermitization_defects=defects)


@dataclass
class SteadyState:
    rho: np.ndarray
    unique: bool
    residual: float
    null_dimension: int


def steady_state(superoperator, null_tol=1e-10):
    """Stationary state from the smallest singular vector of L.

    Uniqueness is decided by counting singular values below
    null_tol * smax.  Raises LinAlgError when L has no null direction at
    that tolerance or the null direction is traceless.
    """
    if hasattr(superoperator, "superoperator"):
        superoperator = superoperator.superoperator
    l_mat = np.asarray(superoperator, dtype=complex)
    _, svals, vh = np.linalg.svd(l_mat)
    smax = svals[0] if svals.size else 0.0
    null_dim = int(np.sum(svals <= null_tol * max(smax, 1e-300)))
    if null_dim == 0:
        raise np.linalg.LinAlgError(
            f"no stationary state found: smallest singular value {svals[-1]:.3e} "
            f"exceeds {null_tol:.1e} * {smax:.3e}"
        )
    rho = devectorize(vh[-1].conj())
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr) < 1e-10:
        raise np.linalg.LinAlgError("stationary direction is traceless; generator is not trace preserving")
    rho = rho / tr
    residual = float(np.linalg.norm(l_mat @ vectorize(rho)))
    if residual > 1e-6 * max(smax, 1.0):
        raise np.linalg.LinAlgError(f"stationary state residual {residual:.3e} is too large")
    return SteadyState(rho=rho, unique=null_dim == 1, residual=residual, null_dimension=null_dim)


def heat_current(hamiltonian, dissipator, rho):
    """Energy flow tr(H_S D[rho]) for one bath's dissipator; positive means
    heat flows into the system."""
    h = np.asarray(hamiltonian, dtype=complex)
    d_rho = devectorize(np.asarray(dissipator, dtype=complex) @ vectorize(rho))
    return float(np.trace(h @ d_rho).real)


def relative_entropy(rho, sigma, support_cutoff=1e-12):
    """Quantum relative entropy S(rho || sigma) = tr(rho ln rho - rho ln sigma).

    Returns +inf when rho has weight above support_cutoff on the null
    space of sigma.  Eigenvalues are clipped at 1e-300 before logs.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    rho = (rho + rho.conj().T) / 2
    sigma = (sigma + sigma.conj().T) / 2
    p, u = np.linalg.eigh(rho)
    q, v = np.linalg.eigh(sigma)
    p = np.clip(p, 0.0, None)

    null_mask = q <= support_cutoff
    if np.any(null_mask):
        null_vecs = v[:, null_mask]
        weight = float(np.real(np.einsum("ij,jk,ki->", null_vecs.conj().T, rho, null_vecs)))
        if weight > support_cutoff:
            return math.inf

    entropy_term = float(np.sum(p[p > 0.0] * np.log(p[p > 0.0])))
    keep = ~null_mask
    overlaps = np.abs(u.conj().T @ v[:, keep]) ** 2
    log_q = np.log(np.clip(q[keep], 1e-300, None))
    cross_term = float(p @ overlaps @ log_q)
    return entropy_term - cross_term


@dataclass
class BathSpec:
    """One thermal bath attached to the system.

    Either give explicit downward_rates (level-pair keyed, as in
    ThermoSpec) or a rate_function gamma(omega) applied to every positive
    Bohr transition.  alpha adds dephasing, degenerate_mixing is passed
    through to the generator builder.
    """

    beta: float
    downward_rates: dict | None = None
    rate_function: object | None = None
    alpha: np.ndarray | None = None
    degenerate_mixing: dict | None = None
    label: str = "bath"


@dataclass
class TransportModel:
    hamiltonian: np.ndarray
    baths: list
    generators: list
    superoperator: np.ndarray


def _bath_rates(bath, basis):
    rates = dict(bath.downward_rates or {})
    if bath.rate_function is not None:
        tol = basis.spectrum.degeneracy_tol
        for k in range(basis.n_positive):
            tr = basis.transitions[k]
            if tr.omega <= tol:
                continue
            key = (tr.n, tr.m)
            if key not in rates:
                rates[key] = kms_rates(bath.rate_function, tr.omega, bath.beta).gamma_down
    return rates


def build_transport_model(hamiltonian, baths, degeneracy_tol=None):
    """Attach several thermal baths to one system Hamiltonian.

    Each bath contributes an independently constructed restricted
    dissipator; the total generator shares a single Hamiltonian part.
    """
    if not baths:
        raise ValueError("at least one bath is required")
    hamiltonian = np.asarray(hamiltonian, dtype=complex)
    generators = []
    from .liouville import assemble_superop, eigenoperator_basis

    basis = eigenoperator_basis(hamiltonian, degeneracy_tol)
    for bath in baths:
        spec = ThermoSpec(
            hamiltonian=hamiltonian,
            beta=bath.beta,
            downward_rates=_bath_rates(bath, basis),
            alpha=bath.alpha,
            degenerate_mixing=bath.degenerate_mixing,
            degeneracy_tol=degeneracy_tol,
        )
        generators.append(build_restricted_generator(spec))
    total = -1j * assemble_superop("commutator", hamiltonian)
    for gen in generators:
        total = total + gen.dissipator
    return TransportModel(
        hamiltonian=hamiltonian,
        baths=list(baths),
        generators=generators,
        superoperator=total,
    )


@dataclass
class TransportReport:
    steady: SteadyState
    currents: list
    current_sum: float
    max_coherence: float


def transport_steady_report(model):
    """Steady state of a multi-bath model with per-bath heat currents and
    the largest energy-basis coherence."""
    ss = steady_state(model.superoperator)
    currents = [
        heat_current(model.hamiltonian, gen.dissipator, ss.rho) for gen in model.generators
    ]
    vectors = model.generators[0].basis.spectrum.vectors
    rho_eig = vectors.conj().T @ ss.rho @ vectors
    off_diag = rho_eig - np.diag(np.diag(rho_eig))
    return TransportReport(
        steady=ss,
        currents=currents,
        current_sum=float(sum(currents)),
        max_coherence=float(np.max(np.abs(off_diag))),
    )
