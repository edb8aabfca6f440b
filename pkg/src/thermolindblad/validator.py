"""Structural and thermodynamic audits for candidate generators.

Each check returns a CheckResult whose pass verdict is defect <= threshold;
what the defect measures is stated per check.  run_standard_checks bundles
the full battery and honors the THERMO_LINDBLAD_THREADS cap for parallel
evaluation.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Propagator, relative_entropy
from .liouville import assemble_superop, devectorize, hs_inner, vectorize
from .presets import thermal_state

DEFAULT_THRESHOLDS = {
    "commutation": 1e-10,
    "fixed_point": 1e-10,
    "cptp": 1e-10,
    "spectral": 1.0,
    "structure_support": 1e-10,
    "detailed_balance": 1e-10,
    "spohn": 1e-9,
}

CPTP_TIME_GRID = (1e-3, 1e-1, 1.0, 10.0, 100.0)

_RATE_FLOOR = 1e-300
_COND_NEAR_DEFECTIVE = 1e8
_STABILITY_TOL = 1e-10
_POPULATION_REALITY_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    defect: float
    threshold: float
    details: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    checks: list
    generator_label: str = ""

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def get(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _superop_of(obj):
    return obj.superoperator if hasattr(obj, "superoperator") else np.asarray(obj, dtype=complex)


def check_commutation(superoperator, hamiltonian, threshold=None):
    """Relative Frobenius defect of [free-evolution superoperator, L]."""
    threshold = DEFAULT_THRESHOLDS["commutation"] if threshold is None else threshold
    l_mat = _superop_of(superoperator)
    h_tilde = assemble_superop("commutator", hamiltonian)
    l_norm = np.linalg.norm(l_mat)
    if l_norm == 0:
        defect = 0.0
    else:
        defect = float(np.linalg.norm(h_tilde @ l_mat - l_mat @ h_tilde) / l_norm)
    return CheckResult(
        name="commutation",
        passed=defect <= threshold,
        defect=defect,
        threshold=threshold,
        details={"generator_norm": float(l_norm)},
    )


def _null_dimension(l_mat, rel_tol=1e-10):
    svals = np.linalg.svd(l_mat, compute_uv=False)
    smax = svals[0] if svals.size else 0.0
    return int(np.sum(svals <= rel_tol * max(smax, _RATE_FLOOR)))


def check_fixed_point(superoperator, hamiltonian, beta, threshold=None):
    """Residual norm of L applied to the Gibbs state at inverse temperature
    beta, with a zeroth-law uniqueness flag from the null-space dimension."""
    threshold = DEFAULT_THRESHOLDS["fixed_point"] if threshold is None else threshold
    l_mat = _superop_of(superoperator)
    rho_th = thermal_state(hamiltonian, beta)
    defect = float(np.linalg.norm(l_mat @ vectorize(rho_th)))
    null_dim = _null_dimension(l_mat)
    return CheckResult(
        name="fixed_point",
        passed=defect <= threshold,
        defect=defect,
        threshold=threshold,
        details={"null_dimension": null_dim, "unique": null_dim == 1, "beta": float(beta)},
    )


def choi_matrix(map_superoperator):
    """Reshuffle a map superoperator into its Choi matrix.

    Under column stacking, C[(i,k),(j,l)] = Lambda[(i,j),(k,l)]; the map is
    completely positive iff C is positive semidefinite.
    """
    lam = np.asarray(map_superoperator, dtype=complex)
    n = int(round(np.sqrt(lam.shape[0])))
    t = lam.reshape((n, n, n, n), order="F")
    return t.transpose(0, 2, 1, 3).reshape((n * n, n * n), order="F")


def check_cptp(superoperator, times=CPTP_TIME_GRID, threshold=None):
    """Complete positivity (Choi spectrum) and trace preservation of
    exp(L t) across a time grid; the defect is the worst violation."""
    threshold = DEFAULT_THRESHOLDS["cptp"] if threshold is None else threshold
    l_mat = _superop_of(superoperator)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("complete positivity is only audited at t >= 0")
    n2 = l_mat.shape[0]
    eye_vec = vectorize(np.eye(int(round(np.sqrt(n2)))))
    prop = Propagator(l_mat)
    min_eigs, tp_defects = [], []
    for t in times:
        lam = prop(t)
        choi = choi_matrix(lam)
        choi = (choi + choi.conj().T) / 2
        min_eigs.append(float(np.linalg.eigvalsh(choi).min()))
        tp_defects.append(float(np.linalg.norm(lam.conj().T @ eye_vec - eye_vec)))
    positivity = max(0.0, -min(min_eigs))
    trace_defect = max(tp_defects)
    defect = max(positivity, trace_defect)
    return CheckResult(
        name="cptp",
        passed=defect <= threshold,
        defect=defect,
        threshold=threshold,
        details={
            "times": [float(t) for t in times],
            "min_choi_eigenvalue": min(min_eigs),
            "choi_eigenvalues_by_time": min_eigs,
            "trace_defects_by_time": tp_defects,
        },
    )


def check_spectral(superoperator, basis=None, threshold=None):
    """Diagonalizability and stability of L.

    The defect is the worst of three normalized violations: eigenvector
    condition number against 1e8 (near-defectiveness), max real part of
    the spectrum against 1e-10, and, when an eigenoperator basis is
    supplied, the largest imaginary part of the population-block
    eigenvalues against 1e-9.  Raw numbers live in details.
    """
    threshold = DEFAULT_THRESHOLDS["spectral"] if threshold is None else threshold
    l_mat = _superop_of(superoperator)
    try:
        evals, evecs = np.linalg.eig(l_mat)
    except np.linalg.LinAlgError as exc:
        # an eigensolver failure is inconclusive, never a pass
        return CheckResult(
            name="spectral",
            passed=False,
            defect=math.inf,
            threshold=threshold,
            details={"inconclusive": True, "error": str(exc)},
        )
    try:
        cond = float(np.linalg.cond(evecs))
    except np.linalg.LinAlgError:
        cond = math.inf
    if not math.isfinite(cond):
        cond = math.inf
    max_re = float(evals.real.max())
    ratios = [cond / _COND_NEAR_DEFECTIVE, max_re / _STABILITY_TOL]
    details = {
        "condition_number": cond,
        "near_defective": not cond < _COND_NEAR_DEFECTIVE,
        "max_real_part": max_re,
        "eigenvalues": evals,
    }
    if basis is not None:
        projectors = basis.projectors
        block = np.empty((len(projectors), len(projectors)), dtype=complex)
        for j, pj in enumerate(projectors):
            image = devectorize(l_mat @ vectorize(pj))
            for i, pi in enumerate(projectors):
                block[i, j] = hs_inner(pi, image)
        pop_evals = np.linalg.eigvals(block)
        pop_imag = float(np.abs(pop_evals.imag).max())
        details["population_eigenvalues"] = pop_evals
        details["population_imag_max"] = pop_imag
        ratios.append(pop_imag / _POPULATION_REALITY_TOL)
    defect = float(max(max(ratios), 0.0))
    return CheckResult(
        name="spectral",
        passed=defect <= threshold,
        defect=defect,
        threshold=threshold,
        details=details,
    )


def _support_mask(basis):
    n_tr = len(basis.transitions)
    size = n_tr + len(basis.invariants)
    allowed = np.zeros((size, size), dtype=bool)
    allowed[n_tr:, n_tr:] = True
    group_of = {}
    for gid, group in enumerate(basis.degeneracy_groups):
        for k in group:
            group_of[k] = gid
    for i in range(n_tr):
        for j in range(n_tr):
            allowed[i, j] = group_of[i] == group_of[j]
    return allowed


def check_structure_support(dissipator, basis, threshold=None):
    """Leakage of the dissipator outside its allowed eigenoperator support.

    In the basis {transitions} + {invariants}, entries are allowed only
    within a Bohr-frequency degeneracy group or within the invariant
    sector; the defect is the Frobenius norm of everything else.
    """
    threshold = DEFAULT_THRESHOLDS["structure_support"] if threshold is None else threshold
    d_mat = np.asarray(dissipator, dtype=complex)
    ops = basis.full_basis()
    size = len(ops)
    overlap = np.empty((size, size), dtype=complex)
    for j, sj in enumerate(ops):
        image = devectorize(d_mat @ vectorize(sj))
        for i, si in enumerate(ops):
            overlap[i, j] = hs_inner(si, image)
    allowed = _support_mask(basis)
    disallowed = overlap[~allowed]
    defect = float(np.linalg.norm(disallowed))
    return CheckResult(
        name="structure_support",
        passed=defect <= threshold,
        defect=defect,
        threshold=threshold,
        details={
            "max_off_support": float(np.max(np.abs(disallowed))) if disallowed.size else 0.0,
            "on_support_norm": float(np.linalg.norm(overlap[allowed])),
        },
    )


def check_detailed_balance(generator, beta=None, threshold=None):
    """Gibbs ratio audit of a generator's jump-term list.

    Every positive-frequency jump must have an adjoint partner, and each
    pair must satisfy gamma_up = gamma_down exp(-beta omega); the defect
    is the worst relative mismatch.  Missing partners are structural
    failures (defect = inf).
    """
    threshold = DEFAULT_THRESHOLDS["detailed_balance"] if threshold is None else threshold
    beta = generator.beta if beta is None else beta
    terms = generator.jump_terms
    structural = []
    pairs = []
    matched = set()
    for i, term in enumerate(terms):
        if term.omega <= 0:
            continue
        partner = None
        adjoint = term.operator.conj().T
        for j, other in enumerate(terms):
            if j == i or j in matched:
                continue
            if abs(other.omega + term.omega) <= 1e-9 * max(1.0, abs(term.omega)):
                if np.linalg.norm(other.operator - adjoint) <= 1e-10 * max(1.0, np.linalg.norm(adjoint)):
                    partner = j
                    break
        if partner is None:
            structural.append(f"jump at omega={term.omega:.6g} has no adjoint partner")
            continue
        matched.add(partner)
        expected_up = term.rate * math.exp(-beta * term.omega)
        mismatch = abs(terms[partner].rate - expected_up) / max(term.rate, _RATE_FLOOR)
        pairs.append(
            {
                "omega": term.omega,
                "gamma_down": term.rate,
                "gamma_up": terms[partner].rate,
                "defect": mismatch,
            }
        )
    for j, other in enumerate(terms):
        if other.omega < 0 and j not in matched:
            structural.append(f"upward jump at omega={other.omega:.6g} has no downward partner")
        if other.omega == 0:
            structural.append("zero-frequency jump term present")
    defect = max((p["defect"] for p in pairs), default=0.0)
    if structural:
        defect = math.inf
    return CheckResult(
        name="detailed_balance",
        passed=not structural and defect <= threshold,
        defect=defect,
        threshold=threshold,
        details={"pairs": pairs, "structural_failures": structural, "beta": float(beta)},
    )


def spohn_monitor(trajectory, reference, slack=None):
    """Relative entropy to a reference state along a trajectory.

    Returns ([(t, S)], CheckResult): the check passes when S never
    increases by more than the per-step slack; steps where S is infinite
    (support violation) are marked inconclusive and skipped.
    """
    slack = DEFAULT_THRESHOLDS["spohn"] if slack is None else slack
    entropies = [relative_entropy(state, reference) for state in trajectory.states]
    series = list(zip([float(t) for t in trajectory.times], entropies))
    inconclusive = [i for i, s in enumerate(entropies) if not math.isfinite(s)]
    worst = 0.0
    compared = 0
    for k in range(len(entropies) - 1):
        if k in inconclusive or (k + 1) in inconclusive:
            continue
        worst = max(worst, entropies[k + 1] - entropies[k])
        compared += 1
    result = CheckResult(
        name="spohn",
        passed=worst <= slack,
        defect=float(worst),
        threshold=slack,
        details={"inconclusive_steps": inconclusive, "steps_compared": compared},
    )
    return series, result


def _thread_cap():
    raw = os.environ.get("THERMO_LINDBLAD_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_standard_checks(generator, times=CPTP_TIME_GRID, thresholds=None, max_workers=None, label=""):
    """Run the full audit battery on a constructed generator.

    thresholds maps check names to overrides.  Checks may run in parallel
    up to THERMO_LINDBLAD_THREADS (or max_workers); results are merged in
    a fixed order so reports are deterministic.
    """
    th = dict(thresholds or {})
    l_mat = generator.superoperator
    jobs = {
        "commutation": lambda: check_commutation(l_mat, generator.hamiltonian, th.get("commutation")),
        "fixed_point": lambda: check_fixed_point(
            l_mat, generator.hamiltonian, generator.beta, th.get("fixed_point")
        ),
        "cptp": lambda: check_cptp(l_mat, times, th.get("cptp")),
        "spectral": lambda: check_spectral(l_mat, generator.basis, th.get("spectral")),
        "structure_support": lambda: check_structure_support(
            generator.dissipator, generator.basis, th.get("structure_support")
        ),
        "detailed_balance": lambda: check_detailed_balance(
            generator, threshold=th.get("detailed_balance")
        ),
    }
    order = list(jobs)
    workers = _thread_cap() if max_workers is None else max(1, int(max_workers))
    if workers == 1:
        results = {name: job() for name, job in jobs.items()}
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {name: pool.submit(job) for name, job in jobs.items()}
            results = {name: fut.result() for name, fut in futures.items()}
    return ValidationReport(checks=[results[name] for name in order], generator_label=label)
