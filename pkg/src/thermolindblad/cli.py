"""Command-line front end.

Each subcommand loads a JSON config, runs one experiment, and writes
report.json (plus trajectory.csv or tauscan.csv where applicable) into
the output directory.  Exit codes: 0 all requested checks pass, 1 a
check failed (report still written), 2 config parse or schema error,
3 physically inadmissible config, 4 numerical failure (partial report).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__, presets
from .composite import CompositeModel, build_strict_coupling, tau_expansion, theorem1_defect
from .config import (
    EXPERIMENTS,
    PhysicsError,
    RunConfig,
    SchemaError,
    TOLERANCE_NAMES,
    load_config,
    resolve_state,
)
from .dynamics import BathSpec, build_transport_model, propagate, steady_state, transport_steady_report
from .generator import flat_rate, ohmic_rate
from .liouville import hs_norm
from .reporting import to_jsonable, write_csv, write_report
from .validator import CheckResult, check_commutation, run_standard_checks, spohn_monitor

log = logging.getLogger(__name__)

_EXPERIMENT_DEFAULTS = {"theorem1": 1e-10, "tau_slope": 0.05, "tau_formula": 1e-6, "transport": 1e-10}


def _parse_tol_overrides(pairs):
    out = {}
    for pair in pairs or []:
        name, sep, value = pair.partition("=")
        if not sep:
            raise SchemaError(f"--tol expects name=value, got {pair!r}")
        if name not in TOLERANCE_NAMES:
            raise SchemaError(f"--tol: unknown name {name!r} (known: {', '.join(TOLERANCE_NAMES)})")
        try:
            tol = float(value)
        except ValueError:
            raise SchemaError(f"--tol {name}: {value!r} is not a number") from None
        if tol <= 0:
            raise SchemaError(f"--tol {name}: must be positive")
        out[name] = tol
    return out


def _bath_specs(cfg: RunConfig):
    specs = []
    for bath in cfg.baths:
        rate_function = None
        if bath.rate_function is not None:
            kind, kappa = bath.rate_function
            if kind == "flat":
                rate_function = flat_rate(kappa)
            else:
                try:
                    rate_function = ohmic_rate(kappa, bath.beta)
                except ValueError as exc:
                    raise PhysicsError(f"bath {bath.label!r}: {exc}") from None
        specs.append(
            BathSpec(
                beta=bath.beta,
                downward_rates=dict(bath.rates) or None,
                rate_function=rate_function,
                alpha=bath.alpha,
                label=bath.label,
            )
        )
    return specs


def _single_generator(cfg: RunConfig, command):
    if len(cfg.baths) != 1:
        raise SchemaError(
            f"{command} needs exactly one bath, got {len(cfg.baths)} "
            "(use the transport command for multi-bath configs)"
        )
    model = build_transport_model(cfg.system_hamiltonian, _bath_specs(cfg))
    return model.generators[0]


def _sorted_eigenvalues(matrix):
    evals = np.linalg.eigvals(matrix)
    return evals[np.lexsort((evals.imag, -evals.real))]


def _generator_summary(gen):
    return {
        "dim": gen.dim,
        "beta": gen.beta,
        "positive_bohr_frequencies": sorted({t.omega for t in gen.basis.transitions if t.omega > 0}),
        "jump_terms": [{"omega": t.omega, "rate": t.rate} for t in gen.jump_terms],
        "dephasing_weights": [t.weight for t in gen.dephasing_terms],
        "eigenvalues": _sorted_eigenvalues(gen.superoperator),
        "dissipator_norm": float(np.linalg.norm(gen.dissipator)),
    }


def _check_payload(result: CheckResult):
    return {
        "name": result.name,
        "passed": result.passed,
        "defect": result.defect,
        "threshold": result.threshold,
        "details": result.details,
    }


def _run_build(cfg, tolerances, seed, out_dir):
    gen = _single_generator(cfg, "build")
    return {"generator": _generator_summary(gen)}, [], True


def _run_validate(cfg, tolerances, seed, out_dir):
    gen = _single_generator(cfg, "validate")
    report = run_standard_checks(gen, thresholds=tolerances)
    return {"generator": _generator_summary(gen)}, report.checks, report.passed


def _run_evolve(cfg, tolerances, seed, out_dir):
    gen = _single_generator(cfg, "evolve")
    bath = cfg.baths[0]
    rho0 = resolve_state(cfg.evolve.initial_state, cfg.system_hamiltonian, bath.beta)
    trajectory = propagate(gen, rho0, cfg.evolve.times)
    steady = steady_state(gen.superoperator)
    if steady.unique:
        reference, reference_label = steady.rho, "steady_state"
    else:
        reference = presets.thermal_state(cfg.system_hamiltonian, bath.beta)
        reference_label = "thermal"
    series, spohn = spohn_monitor(trajectory, reference, slack=tolerances.get("spohn"))

    n = gen.dim
    header = ["t"]
    for i in range(n):
        for j in range(n):
            header += [f"rho_re_{i}{j}", f"rho_im_{i}{j}"]
    header += ["S_rel", "trace_defect"]
    rows = []
    for k, state in enumerate(trajectory.states):
        row = [trajectory.times[k]]
        for i in range(n):
            for j in range(n):
                row += [state[i, j].real, state[i, j].imag]
        row += [series[k][1], abs(np.trace(state).real - 1.0)]
        rows.append(row)
    write_csv(os.path.join(out_dir, "trajectory.csv"), header, rows)

    sections = {
        "steady_state": {
            "rho": steady.rho,
            "unique": steady.unique,
            "residual": steady.residual,
            "null_dimension": steady.null_dimension,
        },
        "entropy_reference": reference_label,
        "final_state": trajectory.states[-1],
        "max_hermitization_defect": float(np.max(trajectory.hermitization_defects)),
    }
    return sections, [spohn], spohn.passed


def _resolve_env_state(comp, h_env):
    if isinstance(comp.env_state, np.ndarray):
        state = comp.env_state.astype(complex)
        if abs(np.trace(state) - 1) > 1e-9:
            raise PhysicsError("env_state literal must have unit trace")
        if np.linalg.eigvalsh((state + state.conj().T) / 2).min() < -1e-9:
            raise PhysicsError("env_state literal must be positive semidefinite")
        return state
    if comp.env_state == "thermal":
        return presets.thermal_state(h_env, comp.env_beta)
    # equal superposition of the two lowest environment levels: stationary
    # only if they happen to be degenerate
    _, vectors = np.linalg.eigh(np.asarray(h_env, dtype=complex))
    v = (vectors[:, 0] + vectors[:, 1]) / np.sqrt(2.0)
    return np.outer(v, v.conj())


def _build_composite(cfg, comp, seed):
    h_sys = cfg.system_hamiltonian
    h_env = comp.env_hamiltonian
    ns, ne = h_sys.shape[0], h_env.shape[0]
    induces = None
    if isinstance(comp.coupling, np.ndarray):
        coupling = comp.coupling.astype(complex)
        if coupling.shape != (ns * ne, ns * ne):
            raise SchemaError(
                f"coupling literal must be {ns * ne}x{ns * ne} for this system/environment pair"
            )
        kind = "matrix"
    elif comp.coupling == "strict":
        coupling, induces = build_strict_coupling(
            h_sys, h_env, np.random.default_rng(seed), scale=comp.coupling_scale
        )
        kind = "strict"
    else:
        coupling = presets.adjacency_coupling(ns, ne, comp.coupling_scale)
        kind = "nonconserving"
    env_state = _resolve_env_state(comp, h_env)
    model = CompositeModel(
        system_hamiltonian=h_sys,
        env_hamiltonian=h_env,
        coupling=coupling,
        env_state=env_state,
    )
    witnesses = {
        "coupling_kind": kind,
        "coupling_commutation_defect": model.coupling_commutation_defect(),
        "env_stationarity_defect": model.env_stationarity_defect(),
        "mean_field_norm": hs_norm(model.mean_field_hamiltonian()),
    }
    if induces is not None:
        witnesses["induces_transitions"] = induces
    return model, witnesses


def _run_theorem1(cfg, tolerances, seed, out_dir):
    comp = cfg.composite_for("theorem1")
    model, witnesses = _build_composite(cfg, comp, seed)
    threshold = tolerances.get("theorem1", _EXPERIMENT_DEFAULTS["theorem1"])
    defects = [(float(t), theorem1_defect(model, t)) for t in comp.times]
    worst = max(d for _, d in defects)
    check = CheckResult(
        name="theorem1",
        passed=worst <= threshold,
        defect=worst,
        threshold=threshold,
        details={"defects_by_time": defects},
    )
    sections = {"composite": witnesses, "defects": defects}
    return sections, [check], check.passed


def _run_tau_scan(cfg, tolerances, seed, out_dir):
    comp = cfg.composite_for("tau-scan")
    model, witnesses = _build_composite(cfg, comp, seed)
    rho_s = resolve_state(comp.initial_state, cfg.system_hamiltonian, comp.env_beta)
    scan = tau_expansion(model, rho_s, taus=comp.taus)
    write_csv(
        os.path.join(out_dir, "tauscan.csv"),
        ["tau", "defect"],
        list(zip(scan.taus, scan.defects)),
    )
    strict_floor = all(d < 1e-13 for d in scan.defects)
    slope_tol = tolerances.get("tau_slope", _EXPERIMENT_DEFAULTS["tau_slope"])
    formula_tol = tolerances.get("tau_formula", _EXPERIMENT_DEFAULTS["tau_formula"])
    slope_defect = 0.0 if strict_floor else abs(scan.fitted_slope - 3.0)
    checks = [
        CheckResult(
            name="tau_slope",
            passed=strict_floor or slope_defect <= slope_tol,
            defect=slope_defect,
            threshold=slope_tol,
            details={"fitted_slope": scan.fitted_slope, "all_defects_at_floor": strict_floor},
        ),
        CheckResult(
            name="tau_formula",
            passed=scan.upsilon_relative_error <= formula_tol,
            defect=scan.upsilon_relative_error,
            threshold=formula_tol,
            details={
                "tau3_coefficient_norm": scan.tau3_coefficient,
                "upsilon_norm": float(np.linalg.norm(scan.upsilon)),
                "xi_norm": float(np.linalg.norm(scan.xi)),
                "xi_relative_error": scan.xi_relative_error,
            },
        ),
    ]
    sections = {
        "composite": witnesses,
        "scan": {
            "taus": scan.taus,
            "defects": scan.defects,
            "fitted_slope": scan.fitted_slope,
            "tau3_coefficient_norm": scan.tau3_coefficient,
            "upsilon_relative_error": scan.upsilon_relative_error,
            "xi_relative_error": scan.xi_relative_error,
        },
    }
    return sections, checks, all(c.passed for c in checks)


def _run_transport(cfg, tolerances, seed, out_dir):
    if len(cfg.baths) < 2:
        raise SchemaError(f"transport needs at least two baths, got {len(cfg.baths)}")
    model = build_transport_model(cfg.system_hamiltonian, _bath_specs(cfg))
    report = transport_steady_report(model)
    tol = tolerances.get("transport", _EXPERIMENT_DEFAULTS["transport"])
    commutation = check_commutation(
        model.superoperator, cfg.system_hamiltonian, tolerances.get("commutation")
    )
    first_law = CheckResult(
        name="first_law",
        passed=abs(report.current_sum) <= tol,
        defect=abs(report.current_sum),
        threshold=tol,
        details={"currents": dict(zip([b.label for b in model.baths], report.currents))},
    )
    coherence = CheckResult(
        name="energy_basis_coherence",
        passed=report.max_coherence <= tol,
        defect=report.max_coherence,
        threshold=tol,
        details={},
    )
    checks = [commutation, first_law, coherence]
    sections = {
        "steady_state": {
            "rho": report.steady.rho,
            "unique": report.steady.unique,
            "residual": report.steady.residual,
        },
        "currents": {b.label: q for b, q in zip(model.baths, report.currents)},
        "current_sum": report.current_sum,
        "max_coherence": report.max_coherence,
    }
    return sections, checks, all(c.passed for c in checks)


_HANDLERS = {
    "build": _run_build,
    "validate": _run_validate,
    "evolve": _run_evolve,
    "theorem1": _run_theorem1,
    "tau-scan": _run_tau_scan,
    "transport": _run_transport,
}


def _execute(args):
    cfg = load_config(args.config)
    tolerances = dict(cfg.tolerances)
    tolerances.update(_parse_tol_overrides(args.tol))
    if args.seed is not None and args.seed < 0:
        raise SchemaError("--seed must be nonnegative")
    seed = args.seed if args.seed is not None else cfg.seed
    out_dir = args.out or cfg.output or "."
    os.makedirs(out_dir, exist_ok=True)

    report = {
        "version": __version__,
        "experiment": args.command,
        "seed": seed,
        "config": to_jsonable(cfg),
        "tolerances_used": tolerances,
    }
    report_path = os.path.join(out_dir, "report.json")
    try:
        sections, checks, overall = _HANDLERS[args.command](cfg, tolerances, seed, out_dir)
    except np.linalg.LinAlgError as exc:
        report["error"] = str(exc)
        report["overall"] = False
        write_report(report_path, report)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    report.update(sections)
    report["checks"] = [_check_payload(c) for c in checks]
    report["overall"] = overall
    write_report(report_path, report)
    for c in checks:
        log.info("%s: %s (defect %.3e, threshold %.3e)", c.name, "pass" if c.passed else "FAIL", c.defect, c.threshold)
    return 0 if overall else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="thermolindblad",
        description="Build, audit, and stress-test thermodynamically restricted GKLS generators.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "build": "construct a restricted generator and report its structure",
        "validate": "run the full audit battery on a constructed generator",
        "evolve": "propagate an initial state and monitor relative entropy",
        "theorem1": "composite-system commutation test of the reduced map",
        "tau-scan": "small-time scaling of the map/free-evolution defect",
        "transport": "multi-bath steady state, currents, and coherence audit",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--out", default=None, help="output directory (default: config or cwd)")
        p.add_argument(
            "--tol",
            action="append",
            metavar="NAME=VALUE",
            help="override a tolerance; repeatable",
        )
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--verbose", action="store_true", help="log check results to stderr")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    try:
        return _execute(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhysicsError as exc:
        print(f"inadmissible config: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # library-level rejections (bad rates, non-Hermitian inputs, ...)
        print(f"inadmissible config: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
