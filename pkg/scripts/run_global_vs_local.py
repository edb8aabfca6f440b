"""Compare a local jump operator against the restricted construction on
two coupled qubits, across coupling strengths g.

The local generator damps the first qubit with sigma_minus (x) identity,
ignoring the coupling; the restricted construction uses eigenoperators of
the full Hamiltonian.  The audit defects show the local form drifting off
the thermodynamically compatible structure as g grows.
"""
import argparse
import sys

import numpy as np

from thermolindblad import (
    ThermoSpec,
    assemble_superop,
    build_restricted_generator,
    check_commutation,
    check_structure_support,
    eigenoperator_basis,
    presets,
    run_standard_checks,
)


def local_defects(g):
    h = presets.coupled_qubits(1.0, 1.0, g)
    jump = np.kron(presets.LOWER, np.eye(2))
    diss = assemble_superop("dissipator_term", jump)
    l_mat = -1j * assemble_superop("commutator", h) + diss
    comm = check_commutation(l_mat, h).defect
    support = check_structure_support(diss, eigenoperator_basis(h)).defect
    return comm, support


def global_report(g, beta):
    h = presets.coupled_qubits(1.0, 1.0, g)
    basis = eigenoperator_basis(h)
    rates = {(t.n, t.m): 1.0 for t in basis.transitions if t.omega > 0}
    gen = build_restricted_generator(
        ThermoSpec(hamiltonian=h, beta=beta, downward_rates=rates)
    )
    return run_standard_checks(gen, label=f"global g={g}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--couplings",
        type=float,
        nargs="+",
        default=[0.0, 0.05, 0.1, 0.2, 0.5],
        metavar="G",
    )
    parser.add_argument("--beta", type=float, default=1.0)
    args = parser.parse_args(argv)

    print(f"{'g':>6} {'local commutation':>18} {'local support':>14} {'global audit':>13}")
    for g in args.couplings:
        comm, support = local_defects(g)
        report = global_report(g, args.beta)
        failed = [c.name for c in report.checks if not c.passed]
        status = "all pass" if report.passed else f"FAIL {','.join(failed)}"
        print(f"{g:6.2f} {comm:18.3e} {support:14.3e} {status:>13}")
    print("\nlocal defects scale with g; the restricted construction stays compliant.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
