"""Command-line entry point: single simulations, convergence sweeps and
matrix dumps from a flat key=value config plus flag overrides.

Exit codes: 0 success, 2 config error, 3 numerical failure.  CSV output is
comma separated with a header row and 17-significant-digit floats; rerunning
the same config sequentially reproduces byte-identical files.
"""

import argparse
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis, driver
from .assembly import (ConformityWarning, assemble_boundary_pairing,
                       assemble_D, dump_matrix)
from .scenarios import SCENARIOS, get_scenario
from .timestepper import SolverError

DEFAULTS = {
    "scenario": "square",
    "q": "CG_1",
    "p": "CG_1",
    "boundary": "DG_0",
    "causality": "neumann",
    "n": 8,
    "levels": "4,8,16",
    "dt": None,
    "horizon": None,
    "quad_degree": None,
    "input_mode": "midpoint",
    "outdir": ".",
    "workers": 1,
}

INT_KEYS = {"n", "workers", "quad_degree"}
FLOAT_KEYS = {"dt", "horizon"}


class ConfigError(ValueError):
    pass


def read_config(path):
    """Flat 'key = value' file; '#' starts a comment."""
    out = {}
    try:
        with open(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError("%s:%d: expected key = value"
                                      % (path, lineno))
                key, value = (s.strip() for s in line.split("=", 1))
                if key not in DEFAULTS:
                    raise ConfigError("%s:%d: unknown key %r"
                                      % (path, lineno, key))
                out[key] = value
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    return out


def merge_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in INT_KEYS:
        if isinstance(cfg[key], str):
            cfg[key] = int(cfg[key])
    for key in FLOAT_KEYS:
        if isinstance(cfg[key], str):
            cfg[key] = float(cfg[key])
    return cfg


def parse_levels(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    levels = [int(s) for s in str(text).replace(" ", "").split(",") if s]
    if not levels:
        raise ConfigError("empty level list")
    return levels


def _families(cfg):
    qs = [s.strip() for s in cfg["q"].split(",") if s.strip()]
    ps = [s.strip() for s in cfg["p"].split(",") if s.strip()]
    bs = [s.strip() for s in cfg["boundary"].split(",") if s.strip()]
    return qs, ps, bs


def _scenario(cfg):
    name = cfg["scenario"]
    if name not in SCENARIOS:
        raise ConfigError("unknown scenario %r; available: %s"
                          % (name, ", ".join(sorted(SCENARIOS))))
    return get_scenario(name)


def cmd_simulate(cfg):
    scenario = _scenario(cfg)
    res = driver.run_simulation(
        scenario, cfg["n"], cfg["q"], cfg["p"], cfg["boundary"],
        dt=cfg["dt"], horizon=cfg["horizon"], causality=cfg["causality"],
        degree=cfg["quad_degree"], input_mode=cfg["input_mode"])
    ledger = analysis.energy_ledger(res.trace)
    os.makedirs(cfg["outdir"], exist_ok=True)
    energy_path = os.path.join(cfg["outdir"], "energy.csv")
    with open(energy_path, "w") as f:
        analysis.write_energy_csv(ledger, f)
    print("wrote %s (%d rows)" % (energy_path, ledger.t.size))
    if res.ex_samples:
        err_path = os.path.join(cfg["outdir"], "errors.csv")
        with open(err_path, "w") as f:
            f.write("t,EX,EH\n")
            eh = dict(res.eh_samples)
            for t, ex in res.ex_samples:
                f.write("%.17g,%.17g,%.17g\n" % (t, ex, eh.get(t, np.nan)))
        print("wrote %s" % err_path)
        print("EX(final) = %.6e" % res.ex_final)
    print("H(final) = %.6e, max |E - E0| = %.3e"
          % (ledger.H[-1], np.abs(ledger.E - ledger.E[0]).max()))
    return 0


def _sweep_task(task):
    (name, n, q, p, b, dt, horizon, causality, degree, input_mode) = task
    scenario = get_scenario(name)
    res = driver.run_simulation(scenario, n, q, p, b, dt=dt, horizon=horizon,
                                causality=causality, degree=degree,
                                input_mode=input_mode)
    eh = res.eh_final if res.eh_final is not None else np.nan
    return analysis.LevelResult(
        n=n, h=res.h, n_q=res.system.n_q, n_p=res.system.n_p,
        n_bnd=res.system.n_bnd, ex_final=res.ex_final, ex_max=res.ex_max,
        eh_final=eh)


def cmd_converge(cfg):
    scenario = _scenario(cfg)
    levels = parse_levels(cfg["levels"])
    if len(levels) < 3:
        raise ConfigError("need at least 3 mesh levels for a sweep")
    qs, ps, bs = _families(cfg)
    os.makedirs(cfg["outdir"], exist_ok=True)

    combos = [(q, p, b) for b in bs for p in ps for q in qs]
    tasks = {}
    for q, p, b in combos:
        for n in levels:
            tasks[(q, p, b, n)] = (
                scenario.name, n, q, p, b, cfg["dt"], cfg["horizon"],
                cfg["causality"], cfg["quad_degree"], cfg["input_mode"])

    results = {}
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            for key, res in zip(tasks, pool.map(_sweep_task,
                                                tasks.values())):
                results[key] = res
    else:
        for key, task in tasks.items():
            results[key] = _sweep_task(task)

    reports = {}
    for q, p, b in combos:
        report = analysis.ConvergenceReport(meta={
            "scenario": scenario.name, "q": q, "p": p, "boundary": b,
            "dt": cfg["dt"] if cfg["dt"] is not None else scenario.dt,
            "causality": cfg["causality"], "levels": levels})
        for n in levels:
            report.add(results[(q, p, b, n)])
        reports[(q, p, b)] = report
        path = os.path.join(cfg["outdir"],
                            "convergence_%s_%s_%s.csv" % (q, p, b))
        with open(path, "w") as f:
            report.write_csv(f)
    if len(combos) == 1:
        path = os.path.join(cfg["outdir"], "convergence.csv")
        with open(path, "w") as f:
            reports[combos[0]].write_csv(f)
        print("wrote %s" % path)

    for b in bs:
        print("\nEX slopes (boundary %s), q across, p down:" % b)
        _print_table(reports, qs, ps, b, "ex_slope")
        if any(not np.isnan(reports[(q, p, b)].levels[-1].eh_final)
               for q in qs for p in ps):
            print("EH slopes (boundary %s):" % b)
            _print_table(reports, qs, ps, b, "eh_slope")
    return 0


def _print_table(reports, qs, ps, b, attr):
    width = max(8, max(len(q) for q in qs) + 2)
    print("  %-8s" % b + "".join("%*s" % (width, q) for q in qs))
    for p in ps:
        row = []
        for q in qs:
            slope = getattr(reports[(q, p, b)], attr)
            row.append("exact" if slope is None else "%.2f" % slope)
        print("  %-8s" % p + "".join("%*s" % (width, v) for v in row))


def cmd_matrices(cfg):
    scenario = _scenario(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        system = driver.build_level(scenario, cfg["n"], cfg["q"], cfg["p"],
                                    cfg["boundary"], cfg["causality"],
                                    cfg["quad_degree"])
    os.makedirs(cfg["outdir"], exist_ok=True)
    named = {"M_q": system.M_q, "M_p": system.M_p, "M_bnd": system.M_bnd}
    if system.causality == "neumann":
        named["D"] = system.coupling
        named["B"] = system.control_op
    else:
        named["D_tilde"] = system.coupling
        named["B_tilde"] = system.control_op
    for name, A in named.items():
        with open(os.path.join(cfg["outdir"], name + ".txt"), "w") as f:
            dump_matrix(A, f)

    lines = []
    for name in ("M_q", "M_p", "M_bnd"):
        A = named[name]
        A = A.toarray() if hasattr(A, "toarray") else A
        try:
            np.linalg.cholesky(A)
            lines.append("%s: SPD (Cholesky ok), size %d" % (name, len(A)))
        except np.linalg.LinAlgError:
            lines.append("%s: NOT SPD" % name)
    J = system.extended_structure()
    skew = (J + J.T)
    skew_max = np.abs(skew.data).max() if skew.nnz else 0.0
    lines.append("skew: %.1e" % skew_max)
    if system.space_q.conformity == "Hdiv" and system.space_p.conformity == "H1":
        if system.causality == "neumann":
            from .assembly import assemble_dirichlet_blocks
            Dt, _ = assemble_dirichlet_blocks(
                system.space_q, system.space_p, system.boundary_space,
                system.quad_degree)
            D = system.coupling
        else:
            Dt = system.coupling
            D = assemble_D(system.space_q, system.space_p,
                           system.quad_degree)
        C = assemble_boundary_pairing(system.space_q, system.space_p,
                                      system.quad_degree)
        resid = (D - Dt - C)
        rmax = np.abs(resid.data).max() if resid.nnz else 0.0
        lines.append("green_identity_residual: %.3e" % rmax)
    for w in caught:
        if issubclass(w.category, ConformityWarning):
            lines.append("warning: %s" % w.message)
    report = "\n".join(lines) + "\n"
    with open(os.path.join(cfg["outdir"], "invariants.txt"), "w") as f:
        f.write(report)
    print(report, end="")
    return 0


def build_parser():
    defaults = ", ".join("%s=%s" % (k, v) for k, v in DEFAULTS.items()
                         if v is not None)
    parser = argparse.ArgumentParser(
        prog="phwave",
        description="Structure-preserving wave-equation simulator: "
                    "simulations, convergence sweeps and matrix dumps.",
        epilog="Config file keys equal the long flag names; defaults: %s; "
               "dt and horizon default to the scenario's recommendation."
               % defaults)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--scenario",
                       help="one of: %s" % ", ".join(sorted(SCENARIOS)))
        p.add_argument("--q", help="q-space family, e.g. RT_1 (lists ok)")
        p.add_argument("--p", help="p-space family, e.g. CG_1")
        p.add_argument("--boundary", help="boundary family, e.g. DG_0")
        p.add_argument("--causality", choices=["neumann", "dirichlet"])
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--horizon", type=float, help="final time")
        p.add_argument("--quad-degree", dest="quad_degree", type=int,
                       help="quadrature degree override")
        p.add_argument("--input-mode", dest="input_mode",
                       choices=["midpoint", "trapezoid"])
        p.add_argument("--outdir", help="output directory (default .)")

    p_sim = sub.add_parser("simulate", help="run one level, write energy.csv")
    common(p_sim)
    p_sim.add_argument("--n", type=int, help="mesh subdivisions")

    p_conv = sub.add_parser("converge", help="run a refinement sweep")
    common(p_conv)
    p_conv.add_argument("--levels", help="comma list of mesh levels")
    p_conv.add_argument("--workers", type=int,
                        help="parallel level workers (default 1)")

    p_mat = sub.add_parser("matrices", help="dump matrices and invariants")
    common(p_mat)
    p_mat.add_argument("--n", type=int, help="mesh subdivisions")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "converge":
            return cmd_converge(cfg)
        return cmd_matrices(cfg)
    except (ConfigError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except SolverError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
