"""Command-line front end.

    sepoc <subcommand> --config <path> [--out <path>] [--seed <int>] [--threads <int>]

Subcommands: simulate, rescale-curve, solve-ref, solve-ocp, enumerate-sps,
sweep, validate.  Configuration is a single JSON document; the --out flag
overrides the configured output path.  Exit codes: 0 success, 1 usage error,
2 numeric failure, 3 I/O error.

Every emitted file is byte-reproducible for a fixed config: numbers are
written with 12 significant digits, lines end with \\n, and the JSON sidecar
echoing the configuration is written with sorted keys.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys as _sys

import numpy as np

from . import coupling, reference, validate as validate_mod
from .control import ControlPolynomial, CostFunction
from .core import integrate_controlled, lie_derivative_phi, observable_curve, rescaled_state
from .errors import SepocError
from .models import (Graph, adn_initial_state, adn_system, default_graph,
                     kuramoto_system, oa_initial_state, oa_system,
                     power_law_distribution, splay_state)
from .ocp import (KIND_EFFORT, KIND_MAX, KIND_TIME, OCProblem, SolverOptions,
                  enumerate_sps, solve_stationary)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    return format(float(x), ".12g")


def _load_config(path):
    if path is None:
        raise UsageError("--config is required")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise IOError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config root must be a JSON object")
    return cfg


def build_model(mcfg: dict):
    """Instantiate (system, z0) from the config's model block."""
    if not isinstance(mcfg, dict) or "type" not in mcfg:
        raise UsageError("model block must carry a 'type'")
    mtype = mcfg["type"]
    if mtype == "kuramoto":
        path = mcfg.get("graph")
        if path is None:
            g = default_graph()
        else:
            if not os.path.exists(path):
                raise IOError(f"graph file not found: {path}")
            g = Graph.from_file(path)
        sys_ = kuramoto_system(g)
        x0 = mcfg.get("x0")
        z0 = splay_state(g.n) if x0 is None else np.asarray(x0, dtype=float)
        if z0.size != g.n:
            raise UsageError(f"x0 needs {g.n} entries")
        return sys_, z0
    if mtype == "oa":
        M = int(mcfg.get("M", 10))
        gamma = float(mcfg.get("gamma", 2.2))
        degrees = np.asarray(mcfg.get("degrees", np.arange(1.0, M + 1.0)), dtype=float)
        dist = power_law_distribution(degrees, gamma)
        alpha0 = float(mcfg.get("alpha0", 0.1))
        return oa_system(dist), oa_initial_state(dist.M, alpha0)
    if mtype == "adn":
        M = int(mcfg.get("M", 5))
        gamma = float(mcfg.get("gamma", 2.2))
        if "rates" in mcfg:
            rates = np.asarray(mcfg["rates"], dtype=float)
        else:
            a0, da = float(mcfg.get("a0", 0.2)), float(mcfg.get("da", 0.4))
            rates = a0 + da * np.arange(M)
        dist = power_law_distribution(rates, gamma)
        return adn_system(dist), adn_initial_state(dist.M, float(mcfg.get("I0", 0.02)))
    raise UsageError(f"unknown model type {mtype!r}")


def _cost(cfg) -> CostFunction:
    tag = cfg.get("cost", "square")
    if tag == "square":
        return CostFunction.square()
    raise UsageError(f"only the 'square' cost is configurable, got {tag!r}")


def _problem(cfg, sys_, z0) -> OCProblem:
    p = cfg.get("problem")
    if not isinstance(p, dict) or "kind" not in p:
        raise UsageError("problem block with a 'kind' is required")
    solver = cfg.get("solver", {})
    return OCProblem(
        kind=p["kind"], sys=sys_, z0=z0, g=_cost(cfg),
        q=int(solver.get("q", 10)),
        T=p.get("T"), C1=p.get("C1"), phi_target=p.get("phi_target"),
        tol=float(solver.get("tol", 1e-10)),
    )


def _options(cfg) -> SolverOptions:
    s = cfg.get("solver", {})
    return SolverOptions(max_iters=int(s.get("max_iters", 100)))


def _tau_max(cfg) -> float:
    return float(cfg.get("problem", {}).get("tau_max", 40.0))


def _out_path(cfg, args, default_name):
    if args.out:
        return args.out
    return cfg.get("output", {}).get("path", default_name)


def _write_text(path, text):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _write_sidecar(path, cfg, args, extra=None):
    meta = {"config": cfg, "seed": args.seed, "subcommand": args.subcommand}
    if extra:
        meta.update(extra)
    _write_text(path + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _theory_record(kind, sys_, z0, g, T, C1, phi_target, tau_max):
    """Theory route: reference solution + coupling + multiplier map."""
    if kind == KIND_MAX:
        ref = reference.solve_budgeted_reach(T, C1, g)
        tau = T * ref.mu_star
        phi_h = lie_derivative_phi(sys_, rescaled_state(sys_, z0, tau))
        lam = reference.map_multipliers(kind, ref, phi_h)
        return {"mu_star": ref.mu_star, "T": T, "multipliers": list(lam),
                "phi_h": phi_h, "c2": None}
    res = coupling.solve_c2(sys_, z0, phi_target, tau_max)
    phi_h = res.phi_h_at_c2
    if kind == KIND_EFFORT:
        ref = reference.solve_prescribed_reach(T, res.c2, g)
        lam = reference.map_multipliers(kind, ref, phi_h)
        return {"mu_star": ref.mu_star, "T": T, "multipliers": list(lam),
                "phi_h": phi_h, "c2": res.c2}
    ref = reference.solve_min_horizon(C1, res.c2, g)
    lam = reference.map_multipliers(kind, ref, phi_h)
    return {"mu_star": ref.mu_star, "T": ref.T, "multipliers": list(lam),
            "phi_h": phi_h, "c2": res.c2}


def _sweep_values(cfg):
    sw = cfg.get("sweep")
    if not isinstance(sw, dict):
        raise UsageError("sweep block is required for the sweep subcommand")
    for key in ("parameter", "lo", "hi", "steps"):
        if key not in sw:
            raise UsageError(f"sweep block needs '{key}'")
    lo, hi, steps = float(sw["lo"]), float(sw["hi"]), int(sw["steps"])
    if not (lo < hi and steps >= 2):
        raise UsageError("sweep needs lo < hi and steps >= 2")
    return sw["parameter"], np.linspace(lo, hi, steps)


_MODEL_PARAMS = ("gamma", "alpha0", "I0", "a0", "da")
_PROBLEM_PARAMS = ("T", "C1", "phi_target")


def _sweep_point(cfg, param, value):
    """One sweep point: theory and numeric routes side by side."""
    pcfg = dict(cfg)
    model = dict(cfg["model"])
    problem = dict(cfg["problem"])
    if param in _MODEL_PARAMS:
        model[param] = value
    elif param in _PROBLEM_PARAMS:
        problem[param] = value
    else:
        raise UsageError(f"unknown sweep parameter {param!r}")
    pcfg["model"] = model
    pcfg["problem"] = problem
    sys_, z0 = build_model(model)
    prob = _problem(pcfg, sys_, z0)
    theory = _theory_record(prob.kind, sys_, z0, prob.g, prob.T, prob.C1,
                            prob.phi_target, _tau_max(pcfg))
    sp = solve_stationary(prob, options=_options(pcfg))
    mu_num = float(np.mean(sp.mu_values()))
    comps = [(theory["mu_star"], mu_num), (theory["T"], sp.T)]
    comps += list(zip(theory["multipliers"], sp.multipliers))
    disc = max(abs(a - b) / max(abs(a), 1e-12) for a, b in comps)
    lam_t = list(theory["multipliers"]) + [None]
    lam_n = list(sp.multipliers) + [None]
    return [value, theory["mu_star"], mu_num, theory["T"], sp.T,
            lam_t[0], lam_n[0], lam_t[1], lam_n[1],
            sp.objective, sp.phi_h, sp.kkt_residual, sp.positivity, disc]


_SWEEP_HEADER = ("value,mu_theory[1/t],mu_numeric[1/t],T_theory[t],T_numeric[t],"
                 "lam1_theory,lam1_numeric,lam2_theory,lam2_numeric,"
                 "objective,phi_h[1/t],kkt_residual,positive,max_rel_discrepancy")


def cmd_sweep(cfg, args):
    param, values = _sweep_values(cfg)
    path = _out_path(cfg, args, "sweep.csv")
    errors = []
    rows = {}

    def work(v):
        return v, _sweep_point(cfg, param, float(v))

    workers = max(1, args.threads)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futs = {pool.submit(work, v): float(v) for v in values}
        for fut in concurrent.futures.as_completed(futs):
            v = futs[fut]
            try:
                _, row = fut.result()
                rows[v] = row
            except (SepocError, ValueError) as exc:
                errors.append({"parameter": param, "value": v,
                               "error": type(exc).__name__, "message": str(exc)})
    lines = [f"parameter={param}", _SWEEP_HEADER]
    for v in sorted(rows):
        lines.append(",".join(_fmt(x) for x in rows[v]))
    _write_text(path, "\n".join(lines) + "\n")
    _write_sidecar(path, cfg, args, {"errors": sorted(errors, key=lambda e: e["value"])})
    for err in errors:
        print(json.dumps(err, sort_keys=True), file=_sys.stderr)
    return EXIT_NUMERIC if errors else EXIT_OK


def cmd_simulate(cfg, args):
    sys_, z0 = build_model(cfg.get("model", {}))
    ctrl = cfg.get("control")
    if not isinstance(ctrl, dict) or "coeffs" not in ctrl or "T" not in ctrl:
        raise UsageError("simulate needs a control block with coeffs and T")
    c = ControlPolynomial(np.asarray(ctrl["coeffs"], dtype=float), float(ctrl["T"]))
    samples = int(ctrl.get("samples", 201))
    tol = float(cfg.get("solver", {}).get("tol", 1e-10))
    traj = integrate_controlled(sys_, c, z0, c.T, tol,
                                t_eval=np.linspace(0.0, c.T, samples))
    lines = ["t," + ",".join(f"z{i}" for i in range(sys_.state_dim)) + ",phi"]
    for t, state in zip(traj.times, traj.states):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in state] + [_fmt(sys_.phi(state))]))
    path = _out_path(cfg, args, "simulate.csv")
    _write_text(path, "\n".join(lines) + "\n")
    _write_sidecar(path, cfg, args)
    return EXIT_OK


def cmd_rescale_curve(cfg, args):
    sys_, z0 = build_model(cfg.get("model", {}))
    curve_cfg = cfg.get("curve", {})
    tau_max = float(curve_cfg.get("tau_max", 10.0))
    dtau = float(curve_cfg.get("dtau", tau_max / 200.0))
    tol = float(cfg.get("solver", {}).get("tol", 1e-10))
    table = observable_curve(sys_, z0, tau_max, dtau, tol)
    lines = ["tau,phi,phi_h[1/tau]"]
    for row in table:
        lines.append(",".join(_fmt(v) for v in row))
    path = _out_path(cfg, args, "curve.csv")
    _write_text(path, "\n".join(lines) + "\n")
    _write_sidecar(path, cfg, args)
    return EXIT_OK


def cmd_solve_ref(cfg, args):
    g = _cost(cfg)
    p = cfg.get("problem", {})
    kind = p.get("kind")
    if kind == KIND_MAX:
        ref = reference.solve_budgeted_reach(float(p["T"]), float(p["C1"]), g)
    elif kind in (KIND_EFFORT, KIND_TIME):
        if "C2" in p:
            c2 = float(p["C2"])
        else:
            sys_, z0 = build_model(cfg.get("model", {}))
            c2 = coupling.solve_c2(sys_, z0, float(p["phi_target"]), _tau_max(cfg)).c2
        if kind == KIND_EFFORT:
            ref = reference.solve_prescribed_reach(float(p["T"]), c2, g)
        else:
            ref = reference.solve_min_horizon(float(p["C1"]), c2, g)
    else:
        raise UsageError(f"unknown problem kind {kind!r}")
    rec = {"problem": ref.problem, "mu_star": ref.mu_star, "T": ref.T,
           "lambda_ref": ref.lambda_ref, "lambda1_ref": ref.lambda1_ref,
           "lambda2_ref": ref.lambda2_ref, "gamma_star": ref.gamma_star,
           "root_count": ref.root_count}
    path = _out_path(cfg, args, "reference.json")
    _write_text(path, json.dumps(rec, indent=2, sort_keys=True) + "\n")
    _write_sidecar(path, cfg, args)
    return EXIT_OK


def cmd_solve_ocp(cfg, args):
    sys_, z0 = build_model(cfg.get("model", {}))
    prob = _problem(cfg, sys_, z0)
    theory = _theory_record(prob.kind, sys_, z0, prob.g, prob.T, prob.C1,
                            prob.phi_target, _tau_max(cfg))
    sp = solve_stationary(prob, options=_options(cfg))
    mu_num = float(np.mean(sp.mu_values()))
    rec = {"stationary_point": sp.to_json_dict(), "theory": theory,
           "mu_numeric_mean": mu_num,
           "mu_rel_discrepancy": abs(mu_num - theory["mu_star"]) / max(abs(theory["mu_star"]), 1e-12)}
    path = _out_path(cfg, args, "solution.json")
    _write_text(path, json.dumps(rec, indent=2, sort_keys=True) + "\n")
    _write_sidecar(path, cfg, args)
    return EXIT_OK


def cmd_enumerate(cfg, args):
    sys_, z0 = build_model(cfg.get("model", {}))
    prob = _problem(cfg, sys_, z0)
    dom = cfg.get("problem", {}).get("phi_domain", [0.01, 1.0])
    sps = enumerate_sps(prob, (float(dom[0]), float(dom[1])))
    rec = [sp.to_json_dict() for sp in sps]
    path = _out_path(cfg, args, "stationary_points.json")
    _write_text(path, json.dumps(rec, indent=2, sort_keys=True) + "\n")
    _write_sidecar(path, cfg, args)
    return EXIT_OK


def cmd_validate(cfg, args):
    results = validate_mod.run_all(seed=args.seed if args.seed is not None else 0)
    all_ok = True
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.name} ({r.seconds:.1f}s): {r.detail}")
        all_ok &= r.passed
    return EXIT_OK if all_ok else EXIT_NUMERIC


_COMMANDS = {
    "simulate": cmd_simulate,
    "rescale-curve": cmd_rescale_curve,
    "solve-ref": cmd_solve_ref,
    "solve-ocp": cmd_solve_ocp,
    "enumerate-sps": cmd_enumerate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = _Parser(prog="sepoc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=min(4, os.cpu_count() or 1))
    try:
        args = parser.parse_args(argv)
        cfg = {} if args.subcommand == "validate" and args.config is None else _load_config(args.config)
        return _COMMANDS[args.subcommand](cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except IOError as exc:
        print(f"io error: {exc}", file=_sys.stderr)
        return EXIT_IO
    except SepocError as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
