"""Batch experiment runner.

Every subcommand reads a configuration (a JSON file given with --config,
overridden by command-line flags), validates it completely, runs, and
writes a CSV table plus a ``<out>.json`` sidecar holding the configuration,
package versions and wall time.  Results depend only on the configuration
and the seed, never on the worker count.

Exit codes: 0 success, 2 configuration error, 3 internal invariant
violation.  Errors are reported as one JSON line on stderr.  A run that
fails after it started writing leaves ``<out>.failed`` next to the output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from typing import Callable

import numpy as np

from . import __version__, _rng, maps, netgraph, qec, routing
from .perc import _core, engine
from .perc import subgraph as sg
from .qstate import WernerLink

EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3
WORKERS_ENV = _rng.WORKERS_ENV

LATTICES: dict[str, Callable] = {
    "square": netgraph.gen_square,
    "triangular": netgraph.gen_triangular,
    "honeycomb": netgraph.gen_honeycomb,
    "cubic": netgraph.gen_cubic,
    "four-eight": netgraph.gen_four_eight,
}
MAPS = ("hierarchical-pure", "hierarchical-mixed", "centipede")


class ConfigError(ValueError):
    pass


# -- parsing helpers -----------------------------------------------------------


def parse_grid(text) -> list[float]:
    """``start:stop:step`` (inclusive), a comma list, or one number."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(t) for t in text.split(":")]
            if len(parts) != 3:
                raise ConfigError(f"grid {text!r} must be start:stop:step")
            a, b, s = parts
            if s <= 0 or b < a:
                raise ConfigError(f"grid {text!r} needs step > 0 and stop >= start")
            n = int(math.floor((b - a) / s + 1e-9)) + 1
            return [round(a + k * s, 12) for k in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse grid {text!r}") from None


def parse_ints(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(v) for v in text]
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse integer list {text!r}") from None


def _require(cfg, key):
    if cfg.get(key) is None:
        raise ConfigError(f"missing required setting '{key}'")
    return cfg[key]


def _in_unit(values, name):
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} value {v} outside [0, 1]")


def _positive(value, name):
    if int(value) < 1:
        raise ConfigError(f"{name} must be >= 1")
    return int(value)


# -- subcommands ----------------------------------------------------------------
# Each entry: (validate(cfg) -> plan, run(plan, workers) -> (header, rows, summary)).


def _v_fixpoint(cfg):
    kind = _require(cfg, "map")
    if kind not in MAPS:
        raise ConfigError(f"map must be one of {MAPS}")
    key = {"hierarchical-pure": "mu", "hierarchical-mixed": "x", "centipede": "E"}[kind]
    grid = parse_grid(cfg.get(key) or "0:1:0.01")
    _in_unit(grid, key)
    return {"map": kind, "key": key, "grid": grid, "tol": float(cfg.get("tol") or maps.DEFAULT_TOL)}


def _r_fixpoint(plan, workers):
    kind, key, tol = plan["map"], plan["key"], plan["tol"]
    rows = []
    for v in plan["grid"]:
        if kind == "hierarchical-pure":
            out = maps.iterate_to_fixed_point(lambda e: maps.hierarchical_pure_step(e, v), maps.PROBE_START,
                                              min(tol, 1e-12), keep_trajectory=False)
        elif kind == "hierarchical-mixed":
            out = maps.iterate_to_fixed_point(lambda y: maps.hierarchical_mixed_step(v, y), 1.0,
                                              min(tol, 1e-12), keep_trajectory=False)
        else:
            phi0 = 1.0 - v / 2.0
            out = maps.iterate_to_fixed_point(lambda e: maps.centipede_step(e, phi0), v, min(tol, 1e-12),
                                              keep_trajectory=False)
        rows.append([v, out.fixed_point, int(out.converged), out.iterations])
    if kind == "hierarchical-pure":
        mu_c, mu_star = maps.hierarchical_pure_criticals(tol)
        summary = {"mu_c": mu_c, "mu_star": mu_star, "E_c": maps.entanglement_from_mu(mu_c)}
    elif kind == "hierarchical-mixed":
        summary = {"x_c": maps.hierarchical_mixed_critical(tol), "x_c_closed_form": maps.mixed_critical_x()}
    else:
        summary = {"E_c": maps.centipede_critical(tol)}
    return [key, "fixed_point", "converged", "iterations"], rows, summary


def _lattice_plan(cfg):
    name = cfg.get("lattice") or "square"
    if name not in LATTICES:
        raise ConfigError(f"lattice must be one of {sorted(LATTICES)}")
    sizes = parse_ints(cfg.get("sizes") or cfg.get("L") or "16")
    for L in sizes:
        if L < 2:
            raise ConfigError("lattice sizes must be >= 2")
    kind = cfg.get("kind") or "bond"
    if kind not in ("bond", "site"):
        raise ConfigError("kind must be bond or site")
    return name, sizes, kind


def _v_percolate(cfg):
    name, sizes, kind = _lattice_plan(cfg)
    ps = parse_grid(_require(cfg, "p"))
    _in_unit(ps, "p")
    return {"lattice": name, "sizes": sizes, "kind": kind, "p": ps,
            "trials": _positive(cfg.get("trials") or 1000, "trials"), "seed": int(cfg.get("seed") or 0)}


PERC_HEADER = ["p", "theta", "stderr", "spanning", "L", "trials", "seed"]


def _r_percolate(plan, workers):
    rows = []
    for L in plan["sizes"]:
        net = LATTICES[plan["lattice"]](L)
        for p in plan["p"]:
            est = engine.theta_and_spanning(net, p, plan["trials"], plan["seed"], kind=plan["kind"],
                                            stream=f"percolate:{L}:{p!r}", workers=workers)
            rows.append([p, est.theta_hat, est.stderr, est.spanning_prob, L, est.trials, plan["seed"]])
    return PERC_HEADER, rows, {}


def _r_sweep(plan, workers):
    rows, ensembles = [], []
    for L in plan["sizes"]:
        net = LATTICES[plan["lattice"]](L)
        ens = engine.sweep_ensemble(net, plan["trials"], plan["seed"], plan["kind"], 0, f"sweep:{L}", str(L),
                                    workers=workers)
        ensembles.append(ens)
        theta = ens.canonical(plan["p"], engine.REF_WRAPS)
        span = ens.canonical(plan["p"], engine.WRAP_ANY)
        for p, th, sp in zip(plan["p"], theta, span):
            se = math.sqrt(max(th * (1.0 - th), 0.0) / ens.trials)
            rows.append([p, float(th), se, float(sp), L, ens.trials, plan["seed"]])
    summary = {}
    if len(ensembles) > 1:
        est = engine.threshold_from_ensembles(ensembles, min(plan["p"]), max(plan["p"]))
        summary = {"threshold": est.value, "uncertainty": est.uncertainty,
                   "crossings": {f"{a}-{b}": v for (a, b), v in est.crossings.items()}}
    return PERC_HEADER, rows, summary


def _qec_common(cfg, sizes_key):
    sizes = parse_ints(_require(cfg, sizes_key))
    for L in sizes:
        if L < 4 or L % 2:
            raise ConfigError("code sizes must be even and >= 4")
    ps = parse_grid(_require(cfg, "p"))
    _in_unit(ps, "p")
    backend = cfg.get("backend") or qec.DEFAULT_BACKEND
    if backend not in qec.BACKENDS or (backend == "pymatching" and qec.pymatching is None):
        raise ConfigError(f"matching backend {backend!r} unavailable")
    return {"sizes": sizes, "p": ps, "trials": _positive(cfg.get("trials") or 1000, "trials"),
            "seed": int(cfg.get("seed") or 0), "backend": backend}


def _v_threshold(cfg):
    if (cfg.get("lattice") or "square") != "square":
        raise ConfigError("threshold runs on the square torus only")
    plan = _qec_common(cfg, "sizes")
    if len(plan["sizes"]) < 2:
        raise ConfigError("threshold needs at least two sizes")
    return plan


def _qec_rows(plan, workers):
    rates = [qec.logical_error_rate(L, p, plan["trials"], plan["seed"], workers, plan["backend"])
             for L in plan["sizes"] for p in plan["p"]]
    rows = [[r.L, r.p, r.trials, r.failures, r.failure_rate, r.stderr] for r in rates]
    return rates, rows


def _r_threshold(plan, workers):
    rates, rows = _qec_rows(plan, workers)
    grid = np.asarray(plan["p"])
    found = {}
    curves = {L: np.array([r.failure_rate for r in rates if r.L == L]) for L in plan["sizes"]}
    sizes = sorted(plan["sizes"])
    for i in range(len(sizes)):
        for j in range(i + 1, len(sizes)):
            ya, yb = curves[sizes[i]], curves[sizes[j]]
            c = engine.crossing(lambda q: np.interp(q, grid, ya), lambda q: np.interp(q, grid, yb),
                                grid[0], grid[-1]) if len(grid) > 1 else None
            if c is not None:
                found[f"{sizes[i]}-{sizes[j]}"] = c
    main = found.get(f"{sizes[-2]}-{sizes[-1]}")
    vals = list(found.values())
    summary = {"threshold": main, "uncertainty": 0.5 * (max(vals) - min(vals)) if len(vals) > 1 else None,
               "crossings": found}
    return list(qec.CSV_FIELDS), rows, summary


def _v_decode(cfg):
    plan = _qec_common(cfg, "L")
    plan["debug_json"] = cfg.get("debug_json")
    plan["debug_trials"] = int(cfg.get("debug_trials") or 0)
    if plan["debug_trials"] < 0:
        raise ConfigError("debug_trials must be >= 0")
    return plan


def _r_decode(plan, workers):
    _, rows = _qec_rows(plan, workers)
    summary = {}
    if plan["debug_json"] and plan["debug_trials"]:
        recs = [qec.trial_debug(L, p, plan["seed"], t, plan["backend"])
                for L in plan["sizes"] for p in plan["p"] for t in range(plan["debug_trials"])]
        qec.dump_debug(plan["debug_json"], recs)
        summary["debug_json"] = plan["debug_json"]
    return list(qec.CSV_FIELDS), rows, summary


def _v_spp(cfg):
    mode = cfg.get("mode") or "region"
    if mode not in ("region", "multi"):
        raise ConfigError("mode must be region or multi")
    failure = cfg.get("failure") or "zero"
    if failure not in routing.FAILURE_MODES:
        raise ConfigError(f"failure must be one of {routing.FAILURE_MODES}")
    ys = parse_grid(cfg.get("y") or "0.34:1:0.01")
    for y in ys:
        if not 0.0 < y <= 1.0:
            raise ConfigError("y values must lie in (0, 1]")
    plan = {"mode": mode, "failure": failure, "y": ys}
    if mode == "region":
        plan["b"] = parse_grid(cfg.get("b") if cfg.get("b") is not None else "0,0.01,0.07,0.11,0.135")
        plan["a"] = parse_grid(cfg.get("a") or "0.01:1:0.01")
        if any(b < 0 for b in plan["b"]) or any(not 0 < a <= 1 for a in plan["a"]):
            raise ConfigError("need b >= 0 and a in (0, 1]")
    else:
        plan["n"] = parse_ints(cfg.get("n") or "1,2,4,8")
        plan["alpha"] = parse_grid(cfg.get("alpha") or "0.01:1:0.01")
        if any(n < 1 for n in plan["n"]) or any(not 0 < a <= 1 for a in plan["alpha"]):
            raise ConfigError("need n >= 1 and alpha in (0, 1]")
    return plan


def _r_spp(plan, workers):
    rows = []
    if plan["mode"] == "region":
        for b in plan["b"]:
            mask = routing.advantage_region(b, plan["a"], plan["y"], plan["failure"])
            for iy, y in enumerate(plan["y"]):
                for ia, a in enumerate(plan["a"]):
                    rows.append([a, b, y, int(mask[iy, ia])])
        return ["a", "b", "y", "advantage"], rows, {"failure": plan["failure"]}
    for n in plan["n"]:
        for y in plan["y"]:
            for al in plan["alpha"]:
                rows.append([n, al, y, int(routing.multi_spp_advantage(n, al, y, plan["failure"]))])
    return ["n", "alpha", "y", "advantage"], rows, {"failure": plan["failure"]}


def _v_route(cfg):
    plan = {"source": int(_require(cfg, "source")), "target": int(_require(cfg, "target")),
            "seed": int(cfg.get("seed") or 0)}
    if cfg.get("graph"):
        path = cfg["graph"]
        if not os.path.exists(path):
            raise ConfigError(f"graph file {path!r} not found")
        plan["graph"] = path
    else:
        er = cfg.get("er")
        if not er:
            raise ConfigError("route needs --graph or --er N:p")
        try:
            N, p = str(er).split(":")
            plan["er"] = (int(N), float(p))
        except ValueError:
            raise ConfigError("--er must look like N:p") from None
        x = float(cfg.get("werner_x") or 0.95)
        if not 0.0 < x <= 1.0:
            raise ConfigError("werner_x must lie in (0, 1]")
        plan["werner_x"] = x
    return plan


def _load_route_net(plan):
    if "graph" in plan:
        with open(plan["graph"]) as fh:
            text = fh.read()
        return netgraph.from_json(text) if text.lstrip().startswith("{") else netgraph.from_text(text)
    N, p = plan["er"]
    return netgraph.gen_er(N, p, _rng.trial_rng(plan["seed"], "route", 0), payload=WernerLink(plan["werner_x"]))


def _r_route(plan, workers):
    net = _load_route_net(plan)
    for v in (plan["source"], plan["target"]):
        if not 0 <= v < net.n:
            raise ConfigError(f"node {v} not in the graph")
    path = routing.best_swap_path(net, plan["source"], plan["target"])
    prod = routing.path_product(net, path)
    spp = routing.spp(net, plan["source"], plan["target"], search="best-gain")
    rows = [[plan["source"], plan["target"], len(path), prod, float(routing.werner_concurrence(prod)),
             spp.avg_concurrence, spp.baseline, "-".join(str(v) for v in path.nodes)]]
    return ["source", "target", "hops", "product", "concurrence", "spp_concurrence", "spp_baseline", "path"], rows, {}


def _v_emerge(cfg):
    names = [t for t in str(cfg.get("pattern") or "triangle").split(",") if t]
    try:
        pats = [sg.pattern(n) for n in names]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    Ns = parse_ints(cfg.get("N") or "200")
    for N in Ns:
        if not 2 <= N <= sg.MAX_HOST_NODES:
            raise ConfigError(f"N must lie in [2, {sg.MAX_HOST_NODES}]")
    zs = parse_grid(_require(cfg, "z"))
    if any(z > 0 for z in zs):
        raise ConfigError("z must be <= 0")
    return {"patterns": [p.name for p in pats], "N": Ns, "z": zs,
            "trials": _positive(cfg.get("trials") or 200, "trials"), "seed": int(cfg.get("seed") or 0)}


def _r_emerge(plan, workers):
    rows = []
    for name in plan["patterns"]:
        pat = sg.pattern(name)
        for N in plan["N"]:
            for z in plan["z"]:
                p = min(1.0, float(N) ** z)
                prob = sg.subgraph_emergence(N, p, pat, plan["trials"], plan["seed"], workers)
                rows.append([name, pat.n, pat.l, N, z, p, prob, plan["trials"], plan["seed"]])
    return ["pattern", "n", "l", "N", "z", "p", "probability", "trials", "seed"], rows, {}


COMMANDS = {
    "fixpoint": (_v_fixpoint, _r_fixpoint),
    "percolate": (_v_percolate, _r_percolate),
    "sweep": (_v_percolate, _r_sweep),
    "threshold": (_v_threshold, _r_threshold),
    "decode": (_v_decode, _r_decode),
    "spp": (_v_spp, _r_spp),
    "route": (_v_route, _r_route),
    "emerge": (_v_emerge, _r_emerge),
}


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qnet", description="Entanglement-distribution experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of settings; flags override it")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or all cores)")
        return p

    p = common(sub.add_parser("fixpoint", help="iterate a recursion map and locate its criticals"))
    p.add_argument("--map", choices=MAPS)
    p.add_argument("--mu")
    p.add_argument("--x")
    p.add_argument("--E")
    p.add_argument("--tol", type=float)

    for name, text in (("percolate", "direct percolation estimates at fixed p"),
                       ("sweep", "shared-uniform sweeps with canonical curves")):
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--lattice", choices=sorted(LATTICES))
        p.add_argument("--sizes", "--L", dest="sizes")
        p.add_argument("--p")
        p.add_argument("--trials", type=int)
        p.add_argument("--kind", choices=("bond", "site"))

    p = common(sub.add_parser("threshold", help="error-correction failure curves and their crossing"))
    p.add_argument("--lattice", choices=("square",))
    p.add_argument("--sizes")
    p.add_argument("--p")
    p.add_argument("--trials", type=int)
    p.add_argument("--backend", choices=qec.BACKENDS)

    p = common(sub.add_parser("decode", help="decode sampled errors on one torus size"))
    p.add_argument("--L")
    p.add_argument("--p")
    p.add_argument("--trials", type=int)
    p.add_argument("--backend", choices=qec.BACKENDS)
    p.add_argument("--debug-json", dest="debug_json")
    p.add_argument("--debug-trials", dest="debug_trials", type=int)

    p = common(sub.add_parser("spp", help="advantage regions of path purification"))
    p.add_argument("--mode", choices=("region", "multi"))
    p.add_argument("--failure", choices=routing.FAILURE_MODES)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--y")
    p.add_argument("--n")
    p.add_argument("--alpha")

    p = common(sub.add_parser("route", help="best swap path between two nodes"))
    p.add_argument("--graph", help="network file (text or JSON format)")
    p.add_argument("--er", help="random graph N:p instead of a file")
    p.add_argument("--werner-x", dest="werner_x", type=float)
    p.add_argument("--source", type=int)
    p.add_argument("--target", type=int)

    p = common(sub.add_parser("emerge", help="subgraph appearance in random graphs"))
    p.add_argument("--pattern")
    p.add_argument("--N")
    p.add_argument("--z")
    p.add_argument("--trials", type=int)
    return ap


META_KEYS = ("config", "out", "workers", "command")


def resolve_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    for key, val in vars(args).items():
        if key not in META_KEYS and val is not None:
            cfg[key] = val
    return cfg


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _versions():
    import networkx
    import scipy

    return {"qnet": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "networkx": networkx.__version__,
            "kernels": _core.BACKEND, "matching": qec.DEFAULT_BACKEND}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _error(code, kind, message):
    sys.stderr.write(json.dumps({"status": "error", "code": code, "kind": kind, "message": str(message)}) + "\n")
    return code


def _join_negative_values(argv):
    """Turn ``--z -1.5`` into ``--z=-1.5`` so argparse accepts negatives."""
    out, k = [], 0
    while k < len(argv):
        tok = argv[k]
        nxt = argv[k + 1] if k + 1 < len(argv) else None
        if tok.startswith("--") and "=" not in tok and nxt and len(nxt) > 1 and nxt[0] == "-" \
                and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        return _error(EXIT_CONFIG, "config", "invalid command line")
    out = args.out
    failed = f"{out}.failed" if out else None
    started = False
    try:
        cfg = resolve_config(args)
        workers = args.workers if args.workers is not None else _rng.default_workers()
        if workers < 1:
            raise ConfigError("workers must be >= 1")
        validate, execute = COMMANDS[args.command]
        plan = validate(cfg)
        if failed and os.path.exists(failed):
            os.remove(failed)
        started = True
        t0 = time.perf_counter()
        header, rows, summary = execute(plan, workers)
        wall = time.perf_counter() - t0
        text = render_csv(header, rows)
        meta = {"command": args.command, "config": cfg, "plan": plan, "summary": summary,
                "rows": len(rows), "versions": _versions(), "wall_time_s": wall}
        if out:
            tmp = f"{out}.tmp"
            with open(tmp, "w", newline="") as fh:
                fh.write(text)
            with open(f"{out}.json", "w") as fh:
                json.dump(_jsonable(meta), fh, indent=1, sort_keys=True)
            os.replace(tmp, out)
            report = sys.stdout
        else:
            sys.stdout.write(text)
            report = sys.stderr
        if summary:
            report.write(json.dumps(_jsonable(summary), sort_keys=True) + "\n")
        return EXIT_OK
    except (ConfigError, ValueError) as exc:
        code, kind = EXIT_CONFIG, "config"
        msg = exc
    except (qec.InvariantError, AssertionError, RuntimeError) as exc:
        code, kind = EXIT_INTERNAL, "internal"
        msg = exc
    if started and failed:
        with open(failed, "w") as fh:
            fh.write(json.dumps({"kind": kind, "message": str(msg)}) + "\n")
        if os.path.exists(f"{out}.tmp"):
            os.remove(f"{out}.tmp")
    return _error(code, kind, msg)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
