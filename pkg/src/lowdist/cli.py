"""Command-line experiment harness.

Subcommands ``generate``, ``cluster``, ``analyze``, ``simulate``, ``approx``,
``sweep`` and ``accept``. Settings come from a ``key=value`` file given with
``--config`` and are overridden by flags. Exit status is 0 when all requested
work succeeded, 1 when it failed (or an acceptance criterion is red) and 2
for usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from . import __version__
from .clustering import (
    MpxParams,
    derandomized_start_times,
    mis_voronoi,
    mpx,
    read_clustering,
    singleton_clustering,
    write_clustering,
)
from .errors import LowDistError
from .graph import (
    Graph,
    gen_comb,
    gen_cycle,
    gen_grid,
    gen_path,
    gen_random_geometric,
    gen_random_regular,
    read_edgelist,
    write_edgelist,
)
from .metrics import CSV_HEADER, analyze, report_row
from .optimize import RESULT_CSV_HEADER, approx_solve, approx_solve_mpx
from .simkernel import CONGEST, LOCAL, RADIO, energy_report, format_trace

CLUSTER_ALGOS = ("mis-voronoi-zero", "mis-voronoi-uniform", "mpx", "mpx-ln-R", "derandomized", "singleton")
SIM_ALGOS = ("dist-mis-voronoi", "multi-scale", "ruling", "downcast", "upcast", "intercast")
APPROX_PROBLEMS = ("matching", "mis", "maxcut")
APPROX_MODES = ("randomized", "derandomized", "mpx")
MODELS = {"LOCAL": LOCAL, "CONGEST": CONGEST, "RADIO": RADIO, "RADIO-CONGEST": RADIO}


class UsageError(Exception):
    pass


# configuration


def read_config(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{k}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def merged_settings(args: argparse.Namespace) -> dict:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, val in vars(args).items():
        if key in ("config", "command", "func") or val is None:
            continue
        cfg[key] = val
    return cfg


def _split_list(val, cast) -> list:
    if isinstance(val, (list, tuple)):
        return [cast(x) for x in val]
    items = [x for x in str(val).replace(" ", "").split(",") if x]
    return [cast(x) for x in items]


def parse_graph_spec(spec: str, seed=None) -> Graph:
    """``family:key=value,...`` or the path of an edge-list file.

    Families: ``cycle:n``, ``path:n``, ``grid:dims=AxB[xC],torus=0|1``,
    ``comb:rows,cols``, ``rgg:n,k,radius``, ``regular:n,d``.
    """
    if os.path.exists(spec):
        return read_edgelist(spec)
    family, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise UsageError(f"graph parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    try:
        if family == "cycle":
            return gen_cycle(int(params["n"]))
        if family == "path":
            return gen_path(int(params["n"]))
        if family == "grid":
            dims = [int(x) for x in params["dims"].split("x")]
            return gen_grid(dims, torus=params.get("torus", "0") in ("1", "true", "yes"))
        if family == "comb":
            return gen_comb(int(params["rows"]), int(params["cols"]))
        if family == "rgg":
            return gen_random_geometric(int(params["n"]), int(params.get("k", 2)), float(params["radius"]), seed=seed)
        if family == "regular":
            return gen_random_regular(int(params["n"]), int(params["d"]), seed=seed)
    except KeyError as exc:
        raise UsageError(f"graph family {family!r} needs parameter {exc.args[0]!r}") from None
    raise UsageError(f"unknown graph family or missing file {spec!r}")


def _seed(cfg) -> int | None:
    return None if cfg.get("seed") in (None, "") else int(cfg["seed"])


def _require(cfg, key):
    if cfg.get(key) in (None, ""):
        raise UsageError(f"missing --{key.replace('_', '-')}")
    return cfg[key]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# clustering


def make_clustering(g: Graph, algo: str, R, seed=None, mis: str = "greedy-id"):
    if algo == "mis-voronoi-zero":
        return mis_voronoi(g, int(R), "zero", mis=mis, mis_seed=seed)
    if algo == "mis-voronoi-uniform":
        return mis_voronoi(g, int(R), "uniform", seed=seed, mis=mis, mis_seed=seed)
    if algo == "mpx":
        return mpx(g, MpxParams(float(R), "ln-n"), seed=seed)
    if algo == "mpx-ln-R":
        return mpx(g, MpxParams(float(R), "ln-R"), seed=seed)
    if algo == "derandomized":
        return derandomized_start_times(g, int(R))
    if algo == "singleton":
        return singleton_clustering(g, R)
    raise UsageError(f"unknown clustering algorithm {algo!r}")


def _csv_text(rows: Sequence[dict], header: Sequence[str], with_header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n")
    if with_header:
        w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def cmd_generate(cfg) -> int:
    g = parse_graph_spec(_require(cfg, "graph"), _seed(cfg))
    buf = io.StringIO()
    write_edgelist(g, buf)
    _emit(buf.getvalue(), cfg.get("out"))
    return 0


def cmd_cluster(cfg) -> int:
    seed = _seed(cfg)
    spec = _require(cfg, "graph")
    g = parse_graph_spec(spec, seed)
    algo = _require(cfg, "algo")
    c = make_clustering(g, algo, float(_require(cfg, "R")), seed, cfg.get("mis", "greedy-id"))
    c.validate(g)
    if cfg.get("out"):
        write_clustering(c, cfg["out"])
    rep = analyze(g, c, _opt_int(cfg, "sample_rows"), seed)
    sys.stdout.write(_csv_text([report_row(rep, spec, algo, seed, g.n, g.m)], CSV_HEADER))
    return 0


def _opt_int(cfg, key):
    return None if cfg.get(key) in (None, "") else int(cfg[key])


def cmd_analyze(cfg) -> int:
    spec = _require(cfg, "graph")
    g = parse_graph_spec(spec, _seed(cfg))
    c = read_clustering(_require(cfg, "clustering"))
    if c.n != g.n:
        raise LowDistError(f"clustering has {c.n} vertices, graph has {g.n}")
    c.validate(g)
    rep = analyze(g, c, _opt_int(cfg, "sample_rows"), _seed(cfg))
    text = _csv_text([report_row(rep, spec, cfg.get("algo", "file"), _seed(cfg) or "", g.n, g.m)], CSV_HEADER)
    _emit(text, cfg.get("out"))
    return 0


# simulation


def cmd_simulate(cfg) -> int:
    from .distalgo import DOWNCAST, INTERCAST, UPCAST, dist_cluster_op, dist_mis_voronoi, multi_scale, radio_cluster_op, ruling_hierarchy

    seed = _seed(cfg)
    g = parse_graph_spec(_require(cfg, "graph"), seed)
    algo = _require(cfg, "algo")
    model = MODELS.get(str(cfg.get("model", "LOCAL")).upper())
    if model is None:
        raise UsageError(f"unknown model {cfg.get('model')!r}")
    summary = {"algo": algo, "model": model, "n": g.n, "seed": seed}
    if algo == "dist-mis-voronoi":
        res = dist_mis_voronoi(g, int(_require(cfg, "R")), cfg.get("variant", "zero"), seed=seed, trace=bool(cfg.get("trace")))
        sim = res.run
        summary["clusters"] = res.clustering.cluster_count
    elif algo == "multi-scale":
        res = multi_scale(g, int(cfg.get("levels", 3)), cfg.get("mis", "luby"), seed)
        sim = res.combined_run()
        summary["energy_by_level"] = res.energy_by_level
    elif algo == "ruling":
        res = ruling_hierarchy(g, int(cfg.get("levels", 3)), model, seed)
        sim = res.run
        summary["level_sizes"] = [len(s) for s in res.levels]
    elif algo in ("downcast", "upcast", "intercast"):
        kind = {"downcast": DOWNCAST, "upcast": UPCAST, "intercast": INTERCAST}[algo]
        c = mis_voronoi(g, int(_require(cfg, "R")))
        if model == RADIO:
            _, sim, span = radio_cluster_op(kind, g, c, list(range(g.n)))
            summary["rounds_span"] = span
        else:
            sim = dist_cluster_op(kind, g, c, values={v: v for v in range(g.n)}, trace=bool(cfg.get("trace"))).run
    else:
        raise UsageError(f"unknown simulation {algo!r}")
    rep = energy_report(sim)
    summary.update(rounds=sim.rounds_used, messages=sim.messages, energy_max=rep.max, energy_mean=rep.mean)
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    if cfg.get("out"):
        _emit(_csv_text([{"vertex": v, "energy": e} for v, e in rep.table()], ("vertex", "energy")), cfg["out"])
    if cfg.get("trace") and sim.trace is not None:
        _emit(format_trace(sim), cfg["trace"])
    return 0


# approximation


def solve_one(g: Graph, problem: str, eps: float, mode: str, seed, cap: int = 64):
    if mode == "mpx":
        return approx_solve_mpx(problem, g, eps, seed=seed, cap=cap)
    return approx_solve(problem, g, eps, mode, seed=seed, cap=cap)


def cmd_approx(cfg) -> int:
    seed = _seed(cfg) or 0
    g = parse_graph_spec(_require(cfg, "graph"), seed)
    problem = _require(cfg, "algo")
    if problem not in APPROX_PROBLEMS:
        raise UsageError(f"unknown problem {problem!r}")
    mode = cfg.get("mode", "randomized")
    eps = float(_require(cfg, "eps"))
    trials = int(cfg.get("trials", 1))
    if trials < 1:
        raise UsageError("trials must be at least 1")
    results = [solve_one(g, problem, eps, mode, seed + t) for t in range(trials)]
    sys.stdout.write(_csv_text([r.csv_row() for r in results], RESULT_CSV_HEADER))
    if cfg.get("out"):
        _emit("".join(r.to_json() + "\n" for r in results), cfg["out"])
    return 0


# sweeps


SWEEP_KEY = ("graph", "algorithm", "param", "trial", "seed")


def _sweep_cells(cfg) -> list[dict]:
    task = cfg.get("task", "cluster")
    spec = _require(cfg, "graph")
    algo = _require(cfg, "algo")
    trials = int(cfg.get("trials", 1))
    if trials < 1:
        raise UsageError("trials must be at least 1")
    base = _seed(cfg) or 0
    key = "R" if task == "cluster" else "eps"
    values = _split_list(_require(cfg, key), float)
    if not values:
        raise UsageError(f"empty sweep list for {key}")
    cells = []
    for x in values:
        for t in range(trials):
            cells.append({"task": task, "graph": spec, "algorithm": algo, "param": _fmt(x), "trial": t, "seed": base + t,
                          "mode": cfg.get("mode", "randomized"), "mis": cfg.get("mis", "greedy-id"),
                          "sample_rows": _opt_int(cfg, "sample_rows")})
    return cells


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def run_cell(cell: dict) -> dict:
    g = parse_graph_spec(cell["graph"], cell["seed"])
    ident = {k: cell[k] for k in SWEEP_KEY}
    if cell["task"] == "cluster":
        c = make_clustering(g, cell["algorithm"], float(cell["param"]), cell["seed"], cell["mis"])
        rep = analyze(g, c, cell["sample_rows"], cell["seed"])
        row = report_row(rep, cell["graph"], cell["algorithm"], cell["seed"], g.n, g.m)
    elif cell["task"] == "approx":
        row = solve_one(g, cell["algorithm"], float(cell["param"]), cell["mode"], cell["seed"]).csv_row()
    else:
        raise UsageError(f"unknown sweep task {cell['task']!r}")
    return {**ident, **{k: v for k, v in row.items() if k not in ident}}


def _sweep_header(task: str) -> list[str]:
    rest = CSV_HEADER if task == "cluster" else RESULT_CSV_HEADER
    return list(SWEEP_KEY) + [k for k in rest if k not in SWEEP_KEY]


def cmd_sweep(cfg) -> int:
    cells = _sweep_cells(cfg)
    header = _sweep_header(cells[0]["task"])
    out = cfg.get("out")
    done = set()
    if out and os.path.exists(out) and os.path.getsize(out) > 0:
        with open(out, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != header:
                raise UsageError(f"{out} has a different header; refusing to resume into it")
            done = {tuple(row[k] for k in SWEEP_KEY) for row in reader}
    todo = [c for c in cells if tuple(str(c[k]) for k in SWEEP_KEY) not in done]
    workers = int(cfg.get("workers", 1))
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = pool.map(run_cell, todo)
            _write_sweep(rows, header, out, fresh=not done)
    else:
        _write_sweep(map(run_cell, todo), header, out, fresh=not done)
    return 0


def _write_sweep(rows, header, out, fresh: bool) -> None:
    # rows arrive in config order; each is flushed so an interrupted sweep resumes cleanly
    fh = open(out, "a" if not fresh else "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        if fresh:
            w.writeheader()
        for r in rows:
            w.writerow(r)
            fh.flush()
    finally:
        if out:
            fh.close()


# acceptance


def cmd_accept(cfg) -> int:
    from .acceptance import run_all

    which = _split_list(cfg["only"], int) if cfg.get("only") else None
    results = run_all(which)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    if cfg.get("out"):
        rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail, "seconds": round(r.seconds, 2)} for r in results]
        _emit(json.dumps(rows, indent=2) + "\n", cfg["out"])
    return 0 if passed == len(results) else 1


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowdist", description="Low-distortion clustering experiments.")
    p.add_argument("--version", action="version", version=f"lowdist {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        sp.add_argument("--config", help="key=value settings file; flags override it")
        if graph:
            sp.add_argument("--graph", help="family:key=value,... or an edge-list file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    sp = sub.add_parser("generate", help="write a graph as an edge list")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("cluster", help="cluster a graph and print its metrics row")
    common(sp)
    sp.add_argument("--algo", choices=CLUSTER_ALGOS)
    sp.add_argument("--R", type=float)
    sp.add_argument("--mis", choices=("greedy-id", "luby"))
    sp.add_argument("--sample-rows", type=int)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("analyze", help="metrics of a clustering file")
    common(sp)
    sp.add_argument("--clustering")
    sp.add_argument("--algo")
    sp.add_argument("--sample-rows", type=int)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("simulate", help="run a distributed construction on the simulator")
    common(sp)
    sp.add_argument("--algo", choices=SIM_ALGOS)
    sp.add_argument("--R", type=int)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--model", type=str.upper, choices=sorted(MODELS))
    sp.add_argument("--variant", choices=("zero", "uniform"))
    sp.add_argument("--mis", choices=("greedy-id", "luby"))
    sp.add_argument("--trace", help="write the message trace to this file")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("approx", help="clustering-based approximation")
    common(sp)
    sp.add_argument("--algo", choices=APPROX_PROBLEMS)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--mode", choices=APPROX_MODES)
    sp.add_argument("--trials", type=int)
    sp.set_defaults(func=cmd_approx)

    sp = sub.add_parser("sweep", help="cross product of a parameter list and trials, one CSV row per run")
    common(sp)
    sp.add_argument("--task", choices=("cluster", "approx"))
    sp.add_argument("--algo")
    sp.add_argument("--R", help="comma-separated scales")
    sp.add_argument("--eps", help="comma-separated epsilons")
    sp.add_argument("--mode", choices=APPROX_MODES)
    sp.add_argument("--mis", choices=("greedy-id", "luby"))
    sp.add_argument("--trials", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--sample-rows", type=int)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("accept", help="run the acceptance criteria")
    common(sp, graph=False)
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.set_defaults(func=cmd_accept)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merged_settings(args)
        return args.func(cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except (LowDistError, ValueError, OSError) as exc:
        print(f"lowdist: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
