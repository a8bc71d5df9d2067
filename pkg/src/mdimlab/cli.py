"""Batch front-end: JSON experiment configs in, CSV/JSON artifacts out.

Exit codes: 0 ok, 2 gating violation, 3 config or input error, 4 budget.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys as _sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tiling
from .core_metric import FiniteMetricSpace, PotentialField, default_grid, window_space
from .cover import covering_table, solver_limits
from .errors import BudgetExceeded, ConfigInvalid, FrostmanInfeasible, GatingViolation, MdimError
from .hausdorff import HausdorffQuery, dimh_search, frostman_measure, hausdorff_value
from .meandim import QUANTITIES, _summarize, local_formula_report, mdim_sweep
from .ratedist import (DEFAULT_BETAS, ba_sweep, orbit_codebook, rdim_estimate,
                       source_weights)
from .systems import cantor_net, product_measure, system_from_config
from .verify import SUITES

CONFIG_DIR = Path(__file__).parent / "configs"


@dataclass
class ExperimentConfig:
    system: dict | None
    quantities: list
    L_grid: list
    eps_grid: list
    seed: int
    beta_grid: list = field(default_factory=lambda: DEFAULT_BETAS.tolist())
    measures: list = field(default_factory=list)
    space: dict | None = None
    mode: str = "exact"
    params: dict = field(default_factory=dict)


def _grid(raw, name, positive=True):
    if not isinstance(raw, list) or not raw:
        raise ConfigInvalid(f"{name} must be a nonempty list")
    try:
        vals = [float(v) for v in raw]
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{name} must hold numbers") from None
    if positive and any(not v > 0 for v in vals):
        raise ConfigInvalid(f"{name} entries must be positive")
    return vals


def parse_config(raw: dict, seed: int | None = None, mode: str | None = None) -> ExperimentConfig:
    """Validate a config dict; command-line seed and mode override the file."""
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object")
    raw = dict(raw)
    quantities = raw.pop("quantities", list(QUANTITIES))
    if not isinstance(quantities, list) or not quantities:
        raise ConfigInvalid("quantity list is empty")
    unknown = [q for q in quantities if q not in QUANTITIES]
    if unknown:
        raise ConfigInvalid(f"unknown quantities {unknown}")
    L_grid = [int(v) for v in _grid(raw.pop("L_grid", [1]), "L_grid")]
    eps_grid = _grid(raw.pop("eps_grid", None), "eps_grid")
    file_seed = raw.pop("seed", None)
    seed = file_seed if seed is None else seed
    if seed is None:
        raise ConfigInvalid("a seed is required (config 'seed' or --seed)")
    betas = _grid(raw.pop("beta_grid", DEFAULT_BETAS.tolist()), "beta_grid", positive=False)
    mode = mode or raw.pop("mode", "exact")
    raw.pop("mode", None)
    if mode not in ("exact", "greedy"):
        raise ConfigInvalid(f"unknown mode {mode!r}")
    system, space = raw.pop("system", None), raw.pop("space", None)
    if system is None and space is None:
        raise ConfigInvalid("config needs a 'system' or a 'space'")
    measures = raw.pop("measures", [])
    for m in measures:
        if m.get("kind") not in ("product", "uniform"):
            raise ConfigInvalid(f"unknown measure kind {m.get('kind')!r}")
    return ExperimentConfig(system, quantities, L_grid, eps_grid, int(seed), betas, measures,
                            space, mode, raw)


def load_config(path, seed=None, mode=None) -> ExperimentConfig:
    p = Path(path)
    if not p.exists() and (CONFIG_DIR / p.name).exists():
        p = CONFIG_DIR / p.name
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigInvalid(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from None
    return parse_config(raw, seed, mode)


# ---------------------------------------------------------------- helpers

def _system(cfg: ExperimentConfig):
    if cfg.system is None:
        raise ConfigInvalid("this command needs a 'system' entry")
    return system_from_config(cfg.system)


def _space(cfg: ExperimentConfig):
    """(metric space, potential) from a 'space' entry, or None to use the system."""
    if cfg.space is None:
        return None
    kind = cfg.space.get("kind")
    if kind == "cantor":
        M = cantor_net(int(cfg.space.get("level", 4)))
    elif kind == "points":
        M = FiniteMetricSpace(np.asarray(cfg.space["dist"], float), float(cfg.space.get("rho0", 0.0)),
                              cfg.space.get("floor", "max"))
    else:
        raise ConfigInvalid(f"unknown space kind {kind!r}")
    return M, PotentialField(np.zeros(M.n))


def _measure(sys, spec):
    if spec.get("kind") == "uniform":
        q = int(sys.meta.get("q", 2))
        return product_measure(sys, np.full(q, 1.0 / q))
    return product_measure(sys, np.asarray(spec["marginal"], float))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, default=_jsonable)
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


class _Sink:
    """Writes artifacts into --out, or to stdout when no directory is given."""

    def __init__(self, out):
        self.out = Path(out) if out else None
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def emit(self, name, text):
        if self.out:
            (self.out / name).write_text(text, newline="")
        else:
            _sys.stdout.write(text)


def _fan(fn, items, threads):
    """Map fn over items, in input order; a process pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _prov(op, **cell):
    return op + "@" + ",".join(f"{k}={_fmt(v)}" for k, v in cell.items())


# ---------------------------------------------------------------- commands

def cmd_system(cfg, args, sink):
    sys = _system(cfg)
    info = dict(kind=sys.kind, d=sys.d, n=sys.n, rho0=sys.base_metric.rho0,
                floor=sys.base_metric.floor, fingerprint=sys.fingerprint, meta=sys.meta,
                potential_min=float(sys.potential.values.min()),
                potential_max=float(sys.potential.values.max()))
    sink.emit("system.json", to_json(info))
    return 0


def _cover_rows(job):
    sys_cfg, L, eps_grid, metric, mode, limit = job
    with solver_limits(limit):
        return covering_table(system_from_config(sys_cfg), None, [L], eps_grid, metric, mode)


def cmd_cover(cfg, args, sink):
    metric = cfg.params.get("metric", "sup")
    limit = cfg.params.get("time_limit")
    jobs = [(cfg.system, L, cfg.eps_grid, metric, cfg.mode, limit) for L in cfg.L_grid]
    _system(cfg)
    rows = [r for part in _fan(_cover_rows, jobs, args.threads) for r in part]
    for r in rows:
        r["provenance"] = _prov("cover.covering_number_potential", L=r["L"], eps=r["eps"])
    cols = ["L", "eps", "metric", "value", "log_value", "normalized", "optimal", "provenance"]
    sink.emit("cover.csv", to_csv(rows, cols))
    return 0


def _spaces(cfg):
    got = _space(cfg)
    if got is not None:
        return [(None, got[0], got[1])]
    sys = _system(cfg)
    out = []
    for L in cfg.L_grid:
        Q = window_space(sys, default_grid(sys, L), metric=cfg.params.get("metric", "sup"))
        out.append((L, Q.space, Q.phi))
    return out


def cmd_hausdorff(cfg, args, sink):
    s_list = cfg.params.get("s")
    rows = []
    for L, M, phi in _spaces(cfg):
        for eps in cfg.eps_grid:
            if s_list:
                for s in s_list:
                    v = hausdorff_value(HausdorffQuery(M, phi, eps, float(s)), cfg.mode)
                    rows.append(dict(L=L, eps=eps, s_or_dim=float(s), value=v, optimal=cfg.mode == "exact",
                                     provenance=_prov("hausdorff.hausdorff_value", L=L, eps=eps, s=s)))
            else:
                res = dimh_search(M, phi, eps, cfg.mode)
                rows.append(dict(L=L, eps=eps, s_or_dim="dim", value=res.value, optimal=res.optimal,
                                 provenance=_prov("hausdorff.dimh_at_scale", L=L, eps=eps)))
    sink.emit("hausdorff.csv", to_csv(rows, ["L", "eps", "s_or_dim", "value", "optimal", "provenance"]))
    return 0


def cmd_frostman(cfg, args, sink):
    M, phi = _spaces(cfg)[-1][1:]
    delta = float(cfg.params.get("delta", cfg.eps_grid[0]))
    if "t" in cfg.params:
        t = float(cfg.params["t"])
    else:
        t = float(cfg.params.get("t_factor", 0.9)) * dimh_search(M, phi, cfg.eps_grid[0], cfg.mode).value
    limit = int(cfg.params.get("exhaustive_max", 14))
    try:
        res = frostman_measure(M, delta, t, limit)
    except FrostmanInfeasible as exc:
        sink.emit("frostman.json", to_json(dict(feasible=False, t=t, delta=delta, optimum=exc.optimum,
                                                provenance=_prov("hausdorff.frostman_measure", delta=delta, t=t))))
        return 0
    out = dict(feasible=True, t=t, delta=delta, optimum=res.optimum,
               weights={str(i): float(w) for i, w in enumerate(res.nu.weights)},
               binding=res.binding, provenance=_prov("hausdorff.frostman_measure", delta=delta, t=t))
    sink.emit("frostman.json", to_json(out))
    return 0


def _rd_source(cfg):
    if "mu" in cfg.params and "rho" in cfg.params:
        return np.asarray(cfg.params["mu"], float), np.asarray(cfg.params["rho"], float), None
    sys = _system(cfg)
    if not cfg.measures:
        raise ConfigInvalid("rate-distortion commands need a measure")
    L = cfg.L_grid[0]
    cb = orbit_codebook(sys, L)
    return source_weights(cb, _measure(sys, cfg.measures[0]).weights), cb.rho, L


def cmd_radist(cfg, args, sink):
    mu, rho, L = _rd_source(cfg)
    betas = sorted(cfg.beta_grid)
    rows = [dict(beta=p.beta, D=p.D, R=p.R, converged=p.converged,
                 provenance=_prov("ratedist.ba_sweep", L=L, beta=p.beta))
            for p in ba_sweep(mu, rho, betas)]
    sink.emit("radist.csv", to_csv(rows, ["beta", "D", "R", "converged", "provenance"]))
    return 0


def cmd_rdim(cfg, args, sink):
    sys = _system(cfg)
    if not cfg.measures:
        raise ConfigInvalid("rdim needs a measure")
    mu = _measure(sys, cfg.measures[0])
    est = rdim_estimate(sys, mu, cfg.eps_grid, cfg.L_grid)
    rows = []
    for r in est["rows"]:
        for L, v in sorted(r["per_L"].items()):
            rows.append(dict(eps=r["eps"], L=L, R_per_volume=v, min_over_L=r["R"], ratio=r["ratio"],
                             provenance=_prov("ratedist.rdist_function", L=L, eps=r["eps"])))
    sink.emit("rdim.csv", to_csv(rows, ["eps", "L", "R_per_volume", "min_over_L", "ratio", "provenance"]))
    sink.emit("rdim.json", to_json(dict(slope=est["slope"], upper=est["upper"], lower=est["lower"],
                                        provenance="ratedist.rdim_estimate")))
    return 0


def _sweep_part(job):
    sys_cfg, L, eps_grid, mode, limit = job
    with solver_limits(limit):
        return mdim_sweep(system_from_config(sys_cfg), None, eps_grid, [L], mode)


def _sweep(cfg, threads):
    _system(cfg)
    limit = cfg.params.get("time_limit")
    parts = _fan(_sweep_part, [(cfg.system, L, cfg.eps_grid, cfg.mode, limit) for L in cfg.L_grid], threads)
    rows = [r for p in parts for r in p.rows if r["quantity"] in cfg.quantities]
    checks = [c for p in parts for c in p.checks]
    failed = [f for p in parts for f in p.failed_cells]
    return rows, checks, failed


def cmd_meandim(cfg, args, sink):
    rows, checks, failed = _sweep(cfg, args.threads)
    if args.action == "sweep":
        for r in rows:
            r["provenance"] = _prov("meandim.mdim_sweep", L=r["L"], eps=r["eps"], quantity=r["quantity"])
        sink.emit("meandim_sweep.csv",
                  to_csv(rows, ["L", "eps", "quantity", "value", "normalized", "optimal", "provenance"]))
        summary = {q: {k: v[k] for k in ("estimate", "cell", "optimal_flags", "extrapolated")}
                   for q, v in _summarize(rows).items()}
        sink.emit("meandim_summary.json", to_json(dict(quantities=summary, failed_cells=failed)))
    else:
        for c in checks:
            c["provenance"] = _prov("meandim.mdim_sweep", L=c["L"], eps=c["eps"], check=c["check"])
        sink.emit("meandim_verify.csv", to_csv(checks, ["L", "eps", "check", "lhs", "rhs", "ok", "provenance"]))
    if failed:
        raise _budget_or_gate(failed)
    bad = [c for c in checks if not c["ok"]]
    if bad:
        raise GatingViolation(f"{len(bad)} chain inequalities fail")
    return 0


def _budget_or_gate(failed):
    names = {f["error"] for f in failed}
    msg = f"{len(failed)} cells failed: {sorted(names)}"
    return BudgetExceeded(msg) if names & {"BudgetExceeded", "CapExceeded", "WindowExceeded"} else GatingViolation(msg)


def cmd_local(cfg, args, sink):
    sys = _system(cfg)
    delta = float(cfg.params.get("delta", 0.4))
    with solver_limits(cfg.params.get("time_limit")):
        rep = local_formula_report(sys, None, delta, cfg.eps_grid, cfg.L_grid, cfg.mode)
    rows = [dict(r, provenance=_prov("meandim.local_formula_report", delta=delta, eps=r["eps"]))
            for r in rep["rows"]]
    sink.emit("local.csv", to_csv(rows, ["eps", "local", "glob", "ratio", "ok", "fiber_size", "provenance"]))
    if not rep["trivial_direction"]:
        raise GatingViolation("local value exceeds the global value")
    return 0


def parse_tile_instance(raw: dict):
    """{A: [[lo, hi], ...], families: [[{corner, side}, ...], ...], eta, k0}."""
    try:
        boxes = raw["A"]
        lo = np.array([b[0] for b in boxes], float)
        hi = np.array([b[1] for b in boxes], float)
        if lo.ndim == 1:
            lo, hi = lo[:, None], hi[:, None]
        A = tiling.BoxUnion(lo, hi)
        fams = [[tiling.Cube(np.atleast_1d(np.asarray(c["corner"], float)), float(c["side"])) for c in F]
                for F in raw["families"]]
        eta = float(raw["eta"])
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ConfigInvalid(f"bad tiling instance: {exc}") from None
    return A, fams, eta, raw.get("k0")


def cmd_tile(cfg_path, args, sink):
    try:
        raw = json.loads(Path(cfg_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read tiling instance: {exc}") from None
    A, fams, eta, k0 = parse_tile_instance(raw)
    res = tiling.quasi_tile(A, fams, eta, k0)
    out = dict(cubes=[dict(corner=c.corner.tolist(), side=c.side) for c in res.cubes],
               leftover=res.leftover, bound=res.bound, covered=res.covered, k0=res.k0,
               measure_A=tiling.measure(A), hypotheses=res.hypotheses,
               provenance=_prov("tiling.quasi_tile", eta=eta, k0=res.k0))
    sink.emit("tile.json", to_json(out))
    return 0


VERIFY_COLUMNS = ["suite", "check", "instance", "lhs", "rhs", "ok", "gating", "provenance", "detail"]


def _run_suite(job):
    name, seed = job
    return SUITES[name](seed)


def cmd_verify(args, sink):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    parts = _fan(_run_suite, [(n, args.seed) for n in names], args.threads)
    rows = []
    for part in parts:
        for r in part:
            core = {k: r[k] for k in VERIFY_COLUMNS[:-1]}
            extra = {k: v for k, v in r.items() if k not in core}
            core["detail"] = extra or None
            rows.append(core)
    sink.emit(f"verify_{args.suite}.csv", to_csv(rows, VERIFY_COLUMNS))
    bad = [r for r in rows if r["gating"] and not r["ok"]]
    if bad:
        raise GatingViolation("gating checks fail: " + ", ".join(f"{r['suite']}/{r['check']}" for r in bad[:10]))
    return 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON); bundled names are looked up too")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--mode", choices=("exact", "greedy"), default=None)
    common.add_argument("--threads", type=int, default=1)
    p = argparse.ArgumentParser(prog="mdimlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("system", "cover", "hausdorff", "frostman", "radist", "rdim", "local", "tile"):
        sub.add_parser(name, parents=[common])
    md = sub.add_parser("meandim", parents=[common])
    md.add_argument("action", choices=("sweep", "verify"))
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--suite", default="all", choices=["all", *SUITES])
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sink = _Sink(args.out)
        if args.command == "verify":
            if args.seed is None:
                args.seed = 0
            return cmd_verify(args, sink)
        if not args.config:
            raise ConfigInvalid(f"{args.command} needs --config")
        if args.command == "tile":
            return cmd_tile(args.config, args, sink)
        cfg = load_config(args.config, args.seed, args.mode)
        handler = {"system": cmd_system, "cover": cmd_cover, "hausdorff": cmd_hausdorff,
                   "frostman": cmd_frostman, "radist": cmd_radist, "rdim": cmd_rdim,
                   "meandim": cmd_meandim, "local": cmd_local}[args.command]
        return handler(cfg, args, sink)
    except MdimError as exc:
        _sys.stderr.write(json.dumps(dict(exc.diagnostics(), exit_code=exc.code), sort_keys=True) + "\n")
        return exc.code
    except (ValueError, KeyError, TypeError) as exc:
        diag = dict(error="ConfigInvalid", message=f"{type(exc).__name__}: {exc}", exit_code=3)
        _sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
        return 3


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
