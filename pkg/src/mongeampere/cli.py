"""Command-line front end.

::

    mongeampere solve --problem P1 --h 0.1 --out run/
    mongeampere convergence --problem P1 --h 0.2 --h 0.1 --h 0.05 --out rates.csv
    mongeampere verify --seed 3
    mongeampere envelope --problem P4 --out star/

Exit codes: 0 success, 1 configuration error, 2 ``max_sweeps`` exhausted
(solve and convergence) or a failing suite (verify).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import Disk, Ellipse, EmptyInteriorError, NegativeDensityError, OutsideDomainError
from .envelope import build_envelope
from .problems import CATALOG, ProblemSpec, anisotropic_star, linf_error, rate_fit
from .solver import MaxSweepsExceeded, solve_nodal
from .subdiff import subdifferential
from .verify import FAULTS, SUITES, run_suites

log = logging.getLogger(__name__)

SCHEMA = "v1"
COLUMNS = ("h", "nodes", "error", "slope", "sweeps", "flips", "seconds")
ORDERS = ("lexicographic", "reversed", "random")
WARM_STARTS = ("newton", "none")


class ConfigError(ValueError):
    """Invalid command-line or problem configuration (exit code 1)."""


@dataclass
class RunConfig:
    problem: str = "P1"
    h_list: list = field(default_factory=list)
    tol_res: float = 1e-8
    tol_t: float | None = None
    sweep_order: str = "lexicographic"
    seed: int = 0
    max_sweeps: int = 10000
    output: str | None = None
    format: str = "csv"
    warm_start: str = "newton"

    def validate(self, need_h: bool = True) -> "RunConfig":
        if need_h and not self.h_list:
            raise ConfigError("at least one --h is required")
        if any(h <= 0 for h in self.h_list):
            raise ConfigError("spacings must be positive")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise ConfigError("--h values must be strictly decreasing")
        if self.tol_res <= 0 or (self.tol_t is not None and self.tol_t <= 0):
            raise ConfigError("tolerances must be positive")
        if self.sweep_order not in ORDERS:
            raise ConfigError(f"--order must be one of {ORDERS}")
        if self.max_sweeps < 1:
            raise ConfigError("--max-sweeps must be at least 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.warm_start not in WARM_STARTS:
            raise ConfigError(f"--warm-start must be one of {WARM_STARTS}")
        return self


# --------------------------------------------------------------------------
# problems from names or inline JSON


def _const(value):
    value = float(value)
    return lambda X: np.full(len(np.atleast_2d(X)), value)


def _domain_from(spec) -> object:
    if not isinstance(spec, dict):
        raise ConfigError("'domain' must be an object")
    kind = spec.get("type", "disk")
    center = tuple(float(c) for c in spec.get("center", (0.0, 0.0)))
    if kind == "disk":
        r = float(spec.get("radius", 1.0))
        if r <= 0:
            raise ConfigError("disk radius must be positive")
        return Disk(center, r)
    if kind == "ellipse":
        a, b = float(spec.get("a", 1.0)), float(spec.get("b", 0.5))
        if a <= 0 or b <= 0:
            raise ConfigError("ellipse semi-axes must be positive")
        return Ellipse(center, a, b)
    raise ConfigError(f"unknown domain type {kind!r}")


def parse_problem(text: str) -> ProblemSpec:
    """Catalog name (``P1``...) or an inline JSON object.

    The JSON form accepts ``domain`` (``{"type": "disk", "center", "radius"}``
    or ``{"type": "ellipse", "center", "a", "b"}``), a constant density
    ``f`` or point ``masses`` (``[[x, y, w], ...]``), constant boundary data
    ``g`` and ``base`` (a catalog name whose remaining fields are kept).
    """
    text = text.strip()
    if not text.startswith("{"):
        key = text.upper()
        if key in CATALOG:
            return CATALOG[key]
        raise ConfigError(f"unknown problem {text!r}; choose from {sorted(CATALOG)} or inline JSON")
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed problem JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise ConfigError("problem JSON must be an object")
    unknown = set(spec) - {"name", "base", "domain", "f", "masses", "g", "description"}
    if unknown:
        raise ConfigError(f"unknown problem keys {sorted(unknown)}")
    try:
        base = CATALOG[spec["base"].upper()] if "base" in spec else None
    except (KeyError, AttributeError):
        raise ConfigError(f"unknown base problem {spec.get('base')!r}") from None
    kw = {} if base is None else {k: getattr(base, k) for k in (
        "domain", "density", "masses", "dirichlet", "exact", "regularity", "lam", "Lam", "lam_f")}
    kw.setdefault("domain", Disk((0.0, 0.0), 1.0))
    changed = False
    try:
        if "domain" in spec:
            kw["domain"] = _domain_from(spec["domain"])
            changed = True
        if "f" in spec:
            if float(spec["f"]) < 0:
                raise ConfigError("density must be nonnegative")
            kw["density"], kw["masses"] = _const(spec["f"]), ()
            changed = True
        if "masses" in spec:
            masses = tuple(((float(x), float(y)), float(w)) for x, y, w in spec["masses"])
            if any(w < 0 for _, w in masses):
                raise ConfigError("masses must be nonnegative")
            kw["density"], kw["masses"] = None, masses
            changed = True
        if "g" in spec:
            kw["dirichlet"] = _const(spec["g"])
            changed = True
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad problem field: {exc}") from None
    if kw.get("density") is None and not kw.get("masses"):
        raise ConfigError("problem needs a density 'f' or 'masses'")
    if changed:
        # the exact solution of a base problem no longer applies
        kw["exact"] = None
    return ProblemSpec(name=str(spec.get("name", "custom")), description=spec.get("description", ""), **kw)


# --------------------------------------------------------------------------
# writers


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _solution_text(nodes, u) -> str:
    lines = [f"{i} {x:.17g} {y:.17g} {v:.17g}" for i, ((x, y), v) in enumerate(zip(nodes.points, u))]
    return "\n".join(lines) + "\n"


def _solve_one(problem: ProblemSpec, h: float, cfg: RunConfig):
    nodes = problem.nodes(h)
    rhs = problem.rhs(nodes)
    g = problem.boundary_values(nodes)
    return nodes, solve_nodal(nodes, rhs, g, tol_res=cfg.tol_res, tol_t=cfg.tol_t,
                              max_sweeps=cfg.max_sweeps, order=cfg.sweep_order, seed=cfg.seed,
                              warm_start=None if cfg.warm_start == "none" else cfg.warm_start)


# --------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig) -> int:
    cfg.validate()
    if len(cfg.h_list) != 1:
        raise ConfigError("solve takes exactly one --h")
    problem = parse_problem(cfg.problem)
    out = Path(cfg.output or ".")
    h = cfg.h_list[0]
    code = 0
    try:
        nodes, (u, mesh, report) = _solve_one(problem, h, cfg)
    except MaxSweepsExceeded as exc:
        nodes, u, report = exc.mesh.nodes, exc.values, exc.report
        code = 2
        print(f"error: {exc}", file=sys.stderr)
    payload = {"schema": SCHEMA, "problem": problem.name, "h": h, "nodes": int(nodes.N),
               "interior": int(nodes.n), **report.as_dict()}
    _atomic_write(out / "solution.txt", _solution_text(nodes, u))
    if cfg.format == "json":
        _atomic_write(out / "report.json", json.dumps(payload, indent=2) + "\n")
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = [k for k in payload if k != "value_change_history"]
        w.writerow(keys)
        w.writerow([payload[k] for k in keys])
        _atomic_write(out / "report.csv", buf.getvalue())
    return code


def _convergence_row(args):
    # the problem travels as text: catalog densities are lambdas and do not
    # pickle into worker processes
    text, h, cfg = args
    problem = parse_problem(text)
    t0 = time.perf_counter()
    try:
        nodes, (u, mesh, report) = _solve_one(problem, h, cfg)
    except MaxSweepsExceeded as exc:
        return {"h": h, "failed": str(exc)}
    err = linf_error(mesh, problem.exact)
    return {"h": h, "nodes": int(nodes.N), "error": err, "sweeps": report.sweeps,
            "flips": report.flip_count, "seconds": time.perf_counter() - t0}


def _threads() -> int:
    raw = os.environ.get("MA_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"MA_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("MA_THREADS must be at least 1")
    return n


def convergence_table(cfg: RunConfig):
    """Rows ``{h, nodes, error, slope, sweeps, flips, seconds}`` ordered by
    decreasing ``h`` and the fitted slope (None with fewer than two rows)."""
    problem = parse_problem(cfg.problem)
    if problem.exact is None:
        raise ConfigError(f"problem {problem.name!r} has no exact solution")
    jobs = [(cfg.problem, h, cfg) for h in cfg.h_list]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_convergence_row, jobs))
    else:
        rows = [_convergence_row(j) for j in jobs]
    rows.sort(key=lambda r: -r["h"])
    done = []
    for r in rows:
        if "failed" in r:
            break
        done.append(r)
        pairs = [(x["h"], x["error"]) for x in done]
        r["slope"] = rate_fit(pairs, min_pairs=2) if len(pairs) >= 2 else None
    slope = done[-1]["slope"] if done and len(done) == len(rows) else None
    return rows, slope


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def cmd_convergence(cfg: RunConfig) -> int:
    cfg.validate()
    rows, slope = convergence_table(cfg)
    failed = [r for r in rows if "failed" in r]
    good = [r for r in rows if "failed" not in r and "slope" in r]
    if cfg.format == "json":
        text = json.dumps({"schema": SCHEMA, "problem": cfg.problem, "rows": good,
                           "slope": slope, "failed": failed}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"# schema {SCHEMA}"])
        w.writerow(COLUMNS)
        for r in good:
            w.writerow([_fmt(r.get(c)) for c in COLUMNS])
        if slope is not None:
            w.writerow(["slope", _fmt(slope)])
        text = buf.getvalue()
    if cfg.output:
        _atomic_write(Path(cfg.output), text)
    else:
        sys.stdout.write(text)
    for r in failed:
        print(f"error: h={r['h']}: {r['failed']}", file=sys.stderr)
    return 2 if failed else 0


def cmd_verify(seed: int = 0, suites=None, fault=None, quick: bool = False,
               output=None, fmt: str = "csv") -> int:
    if fault is not None and fault not in FAULTS:
        raise ConfigError(f"unknown fault {fault!r}; choose from {FAULTS}")
    for s in suites or ():
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {sorted(SUITES)}")
    results = run_suites(seed=seed, names=suites or None, fault=fault, quick=quick)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.cases} cases, "
              f"{r.failures} failures {r.detail}".rstrip())
    if output:
        rows = [r.as_dict() for r in results]
        if fmt == "json":
            text = json.dumps({"schema": SCHEMA, "seed": seed, "fault": fault, "suites": rows},
                              indent=2) + "\n"
        else:
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            text = buf.getvalue()
        _atomic_write(Path(output), text)
    return 0 if all(r.passed for r in results) else 2


def cmd_envelope(cfg: RunConfig) -> int:
    """Dump the envelope mesh and the subdifferential polygons.

    ``P4`` is the anisotropic star on a 7 x 7 lattice patch; other
    problems are solved first at the single given ``h``.
    """
    out = Path(cfg.output or ".")
    if cfg.problem.strip().upper() == "P4":
        nodes, u = anisotropic_star()
        mesh = build_envelope(nodes, u)
    else:
        cfg.validate()
        if len(cfg.h_list) != 1:
            raise ConfigError("envelope takes exactly one --h")
        try:
            nodes, (u, mesh, _) = _solve_one(parse_problem(cfg.problem), cfg.h_list[0], cfg)
        except MaxSweepsExceeded as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    out.mkdir(parents=True, exist_ok=True)
    mesh.dump(out / "envelope.txt")
    polys = []
    for i in range(nodes.n):
        sd = subdifferential(mesh, i)
        polys.append({"node": i, "x": nodes.points[i].tolist(), "value": float(u[i]),
                      "area": sd.area, "vertices": [list(p) for p in sd.polygon.vertices]})
    _atomic_write(out / "subdiff.json", json.dumps({"schema": SCHEMA, "nodes": polys}, indent=1) + "\n")
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, h_required: bool = True) -> None:
    p.add_argument("--problem", default="P1", help="catalog name or inline JSON")
    p.add_argument("--h", type=float, action="append", default=[], help="spacing (repeatable)")
    p.add_argument("--tol-res", type=float, default=1e-8)
    p.add_argument("--tol-t", type=float, default=None)
    p.add_argument("--order", default="lexicographic", choices=ORDERS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", type=int, default=10000)
    p.add_argument("--out", default=None)
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--warm-start", default="newton", choices=WARM_STARTS,
                   help="'none' runs the plain Perron iteration from the subsolution")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mongeampere", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="solve one problem at one spacing"))
    _common(sub.add_parser("convergence", help="error table over a ladder of spacings"))
    _common(sub.add_parser("envelope", help="dump envelope mesh and subdifferentials"))
    v = sub.add_parser("verify", help="run the property suites")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--suite", action="append", default=[], help="suite name (repeatable)")
    v.add_argument("--fault", default=None, help=f"inject a fault: {', '.join(FAULTS)}")
    v.add_argument("--quick", action="store_true", help="fewer cases per suite")
    v.add_argument("--out", default=None)
    v.add_argument("--format", default="csv", choices=("csv", "json"))
    return ap


def _config(ns) -> RunConfig:
    return RunConfig(problem=ns.problem, h_list=list(ns.h), tol_res=ns.tol_res, tol_t=ns.tol_t,
                     sweep_order=ns.order, seed=ns.seed, max_sweeps=ns.max_sweeps,
                     output=ns.out, format=ns.format, warm_start=ns.warm_start)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; the contract reserves 2
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "verify":
            return cmd_verify(ns.seed, ns.suite, ns.fault, ns.quick, ns.out, ns.format)
        cfg = _config(ns)
        if ns.command == "solve":
            return cmd_solve(cfg)
        if ns.command == "convergence":
            return cmd_convergence(cfg)
        return cmd_envelope(cfg)
    except (ConfigError, EmptyInteriorError, NegativeDensityError, OutsideDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
