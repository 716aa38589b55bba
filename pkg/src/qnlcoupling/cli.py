"""Command-line driver: ``qnl <command> [--preset NAME | --config PATH] [flags]``.

Every command builds its outputs in memory and writes them only after the
whole computation succeeded, so a failed run leaves the output directory
untouched.

Exit codes: 0 success, 1 configuration error, 2 singular system, 3 failed ``--check``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import checks
from .assembly import ArrangementKind, assemble
from .config import RunConfig, check_output_dir
from .errors import ConfigurationError, SingularSystemError
from .experiments import (
    CSV_FLOAT,
    Forcing,
    boundary_layer_study,
    compare_direct_vs_compatible,
    convergence_study,
    gradient,
    max_principle_check,
    patch_test_report,
    singular_forcing_study,
    solve_problem,
)
from .kernels import make_kernel
from .linalg import inverse_positivity_check, positive_definiteness_check, symmetry_defect
from .report import Report
from .weights import WeightEvaluator

EXIT_OK, EXIT_CONFIG, EXIT_SINGULAR, EXIT_CHECK = 0, 1, 2, 3

COMMANDS = (
    "solve",
    "convergence",
    "patch-test",
    "properties",
    "compare-direct",
    "boundary-layer",
    "singular",
    "weights",
    "assemble",
)
DEFAULT_PRESET = {
    "convergence": "table1",
    "compare-direct": "direct_vs_compatible",
    "boundary-layer": "boundary_layer",
    "singular": "singular",
}
PATCH_FIELD = (3.0, 7.0)  # u = 3x + 7
PD_TRIALS = 50
WEIGHT_SAMPLES = 201


@dataclass
class RunResult:
    files: dict[str, str] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    check: checks.CriterionResult | None = None
    strict: bool = False  # set by --check

    @property
    def code(self) -> int:
        failed = self.check is not None and not self.check.passed
        return EXIT_CHECK if self.strict and failed else EXIT_OK


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _check_lines(result: checks.CriterionResult) -> list[str]:
    out = [f"{'PASS' if result.passed else 'FAIL'} {result.name} ({result.mode})"]
    for c in result.checks.checks:
        out.append(f"  {'ok ' if c.passed else 'bad'} {c.check} = {c.value:.6g} (threshold {c.threshold:.6g})")
    return out


# -- commands -------------------------------------------------------------

def _solve(cfg: RunConfig, res: RunResult, **_):
    for n in cfg.levels:
        cc = cfg.coupling(n)
        problem = cfg.problem(cc.h)
        u = solve_problem(cc, problem)
        mesh = cc.mesh
        x = mesh.domain_nodes
        v = u[mesh.offset : mesh.offset + mesh.last + 1]
        g = gradient(u, mesh)
        exact = problem.exact(x) if problem.has_exact else None
        rows = ["x,u,u_exact,grad_u"]
        for k in range(x.size):
            ex = "" if exact is None else CSV_FLOAT % exact[k]
            rows.append(f"{CSV_FLOAT % x[k]},{CSV_FLOAT % v[k]},{ex},{CSV_FLOAT % g[k]}")
        res.files[f"solution_N{n}.csv"] = "\n".join(rows) + "\n"


def _table_for(cfg: RunConfig) -> dict:
    matches = (
        cfg.forcing == Forcing.QUARTIC.value
        and cfg.arrangement == ArrangementKind.NONLOCAL_LOCAL.value
        and tuple(cfg.interfaces) == (0.0,)
        and cfg.ratio == 3
        and tuple(cfg.levels) == checks.TABLE_LEVELS
        and (cfg.x_left, cfg.x_right) == (-1.0, 1.0)
        and cfg.scheme == "compatible"
    )
    if not matches or cfg.kernel not in checks.REFERENCE_TABLES:
        raise ConfigurationError("--check needs the table1 or table2 preset settings")
    return checks.REFERENCE_TABLES[cfg.kernel]


def _convergence(cfg: RunConfig, res: RunResult, check: bool = False, **_):
    table = _table_for(cfg) if check else None
    problem = cfg.problem()
    if not problem.has_exact:
        raise ConfigurationError(f"{cfg.forcing} forcing has no exact solution to converge to")
    if cfg.ratio is None:
        raise ConfigurationError("convergence runs at fixed delta / h; set kernel.ratio")
    report = convergence_study(
        problem, cfg.kernel, cfg.ratio, cfg.levels, cfg.arrangement_obj(), cfg.scheme
    )
    res.files["convergence.csv"] = report.to_csv()
    if table is not None:
        res.check = checks.check_table(report, table, f"table_{cfg.kernel}")


def _patch_test(cfg: RunConfig, res: RunResult, **_):
    F, c = PATCH_FIELD
    rep = Report()
    for n in cfg.levels:
        sub = patch_test_report(cfg.coupling(n), F, c)
        for ch in sub.checks:
            rep.add(f"{ch.check}_N{n}", ch.value, ch.threshold, ch.passed)
    res.files["patch_test.json"] = dump_json(
        {"field": {"slope": F, "offset": c}, "checks": rep.to_list(), "pass": rep.passed}
    )
    res.check = checks.CriterionResult("patch_test", rep.passed, "fixed", rep)


def _properties(cfg: RunConfig, res: RunResult, **_):
    out = []
    ok = True
    for n in cfg.levels:
        cc = cfg.coupling(n)
        a = assemble(cc)
        rep = Report()
        rep.checks.extend(positive_definiteness_check(a, PD_TRIALS, cfg.seed).checks)
        rep.checks.extend(inverse_positivity_check(a).checks)
        rep.checks.extend(max_principle_check(cc, cfg.trials, cfg.seed, with_inverse=False).checks)
        ok = ok and rep.passed
        out.append({"N": n, "dimension": a.n, "symmetry_defect": symmetry_defect(a), "checks": rep.to_list()})
    res.files["properties.json"] = dump_json({"levels": out, "pass": ok})
    summary = Report()
    summary.add("all_property_checks", float(ok), 1.0, ok)
    res.check = checks.CriterionResult("properties", ok, "fixed", summary)


def _compare_direct(cfg: RunConfig, res: RunResult, check: bool = False, **_):
    if cfg.arrangement != ArrangementKind.NONLOCAL_LOCAL.value:
        raise ConfigurationError("compare-direct runs on a nonlocal_local arrangement")
    if cfg.ratio is None:
        raise ConfigurationError("compare-direct runs at fixed delta / h; set kernel.ratio")
    problem = cfg.problem()
    cmp = compare_direct_vs_compatible(problem, cfg.kernel, cfg.ratio, cfg.interfaces[0], cfg.levels)
    res.files["direct_vs_compatible.csv"] = cmp.to_csv()
    if check:
        res.check = checks.check_direct_comparison(cmp)


def _horizon(cfg: RunConfig) -> tuple[float, int]:
    n = cfg.levels[0]
    h = (cfg.x_right - cfg.x_left) / (2 * n)
    delta = cfg.delta if cfg.delta is not None else cfg.ratio * h
    cfg.ratio_for(n)
    if (cfg.x_left, cfg.x_right) != (-1.0, 1.0):
        raise ConfigurationError("curve studies are defined on (-1, 1)")
    return delta, n


def _lnl_interfaces(cfg: RunConfig) -> tuple[float, float]:
    if cfg.arrangement != ArrangementKind.LOCAL_NONLOCAL_LOCAL.value:
        raise ConfigurationError("curve studies take local_nonlocal_local interfaces")
    return tuple(cfg.interfaces)


def _curves(res: RunResult, study, prefix: str):
    for label in study.curves:
        res.files[f"{prefix}_{label}.csv"] = study.curve_csv(label)
    res.files[f"{prefix}_metrics.json"] = dump_json(study.metrics_list())


def _boundary_layer(cfg: RunConfig, res: RunResult, check: bool = False, **_):
    delta, n = _horizon(cfg)
    ifaces = _lnl_interfaces(cfg)
    study = boundary_layer_study(delta, n, cfg.kernel, ifaces)
    _curves(res, study, "boundary_layer")
    if check:
        half = boundary_layer_study(delta / 2, n, cfg.kernel, ifaces)
        res.files["boundary_layer_half_delta_metrics.json"] = dump_json(half.metrics_list())
        res.check = checks.check_boundary_layer(study, half)


def _singular(cfg: RunConfig, res: RunResult, check: bool = False, **_):
    delta, n = _horizon(cfg)
    if cfg.forcing != Forcing.SINGULAR.value:
        raise ConfigurationError("singular study needs problem.forcing = singular")
    s0 = cfg.params[0] if cfg.params else None
    study = singular_forcing_study(delta, n, _lnl_interfaces(cfg), cfg.kernel, s0)
    _curves(res, study, "singular")
    if check:
        res.check = checks.check_singular(study)


def _weights(cfg: RunConfig, res: RunResult, **_):
    delta, _ = _horizon(cfg)
    w = WeightEvaluator(make_kernel(cfg.kernel, delta))
    x = np.linspace(0.0, 1.25 * delta, WEIGHT_SAMPLES)
    om, dom = w.omega(x), w.omega_prime(x)
    rows = ["x,omega,omega_prime,a"]
    for k in range(x.size):
        # effective diffusion is only defined up to the horizon
        a = CSV_FLOAT % w.effective_diffusion(min(x[k], delta)) if x[k] <= delta else ""
        rows.append(f"{CSV_FLOAT % x[k]},{CSV_FLOAT % om[k]},{CSV_FLOAT % dom[k]},{a}")
    res.files["weights.csv"] = "\n".join(rows) + "\n"


def _assemble(cfg: RunConfig, res: RunResult, dump: bool = False, **_):
    n = cfg.levels[0]
    a = assemble(cfg.coupling(n))
    res.lines.append(f"N={n} dimension={a.n} half_band={a.half_band} norm_inf={a.norm_inf():.6e}")
    if dump:
        res.files["operator.txt"] = "".join(" ".join(CSV_FLOAT % v for v in row) + "\n" for row in a.dense())
        res.files["operator_regimes.txt"] = " ".join(g.value for g in a.regimes) + "\n"


HANDLERS = {
    "solve": _solve,
    "convergence": _convergence,
    "patch-test": _patch_test,
    "properties": _properties,
    "compare-direct": _compare_direct,
    "boundary-layer": _boundary_layer,
    "singular": _singular,
    "weights": _weights,
    "assemble": _assemble,
}


def run(command: str, config: RunConfig, *, check: bool = False, dump: bool = False) -> RunResult:
    """Compute the outputs of ``command`` without touching the filesystem."""
    if command not in HANDLERS:
        raise ConfigurationError(f"unknown command {command!r}")
    config.validate()
    res = RunResult(strict=check)
    try:
        HANDLERS[command](config, res, check=check, dump=dump)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from None
    if res.check is not None:
        res.lines.extend(_check_lines(res.check))
        res.files["check.json"] = dump_json(res.check.to_dict())
    return res


def write_outputs(files: dict[str, str], out_dir: str) -> list[str]:
    check_output_dir(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(files[name])
        paths.append(path)
    return paths


# -- argument parsing ------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _levels(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--N expects a comma-separated list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="YAML run configuration")
    src.add_argument("--preset", metavar="NAME", help="bundled configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--check", action="store_true", help="apply regression tolerances; exit 3 on failure")
    common.add_argument("--seed", type=int)
    common.add_argument("--scheme", choices=("compatible", "direct"))
    common.add_argument("--kernel", choices=("constant", "inverse_abs"))
    common.add_argument("--ratio", type=int, metavar="R", help="delta / h (replaces kernel.delta)")
    common.add_argument("--N", dest="levels", type=_levels, metavar="LIST", help="comma-separated half-grid sizes")

    parser = _Parser(prog="qnl", description="Quasinonlocal coupling of nonlocal and local diffusion in 1D.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "assemble":
            p.add_argument("--dump", action="store_true", help="write operator.txt and operator_regimes.txt")
    return parser


def resolve_config(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig.preset(args.preset or DEFAULT_PRESET.get(args.command, "default"))
    changes = {}
    if args.out is not None:
        changes["output"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.scheme is not None:
        changes["scheme"] = args.scheme
    if args.kernel is not None:
        changes["kernel"] = args.kernel
    if args.ratio is not None:
        changes.update(ratio=args.ratio, delta=None)
    if args.levels is not None:
        changes["levels"] = args.levels
    return cfg.replace(**changes) if changes else cfg


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        res = run(args.command, cfg, check=args.check, dump=getattr(args, "dump", False))
        paths = write_outputs(res.files, cfg.output)
    except ConfigurationError as exc:
        print(f"qnl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularSystemError as exc:
        print(f"qnl: singular system: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    for line in res.lines:
        print(line)
    for p in paths:
        print(f"wrote {p}")
    return res.code


if __name__ == "__main__":
    sys.exit(main())
