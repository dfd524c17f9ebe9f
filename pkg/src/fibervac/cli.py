"""Experiment runner binding the workbench modules behind one command.

Every experiment emits a CSV or JSON report whose header records the full
configuration (seed included), a verification tag naming the invariant the
numbers certify, and any violations found.  Outputs are deterministic for a
fixed seed.  Exit codes: 0 clean, 1 invariant violation, 2 configuration
error, 3 computation error.

Column schemas (stable):

* ``hopf-reduce``: lam, mode_0 .. mode_8 (sup norms of the fiber modes of
  exp(z) + exp(v) over both base charts); header carries the limiting ground
  mode value and its spread over the base.
* ``decay-scan``: lam, max_abs, noise_floor; header carries the fitted
  log-log exponent.
* ``g2-check``: lam, integrand, nijenhuis_sq, potential_sq, orthogonality,
  gram_offblock (horizontal vacuum integrand of the block-diagonal structure
  against the squashed metric family).
* ``squashed-spectrum``: lam, min_eigenvalue, max_eigenvalue, vertical_det,
  det_ratio_dev (relative deviation of the vertical determinant from the
  lam^-2 law), fiber_volume_element.
* ``minimize``: iteration, total, term_nijenhuis, term_potential (descent
  trajectory on a flat two-torus from a seeded random start); header carries
  the final residuals.
* ``nijenhuis``: algebra, dim, nijenhuis_max, residual_structure,
  residual_orthogonality, offblock (identity-point integrability of the
  root-pairing structures; offblock is the vertical/horizontal mixing on the
  fourteen-dimensional group, blank elsewhere).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import bundle_reduction as br
from . import energy_theory as et
from . import group_harmonics as gh
from . import lie_core as lc
from . import tensor_geometry as tg
from .errors import ConfigError, FibervacError

DEFAULT_SCHEDULE = (2.0, 10.0, 100.0, 1.0e4)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on, in one validated record."""

    experiment: str
    lambda_schedule: tuple = DEFAULT_SCHEDULE
    resolution: int = 0  # 0 picks the experiment default
    tolerance: float = 0.0  # 0.0 picks the experiment default
    coupling: float = 1.0
    seed: int = 0
    algebra: str = ""  # "" picks the experiment default
    irreps: tuple = tuple(range(9))
    output: str = ""  # "" writes to stdout
    format: str = "csv"


def _tol(cfg: ExperimentConfig, default: float) -> float:
    return cfg.tolerance if cfg.tolerance > 0 else default


def _res(cfg: ExperimentConfig, default: int) -> int:
    return cfg.resolution if cfg.resolution > 0 else default


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if not cfg.lambda_schedule:
        raise ConfigError("lambda schedule must not be empty")
    if any(l <= 0 for l in cfg.lambda_schedule):
        raise ConfigError("lambda values must be positive")
    if cfg.resolution < 0:
        raise ConfigError("resolution must be positive")
    if cfg.tolerance < 0:
        raise ConfigError("tolerance must be positive")
    if cfg.experiment in ("minimize", "g2-check") and cfg.coupling == 0:
        raise ConfigError(f"{cfg.experiment} needs a nonzero coupling")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"unknown report format {cfg.format!r}")
    allowed = EXPERIMENTS[cfg.experiment].algebras
    if cfg.algebra and allowed and cfg.algebra not in allowed:
        raise ConfigError(
            f"{cfg.experiment} supports algebras {sorted(allowed)}, not {cfg.algebra!r}"
        )
    if cfg.output:
        parent = Path(cfg.output).parent
        if not parent.exists():
            raise ConfigError(f"output directory {str(parent)!r} does not exist")


# ----------------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------------


def _exp_sum(points):
    return np.exp(points[..., 0]) + np.exp(points[..., 1])


def _run_hopf_reduce(cfg: ExperimentConfig):
    tol = _tol(cfg, 1e-8)
    schedule = tuple(sorted(cfg.lambda_schedule))
    bundle = br.hopf_bundle(schedule[0], resolution=_res(cfg, 21))
    fields_ = br.hopf_ambient_field(bundle, _exp_sum)
    result = br.reduce(fields_, bundle, schedule, irreps=cfg.irreps, tolerance=tol)
    rows = []
    for table_row in result.table:
        row = {"lam": table_row["lam"]}
        for k in sorted(table_row["mode_norms"]):
            row[f"mode_{k}"] = table_row["mode_norms"][k]
        rows.append(row)
    ground = np.concatenate([g.ravel() for g in result.ground_mode.values()])
    value = complex(ground.mean())
    spread = float(np.abs(ground - value).max())
    params = {
        "ground_mode_value": f"{value.real:.12g}{value.imag:+.3g}j",
        "ground_mode_spread": f"{spread:.6g}",
        "limit_lambda": result.lam,
    }
    violations = []
    if spread > tol:
        violations.append(f"ground mode varies over the base by {spread:.3e} > {tol:g}")
    for k in sorted(cfg.irreps):
        if k == 0:
            continue
        norms = [row["mode_norms"][k] for row in result.table]
        for a, b in zip(norms, norms[1:]):
            if b >= a and b > 1e-13:
                violations.append(f"mode {k} norm failed to decay: {a:.3e} -> {b:.3e}")
                break
    return params, rows, violations


_DECAY_PROFILES = {
    "su3": lambda: (
        gh.ChartFunction(
            lambda t1, t2, p1: np.exp(np.cos(t1) * np.cos(t2) * np.cos(p1)), (0, 1, 3)
        ),
        gh.su3_irrep(1, 0),
    ),
    "u1": lambda: (gh.ChartFunction(lambda t: np.exp(np.cos(t)), (0,)), gh.u1_irrep(1)),
}


def _run_decay_scan(cfg: ExperimentConfig):
    group = cfg.algebra or "su3"
    profile, irrep = _DECAY_PROFILES[group]()
    table = gh.decay_scan(profile, irrep, cfg.lambda_schedule)
    rows = [
        {"lam": lam, "max_abs": mx, "noise_floor": floor}
        for lam, mx, floor in table.rows
    ]
    params = {"group": group, "irrep": str(irrep.label), "fitted_exponent": f"{table.fitted_exponent:.9g}"}
    violations = []
    vals = [r["max_abs"] for r in rows]
    for a, b in zip(vals, vals[1:]):
        if b >= a:
            violations.append(f"coefficient failed to decay: {a:.6e} -> {b:.6e}")
            break
    return params, rows, violations


def _run_g2_check(cfg: ExperimentConfig):
    tol = _tol(cfg, 1e-10)
    spec = lc.build_algebra("g2")
    emb = lc.embed_su3_in_g2(spec)
    J = lc.build_samelson(spec)
    rows = list(br.g2_reduction_check(J, emb, cfg.lambda_schedule, e=cfg.coupling))
    violations = [
        f"vacuum integrand {row['integrand']:.3e} > {tol:g} at lam {row['lam']:g}"
        for row in rows
        if row["integrand"] > tol
    ]
    params = {"algebra": "g2", "coupling": cfg.coupling}
    return params, rows, violations


def _run_squashed_spectrum(cfg: ExperimentConfig):
    tol = _tol(cfg, 1e-9)
    rows = []
    violations = []
    for lam in cfg.lambda_schedule:
        m = br.squashed_metric(lam)
        eigs = np.linalg.eigvalsh(m.gram)
        det = float(np.linalg.det(m.vertical_block))
        dev = abs(det * lam**2 / 81.0 - 1.0)
        rows.append(
            {
                "lam": lam,
                "min_eigenvalue": float(eigs.min()),
                "max_eigenvalue": float(eigs.max()),
                "vertical_det": det,
                "det_ratio_dev": dev,
                "fiber_volume_element": m.fiber_volume_element,
            }
        )
        if eigs.min() <= 0:
            violations.append(f"metric not positive definite at lam {lam:g}")
        if dev > tol:
            violations.append(f"vertical determinant off the lam^-2 law at lam {lam:g}")
    return {"vertical_dim": 8, "horizontal_dim": 6}, rows, violations


def _run_minimize(cfg: ExperimentConfig):
    tol = _tol(cfg, 1e-6)
    res = _res(cfg, 16)
    rng = np.random.default_rng(cfg.seed)
    chart = tg.flat_torus_atlas(2, res).charts[0]
    pert = rng.standard_normal((res, res, 2, 2)) * 0.4
    pert = 0.5 * (pert - np.swapaxes(pert, -1, -2))
    phi = tg.AlmostComplexField(
        chart, tg.constant_structure(chart).values + pert, almost_complex=False
    )
    config = et.FieldConfiguration(
        phi=phi, metric=tg.metric_field(chart), coupling=cfg.coupling
    )
    out = et.minimize_weak(config, max_iterations=5000)
    by_iteration = {}
    for rep in out.reports:  # the final iteration appears twice; keep the full one
        by_iteration[rep.iteration] = {
            "iteration": rep.iteration,
            "total": rep.total,
            "term_nijenhuis": rep.term_nijenhuis,
            "term_potential": rep.term_potential,
        }
    rows = [by_iteration[i] for i in sorted(by_iteration)]
    r1, r2 = out.final_residuals
    params = {
        "grid": f"{res}x{res}",
        "iterations": out.iterations,
        "converged": out.converged,
        "residual_structure": f"{r1:.6e}",
        "residual_orthogonality": f"{r2:.6e}",
    }
    violations = []
    if not out.converged:
        violations.append("descent did not converge within the iteration budget")
    if max(r1, r2) > tol:
        violations.append(f"final residuals ({r1:.3e}, {r2:.3e}) above {tol:g}")
    return params, rows, violations


def _run_nijenhuis(cfg: ExperimentConfig):
    tol = _tol(cfg, 1e-12)
    names = [cfg.algebra] if cfg.algebra else ["su2_su2", "su3", "g2"]
    rows = []
    violations = []
    for name in names:
        spec = lc.build_algebra(name)
        J = lc.build_samelson(spec)
        n_max = float(np.abs(lc.nijenhuis_at_identity(spec, J)).max())
        r1, r2 = et.left_invariant_residuals(
            spec.structure_constants, np.eye(spec.dim), J.J
        )
        if name == "g2":
            report = lc.blockdiagonal_check(lc.embed_su3_in_g2(spec), J)
            off = max(
                report.off_block_sub_to_complement, report.off_block_complement_to_sub
            )
            offblock = f"{off:.6e}"
            if off > tol:
                violations.append(f"{name}: structure mixes the bundle splitting")
        else:
            offblock = ""
        rows.append(
            {
                "algebra": name,
                "dim": spec.dim,
                "nijenhuis_max": n_max,
                "residual_structure": r1,
                "residual_orthogonality": r2,
                "offblock": offblock,
            }
        )
        if n_max > tol:
            violations.append(f"{name}: root-pairing structure is not integrable")
    return {"count": len(rows)}, rows, violations


@dataclass(frozen=True)
class _Experiment:
    runner: object
    description: str
    verifies: str
    algebras: tuple = ()


EXPERIMENTS = {
    "hopf-reduce": _Experiment(
        _run_hopf_reduce,
        "fiber Fourier modes and ground-mode reduction on the circle-fibered sphere",
        "fiber-ground-mode, mode-decay",
    ),
    "decay-scan": _Experiment(
        _run_decay_scan,
        "peak Fourier coefficient of a fixed profile across chart scales",
        "coefficient-decay",
        algebras=("su3", "u1"),
    ),
    "g2-check": _Experiment(
        _run_g2_check,
        "horizontal vacuum integrand against the squashed metric family",
        "horizontal-vacuum",
        algebras=("g2",),
    ),
    "squashed-spectrum": _Experiment(
        _run_squashed_spectrum,
        "spectrum and vertical volume scaling of the squashed metrics",
        "squashed-positivity, vertical-volume-scaling",
    ),
    "minimize": _Experiment(
        _run_minimize,
        "weak-energy descent to a vacuum on the flat two-torus",
        "weak-energy-descent",
    ),
    "nijenhuis": _Experiment(
        _run_nijenhuis,
        "identity-point integrability of the root-pairing structures",
        "samelson-integrability",
        algebras=("su2_su2", "su3", "g2"),
    ),
}


# ----------------------------------------------------------------------------
# report emission
# ----------------------------------------------------------------------------


def _format_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.15g}"
    return str(v)


def _render_csv(header: dict, rows: list) -> str:
    lines = [f"# {k}: {v}" for k, v in header.items()]
    if rows:
        cols = list(rows[0])
        lines.append(",".join(cols))
        for row in rows:
            lines.append(",".join(_format_cell(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _render_json(header: dict, rows: list) -> str:
    def clean(v):
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        return v

    payload = {
        "header": {k: clean(v) for k, v in header.items()},
        "rows": [{k: clean(v) for k, v in row.items()} for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment, emit its report, return the exit status."""
    validate_config(cfg)
    exp = EXPERIMENTS[cfg.experiment]
    params, rows, violations = exp.runner(cfg)
    header = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "lambda_schedule": " ".join(f"{l:g}" for l in cfg.lambda_schedule),
        "verifies": exp.verifies,
    }
    header.update(params)
    header["violations"] = len(violations)
    for i, v in enumerate(violations):
        header[f"violation_{i}"] = v
    text = _render_csv(header, rows) if cfg.format == "csv" else _render_json(header, rows)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return 1 if violations else 0


# ----------------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------------


def _parse_schedule(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad lambda schedule {text!r}") from exc


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path: str, experiment: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path!r} does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" in data and data["experiment"] != experiment:
        raise ConfigError(
            f"config file names experiment {data['experiment']!r}, command ran {experiment!r}"
        )
    for key in ("lambda_schedule", "irreps"):
        if key in data:
            data[key] = tuple(data[key])
    data.pop("experiment", None)
    return data


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fibervac",
        description="numerical workbench experiments; see the module docstring for column schemas",
    )
    parser.add_argument(
        "--list", action="store_true", help="enumerate experiments and exit"
    )
    sub = parser.add_subparsers(dest="experiment")
    for name, exp in EXPERIMENTS.items():
        p = sub.add_parser(name, help=exp.description)
        p.add_argument("--lambda-schedule", type=str, default=None)
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--coupling", type=float, default=None)
        p.add_argument("--algebra", type=str, default=None)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--output", type=str, default=None)
        p.add_argument("--format", type=str, default=None, choices=("csv", "json"))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(experiment=args.experiment)
    if args.config:
        cfg = replace(cfg, **load_config_file(args.config, args.experiment))
    overrides = {}
    if args.lambda_schedule is not None:
        overrides["lambda_schedule"] = _parse_schedule(args.lambda_schedule)
    for key in ("resolution", "tolerance", "seed", "coupling", "algebra", "output", "format"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list:
        for name, exp in EXPERIMENTS.items():
            print(f"{name}: {exp.description}")
        return 0
    if not args.experiment:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FibervacError as exc:
        print(f"{args.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
