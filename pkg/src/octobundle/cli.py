"""Command-line front end: ``octobundle {verify,torsion,flow,decompose}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .connection import full_torsion, phi_field, reference_torsion, torsion_of_gauge, zero_torsion
from .dirac import eigen_defect
from .flow import run_flow, write_trace
from .forms import StructureConstants, ThreeForm, decompose_torsion, metric_from_phi, phi0, project_3form, sigma
from .identities import corrupted_phi, run_identities
from .lattice import Grid, export_field, make_unit_field, parse_modes

log = logging.getLogger("octobundle")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAIL = 2
EXIT_MAX_STEPS = 3
EXIT_STIFF = 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    trials: int = 1000
    tol: float | None = None
    out: Path | None = None
    threads: int | None = None
    n: int = 16
    axes: tuple[int, ...] = (0, 1)
    modes: list = field(default_factory=list)
    dt0: float = 0.05
    max_steps: int = 1000
    corrupt_phi: bool = False
    refine: bool = False
    export: bool = False
    phi_path: Path | None = None
    tensor_path: Path | None = None

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.tol is not None:
            # flow accepts tol = 0 as "never converge"; elsewhere tolerances are positive
            if self.tol < 0 or (self.tol == 0 and self.command != "flow"):
                raise ConfigError("tolerance must be positive")
        if self.dt0 <= 0:
            raise ConfigError("dt0 must be positive")
        if self.max_steps < 0:
            raise ConfigError("max-steps must be >= 0")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            Grid(self.n, self.axes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            if not os.access(self.out, os.W_OK):
                raise ConfigError(f"output directory {self.out} is not writable")

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.axes)


def _setup_logging() -> None:
    level = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("OCTOBUNDLE_LOG", "info").lower(), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="octobundle", description="Octonion-bundle G2-structure toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (field spec keys and/or flag names)")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--threads", type=int, help="parallelism cap (advisory)")
    common.add_argument("--tol", type=float)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run the algebraic identity suite")
    v.add_argument("--corrupt-phi", action="store_true", help="self-test with a non-G2 3-form")

    for name, helptext in (("torsion", "torsion of a gauge field, two ways"), ("flow", "torsion-energy gradient flow")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--n", type=int)
        s.add_argument("--axes", type=str, help="comma-separated 1-based active axes, e.g. 1,2")
        if name == "torsion":
            s.add_argument("--refine", action="store_true", help="also run at 2n and print the error ratio")
            s.add_argument("--export", action="store_true", help="write binary field files")
        else:
            s.add_argument("--dt0", type=float)
            s.add_argument("--max-steps", type=int)

    d = sub.add_parser("decompose", parents=[common], help="decompose a 3-form and/or a 2-tensor")
    d.add_argument("--phi", type=Path, help='3-form JSON {"triples": [[a,b,c,v],...]}')
    d.add_argument("--tensor", type=Path, help="7x7 JSON matrix")
    return p


def _load_config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    data = {}
    if getattr(args, "config", None) is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    try:
        if "n" in data:
            cfg.n = int(data["n"])
        if "active_axes" in data:
            cfg.axes = tuple(int(a) - 1 for a in data["active_axes"])
        if "modes" in data:
            cfg.modes = parse_modes(data["modes"])
        for key in ("seed", "trials", "max_steps"):
            if key in data:
                setattr(cfg, key, int(data[key]))
        for key in ("tol", "dt0"):
            if key in data:
                setattr(cfg, key, float(data[key]))
        if "out" in data:
            cfg.out = Path(data["out"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc

    for key in ("seed", "trials", "tol", "out", "threads", "n", "dt0", "max_steps"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "axes", None):
        try:
            cfg.axes = tuple(int(a) - 1 for a in args.axes.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --axes {args.axes!r}") from exc
    cfg.corrupt_phi = bool(getattr(args, "corrupt_phi", False))
    cfg.refine = bool(getattr(args, "refine", False))
    cfg.export = bool(getattr(args, "export", False))
    cfg.phi_path = getattr(args, "phi", None)
    cfg.tensor_path = getattr(args, "tensor", None)
    cfg.validate()
    if cfg.threads is not None:
        log.info("thread cap %d recorded; kernels run in numpy's own threading", cfg.threads)
    return cfg


def _emit(report: dict, cfg: RunConfig, filename: str) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if cfg.out is not None:
        (cfg.out / filename).write_text(text + "\n")


def cmd_verify(cfg: RunConfig) -> int:
    phi = corrupted_phi() if cfg.corrupt_phi else phi0()
    sc = StructureConstants.from_phi(phi)
    results = run_identities(sc, seed=cfg.seed, trials=cfg.trials)
    if cfg.tol is not None:
        for r in results:
            r["tol"] = cfg.tol
            r["pass"] = bool(np.isfinite(r["residual"]) and r["residual"] < cfg.tol)
    failed = [r["name"] for r in results if not r["pass"]]
    report = {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "corrupt_phi": cfg.corrupt_phi,
        "identities": results,
        "failed": failed,
        "all_pass": not failed,
    }
    _emit(report, cfg, "verify.json")
    if failed:
        log.error("failing identities: %s", ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def _torsion_at(grid: Grid, modes) -> dict:
    V = make_unit_field(grid, modes)
    ref = zero_torsion(grid)
    tg, formula_gap = torsion_of_gauge(V, ref, return_both=True)
    tf = full_torsion(grid, sigma(V, phi_field(grid)))
    norms = tg.components.norms()
    return {
        "V": V,
        "gauge": tg,
        "direct": tf,
        "summary": {
            "n": grid.n,
            "two_path_max_discrepancy": float(np.max(np.abs(tg.T - tf.T))),
            "formula_max_discrepancy": formula_gap,
            "T_max": float(np.max(np.abs(tg.T))),
            "tau_L2": {k: float(np.sqrt(grid.integrate(v**2))) for k, v in norms.items()},
            "tau_max": {k: float(np.max(v)) for k, v in norms.items()},
        },
    }


def cmd_torsion(cfg: RunConfig) -> int:
    grid = cfg.grid
    res = _torsion_at(grid, cfg.modes)
    report = {"grid": grid.to_json(), **res["summary"]}
    if cfg.refine:
        fine = _torsion_at(Grid(2 * grid.n, grid.active_axes), cfg.modes)["summary"]
        report["refined"] = fine
        d0, d1 = report["two_path_max_discrepancy"], fine["two_path_max_discrepancy"]
        report["discrepancy_ratio"] = d0 / d1 if d1 > 0 else None
    if cfg.out is not None and cfg.export:
        export_field(cfg.out / "V.bin", grid, res["V"], "V")
        export_field(cfg.out / "torsion_gauge.bin", grid, res["gauge"].T, "T_gauge")
        export_field(cfg.out / "torsion_direct.bin", grid, res["direct"].T, "T_direct")
    _emit(report, cfg, "torsion.json")
    print(f"two-path max discrepancy: {report['two_path_max_discrepancy']:.6e}", file=sys.stderr)
    if cfg.refine:
        ratio = report["discrepancy_ratio"]
        print(f"refinement ratio n={grid.n}->{2 * grid.n}: {ratio if ratio is None else f'{ratio:.4f}'}", file=sys.stderr)
    return EXIT_OK


def cmd_flow(cfg: RunConfig) -> int:
    grid = cfg.grid
    tf = reference_torsion(grid, make_unit_field(grid, cfg.modes)) if cfg.modes else zero_torsion(grid)
    V0 = np.zeros(grid.shape + (8,))
    V0[..., 0] = 1.0
    tol = 1e-6 if cfg.tol is None else cfg.tol
    result = run_flow(V0, tf, dt0=cfg.dt0, max_steps=cfg.max_steps, tol=tol)
    s = result.state
    summary = {
        "status": result.status,
        "grid": grid.to_json(),
        "tol": tol,
        "dt0": cfg.dt0,
        "steps": s.step_count,
        "t": s.t,
        "energy": s.energy,
        "grad_norm": s.grad_norm,
        "div_T_inf": s.div_T_norm,
        "tau_L2": s.tau_L2,
    }
    lam, misfit = eigen_defect(s.V, tf)
    summary["dirac_eigen_fit"] = {"lambda": lam, "max_misfit": misfit}
    if cfg.out is not None:
        write_trace(cfg.out / "trace.csv", result.trace)
        export_field(cfg.out / "V_final.bin", grid, s.V, "V")
    _emit(summary, cfg, "flow_summary.json")
    return {"converged": EXIT_OK, "max_steps": EXIT_MAX_STEPS, "stiff": EXIT_STIFF}[result.status]


def cmd_decompose(cfg: RunConfig) -> int:
    if cfg.phi_path is None and cfg.tensor_path is None:
        raise ConfigError("decompose needs --phi and/or --tensor")
    report = {}
    try:
        if cfg.phi_path is not None:
            form = ThreeForm.from_json(Path(cfg.phi_path).read_text())
            g, vol, ok = metric_from_phi(form)
            pi1, pi7, pi27 = project_3form(form)
            report["phi"] = {
                "positive": ok,
                "metric": g.tolist() if ok else None,
                "volume_factor": vol if ok else None,
                "relative_to_phi0": {"pi1": float(pi1), "pi7": pi7.tolist(), "pi27": pi27.tolist()},
            }
        if cfg.tensor_path is not None:
            T = np.asarray(json.loads(Path(cfg.tensor_path).read_text()), dtype=float)
            if T.shape != (7, 7):
                raise ConfigError("tensor must be a 7x7 matrix")
            c = decompose_torsion(T)
            report["tensor"] = {
                "tau1": float(c.tau1),
                "tau7": c.tau7.tolist(),
                "tau14": c.tau14.tolist(),
                "tau27": c.tau27.tolist(),
                "reassembly_error": float(np.max(np.abs(c.reassemble() - T))),
            }
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc)) from exc
    _emit(report, cfg, "decompose.json")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "torsion": cmd_torsion, "flow": cmd_flow, "decompose": cmd_decompose}


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
