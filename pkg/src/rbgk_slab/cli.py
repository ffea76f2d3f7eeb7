"""Command-line driver: parse a run configuration, solve, certify, emit artifacts.

Exit codes: 0 ok, 2 schema, 3 invalid boundary, 4 not converged,
5 I/O, 6 certificate failure (verify mode only), 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import AuxiliaryProfile
from .boundary import build_boundary, check_truncation, thermal_radius
from .config import RunConfig, parse_config
from .diagnostics import (
    CertificateReport,
    certify,
    derived_constants,
    entropy_flux,
    particle_flux,
    total_stress_flux,
)
from .errors import OutputError, SlabError
from .grids import MomentumGrid, SpatialGrid, build_momentum_grid, build_spatial_grid
from .moments import SpeciesParams, eckart_decompose, number_four_flow
from .solver import BoundaryData, NotConverged, omega_threshold_scan, picard_solve

log = logging.getLogger("rbgk_slab")

EXIT_CERTIFICATE = 6
TIMESTAMP_KEY = "generated_at"


@dataclass
class Problem:
    config: RunConfig
    mgrid: MomentumGrid
    sgrid: SpatialGrid
    species: list[SpeciesParams]
    boundary: BoundaryData
    tails: dict


def auto_p_max(config: RunConfig, base_dir=None) -> float:
    """Largest thermal radius over every species and wall."""
    c = config.constants.c
    return max(
        thermal_radius(spec, s.mass, c, base_dir) for s in config.species for spec in (s.left, s.right)
    )


def prepare(config: RunConfig, base_dir=None) -> Problem:
    """Grids, species and validated wall data for a configuration.

    When ``grid.p_max`` is omitted it is resolved from the boundary families
    and written back into the returned config, so the echo is reproducible.
    """
    if config.grid.p_max is None:
        grid_cfg = config.grid.model_copy(update={"p_max": auto_p_max(config, base_dir)})
        config = config.model_copy(update={"grid": grid_cfg})
    g = config.grid
    tails = check_truncation(config, g.p_max, base_dir)
    mgrid = build_momentum_grid(g.p_max, g.n_p1, g.n_rho, g.p1_grading)
    sgrid = build_spatial_grid(g.K)
    species = [SpeciesParams(s.mass, s.omega, s.label) for s in config.species]
    boundary = build_boundary(config, mgrid, base_dir)
    boundary.validate(mgrid, species, config.constants.c)
    return Problem(config, mgrid, sgrid, species, boundary, tails)


def solve_problem(problem: Problem):
    """Picard solve with the solver settings of the problem's config."""
    s = problem.config.solver
    return picard_solve(
        problem.boundary,
        problem.mgrid,
        problem.sgrid,
        problem.species,
        c=problem.config.constants.c,
        tol=s.tol,
        max_iter=s.max_iter,
        normalization=s.normalization,
        beta_tol=s.beta_tol,
    )


def _fmt(v) -> str:
    return format(float(v), ".17g")


def profile_table(field_, aux: AuxiliaryProfile | None, problem: Problem) -> tuple[list[str], np.ndarray]:
    """Column names (with units) and the per-x values written to the profiles CSV."""
    c, k = problem.config.constants.c, problem.config.constants.k
    mgrid, sgrid, species = problem.mgrid, problem.sgrid, problem.species
    names = ["x [slab widths]"]
    cols = [sgrid.x]
    F = particle_flux(field_, mgrid, species, c)
    for i, s in enumerate(species):
        n, U = eckart_decompose(number_four_flow(field_[i], mgrid, s.mass, c), c)
        names += [f"n_{s.label} [1/volume]", f"U1/U0_{s.label} [1]", f"F_{s.label} [1/(area time)]"]
        cols += [n, U[:, 1] / U[:, 0], F[i]]
    if aux is None:
        beta = U1 = np.full(sgrid.size, np.nan)
    else:
        beta, U1 = aux.beta, aux.U[:, 1]
    T = total_stress_flux(field_, mgrid, species, c)
    names += [
        "beta_tilde [1/energy]",
        "U_tilde1 [velocity]",
        "S1 [k/(area time)]",
        "T01 [energy/(area time)]",
        "T11 [momentum/(area time)]",
    ]
    cols += [beta, U1, entropy_flux(field_, mgrid, species, c, k), T[:, 0], T[:, 1]]
    return names, np.column_stack(cols)


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with _open_for_write(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_text(path: Path, text: str) -> None:
    try:
        with _open_for_write(path) as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def emit_profiles(field_, aux, problem: Problem, path: Path) -> None:
    names, table = profile_table(field_, aux, problem)
    write_csv(path, names, ([float(v) for v in row] for row in table))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def build_manifest(problem: Problem, mode: str, status: str, exit_code: int, **sections) -> dict:
    manifest = {
        "version": __version__,
        "mode": mode,
        "status": status,
        "exit_code": exit_code,
        "config": json.loads(problem.config.to_json()),
        "grids": {
            "momentum_sha256": problem.mgrid.checksum(),
            "spatial_sha256": problem.sgrid.checksum(),
            "p_max": problem.mgrid.p_max,
            "n_nodes": problem.mgrid.size,
            "x_nodes": problem.sgrid.size,
        },
        "truncation_tails": problem.tails,
        TIMESTAMP_KEY: datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    manifest.update(sections)
    return _jsonable(manifest)


def write_manifest(path: Path, manifest: dict) -> None:
    write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _certificate_summary(rep: CertificateReport) -> dict:
    return {
        "passed": rep.passed,
        "failures": rep.failures(),
        "checks": {k: {"passed": r.passed, "margin": r.margin} for k, r in rep.items()},
    }


def _constants_rows(consts, species):
    rows = []
    for i, s in enumerate(species):
        rows += [
            ("a_lower", s.label, consts.a_lower[i]),
            ("a_upper", s.label, consts.a_upper[i]),
            ("lambda", s.label, consts.lam[i]),
            ("C1", s.label, consts.C1[i]),
        ]
    for name in ("gamma", "beta_lower", "beta_upper", "U_upper", "C2"):
        rows.append((name, "", getattr(consts, name)))
    return [(q, lab, float(v)) for q, lab, v in rows]


def run(config: RunConfig, out_dir, mode: str | None = None, base_dir=None) -> int:
    """Execute one run and write its artifacts under ``out_dir``; returns the exit status.

    Errors raised before a problem is assembled (schema, boundary, I/O)
    propagate; a solver that fails to converge still writes its manifest.
    """
    mode = mode or config.mode
    out = Path(out_dir)
    paths = config.output
    problem = prepare(config, base_dir)
    log.info("resolved config:\n%s", problem.config.to_json().rstrip())
    c = problem.config.constants.c

    if mode == "moments":
        consts = derived_constants(problem.boundary, problem.mgrid, problem.species, c)
        write_csv(out / paths.constants, ["quantity", "species", "value"], _constants_rows(consts, problem.species))
        labels = [s.label for s in problem.species]
        write_manifest(out / paths.manifest, build_manifest(problem, mode, "ok", 0, constants=consts.as_dict(labels)))
        return 0

    if mode == "scan":
        s = problem.config.solver
        result = omega_threshold_scan(
            problem.boundary,
            problem.mgrid,
            problem.sgrid,
            problem.species,
            problem.config.scan.scales,
            c=c,
            tol=s.tol,
            max_iter=s.max_iter,
            normalization=s.normalization,
            beta_tol=s.beta_tol,
        )
        write_csv(
            out / paths.scan,
            ["scale", "converged", "iterations", "sup_delta", "reason"],
            (
                (r.scale, str(r.converged).lower(), r.iterations, "" if r.sup_delta is None else r.sup_delta, r.reason)
                for r in result.rows
            ),
        )
        write_manifest(out / paths.manifest, build_manifest(problem, mode, "ok", 0, scan=result.as_dict()))
        log.info("largest converged scale: %s", result.largest_converged)
        return 0

    try:
        field_, aux, report = solve_problem(problem)
    except NotConverged as exc:
        log.error("solver did not converge: %s", exc)
        write_manifest(
            out / paths.manifest,
            build_manifest(problem, mode, "not_converged", NotConverged.exit_code, iteration=exc.report.as_dict()),
        )
        raise
    log.info("converged in %d sweeps, final residual %.3e", report.iterations, report.final_residual)
    emit_profiles(field_, aux, problem, out / paths.profiles)

    sections = {"iteration": report.as_dict()}
    code = 0
    if aux is not None:
        cert = certify(
            field_,
            aux,
            problem.boundary,
            problem.mgrid,
            problem.sgrid,
            problem.species,
            c,
            problem.config.constants.k,
            problem.config.solver.normalization,
        )
        sections["certificate"] = _certificate_summary(cert)
        if mode == "verify":
            write_text(out / paths.report, cert.to_text())
            if not cert.passed:
                log.error("certificate failures: %s", ", ".join(cert.failures()))
                code = EXIT_CERTIFICATE
    elif mode == "verify":
        # the auxiliary state is undefined without collisions
        write_text(out / paths.report, "no collisional species: certificates not applicable\n")
    status = "ok" if code == 0 else "certificate_failed"
    write_manifest(out / paths.manifest, build_manifest(problem, mode, status, code, **sections))
    return code


class _JsonErrors(logging.Formatter):
    def format(self, record):
        if record.levelno >= logging.ERROR:
            return json.dumps({"level": record.levelname.lower(), "message": record.getMessage()}, sort_keys=True)
        return f"{record.levelname.lower()}: {record.getMessage()}"


def _report_error(exc: BaseException, code: int) -> None:
    sys.stderr.write(
        json.dumps({"level": "error", "type": type(exc).__name__, "exit_code": code, "message": str(exc)}, sort_keys=True)
        + "\n"
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rbgk-slab", description="Stationary relativistic BGK mixture solver in a slab.")
    p.add_argument(
        "mode", nargs="?", choices=["solve", "scan", "verify", "moments"], help="run mode (defaults to the config's)"
    )
    p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="reserved; the solver is deterministic")
    p.add_argument("--quiet", action="store_true", help="only report warnings and errors")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonErrors())
    root = logging.getLogger("rbgk_slab")
    root.handlers[:] = [handler]
    root.propagate = False
    root.setLevel(logging.WARNING if args.quiet else logging.INFO)
    if args.seed is not None:
        log.debug("--seed %d ignored: the solver is deterministic", args.seed)

    code = 0
    try:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot read config {args.config}: {exc}") from exc
        config = parse_config(text)
        code = run(config, args.out, args.mode, base_dir=args.config.parent)
    except SlabError as exc:
        code = exc.exit_code
        _report_error(exc, code)
    except Exception as exc:  # pragma: no cover - last-resort guard
        code = 1
        _report_error(exc, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
