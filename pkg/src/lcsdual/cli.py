"""Batch front end.

Parses a run-config file, dispatches one named experiment, and writes CSV/JSON
artifacts plus a manifest into the output directory. Seeds fan out across a
worker pool with results collected in seed order, so a worker count only
changes wall time, never bytes.

Commands: ftle | line-sweep | classical-poincare | dual-poincare | classify |
sphere | fd-compare.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import classify as cls
from . import strain
from .config import ConfigError, RunConfig, apply_overrides, parse_config, require_keys
from .directionfield import DualFieldSpec, integrate_line
from .fields import VelocityField, make_field
from .flowmap import FlowMapError, advect_with_variations, finite_difference_gradient
from .poincare import SectionSpec, classical_section, dual_section
from .parallel import ordered_parallel_map
from .runio import write_csv, write_json, write_manifest

COMMANDS = ("ftle", "line-sweep", "classical-poincare", "dual-poincare",
            "classify", "sphere", "fd-compare")

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def field_from_config(cfg: RunConfig) -> VelocityField:
    name = cfg.get("field.name")
    if name == "cats_eye":
        return make_field(name, c=cfg.get("field.c"))
    if name == "steady_abc":
        return make_field(name, A=cfg.get("field.A"), B=cfg.get("field.B"),
                          C=cfg.get("field.C"))
    if name == "aperiodic_abc":
        return make_field(name, A=cfg.get("field.A"), B=cfg.get("field.B"),
                          C=cfg.get("field.C"), k0=cfg.get("field.k0"),
                          k1=cfg.get("field.k1"), k2=cfg.get("field.k2"),
                          k3=cfg.get("field.k3"))
    require_keys(cfg, ["field.M"], "affine field")
    return make_field("affine", M=np.array(cfg.get("field.M")).reshape(3, 3),
                      b=cfg.get("field.b"))


def seeds_from_config(cfg: RunConfig) -> np.ndarray:
    """Seed positions in a deterministic row-major order.

    Grids are cell-centered over their ranges so periodic endpoints are not
    duplicated.
    """
    mode = cfg.get("seeds.mode")
    if mode == "list":
        require_keys(cfg, ["seeds.list"], "seeds.mode = list")
        return np.array(cfg.get("seeds.list"), dtype=float)

    def centers(rng, n):
        lo, hi = rng
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    if mode == "grid":
        axis = _AXIS_INDEX[cfg.get("seeds.plane_axis")]
        plane_axes = [i for i in range(3) if i != axis]
        a = centers(cfg.get("seeds.range_a"), cfg.get("seeds.nx"))
        b = centers(cfg.get("seeds.range_b"), cfg.get("seeds.ny"))
        seeds = np.empty((a.size * b.size, 3))
        idx = 0
        for av in a:
            for bv in b:
                seeds[idx, axis] = cfg.get("seeds.plane_value")
                seeds[idx, plane_axes[0]] = av
                seeds[idx, plane_axes[1]] = bv
                idx += 1
        return seeds

    # grid3
    a = centers(cfg.get("seeds.range_a"), cfg.get("seeds.nx"))
    b = centers(cfg.get("seeds.range_b"), cfg.get("seeds.ny"))
    c = centers(cfg.get("seeds.range_c"), cfg.get("seeds.nz"))
    seeds = np.array([[av, bv, cv] for av in a for bv in b for cv in c])
    return seeds


def section_from_config(cfg: RunConfig, field: VelocityField) -> SectionSpec:
    return SectionSpec(axis=_AXIS_INDEX[cfg.get("section.axis")],
                       value=cfg.get("section.value"),
                       eps=cfg.get("section.eps"),
                       periods=field.domain.periods)


def dual_spec_from_config(cfg: RunConfig) -> DualFieldSpec:
    eps = cfg.get("line.eps")
    partner = cfg.values.get("line.partner") if eps != 0.0 else None
    return DualFieldSpec(base=cfg.get("line.base"), t0=cfg.get("horizon.t0"),
                         t1=cfg.get("horizon.t1"), tol=cfg.get("tol"),
                         blend_eps=eps, blend_partner=partner)


# ---------------------------------------------------------------------------
# worker task functions (module-level for pickling)

def _strain_task(args):
    field, seed, t0, t1, tol = args
    try:
        sample = advect_with_variations(field, seed, t0, t1, tol)
    except FlowMapError as exc:
        return None, repr(exc)
    data = strain.svd3(sample.DF)
    return (sample, data), None


def _fd_task(args):
    field, seed, t0, t1, tol, delta = args
    try:
        sample = advect_with_variations(field, seed, t0, t1, tol)
        df_fd = finite_difference_gradient(field, seed, t0, t1, delta, tol)
    except FlowMapError as exc:
        return None, repr(exc)
    var = strain.svd3(sample.DF)
    fd = strain.svd3(df_fd, require_positive_det=False)
    angle = cls.angle_between_deg(var.xi[1], fd.xi[1])
    lam = strain.ftle(var.sigma[2], t0, t1)
    return (angle, lam), None


def _line_task(args):
    spec, field, seed, orientation, s_max, stride, h_max, tol_line, window = args
    line = integrate_line(spec, field, seed, orientation, s_max,
                          output_stride=stride, h_max=h_max, tol_line=tol_line,
                          record_window=window)
    return line


# ---------------------------------------------------------------------------
# commands

def _cmd_ftle(cfg: RunConfig, field, outdir: Path, workers: int):
    require_keys(cfg, ["horizon.t0", "horizon.t1"], "ftle")
    seeds = seeds_from_config(cfg)
    t0, t1, tol = cfg.get("horizon.t0"), cfg.get("horizon.t1"), cfg.get("tol")
    _progress(f"[ftle] {seeds.shape[0]} seeds, horizon [{t0}, {t1}]")
    results = ordered_parallel_map(
        _strain_task, [(field, s, t0, t1, tol) for s in seeds], workers)
    rows = []
    failures = {}
    for sid, (result, err) in enumerate(results):
        if err is not None:
            failures[sid] = err
            continue
        sample, data = result
        rows.append((sid, seeds[sid, 0], seeds[sid, 1], seeds[sid, 2],
                     data.sigma[0], data.sigma[1], data.sigma[2],
                     strain.ftle(data.sigma[2], t0, t1)))
    write_csv(outdir / "ftle.csv",
              ["seed_id", "x", "y", "z", "sigma1", "sigma2", "sigma3", "ftle"], rows)
    extra = {"grid": [cfg.get("seeds.nx"), cfg.get("seeds.ny")]} \
        if cfg.get("seeds.mode") == "grid" else {}
    return ["ftle.csv"], extra, failures


def _cmd_fd_compare(cfg: RunConfig, field, outdir: Path, workers: int):
    require_keys(cfg, ["horizon.t0", "horizon.t1"], "fd-compare")
    seeds = seeds_from_config(cfg)
    t0, t1, tol = cfg.get("horizon.t0"), cfg.get("horizon.t1"), cfg.get("tol")
    delta = cfg.get("fd.delta")
    _progress(f"[fd-compare] {seeds.shape[0]} seeds, delta = {delta}")
    results = ordered_parallel_map(
        _fd_task, [(field, s, t0, t1, tol, delta) for s in seeds], workers)
    rows = []
    failures = {}
    for sid, (result, err) in enumerate(results):
        if err is not None:
            failures[sid] = err
            continue
        angle, lam = result
        rows.append((sid, seeds[sid, 0], seeds[sid, 1], seeds[sid, 2], angle, lam))
    write_csv(outdir / "fd_compare.csv",
              ["seed_id", "x", "y", "z", "angle_deg", "ftle"], rows)
    extra = {"delta": delta}
    if cfg.get("seeds.mode") == "grid":
        extra["grid"] = [cfg.get("seeds.nx"), cfg.get("seeds.ny")]
    return ["fd_compare.csv"], extra, failures


def _sweep_lines(cfg: RunConfig, field, workers: int, window=None):
    spec = dual_spec_from_config(cfg)
    seeds = seeds_from_config(cfg)
    orientation = np.array(cfg.get("line.orientation"), dtype=float)
    orientation /= np.linalg.norm(orientation)
    tasks = [(spec, field, s, orientation, cfg.get("line.s_max"),
              cfg.get("line.stride"), cfg.get("line.h_max"),
              cfg.get("line.tol"), window) for s in seeds]
    _progress(f"[lines] integrating {len(tasks)} {spec.base} lines "
              f"to s = {cfg.get('line.s_max')}")
    return ordered_parallel_map(_line_task, tasks, workers), seeds


def _cmd_line_sweep(cfg: RunConfig, field, outdir: Path, workers: int):
    require_keys(cfg, ["horizon.t0", "horizon.t1"], "line-sweep")
    lines, _ = _sweep_lines(cfg, field, workers)
    rows = []
    for sid, line in enumerate(lines):
        last = line.s.shape[0] - 1
        for i in range(line.s.shape[0]):
            reason = line.termination if i == last else ""
            rows.append((sid, line.s[i], line.vertices[i, 0], line.vertices[i, 1],
                         line.vertices[i, 2], reason))
    write_csv(outdir / "lines.csv", ["seed_id", "s", "x", "y", "z", "term_reason"], rows)
    stats = {str(sid): line.stats | {"termination": line.termination}
             for sid, line in enumerate(lines)}
    return ["lines.csv"], {"line_stats": stats}, {}


def _cmd_classical_poincare(cfg: RunConfig, field, outdir: Path, workers: int):
    section = section_from_config(cfg, field)
    seeds = seeds_from_config(cfg)
    window = (cfg.get("window.lo"), cfg.get("window.hi"))
    t_total = cfg.get("time.total")
    _progress(f"[classical-poincare] {seeds.shape[0]} seeds to t = {t_total}")
    pts = classical_section(field, seeds, t_total, window, section,
                            tol=cfg.get("tol"), workers=workers)
    write_csv(outdir / "section.csv", ["seed_id", "stamp", "x", "y"],
              zip(pts.seed_id, pts.stamp, pts.u, pts.v))
    sidecar = {
        "section": {"axis": section.axis, "value": section.value, "eps": section.eps},
        "window": list(window),
        "config_hash": cfg.config_hash(),
        "kind": "classical",
        "n_points": len(pts),
        "package_version": __version__,
    }
    write_json(outdir / "section.json", sidecar)
    return ["section.csv", "section.json"], {"n_points": len(pts)}, pts.meta["failures"]


def _cmd_dual_poincare(cfg: RunConfig, field, outdir: Path, workers: int):
    require_keys(cfg, ["horizon.t0", "horizon.t1"], "dual-poincare")
    section = section_from_config(cfg, field)
    window = (cfg.get("window.lo"), cfg.get("window.hi"))
    lines, _ = _sweep_lines(cfg, field, workers, window=window)
    pts = dual_section(lines, window, section)
    write_csv(outdir / "section.csv", ["seed_id", "stamp", "x", "y"],
              zip(pts.seed_id, pts.stamp, pts.u, pts.v))
    terminations = {str(sid): line.termination for sid, line in enumerate(lines)
                    if line.termination != "reached_smax"}
    sidecar = {
        "section": {"axis": section.axis, "value": section.value, "eps": section.eps},
        "window": list(window),
        "config_hash": cfg.config_hash(),
        "kind": "dual",
        "base": cfg.get("line.base"),
        "n_points": len(pts),
        "package_version": __version__,
    }
    write_json(outdir / "section.json", sidecar)
    return ["section.csv", "section.json"], {"n_points": len(pts)}, terminations


def _cmd_sphere(cfg: RunConfig, field, outdir: Path, workers: int):
    require_keys(cfg, ["horizon.t0", "horizon.t1", "sphere.center"], "sphere")
    deform = cls.advect_sphere(field, np.array(cfg.get("sphere.center")),
                               cfg.get("sphere.radius"), cfg.get("sphere.n_points"),
                               cfg.get("horizon.t0"), cfg.get("horizon.t1"),
                               cfg.get("tol"))
    rows = [(i, *deform.directions[i], *deform.points1[i])
            for i in range(deform.directions.shape[0])]
    write_csv(outdir / "sphere.csv",
              ["tracer_id", "sx", "sy", "sz", "x1", "y1", "z1"], rows)
    write_json(outdir / "sphere.json", {
        "center0": deform.center0.tolist(),
        "center1": deform.center1.tolist(),
        "radius": deform.radius,
        "axes": deform.axes.tolist(),
        "lengths": deform.lengths.tolist(),
        "config_hash": cfg.config_hash(),
    })
    return ["sphere.csv", "sphere.json"], {}, {}


def _cmd_classify(cfg: RunConfig, field, outdir: Path, workers: int):
    require_keys(cfg, ["horizon.t0", "horizon.t1", "seeds.list"], "classify")
    seeds = seeds_from_config(cfg)
    seed = seeds[0]
    orientation = np.array(cfg.get("line.orientation"), dtype=float)
    orientation /= np.linalg.norm(orientation)
    base_spec = DualFieldSpec(base=cfg.get("line.base"), t0=cfg.get("horizon.t0"),
                              t1=cfg.get("horizon.t1"), tol=cfg.get("tol"))
    window = (cfg.get("window.lo"), cfg.get("window.hi"))
    mode = cfg.get("classify.mode")
    _progress(f"[classify] {mode} probe at seed {seed.tolist()}")
    if mode == "hyperbolic":
        require_keys(cfg, ["classify.tangent_threshold"], "classify hyperbolic")
        section = section_from_config(cfg, field)
        verdict = cls.classify_hyperbolic_candidate(
            field, base_spec, seed, orientation, cfg.get("line.s_max"), window,
            section, tangent_threshold=cfg.get("classify.tangent_threshold"),
            normal_factor=cfg.get("classify.normal_factor"),
            eps=cfg.get("classify.eps"),
            sphere_horizon=cfg.get("classify.sphere_horizon"),
            angle_max_deg=cfg.get("classify.angle_max_deg"),
            h_max=cfg.get("line.h_max"), tol_line=cfg.get("line.tol"),
            output_stride=cfg.get("line.stride"),
            sphere_radius=cfg.get("sphere.radius"),
            sphere_points=cfg.get("sphere.n_points"),
            neighbor_radius=cfg.get("classify.neighbor_radius"))
    else:
        verdict = cls.classify_elliptic_candidate(
            field, base_spec, seed, orientation, cfg.get("line.s_max"), window,
            delta=cfg.get("classify.delta"), R1=cfg.get("classify.R1"),
            R2=cfg.get("classify.R2"), n_z=cfg.get("classify.n_z"),
            n_theta=cfg.get("classify.n_theta"), h_max=cfg.get("line.h_max"),
            tol_line=cfg.get("line.tol"), output_stride=cfg.get("line.stride"),
            min_pass_fraction=cfg.get("classify.min_pass_fraction"))
    write_json(outdir / "verdict.json", {
        "verdict": verdict.type,
        "evidence": verdict.evidence,
        "seed": seed.tolist(),
        "mode": mode,
        "config_hash": cfg.config_hash(),
    })
    artifacts = ["verdict.json"]
    mesh = verdict.artifacts.get("mesh")
    if mesh is not None:
        rows = []
        for i in range(mesh.n_z):
            for j in range(mesh.n_theta):
                rows.append((i, j, mesh.vertices[i, j, 0], mesh.vertices[i, j, 1],
                             mesh.vertices[i, j, 2]))
        write_csv(outdir / "mesh.csv", ["i", "j", "x", "y", "z"], rows)
        write_json(outdir / "mesh.json", {
            "n_z": mesh.n_z,
            "n_theta": mesh.n_theta,
            "frame": {"R1": mesh.frame.R1, "R2": mesh.frame.R2,
                      "z_nodes": mesh.frame.z_nodes.tolist(),
                      "xc": mesh.frame.xc.tolist(), "yc": mesh.frame.yc.tolist()},
            "config_hash": cfg.config_hash(),
        })
        artifacts += ["mesh.csv", "mesh.json"]
    return artifacts, {"verdict": verdict.type}, {}


_DISPATCH = {
    "ftle": _cmd_ftle,
    "fd-compare": _cmd_fd_compare,
    "line-sweep": _cmd_line_sweep,
    "classical-poincare": _cmd_classical_poincare,
    "dual-poincare": _cmd_dual_poincare,
    "sphere": _cmd_sphere,
    "classify": _cmd_classify,
}


def run_command(cfg: RunConfig, command: str, outdir, workers: int = 1) -> int:
    """Execute one named pipeline; returns a process exit status."""
    if command not in _DISPATCH:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    field = field_from_config(cfg)
    try:
        artifacts, extra, soft_failures = _DISPATCH[command](cfg, field, outdir, workers)
    except (ConfigError, FlowMapError, ValueError, RuntimeError) as exc:
        _progress(f"[{command}] FAILED: {exc}")
        return 1
    write_manifest(outdir, command, cfg.values, cfg.config_hash(), workers,
                   artifacts, extra=extra,
                   soft_failures={str(k): v for k, v in soft_failures.items()})
    _progress(f"[{command}] wrote {', '.join(artifacts)} + manifest.json to {outdir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lcsdual",
        description="Locate LCS candidates in 3D unsteady flows via dual "
                    "direction-field systems.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="run-config file path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--command-overrides", nargs="*", default=[],
                        metavar="KEY=VALUE", help="config overrides")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
        cfg = apply_overrides(cfg, args.command_overrides)
    except (OSError, ConfigError) as exc:
        _progress(f"config error: {exc}")
        return 2
    return run_command(cfg, args.command, args.out, args.workers)


if __name__ == "__main__":
    raise SystemExit(main())
