"""Classical and dual Poincaré maps via the band-membership rule.

Crossings are not root-located: accepted step points whose wrapped section
coordinate falls within a thin band around the section plane are collected,
restricted to a long-time (classical) or long-arclength (dual) window. The
dual map is pure post-processing of already-integrated direction lines; no
flow map is applied repetitively.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import _kernels as _k
from .directionfield import DirectionLine
from .fields import Domain, VelocityField
from .flowmap import DEFAULT_TOL
from .parallel import ordered_parallel_map

DEFAULT_BAND_EPS = 2e-3

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


@dataclass(frozen=True)
class SectionSpec:
    """Axis-aligned section plane with an epsilon band.

    ``periods[i]`` is the domain period of axis i (None when unbounded); band
    membership on a periodic axis is computed on the wrapped coordinate.
    """

    axis: int = 2
    value: float = 0.0
    eps: float = DEFAULT_BAND_EPS
    periods: tuple[float | None, float | None, float | None] = (2 * np.pi,) * 3

    def __post_init__(self):
        object.__setattr__(self, "axis", _AXIS_NAMES[self.axis])
        if not self.eps > 0.0:
            raise ValueError(f"band epsilon must be positive, got {self.eps}")
        period = self.periods[self.axis]
        if period is not None and self.eps >= 0.25 * period:
            raise ValueError(f"band epsilon {self.eps} is not small against period {period}")

    @property
    def plane_axes(self) -> tuple[int, int]:
        return tuple(i for i in range(3) if i != self.axis)  # type: ignore[return-value]

    def band_mask(self, coords: np.ndarray) -> np.ndarray:
        period = self.periods[self.axis]
        if period is None:
            return np.abs(coords - self.value) <= self.eps
        wrapped = np.mod(coords, period)
        dist = np.abs(wrapped - self.value)
        return np.minimum(dist, period - dist) <= self.eps


@dataclass
class SectionPoints:
    """Point cloud on a section: (seed_id, stamp, u, v) rows with the in-plane
    coordinates wrapped into their periods."""

    seed_id: np.ndarray
    stamp: np.ndarray
    u: np.ndarray
    v: np.ndarray
    section: SectionSpec
    meta: dict = dc_field(default_factory=dict)

    def __len__(self) -> int:
        return self.seed_id.shape[0]

    def cloud(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])


def wrap_periodic(x, domain: Domain) -> np.ndarray:
    """Wrap periodic axes into [0, period); identity on unbounded axes."""
    return domain.wrap(np.asarray(x, dtype=float))


def _wrap_plane(points: np.ndarray, section: SectionSpec) -> np.ndarray:
    out = points.copy()
    for col, ax in enumerate(section.plane_axes):
        period = section.periods[ax]
        if period is not None:
            out[:, col] = np.mod(out[:, col], period)
    return out


def _classical_task(args):
    (kind, params, x0, t_total, win, section_axis, section_value, eps,
     axis_period, tol) = args
    status, pts, t_reached, nsteps, nrej = _k.advect_band_core(
        kind, params, x0, 0.0, t_total, tol, np.inf, win[0], win[1],
        section_axis, section_value, eps, axis_period)
    return status, pts, t_reached, nsteps, nrej


def classical_section(field: VelocityField, seeds, t_total: float,
                      window: tuple[float, float], section: SectionSpec,
                      tol: float = DEFAULT_TOL, workers: int = 1) -> SectionPoints:
    """Poincaré map of the velocity field itself.

    Integrates each seed over [0, t_total] and keeps accepted step points
    with time inside ``window`` and section coordinate inside the band.
    Integrator failures are recorded per seed in ``meta['failures']`` and the
    partial results are returned.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if not (0.0 <= window[0] <= window[1] <= t_total):
        raise ValueError(f"window {window} must lie inside [0, {t_total}]")
    axis_period = section.periods[section.axis]
    tasks = [
        (field.kind, field.params, seeds[i].copy(), float(t_total),
         (float(window[0]), float(window[1])), section.axis,
         float(section.value), float(section.eps),
         0.0 if axis_period is None else float(axis_period), float(tol))
        for i in range(seeds.shape[0])
    ]
    results = ordered_parallel_map(_classical_task, tasks, workers)

    ids, stamps, chunks = [], [], []
    failures = {}
    ia, ib = section.plane_axes
    for sid, (status, pts, t_reached, _, _) in enumerate(results):
        if status != _k.OK:
            failures[sid] = {"status": int(status), "t_reached": float(t_reached)}
        if pts.shape[0]:
            ids.append(np.full(pts.shape[0], sid, dtype=np.int64))
            stamps.append(pts[:, 0])
            chunks.append(pts[:, (1 + ia, 1 + ib)])
    if chunks:
        seed_id = np.concatenate(ids)
        stamp = np.concatenate(stamps)
        plane = _wrap_plane(np.vstack(chunks), section)
    else:
        seed_id = np.empty(0, dtype=np.int64)
        stamp = np.empty(0)
        plane = np.empty((0, 2))
    return SectionPoints(seed_id=seed_id, stamp=stamp, u=plane[:, 0] if len(stamp) else np.empty(0),
                         v=plane[:, 1] if len(stamp) else np.empty(0),
                         section=section,
                         meta={"kind": "classical", "window": list(window),
                               "t_total": float(t_total), "n_seeds": seeds.shape[0],
                               "failures": failures})


def dual_section(lines: Sequence[DirectionLine], window: tuple[float, float],
                 section: SectionSpec, seed_ids: Sequence[int] | None = None,
                 ) -> SectionPoints:
    """Dual Poincaré map: filter stored line vertices by arclength window and
    band membership. Pure post-processing; idempotent and order-independent
    (rows come out sorted by seed id, then stamp)."""
    if seed_ids is None:
        seed_ids = list(range(len(lines)))
    ids, stamps, chunks = [], [], []
    ia, ib = section.plane_axes
    for sid, line in sorted(zip(seed_ids, lines), key=lambda t: t[0]):
        mask = (line.s >= window[0]) & (line.s <= window[1])
        if not mask.any():
            continue
        verts = line.vertices[mask]
        s_vals = line.s[mask]
        band = section.band_mask(verts[:, section.axis])
        if not band.any():
            continue
        order = np.argsort(s_vals[band], kind="stable")
        ids.append(np.full(int(band.sum()), sid, dtype=np.int64))
        stamps.append(s_vals[band][order])
        chunks.append(verts[band][:, (ia, ib)][order])
    if chunks:
        seed_id = np.concatenate(ids)
        stamp = np.concatenate(stamps)
        plane = _wrap_plane(np.vstack(chunks), section)
        u, v = plane[:, 0], plane[:, 1]
    else:
        seed_id = np.empty(0, dtype=np.int64)
        stamp = np.empty(0)
        u = np.empty(0)
        v = np.empty(0)
    return SectionPoints(seed_id=seed_id, stamp=stamp, u=u, v=v, section=section,
                         meta={"kind": "dual", "window": list(window),
                               "n_lines": len(lines)})
