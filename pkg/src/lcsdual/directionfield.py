"""Oriented direction fields of the intermediate singular vector and their
arclength-parameterized integral curves.

Initial LCS positions are invariant manifolds of the autonomous system driven
by the intermediate right singular vector of the forward flow-map gradient;
final positions, of the analogous system built on the backward gradient. Both
run through the same machinery here, differing only in the horizon order.
Every right-hand-side evaluation performs a fresh 12-variable flow solve at
the query point; no spatial grid or interpolation is involved, so small and
strongly modulated structures are not undersampled.

A direction field carries no global orientation. Along a curve the sign is
propagated by inner-product continuity with the previous step's direction;
the seed's orientation is imposed by the caller. Blended fields (base plus a
small multiple of the least- or most-stretching singular vector) propagate
the partner sign the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels as _k
from .fields import VelocityField, _check_point
from .flowmap import DEFAULT_TOL
from .strain import DEGENERATE_GAP_RTOL

DEFAULT_H_MAX = 0.1

TERMINATION_REASONS = ("reached_smax", "degenerate_gap", "step_underflow", "left_domain")

# partner name -> singular-vector rank (ascending) in the SVD of the horizon's
# gradient; valid names depend on the base system
_PARTNERS = {
    "xi2": {"xi1": 0, "xi3": 2},
    "eta2": {"eta3": 0, "eta1": 2},
}


class DegenerateGapError(RuntimeError):
    pass


@dataclass(frozen=True)
class DualFieldSpec:
    """Which dual system to evaluate and over which horizon.

    base="xi2" uses the gradient of the flow map from t0 to t1 (a field over
    initial positions); base="eta2" uses the gradient from t1 back to t0 (a
    field over final positions). blend_eps != 0 adds blend_eps times the
    named partner singular vector before renormalizing; blend_eps = 0
    reduces exactly to the base field.
    """

    base: str
    t0: float
    t1: float
    tol: float = DEFAULT_TOL
    blend_eps: float = 0.0
    blend_partner: str | None = None
    gap_rtol: float = DEGENERATE_GAP_RTOL

    def __post_init__(self):
        if self.base not in _PARTNERS:
            raise ValueError(f"base must be 'xi2' or 'eta2', got {self.base!r}")
        if self.blend_eps != 0.0:
            valid = _PARTNERS[self.base]
            if self.blend_partner not in valid:
                raise ValueError(
                    f"blend partner for base {self.base!r} must be one of "
                    f"{sorted(valid)}, got {self.blend_partner!r}")

    @property
    def horizon(self) -> tuple[float, float]:
        if self.base == "xi2":
            return (self.t0, self.t1)
        return (self.t1, self.t0)

    @property
    def partner_rank(self) -> int:
        if self.blend_eps == 0.0:
            return 0
        return _PARTNERS[self.base][self.blend_partner]


@dataclass
class DirectionLine:
    """Arclength-parameterized polyline of one oriented integral curve."""

    seed: np.ndarray
    orientation_seed: np.ndarray
    s: np.ndarray
    vertices: np.ndarray
    termination: str
    s_end: float
    x_end: np.ndarray
    stats: dict = dc_field(default_factory=dict)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    jmax = int(np.argmax(np.abs(v)))
    return -v if v[jmax] < 0.0 else v


def _partner_reference(spec: DualFieldSpec, field: VelocityField, x: np.ndarray) -> np.ndarray:
    """Deterministic initial sign reference for the blend partner: the partner
    singular vector at x, canonically flipped."""
    ta, tb = spec.horizon
    status, y, _, _, _ = _k.flow_df_core(field.kind, field.params, x,
                                         float(ta), float(tb), spec.tol, np.inf)
    if status != _k.OK:
        raise RuntimeError(f"flow-map solve failed at seed {x} (status {status})")
    _, xi, _ = _k.svd3_core(y[3:].reshape(3, 3))
    return _canonical_sign(xi[spec.partner_rank].copy())


def oriented_direction(spec: DualFieldSpec, field: VelocityField, x, prev_dir,
                       prev_partner=None) -> np.ndarray:
    """One evaluation of the oriented (optionally blended) direction field.

    prev_dir is the previous step's direction or the imposed initial
    orientation; the result is flipped to keep a nonnegative inner product
    with it. For blended fields, prev_partner is the partner-sign reference
    (a deterministic canonical reference at x is used when omitted).
    """
    x = _check_point(x)
    prev_dir = np.asarray(prev_dir, dtype=float)
    if abs(np.linalg.norm(prev_dir) - 1.0) > 1e-8:
        raise ValueError("prev_dir must be a unit vector")
    if spec.blend_eps != 0.0:
        if prev_partner is None:
            ref_p = _partner_reference(spec, field, x)
        else:
            ref_p = np.asarray(prev_partner, dtype=float)
    else:
        ref_p = np.zeros(3)
    ta, tb = spec.horizon
    status, d, _, _, sv = _k.dir_eval_core(
        field.kind, field.params, x, float(ta), float(tb), spec.tol,
        spec.blend_eps, spec.partner_rank, prev_dir, ref_p, spec.gap_rtol)
    if status == _k.DEGENERATE_GAP:
        raise DegenerateGapError(
            f"singular-value gap below threshold at {x}: sigma = {sv}")
    if status != _k.OK:
        raise RuntimeError(f"flow-map solve failed at {x} (status {status})")
    return d


def integrate_line(spec: DualFieldSpec, field: VelocityField, seed,
                   initial_orientation, s_max: float,
                   output_stride: float = 0.0,
                   h_max: float = DEFAULT_H_MAX,
                   tol_line: float | None = None,
                   record_window: tuple[float, float] | None = None,
                   bounds: tuple | None = None) -> DirectionLine:
    """Integrate one oriented direction line up to arclength s_max.

    Vertices are stored unwrapped, at most every ``output_stride`` of
    arclength (0 records every accepted step) and only inside
    ``record_window`` when given. Early termination (degenerate gap, step
    underflow, domain exit) is reported in the result, not raised, so batch
    sweeps keep going.
    """
    seed = _check_point(seed)
    d0 = np.asarray(initial_orientation, dtype=float)
    if abs(np.linalg.norm(d0) - 1.0) > 1e-8:
        raise ValueError("initial_orientation must be a unit vector")
    if not s_max > 0.0:
        raise ValueError(f"s_max must be positive, got {s_max}")
    if tol_line is None:
        tol_line = spec.tol
    rec_lo, rec_hi = (0.0, s_max) if record_window is None else record_window
    if bounds is None:
        bounds_lo = np.full(3, -np.inf)
        bounds_hi = np.full(3, np.inf)
    else:
        bounds_lo = np.asarray(bounds[0], dtype=float)
        bounds_hi = np.asarray(bounds[1], dtype=float)

    if spec.blend_eps != 0.0:
        ref_p = _partner_reference(spec, field, seed)
    else:
        ref_p = np.zeros(3)

    ta, tb = spec.horizon
    term, svals, verts, s_end, x_end, nsteps, nrej, flow_solves, max_dev = _k.line_core(
        field.kind, field.params, seed, d0, ref_p, float(ta), float(tb),
        spec.tol, float(tol_line), float(h_max), float(s_max),
        spec.blend_eps, spec.partner_rank, spec.gap_rtol,
        float(rec_lo), float(rec_hi), float(output_stride), bounds_lo, bounds_hi)

    return DirectionLine(
        seed=seed,
        orientation_seed=d0,
        s=svals,
        vertices=verts,
        termination=TERMINATION_REASONS[int(term)],
        s_end=float(s_end),
        x_end=x_end,
        stats={
            "steps": int(nsteps),
            "rejected": int(nrej),
            "flow_solves": int(flow_solves),
            "max_chord_deviation": float(max_dev),
            "h_max": float(h_max),
            "tol_line": float(tol_line),
            "tol_flow": float(spec.tol),
        },
    )
