"""Turning direction-line candidates into typed LCS verdicts.

A long line that accumulates on an invariant manifold of the dual system only
certifies tangency to the intermediate singular direction, which is necessary
but not sufficient. The tools here supply the missing evidence:

* perturbation robustness: re-run the line with a small blend of the least-
  or most-stretching partner direction; a hyperbolic candidate survives the
  in-surface partner and is destroyed by the surface-normal partner,
* tracer-sphere deformation: a small advected sphere elongates normal to a
  repelling surface (and flattens onto an attracting one),
* toroidal fitting plus a near-uniform-stretching audit for elliptic
  candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .directionfield import DirectionLine, DualFieldSpec, integrate_line
from .fields import VelocityField, _check_point
from .flowmap import DEFAULT_TOL, advect, advect_with_variations
from .poincare import SectionSpec, dual_section
from .strain import in_stretch_band, stretch_band, svd3

TWO_PI = 2.0 * np.pi

VERDICT_REPELLING = "RepellingHyperbolic"
VERDICT_ATTRACTING = "AttractingHyperbolic"
VERDICT_ELLIPTIC = "Elliptic"
VERDICT_UNDETERMINED = "Undetermined"


class InsufficientWindingError(ValueError):
    pass


class SparseBinsError(ValueError):
    pass


class LineTerminatedEarly(RuntimeError):
    def __init__(self, label: str, line: DirectionLine, needed: float):
        super().__init__(
            f"{label} line terminated at s = {line.s_end:.3f} ({line.termination}) "
            f"before covering the window up to s = {needed}")
        self.line = line


# ---------------------------------------------------------------------------
# tracer spheres

def fibonacci_sphere_directions(n_points: int) -> np.ndarray:
    """Deterministic quasi-uniform unit directions, antipodally symmetric
    (odd moments vanish exactly, which the linearization oracle relies on)."""
    half = (n_points + 1) // 2
    i = np.arange(half, dtype=float)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    zc = 1.0 - (2.0 * i + 1.0) / (2.0 * half)
    r = np.sqrt(np.maximum(0.0, 1.0 - zc * zc))
    phi = golden * i
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), zc])
    return np.vstack([pts, -pts])


@dataclass
class SphereDeformation:
    center0: np.ndarray
    center1: np.ndarray
    radius: float
    directions: np.ndarray
    points1: np.ndarray
    axes: np.ndarray      # rows, ascending by length
    lengths: np.ndarray   # ascending semi-axis lengths


def advect_sphere(field: VelocityField, center, radius: float, n_points: int,
                  t0: float, t1: float, tol: float = DEFAULT_TOL) -> SphereDeformation:
    """Advect a small tracer sphere and fit the image ellipsoid.

    The linear map best taking initial directions to scaled displacements is
    fitted by least squares; its SVD gives the ellipsoid axes (left singular
    vectors) and semi-axis lengths (singular values times radius). As
    radius -> 0 these converge to the singular structure of the flow-map
    gradient at the center.
    """
    center = _check_point(center)
    if n_points < 50:
        raise ValueError(f"n_points must be at least 50, got {n_points}")
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    dirs = fibonacci_sphere_directions(n_points)
    center1 = advect(field, center, t0, t1, tol)
    points1 = np.empty_like(dirs)
    for j in range(dirs.shape[0]):
        points1[j] = advect(field, center + radius * dirs[j], t0, t1, tol)
    scaled = (points1 - center1) / radius
    amap, *_ = np.linalg.lstsq(dirs, scaled, rcond=None)
    data = svd3(amap.T)
    return SphereDeformation(
        center0=center, center1=center1, radius=float(radius), directions=dirs,
        points1=points1, axes=data.eta, lengths=data.sigma * radius)


# ---------------------------------------------------------------------------
# toroidal frame and surface fitting

@dataclass(frozen=True)
class ToroidalFrame:
    """Coordinates about a vortex center curve (x_c(z), y_c(z), z).

    The center tables are periodic on [0, 2 pi); queries interpolate
    linearly between nodes.
    """

    R1: float
    R2: float
    z_nodes: np.ndarray
    xc: np.ndarray
    yc: np.ndarray

    def __post_init__(self):
        if not (self.R1 > 0.0 and self.R2 > 0.0):
            raise ValueError("toroidal frame radii must be positive")

    def center_at(self, z) -> tuple[np.ndarray, np.ndarray]:
        zq = np.mod(np.asarray(z, dtype=float), TWO_PI)
        nodes = np.concatenate([self.z_nodes, [self.z_nodes[0] + TWO_PI]])
        xc = np.concatenate([self.xc, [self.xc[0]]])
        yc = np.concatenate([self.yc, [self.yc[0]]])
        return np.interp(zq, nodes, xc), np.interp(zq, nodes, yc)


def constant_frame(xc: float, yc: float, R1: float = 2.0, R2: float = 1.0) -> ToroidalFrame:
    return ToroidalFrame(R1=R1, R2=R2, z_nodes=np.array([0.0]),
                         xc=np.array([float(xc)]), yc=np.array([float(yc)]))


def frame_from_points(points, R1: float = 2.0, R2: float = 1.0,
                      n_z: int = 64) -> ToroidalFrame:
    """Estimate the center curve as per-z-bin centroids of the point cloud.

    Published center tables for these flows are not available, so the frame
    is rebuilt from the candidate's own vertices; user tables can be passed
    straight to ToroidalFrame instead.
    """
    pts = np.asarray(points, dtype=float)
    z = np.mod(pts[:, 2], TWO_PI)
    edges = np.linspace(0.0, TWO_PI, n_z + 1)
    idx = np.clip(np.digitize(z, edges) - 1, 0, n_z - 1)
    xc = np.full(n_z, np.nan)
    yc = np.full(n_z, np.nan)
    for b in range(n_z):
        sel = idx == b
        if sel.any():
            xc[b] = pts[sel, 0].mean()
            yc[b] = pts[sel, 1].mean()
    if np.isnan(xc).all():
        raise ValueError("no points to build a toroidal frame from")
    xc = _fill_periodic_nan(xc)
    yc = _fill_periodic_nan(yc)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return ToroidalFrame(R1=R1, R2=R2, z_nodes=centers, xc=xc, yc=yc)


def _fill_periodic_nan(values: np.ndarray) -> np.ndarray:
    """Fill NaN runs by linear interpolation with periodic continuation."""
    out = values.copy()
    n = out.shape[0]
    good = np.flatnonzero(~np.isnan(out))
    if good.size == n:
        return out
    for i in np.flatnonzero(np.isnan(out)):
        prev_candidates = good[good < i]
        nxt_candidates = good[good > i]
        prev = prev_candidates[-1] if prev_candidates.size else good[-1] - n
        nxt = nxt_candidates[0] if nxt_candidates.size else good[0] + n
        w = (i - prev) / (nxt - prev)
        out[i] = (1.0 - w) * out[prev % n] + w * out[nxt % n]
    return out


def toroidal_transform(x, frame: ToroidalFrame) -> np.ndarray:
    """Map (x, y, z) to ring coordinates about the center curve."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    xc, yc = frame.center_at(pts[:, 2])
    rad = pts[:, 0] - xc + frame.R1
    out = np.column_stack([
        rad * np.cos(pts[:, 2]),
        rad * np.sin(pts[:, 2]),
        frame.R2 * (pts[:, 1] - yc),
    ])
    return out[0] if single else out


def toroidal_inverse(xbar, frame: ToroidalFrame) -> np.ndarray:
    """Inverse of toroidal_transform; returns z in [0, 2 pi)."""
    xbar = np.asarray(xbar, dtype=float)
    single = xbar.ndim == 1
    pts = np.atleast_2d(xbar)
    z = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
    xc, yc = frame.center_at(z)
    rad = np.hypot(pts[:, 0], pts[:, 1])
    out = np.column_stack([
        rad - frame.R1 + xc,
        pts[:, 2] / frame.R2 + yc,
        z,
    ])
    return out[0] if single else out


@dataclass
class TorusMesh:
    """Structured quad mesh (z index i, poloidal index j), periodic in both."""

    frame: ToroidalFrame
    vertices: np.ndarray  # (n_z, n_theta, 3)

    @property
    def n_z(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_theta(self) -> int:
        return self.vertices.shape[1]

    def normals(self) -> np.ndarray:
        """Unit vertex normals from central differences on the periodic grid."""
        v = self.vertices
        dz = np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)
        dt = np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)
        n = np.cross(dz, dt)
        norms = np.linalg.norm(n, axis=2, keepdims=True)
        return n / np.where(norms > 0.0, norms, 1.0)


def fit_torus_surface(points, frame: ToroidalFrame, n_z: int = 32,
                      n_theta: int = 32, min_windings: float = 2.0,
                      max_empty_frac: float = 0.5) -> TorusMesh:
    """Bin point data by (z, poloidal angle), average the poloidal radius per
    bin, fill gaps by periodic interpolation, and emit a structured mesh.

    Points must wind around the center curve (checked by the accumulated
    poloidal angle along the sequence); more than ``max_empty_frac`` empty
    bins is an error.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 16:
        raise ValueError("need an (n, 3) point array with n >= 16")
    z = np.mod(pts[:, 2], TWO_PI)
    xc, yc = frame.center_at(z)
    u = pts[:, 0] - xc
    w = pts[:, 1] - yc
    theta = np.mod(np.arctan2(w, u), TWO_PI)
    radius = np.hypot(u, w)

    dtheta = np.diff(theta)
    dtheta = np.mod(dtheta + np.pi, TWO_PI) - np.pi
    winding = abs(float(np.sum(dtheta))) / TWO_PI
    if winding < min_windings:
        raise InsufficientWindingError(
            f"points wind {winding:.2f} times around the center curve "
            f"(need {min_windings})")

    zi = np.clip((z / TWO_PI * n_z).astype(int), 0, n_z - 1)
    tj = np.clip((theta / TWO_PI * n_theta).astype(int), 0, n_theta - 1)
    sums = np.zeros((n_z, n_theta))
    counts = np.zeros((n_z, n_theta))
    np.add.at(sums, (zi, tj), radius)
    np.add.at(counts, (zi, tj), 1.0)
    empty_frac = float((counts == 0).mean())
    if empty_frac > max_empty_frac:
        raise SparseBinsError(
            f"{100 * empty_frac:.0f}% of (z, theta) bins are empty "
            f"(limit {100 * max_empty_frac:.0f}%)")
    rgrid = np.where(counts > 0, sums / np.where(counts > 0, counts, 1.0), np.nan)
    for i in range(n_z):
        if np.isnan(rgrid[i]).all():
            continue
        rgrid[i] = _fill_periodic_nan(rgrid[i])
    for j in range(n_theta):
        if np.isnan(rgrid[:, j]).any():
            rgrid[:, j] = _fill_periodic_nan(rgrid[:, j])

    z_centers = (np.arange(n_z) + 0.5) * (TWO_PI / n_z)
    t_centers = (np.arange(n_theta) + 0.5) * (TWO_PI / n_theta)
    xc_g, yc_g = frame.center_at(z_centers)
    verts = np.empty((n_z, n_theta, 3))
    for j, th in enumerate(t_centers):
        verts[:, j, 0] = xc_g + rgrid[:, j] * np.cos(th)
        verts[:, j, 1] = yc_g + rgrid[:, j] * np.sin(th)
        verts[:, j, 2] = z_centers
    return TorusMesh(frame=frame, vertices=verts)


# ---------------------------------------------------------------------------
# point-cloud distance and perturbation robustness

def symmetric_cloud_distance(a, b, periods: Sequence[float | None] | None = None) -> float:
    """Symmetric mean nearest-neighbor distance between two point clouds.

    Robust to density differences between the clouds. Periodic coordinates
    are compared in the minimum-image sense via tiling.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("clouds must be (n, d) arrays of equal dimension")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("cannot measure the distance of an empty cloud")

    def one_sided(src, dst):
        tiled = _tile_periodic(dst, periods)
        tree = cKDTree(tiled)
        dists, _ = tree.query(_wrap_cloud(src, periods), k=1)
        return float(np.mean(dists))

    return 0.5 * (one_sided(a, b) + one_sided(b, a))


def _wrap_cloud(pts: np.ndarray, periods) -> np.ndarray:
    if periods is None:
        return pts
    out = pts.copy()
    for i, p in enumerate(periods):
        if p is not None:
            out[:, i] = np.mod(out[:, i], p)
    return out


def _tile_periodic(pts: np.ndarray, periods) -> np.ndarray:
    pts = _wrap_cloud(pts, periods)
    if periods is None:
        return pts
    tiles = [pts]
    for i, p in enumerate(periods):
        if p is None:
            continue
        shifted = []
        for t in tiles:
            plus = t.copy()
            plus[:, i] += p
            minus = t.copy()
            minus[:, i] -= p
            shifted.extend([plus, minus])
        tiles.extend(shifted)
    return np.vstack(tiles)


@dataclass
class PerturbationEvidence:
    distance_tangent: float
    distance_normal: float
    cloud_base: np.ndarray
    cloud_tangent: np.ndarray
    cloud_normal: np.ndarray
    lines: dict = dc_field(default_factory=dict)


def perturbation_robustness(field: VelocityField, base_spec: DualFieldSpec, seed,
                            initial_orientation, s_max: float,
                            window: tuple[float, float], section: SectionSpec,
                            eps: float = 0.01, h_max: float = 0.1,
                            tol_line: float | None = None,
                            output_stride: float = 0.0) -> PerturbationEvidence:
    """Integrate the base line and its two blended variants from one seed and
    compare their section clouds.

    The in-surface partner (least stretching for the forward system, its
    analogue for the backward one) must reproduce the base cloud; the
    surface-normal partner destroys a genuinely hyperbolic structure. Lines
    that terminate before covering the window raise LineTerminatedEarly.
    """
    if base_spec.blend_eps != 0.0:
        raise ValueError("base_spec must have blend_eps = 0")
    tangent_partner = "xi1" if base_spec.base == "xi2" else "eta3"
    normal_partner = "xi3" if base_spec.base == "xi2" else "eta1"

    labels = ("base", "tangent", "normal")
    specs = {
        "base": base_spec,
        "tangent": DualFieldSpec(base=base_spec.base, t0=base_spec.t0, t1=base_spec.t1,
                                 tol=base_spec.tol, blend_eps=eps,
                                 blend_partner=tangent_partner, gap_rtol=base_spec.gap_rtol),
        "normal": DualFieldSpec(base=base_spec.base, t0=base_spec.t0, t1=base_spec.t1,
                                tol=base_spec.tol, blend_eps=eps,
                                blend_partner=normal_partner, gap_rtol=base_spec.gap_rtol),
    }
    lines = {}
    clouds = {}
    for label in labels:
        line = integrate_line(specs[label], field, seed, initial_orientation,
                              s_max=s_max, output_stride=output_stride, h_max=h_max,
                              tol_line=tol_line, record_window=window)
        if line.s_end < window[1]:
            raise LineTerminatedEarly(label, line, window[1])
        lines[label] = line
        pts = dual_section([line], window, section)
        if len(pts) == 0:
            raise ValueError(f"{label} line produced no section points in the window")
        clouds[label] = pts.cloud()

    plane_periods = [section.periods[ax] for ax in section.plane_axes]
    d_tan = symmetric_cloud_distance(clouds["tangent"], clouds["base"], plane_periods)
    d_norm = symmetric_cloud_distance(clouds["normal"], clouds["base"], plane_periods)
    return PerturbationEvidence(
        distance_tangent=d_tan, distance_normal=d_norm,
        cloud_base=clouds["base"], cloud_tangent=clouds["tangent"],
        cloud_normal=clouds["normal"], lines=lines)


# ---------------------------------------------------------------------------
# stretch audit and verdicts

@dataclass
class StretchAudit:
    passed: np.ndarray        # bool per vertex (flattened grid)
    fraction_passed: float
    failures: list


def stretch_audit(mesh: TorusMesh, field: VelocityField, t0: float, t1: float,
                  delta: float, tol: float = DEFAULT_TOL,
                  n_samples: int = 64) -> StretchAudit:
    """Check the near-uniform-stretching band at every mesh vertex.

    At each vertex the flow-map gradient is computed and all tangent
    directions are required to stretch within [sigma2 (1-delta),
    sigma2 (1+delta)]. Flow failures are collected, not raised.
    """
    verts = mesh.vertices.reshape(-1, 3)
    normals = mesh.normals().reshape(-1, 3)
    passed = np.zeros(verts.shape[0], dtype=bool)
    failures = []
    for i in range(verts.shape[0]):
        try:
            sample = advect_with_variations(field, verts[i], t0, t1, tol)
            lam_min, lam_max = stretch_band(sample.DF, normals[i], n_samples)
            sigma2 = svd3(sample.DF).sigma[1]
        except Exception as exc:  # flow failure at a vertex is data
            failures.append((i, repr(exc)))
            continue
        passed[i] = in_stretch_band(lam_min, lam_max, sigma2, delta)
    n_ok = verts.shape[0] - len(failures)
    frac = float(passed.sum() / n_ok) if n_ok else 0.0
    return StretchAudit(passed=passed, fraction_passed=frac, failures=failures)


@dataclass
class CandidateVerdict:
    type: str
    evidence: dict
    artifacts: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.type != VERDICT_UNDETERMINED and len(self.evidence) < 2:
            raise ValueError("a typed verdict needs at least two evidence items")


def _min_image(delta: np.ndarray, periods) -> np.ndarray:
    out = delta.copy()
    for i, p in enumerate(periods):
        if p is not None:
            out[..., i] = np.mod(out[..., i] + 0.5 * p, p) - 0.5 * p
    return out


def surface_patch_near(line: DirectionLine, window: tuple[float, float],
                       center: np.ndarray, radius: float,
                       periods=(TWO_PI, TWO_PI, TWO_PI)) -> np.ndarray:
    """Windowed line vertices within a minimum-image ball around ``center``,
    shifted into the image nearest to the center (so the patch is a coherent
    local piece of surface even across periodic seams)."""
    mask = (line.s >= window[0]) & (line.s <= window[1])
    verts = line.vertices[mask]
    delta = _min_image(verts - center, periods)
    keep = np.linalg.norm(delta, axis=1) <= radius
    return center + delta[keep]


def patch_normal(points: np.ndarray) -> np.ndarray:
    """Smallest principal direction of a local point patch."""
    if points.shape[0] < 12:
        raise ValueError(f"need at least 12 patch points, got {points.shape[0]}")
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return vt[-1]


def angle_between_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Orientation-free angle between two directions, in degrees (<= 90)."""
    c = abs(float(np.dot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(np.degrees(np.arccos(min(1.0, c))))


def _flattest_patch_center(line: DirectionLine, window: tuple[float, float],
                           verts: np.ndarray, neighbor_radius: float,
                           n_candidates: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Pick, among evenly spaced candidate vertices, the one whose local
    patch is flattest (deterministic stand-in for choosing an illustrative
    piece of the candidate surface by eye)."""
    best = None
    stride = max(1, verts.shape[0] // n_candidates)
    for idx in range(0, verts.shape[0], stride):
        center = verts[idx]
        patch = surface_patch_near(line, window, center, neighbor_radius)
        if patch.shape[0] < 24:
            continue
        centered = patch - patch.mean(axis=0)
        sv = np.linalg.svd(centered, compute_uv=False)
        flatness = sv[2] / max(sv[1], 1e-300)
        if best is None or flatness < best[0]:
            best = (flatness, center, patch)
    if best is None:
        raise ValueError("no candidate center has a dense enough surface patch")
    return best[1].copy(), best[2]


def sphere_alignment_evidence(field: VelocityField, base: str, line: DirectionLine,
                              window: tuple[float, float], t_sphere: tuple[float, float],
                              radius: float = 1e-3, n_points: int = 128,
                              neighbor_radius: float = 0.5, tol: float = DEFAULT_TOL,
                              center_index: int | None = None) -> dict:
    """Local deformation analysis of a hyperbolic candidate.

    For a forward (xi2) candidate the sphere sits on the surface at t0 and its
    image under the short horizon t_sphere must be most elongated along the
    advected surface normal. For a backward (eta2) candidate the sphere is
    pulled back from the t1 surface, advected forward again, and must be
    flattest along the surface normal (tracers align with the surface).
    """
    mask = (line.s >= window[0]) & (line.s <= window[1])
    verts = line.vertices[mask]
    if verts.shape[0] < 24:
        raise ValueError("not enough windowed vertices for a surface patch")
    if center_index is None:
        center, patch = _flattest_patch_center(line, window, verts, neighbor_radius)
    else:
        center = verts[center_index].copy()
        patch = surface_patch_near(line, window, center, neighbor_radius)

    ta, tb = t_sphere
    if base == "xi2":
        sphere_center = center
        advected_patch = np.array([advect(field, q, ta, tb, tol) for q in patch])
        normal = patch_normal(advected_patch)
    else:
        sphere_center = advect(field, center, tb, ta, tol)
        normal = patch_normal(patch)

    deformation = advect_sphere(field, sphere_center, radius, n_points, ta, tb, tol)
    if base == "xi2":
        axis = deformation.axes[2]  # most elongated
        kind = "major_axis_vs_advected_normal"
    else:
        axis = deformation.axes[0]  # flattest
        kind = "minor_axis_vs_surface_normal"
    angle = angle_between_deg(axis, normal)
    return {
        "kind": kind,
        "angle_deg": angle,
        "axis_lengths": deformation.lengths.tolist(),
        "center": center.tolist(),
        "sphere_horizon": [float(ta), float(tb)],
        "n_patch_points": int(patch.shape[0]),
    }


def classify_hyperbolic_candidate(field: VelocityField, base_spec: DualFieldSpec,
                                  seed, initial_orientation, s_max: float,
                                  window: tuple[float, float], section: SectionSpec,
                                  tangent_threshold: float, normal_factor: float = 5.0,
                                  eps: float = 0.01, sphere_horizon: float = 1.0,
                                  angle_max_deg: float = 10.0, h_max: float = 0.1,
                                  tol_line: float | None = None,
                                  output_stride: float = 0.0,
                                  sphere_radius: float = 1e-3,
                                  sphere_points: int = 128,
                                  neighbor_radius: float = 0.5) -> CandidateVerdict:
    """Assemble a hyperbolic verdict from perturbation robustness plus the
    tracer-sphere deformation signature."""
    pert = perturbation_robustness(field, base_spec, seed, initial_orientation,
                                   s_max, window, section, eps=eps, h_max=h_max,
                                   tol_line=tol_line, output_stride=output_stride)
    if base_spec.base == "xi2":
        t_sphere = (base_spec.t0, base_spec.t0 + sphere_horizon)
        verdict_type = VERDICT_REPELLING
    else:
        t_sphere = (base_spec.t1 - sphere_horizon, base_spec.t1)
        verdict_type = VERDICT_ATTRACTING
    sphere_ev = sphere_alignment_evidence(
        field, base_spec.base, pert.lines["base"], window, t_sphere,
        radius=sphere_radius, n_points=sphere_points,
        neighbor_radius=neighbor_radius, tol=base_spec.tol)

    robust = (pert.distance_tangent <= tangent_threshold
              and pert.distance_normal >= normal_factor * tangent_threshold)
    aligned = sphere_ev["angle_deg"] <= angle_max_deg
    evidence = {
        "perturbation": {
            "distance_tangent": pert.distance_tangent,
            "distance_normal": pert.distance_normal,
            "tangent_threshold": tangent_threshold,
            "normal_factor": normal_factor,
            "eps": eps,
            "passed": bool(robust),
        },
        "sphere": {**sphere_ev, "angle_max_deg": angle_max_deg, "passed": bool(aligned)},
    }
    if robust and aligned:
        return CandidateVerdict(type=verdict_type, evidence=evidence)
    return CandidateVerdict(type=VERDICT_UNDETERMINED, evidence=evidence)


def classify_elliptic_candidate(field: VelocityField, base_spec: DualFieldSpec,
                                seed, initial_orientation, s_max: float,
                                window: tuple[float, float], delta: float = 0.2,
                                R1: float = 2.0, R2: float = 1.0,
                                n_z: int = 32, n_theta: int = 32,
                                h_max: float = 0.1, tol_line: float | None = None,
                                output_stride: float = 0.0,
                                min_pass_fraction: float = 0.5) -> CandidateVerdict:
    """Assemble an elliptic verdict from a tubular surface fit plus the
    near-uniform-stretching audit."""
    line = integrate_line(base_spec, field, seed, initial_orientation,
                          s_max=s_max, output_stride=output_stride, h_max=h_max,
                          tol_line=tol_line, record_window=window)
    if line.s_end < window[1]:
        raise LineTerminatedEarly("elliptic candidate", line, window[1])
    mask = (line.s >= window[0]) & (line.s <= window[1])
    pts = line.vertices[mask]
    evidence: dict = {"n_points": int(pts.shape[0])}
    try:
        frame = frame_from_points(pts, R1=R1, R2=R2, n_z=n_z)
        mesh = fit_torus_surface(pts, frame, n_z=n_z, n_theta=n_theta)
        evidence["torus_fit"] = {"passed": True, "n_z": n_z, "n_theta": n_theta}
    except (InsufficientWindingError, SparseBinsError, ValueError) as exc:
        evidence["torus_fit"] = {"passed": False, "error": str(exc)}
        return CandidateVerdict(type=VERDICT_UNDETERMINED, evidence=evidence)

    audit = stretch_audit(mesh, field, base_spec.t0, base_spec.t1, delta,
                          tol=base_spec.tol)
    evidence["stretch_audit"] = {
        "fraction_passed": audit.fraction_passed,
        "delta": delta,
        "n_failures": len(audit.failures),
        "passed": audit.fraction_passed > min_pass_fraction,
    }
    verdict_type = (VERDICT_ELLIPTIC if audit.fraction_passed > min_pass_fraction
                    else VERDICT_UNDETERMINED)
    return CandidateVerdict(type=verdict_type, evidence=evidence,
                            artifacts={"mesh": mesh})


def mesh_area_growth(mesh: TorusMesh, field: VelocityField, t0: float, t1: float,
                     tol: float = DEFAULT_TOL) -> np.ndarray:
    """Per-quad area growth factors of the mesh advected from t0 to t1.

    A coherently advecting tubular surface keeps these moderate; for an
    incompressible flow any surface tangent to the two larger stretch
    directions must grow (the product of the upper two stretches exceeds one).
    """
    v0 = mesh.vertices
    shape = v0.shape
    flat = v0.reshape(-1, 3)
    v1 = np.array([advect(field, q, t0, t1, tol) for q in flat]).reshape(shape)

    def quad_areas(v):
        # poloidal ring closes in space (roll axis 1); the z seam does not,
        # so only consecutive z rows form quads
        a = v[:-1, :, :]
        b = v[1:, :, :]
        c = np.roll(v, -1, axis=1)[1:, :, :]
        d = np.roll(v, -1, axis=1)[:-1, :, :]
        return 0.5 * np.linalg.norm(np.cross(c - a, d - b), axis=2)

    area0 = quad_areas(v0)
    area1 = quad_areas(v1)
    mask = area0 > 0.0
    out = np.full(area0.shape, np.nan)
    out[mask] = area1[mask] / area0[mask]
    return out
