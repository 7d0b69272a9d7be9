import numpy as np
import pytest

import lcsdual as ld
from lcsdual.classify import (InsufficientWindingError, SparseBinsError,
                              advect_sphere, angle_between_deg, constant_frame,
                              fibonacci_sphere_directions, fit_torus_surface,
                              frame_from_points, patch_normal,
                              perturbation_robustness, stretch_audit,
                              symmetric_cloud_distance, toroidal_inverse,
                              toroidal_transform, CandidateVerdict, ToroidalFrame)
from lcsdual.directionfield import DualFieldSpec
from lcsdual.flowmap import advect_with_variations
from lcsdual.poincare import SectionSpec
from lcsdual.strain import svd3

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# tracer spheres

def test_fibonacci_directions_quasi_uniform():
    dirs = fibonacci_sphere_directions(128)
    assert dirs.shape == (128, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    # exact antipodal symmetry kills odd moments
    assert np.allclose(dirs.sum(axis=0), 0.0, atol=1e-12)
    # second moment close to isotropic
    m2 = dirs.T @ dirs / dirs.shape[0]
    assert np.abs(m2 - np.eye(3) / 3.0).max() < 0.02


def test_sphere_rigid_rotation_maps_to_sphere():
    rot = ld.affine_field(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0],
                                    [0.0, 0.0, 0.0]]))
    d = advect_sphere(rot, [1.0, 2.0, 0.0], 1e-2, 64, 0.0, 2.0)
    ratios = d.lengths / 1e-2
    assert np.abs(ratios - 1.0).max() < 1e-6


def test_sphere_linearization_oracle(abc_field):
    center = np.array([1.0, 2.0, 0.5])
    t0, t1 = 0.0, 2.0
    sample = advect_with_variations(abc_field, center, t0, t1)
    data = svd3(sample.DF)
    d = advect_sphere(abc_field, center, 1e-3, 128, t0, t1)
    assert np.abs(d.lengths / 1e-3 - data.sigma).max() / data.sigma[2] < 0.01
    for i in range(3):
        assert angle_between_deg(d.axes[i], data.eta[i]) < 1.0


def test_sphere_linearization_rate(abc_field):
    # axis-length errors scale like radius^2: shrinking the radius 10x
    # improves the relative error by about 100x; the integrator tolerance
    # must sit well below the quadratic term at the smaller radius
    tol = 1e-12
    center = np.array([1.0, 2.0, 0.5])
    sample = advect_with_variations(abc_field, center, 0.0, 2.0, tol=tol)
    sigma = svd3(sample.DF).sigma
    errs = []
    for radius in (1e-3, 1e-4):
        d = advect_sphere(abc_field, center, radius, 128, 0.0, 2.0, tol=tol)
        errs.append(np.abs(d.lengths / radius - sigma).max())
    ratio = errs[0] / errs[1]
    assert 30.0 <= ratio <= 300.0


def test_sphere_input_validation(abc_field):
    with pytest.raises(ValueError):
        advect_sphere(abc_field, [0.0, 0.0, 0.0], 1e-3, 10, 0.0, 1.0)
    with pytest.raises(ValueError):
        advect_sphere(abc_field, [0.0, 0.0, 0.0], -1.0, 64, 0.0, 1.0)


# ---------------------------------------------------------------------------
# toroidal coordinates

def test_toroidal_transform_center_ring():
    frame = constant_frame(xc=1.0, yc=2.0, R1=2.0, R2=1.0)
    out = toroidal_transform([1.0, 2.0, 0.0], frame)
    assert np.allclose(out, [2.0, 0.0, 0.0], atol=1e-14)
    out = toroidal_transform([1.0, 2.0, np.pi / 2.0], frame)
    assert np.allclose(out, [0.0, 2.0, 0.0], atol=1e-14)
    out = toroidal_transform([1.0, 3.0, 0.0], frame)  # y = yc + 1, R2 = 1
    assert abs(out[2] - 1.0) < 1e-14


def test_toroidal_round_trip(rng):
    z_nodes = np.linspace(0.0, TWO_PI, 32, endpoint=False)
    frame = ToroidalFrame(R1=2.0, R2=1.0, z_nodes=z_nodes,
                          xc=3.0 + 0.3 * np.sin(z_nodes),
                          yc=2.0 + 0.2 * np.cos(z_nodes))
    for _ in range(200):
        x = np.array([rng.uniform(2.0, 4.0), rng.uniform(1.0, 3.0),
                      rng.uniform(0.0, TWO_PI)])
        back = toroidal_inverse(toroidal_transform(x, frame), frame)
        assert np.abs(back - x).max() <= 1e-12


def test_frame_radii_validation():
    with pytest.raises(ValueError):
        ToroidalFrame(R1=-1.0, R2=1.0, z_nodes=np.array([0.0]),
                      xc=np.array([0.0]), yc=np.array([0.0]))


# ---------------------------------------------------------------------------
# torus fitting

def synthetic_torus_points(n, r0=0.5, xc=3.0, yc=2.5, noise=0.0, rng=None):
    t = np.arange(n, dtype=float)
    z = np.mod(t * 0.1, TWO_PI)
    theta = np.mod(t * 0.1 * 1.61803398875, TWO_PI)
    r = r0 if rng is None or noise == 0.0 else r0 * (1.0 + noise * rng.standard_normal(n))
    return np.column_stack([xc + r * np.cos(theta), yc + r * np.sin(theta), z])


def test_fit_torus_exact_points():
    pts = synthetic_torus_points(10_000)
    frame = constant_frame(xc=3.0, yc=2.5)
    mesh = fit_torus_surface(pts, frame, n_z=24, n_theta=24)
    radii = np.hypot(mesh.vertices[:, :, 0] - 3.0, mesh.vertices[:, :, 1] - 2.5)
    assert np.abs(radii - 0.5).max() < 1e-6
    assert mesh.n_z == 24 and mesh.n_theta == 24


def test_fit_torus_noisy_points(rng):
    noise = 0.01
    pts = synthetic_torus_points(20_000, noise=noise, rng=rng)
    frame = constant_frame(xc=3.0, yc=2.5)
    mesh = fit_torus_surface(pts, frame, n_z=16, n_theta=16)
    radii = np.hypot(mesh.vertices[:, :, 0] - 3.0, mesh.vertices[:, :, 1] - 2.5)
    assert np.abs(radii - 0.5).max() < 3.0 * noise * 0.5


def test_fit_torus_rejects_non_winding():
    pts = np.column_stack([np.full(200, 3.5), np.full(200, 2.5),
                           np.linspace(0.0, TWO_PI, 200)])
    frame = constant_frame(xc=3.0, yc=2.5)
    with pytest.raises(InsufficientWindingError):
        fit_torus_surface(pts, frame)


def test_fit_torus_rejects_sparse_bins():
    # plenty of winding but everything at z ~ 0: almost all z-rows empty
    t = np.linspace(0.0, 40.0 * np.pi, 600)
    pts = np.column_stack([3.0 + 0.5 * np.cos(t), 2.5 + 0.5 * np.sin(t),
                           np.full(600, 1e-3)])
    frame = constant_frame(xc=3.0, yc=2.5)
    with pytest.raises(SparseBinsError):
        fit_torus_surface(pts, frame, n_z=16, n_theta=16)


def test_frame_from_points_recovers_center():
    pts = synthetic_torus_points(5_000, xc=2.2, yc=4.0)
    frame = frame_from_points(pts, n_z=16)
    xc, yc = frame.center_at(np.linspace(0.0, TWO_PI, 7))
    assert np.abs(xc - 2.2).max() < 0.05
    assert np.abs(yc - 4.0).max() < 0.05


# ---------------------------------------------------------------------------
# cloud distance

def test_cloud_distance_zero_on_identical(rng):
    a = rng.uniform(0.0, TWO_PI, (100, 2))
    assert symmetric_cloud_distance(a, a.copy()) == 0.0


def test_cloud_distance_symmetric_and_offset(rng):
    a = rng.uniform(1.0, 2.0, (200, 2))
    b = a + np.array([0.1, 0.0])
    d1 = symmetric_cloud_distance(a, b)
    d2 = symmetric_cloud_distance(b, a)
    assert d1 == d2
    assert d1 <= 0.1 + 1e-12


def test_cloud_distance_periodic_wrap():
    a = np.array([[0.01, 1.0]])
    b = np.array([[TWO_PI - 0.01, 1.0]])
    flat = symmetric_cloud_distance(a, b, periods=None)
    wrapped = symmetric_cloud_distance(a, b, periods=(TWO_PI, None))
    assert flat > 6.0
    assert abs(wrapped - 0.02) < 1e-12


def test_cloud_distance_rejects_empty():
    with pytest.raises(ValueError):
        symmetric_cloud_distance(np.empty((0, 2)), np.ones((3, 2)))


# ---------------------------------------------------------------------------
# perturbation robustness on the constant-frame field

def test_perturbation_straight_line_offsets():
    # globally constant singular frame: all three lines are straight, and both
    # perturbed clouds sit exactly eps away from the base cloud
    f = ld.affine_field(np.diag([-0.5, 0.4, 0.1]))
    spec = DualFieldSpec(base="xi2", t0=0.0, t1=2.0)
    sec = SectionSpec(axis="z", value=0.0, eps=0.05, periods=(None, None, None))
    ev = perturbation_robustness(f, spec, [0.0, 0.0, -1.0], [0.0, 0.0, 1.0],
                                 s_max=2.5, window=(0.0, 2.5), section=sec,
                                 eps=0.01, h_max=0.05)
    assert abs(ev.distance_tangent - ev.distance_normal) < 2e-3
    assert 0.005 < ev.distance_tangent < 0.02


def test_perturbation_requires_clean_base_spec():
    spec = DualFieldSpec(base="xi2", t0=0.0, t1=2.0, blend_eps=0.01,
                         blend_partner="xi1")
    with pytest.raises(ValueError):
        perturbation_robustness(ld.steady_abc(), spec, [0, 0, 0], [0, 0, 1.0],
                                1.0, (0.0, 1.0), SectionSpec())


# ---------------------------------------------------------------------------
# stretch audit and verdict plumbing

def test_stretch_audit_isometry_passes():
    rot = ld.affine_field(np.array([[0.0, -0.3, 0.0], [0.3, 0.0, 0.0],
                                    [0.0, 0.0, 0.0]]))
    pts = synthetic_torus_points(4_000)
    mesh = fit_torus_surface(pts, constant_frame(3.0, 2.5), n_z=8, n_theta=8)
    # delta slightly above zero absorbs integrator-tolerance roundoff in DF
    audit = stretch_audit(mesh, rot, 0.0, 2.0, delta=1e-6)
    assert audit.fraction_passed == 1.0
    assert not audit.failures


def test_stretch_audit_diagonal_analytic():
    # u = (a x, -a y, 0): DF = diag(e^{aT}, e^{-aT}, 1); for a surface with
    # normal e_x the tangent stretches are {e^{-aT}, 1}, so the band test
    # passes iff e^{-aT} >= 1 - delta
    from lcsdual.classify import TorusMesh

    a, T = 0.05, 1.0
    f = ld.affine_field(np.diag([a, -a, 0.0]))
    frame = constant_frame(0.0, 0.0, R1=2.0, R2=1.0)
    # a synthetic x = 0 sheet, periodic grid in (z, j), so normals point in +-x
    verts = np.zeros((4, 4, 3))
    verts[:, :, 1] = 0.3 * np.sin(np.linspace(0, TWO_PI, 4))[None, :]
    verts[:, :, 2] = np.linspace(0.0, TWO_PI, 4, endpoint=False)[:, None]
    mesh = TorusMesh(frame=frame, vertices=verts)
    normals = mesh.normals().reshape(-1, 3)
    # this degenerate mesh has normals along +-x
    assert np.abs(np.abs(normals[:, 0]) - 1.0).max() < 1e-9
    gap = 1.0 - np.exp(-a * T)
    audit_tight = stretch_audit(mesh, f, 0.0, T, delta=0.5 * gap)
    audit_loose = stretch_audit(mesh, f, 0.0, T, delta=2.0 * gap)
    assert audit_tight.fraction_passed == 0.0
    assert audit_loose.fraction_passed == 1.0


def test_patch_normal_and_angles(rng):
    pts = rng.uniform(-1.0, 1.0, (50, 3))
    pts[:, 2] = 0.05 * pts[:, 0] + 0.02 * pts[:, 1]
    n = patch_normal(pts)
    assert angle_between_deg(n, [-0.05, -0.02, 1.0]) < 1.0
    assert angle_between_deg([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == 90.0
    with pytest.raises(ValueError):
        patch_normal(pts[:5])


def test_verdict_requires_evidence():
    with pytest.raises(ValueError):
        CandidateVerdict(type="Elliptic", evidence={"only": 1})
    v = CandidateVerdict(type="Undetermined", evidence={})
    assert v.type == "Undetermined"
