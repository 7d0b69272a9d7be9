"""Acceptance suite: the desk-scale reproduction experiments.

One test per criterion, each printing a PASS line with its measured numbers
when it succeeds (run pytest with -s or read the captured output). Frozen
calibration data lives in tests/goldens; the configs that generated the
goldens ship in configs/. Budget on two cores is roughly 25-30 minutes, most
of it in the direction-line integrations.
"""

import json
from pathlib import Path

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

import lcsdual as ld
from lcsdual.cli import main, run_command
from lcsdual.classify import (classify_hyperbolic_candidate, advect_sphere,
                              symmetric_cloud_distance)
from lcsdual.config import parse_config
from lcsdual.directionfield import DualFieldSpec, integrate_line, oriented_direction
from lcsdual.fields import stream_function
from lcsdual.flowmap import advect_with_variations
from lcsdual.parallel import ordered_parallel_map
from lcsdual.poincare import SectionSpec
from lcsdual.runio import read_csv
from lcsdual.strain import ftle, sigma2_nearest_unity_check, svd3
from lcsdual.cli import _line_task

from conftest import GOLDEN_DIR
from oracles import expm, spearman_rank_correlation

pytestmark = pytest.mark.acceptance

CONFIG_DIR = Path(__file__).parent.parent / "configs"
TWO_PI = 2.0 * np.pi


def report(criterion: int, message: str) -> None:
    print(f"\nACCEPTANCE {criterion}: PASS {message}")


def load_cloud(csv_path: Path) -> np.ndarray:
    _, rows = read_csv(csv_path)
    if not rows:
        return np.empty((0, 4))
    return np.array([[float(v) for v in r] for r in rows])


# ---------------------------------------------------------------------------
# 1. variational integrator vs matrix exponential

def test_criterion_1_matrix_exponential_oracle(rng):
    mats = [
        np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        np.array([[0.0, -0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        np.array([[0.3, 0.1, 0.0], [0.0, -0.4, 0.2], [0.1, 0.0, 0.1]]),
        np.array([[0.0, 0.4, -0.2], [-0.4, 0.1, 0.0], [0.2, 0.0, -0.1]]),
    ]
    worst = 0.0
    for M in mats:
        field = ld.affine_field(M)
        for horizon in (1.0, 5.0, 10.0):
            x0 = rng.standard_normal(3)
            sample = advect_with_variations(field, x0, 0.0, horizon, tol=1e-10)
            err = np.abs(sample.DF - expm(M * horizon)).max()
            worst = max(worst, err)
    assert worst < 1e-8
    report(1, f"constant-matrix gradients match the matrix exponential "
              f"(worst error {worst:.2e} < 1e-8 over horizons up to 10)")


# ---------------------------------------------------------------------------
# 2. incompressibility and singular-value ordering on a 3D seed grid

def _strain_grid_task(args):
    field, seed = args
    sample = advect_with_variations(field, seed, 0.0, 10.0)
    return svd3(sample.DF), float(np.linalg.det(sample.DF))


def test_criterion_2_incompressibility_and_ordering(abc_field):
    centers = lambda n: (np.arange(n) + 0.5) * TWO_PI / n
    seeds = np.array([[a, b, c] for a in centers(20) for b in centers(20)
                      for c in centers(5)])
    results = ordered_parallel_map(_strain_grid_task,
                                   [(abc_field, s) for s in seeds], workers=2)
    worst_prod = 0.0
    n_degenerate = 0
    for data, det in results:
        worst_prod = max(worst_prod, abs(np.prod(data.sigma) - 1.0))
        if data.degenerate:
            n_degenerate += 1
            continue
        ok, _ = sigma2_nearest_unity_check(data.sigma)
        assert ok
    assert worst_prod <= 1e-6
    report(2, f"2000-seed grid: |sigma product - 1| <= {worst_prod:.2e} and the "
              f"middle-stretch inequality chain holds everywhere "
              f"({n_degenerate} degenerate points skipped)")


# ---------------------------------------------------------------------------
# 3. finite-difference accuracy study (full 500x500 grid)

def test_criterion_3_fd_accuracy_study(tmp_path):
    cfg = parse_config((CONFIG_DIR / "abc_fd_compare.cfg").read_text())
    out = tmp_path / "fd"
    assert run_command(cfg, "fd-compare", out, workers=2) == 0
    arr = load_cloud(out / "fd_compare.csv")
    angle, lam = arr[:, 4], arr[:, 5]
    max_angle = angle.max()
    assert max_angle > 80.0
    thr = np.percentile(angle, 90)
    mask = angle >= thr
    rho = spearman_rank_correlation(angle[mask], lam[mask])
    assert rho > 0.5
    report(3, f"500x500 study: max angle {max_angle:.2f} deg > 80 deg and "
              f"rank correlation {rho:.3f} > 0.5 on the top-decile set "
              f"(n={mask.sum()})")


# ---------------------------------------------------------------------------
# 4. cat's eye tangency and closure

def test_criterion_4_cats_eye_tangency(cats_eye_field):
    golden = json.loads((GOLDEN_DIR / "catseye_bands.json").read_text())
    seeds = np.array(golden["seeds"])
    spec = DualFieldSpec(base="xi2", t0=golden["horizon"][0],
                         t1=golden["horizon"][1], tol=golden["tol"])
    orient = np.array([0.0, 0.0, 1.0])
    tasks = [(spec, cats_eye_field, s, orient, golden["s_max"], 0.0,
              golden["h_max"], None, None) for s in seeds]
    lines = ordered_parallel_map(_line_task, tasks, workers=2)

    worst_margin = np.inf
    worst_closure = 0.0
    for i, line in enumerate(lines):
        assert line.termination == "reached_smax"
        psi0 = stream_function(seeds[i][0], seeds[i][1])
        psi = np.array([stream_function(v[0], v[1]) for v in line.vertices])
        dpsi = np.abs(psi - psi0).max()
        band = golden["psi_band"][i]
        assert dpsi <= band, f"seed {i}: psi excursion {dpsi} above band {band}"
        worst_margin = min(worst_margin, band - dpsi)

        s, verts = line.s, line.vertices
        early = s <= 250.0
        late = s >= 260.0
        cs_x = CubicSpline(s[early], verts[early, 0])
        cs_y = CubicSpline(s[early], verts[early, 1])
        sd = np.arange(s[early][0], s[early][-1], 0.02)
        ex, ey = cs_x(sd), cs_y(sd)
        best = np.inf
        for v in verts[late][::10]:
            dx = np.abs(v[0] - ex) % TWO_PI
            dx = np.minimum(dx, TWO_PI - dx)
            best = min(best, float(np.sqrt(dx**2 + (v[1] - ey) ** 2).min()))
        assert best <= golden["closure_threshold"], f"seed {i} projection did not close"
        worst_closure = max(worst_closure, best)
    report(4, f"20 lines stay inside their frozen stream-function bands "
              f"(min margin {worst_margin:.2e}) and every projection closes "
              f"(worst return distance {worst_closure:.2e} <= 1e-2)")


# ---------------------------------------------------------------------------
# 5. steady ABC dual Poincare map regression (smoke scale)

def test_criterion_5_dual_poincare_regression(tmp_path):
    golden_dir = GOLDEN_DIR / "abc_dual_smoke"
    thresholds = json.loads((golden_dir / "thresholds.json").read_text())
    cfg = parse_config((CONFIG_DIR / "abc_dual_poincare_smoke.cfg").read_text())
    out = tmp_path / "dual"
    assert run_command(cfg, "dual-poincare", out, workers=2) == 0

    golden_manifest = json.loads((golden_dir / "manifest.json").read_text())
    fresh_manifest = json.loads((out / "manifest.json").read_text())
    assert fresh_manifest["config_hash"] == golden_manifest["config_hash"]

    golden = load_cloud(golden_dir / "section.csv")
    fresh = load_cloud(out / "section.csv")
    dist = symmetric_cloud_distance(fresh[:, 2:4], golden[:, 2:4],
                                    periods=(TWO_PI, TWO_PI))
    assert dist <= thresholds["cloud_distance_threshold"]

    # bounded-annulus property: vortical seeds stay tight, chaotic seeds spread
    def radial_stats(arr, sid):
        m = arr[:, 0] == sid
        u, v = arr[m, 2], arr[m, 3]
        cu = np.angle(np.exp(1j * u).mean())
        cv = np.angle(np.exp(1j * v).mean())
        du = np.mod(u - cu + np.pi, TWO_PI) - np.pi
        dv = np.mod(v - cv + np.pi, TWO_PI) - np.pi
        r = np.hypot(du, dv)
        return float(np.median(r)), float(r.max())

    for sid in thresholds["vortical_seeds"]:
        r_med, r_max = radial_stats(fresh, sid)
        assert r_max <= thresholds["vortical_r_max"]
        assert r_max / max(r_med, 1e-9) <= thresholds["vortical_ratio_max"] \
            or r_max <= 0.1
    for sid in thresholds["chaotic_seeds"]:
        _, r_max = radial_stats(fresh, sid)
        assert r_max >= thresholds["chaotic_r_max_min"]
    report(5, f"5x5 smoke cloud matches the frozen golden "
              f"(distance {dist:.4f} <= {thresholds['cloud_distance_threshold']}); "
              f"vortical seeds {thresholds['vortical_seeds']} stay bounded, "
              f"chaotic seeds spread")


# ---------------------------------------------------------------------------
# 6. aperiodic classification, both dual systems

def test_criterion_6_aperiodic_classification(aperiodic_field):
    golden = json.loads((GOLDEN_DIR / "aperiodic_classify.json").read_text())
    sec = SectionSpec(axis="z", value=0.0, eps=golden["section_eps"],
                      periods=aperiodic_field.domain.periods)
    orient = np.array([0.0, 0.0, 1.0])

    verdicts = {}
    for base in ("xi2", "eta2"):
        params = golden[base]
        spec = DualFieldSpec(base=base, t0=0.0, t1=5.0, tol=golden["tol"])
        verdict = classify_hyperbolic_candidate(
            aperiodic_field, spec, np.array(params["seed"]), orient,
            s_max=golden["s_max"], window=tuple(golden["window"]), section=sec,
            tangent_threshold=params["tangent_threshold"],
            normal_factor=golden["normal_factor"], eps=0.01,
            sphere_horizon=1.0, angle_max_deg=10.0,
            h_max=golden["h_max"], tol_line=golden["tol_line"],
            neighbor_radius=golden["neighbor_radius"])
        verdicts[base] = verdict
        pert = verdict.evidence["perturbation"]
        assert pert["distance_tangent"] <= params["tangent_threshold"]
        assert pert["distance_normal"] >= golden["normal_factor"] * params["tangent_threshold"]
        assert verdict.evidence["sphere"]["angle_deg"] <= 10.0
    assert verdicts["xi2"].type == "RepellingHyperbolic"
    assert verdicts["eta2"].type == "AttractingHyperbolic"
    x = verdicts["xi2"].evidence["perturbation"]
    e = verdicts["eta2"].evidence["perturbation"]
    report(6, "repelling seed (5.03, 3.14, 0.00): tangent blend stays on the "
              f"structure (d={x['distance_tangent']:.3f}), normal blend destroys it "
              f"(d={x['distance_normal']:.3f}); sphere elongates along the normal "
              f"({verdicts['xi2'].evidence['sphere']['angle_deg']:.1f} deg); mirrored "
              f"backward-map test (d_tan={e['distance_tangent']:.3f}, "
              f"d_norm={e['distance_normal']:.3f}) gives AttractingHyperbolic")


# ---------------------------------------------------------------------------
# 7. tracer-sphere linearization rate

def test_criterion_7_sphere_linearization(abc_field):
    tol = 1e-12
    center = np.array([1.0, 2.0, 0.5])
    sigma = svd3(advect_with_variations(abc_field, center, 0.0, 2.0, tol=tol).DF).sigma
    errs = []
    for radius in (1e-3, 1e-4):
        d = advect_sphere(abc_field, center, radius, 128, 0.0, 2.0, tol=tol)
        errs.append(np.abs(d.lengths / radius - sigma).max())
    ratio = errs[0] / errs[1]
    assert 30.0 <= ratio <= 300.0
    report(7, f"axis-length errors shrink by {ratio:.0f}x when the radius "
              f"shrinks 10x (quadratic convergence to the gradient's stretches)")


# ---------------------------------------------------------------------------
# 8. orientation equivariance and bit-identical reruns

def test_criterion_8_orientation_and_determinism(abc_field, rng, tmp_path):
    spec = DualFieldSpec(base="xi2", t0=0.0, t1=10.0)
    for _ in range(100):
        x = rng.uniform(0.0, TWO_PI, 3)
        prev = rng.standard_normal(3)
        prev /= np.linalg.norm(prev)
        d1 = oriented_direction(spec, abc_field, x, prev)
        d2 = oriented_direction(spec, abc_field, x, -prev)
        assert np.array_equal(d1, -d2)

    # every command, run twice at one worker, byte-identical artifacts
    cases = {
        "ftle": "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 1\n"
                "seeds.nx = 3\nseeds.ny = 3\n",
        "fd-compare": "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 1\n"
                      "seeds.nx = 2\nseeds.ny = 2\n",
        "line-sweep": "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 5\n"
                      "seeds.mode = list\nseeds.list = 1,2,0.5\nline.s_max = 2\n",
        "classical-poincare": "field.name = steady_abc\nhorizon.t0 = 0\n"
                              "horizon.t1 = 10\nseeds.mode = list\n"
                              "seeds.list = 1,1,0\ntime.total = 100\n"
                              "window.lo = 0\nwindow.hi = 100\nsection.eps = 2e-2\n",
        "dual-poincare": "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 5\n"
                         "seeds.mode = list\nseeds.list = 1,2,0.5\n"
                         "line.s_max = 30\nline.h_max = 0.2\nwindow.lo = 0\n"
                         "window.hi = 30\nsection.eps = 0.05\n",
        "sphere": "field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 1\n"
                  "sphere.center = 1,2,0.5\nsphere.n_points = 64\n",
    }
    for command, text in cases.items():
        cfgfile = tmp_path / f"{command}.cfg"
        cfgfile.write_text(text)
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{command}-{tag}"
            code = main([command, "--config", str(cfgfile), "--out", str(out),
                         "--workers", "1"])
            assert code == 0
            outs.append(out)
        for artifact in sorted(outs[0].iterdir()):
            twin = outs[1] / artifact.name
            assert artifact.read_bytes() == twin.read_bytes(), \
                f"{command}/{artifact.name} differs between reruns"
    report(8, "direction evaluations are orientation-flip equivariant at 100 "
              "random points; reruns of every command are byte-identical")


# ---------------------------------------------------------------------------
# FTLE smoke-field regression (golden frozen after first computation)

def test_ftle_golden_regression(tmp_path):
    golden_dir = GOLDEN_DIR / "abc_ftle_smoke"
    golden = load_cloud(golden_dir / "ftle.csv")
    cfg_text = ("field.name = steady_abc\nhorizon.t0 = 0\nhorizon.t1 = 10\n"
                "seeds.nx = 50\nseeds.ny = 50\n")
    cfg = parse_config(cfg_text)
    out = tmp_path / "ftle"
    assert run_command(cfg, "ftle", out, workers=2) == 0
    fresh = load_cloud(out / "ftle.csv")
    assert fresh.shape == golden.shape
    assert np.abs(fresh[:, 7] - golden[:, 7]).max() <= 1e-9
    # the field has pronounced ridges: top decile well above the median
    lam = fresh[:, 7]
    assert np.percentile(lam, 90) > 2.0 * np.median(lam)
