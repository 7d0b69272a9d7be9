"""Deformation diagnostics built on the SVD of the flow-map gradient.

The gradient maps its right singular vectors onto its left singular vectors
scaled by the stretch factors, DF xi_i = sigma_i eta_i, with the singular
values kept in ascending order. Everything here works off the SVD directly;
the Cauchy-Green tensors are never formed (their eigenvalues are sigma_i^2
by definition, which is how ``cauchy_green_eigenvalues`` reports them).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k

DEGENERATE_GAP_RTOL = 1e-10


@dataclass
class StrainData:
    """Ascending singular values with right (xi) and left (eta) singular vectors.

    ``xi[i]`` and ``eta[i]`` are unit row vectors; ``gap`` is the smaller of
    the two singular-value separations and ``degenerate`` flags gaps below
    DEGENERATE_GAP_RTOL * sigma3.
    """

    sigma: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    gap: float
    degenerate: bool

    def cauchy_green_eigenvalues(self) -> np.ndarray:
        return self.sigma**2


def svd3(DF, gap_rtol: float = DEGENERATE_GAP_RTOL,
         require_positive_det: bool = True) -> StrainData:
    """SVD of a 3x3 deformation gradient with a deterministic sign convention.

    Each xi_i is flipped (together with its eta_i) so that its
    largest-magnitude component is positive. Consumers that need orientation
    continuity along a path apply their own sign rule instead.

    True deformation gradients are orientation-preserving, so a nonpositive
    determinant is rejected by default; finite-difference approximations can
    legitimately fold over near strong ridges and pass
    require_positive_det=False.
    """
    DF = np.asarray(DF, dtype=float)
    if DF.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {DF.shape}")
    if not np.all(np.isfinite(DF)):
        raise ValueError("non-finite entries in deformation gradient")
    det = float(np.linalg.det(DF))
    if require_positive_det and det <= 0.0:
        raise ValueError(f"deformation gradient must have positive determinant, got {det}")
    sv, xi, eta = _k.svd3_core(DF)
    sv = sv.copy()
    xi = xi.copy()
    eta = eta.copy()
    for i in range(3):
        jmax = int(np.argmax(np.abs(xi[i])))
        if xi[i, jmax] < 0.0:
            xi[i] = -xi[i]
            eta[i] = -eta[i]
    gap = float(min(sv[1] - sv[0], sv[2] - sv[1]))
    return StrainData(sigma=sv, xi=xi, eta=eta, gap=gap,
                      degenerate=gap <= gap_rtol * sv[2])


def ftle(sigma3: float, t0: float, t1: float) -> float:
    """Finite-time Lyapunov exponent (t1 - t0)^-1 log sigma3."""
    horizon = float(t1) - float(t0)
    if horizon == 0.0:
        raise ValueError("FTLE is undefined for a zero horizon")
    if not sigma3 > 0.0:
        raise ValueError(f"sigma3 must be positive, got {sigma3}")
    return float(np.log(sigma3) / horizon)


def sigma2_nearest_unity_check(sigma) -> tuple[bool, tuple[float, float]]:
    """Check that the middle stretch is the one nearest unity.

    After normalizing by the geometric mean m = (s1 s2 s3)^(1/3), verifies
    s1/m < min(s2/m, m/s2) <= 1 <= max(s2/m, m/s2) < s3/m and returns the
    inequality slacks (lower, upper): min - s1/m and s3/m - max.
    """
    s = np.asarray(sigma, dtype=float)
    if s.shape != (3,):
        raise ValueError(f"expected three singular values, got shape {s.shape}")
    if not (0.0 < s[0] < s[1] < s[2]):
        raise ValueError(f"singular values must be positive and ascending, got {s}")
    m = float(np.cbrt(s[0] * s[1] * s[2]))
    a, b, c = s[0] / m, s[1] / m, s[2] / m
    lo = min(b, 1.0 / b)
    hi = max(b, 1.0 / b)
    ok = (a < lo <= 1.0 <= hi < c)
    return bool(ok), (float(lo - a), float(c - hi))


def repulsion_and_shear(DF, n0) -> tuple[float, float, np.ndarray]:
    """Normal repulsion and tangential shear of a surface element with unit
    normal n0 advected by DF.

    The advected unit normal is the normalized inverse-transpose image of n0;
    rho is the normal component of DF n0 and the shear is the tangential rest.
    """
    DF = np.asarray(DF, dtype=float)
    n0 = np.asarray(n0, dtype=float)
    if abs(np.linalg.norm(n0) - 1.0) > 1e-8:
        raise ValueError(f"n0 must be a unit vector, |n0| = {np.linalg.norm(n0)}")
    det = float(np.linalg.det(DF))
    if det <= 0.0:
        raise ValueError(f"deformation gradient must have positive determinant, got {det}")
    n1 = np.linalg.solve(DF.T, n0)
    n1 /= np.linalg.norm(n1)
    v1 = DF @ n0
    rho = float(v1 @ n1)
    shear = float(np.linalg.norm(v1 - rho * n1))
    return rho, shear, n1


def stretch_band(DF, n0, n_samples: int = 64) -> tuple[float, float]:
    """Extremal tangent stretch factors over the plane orthogonal to n0.

    Samples the stretch of unit tangent vectors at n_samples equispaced
    angles in [0, pi). A surface point is nearly uniformly stretching with
    deviation Delta iff the returned interval lies inside
    [sigma2 (1 - Delta), sigma2 (1 + Delta)].
    """
    if n_samples < 8:
        raise ValueError(f"n_samples must be at least 8, got {n_samples}")
    DF = np.asarray(DF, dtype=float)
    n0 = np.asarray(n0, dtype=float)
    n0 = n0 / np.linalg.norm(n0)
    # orthonormal tangent basis: pick the axis least aligned with n0
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(n0)))] = 1.0
    ea = np.cross(n0, helper)
    ea /= np.linalg.norm(ea)
    eb = np.cross(n0, ea)
    theta = np.arange(n_samples) * (np.pi / n_samples)
    tangents = np.outer(np.cos(theta), ea) + np.outer(np.sin(theta), eb)
    stretches = np.linalg.norm(tangents @ DF.T, axis=1)
    return float(stretches.min()), float(stretches.max())


def in_stretch_band(lam_min: float, lam_max: float, sigma2: float, delta: float) -> bool:
    return sigma2 * (1.0 - delta) <= lam_min and lam_max <= sigma2 * (1.0 + delta)
