"""Flow map and deformation gradient by direct integration.

The trajectory equation and the equation of variations are solved together as
one 12-variable system with an adaptive embedded Runge-Kutta 5(4) pair
(Dormand-Prince coefficients); position and gradient share the error control.
Backward horizons (t1 < t0) run through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .fields import VelocityField, _check_point

DEFAULT_TOL = 1e-8


class FlowMapError(RuntimeError):
    pass


class StepUnderflowError(FlowMapError):
    def __init__(self, t_reached: float):
        super().__init__(f"step size underflow at t = {t_reached!r}")
        self.t_reached = t_reached


class NonFiniteStateError(FlowMapError):
    def __init__(self, t_reached: float):
        super().__init__(f"non-finite state encountered near t = {t_reached!r}")
        self.t_reached = t_reached


def _raise_for_status(status: int, t_reached: float) -> None:
    if status == _k.STEP_UNDERFLOW:
        raise StepUnderflowError(t_reached)
    if status == _k.NONFINITE:
        raise NonFiniteStateError(t_reached)


@dataclass
class FlowSample:
    """End state of a coupled trajectory/gradient integration."""

    x0: np.ndarray
    t0: float
    t1: float
    x1: np.ndarray
    DF: np.ndarray
    steps: int
    rejected: int


def _check_tol(tol: float) -> float:
    tol = float(tol)
    if not tol > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    return tol


def advect(field: VelocityField, x0, t0: float, t1: float,
           tol: float = DEFAULT_TOL, h_max: float = np.inf) -> np.ndarray:
    """Trajectory endpoint x(t1; t0, x0)."""
    x0 = _check_point(x0)
    tol = _check_tol(tol)
    status, x1, t_reached, _, _ = _k.advect_core(
        field.kind, field.params, x0, float(t0), float(t1), tol, h_max)
    _raise_for_status(status, t_reached)
    return x1


def advect_with_variations(field: VelocityField, x0, t0: float, t1: float,
                           tol: float = DEFAULT_TOL, h_max: float = np.inf) -> FlowSample:
    """Trajectory endpoint plus the gradient of the flow map (DF(t0) = identity)."""
    x0 = _check_point(x0)
    tol = _check_tol(tol)
    status, y, t_reached, nsteps, nrej = _k.flow_df_core(
        field.kind, field.params, x0, float(t0), float(t1), tol, h_max)
    _raise_for_status(status, t_reached)
    return FlowSample(
        x0=x0,
        t0=float(t0),
        t1=float(t1),
        x1=y[:3].copy(),
        DF=y[3:].reshape(3, 3).copy(),
        steps=int(nsteps),
        rejected=int(nrej),
    )


def finite_difference_gradient(field: VelocityField, x0, t0: float, t1: float,
                               delta: float = 1e-5, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Central-difference gradient from six auxiliary trajectories.

    This is the comparison method the variational solve is evaluated against;
    it is not used anywhere in the production pipelines.
    """
    x0 = _check_point(x0)
    delta = float(delta)
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    df = np.empty((3, 3))
    for j in range(3):
        xp = x0.copy()
        xp[j] += delta
        xm = x0.copy()
        xm[j] -= delta
        fp = advect(field, xp, t0, t1, tol)
        fm = advect(field, xm, t0, t1, tol)
        df[:, j] = (fp - fm) / (2.0 * delta)
    return df
