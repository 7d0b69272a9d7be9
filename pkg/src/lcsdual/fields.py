"""Benchmark velocity fields and their exact spatial gradients.

Three analytic flows are built in: the two-and-a-half-dimensional cat's eye
flow, the steady ABC flow, and its time-aperiodic modification with smoothly
switched-on coefficient wobble. User test fields are supplied as affine maps
u = M x + b, which is what the integration oracles need (matrix exponentials,
rigid rotations, uniform stretching).

Positions fed to a field are wrapped into [0, period) on periodic axes before
evaluation; trajectories elsewhere in the package stay unwrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k

TWO_PI = 2.0 * math.pi

ABC_A = math.sqrt(3.0)
ABC_B = math.sqrt(2.0)
ABC_C = 1.0
APERIODIC_K = (0.3, 0.5, 1.5, 1.8)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box; ``periods[i]`` is the period of axis i or None if unbounded."""

    periods: tuple[float | None, float | None, float | None]

    def wrap(self, x: np.ndarray) -> np.ndarray:
        out = np.array(x, dtype=float)
        for i, period in enumerate(self.periods):
            if period is not None:
                out[i] = _k.wrap_to_period(out[i], period)
        return out


@dataclass(frozen=True)
class VelocityField:
    """An analytic velocity field with closed-form spatial gradient."""

    name: str
    kind: int
    params: np.ndarray
    domain: Domain
    meta: dict = field(default_factory=dict)

    def velocity(self, x, t: float = 0.0) -> np.ndarray:
        x = _check_point(x)
        out = np.empty(3)
        _k.eval_u(self.kind, self.params, x[0], x[1], x[2], float(t), out)
        return out

    def velocity_gradient(self, x, t: float = 0.0) -> np.ndarray:
        x = _check_point(x)
        u = np.empty(3)
        du = np.empty(9)
        _k.eval_u_du(self.kind, self.params, x[0], x[1], x[2], float(t), u, du)
        return du.reshape(3, 3)

    def velocity_and_gradient(self, x, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        x = _check_point(x)
        u = np.empty(3)
        du = np.empty(9)
        _k.eval_u_du(self.kind, self.params, x[0], x[1], x[2], float(t), u, du)
        return u, du.reshape(3, 3)


def _check_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"expected a 3-vector position, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite position component in {x}")
    return x


def stream_function(x: float, y: float, c: float = 2.0) -> float:
    """Cat's eye stream function: -log[c cosh(y) + sqrt(c^2-1) cos(x)], c > 1."""
    if not c > 1.0:
        raise ValueError(f"cat's eye parameter must satisfy c > 1, got {c}")
    arg = c * math.cosh(y) + math.sqrt(c * c - 1.0) * math.cos(x)
    if arg <= 0.0:
        raise ValueError(f"log argument {arg} <= 0 at (x={x}, y={y}, c={c})")
    return -math.log(arg)


def aperiodic_coefficients(t: float, B: float = ABC_B, C: float = ABC_C,
                           k0: float = APERIODIC_K[0], k1: float = APERIODIC_K[1],
                           k2: float = APERIODIC_K[2], k3: float = APERIODIC_K[3],
                           ) -> tuple[float, float]:
    """Time-dependent ABC coefficients: the steady values plus a tanh-gated wobble."""
    gate = k0 * math.tanh(k1 * t)
    bt = B + B * gate * math.cos((k2 * t) ** 2)
    ct = C + C * gate * math.sin((k3 * t) ** 2)
    return bt, ct


def cats_eye(c: float = 2.0) -> VelocityField:
    if not c > 1.0:
        raise ValueError(f"cat's eye parameter must satisfy c > 1, got {c}")
    return VelocityField(
        name="cats_eye",
        kind=_k.KIND_CATS_EYE,
        params=np.array([c], dtype=float),
        domain=Domain((TWO_PI, None, None)),
        meta={"c": c},
    )


def steady_abc(A: float = ABC_A, B: float = ABC_B, C: float = ABC_C) -> VelocityField:
    return VelocityField(
        name="steady_abc",
        kind=_k.KIND_STEADY_ABC,
        params=np.array([A, B, C], dtype=float),
        domain=Domain((TWO_PI, TWO_PI, TWO_PI)),
        meta={"A": A, "B": B, "C": C},
    )


def aperiodic_abc(A: float = ABC_A, B: float = ABC_B, C: float = ABC_C,
                  k0: float = APERIODIC_K[0], k1: float = APERIODIC_K[1],
                  k2: float = APERIODIC_K[2], k3: float = APERIODIC_K[3],
                  ) -> VelocityField:
    return VelocityField(
        name="aperiodic_abc",
        kind=_k.KIND_APERIODIC_ABC,
        params=np.array([A, B, C, k0, k1, k2, k3], dtype=float),
        domain=Domain((TWO_PI, TWO_PI, TWO_PI)),
        meta={"A": A, "B": B, "C": C, "k0": k0, "k1": k1, "k2": k2, "k3": k3},
    )


def affine_field(M, b=(0.0, 0.0, 0.0), name: str = "affine") -> VelocityField:
    """Custom test field u = M x + b (unbounded, no periodicity)."""
    M = np.asarray(M, dtype=float).reshape(3, 3)
    b = np.asarray(b, dtype=float).reshape(3)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
        raise ValueError("affine field requires finite M and b")
    params = np.concatenate([M.ravel(), b])
    return VelocityField(
        name=name,
        kind=_k.KIND_AFFINE,
        params=params,
        domain=Domain((None, None, None)),
        meta={"M": M.tolist(), "b": b.tolist()},
    )


def make_field(name: str, **params) -> VelocityField:
    """Construct a field by registry name; unknown names raise KeyError."""
    try:
        ctor = FIELD_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(FIELD_REGISTRY))
        raise KeyError(f"unknown velocity field {name!r}; known fields: {known}") from None
    return ctor(**params)


FIELD_REGISTRY = {
    "cats_eye": cats_eye,
    "steady_abc": steady_abc,
    "aperiodic_abc": aperiodic_abc,
    "affine": affine_field,
}
