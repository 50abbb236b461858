"""Built-in metric charts with closed-form curvature oracles.

Every entry is written in the metric DSL, so the catalog also exercises the
parser.  The oracles give frame curvature in the Gram-Schmidt frame of the
chart, which for these diagonal or product metrics is adapted to the
geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .curvature import FrameCurvature
from .dsl import MetricSpec, parse_metric

# Measured with the engine (and cross-checked against the sphere and product
# oracles) and frozen as a regression value: the real-coordinate Fubini-Study
# chart below has Ric = 6 g.
CP2_FS_SCALAR = 24.0

_FLAT = """
g11 = 1
g22 = 1
g33 = 1
g44 = 1
"""

_SPHERE4 = """
param r = 1
g11 = r^2*(2/(1 + x1^2 + x2^2 + x3^2 + x4^2))^2
g22 = r^2*(2/(1 + x1^2 + x2^2 + x3^2 + x4^2))^2
g33 = r^2*(2/(1 + x1^2 + x2^2 + x3^2 + x4^2))^2
g44 = r^2*(2/(1 + x1^2 + x2^2 + x3^2 + x4^2))^2
"""

# x1, x2 = polar/azimuthal angle on the first factor; x3, x4 on the second
_S2XS2 = """
param r1 = 1
param r2 = 1
domain x1 = 0.3, 2.8415926535897931
domain x2 = -3, 3
domain x3 = 0.3, 2.8415926535897931
domain x4 = -3, 3
g11 = r1^2
g22 = r1^2*sin(x1)^2
g33 = r2^2
g44 = r2^2*sin(x3)^2
"""

# affine chart z1 = x1 + i x2, z2 = x3 + i x4
_CP2 = """
g11 = (1 + x3^2 + x4^2)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g22 = (1 + x3^2 + x4^2)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g33 = (1 + x1^2 + x2^2)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g44 = (1 + x1^2 + x2^2)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g13 = -(x1*x3 + x2*x4)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g24 = -(x1*x3 + x2*x4)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g23 = (x1*x4 - x2*x3)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
g14 = -(x1*x4 - x2*x3)/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2
"""

_PERTURBED = """
param eps = 0.01
g11 = 1 + eps*x2^2
g12 = eps*x1*x3
g22 = 1
g33 = 1
g34 = eps*x2*x4
g44 = 1
"""


class CatalogError(ValueError):
    pass


def constant_curvature_oracle(K: float) -> FrameCurvature:
    """``R_abcd = K (d_ac d_bd - d_ad d_bc)``, valid in any orthonormal frame."""
    d = np.eye(4)
    return FrameCurvature(K * (np.einsum("ac,bd->abcd", d, d) - np.einsum("ad,bc->abcd", d, d)))


def product_sphere_oracle(K1: float, K2: float) -> FrameCurvature:
    """Product of surfaces of curvature K1 (on e1, e2) and K2 (on e3, e4)."""
    R = np.zeros((4, 4, 4, 4))
    for (a, b), K in (((0, 1), K1), ((2, 3), K2)):
        R[a, b, a, b] = R[b, a, b, a] = K
        R[a, b, b, a] = R[b, a, a, b] = -K
    return FrameCurvature(R)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: Mapping[str, float]
    spec: MetricSpec
    asd: bool
    einstein: bool
    constant_s: bool
    expected_s: float | None = None
    oracle: Callable[[], FrameCurvature] | None = field(default=None, compare=False)

    @property
    def flags(self) -> dict[str, bool]:
        return {"asd": self.asd, "einstein": self.einstein, "constant_s": self.constant_s}


def _positive(name: str, v: float) -> float:
    v = float(v)
    if not (v > 0 and math.isfinite(v)):
        raise CatalogError(f"parameter {name} must be positive, got {v!r}")
    return v


def _flat(params, orientation):
    return CatalogEntry(
        "flat", {}, parse_metric(_FLAT).with_orientation(orientation), True, True, True, 0.0,
        lambda: constant_curvature_oracle(0.0),
    )


def _sphere4(params, orientation):
    r = _positive("r", params.get("r", 1.0))
    K = 1.0 / r**2
    return CatalogEntry(
        "sphere4", {"r": r}, parse_metric(_SPHERE4, r=r).with_orientation(orientation), True, True, True,
        12.0 * K, lambda: constant_curvature_oracle(K),
    )


def _s2xs2(params, orientation):
    r1 = _positive("r1", params.get("r1", 1.0))
    r2 = _positive("r2", params.get("r2", 1.0))
    K1, K2 = 1.0 / r1**2, 1.0 / r2**2
    R = product_sphere_oracle(K1, K2)
    if orientation == "reversed":
        R = FrameCurvature(R.R)  # same components; the reversed frame only flips e4
    return CatalogEntry(
        "s2xs2", {"r1": r1, "r2": r2}, parse_metric(_S2XS2, r1=r1, r2=r2).with_orientation(orientation),
        False, K1 == K2, True, 2.0 * (K1 + K2), lambda: R,
    )


def _cp2(params, orientation):
    return CatalogEntry(
        "cp2_fs", {}, parse_metric(_CP2).with_orientation(orientation),
        orientation == "reversed", True, True, CP2_FS_SCALAR, None,
    )


def _perturbed(params, orientation):
    eps = float(params.get("eps", 0.01))
    if not (math.isfinite(eps) and abs(eps) < 0.5):
        raise CatalogError("eps must satisfy |eps| < 0.5 to keep the chart positive definite")
    return CatalogEntry(
        "perturbed_flat", {"eps": eps}, parse_metric(_PERTURBED, eps=eps).with_orientation(orientation),
        eps == 0.0, eps == 0.0, eps == 0.0, 0.0 if eps == 0.0 else None, None,
    )


_REGISTRY = {
    "flat": (_flat, ()),
    "sphere4": (_sphere4, ("r",)),
    "s2xs2": (_s2xs2, ("r1", "r2")),
    "cp2_fs": (_cp2, ()),
    "perturbed_flat": (_perturbed, ("eps",)),
}

NAMES = tuple(_REGISTRY)


def parameter_names(name: str) -> tuple[str, ...]:
    if name not in _REGISTRY:
        raise CatalogError(f"unknown catalog entry {name!r}; choose from {', '.join(NAMES)}")
    return _REGISTRY[name][1]


def get(name: str, params: Mapping[str, float] | None = None, orientation: str = "standard") -> CatalogEntry:
    params = dict(params or {})
    allowed = parameter_names(name)
    extra = set(params) - set(allowed)
    if extra:
        raise CatalogError(f"{name} takes no parameter(s) {sorted(extra)}")
    if orientation not in ("standard", "reversed"):
        raise CatalogError("orientation must be 'standard' or 'reversed'")
    return _REGISTRY[name][0](params, orientation)


def source_text(name: str) -> str:
    """The DSL text behind a catalog entry (parameters at their defaults)."""
    parameter_names(name)
    return {"flat": _FLAT, "sphere4": _SPHERE4, "s2xs2": _S2XS2, "cp2_fs": _CP2, "perturbed_flat": _PERTURBED}[name]


def sample_points(spec: MetricSpec, n: int, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
    """Uniform draws from the domain box shrunk by ``margin`` of its width on each side."""
    lo = np.array([a for a, _ in spec.domain])
    hi = np.array([b for _, b in spec.domain])
    w = hi - lo
    return rng.uniform(lo + margin * w, hi - margin * w, size=(n, 4))
