"""Chart-local calculus: domains, finite-difference derivatives and Lie brackets.

Every field in this package is a *vectorized* callable: it accepts an array of
points with shape ``(..., dim)`` and returns values with shape ``(..., *out)``.
This lets nested stencils (derivatives of derivatives) be evaluated as one
batched call instead of a Python loop per stencil point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]

SCHEMES = ("central-2", "central-4")


class BoundaryMarginError(ValueError):
    """A stencil would leave the chart domain."""


class Domain(Protocol):
    def contains(self, points: np.ndarray) -> np.ndarray: ...

    def has_margin(self, point: np.ndarray, reach: float) -> bool: ...


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.all((pts > np.asarray(self.lo)) & (pts < np.asarray(self.hi)), axis=-1)

    def has_margin(self, point: np.ndarray, reach: float) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p - np.asarray(self.lo) >= reach) and np.all(np.asarray(self.hi) - p >= reach))


@dataclass(frozen=True)
class Shell:
    """Points with ``inner < |x - center| < outer``; ``inner=0`` gives an open ball."""

    center: tuple[float, ...]
    outer: float
    inner: float = 0.0

    def _radius(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(points, dtype=float) - np.asarray(self.center), axis=-1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        r = self._radius(points)
        return (r > self.inner) & (r < self.outer)

    def has_margin(self, point: np.ndarray, reach: float) -> bool:
        r = float(self._radius(point))
        return r - self.inner >= reach and self.outer - r >= reach


@dataclass(frozen=True)
class PredicateDomain:
    """Arbitrary membership test; the margin check probes the axis-aligned cross."""

    predicate: Callable[[np.ndarray], np.ndarray]

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(np.asarray(points, dtype=float)), dtype=bool)

    def has_margin(self, point: np.ndarray, reach: float) -> bool:
        p = np.asarray(point, dtype=float)
        eye = np.eye(p.shape[-1])
        probes = np.concatenate([p + reach * eye, p - reach * eye, p[None]])
        return bool(np.all(self.contains(probes)))


@dataclass(frozen=True)
class Chart:
    dim: int
    domain: Domain
    label: str = ""

    def __post_init__(self) -> None:
        if self.dim < 2 or self.dim % 2:
            raise ValueError(f"chart dimension must be even and >= 2, got {self.dim}")

    @property
    def n(self) -> int:
        return self.dim // 2

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.domain.contains(points)

    def require_margin(self, point: np.ndarray, reach: float) -> None:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {p.shape}")
        if not self.domain.has_margin(p, reach):
            raise BoundaryMarginError(
                f"point {p.tolist()} is within {reach:g} of the boundary of chart {self.label!r}"
            )


@dataclass(frozen=True)
class FDConfig:
    step: float = 1e-5
    scheme: str = "central-2"
    richardson: bool = False

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")

    @property
    def margin(self) -> float:
        return 2.0 * self.step

    def scaled(self, factor: float) -> FDConfig:
        return FDConfig(self.step * factor, self.scheme, self.richardson)


def _base_stencil(scheme: str) -> tuple[np.ndarray, np.ndarray]:
    if scheme == "central-2":
        return np.array([-1.0, 1.0]), np.array([-0.5, 0.5])
    return np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def stencil(cfg: FDConfig) -> tuple[np.ndarray, np.ndarray]:
    """Offsets (in units of ``cfg.step``) and weights (per unit step) of the first-derivative stencil."""
    offsets, weights = _base_stencil(cfg.scheme)
    if not cfg.richardson:
        return offsets, weights
    # extrapolate the step -> step/2 pair; leading error order is 2 or 4
    order = 2 if cfg.scheme == "central-2" else 4
    c = 2.0**order
    all_off = np.concatenate([offsets, offsets / 2.0])
    all_w = np.concatenate([-weights, c * 2.0 * weights]) / (c - 1.0)
    return all_off, all_w


def jacobian(f: Field, x: np.ndarray, cfg: FDConfig) -> np.ndarray:
    """Derivative of ``f`` along every coordinate axis.

    For ``x`` of shape ``(..., d)`` and ``f(x)`` of shape ``(..., *out)`` the result has
    shape ``(..., d, *out)`` with entry ``[..., a, ...] = d f / d x^a``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    offsets, weights = stencil(cfg)
    shifts = offsets[:, None, None] * cfg.step * np.eye(d)[None, :, :]
    pts = x[..., None, None, :] + shifts
    vals = f(pts)
    m_axis = x.ndim - 1
    vals = np.moveaxis(vals, m_axis, -1)
    # elementwise product and sum, not a BLAS dot: symmetric weights then cancel exactly on constants
    return (vals * (weights / cfg.step)).sum(axis=-1)


def partial_derivative(
    f: Field, p: np.ndarray, axis: int, cfg: FDConfig | None = None, chart: Chart | None = None
) -> np.ndarray | float:
    """Central-difference estimate of ``df/dx^axis`` at ``p``."""
    cfg = cfg or FDConfig()
    p = np.asarray(p, dtype=float)
    if chart is not None:
        chart.require_margin(p, cfg.margin)
    offsets, weights = stencil(cfg)
    e = np.zeros_like(p)
    e[axis] = cfg.step
    vals = f(p[None, :] + offsets[:, None] * e[None, :])
    w = (weights / cfg.step).reshape((-1,) + (1,) * (np.ndim(vals) - 1))
    out = (w * vals).sum(axis=0)
    return out.item() if np.ndim(out) == 0 else out


def bracket_field(X: Field, Y: Field, cfg: FDConfig) -> Field:
    """The vector field ``[X, Y]`` as a vectorized callable (real or complex components)."""

    def field(x: np.ndarray) -> np.ndarray:
        dX = jacobian(X, x, cfg)
        dY = jacobian(Y, x, cfg)
        return np.einsum("...i,...ik->...k", X(x), dY) - np.einsum("...i,...ik->...k", Y(x), dX)

    return field


def lie_bracket(
    X: Field, Y: Field, p: np.ndarray, cfg: FDConfig | None = None, chart: Chart | None = None
) -> np.ndarray:
    """``[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k`` at ``p``."""
    cfg = cfg or FDConfig()
    p = np.asarray(p, dtype=float)
    if chart is not None:
        chart.require_margin(p, cfg.margin)
    return bracket_field(X, Y, cfg)(p)
