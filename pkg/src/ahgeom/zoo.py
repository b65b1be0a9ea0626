"""Built-in almost Hermitian structures with known classes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chart_calculus import Box, Chart, Shell
from .complex_frame import ChartedStructure

# Fano-plane triples (0-based) for the imaginary octonions: e_a x e_b = e_c cyclically.
FANO_TRIPLES = ((0, 1, 2), (0, 3, 4), (0, 6, 5), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 5, 4))


def _cross_tensor() -> np.ndarray:
    eps = np.zeros((7, 7, 7))
    for a, b, c in FANO_TRIPLES:
        for i, j, k in ((a, b, c), (b, c, a), (c, a, b)):
            eps[i, j, k] = 1.0
            eps[j, i, k] = -1.0
    return eps


CROSS = _cross_tensor()


def cross7(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Seven-dimensional cross product from octonion multiplication."""
    return np.einsum("ijk,...i,...j->...k", CROSS, x, y)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    default: object
    description: str


@dataclass(frozen=True)
class ZooEntry:
    name: str
    structure: ChartedStructure
    expected: frozenset[str]
    sampler: Callable[[np.random.Generator, int], np.ndarray] = field(compare=False)
    doc: str = ""
    params: dict = field(default_factory=dict)

    def sample_points(self, count: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.sampler(rng, count)


def _ball_sampler(dim: int, radius: float, center: np.ndarray | None = None, inner: float = 0.0):
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        direction = rng.normal(size=(count, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        r = inner + (radius - inner) * rng.uniform(size=(count, 1)) ** (1.0 / dim)
        return c + r * direction

    return sample


def standard_J(n: int) -> np.ndarray:
    """``J0`` on coordinates ``(x_1..x_n, y_1..y_n)`` with ``J0 d/dx_k = d/dy_k``."""
    J = np.zeros((2 * n, 2 * n))
    J[n:, :n] = np.eye(n)
    J[:n, n:] = -np.eye(n)
    return J


def _constant(mat: np.ndarray):
    return lambda x: np.broadcast_to(mat, np.shape(x)[:-1] + mat.shape)


def flat_cn(n: int = 2) -> ZooEntry:
    if not 1 <= n <= 4:
        raise ValueError(f"flat_cn needs 1 <= n <= 4, got {n}")
    dim = 2 * n
    chart = Chart(dim, Box((-1.0,) * dim, (1.0,) * dim), f"flat_cn(n={n})")
    s = ChartedStructure(chart, _constant(standard_J(n)), _constant(np.eye(dim)), label=f"flat_cn(n={n})",
                         expected_class=frozenset({"kahler", "hermitian", "almost", "quasi", "nearly"}))
    return ZooEntry(
        "flat_cn", s, s.expected_class, _ball_sampler(dim, 0.5),
        doc="Standard complex structure and Euclidean metric on a box in R^2n.", params={"n": n},
    )


def round_s2(radius: float = 1.0) -> ZooEntry:
    if not radius > 0:
        raise ValueError("radius must be positive")
    r2 = radius * radius
    chart = Chart(2, Shell((0.0, 0.0), 3.0 * radius), f"round_s2(r={radius:g})")

    def g(x):
        rho2 = np.sum(np.asarray(x) ** 2, axis=-1)
        lam = 4.0 * r2 * r2 / (r2 + rho2) ** 2
        return lam[..., None, None] * np.eye(2)

    s = ChartedStructure(chart, _constant(standard_J(1)), g, label=chart.label,
                         expected_class=frozenset({"kahler", "hermitian", "almost", "quasi", "nearly"}))
    return ZooEntry(
        "round_s2", s, s.expected_class, _ball_sampler(2, 1.5 * radius),
        doc="Stereographic chart of the sphere of the given radius, metric 4r^4/(r^2+|z|^2)^2 |dz|^2.",
        params={"radius": radius},
    )


def _s6_embedding(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Point on S^6 and the 7x6 tangent map of the upper-hemisphere graph chart."""
    u = np.asarray(u, dtype=float)
    height = np.sqrt(1.0 - np.sum(u * u, axis=-1))
    p = np.concatenate([u, height[..., None]], axis=-1)
    P = np.zeros(u.shape[:-1] + (7, 6))
    P[..., :6, :] = np.eye(6)
    P[..., 6, :] = -u / height[..., None]
    return p, P


def _s6_metric(u):
    _, P = _s6_embedding(u)
    return np.einsum("...ki,...kj->...ij", P, P)


def _s6_J(u):
    p, P = _s6_embedding(u)
    CP = np.einsum("ijk,...i,...jb->...kb", CROSS, p, P)
    # P has full column rank, so left-multiplying by (P^T P)^-1 P^T reads off chart components
    return np.linalg.solve(_s6_metric(u), np.einsum("...ka,...kb->...ab", P, CP))


def s6_nearly_kahler() -> ZooEntry:
    chart = Chart(6, Shell((0.0,) * 6, 0.9), "s6_nearly_kahler")
    s = ChartedStructure(chart, _s6_J, _s6_metric, label="s6_nearly_kahler",
                         expected_class=frozenset({"quasi", "nearly"}))
    return ZooEntry(
        "s6_nearly_kahler", s, s.expected_class, _ball_sampler(6, 0.6),
        doc=(
            "Unit S^6 in the imaginary octonions with J_p(X) = p x X (octonionic cross product) "
            "and the round metric, in the graph chart over the upper hemisphere x_7 > 0."
        ),
    )


def hopf_surface() -> ZooEntry:
    chart = Chart(4, Shell((0.0,) * 4, 2.0, 0.5), "hopf_surface")

    def g(x):
        rho2 = np.sum(np.asarray(x) ** 2, axis=-1)
        return (1.0 / rho2)[..., None, None] * np.eye(4)

    s = ChartedStructure(chart, _constant(standard_J(2)), g, label="hopf_surface",
                         expected_class=frozenset({"hermitian"}))
    return ZooEntry(
        "hopf_surface", s, s.expected_class, _ball_sampler(4, 1.6, inner=0.7),
        doc="Annulus in C^2 minus the origin with metric |z|^-2 times the Euclidean one and the standard J.",
    )


def _expm_series(A: np.ndarray, terms: int = 24) -> np.ndarray:
    # fixed-order Taylor series: smooth in A, and ||A|| stays well below 1 here
    out = np.broadcast_to(np.eye(A.shape[-1]), A.shape).copy()
    term = out.copy()
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


@dataclass(frozen=True)
class _TrigMatrixField:
    """``sum_t C_t cos(k_t . x) + S_t sin(k_t . x)`` with integer wave vectors (period 2 pi)."""

    waves: np.ndarray
    cos_coef: np.ndarray
    sin_coef: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        phase = np.asarray(x, dtype=float) @ self.waves.T
        return np.einsum("...t,tij->...ij", np.cos(phase), self.cos_coef) + np.einsum(
            "...t,tij->...ij", np.sin(phase), self.sin_coef
        )


def _random_trig_field(rng: np.random.Generator, dim: int, terms: int) -> _TrigMatrixField:
    waves = rng.integers(-1, 2, size=(terms, dim)).astype(float)
    waves[0] = 0.0
    scale = 1.0 / np.sqrt(terms)
    return _TrigMatrixField(
        waves, scale * rng.normal(size=(terms, dim, dim)), scale * rng.normal(size=(terms, dim, dim))
    )


def random_torus_structure(n: int = 2, seed: int = 42, amplitude: float = 0.1) -> ZooEntry:
    if not 1 <= n <= 3:
        raise ValueError(f"random_torus needs 1 <= n <= 3, got {n}")
    if not 0.0 < amplitude <= 0.2:
        raise ValueError(f"amplitude must lie in (0, 0.2], got {amplitude}")
    dim = 2 * n
    rng = np.random.default_rng(seed)
    M = _random_trig_field(rng, dim, 4)
    H = _random_trig_field(rng, dim, 4)
    J0 = standard_J(n)

    def J(x):
        aM = amplitude * M(x)
        return _expm_series(aM) @ J0 @ _expm_series(-aM)

    def h(x):
        Hx = H(x)
        return np.eye(dim) + 0.5 * amplitude * (Hx + np.swapaxes(Hx, -1, -2))

    def g(x):
        Jx = J(x)
        hx = h(x)
        return 0.5 * (hx + np.swapaxes(Jx, -1, -2) @ hx @ Jx)

    label = f"random_torus(n={n},seed={seed},amplitude={amplitude:g})"
    chart = Chart(dim, Box((-10.0,) * dim, (10.0,) * dim), label)
    s = ChartedStructure(chart, J, g, label=label, expected_class=frozenset())

    def sample(r: np.random.Generator, count: int) -> np.ndarray:
        return r.uniform(0.0, 2.0 * np.pi, size=(count, dim))

    return ZooEntry(
        "random_torus", s, frozenset(), sample,
        doc=(
            "J = A J0 A^-1 with A = exp(amplitude M(x)) for a seeded trigonometric matrix field M, "
            "g = (h + J^T h J)/2 for a seeded perturbation h of the flat metric; period 2 pi."
        ),
        params={"n": n, "seed": seed, "amplitude": amplitude},
    )


PARAMS: dict[str, tuple[ParamSpec, ...]] = {
    "flat_cn": (ParamSpec("n", "int", 2, "complex dimension, 1..4"),),
    "round_s2": (ParamSpec("radius", "float", 1.0, "sphere radius, > 0"),),
    "s6_nearly_kahler": (),
    "hopf_surface": (),
    "random_torus": (
        ParamSpec("n", "int", 2, "complex dimension, 1..3"),
        ParamSpec("seed", "int", 42, "structure seed"),
        ParamSpec("amplitude", "float", 0.1, "perturbation size, (0, 0.2]"),
    ),
}

_BUILDERS = {
    "flat_cn": flat_cn,
    "round_s2": round_s2,
    "s6_nearly_kahler": s6_nearly_kahler,
    "hopf_surface": hopf_surface,
    "random_torus": random_torus_structure,
}

ZOO_NAMES = tuple(_BUILDERS)


def build(name: str, **params) -> ZooEntry:
    if name not in _BUILDERS:
        raise KeyError(f"unknown manifold {name!r}; known: {', '.join(ZOO_NAMES)}")
    allowed = {p.name for p in PARAMS[name]}
    kwargs = {k: v for k, v in params.items() if k in allowed and v is not None}
    return _BUILDERS[name](**kwargs)
