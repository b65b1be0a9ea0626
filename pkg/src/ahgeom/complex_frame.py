"""Almost Hermitian structures on a chart and their unitary (1,0)-frames."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chart_calculus import Chart, FDConfig, Field, lie_bracket

MatrixField = Callable[[np.ndarray], np.ndarray]

PIVOT_FLOOR = 1e-8


class DegenerateSeedError(ValueError):
    """Gram-Schmidt met a (1,0)-projection with (numerically) zero length."""

    def __init__(self, index: int, pivot: float):
        super().__init__(
            f"seed vector {index} has Gram-Schmidt pivot {pivot:.3e} < {PIVOT_FLOOR:g}; "
            "supply a different seed basis"
        )
        self.index = index
        self.pivot = pivot


@dataclass(frozen=True)
class ChartedStructure:
    """An almost complex structure ``J`` and compatible metric ``g`` on one chart.

    ``J`` and ``g`` are vectorized: ``(..., 2n)`` points to ``(..., 2n, 2n)`` matrices,
    with ``J`` acting on coordinate column vectors.
    """

    chart: Chart
    J: MatrixField
    g: MatrixField
    label: str = ""
    expected_class: frozenset[str] | None = None
    seed_basis: np.ndarray | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def dim(self) -> int:
        return self.chart.dim

    def default_seeds(self) -> np.ndarray:
        if self.seed_basis is not None:
            return np.asarray(self.seed_basis, dtype=complex)
        return np.eye(self.dim, dtype=complex)[: self.n]


@dataclass(frozen=True)
class StructureDiagnostics:
    j_squared: float
    symmetry: float
    min_eigenvalue: float
    compatibility: float
    tol: float

    @property
    def definite(self) -> bool:
        return self.min_eigenvalue > 0

    @property
    def passed(self) -> bool:
        return (
            self.j_squared < self.tol
            and self.symmetry < self.tol
            and self.compatibility < self.tol
            and self.definite
        )

    def as_dict(self) -> dict:
        return {
            "j_squared": self.j_squared,
            "symmetry": self.symmetry,
            "min_eigenvalue": self.min_eigenvalue,
            "compatibility": self.compatibility,
            "pass": self.passed,
        }


def check_structure(s: ChartedStructure, p: np.ndarray, tol: float = 1e-9) -> StructureDiagnostics:
    p = np.asarray(p, dtype=float)
    J = s.J(p)
    g = s.g(p)
    eye = np.eye(s.dim)
    sym = 0.5 * (g + g.T)
    return StructureDiagnostics(
        j_squared=float(np.max(np.abs(J @ J + eye))),
        symmetry=float(np.max(np.abs(g - g.T))),
        min_eigenvalue=float(np.linalg.eigvalsh(sym)[0]),
        compatibility=float(np.max(np.abs(J.T @ g @ J - g))),
        tol=tol,
    )


def type_decompose(v: np.ndarray, s: ChartedStructure, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a (complexified) tangent vector into its (1,0) and (0,1) parts."""
    v = np.asarray(v, dtype=complex)
    Jv = s.J(np.asarray(p, dtype=float)) @ v
    return 0.5 * (v - 1j * Jv), 0.5 * (v + 1j * Jv)


def g_complex(g: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Complex-bilinear extension of ``g`` (batched over leading axes)."""
    return np.einsum("...i,...ij,...j->...", u, g, v)


@dataclass(frozen=True)
class UnitaryFrameField:
    """Smooth unitary (1,0)-frame from projecting a fixed seed basis and Gram-Schmidt.

    Calling the field returns the ``(..., 2n, n)`` array whose columns are ``e_1..e_n``
    in coordinate components.
    """

    structure: ChartedStructure
    seed_basis: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        frame, pivots = self._gram_schmidt(x)
        worst = pivots.reshape(-1, pivots.shape[-1]).min(axis=0)
        for idx, piv in enumerate(worst):
            if piv < PIVOT_FLOOR:
                raise DegenerateSeedError(idx, float(piv))
        return frame

    def full(self, x: np.ndarray) -> np.ndarray:
        """Columns ``e_1..e_n, conj(e_1)..conj(e_n)``, shape ``(..., 2n, 2n)``."""
        e = self(x)
        return np.concatenate([e, e.conj()], axis=-1)

    def pivots(self, x: np.ndarray) -> np.ndarray:
        return self._gram_schmidt(x)[1]

    def _gram_schmidt(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        J = self.structure.J(x)
        g = self.structure.g(x)
        seeds = np.asarray(self.seed_basis, dtype=complex)
        cols: list[np.ndarray] = []
        pivots = []
        for seed in seeds:
            w = 0.5 * (seed - 1j * np.einsum("...ij,j->...i", J, seed))
            for e in cols:
                w = w - g_complex(g, w, e.conj())[..., None] * e
            norm = np.sqrt(np.abs(g_complex(g, w, w.conj()).real))
            pivots.append(norm)
            cols.append(w / np.where(norm > 0, norm, 1.0)[..., None])
        return np.stack(cols, axis=-1), np.stack(pivots, axis=-1)


def unitary_frame(
    s: ChartedStructure, region: Sequence[np.ndarray] | np.ndarray | None = None, seed_basis: np.ndarray | None = None
) -> UnitaryFrameField:
    """Build the frame field and validate it on ``region`` (a list of points)."""
    seeds = s.default_seeds() if seed_basis is None else np.asarray(seed_basis, dtype=complex)
    if seeds.shape != (s.n, s.dim):
        raise ValueError(f"seed basis must have shape ({s.n}, {s.dim}), got {seeds.shape}")
    frame = UnitaryFrameField(s, seeds)
    if region is not None and len(region):
        frame(np.asarray(region, dtype=float))
    return frame


def unitarity_residual(frame: UnitaryFrameField, p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    e = frame(p)
    g = frame.structure.g(p)
    gram = np.einsum("ia,ij,jb->ab", e, g, e.conj())
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def _apply_J(s: ChartedStructure, X: Field) -> Field:
    return lambda x: np.einsum("...ij,...j->...i", s.J(x), X(x))


def nijenhuis(s: ChartedStructure, X: Field, Y: Field, p: np.ndarray, cfg: FDConfig | None = None) -> np.ndarray:
    """``N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]`` at ``p``."""
    cfg = cfg or FDConfig()
    p = np.asarray(p, dtype=float)
    s.chart.require_margin(p, cfg.margin)
    JX, JY = _apply_J(s, X), _apply_J(s, Y)
    J = s.J(p)
    return (
        lie_bracket(JX, JY, p, cfg)
        - J @ lie_bracket(JX, Y, p, cfg)
        - J @ lie_bracket(X, JY, p, cfg)
        - lie_bracket(X, Y, p, cfg)
    )


def nijenhuis_frame_components(
    s: ChartedStructure, frame: UnitaryFrameField, p: np.ndarray, cfg: FDConfig | None = None
) -> np.ndarray:
    """``N[A, B, C]``: component of ``N(E_A, E_B)`` along ``E_C`` for the complexified frame."""
    cfg = cfg or FDConfig(step=1e-4, scheme="central-4")
    p = np.asarray(p, dtype=float)
    E = frame.full(p)
    Einv = np.linalg.inv(E)
    dim = s.dim
    cols = [(lambda a: (lambda x: frame.full(x)[..., :, a]))(a) for a in range(dim)]
    out = np.zeros((dim, dim, dim), dtype=complex)
    for a in range(dim):
        for b in range(a + 1, dim):
            v = Einv @ nijenhuis(s, cols[a], cols[b], p, cfg)
            out[a, b] = v
            out[b, a] = -v
    return out


def fundamental_form(s: ChartedStructure, p: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
    """``omega(X, Y) = g(JX, Y)``."""
    p = np.asarray(p, dtype=float)
    return float(np.asarray(X) @ s.J(p).T @ s.g(p) @ np.asarray(Y))
