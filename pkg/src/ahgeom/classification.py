"""Class membership (Kahler, Hermitian, quasi, almost and nearly Kahler) from canonical torsion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex_frame import ChartedStructure, UnitaryFrameField, check_structure, unitary_frame
from .connections import FDPlan, FrameGeometry

LABELS = ("kahler", "hermitian", "quasi", "almost", "nearly")
STRICT_FACTOR = 10.0


class StructureError(ValueError):
    """``J`` or ``g`` violate the almost Hermitian axioms at a sample point."""

    def __init__(self, point: np.ndarray, diagnostics: dict):
        super().__init__(f"structure check failed at {np.asarray(point).tolist()}: {diagnostics}")
        self.point = point
        self.diagnostics = diagnostics


def torsion_criteria(tau: np.ndarray) -> dict[str, float]:
    """Residual of each class condition at one point (``tau`` in ``[A, B, C]`` layout)."""
    n = tau.shape[0] // 2
    hol = tau[:n, :n, :n]
    anti = tau[:n, :n, n:]  # [i, j, k] = tau_{ij}^{k bar}
    quasi = float(np.max(np.abs(hol)))
    hermitian = float(np.max(np.abs(anti)))
    cyclic = anti + np.einsum("kij->ijk", anti) + np.einsum("jki->ijk", anti)
    # tau_{ij}^{k bar} = tau_{jk}^{i bar}: entry [j, k, i] of anti moved to [i, j, k]
    nk = anti - np.einsum("jki->ijk", anti)
    almost = max(quasi, float(np.max(np.abs(cyclic))))
    nearly = max(quasi, float(np.max(np.abs(nk))))
    # Kahler dominates every other residual so the label set stays monotone
    kahler = max(float(np.max(np.abs(tau))), hermitian, quasi, almost, nearly)
    return {"kahler": kahler, "hermitian": hermitian, "quasi": quasi, "almost": almost, "nearly": nearly}


@dataclass
class ClassificationReport:
    residuals: dict[str, float]
    tol: float
    samples: int
    structure: list[dict] = field(default_factory=list)

    def passes(self, label: str) -> bool:
        return self.residuals[label] < self.tol

    def fails(self, label: str) -> bool:
        return self.residuals[label] > STRICT_FACTOR * self.tol

    @property
    def labels(self) -> list[str]:
        return [name for name in LABELS if self.passes(name)]

    @property
    def inconclusive(self) -> list[str]:
        return [name for name in LABELS if not self.passes(name) and not self.fails(name)]

    @property
    def strict(self) -> dict[str, bool]:
        """A class holds strictly when it passes and the structure is clearly not Kahler."""
        return {name: self.passes(name) and self.fails("kahler") for name in LABELS if name != "kahler"}

    def as_dict(self) -> dict:
        return {
            "labels": self.labels,
            "residuals": dict(self.residuals),
            "strict": self.strict,
            "inconclusive": self.inconclusive,
            "tol": self.tol,
            "samples": self.samples,
        }


def classify(s: ChartedStructure, points: np.ndarray, tol: float = 1e-6, frame: UnitaryFrameField | None = None,
             plan: FDPlan | None = None, structure_tol: float = 1e-9) -> ClassificationReport:
    """Evaluate the class conditions at every sample point; a label holds when it holds at all of them."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diagnostics = []
    for p in pts:
        diag = check_structure(s, p, structure_tol)
        if not diag.passed:
            raise StructureError(p, diag.as_dict())
        diagnostics.append(diag.as_dict())
    geo = FrameGeometry(s, frame if frame is not None else unitary_frame(s, pts), plan)
    for p in pts:
        s.chart.require_margin(p, geo.plan.connection.margin)
    fo = geo.first_order(pts)
    taus = geo.torsion_from(geo.gamma_canonical(fo), fo)
    worst = {name: 0.0 for name in LABELS}
    for tau in taus:
        for name, value in torsion_criteria(tau).items():
            worst[name] = max(worst[name], value)
    return ClassificationReport(worst, tol, len(pts), diagnostics)
