"""Levi-Civita and canonical connections in a unitary frame, with torsion and curvature.

Index conventions (complexified frame ``E_0..E_{2n-1} = e_1..e_n, conj(e_1)..conj(e_n)``,
so a barred index ``i`` is stored at ``n + i``):

* ``gamma[A, C, B]``: ``nabla_{E_C} E_B = sum_A gamma[A, C, B] E_A``
* ``tau[A, B, C]``: component of ``tau(E_A, E_B)`` along ``E_C`` (written tau_{AB}^C)
* ``curv[A, B, C, D] = <R(E_C, E_D) E_A, E_B>`` with ``R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``
* ``tau_d[A, B, C, E]``: tau_{AB;E}^C, ``curv_d[A, B, C, D, E]``: R_{ABCD;E}

Covariant derivatives (";") are always taken with the canonical connection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chart_calculus import FDConfig, jacobian
from .complex_frame import ChartedStructure, UnitaryFrameField, unitary_frame

LEVI_CIVITA = "levi_civita"
CANONICAL = "canonical"


@dataclass(frozen=True)
class FDPlan:
    """Finite-difference settings per nesting level.

    ``connection`` differentiates the frame (Gamma, torsion), ``curvature`` differentiates
    Gamma (R, nabla tau), ``derivative`` differentiates R (nabla R).
    """

    connection: FDConfig = FDConfig(1e-3, "central-4")
    curvature: FDConfig = FDConfig(1e-3, "central-4")
    derivative: FDConfig = FDConfig(1e-3, "central-4")

    @classmethod
    def uniform(cls, step: float, scheme: str = "central-4", richardson: bool = False) -> FDPlan:
        cfg = FDConfig(step, scheme, richardson)
        return cls(cfg, cfg, cfg)

    def scaled(self, factor: float) -> FDPlan:
        return FDPlan(self.connection.scaled(factor), self.curvature.scaled(factor), self.derivative.scaled(factor))

    @property
    def reach(self) -> float:
        return self.connection.margin + self.curvature.margin + self.derivative.margin

    def as_dict(self) -> dict:
        return {
            level: {"step": cfg.step, "scheme": cfg.scheme, "richardson": cfg.richardson}
            for level, cfg in (("connection", self.connection), ("curvature", self.curvature),
                               ("derivative", self.derivative))
        }


def conj_perm(dim: int) -> np.ndarray:
    """Index map ``A -> conj(A)`` on the complexified frame."""
    n = dim // 2
    return np.concatenate([np.arange(n, dim), np.arange(n)])


def _mT(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


@dataclass(frozen=True)
class FirstOrder:
    """Frame data and first derivatives at a batch of points."""

    E: np.ndarray       # (..., d, 2n) columns E_A
    Einv: np.ndarray    # (..., 2n, d)
    G: np.ndarray       # (..., 2n, 2n) frame metric g(E_A, E_B)
    dirE: np.ndarray    # (..., C, k, B) = E_C(E_B)^k
    dirG: np.ndarray    # (..., C, A, B) = E_C(G_AB)
    brackets: np.ndarray  # (..., A, C, B) frame components of [E_C, E_B]


class FrameGeometry:
    """Vectorized evaluator of connection, torsion and curvature data for one structure and frame."""

    def __init__(self, structure: ChartedStructure, frame: UnitaryFrameField | None = None,
                 plan: FDPlan | None = None):
        self.structure = structure
        self.frame = frame if frame is not None else unitary_frame(structure)
        self.plan = plan or FDPlan()
        self.dim = structure.dim
        self.n = structure.n
        self.perm = conj_perm(self.dim)

    # ---- level 0 / 1 -------------------------------------------------------------
    def _frame_and_metric(self, x: np.ndarray) -> np.ndarray:
        E = self.frame.full(x)
        G = _mT(E) @ self.structure.g(x) @ E
        return np.concatenate([E, G], axis=-2)

    def first_order(self, x: np.ndarray) -> FirstOrder:
        x = np.asarray(x, dtype=float)
        d = self.dim
        both = self._frame_and_metric(x)
        E, G = both[..., :d, :], both[..., d:, :]
        jac = jacobian(self._frame_and_metric, x, self.plan.connection)
        dE, dG = jac[..., :d, :], jac[..., d:, :]
        dirE = np.einsum("...mC,...mkB->...CkB", E, dE)
        dirG = np.einsum("...mC,...mAB->...CAB", E, dG)
        Einv = np.linalg.inv(E)
        coord = np.einsum("...CkB->...kCB", dirE)
        coord = coord - np.swapaxes(coord, -1, -2)
        brackets = np.einsum("...Ak,...kCB->...ACB", Einv, coord)
        return FirstOrder(E, Einv, G, dirE, dirG, brackets)

    def gamma_levi_civita(self, fo: FirstOrder) -> np.ndarray:
        BL = np.einsum("...FCB,...FA->...CBA", fo.brackets, fo.G)
        dG = fo.dirG
        low = 0.5 * (
            dG
            + np.einsum("...BCA->...CBA", dG)
            - np.einsum("...ACB->...CBA", dG)
            + BL
            - np.einsum("...CAB->...CBA", BL)
            - np.einsum("...BAC->...CBA", BL)
        )
        return np.einsum("...AD,...CBD->...ACB", np.linalg.inv(fo.G), low)

    def gamma_canonical(self, fo: FirstOrder) -> np.ndarray:
        n = self.n
        Br, dG = fo.brackets, fo.dirG
        gam = np.zeros(Br.shape, dtype=complex)
        # nabla_{e_k} e_i along e_j: e_k(g(e_i, conj e_j)) - <[e_k, conj e_j], e_i>
        gam[..., :n, :n, :n] = np.einsum("...kij->...jki", dG[..., :n, :n, n:]) - np.einsum(
            "...ikj->...jki", Br[..., n:, :n, n:]
        )
        # nabla_{conj e_k} e_i = -[e_i, conj e_k]^(1,0)
        gam[..., :n, n:, :n] = -np.einsum("...jik->...jki", Br[..., :n, :n, n:])
        gam[..., n:, n:, n:] = gam[..., :n, :n, :n].conj()
        gam[..., n:, :n, n:] = gam[..., :n, n:, :n].conj()
        return gam

    def gamma(self, fo: FirstOrder, which: str) -> np.ndarray:
        if which == CANONICAL:
            return self.gamma_canonical(fo)
        if which == LEVI_CIVITA:
            return self.gamma_levi_civita(fo)
        raise ValueError(f"unknown connection {which!r}")

    @staticmethod
    def torsion_from(gam: np.ndarray, fo: FirstOrder) -> np.ndarray:
        internal = gam - np.swapaxes(gam, -1, -2) - fo.brackets
        return np.moveaxis(internal, -3, -1)

    def _level1(self, x: np.ndarray) -> np.ndarray:
        fo = self.first_order(x)
        gc = self.gamma_canonical(fo)
        gl = self.gamma_levi_civita(fo)
        return np.stack([gc, gl, self.torsion_from(gc, fo)], axis=-4)

    # ---- level 2 -----------------------------------------------------------------
    @staticmethod
    def _curvature(gam: np.ndarray, dgam: np.ndarray, fo: FirstOrder) -> np.ndarray:
        dir_gam = np.einsum("...mD,...mACB->...DACB", fo.E, dgam)
        op = (
            np.einsum("...CADB->...ABCD", dir_gam)
            - np.einsum("...DACB->...ABCD", dir_gam)
            + np.einsum("...FDB,...ACF->...ABCD", gam, gam)
            - np.einsum("...FCB,...ADF->...ABCD", gam, gam)
            - np.einsum("...FCD,...AFB->...ABCD", fo.brackets, gam)
        )
        return np.einsum("...FACD,...FB->...ABCD", op, fo.G)

    @staticmethod
    def _tau_derivative(tau: np.ndarray, dtau: np.ndarray, gam: np.ndarray, E: np.ndarray) -> np.ndarray:
        dir_tau = np.einsum("...mE,...mABC->...ABCE", E, dtau)
        return (
            dir_tau
            + np.einsum("...CEF,...ABF->...ABCE", gam, tau)
            - np.einsum("...FEA,...FBC->...ABCE", gam, tau)
            - np.einsum("...FEB,...AFC->...ABCE", gam, tau)
        )

    def canonical_curvature(self, x: np.ndarray) -> np.ndarray:
        fo = self.first_order(x)
        gam = self.gamma_canonical(fo)
        dgam = jacobian(lambda y: self.gamma_canonical(self.first_order(y)), x, self.plan.curvature)
        return self._curvature(gam, dgam, fo)

    def second_order(self, x: np.ndarray) -> dict[str, np.ndarray]:
        x = np.asarray(x, dtype=float)
        fo = self.first_order(x)
        gc = self.gamma_canonical(fo)
        gl = self.gamma_levi_civita(fo)
        tau = self.torsion_from(gc, fo)
        jac = jacobian(self._level1, x, self.plan.curvature)
        dgc, dgl, dtau = jac[..., 0, :, :, :], jac[..., 1, :, :, :], jac[..., 2, :, :, :]
        return {
            "fo": fo,
            "gamma_can": gc,
            "gamma_lc": gl,
            "tau": tau,
            "tau_lc": self.torsion_from(gl, fo),
            "curv": self._curvature(gc, dgc, fo),
            "curv_lc": self._curvature(gl, dgl, fo),
            "tau_d": self._tau_derivative(tau, dtau, gc, fo.E),
        }

    # ---- level 3 -----------------------------------------------------------------
    def curvature_derivative(self, x: np.ndarray, curv: np.ndarray, gam: np.ndarray, E: np.ndarray) -> np.ndarray:
        dR = jacobian(self.canonical_curvature, x, self.plan.derivative)
        dir_R = np.einsum("...mE,...mABCD->...ABCDE", E, dR)
        return (
            dir_R
            - np.einsum("...FEA,...FBCD->...ABCDE", gam, curv)
            - np.einsum("...FEB,...AFCD->...ABCDE", gam, curv)
            - np.einsum("...FEC,...ABFD->...ABCDE", gam, curv)
            - np.einsum("...FED,...ABCF->...ABCDE", gam, curv)
        )

    # ---- coordinate form, used by the raw (frame-free) Bianchi checks -------------
    def coordinate_christoffel(self, x: np.ndarray, which: str = CANONICAL) -> np.ndarray:
        """Real ``Gamma[k, i, j]`` with ``nabla_{d_i} d_j = Gamma[k, i, j] d_k``."""
        fo = self.first_order(x)
        gam = self.gamma(fo, which)
        frame_part = np.einsum("...kA,...ACB->...kCB", fo.E, gam) - np.einsum("...CkB->...kCB", fo.dirE)
        coord = np.einsum("...Ci,...Bj,...kCB->...kij", fo.Einv, fo.Einv, frame_part)
        return coord.real


# ---- tables ----------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectionData:
    which: str
    point: np.ndarray
    gamma: np.ndarray
    coeffs: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    frame_metric: np.ndarray = field(repr=False, compare=False)
    metric_derivative: np.ndarray = field(repr=False, compare=False)

    def metric_compatibility_residual(self) -> float:
        G, gam = self.frame_metric, self.gamma
        expected = np.einsum("FCA,FB->CAB", gam, G) + np.einsum("FCB,AF->CAB", gam, G)
        return float(np.max(np.abs(self.metric_derivative - expected)))

    def type_preservation_residual(self) -> float:
        n = self.gamma.shape[0] // 2
        return float(max(np.max(np.abs(self.gamma[n:, :, :n])), np.max(np.abs(self.gamma[:n, :, n:]))))


@dataclass(frozen=True)
class TorsionTable:
    point: np.ndarray
    tau: np.ndarray  # tau[A, B, C] = tau_{AB}^C

    @property
    def n(self) -> int:
        return self.tau.shape[0] // 2

    @property
    def t_hol(self) -> np.ndarray:
        """tau_{ij}^k"""
        n = self.n
        return self.tau[:n, :n, :n]

    @property
    def t_anti(self) -> np.ndarray:
        """tau_{ij}^{k bar}"""
        n = self.n
        return self.tau[:n, :n, n:]

    def mixed_residual(self) -> float:
        n = self.n
        return float(np.max(np.abs(self.tau[:n, n:, :])))


@dataclass(frozen=True)
class CurvatureTable:
    which: str
    point: np.ndarray
    curv: np.ndarray


@dataclass(frozen=True)
class RicciScalarTable:
    ricci_first: np.ndarray   # R'_{AB}
    ricci_second: np.ndarray  # R''_{i jbar}
    ricci_lc_complex: np.ndarray  # R^L_{i jbar}
    ricci_lc_holo: np.ndarray     # R^L_{ij}
    s_canonical: complex
    s_star: complex

    def as_dict(self) -> dict:
        return {
            "s_canonical": float(self.s_canonical.real),
            "s_star": float(self.s_star.real),
            "max_abs_ricci_first": float(np.max(np.abs(self.ricci_first))),
            "max_abs_ricci_lc_holo": float(np.max(np.abs(self.ricci_lc_holo))),
        }


@dataclass(frozen=True)
class GeometryTables:
    """Everything the identity checks need at one point."""

    point: np.ndarray
    n: int
    gamma_can: np.ndarray
    gamma_lc: np.ndarray
    tau: np.ndarray
    tau_lc: np.ndarray
    tau_d: np.ndarray
    curv: np.ndarray
    curv_lc: np.ndarray
    curv_d: np.ndarray | None
    ricci: RicciScalarTable
    frame: np.ndarray = field(repr=False)
    frame_metric: np.ndarray = field(repr=False)

    @property
    def has_curvature_derivative(self) -> bool:
        return self.curv_d is not None


def ricci_scalar_table(curv: np.ndarray, curv_lc: np.ndarray) -> RicciScalarTable:
    n = curv.shape[0] // 2
    lam = np.arange(n)
    lam_bar = lam + n
    ricci_first = curv[lam, lam_bar].sum(axis=0)
    ricci_second = curv[:n, n:][:, :, lam, lam_bar].sum(axis=-1)
    lc_complex = _trace_pair(curv_lc, n, True)
    lc_holo = _trace_pair(curv_lc, n, False)
    s_c = ricci_first[:n, n:][lam, lam].sum()
    s_star = curv_lc[lam, lam_bar][:, :n, n:][:, lam, lam].sum()
    return RicciScalarTable(ricci_first, ricci_second, lc_complex, lc_holo, complex(s_c), complex(s_star))


def _trace_pair(curv_lc: np.ndarray, n: int, mixed: bool) -> np.ndarray:
    """R^L_{i jbar} (mixed) or R^L_{ij}: sum over lambda of R^L_{lam i . lambar} + R^L_{lambar i . lam}."""
    second = slice(n, 2 * n) if mixed else slice(0, n)
    hol = curv_lc[:n, :n, second, n:]   # [lam, i, j, mu-bar]
    anti = curv_lc[n:, :n, second, :n]  # [lam-bar, i, j, mu]
    return np.einsum("lijl->ij", hol) + np.einsum("lijl->ij", anti)


def _check_point(s: ChartedStructure, p: np.ndarray, reach: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    s.chart.require_margin(p, reach)
    return p


def _connection_data(geo: FrameGeometry, p: np.ndarray, which: str) -> ConnectionData:
    fo = geo.first_order(p)
    return ConnectionData(
        which, p, geo.gamma(fo, which),
        coeffs=lambda x: geo.gamma(geo.first_order(x), which),
        frame_metric=fo.G, metric_derivative=fo.dirG,
    )


def levi_civita_coeffs(s: ChartedStructure, F: UnitaryFrameField | None, p: np.ndarray,
                       plan: FDPlan | None = None) -> ConnectionData:
    geo = FrameGeometry(s, F, plan)
    return _connection_data(geo, _check_point(s, p, geo.plan.connection.margin), LEVI_CIVITA)


def canonical_coeffs(s: ChartedStructure, F: UnitaryFrameField | None, p: np.ndarray,
                     plan: FDPlan | None = None) -> ConnectionData:
    geo = FrameGeometry(s, F, plan)
    return _connection_data(geo, _check_point(s, p, geo.plan.connection.margin), CANONICAL)


def torsion_table(s: ChartedStructure, F: UnitaryFrameField | None, conn: ConnectionData,
                  p: np.ndarray, plan: FDPlan | None = None) -> TorsionTable:
    geo = FrameGeometry(s, F, plan)
    p = _check_point(s, p, geo.plan.connection.margin)
    fo = geo.first_order(p)
    return TorsionTable(p, geo.torsion_from(geo.gamma(fo, conn.which), fo))


def curvature_table(s: ChartedStructure, F: UnitaryFrameField | None, conn: ConnectionData,
                    p: np.ndarray, plan: FDPlan | None = None) -> CurvatureTable:
    geo = FrameGeometry(s, F, plan)
    p = _check_point(s, p, geo.plan.connection.margin + geo.plan.curvature.margin)
    data = geo.second_order(p)
    key = "curv" if conn.which == CANONICAL else "curv_lc"
    return CurvatureTable(conn.which, p, data[key])


def torsion_derivatives(s: ChartedStructure, F: UnitaryFrameField | None, conn: ConnectionData,
                        p: np.ndarray, plan: FDPlan | None = None) -> np.ndarray:
    """tau_{AB;E}^C of the canonical connection, stored as ``[A, B, C, E]``."""
    if conn.which != CANONICAL:
        raise ValueError("covariant derivatives are taken with the canonical connection")
    geo = FrameGeometry(s, F, plan)
    p = _check_point(s, p, geo.plan.connection.margin + geo.plan.curvature.margin)
    return geo.second_order(p)["tau_d"]


def curvature_derivatives(s: ChartedStructure, F: UnitaryFrameField | None, conn: ConnectionData,
                          p: np.ndarray, plan: FDPlan | None = None) -> np.ndarray:
    """R_{ABCD;E} of the canonical connection, stored as ``[A, B, C, D, E]``."""
    if conn.which != CANONICAL:
        raise ValueError("covariant derivatives are taken with the canonical connection")
    geo = FrameGeometry(s, F, plan)
    p = _check_point(s, p, geo.plan.reach)
    data = geo.second_order(p)
    return geo.curvature_derivative(p, data["curv"], data["gamma_can"], data["fo"].E)


def compute_tables(s: ChartedStructure, p: np.ndarray, F: UnitaryFrameField | None = None,
                   plan: FDPlan | None = None, curvature_derivative: bool = True) -> GeometryTables:
    geo = FrameGeometry(s, F, plan)
    reach = geo.plan.reach if curvature_derivative else geo.plan.connection.margin + geo.plan.curvature.margin
    p = _check_point(s, p, reach)
    data = geo.second_order(p)
    fo = data["fo"]
    curv_d = geo.curvature_derivative(p, data["curv"], data["gamma_can"], fo.E) if curvature_derivative else None
    return GeometryTables(
        point=p, n=s.n,
        gamma_can=data["gamma_can"], gamma_lc=data["gamma_lc"],
        tau=data["tau"], tau_lc=data["tau_lc"], tau_d=data["tau_d"],
        curv=data["curv"], curv_lc=data["curv_lc"], curv_d=curv_d,
        ricci=ricci_scalar_table(data["curv"], data["curv_lc"]),
        frame=fo.E, frame_metric=fo.G,
    )


def connection_difference_residual(t: GeometryTables, X: np.ndarray, Y: np.ndarray, Z: np.ndarray) -> float:
    """``<D_Y X, Z> - <nabla_Y X, Z> - (<tau(X,Y),Z> + <tau(Y,Z),X> - <tau(Z,X),Y>)/2`` for real X, Y, Z."""
    Einv = np.linalg.inv(t.frame)
    x, y, z = (Einv @ np.asarray(v, dtype=float) for v in (X, Y, Z))
    G = t.frame_metric
    diff = np.einsum("FCB,FA,C,B,A->", t.gamma_lc - t.gamma_can, G, y, x, z)

    def pair(u, v, w):
        return np.einsum("ABC,CD,A,B,D->", t.tau, G, u, v, w)

    rhs = 0.5 * (pair(x, y, z) + pair(y, z, x) - pair(z, x, y))
    return float(abs(diff - rhs))
