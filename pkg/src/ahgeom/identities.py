"""Catalog of frame identities between canonical and Levi-Civita data, and the suite runner.

Every identity is an equation ``LHS = RHS`` over free frame indices. Its residual is
``max |LHS - RHS| / (1 + max(|LHS|, |RHS|))`` over those indices.

Block names used below (``n`` = complex dimension, ``i, j, ..`` in ``0..n-1``):

* ``th[i,j,k] = tau_{ij}^k``, ``ta[i,j,k] = tau_{ij}^{kbar}``,
  ``tbh[i,j,k] = tau_{ibar jbar}^k``, ``tbb[i,j,k] = tau_{ibar jbar}^{kbar}``
* ``R(pattern)`` slices the canonical curvature by an ``h``/``b`` pattern, e.g.
  ``R("hbhb")[i,j,k,l] = R_{i jbar k lbar}``; likewise ``RL`` (Levi-Civita), ``Rd`` (nabla R),
  ``Td`` (nabla tau, layout ``[A, B, C, E]`` = tau_{AB;E}^C).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classification import ClassificationReport, classify
from .complex_frame import ChartedStructure, UnitaryFrameField, unitary_frame
from .connections import FDPlan, FrameGeometry, GeometryTables, compute_tables
from .raw_bianchi import (RAW_FD, CovariantCalculus, first_bianchi_sides, random_polynomial_fields,
                          second_bianchi_sides)

TOL_TORSION = 1e-6
TOL_ALGEBRAIC = 1e-4
TOL_DERIVATIVE = 1e-3
TOL_SCAL = 1e-5
SCAL_INEQUALITY_SLACK = 1e-8


class DependencyError(RuntimeError):
    """An identity needs a table that was not computed."""


class UnknownIdentityError(KeyError):
    pass


def residual_array(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    lhs, rhs = np.broadcast_arrays(np.asarray(lhs), np.asarray(rhs))
    scale = 1.0 + np.maximum(np.abs(lhs), np.abs(rhs))
    return np.abs(lhs - rhs) / scale


@dataclass(frozen=True)
class Part:
    """One tensor equation; ``kinds`` says per axis whether it runs over ``h`` (1..n) or ``f`` (all 2n)."""

    lhs: np.ndarray
    rhs: np.ndarray
    kinds: str
    name: str = ""


class Blocks:
    """Index-pattern slicing of one point's tables."""

    def __init__(self, t: GeometryTables, calc: CovariantCalculus | None = None, rng_seed: int = 0):
        self.t = t
        self.n = n = t.n
        self.calc = calc
        self.rng_seed = rng_seed
        tau = t.tau
        self.th = tau[:n, :n, :n]
        self.ta = tau[:n, :n, n:]
        self.tbh = tau[n:, n:, :n]
        self.tbb = tau[n:, n:, n:]

    def _slice(self, arr: np.ndarray | None, pattern: str, table: str) -> np.ndarray:
        if arr is None:
            raise DependencyError(f"table {table!r} was not computed")
        n = self.n
        sl = tuple(slice(0, n) if c == "h" else slice(n, 2 * n) for c in pattern)
        return arr[sl]

    def R(self, pattern: str) -> np.ndarray:
        return self._slice(self.t.curv, pattern, "curvature")

    def RL(self, pattern: str) -> np.ndarray:
        return self._slice(self.t.curv_lc, pattern, "levi_civita_curvature")

    def Rd(self, pattern: str) -> np.ndarray:
        return self._slice(self.t.curv_d, pattern, "curvature_derivative")

    def Td(self, pattern: str) -> np.ndarray:
        return self._slice(self.t.tau_d, pattern, "torsion_derivative")


def es(spec: str, *ops: np.ndarray) -> np.ndarray:
    return np.einsum(spec, *ops)


# ---- general almost Hermitian (frame Bianchi identities) -------------------------

def _b1_quadratic(th_or_ta: np.ndarray, th: np.ndarray) -> np.ndarray:
    """sum over cyclic (i,k,l) of tau_{i lam}^{X j} tau_{kl}^lam with X = bar or not."""
    return (es("iaj,kla->ijkl", th_or_ta, th) + es("kaj,lia->ijkl", th_or_ta, th)
            + es("laj,ika->ijkl", th_or_ta, th))


def _b1_cyclic_td(D: np.ndarray) -> np.ndarray:
    """tau^j_{ik;l} + tau^j_{kl;i} + tau^j_{li;k} from D[a, b, c, e] = tau_{ab;e}^c."""
    return es("ikjl->ijkl", D) + es("klji->ijkl", D) + es("lijk->ijkl", D)


def gen_b1(b: Blocks):
    return [Part(_b1_cyclic_td(b.Td("hhbh")), _b1_quadratic(b.ta, b.th), "hhhh")]


def gen_b2(b: Blocks):
    Rm = b.R("hbhb")
    lhs = Rm - es("kjil->ijkl", Rm)
    rhs = es("ikjl->ijkl", b.Td("hhhb")) - es("ika,laj->ijkl", b.ta, b.tbh)
    return [Part(lhs, rhs, "hhhh")]


def gen_b3(b: Blocks):
    Rm = b.R("hbhb")
    lhs = Rm - es("ilkj->ijkl", Rm)
    rhs = es("jlik->ijkl", b.Td("bbbh")) - es("kai,jla->ijkl", b.ta, b.tbh)
    return [Part(lhs, rhs, "hhhh")]


def gen_b4(b: Blocks):
    Rm = b.R("hbhb")
    lhs = Rm - es("klij->ijkl", Rm)
    rhs = (es("iklj->ijkl", b.Td("hhhb")) + es("jlik->ijkl", b.Td("bbbh"))
           - es("kai,jla->ijkl", b.ta, b.tbh) - es("jal,ika->ijkl", b.tbh, b.ta))
    return [Part(lhs, rhs, "hhhh")]


def gen_b5(b: Blocks):
    rhs = -es("klij->ijkl", b.Td("hhbb")) + es("jai,kla->ijkl", b.tbb, b.ta)
    return [Part(b.R("hbhh"), rhs, "hhhh")]


def _cyc_hbhh(R5: np.ndarray) -> np.ndarray:
    return R5 + es("kjli->ijkl", R5) + es("ljik->ijkl", R5)


def gen_b6(b: Blocks):
    rhs = _b1_cyclic_td(b.Td("hhhh")) - _b1_quadratic(b.th, b.th)
    return [Part(_cyc_hbhh(b.R("hbhh")), rhs, "hhhh")]


def _cyc_d_hbhhh(D: np.ndarray) -> np.ndarray:
    return D + es("ijlmk->ijklm", D) + es("ijmkl->ijklm", D)


def _tau_R_cycle(t: np.ndarray, R4: np.ndarray) -> np.ndarray:
    """tau_{kl}^F R_{ij m F} + tau_{lm}^F R_{ij k F} + tau_{mk}^F R_{ij l F}."""
    return es("kla,ijma->ijklm", t, R4) + es("lma,ijka->ijklm", t, R4) + es("mka,ijla->ijklm", t, R4)


def gen_b7(b: Blocks):
    rhs = _tau_R_cycle(b.th, b.R("hbhh")) + _tau_R_cycle(b.ta, b.R("hbhb"))
    return [Part(_cyc_d_hbhhh(b.Rd("hbhhh")), rhs, "hhhhh")]


def _b8_lhs(b: Blocks) -> np.ndarray:
    A = b.Rd("hbhbh")
    return A - es("ijmlk->ijklm", A)


def gen_b8(b: Blocks):
    rhs = (-es("ijmkl->ijklm", b.Rd("hbhhb")) - es("mka,ijal->ijklm", b.th, b.R("hbhb"))
           - es("mka,ijal->ijklm", b.ta, b.R("hbbb")))
    return [Part(_b8_lhs(b), rhs, "hhhhh")]


def _b9_lhs(b: Blocks) -> np.ndarray:
    A = b.Rd("hbhbb")
    return A - es("ijkml->ijklm", A)


def gen_b9(b: Blocks):
    rhs = (-es("ijlmk->ijklm", b.Rd("hbbbh")) - es("lma,ijak->ijklm", b.tbh, b.R("hbhh"))
           + es("lma,ijka->ijklm", b.tbb, b.R("hbhb")))
    return [Part(_b9_lhs(b), rhs, "hhhhh")]


# ---- Hermitian -------------------------------------------------------------------

def herm_1(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("kjil->ijkl", Rm), es("ikjl->ijkl", b.Td("hhhb")), "hhhh")]


def herm_2(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("ilkj->ijkl", Rm), es("jlik->ijkl", b.Td("bbbh")), "hhhh")]


def herm_3(b: Blocks):
    Rm = b.R("hbhb")
    rhs = es("iklj->ijkl", b.Td("hhhb")) + es("jlik->ijkl", b.Td("bbbh"))
    return [Part(Rm - es("klij->ijkl", Rm), rhs, "hhhh")]


def herm_4(b: Blocks):
    return [Part(b.R("hbhh"), 0.0, "hhhh")]


def herm_5(b: Blocks):
    return [Part(_b1_cyclic_td(b.Td("hhhh")), _b1_quadratic(b.th, b.th), "hhhh")]


def herm_6(b: Blocks):
    return [Part(_b8_lhs(b), -es("mka,ijal->ijklm", b.th, b.R("hbhb")), "hhhhh")]


def herm_7(b: Blocks):
    return [Part(_b9_lhs(b), es("lma,ijka->ijklm", b.tbb, b.R("hbhb")), "hhhhh")]


# ---- quasi Kahler ----------------------------------------------------------------

def qk_1(b: Blocks):
    return [Part(_b1_cyclic_td(b.Td("hhbh")), 0.0, "hhhh")]


def qk_2(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("kjil->ijkl", Rm), -es("ika,laj->ijkl", b.ta, b.tbh), "hhhh")]


def qk_3(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("ilkj->ijkl", Rm), -es("kai,jla->ijkl", b.ta, b.tbh), "hhhh")]


def qk_4(b: Blocks):
    Rm = b.R("hbhb")
    rhs = -es("kai,jla->ijkl", b.ta, b.tbh) - es("ika,jal->ijkl", b.ta, b.tbh)
    return [Part(Rm - es("klij->ijkl", Rm), rhs, "hhhh")]


def qk_5(b: Blocks):
    return [Part(b.R("hbhh"), -es("klij->ijkl", b.Td("hhbb")), "hhhh")]


def qk_6(b: Blocks):
    return [Part(_cyc_hbhh(b.R("hbhh")), 0.0, "hhhh")]


def qk_7(b: Blocks):
    return [Part(_cyc_d_hbhhh(b.Rd("hbhhh")), _tau_R_cycle(b.ta, b.R("hbhb")), "hhhhh")]


def qk_8(b: Blocks):
    rhs = -es("ijmkl->ijklm", b.Rd("hbhhb")) - es("mka,ijal->ijklm", b.ta, b.R("hbbb"))
    return [Part(_b8_lhs(b), rhs, "hhhhh")]


def qk_9(b: Blocks):
    rhs = -es("ijlmk->ijklm", b.Rd("hbbbh")) - es("lma,ijak->ijklm", b.tbh, b.R("hbhh"))
    return [Part(_b9_lhs(b), rhs, "hhhhh")]


# ---- nearly Kahler ---------------------------------------------------------------

def nk_1(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("kjil->ijkl", Rm), -es("ika,jla->ijkl", b.ta, b.tbh), "hhhh")]


def nk_2(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("ilkj->ijkl", Rm), -es("ika,jla->ijkl", b.ta, b.tbh), "hhhh")]


def nk_3(b: Blocks):
    Rm = b.R("hbhb")
    return [Part(Rm - es("klij->ijkl", Rm), 0.0, "hhhh")]


def nk_4(b: Blocks):
    n = b.n
    return [Part(b.t.ricci.ricci_first[:n, n:], b.t.ricci.ricci_second, "hh")]


def nk_5(b: Blocks):
    return [Part(b.R("hbhh"), 0.0, "hhhh")]


def nk_6(b: Blocks):
    return [Part(_tau_R_cycle(b.ta, b.R("hbhb")), 0.0, "hhhhh")]


def nk_7(b: Blocks):
    return [Part(_b8_lhs(b), 0.0, "hhhhh")]


def nk_8(b: Blocks):
    return [Part(_b9_lhs(b), 0.0, "hhhhh")]


def kiri(b: Blocks):
    return [Part(b.t.tau_d, 0.0, "ffff")]


# ---- Levi-Civita versus canonical curvature ----------------------------------------

def _p_combo(ta: np.ndarray) -> np.ndarray:
    """P[i,k,lam] = tau_{ik}^{lambar} + tau_{k lam}^{ibar} - tau_{lam i}^{kbar}."""
    return ta + es("kai->ika", ta) - es("aik->ika", ta)


def _cmp1_herm_terms(b: Blocks) -> np.ndarray:
    return (es("lai,kaj->ijkl", b.tbb, b.th) + es("ial,jak->ijkl", b.th, b.tbb)
            - es("ika,jla->ijkl", b.th, b.tbb))


def _pq_term(b: Blocks) -> np.ndarray:
    P = _p_combo(b.ta)
    return es("ika,jla->ijkl", P, P.conj())


def cmp1_rhs(b: Blocks) -> np.ndarray:
    Rm = b.R("hbhb")
    return (0.5 * (es("ilkj->ijkl", Rm) + es("kjil->ijkl", Rm))
            - 0.25 * _cmp1_herm_terms(b)
            - 0.5 * (es("kai,jla->ijkl", b.ta, b.tbh) + es("ika,laj->ijkl", b.ta, b.tbh))
            + 0.25 * _pq_term(b))


def cmp_1(b: Blocks):
    return [Part(b.RL("hbhb"), cmp1_rhs(b), "hhhh")]


def cmp_1h(b: Blocks):
    n = b.n
    idx = np.arange(n)
    RL = b.RL("hbhb")[idx, idx, idx, idx]
    R = b.R("hbhb")[idx, idx, idx, idx]
    anti = np.einsum("iai->ia", b.ta)
    hol = np.einsum("iai->ia", b.th)
    rhs = R + np.sum(np.abs(anti) ** 2, axis=1) - 0.5 * np.sum(np.abs(hol) ** 2, axis=1)
    return [Part(RL, rhs, "h")]


def cmp_1herm(b: Blocks):
    Rm = b.R("hbhb")
    rhs = 0.5 * (es("ilkj->ijkl", Rm) + es("kjil->ijkl", Rm)) - 0.25 * _cmp1_herm_terms(b)
    return [Part(b.RL("hbhb"), rhs, "hhhh")]


def cmp_1qk(b: Blocks):
    return [Part(b.RL("hbhb"), b.R("hbhb") + 0.25 * _pq_term(b), "hhhh")]


def cmp_1ak(b: Blocks):
    return [Part(b.RL("hbhb"), b.R("hbhb") + es("aik,ajl->ijkl", b.ta, b.tbh), "hhhh")]


def cmp_1nk(b: Blocks):
    return [Part(b.RL("hbhb"), b.R("hbhb") + 0.25 * es("ika,jla->ijkl", b.ta, b.tbh), "hhhh")]


def _u_combo(ta: np.ndarray) -> np.ndarray:
    """U[j,k,lam] = tau_{jk}^{lambar} - tau_{k lam}^{jbar} + tau_{lam j}^{kbar}."""
    return ta - es("kaj->jka", ta) + es("ajk->jka", ta)


def cmp2_rhs(b: Blocks) -> np.ndarray:
    R5 = b.R("hbhh")
    U = _u_combo(b.ta)
    return (0.5 * (es("klij->ijkl", R5) - es("iljk->ijkl", R5) - es("jlki->ijkl", R5))
            + 0.5 * (es("ijlk->ijkl", b.Td("hhhh")) - es("ija,lak->ijkl", b.ta, b.tbb))
            + 0.25 * (es("jal,ika->ijkl", b.th, b.th) - es("ial,jka->ijkl", b.th, b.th))
            + 0.25 * es("lai,jka->ijkl", b.tbb, U)
            - 0.25 * es("laj,ika->ijkl", b.tbb, U))


def cmp_2(b: Blocks):
    return [Part(b.RL("hhhb"), cmp2_rhs(b), "hhhh")]


def cmp_2herm(b: Blocks):
    rhs = 0.5 * es("ijlk->ijkl", b.Td("hhhh")) + 0.25 * (
        es("jal,ika->ijkl", b.th, b.th) - es("ial,jka->ijkl", b.th, b.th))
    return [Part(b.RL("hhhb"), rhs, "hhhh")]


def cmp_2qk(b: Blocks):
    return [Part(b.RL("hhhb"), es("klij->ijkl", b.R("hbhh")), "hhhh")]


def cmp_2nk(b: Blocks):
    return [Part(b.RL("hhhb"), 0.0, "hhhh")]


def _v_combo(ta: np.ndarray) -> np.ndarray:
    """V[a,b,lam] = tau_{ab}^{lambar} - tau_{b lam}^{abar} - tau_{lam a}^{bbar}."""
    return ta - es("bla->abl", ta) - es("lab->abl", ta)


def _cmp3_derivative_terms(b: Blocks) -> np.ndarray:
    D = b.Td("hhbh")
    return 0.5 * (es("klji->ijkl", D) - es("klij->ijkl", D)) + 0.5 * (es("ijlk->ijkl", D) - D)


def cmp3_rhs(b: Blocks) -> np.ndarray:
    th, V = b.th, _v_combo(b.ta)
    return (_cmp3_derivative_terms(b)
            + 0.5 * (es("ija,kla->ijkl", th, b.ta) + es("ija,kla->ijkl", b.ta, th))
            + 0.25 * (es("ika,jla->ijkl", th, V) + es("jla,ika->ijkl", th, V)
                      - es("ila,jka->ijkl", th, V) - es("jka,ila->ijkl", th, V)))


def cmp_3(b: Blocks):
    return [Part(b.RL("hhhh"), cmp3_rhs(b), "hhhh")]


def cmp_3qk(b: Blocks):
    return [Part(b.RL("hhhh"), _cmp3_derivative_terms(b), "hhhh")]


def cmp_3zero(b: Blocks):
    return [Part(b.RL("hhhh"), 0.0, "hhhh")]


# ---- Ricci and scalar curvature ----------------------------------------------------

def ric_ak(b: Blocks):
    n = b.n
    ric = b.t.ricci
    R5 = b.R("hbhh")
    holo = es("iaaj->ij", R5) + es("jaai->ij", R5)
    mixed = ric.ricci_first[:n, n:] - 2.0 * es("iml,jlm->ij", b.ta, b.tbh)
    return [Part(ric.ricci_lc_holo, holo, "hh", "holomorphic"),
            Part(ric.ricci_lc_complex, mixed, "hh", "mixed")]


def ric_nk(b: Blocks):
    n = b.n
    ric = b.t.ricci
    mixed = ric.ricci_first[:n, n:] + 1.25 * es("iam,jam->ij", b.ta, b.tbh)
    return [Part(ric.ricci_lc_holo, 0.0, "hh", "holomorphic"),
            Part(ric.ricci_lc_complex, mixed, "hh", "mixed")]


def scal_gap_norm(ta: np.ndarray) -> float:
    """One quarter of the summed squares |tau_{lm}^{nbar} + tau_{mn}^{lbar} - tau_{nl}^{mbar}|^2."""
    W = ta + es("mnl->lmn", ta) - es("nlm->lmn", ta)
    return 0.25 * float(np.sum(np.abs(W) ** 2))


def scal(b: Blocks):
    ric = b.t.ricci
    gap = complex(ric.s_star - ric.s_canonical)
    return [Part(np.array([gap]), np.array([scal_gap_norm(b.ta)]), "-")]


def scal_eq(b: Blocks):
    return [Part(b.R("hbhh"), 0.0, "hhhh")]


def prop_nk(b: Blocks):
    return [Part(es("ijkl,abk,abl->ij", b.R("hbhb"), b.tbh, b.ta), 0.0, "hh")]


def dim6_nk(b: Blocks):
    n = b.n
    ric = b.t.ricci
    return [Part(ric.ricci_first[:n, n:], 0.0, "hh", "first"),
            Part(ric.ricci_second, 0.0, "hh", "second")]


# ---- frame-free Bianchi checks -------------------------------------------------------

RAW_SAMPLES = 2


def _raw_fields(b: Blocks, count: int, salt: int):
    if b.calc is None:
        raise DependencyError("table 'raw_calculus' was not computed")
    rng = np.random.default_rng([b.rng_seed, salt])
    return [random_polynomial_fields(rng, b.t.point, count) for _ in range(RAW_SAMPLES)]


def raw_b1(b: Blocks):
    parts = []
    for k, (X, Y, Z) in enumerate(_raw_fields(b, 3, 1)):
        lhs, rhs = first_bianchi_sides(b.calc, X, Y, Z, b.t.point)
        parts.append(Part(lhs, rhs, "c", f"sample{k + 1}"))
    return parts


def raw_b2(b: Blocks):
    parts = []
    for k, (X, Y, U, V, W) in enumerate(_raw_fields(b, 5, 2)):
        lhs, rhs = second_bianchi_sides(b.calc, X, Y, U, V, W, b.t.point)
        parts.append(Part(lhs, rhs, "-", f"sample{k + 1}"))
    return parts


# ---- catalog -------------------------------------------------------------------------

APPLICABILITY = ("all", "hermitian", "quasi", "almost", "nearly", "nearly-dim6", "kahler-equality")


@dataclass(frozen=True)
class IdentitySpec:
    code: str
    applicability: str
    tolerance: float
    evaluate: Callable[[Blocks], list[Part]] = field(compare=False, repr=False)
    needs_curvature_derivative: bool = False
    needs_raw: bool = False
    summary: str = ""


def _spec(code, applicability, tol, fn, summary, nabla_r=False, raw=False) -> IdentitySpec:
    return IdentitySpec(code, applicability, tol, fn, nabla_r, raw, summary)


A, TD, TT = TOL_ALGEBRAIC, TOL_DERIVATIVE, TOL_TORSION

CATALOG: dict[str, IdentitySpec] = {s.code: s for s in (
    _spec("GEN-B1", "all", TT, gen_b1, "cyclic nabla tau^{jbar} against tau^{jbar} tau"),
    _spec("GEN-B2", "all", A, gen_b2, "R_{ijbar klbar} - R_{kjbar ilbar} against nabla tau"),
    _spec("GEN-B3", "all", A, gen_b3, "R_{ijbar klbar} - R_{ilbar kjbar} against nabla tau"),
    _spec("GEN-B4", "all", A, gen_b4, "R_{ijbar klbar} - R_{klbar ijbar} against nabla tau"),
    _spec("GEN-B5", "all", A, gen_b5, "R_{ijbar kl} from nabla tau and tau tau"),
    _spec("GEN-B6", "all", A, gen_b6, "cyclic R_{ijbar kl} against nabla tau"),
    _spec("GEN-B7", "all", TD, gen_b7, "cyclic nabla R_{ijbar kl;m} against tau R", nabla_r=True),
    _spec("GEN-B8", "all", TD, gen_b8, "R_{ijbar klbar;m} - R_{ijbar mlbar;k}", nabla_r=True),
    _spec("GEN-B9", "all", TD, gen_b9, "R_{ijbar klbar;mbar} - R_{ijbar kmbar;lbar}", nabla_r=True),
    _spec("HERM-1", "hermitian", A, herm_1, "R_{ijbar klbar} - R_{kjbar ilbar} = tau^j_{ik;lbar}"),
    _spec("HERM-2", "hermitian", A, herm_2, "R_{ijbar klbar} - R_{ilbar kjbar} = tau^{ibar}_{jbar lbar;k}"),
    _spec("HERM-3", "hermitian", A, herm_3, "R_{ijbar klbar} - R_{klbar ijbar}"),
    _spec("HERM-4", "hermitian", A, herm_4, "R_{ijbar kl} = 0"),
    _spec("HERM-5", "hermitian", TT, herm_5, "cyclic nabla tau^j against tau tau"),
    _spec("HERM-6", "hermitian", TD, herm_6, "R_{ijbar klbar;m} - R_{ijbar mlbar;k}", nabla_r=True),
    _spec("HERM-7", "hermitian", TD, herm_7, "R_{ijbar klbar;mbar} - R_{ijbar kmbar;lbar}", nabla_r=True),
    _spec("QK-1", "quasi", TT, qk_1, "cyclic nabla tau^{jbar} = 0"),
    _spec("QK-2", "quasi", A, qk_2, "R_{ijbar klbar} - R_{kjbar ilbar}"),
    _spec("QK-3", "quasi", A, qk_3, "R_{ijbar klbar} - R_{ilbar kjbar}"),
    _spec("QK-4", "quasi", A, qk_4, "R_{ijbar klbar} - R_{klbar ijbar}"),
    _spec("QK-5", "quasi", A, qk_5, "R_{ijbar kl} = -tau_{kl;jbar}^{ibar}"),
    _spec("QK-6", "quasi", A, qk_6, "cyclic R_{ijbar kl} = 0"),
    _spec("QK-7", "quasi", TD, qk_7, "cyclic nabla R_{ijbar kl;m}", nabla_r=True),
    _spec("QK-8", "quasi", TD, qk_8, "R_{ijbar klbar;m} - R_{ijbar mlbar;k}", nabla_r=True),
    _spec("QK-9", "quasi", TD, qk_9, "R_{ijbar klbar;mbar} - R_{ijbar kmbar;lbar}", nabla_r=True),
    _spec("NK-1", "nearly", A, nk_1, "R_{ijbar klbar} - R_{kjbar ilbar}"),
    _spec("NK-2", "nearly", A, nk_2, "R_{ijbar klbar} - R_{ilbar kjbar}"),
    _spec("NK-3", "nearly", A, nk_3, "R_{ijbar klbar} = R_{klbar ijbar}"),
    _spec("NK-4", "nearly", A, nk_4, "first Ricci = second Ricci"),
    _spec("NK-5", "nearly", A, nk_5, "R_{ijbar kl} = 0"),
    _spec("NK-6", "nearly", A, nk_6, "cyclic tau^{lambar} R_{ijbar m lambar} = 0"),
    _spec("NK-7", "nearly", TD, nk_7, "R_{ijbar klbar;m} = R_{ijbar mlbar;k}", nabla_r=True),
    _spec("NK-8", "nearly", TD, nk_8, "R_{ijbar klbar;mbar} = R_{ijbar kmbar;lbar}", nabla_r=True),
    _spec("KIRI", "nearly", A, kiri, "torsion is parallel"),
    _spec("CMP-1", "all", A, cmp_1, "R^L_{ijbar klbar} from canonical data"),
    _spec("CMP-1H", "all", A, cmp_1h, "holomorphic sectional curvatures"),
    _spec("CMP-1HERM", "hermitian", A, cmp_1herm, "R^L_{ijbar klbar}, Hermitian case"),
    _spec("CMP-1QK", "quasi", A, cmp_1qk, "R^L_{ijbar klbar}, quasi Kahler case"),
    _spec("CMP-1AK", "almost", A, cmp_1ak, "R^L_{ijbar klbar}, almost Kahler case"),
    _spec("CMP-1NK", "nearly", A, cmp_1nk, "R^L_{ijbar klbar}, nearly Kahler case"),
    _spec("CMP-2", "all", A, cmp_2, "R^L_{ijklbar} from canonical data"),
    _spec("CMP-2HERM", "hermitian", A, cmp_2herm, "R^L_{ijklbar} = tau_{ij;k}^l / 2 + tau tau"),
    _spec("CMP-2QK", "quasi", A, cmp_2qk, "R^L_{ijklbar} = R_{klbar ij}"),
    _spec("CMP-2NK", "nearly", A, cmp_2nk, "R^L_{ijklbar} = 0"),
    _spec("CMP-3", "all", A, cmp_3, "R^L_{ijkl} from canonical data"),
    _spec("CMP-3HERM", "hermitian", A, cmp_3zero, "R^L_{ijkl} = 0"),
    _spec("CMP-3QK", "quasi", A, cmp_3qk, "R^L_{ijkl} from nabla tau"),
    _spec("CMP-3NK", "nearly", A, cmp_3zero, "R^L_{ijkl} = 0"),
    _spec("RIC-AK", "almost", A, ric_ak, "Levi-Civita Ricci, almost Kahler"),
    _spec("RIC-NK", "nearly", A, ric_nk, "Levi-Civita Ricci, nearly Kahler"),
    _spec("SCAL", "quasi", TOL_SCAL, scal, "S* - S^c equals a torsion norm, so S^c <= S*"),
    _spec("SCAL-EQ", "kahler-equality", A, scal_eq, "S^c = S* forces R_{ijbar kl} = 0"),
    _spec("PROP-NK", "nearly", A, prop_nk, "R_{ijbar klbar} tau tau contraction vanishes"),
    _spec("DIM6-NK", "nearly-dim6", A, dim6_nk, "Ricci of the canonical connection vanishes"),
    _spec("RAW-B1", "all", A, raw_b1, "first Bianchi identity on vector fields", raw=True),
    _spec("RAW-B2", "all", TD, raw_b2, "second Bianchi identity on vector fields", raw=True),
)}

CODES = tuple(CATALOG)


def resolve_selection(selection: str | Sequence[str] | None) -> list[str]:
    if selection is None or selection == "all":
        return list(CODES)
    codes = [c.strip().upper() for c in (selection.split(",") if isinstance(selection, str) else selection)]
    codes = [c for c in codes if c]
    unknown = [c for c in codes if c not in CATALOG]
    if unknown:
        raise UnknownIdentityError(f"unknown identity code(s): {', '.join(unknown)}")
    if not codes:
        raise UnknownIdentityError("empty identity selection")
    return list(dict.fromkeys(codes))


# ---- results ------------------------------------------------------------------------

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not-applicable"


def format_index(value: int, kind: str, n: int) -> str:
    if kind == "f":
        return f"{value + 1}" if value < n else f"{value - n + 1}b"
    return f"{value + 1}"


@dataclass
class IdentityResult:
    code: str
    point: int
    residual: float
    tolerance: float
    status: str
    worst_indices: list[str] = field(default_factory=list)
    part: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def as_dict(self) -> dict:
        out = {
            "code": self.code,
            "point": self.point,
            "residual": self.residual,
            "tol": self.tolerance,
            "pass": self.status != FAIL,
            "status": self.status,
            "worst_indices": list(self.worst_indices),
        }
        if self.part:
            out["part"] = self.part
        if self.extra:
            out["extra"] = dict(self.extra)
        return out


def evaluate_parts(parts: list[Part], n: int) -> tuple[float, list[str], str]:
    best, worst, label = -1.0, [], ""
    for part in parts:
        res = residual_array(part.lhs, part.rhs)
        flat = int(np.argmax(res)) if res.size else 0
        value = float(res.reshape(-1)[flat]) if res.size else 0.0
        if value > best:
            best, label = value, part.name
            if part.kinds in ("-", "c") or res.ndim == 0:
                worst = [] if part.kinds == "-" else [str(flat + 1)]
            else:
                idx = np.unravel_index(flat, res.shape)
                worst = [format_index(int(v), k, n) for v, k in zip(idx, part.kinds)]
    return max(best, 0.0), worst, label


def run_identity(code: str, s: ChartedStructure, p: int | np.ndarray, tables: GeometryTables,
                 calc: CovariantCalculus | None = None, tolerance: float | None = None,
                 point_index: int = 0, seed: int = 0) -> IdentityResult:
    """Evaluate one catalog identity at one point from precomputed tables (no applicability gate)."""
    spec = CATALOG.get(code)
    if spec is None:
        raise UnknownIdentityError(f"unknown identity code {code!r}")
    if spec.needs_raw and calc is None:
        calc = CovariantCalculus(FrameGeometry(s))
    blocks = Blocks(tables, calc, rng_seed=seed * 1000 + point_index)
    parts = spec.evaluate(blocks)
    residual, worst, label = evaluate_parts(parts, tables.n)
    tol = spec.tolerance if tolerance is None else tolerance
    passed = residual < tol
    extra = {}
    if code == "SCAL":
        ric = tables.ricci
        extra = {"s_canonical": float(ric.s_canonical.real), "s_star": float(ric.s_star.real)}
        inequality = extra["s_canonical"] <= extra["s_star"] + SCAL_INEQUALITY_SLACK
        extra["inequality"] = inequality
        passed = passed and inequality
    return IdentityResult(code, point_index, residual, tol, PASS if passed else FAIL, worst, label, extra)


# ---- suite ----------------------------------------------------------------------------

def applicable(spec: IdentitySpec, report: ClassificationReport, n: int) -> bool:
    app = spec.applicability
    if app == "all":
        return True
    if app == "nearly-dim6":
        return n == 3 and report.passes("nearly") and report.fails("kahler")
    if app == "kahler-equality":
        return report.passes("quasi")  # the measured SCAL gap decides the rest
    return report.passes(app)


@dataclass
class SuiteReport:
    label: str
    classification: ClassificationReport
    results: list[IdentityResult]
    plan: FDPlan
    points: np.ndarray
    raw_fd: dict = field(default_factory=dict)

    @property
    def per_code_max(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.results:
            if r.status != NOT_APPLICABLE:
                out[r.code] = max(out.get(r.code, 0.0), r.residual)
        return out

    @property
    def failures(self) -> list[IdentityResult]:
        return [r for r in self.results if r.status == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failures

    def status_of(self, code: str) -> str:
        statuses = {r.status for r in self.results if r.code == code}
        if not statuses:
            raise KeyError(code)
        if FAIL in statuses:
            return FAIL
        return NOT_APPLICABLE if statuses == {NOT_APPLICABLE} else PASS

    def max_residual(self, code: str) -> float:
        return self.per_code_max.get(code, 0.0)


def run_suite(s: ChartedStructure, points: np.ndarray, selection: str | Sequence[str] | None = "all",
              plan: FDPlan | None = None, frame: UnitaryFrameField | None = None, classify_tol: float = 1e-6,
              tolerances: dict[str, float] | None = None, seed: int = 0,
              raw_fd=RAW_FD) -> SuiteReport:
    """Classify, then run every selected and applicable identity at every point."""
    codes = resolve_selection(selection)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    plan = plan or FDPlan()
    frame = frame if frame is not None else unitary_frame(s, pts)
    report = classify(s, pts, classify_tol, frame, plan)
    active = [c for c in codes if applicable(CATALOG[c], report, s.n)]
    need_d = any(CATALOG[c].needs_curvature_derivative for c in active)
    need_raw = any(CATALOG[c].needs_raw for c in active)
    geo = FrameGeometry(s, frame, plan)
    calc = CovariantCalculus(geo, raw_fd) if need_raw else None
    if need_raw:
        for p in pts:
            s.chart.require_margin(p, 3 * raw_fd.margin + plan.connection.margin)
    tolerances = tolerances or {}
    per_point: list[dict[str, IdentityResult]] = []
    for k, p in enumerate(pts):
        row: dict[str, IdentityResult] = {}
        tables = compute_tables(s, p, frame, plan, curvature_derivative=need_d) if active else None
        for code in codes:
            spec = CATALOG[code]
            if code not in active or code == "SCAL-EQ":
                row[code] = IdentityResult(code, k, 0.0, tolerances.get(code, spec.tolerance), NOT_APPLICABLE)
                continue
            row[code] = run_identity(code, s, p, tables, calc, tolerances.get(code), k, seed)
        if "SCAL-EQ" in active:
            row["SCAL-EQ"] = run_identity("SCAL-EQ", s, p, tables, calc, tolerances.get("SCAL-EQ"), k, seed)
            gap = abs((tables.ricci.s_star - tables.ricci.s_canonical).real)
            row["SCAL-EQ"].extra["scal_gap"] = float(gap)
        per_point.append(row)
    if "SCAL-EQ" in active:
        gap_tol = tolerances.get("SCAL", TOL_SCAL)
        if not all(row["SCAL-EQ"].extra["scal_gap"] < gap_tol for row in per_point):
            for row in per_point:
                r = row["SCAL-EQ"]
                row["SCAL-EQ"] = IdentityResult("SCAL-EQ", r.point, 0.0, r.tolerance, NOT_APPLICABLE)
    results = [row[c] for c in codes for row in per_point]
    raw = {"step": raw_fd.step, "scheme": raw_fd.scheme, "richardson": raw_fd.richardson}
    return SuiteReport(s.label, report, results, plan, pts, raw)


# ---- dual-path Levi-Civita curvature ---------------------------------------------------

def reconstruct_levi_civita(t: GeometryTables) -> np.ndarray:
    """Full ``R^L[A,B,C,D]`` assembled from canonical data only.

    The three comparison formulas give the ``hbhb``, ``hhhb`` and ``hhhh`` blocks; skew
    symmetry in each pair, pair symmetry and the torsion-free first Bianchi identity give the
    remaining representatives, and conjugation fills the barred mirror of every block.
    """
    b = Blocks(t)
    n = t.n
    X1, X2, X3 = cmp1_rhs(b), cmp2_rhs(b), cmp3_rhs(b)
    hbhh = es("klij->ijkl", X2)
    blocks = {
        "hbhb": X1,
        "hbbh": -es("ijkl->ijlk", X1),
        "hhhb": X2,
        "hhbh": -es("ijkl->ijlk", X2),
        "hbhh": hbhh,
        "bhhh": -es("ijkl->jikl", hbhh),
        "hhhh": X3,
        # R_{ij kbar lbar} = -R_{kbar j lbar i} - R_{lbar j i kbar}
        "hhbb": -es("kjli->ijkl", X1.conj()) + es("jlik->ijkl", X1),
    }
    out = np.zeros((2 * n,) * 4, dtype=complex)
    flip = {"h": "b", "b": "h"}
    for pattern, value in blocks.items():
        sl = tuple(slice(0, n) if c == "h" else slice(n, 2 * n) for c in pattern)
        mirror = tuple(slice(0, n) if flip[c] == "h" else slice(n, 2 * n) for c in pattern)
        out[sl] = value
        out[mirror] = value.conj()
    return out


@dataclass
class CrosscheckResult:
    point: int
    max_discrepancy: float
    worst_indices: list[str]

    def as_dict(self) -> dict:
        return {"point": self.point, "max_discrepancy": self.max_discrepancy, "worst_indices": self.worst_indices}


def crosscheck_point(t: GeometryTables, point_index: int = 0) -> CrosscheckResult:
    diff = np.abs(t.curv_lc - reconstruct_levi_civita(t))
    flat = int(np.argmax(diff))
    idx = np.unravel_index(flat, diff.shape)
    return CrosscheckResult(point_index, float(diff.reshape(-1)[flat]),
                            [format_index(int(v), "f", t.n) for v in idx])


def crosscheck(s: ChartedStructure, points: np.ndarray, plan: FDPlan | None = None,
               frame: UnitaryFrameField | None = None) -> list[CrosscheckResult]:
    """Compare the Koszul-direct Levi-Civita curvature with its reconstruction from canonical data."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    frame = frame if frame is not None else unitary_frame(s, pts)
    return [crosscheck_point(compute_tables(s, p, frame, plan, curvature_derivative=False), k)
            for k, p in enumerate(pts)]
