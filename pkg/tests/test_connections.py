from __future__ import annotations

import numpy as np
import pytest

from ahgeom.complex_frame import unitary_frame
from ahgeom.connections import (
    CANONICAL,
    LEVI_CIVITA,
    FDPlan,
    FrameGeometry,
    canonical_coeffs,
    compute_tables,
    conj_perm,
    connection_difference_residual,
    curvature_derivatives,
    curvature_table,
    levi_civita_coeffs,
    torsion_derivatives,
    torsion_table,
)

from conftest import entry, tables


def _constant_curvature(G: np.ndarray, K: float) -> np.ndarray:
    """<R(E_C, E_D) E_A, E_B> for constant sectional curvature K."""
    return K * (np.einsum("DA,CB->ABCD", G, G) - np.einsum("CA,DB->ABCD", G, G))


def test_flat_everything_vanishes():
    for t in tables("flat_cn", 2, derivative=True, n=2):
        for arr in (t.gamma_can, t.gamma_lc, t.tau, t.curv, t.curv_lc, t.tau_d, t.curv_d):
            assert np.max(np.abs(arr)) < 1e-10


def test_op_wrappers_agree_with_tables():
    e = entry("random_torus")
    p = e.sample_points(1, 0)[0]
    t = compute_tables(e.structure, p)
    lc = levi_civita_coeffs(e.structure, None, p)
    can = canonical_coeffs(e.structure, None, p)
    assert np.allclose(lc.gamma, t.gamma_lc, atol=1e-13)
    assert np.allclose(can.gamma, t.gamma_can, atol=1e-13)
    assert np.allclose(torsion_table(e.structure, None, can, p).tau, t.tau, atol=1e-13)
    assert np.allclose(curvature_table(e.structure, None, lc, p).curv, t.curv_lc, atol=1e-13)
    assert np.allclose(torsion_derivatives(e.structure, None, can, p), t.tau_d, atol=1e-13)
    assert np.allclose(curvature_derivatives(e.structure, None, can, p), t.curv_d, atol=1e-12)
    with pytest.raises(ValueError):
        torsion_derivatives(e.structure, None, lc, p)


def test_s2_christoffel_oracle():
    # conformal metric e^{2 phi} delta: Gamma^k_ij = delta_ik phi_j + delta_jk phi_i - delta_ij phi_k
    r = 1.3
    e = entry("round_s2", radius=r)
    geo = FrameGeometry(e.structure)
    eye = np.eye(2)
    for p in e.sample_points(5, 1):
        dphi = -2 * p / (r * r + p @ p)
        expected = (np.einsum("ki,j->kij", eye, dphi) + np.einsum("kj,i->kij", eye, dphi)
                    - np.einsum("ij,k->kij", eye, dphi))
        for which in (LEVI_CIVITA, CANONICAL):
            assert np.max(np.abs(geo.coordinate_christoffel(p, which) - expected)) < 1e-9


@pytest.mark.parametrize("radius", [1.0, 2.0])
def test_s2_holomorphic_sectional_curvature(radius):
    for t in tables("round_s2", 3, radius=radius):
        assert t.curv_lc[0, 1, 0, 1].real == pytest.approx(1 / radius**2, abs=5e-4)
        assert t.curv[0, 1, 0, 1].real == pytest.approx(1 / radius**2, abs=5e-4)
        assert abs(t.ricci.s_star - t.ricci.s_canonical) < 1e-8


def test_s2_levi_civita_properties():
    e = entry("round_s2")
    for p in e.sample_points(3, 2):
        lc = levi_civita_coeffs(e.structure, None, p)
        assert lc.metric_compatibility_residual() < 1e-7
        assert np.max(np.abs(torsion_table(e.structure, None, lc, p).tau)) < 1e-7


@pytest.mark.parametrize("name,K", [("round_s2", 1.0), ("s6_nearly_kahler", 1.0)])
def test_constant_curvature_oracle(name, K):
    for t in tables(name, 2):
        expected = _constant_curvature(t.frame_metric, K)
        assert np.max(np.abs(t.curv_lc - expected)) < 1e-6


def test_hopf_product_curvature_oracle():
    # metric |z|^-2 delta is dt^2 + round S^3 with t = log|z|: only the sphere factor curves
    for t in tables("hopf_surface", 3):
        p = t.point
        radial = p / np.linalg.norm(p)
        P = np.eye(4) - np.outer(radial, radial)
        Q = P @ t.frame
        Gt = Q.T @ Q / (p @ p)
        assert np.max(np.abs(t.curv_lc - _constant_curvature(Gt, 1.0))) < 1e-6


def test_hopf_is_hermitian_not_kahler():
    n = 2
    for t in tables("hopf_surface", 3):
        assert np.max(np.abs(t.tau[:n, n:])) < 1e-7
        assert np.max(np.abs(t.tau[:n, :n, n:])) < 1e-7
        assert np.max(np.abs(t.tau[:n, :n, :n])) > 0.1


@pytest.mark.parametrize("name", ["random_torus", "s6_nearly_kahler", "hopf_surface"])
def test_mixed_torsion_vanishes(name):
    for t in tables(name, 2):
        assert np.max(np.abs(t.tau[: t.n, t.n:])) < 1e-7


@pytest.mark.parametrize("name", ["random_torus", "s6_nearly_kahler"])
def test_canonical_connection_defining_properties(name):
    e = entry(name)
    for p in e.sample_points(2, 0):
        can = canonical_coeffs(e.structure, None, p)
        assert can.metric_compatibility_residual() < 1e-8
        assert can.type_preservation_residual() == 0.0
        lc = levi_civita_coeffs(e.structure, None, p)
        assert lc.metric_compatibility_residual() < 1e-8


def test_levi_civita_is_torsion_free():
    for t in tables("random_torus", 2):
        assert np.max(np.abs(t.tau_lc)) < 1e-8


def test_kahler_connections_coincide():
    for t in tables("round_s2", 2):
        assert np.max(np.abs(t.gamma_lc - t.gamma_can)) < 1e-9


def test_comparison_lemma_on_s6():
    rng = np.random.default_rng(3)
    for t in tables("s6_nearly_kahler", 10, seed=3):
        X, Y, Z = rng.normal(size=(3, 6))
        assert connection_difference_residual(t, X, Y, Z) < 1e-6


def test_comparison_lemma_on_torus():
    rng = np.random.default_rng(4)
    for t in tables("random_torus", 2, n=3):
        X, Y, Z = rng.normal(size=(3, 6))
        assert connection_difference_residual(t, X, Y, Z) < 1e-6


@pytest.mark.parametrize("name", ["random_torus", "hopf_surface", "s6_nearly_kahler"])
def test_curvature_symmetries(name):
    n = entry(name).structure.n
    for t in tables(name, 2):
        R, RL = t.curv, t.curv_lc
        assert np.max(np.abs(R + np.einsum("ABCD->BACD", R))) < 1e-6
        assert np.max(np.abs(R + np.einsum("ABCD->ABDC", R))) < 1e-10
        assert np.max(np.abs(R[:n, :n])) < 1e-6  # type preservation: R_{ij..} = 0
        assert np.max(np.abs(RL + np.einsum("ABCD->BACD", RL))) < 1e-6
        assert np.max(np.abs(RL - np.einsum("ABCD->CDAB", RL))) < 1e-6
        cyc = RL + np.einsum("ACDB->ABCD", RL) + np.einsum("ADBC->ABCD", RL)
        assert np.max(np.abs(cyc)) < 1e-6


def test_conjugation_symmetry():
    for t in tables("random_torus", 2, derivative=True):
        perm = conj_perm(2 * t.n)
        for arr in (t.tau, t.curv, t.curv_lc, t.tau_d, t.curv_d):
            flipped = arr[np.ix_(*(perm,) * arr.ndim)]
            assert np.max(np.abs(flipped - arr.conj())) < 1e-8


def test_first_ricci_is_hermitian():
    for t in tables("random_torus", 2, n=3):
        n = t.n
        mixed = t.ricci.ricci_first[:n, n:]
        assert np.max(np.abs(mixed - mixed.conj().T)) < 1e-8
        assert abs(t.ricci.s_canonical.imag) < 1e-8 and abs(t.ricci.s_star.imag) < 1e-8


def test_frame_invariant_scalars():
    e = entry("random_torus", n=2)
    seeds = np.random.default_rng(9).normal(size=(2, 4))
    other = unitary_frame(e.structure, seed_basis=seeds)
    for p in e.sample_points(2, 5):
        a = compute_tables(e.structure, p, curvature_derivative=False)
        b = compute_tables(e.structure, p, other, curvature_derivative=False)
        assert np.max(np.abs(a.gamma_can - b.gamma_can)) > 1e-3  # the frames genuinely differ
        assert abs(a.ricci.s_canonical - b.ricci.s_canonical) < 1e-6
        assert abs(a.ricci.s_star - b.ricci.s_star) < 1e-6
        assert np.sum(np.abs(a.tau) ** 2) == pytest.approx(np.sum(np.abs(b.tau) ** 2), abs=1e-6)
        assert np.sum(np.abs(a.curv) ** 2) == pytest.approx(np.sum(np.abs(b.curv) ** 2), abs=1e-6)


def test_s6_ricci_and_torsion_constants():
    n = 3
    norms = []
    for t in tables("s6_nearly_kahler", 10, seed=3):
        ta, tbh = t.tau[:n, :n, n:], t.tau[n:, n:, :n]
        contraction = np.einsum("iam,jam->ij", ta, tbh)
        assert np.max(np.abs(contraction - 4 * np.eye(n))) < 1e-6
        assert np.max(np.abs(t.ricci.ricci_lc_complex - 5 * np.eye(n))) < 1e-6
        norms.append(np.sum(np.abs(t.tau) ** 2))
    assert np.std(norms) < 1e-5
    # one nonzero tau_{ij}^{kbar} of modulus sqrt 2 per ordered pair i != j, plus the conjugate block
    assert np.mean(norms) == pytest.approx(2 * 6 * 2, abs=1e-6)


def test_step_plan_changes_little():
    e = entry("random_torus")
    p = e.sample_points(1, 0)[0]
    a = compute_tables(e.structure, p, curvature_derivative=False)
    b = compute_tables(e.structure, p, plan=FDPlan.uniform(5e-4), curvature_derivative=False)
    assert np.max(np.abs(a.curv - b.curv)) < 1e-8
