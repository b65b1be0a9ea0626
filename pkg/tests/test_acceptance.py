"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from ahgeom import zoo
from ahgeom.classification import classify
from ahgeom.cli import main
from ahgeom.connections import FDPlan, compute_tables
from ahgeom.identities import NOT_APPLICABLE, crosscheck, run_suite, scal_gap_norm

GEN_FIRST = [f"GEN-B{k}" for k in range(1, 7)]
GEN_DERIV = ["GEN-B7", "GEN-B8", "GEN-B9"]
NAMED = ["flat_cn", "round_s2", "s6_nearly_kahler", "hopf_surface", "random_torus"]


@pytest.fixture
def verdict(capsys):
    def emit(criterion: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {criterion:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def _tables(name: str, count: int, seed: int = 0, **params):
    e = zoo.build(name, **params)
    return [compute_tables(e.structure, p, curvature_derivative=False) for p in e.sample_points(count, seed)]


def test_criterion_01_flat_baseline(tmp_path, verdict):
    out = tmp_path / "flat.json"
    code = main(["check", "flat_cn", "--n", "2", "--points", "5", "--out", str(out)])
    doc = json.loads(out.read_text())
    applicable = [r for r in doc["identities"] if r["status"] != NOT_APPLICABLE]
    worst = max(r["residual"] for r in applicable)
    verdict(1, code == 0 and worst < 1e-10,
            f"check flat_cn --n 2 --points 5: exit {code}, max residual {worst:.2e} over {len(applicable)} results")


def test_criterion_02_universal_bianchi(verdict):
    cases = [("random_torus", {"n": 2, "seed": s, "amplitude": 0.1}, s) for s in range(1, 6)]
    cases += [(name, {}, 0) for name in NAMED]
    worst_first, worst_deriv = 0.0, 0.0
    for name, params, seed in cases:
        e = zoo.build(name, **params)
        report = run_suite(e.structure, e.sample_points(10, seed), GEN_FIRST + GEN_DERIV)
        worst_first = max([worst_first] + [report.max_residual(c) for c in GEN_FIRST])
        worst_deriv = max([worst_deriv] + [report.max_residual(c) for c in GEN_DERIV])
    verdict(2, worst_first < 1e-4 and worst_deriv < 1e-3,
            f"{len(cases)} structures x 10 points: GEN-B1..B6 max {worst_first:.2e} (<1e-4), "
            f"GEN-B7..B9 max {worst_deriv:.2e} (<1e-3)")


def test_criterion_03_parallel_torsion(verdict):
    e = zoo.build("s6_nearly_kahler")
    worst = 0.0
    for p in e.sample_points(10, 0):
        t = compute_tables(e.structure, p, curvature_derivative=False)
        worst = max(worst, float(np.max(np.abs(t.tau_d))))
    verdict(3, worst < 1e-4, f"s6_nearly_kahler, 10 points: max |nabla tau| = {worst:.2e} (<1e-4)")


def test_criterion_04_six_dimensional_ricci(verdict):
    first, second, diff = 0.0, 0.0, 0.0
    for t in _tables("s6_nearly_kahler", 10):
        n = t.n
        r1, r2 = t.ricci.ricci_first[:n, n:], t.ricci.ricci_second
        first = max(first, float(np.max(np.abs(r1))))
        second = max(second, float(np.max(np.abs(r2))))
        diff = max(diff, float(np.max(np.abs(r1 - r2))))
    verdict(4, first < 1e-4 and diff < 1e-4,
            f"s6_nearly_kahler: max |R'_ijbar| {first:.2e}, max |R''_ijbar| {second:.2e}, "
            f"max |R' - R''| {diff:.2e} (<1e-4)")


def test_criterion_05_crosscheck(verdict):
    worst = {}
    for name in NAMED:
        params = {"seed": 42} if name == "random_torus" else {}
        e = zoo.build(name, **params)
        worst[name] = max(r.max_discrepancy for r in crosscheck(e.structure, e.sample_points(5, 0)))
    verdict(5, max(worst.values()) < 1e-4,
            "direct vs reconstructed R^L: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (<1e-4)")


def test_criterion_06_scalar_inequality(verdict):
    checked, ok = [], True
    worst_slack, worst_norm, worst_kahler = -np.inf, 0.0, 0.0
    for name in NAMED:
        e = zoo.build(name)
        pts = e.sample_points(10, 0)
        report = classify(e.structure, pts)
        if not report.passes("quasi"):
            continue
        checked.append(name)
        for p in pts:
            t = compute_tables(e.structure, p, curvature_derivative=False)
            sc, ss = t.ricci.s_canonical.real, t.ricci.s_star.real
            gap = ss - sc
            worst_slack = max(worst_slack, sc - ss)
            worst_norm = max(worst_norm, abs(gap - scal_gap_norm(t.tau[: t.n, : t.n, t.n:])))
            if report.passes("kahler"):
                worst_kahler = max(worst_kahler, abs(gap))
    ok = worst_slack <= 1e-8 and worst_norm < 1e-5 and worst_kahler < 1e-8
    verdict(6, ok and bool(checked),
            f"quasi Kahler entries {checked}: max (S^c - S*) {worst_slack:.1e} (<=1e-8), "
            f"|gap - torsion norm| {worst_norm:.1e} (<1e-5), Kahler gap {worst_kahler:.1e} (<1e-8)")


def test_criterion_07_hermitian_vanishing(verdict):
    mixed, lc, ordering = 0.0, 0.0, -np.inf
    for t in _tables("hopf_surface", 10):
        n = t.n
        mixed = max(mixed, float(np.max(np.abs(t.curv[:n, n:, :n, :n]))))
        lc = max(lc, float(np.max(np.abs(t.curv_lc[:n, :n, :n, :n]))))
        for i in range(n):
            ordering = max(ordering, t.curv_lc[i, i + n, i, i + n].real - t.curv[i, i + n, i, i + n].real)
    verdict(7, mixed < 1e-4 and lc < 1e-4 and ordering <= 1e-6,
            f"hopf_surface: max |R_ijbar kl| {mixed:.1e}, max |R^L_ijkl| {lc:.1e} (<1e-4), "
            f"max (R^L_{{i ibar i ibar}} - R_{{i ibar i ibar}}) {ordering:.2e} (<=1e-6)")


def test_criterion_08_nearly_kahler_equalities(verdict):
    e = zoo.build("s6_nearly_kahler")
    pts = e.sample_points(10, 0)
    hsc, hhhb, hhhh = 0.0, 0.0, 0.0
    for p in pts:
        t = compute_tables(e.structure, p, curvature_derivative=False)
        n = t.n
        for i in range(n):
            hsc = max(hsc, abs(t.curv_lc[i, i + n, i, i + n] - t.curv[i, i + n, i, i + n]))
        hhhb = max(hhhb, float(np.max(np.abs(t.curv_lc[:n, :n, :n, n:]))))
        hhhh = max(hhhh, float(np.max(np.abs(t.curv_lc[:n, :n, :n, :n]))))
    report = run_suite(e.structure, pts, "RIC-NK,PROP-NK")
    ric, prop = report.max_residual("RIC-NK"), report.max_residual("PROP-NK")
    ran = report.status_of("RIC-NK") != NOT_APPLICABLE and report.status_of("PROP-NK") != NOT_APPLICABLE
    ok = ran and max(hsc, hhhb, hhhh, ric, prop) < 1e-4
    verdict(8, ok, f"s6_nearly_kahler: |R^L_{{i ibar i ibar}} - R_{{i ibar i ibar}}| {hsc:.1e}, |R^L_ijklbar| {hhhb:.1e}, "
                   f"|R^L_ijkl| {hhhh:.1e}, RIC-NK {ric:.1e}, PROP-NK {prop:.1e} (<1e-4)")


def test_criterion_09_convergence_order(verdict):
    e = zoo.build("random_torus", seed=42)
    pts = e.sample_points(5, 0)
    residual = {
        h: run_suite(e.structure, pts, "GEN-B2", plan=FDPlan.uniform(h, "central-2")).max_residual("GEN-B2")
        for h in (1e-2, 5e-3)
    }
    ratio = residual[1e-2] / residual[5e-3]
    verdict(9, ratio >= 3, f"GEN-B2 on random_torus seed 42, central-2: residual {residual[1e-2]:.2e} at h=1e-2, "
                           f"{residual[5e-3]:.2e} at h=5e-3, reduction x{ratio:.2f} (>=3)")


def test_criterion_10_determinism(verdict):
    commands = [
        ["zoo", "--format", "json"],
        ["classify", "random_torus", "--points", "3", "--seed", "4"],
        ["check", "random_torus", "--points", "2", "--seed", "4", "--identities", "GEN-B2,GEN-B7,CMP-1,RAW-B1"],
        ["crosscheck", "hopf_surface", "--points", "2", "--seed", "4"],
    ]
    same = []
    for argv in commands:
        outs = [subprocess.run([sys.executable, "-m", "ahgeom.cli", *argv], capture_output=True, check=False).stdout
                for _ in range(2)]
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    verdict(10, all(same), f"{sum(same)}/{len(commands)} commands byte-identical across two runs")
