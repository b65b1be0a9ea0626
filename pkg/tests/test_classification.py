from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from ahgeom.classification import LABELS, ClassificationReport, StructureError, classify, torsion_criteria
from ahgeom.complex_frame import unitary_frame

from conftest import entry


def _report(name, **params):
    e = entry(name, **params)
    return classify(e.structure, e.sample_points(5, 0))


def test_flat_has_every_label():
    r = _report("flat_cn", n=3)
    assert r.labels == list(LABELS)
    assert not any(r.strict.values())


def test_s6_is_strictly_nearly_kahler():
    r = _report("s6_nearly_kahler")
    assert set(r.labels) == {"quasi", "nearly"}
    assert r.fails("kahler") and r.fails("hermitian") and r.fails("almost")
    assert r.strict["quasi"] and r.strict["nearly"]


def test_hopf_is_hermitian_only():
    r = _report("hopf_surface")
    assert r.labels == ["hermitian"]
    assert r.strict["hermitian"] and r.fails("kahler")


def test_random_torus_has_no_label():
    r = _report("random_torus")
    assert r.labels == []
    assert all(r.fails(name) for name in LABELS)


@pytest.mark.parametrize("name", ["flat_cn", "round_s2", "s6_nearly_kahler", "hopf_surface", "random_torus"])
def test_label_set_is_monotone(name):
    r = _report(name)
    if r.passes("nearly") or r.passes("almost"):
        assert r.passes("quasi")
    if r.passes("kahler"):
        assert all(r.passes(label) for label in LABELS)


def test_criteria_on_synthetic_torsion():
    tau = np.zeros((4, 4, 4), dtype=complex)
    tau[0, 1, 2 + 1] = 1.0  # tau_{12}^{2bar}
    tau[1, 0, 2 + 1] = -1.0
    c = torsion_criteria(tau)
    assert c["quasi"] == 0.0 and c["hermitian"] == 1.0
    assert c["kahler"] >= max(c.values())
    assert c["almost"] == 0.0  # a single skew pair has vanishing cyclic sum in dimension 4


def test_inconclusive_band():
    r = ClassificationReport({"kahler": 5e-6, "hermitian": 5e-7, "quasi": 5e-5, "almost": 5e-5, "nearly": 5e-5}, 1e-6, 1)
    assert r.labels == ["hermitian"]
    assert r.inconclusive == ["kahler"]
    assert not r.strict["hermitian"]  # Kahler is not clearly excluded


def test_frame_independence():
    e = entry("s6_nearly_kahler")
    pts = e.sample_points(3, 1)
    other = unitary_frame(e.structure, pts, np.random.default_rng(2).normal(size=(3, 6)))
    a = classify(e.structure, pts)
    b = classify(e.structure, pts, frame=other)
    assert a.labels == b.labels
    for name in LABELS:
        assert a.residuals[name] == pytest.approx(b.residuals[name], abs=1e-6)


def test_invalid_structure_raises():
    e = entry("flat_cn", n=2)
    bad = dataclasses.replace(e.structure, J=lambda x: 1.01 * e.structure.J(x))
    with pytest.raises(StructureError) as info:
        classify(bad, e.sample_points(1, 0))
    assert info.value.diagnostics["j_squared"] == pytest.approx(0.0201)


def test_report_serialization():
    d = _report("hopf_surface").as_dict()
    assert d["labels"] == ["hermitian"] and d["samples"] == 5
    assert set(d["residuals"]) == set(LABELS)
