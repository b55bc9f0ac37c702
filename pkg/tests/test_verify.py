import json

import numpy as np
import pytest

from crninherit.corpus import load_network
from crninherit.dynamics import EQUILIBRIUM, PERIODIC_ORBIT, ClassificationTolerances, LimitSetReport, classify
from crninherit.verify import (
    FAIL,
    PASS,
    InheritanceTask,
    VerifyError,
    compare_classifications,
    load_task,
    run_inheritance,
)


def report(kind, values):
    values = np.asarray(values, dtype=complex)
    return LimitSetReport(kind, np.ones(2), values, classify(kind, values), ClassificationTolerances(),
                          period=1.0 if kind == PERIODIC_ORBIT else None)


def r3_task(**kw):
    net, specs = load_network("R3")
    rates = {lab: s.resolve() for lab, s in specs.items()}
    return InheritanceTask(net, rates, kw.pop("script", []), [[1.0, 1.0, 1.0]], t_end=50.0, **kw)


# -- comparison --------------------------------------------------------------

def test_stable_orbit_gains_fast_multipliers():
    cmp_ = compare_classifications(report(PERIODIC_ORBIT, [0.3, 0.1]), report(PERIODIC_ORBIT, [0.31, 0.1, 0.01, 0.002]), 2)
    assert cmp_.passed and cmp_.extras_ok and "extras fast" in cmp_.notes
    assert sorted(abs(v) for v in cmp_.extras) == pytest.approx([0.002, 0.01])


def test_unstable_base_with_stable_lift_fails():
    cmp_ = compare_classifications(report(PERIODIC_ORBIT, [0.3, 1.4]), report(PERIODIC_ORBIT, [0.3, 0.9, 0.1, 0.2]), 2)
    assert not cmp_.passed
    assert any("stability differs" in n for n in cmp_.notes)


def test_extra_outside_the_disc_fails():
    cmp_ = compare_classifications(report(PERIODIC_ORBIT, [0.3]), report(PERIODIC_ORBIT, [0.3, 1.2]), 1)
    assert not cmp_.extras_ok and not cmp_.passed


def test_wrong_extra_count_fails():
    cmp_ = compare_classifications(report(EQUILIBRIUM, [-1]), report(EQUILIBRIUM, [-1, -5, -7]), 1)
    assert not cmp_.count_ok and not cmp_.passed


def test_kind_mismatch_raises():
    with pytest.raises(ValueError):
        compare_classifications(report(EQUILIBRIUM, [-1]), report(PERIODIC_ORBIT, [0.5]))


# -- tasks -------------------------------------------------------------------

def test_task_validation():
    with pytest.raises(ValueError):
        r3_task(eps_schedule=(0.05, 0.1))
    with pytest.raises(ValueError):
        r3_task(tube_radius=0.0)
    with pytest.raises(ValueError):
        InheritanceTask(load_network("R3")[0], {}, [], [])


def test_load_bundled_tasks():
    task = load_task("r1_to_r2.json")
    assert task.eps_schedule == (0.1, 0.05, 0.02) and task.tube_radius == 0.15
    assert len(task.script) == 1 and task.script[0]["op"] == "E6"
    assert "k1'" not in task.rates


def test_empty_script_is_trivial():
    cert = run_inheritance(r3_task())
    assert cert.verdict == PASS and cert.checks == {"empty_script": True}
    (res,) = cert.results
    assert res.entries[0].comparison.passed and res.entries[0].distance == 0.0


def test_script_without_split_is_refused():
    with pytest.raises(VerifyError):
        run_inheritance(r3_task(script=[{"op": "E2"}]))


def test_r3_to_r4_equilibrium_inheritance():
    cert = run_inheritance(load_task("r3_to_r4.json"))
    assert cert.verdict == PASS
    (res,) = cert.results
    assert res.base.kind == EQUILIBRIUM and res.base.classification.linearly_stable
    d = [e.distance for e in res.entries]
    assert all(b < a for a, b in zip(d, d[1:]))
    for e in res.entries:
        assert e.report.kind == EQUILIBRIUM and len(e.report.values) == 4
        assert e.comparison.passed
    assert "hyperplane" not in res.bound.terms


def test_r1_to_r2_certificate_contents(r1_r2_certificate):
    cert, _ = r1_r2_certificate
    (res,) = cert.results
    assert res.base.is_orbit and res.base.classification.linearly_stable
    for e in res.entries:
        assert e.found and e.positive and e.comparison.passed
        assert len(e.report.values) == 4 and e.conservation_error < 1e-8
        assert e.within_bound is False  # the listed eps exceed the conservative eps1
    assert res.checks["weakly_monotone"] and res.checks["distance_below_zeta"]
    data = json.loads(cert.to_json())
    assert data["verdict"] == PASS and data["slow_fast_model"]["beta_hat"] == [["2", "0"], ["0", "1"]]
    table = cert.summary_table().splitlines()
    assert table[0].split("\t")[0] == "set" and table[-1] == "verdict\tPASS"
    assert len(table) == 2 + 1 + 3


def test_tight_zeta_gives_fail_verdict():
    # a zeta below every lifted distance must fail the certificate
    task = load_task("r3_to_r4.json")
    strict = InheritanceTask(task.network, task.rates, task.script, task.base_initials, zeta=1e-6,
                             t_end=task.t_end, tube_radius=task.tube_radius)
    cert = run_inheritance(strict)
    assert cert.verdict == FAIL and cert.results[0].checks["distance_below_zeta"] is False
