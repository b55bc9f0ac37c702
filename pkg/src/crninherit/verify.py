"""Numerical certification that limit sets survive a split enlargement.

The pipeline follows the slow-fast construction: find the base limit sets,
enlarge, schedule the second-leg rates as eps^(-sigma), lift each base limit
set onto the zeroth-order slow manifold, refine it in the enlarged network
and compare spectra and positions.  A certificate only states what was
verified at the listed eps values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import corpus
from .dynamics import (
    EQUILIBRIUM,
    ClassificationTolerances,
    EquilibriumError,
    IntegrationError,
    LimitSetReport,
    OrbitDetection,
    ShootingError,
    conservation_matrix,
    detect_periodic_orbit,
    find_equilibrium,
    hausdorff_distance,
    integrate,
    refine_orbit,
)
from .enlarge import E6, EnlargementRecord, chain_rates, compose_enlargements, load_script
from .kinetics import KineticsError, MassActionSystem, reduced_basis
from .network import Network
from .slowfast import (
    DomainError,
    EpsilonBound,
    OrbitTube,
    SlowFastModel,
    decompose,
    enlarged_system,
    epsilon_bound,
    lifted_initial_condition,
    to_slow_fast,
)

PASS, FAIL = "PASS", "FAIL"


class VerifyError(RuntimeError):
    """The task cannot be run (no base limit set, no split step, bad input)."""


@dataclass(frozen=True)
class InheritanceTask:
    network: Network
    rates: Mapping[str, float]
    script: Sequence[Mapping[str, Any]]
    base_initials: Sequence[Sequence[float]]
    eps_schedule: Sequence[float] = (0.1, 0.05, 0.02)
    tolerances: ClassificationTolerances = field(default_factory=ClassificationTolerances)
    tube_radius: float = 0.15
    zeta: float = 0.5
    t_end: float = 200.0
    transient: float = 0.5
    eps0_cap: float = 1.0
    extra_rates: Mapping[str, float] = field(default_factory=dict)
    name: str = "task"

    def __post_init__(self):
        eps = [float(e) for e in self.eps_schedule]
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps schedule must be positive and strictly decreasing")
        if not self.tube_radius > 0:
            raise ValueError("tube radius must be positive")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        if not self.base_initials:
            raise ValueError("at least one base initial condition is required")
        object.__setattr__(self, "eps_schedule", tuple(eps))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: str | Path | None = None) -> "InheritanceTask":
        """Build a task from its JSON form; file references are resolved
        relative to ``base_dir`` and then against the bundled fixtures."""
        net, specs = corpus.load_network(data["network"], base_dir)
        rates = {lab: spec.resolve() for lab, spec in specs.items() if spec.eps_power is None}
        rates.update({k: float(v) for k, v in data.get("rates", {}).items()})
        script = data.get("script", [])
        if isinstance(script, str):
            script = load_script(corpus.script_text(script, base_dir))
        tol = ClassificationTolerances(**data.get("tolerances", {}))
        keys = ("eps_schedule", "tube_radius", "zeta", "t_end", "transient", "eps0_cap")
        extra = {k: data[k] for k in keys if k in data}
        return cls(net, rates, script, [list(map(float, x)) for x in data["initials"]], tolerances=tol,
                   extra_rates={k: float(v) for k, v in data.get("extra_rates", {}).items()},
                   name=data.get("name", "task"), **extra)


def load_task(path: str | Path) -> InheritanceTask:
    path = Path(path)
    try:
        path = corpus.resolve(path, None, ".json")
    except FileNotFoundError:
        path = corpus.resolve(Path("tasks") / path, None, ".json")
    return InheritanceTask.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


# -- comparison --------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationComparison:
    kind: str
    base_flags: dict
    lifted_flags: dict
    matched: list
    extras: list
    count_ok: bool
    extras_ok: bool
    passed: bool
    notes: list

    def to_dict(self) -> dict:
        pair = lambda v: [float(np.real(v)), float(np.imag(v))]  # noqa: E731
        return {
            "kind": self.kind, "base": self.base_flags, "lifted": self.lifted_flags,
            "matched": [[pair(a), pair(b)] for a, b in self.matched], "extras": [pair(v) for v in self.extras],
            "count_ok": self.count_ok, "extras_ok": self.extras_ok, "passed": self.passed, "notes": self.notes,
        }


def compare_classifications(base: LimitSetReport, lifted: LimitSetReport, m: int | None = None) -> ClassificationComparison:
    """Check that the lifted limit set keeps every property of the base one.

    Base values are matched to lifted values by minimal total distance; the
    unmatched lifted values are the extra (fast) ones and must lie in the open
    unit disc (orbits) or the open left half plane (equilibria).  When the
    base is hyperbolic, the stability flags must agree as well.

    Raises:
        ValueError: the two reports are of different kinds.
    """
    if base.kind != lifted.kind:
        raise ValueError(f"cannot compare a {base.kind} with a {lifted.kind}")
    bf, lf = base.classification.flags(), lifted.classification.flags()
    notes = []
    preserved = all(lf[k] or not v for k, v in bf.items())
    if not preserved:
        notes.append("a property of the base limit set is lost")
    stable_key = "linearly stable"
    stability_ok = not bf["hyperbolic"] or bf[stable_key] == lf[stable_key]
    if not stability_ok:
        notes.append("stability differs although the base limit set is hyperbolic")
    bv = np.asarray(base.values, dtype=complex)
    lv = np.asarray(lifted.values, dtype=complex)
    count_ok = True
    if m is not None and lv.size - bv.size != m:
        count_ok = False
        notes.append(f"expected {m} extra values, found {lv.size - bv.size}")
    matched, extras = [], list(lv)
    if bv.size and lv.size >= bv.size:
        cost = np.abs(bv[:, None] - lv[None, :])
        r, c = linear_sum_assignment(cost)
        matched = [(bv[i], lv[j]) for i, j in zip(r, c)]
        extras = [lv[j] for j in range(lv.size) if j not in set(c)]
    t = base.tolerances
    if base.kind == EQUILIBRIUM:
        extras_ok = all(np.real(v) < -t.zero_eig_tol for v in extras)
    else:
        extras_ok = all(abs(v) < 1 - t.unit_circle_tol for v in extras)
    if not extras_ok:
        notes.append("an extra value is not in the stable region")
    else:
        notes.append("extras fast" if extras else "no extras")
    passed = preserved and stability_ok and count_ok and extras_ok
    return ClassificationComparison(base.kind, bf, lf, matched, extras, count_ok, extras_ok, passed, notes)


# -- certificate -------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonEntry:
    eps: float
    found: bool
    report: LimitSetReport | None = None
    distance: float | None = None
    min_coordinate: float | None = None
    conservation_error: float | None = None
    comparison: ClassificationComparison | None = None
    within_bound: bool | None = None
    reason: str = ""

    @property
    def positive(self) -> bool:
        return self.min_coordinate is not None and self.min_coordinate > 0

    def to_dict(self) -> dict:
        out = {"eps": self.eps, "found": self.found, "reason": self.reason}
        if self.found:
            out.update(distance=self.distance, min_coordinate=self.min_coordinate, positive=self.positive,
                       conservation_error=self.conservation_error, within_eps1=self.within_bound,
                       report=self.report.to_dict(), comparison=self.comparison.to_dict())
        return out


@dataclass(frozen=True)
class LimitSetResult:
    index: int
    base: LimitSetReport
    entries: tuple[EpsilonEntry, ...]
    bound: EpsilonBound | None
    checks: dict
    verdict: str

    def to_dict(self) -> dict:
        return {"index": self.index, "base": self.base.to_dict(), "eps_bound": self.bound.to_dict() if self.bound else None,
                "entries": [e.to_dict() for e in self.entries], "checks": self.checks, "verdict": self.verdict}


@dataclass(frozen=True)
class InheritanceCertificate:
    task: str
    verdict: str
    results: tuple[LimitSetResult, ...]
    model: dict | None
    checks: dict
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"task": self.task, "verdict": self.verdict, "checks": self.checks, "notes": list(self.notes),
                "slow_fast_model": self.model, "limit_sets": [r.to_dict() for r in self.results],
                "semantics": "verified at the listed eps values only"}

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def summary_table(self) -> str:
        """Tab-separated summary, one row per (limit set, eps)."""
        rows = ["set\tkind\teps\tfound\tdistance\tclass\tpositive\tstatus"]
        for r in self.results:
            rows.append(f"{r.index}\t{r.base.kind}\tbase\tyes\t0\t{r.base.label}\tyes\t{r.verdict}")
            for e in r.entries:
                if e.found:
                    status = PASS if e.comparison.passed and e.positive else FAIL
                    rows.append(f"{r.index}\t{e.report.kind}\t{e.eps:g}\tyes\t{e.distance:.6g}\t{e.report.label}\t"
                                f"{'yes' if e.positive else 'no'}\t{status}")
                else:
                    rows.append(f"{r.index}\t{r.base.kind}\t{e.eps:g}\tno\t-\t-\t-\t{FAIL}")
        rows.append(f"verdict\t{self.verdict}")
        return "\n".join(rows) + "\n"


# -- pipeline ----------------------------------------------------------------

def base_limit_set(sys: MassActionSystem, x0, task: InheritanceTask) -> LimitSetReport:
    """Integrate from x0, then refine an orbit or an equilibrium.

    Raises:
        VerifyError: nothing could be found or refined.
    """
    basis = reduced_basis(sys)
    try:
        traj = integrate(sys, x0, task.t_end)
        rough = detect_periodic_orbit(traj, transient=task.transient)
        if rough.found:
            return refine_orbit(sys, rough, basis, task.tolerances)
        return find_equilibrium(sys, traj.states[-1], basis, task.tolerances)
    except (IntegrationError, ShootingError, EquilibriumError, KineticsError, ValueError) as exc:
        raise VerifyError(f"base limit set from {list(x0)} not found: {exc}") from exc


def _lift(sfm, sys_base, enl, basis, z0, eps, prev_period, tol) -> LimitSetReport:
    x0 = lifted_initial_condition(sfm, sys_base, z0, eps)
    if prev_period is None:
        return find_equilibrium(enl, x0, basis, tol)
    traj = integrate(enl, x0, 3 * prev_period, samples=301)
    rough = OrbitDetection(True, traj.states[-1], prev_period)
    return refine_orbit(enl, rough, basis, tol)


def _z_points(sfm: SlowFastModel, report: LimitSetReport, eps: float) -> np.ndarray:
    return np.array([to_slow_fast(sfm, p, eps)[0] for p in report.point_set()])


def _sweep(task, sfm, sys_base, base, bound) -> list[EpsilonEntry]:
    entries = []
    z0 = np.asarray(base.point, dtype=float)
    period = base.period if base.is_orbit else None
    base_pts = base.point_set()
    offset_w = np.array([float(v) for v in sfm.conserved_weights()])
    for eps in task.eps_schedule:
        try:
            enl = enlarged_system(sfm, sys_base, eps)
            basis = reduced_basis(enl)
            w = conservation_matrix(enl)
            lifted = _lift(sfm, sys_base, enl, basis, z0, eps, period, task.tolerances)
        except (DomainError, IntegrationError, ShootingError, EquilibriumError, KineticsError) as exc:
            entries.append(EpsilonEntry(eps, False, reason=str(exc)))
            continue
        if lifted.kind != base.kind:
            entries.append(EpsilonEntry(eps, False, reason="lifted limit set has a different kind"))
            continue
        pts = lifted.point_set()
        try:
            zpts = _z_points(sfm, lifted, eps)
        except DomainError as exc:
            entries.append(EpsilonEntry(eps, False, lifted, reason=str(exc)))
            continue
        dist = hausdorff_distance(zpts, base_pts)
        hyper = float(np.max(np.abs(pts @ offset_w - sfm.offset.sum())))
        drift = float(np.max(np.abs((pts - pts[0]) @ w.T))) if w.size else 0.0
        comparison = compare_classifications(base, lifted, sfm.m)
        within = bound.admits(eps) if bound is not None else None
        entries.append(EpsilonEntry(eps, True, lifted, dist, float(pts.min()), max(hyper, drift), comparison, within))
        z0 = to_slow_fast(sfm, lifted.point, eps)[0]
        if lifted.is_orbit:
            period = lifted.period
    return entries


def _judge(task, base, entries) -> tuple[dict, str]:
    checks = {"base_nondegenerate": base.classification.nondegenerate}
    if not base.classification.nondegenerate:
        checks["note"] = "degenerate base limit sets are not required to persist"
        return checks, PASS
    last = entries[-1]
    found = [e for e in entries if e.found]
    checks["found_at_smallest_eps"] = last.found
    if last.found:
        checks["positive"] = last.positive
        checks["nondegenerate"] = last.report.classification.nondegenerate
        checks["properties_preserved"] = last.comparison.passed
        checks["distance_below_zeta"] = last.distance < task.zeta
        checks["conservation"] = last.conservation_error < 1e-8 * max(1.0, float(np.max(last.report.point_set())))
    if len(found) >= 2:
        dists = [e.distance for e in found]
        checks["weakly_monotone"] = found[-1].distance <= found[0].distance
        checks["strictly_decreasing_steps"] = all(b < a for a, b in zip(dists, dists[1:]))
    verdict_keys = [k for k in checks if k not in ("strictly_decreasing_steps", "note")]
    return checks, PASS if all(checks[k] for k in verdict_keys) else FAIL


def _trivial_certificate(task, sys) -> InheritanceCertificate:
    results = []
    for i, x0 in enumerate(task.base_initials):
        rep = base_limit_set(sys, x0, task)
        cmp_ = compare_classifications(rep, rep, 0)
        entry = EpsilonEntry(0.0, True, rep, 0.0, float(rep.point_set().min()), 0.0, cmp_, None, "empty script")
        results.append(LimitSetResult(i, rep, (entry,), None, {"identity": True}, PASS))
    return InheritanceCertificate(task.name, PASS, tuple(results), None, {"empty_script": True},
                                  ("an empty sequence of enlargements leaves every limit set in place",))


def run_inheritance(task: InheritanceTask) -> InheritanceCertificate:
    """Run the base, enlarge, sweep eps and assemble the certificate.

    Only the last split step is certified numerically; steps before it are
    used to build its base network (their new reactions need rates in
    ``extra_rates``) and steps after it are validated structurally only.

    Raises:
        VerifyError: invalid script, no split step, or a base limit set
            that cannot be found.
    """
    records = compose_enlargements(task.network, task.script)
    if not records:
        base_sys = MassActionSystem.from_mapping(task.network, {**task.rates, **task.extra_rates})
        return _trivial_certificate(task, base_sys)
    splits = [i for i, r in enumerate(records) if r.kind == E6]
    if not splits:
        raise VerifyError("the script has no split (E6) step to schedule eps on")
    p = splits[-1]
    rec: EnlargementRecord = records[p]
    rates = chain_rates(records[:p], task.rates)
    rates.update(task.extra_rates)
    try:
        sys_base = MassActionSystem.from_mapping(rec.base, rates)
    except KeyError as exc:
        raise VerifyError(f"rates needed for the split's base network: {exc}") from None
    sfm = decompose(rec)
    notes = []
    if p < len(records) - 1:
        notes.append(f"{len(records) - 1 - p} trailing step(s) validated structurally only")

    bases: list[LimitSetReport] = []
    for x0 in task.base_initials:
        rep = base_limit_set(sys_base, x0, task)
        if any(b.kind == rep.kind and hausdorff_distance(b.point_set(), rep.point_set()) < task.tube_radius for b in bases):
            notes.append(f"initial condition {list(x0)} reaches an already found limit set")
            continue
        bases.append(rep)

    tubes = [OrbitTube(b.point_set(), task.tube_radius) for b in bases]
    results = []
    for i, (base, tube) in enumerate(zip(bases, tubes)):
        try:
            bound = epsilon_bound(sfm, sys_base, tube, task.eps0_cap)
        except DomainError as exc:
            bound = None
            notes.append(f"limit set {i}: no eps bound ({exc})")
        entries = _sweep(task, sfm, sys_base, base, bound)
        checks, verdict = _judge(task, base, entries)
        results.append(LimitSetResult(i, base, tuple(entries), bound, checks, verdict))

    overall = {"tubes_disjoint": all(tubes[a].disjoint_from(tubes[b])
                                     for a in range(len(tubes)) for b in range(a + 1, len(tubes)))}
    lifted_last = [r.entries[-1].report for r in results if r.entries and r.entries[-1].found]
    overall["lifted_distinct"] = all(
        hausdorff_distance(a.point_set(), b.point_set()) > 0
        for i, a in enumerate(lifted_last) for b in lifted_last[i + 1:]
    )
    verdict = PASS if all(r.verdict == PASS for r in results) and all(overall.values()) else FAIL
    return InheritanceCertificate(task.name, verdict, tuple(results), sfm.to_dict(), overall, tuple(notes))


__all__ = [
    "ClassificationComparison", "EpsilonEntry", "FAIL", "InheritanceCertificate", "InheritanceTask", "LimitSetResult",
    "PASS", "VerifyError", "base_limit_set", "compare_classifications", "load_task", "run_inheritance",
]
