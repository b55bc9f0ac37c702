"""Equilibria and periodic orbits: location, refinement and spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..kinetics import KineticsError, MassActionSystem, ReducedBasis, jacobian_field, reduced_basis, vector_field
from .classify import (
    DEGENERATE_CLASS,
    EQUILIBRIUM,
    PERIODIC_ORBIT,
    ClassificationTolerances,
    LimitSetReport,
    classify,
    split_trivial_multiplier,
)
from .integrator import IntegrationError, dopri
from .trajectory import Trajectory, integrate


class EquilibriumError(RuntimeError):
    """Newton iteration for an equilibrium failed."""


class ShootingError(RuntimeError):
    """Shooting Newton for a periodic orbit failed."""


def _scale(x) -> float:
    return max(1.0, float(np.max(np.abs(x))))


# -- equilibria --------------------------------------------------------------

def find_equilibrium(
    sys: MassActionSystem,
    guess: Sequence[float],
    basis: ReducedBasis | None = None,
    tol: ClassificationTolerances | None = None,
    residual_tol: float = 1e-10,
    max_iter: int = 100,
) -> LimitSetReport:
    """Damped Newton for Gamma v(x) = 0 inside the stoichiometric class of ``guess``.

    The unknown is u with x = guess + B u, so the iteration never leaves the
    class.  Steps that would leave the positive orthant or fail to reduce the
    residual are halved.

    Raises:
        EquilibriumError: no convergence, or the iterate cannot stay positive.
    """
    tol = tol or ClassificationTolerances()
    basis = basis or reduced_basis(sys)
    b = basis.columns
    f, jac = vector_field(sys), jacobian_field(sys)
    x = np.array(guess, dtype=float)
    if np.any(x <= 0):
        raise EquilibriumError("initial guess must be positive")
    if basis.rank == 0:
        return _equilibrium_report(x, np.zeros(0), tol, 0.0, 0)
    fx = f(x)
    res = float(np.linalg.norm(fx))
    it = 0
    for it in range(1, max_iter + 1):
        if res < residual_tol * _scale(x):
            break
        jr = b.T @ jac(x) @ b
        g = b.T @ fx
        try:
            step = np.linalg.solve(jr, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jr, -g, rcond=None)[0]
        dx = b @ step
        lam = 1.0
        accepted = False
        while lam > 1e-10:
            trial = x + lam * dx
            if np.all(trial > 0):
                try:
                    ft = f(trial)
                except KineticsError:
                    ft = None
                if ft is not None and np.linalg.norm(ft) < (1 - 1e-4 * lam) * res:
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            # take the largest positive step anyway; Newton may need to climb
            lam = 1.0
            while lam > 1e-10 and not np.all(x + lam * dx > 0):
                lam *= 0.5
            if lam <= 1e-10:
                raise EquilibriumError(f"iterate cannot remain in the positive orthant (iteration {it})")
            trial = x + lam * dx
            ft = f(trial)
        x, fx = trial, ft
        res = float(np.linalg.norm(fx))
    else:
        if res >= residual_tol * _scale(x):
            raise EquilibriumError(f"no convergence in {max_iter} iterations (residual {res:.3e})")
    eig = np.linalg.eigvals(b.T @ jac(x) @ b)
    return _equilibrium_report(x, eig, tol, res, it)


def _equilibrium_report(x, eig, tol, res, iterations) -> LimitSetReport:
    eig = _symmetrize(eig)
    cls = classify(EQUILIBRIUM, eig, tol)
    return LimitSetReport(EQUILIBRIUM, x, eig, cls, tol, residual=res,
                          diagnostics={"newton_iterations": iterations})


def _symmetrize(values) -> np.ndarray:
    """Snap tiny imaginary parts of real eigenvalues to zero."""
    v = np.asarray(values, dtype=complex).copy()
    small = np.abs(v.imag) <= 1e-12 * (1 + np.abs(v))
    v[small] = v[small].real
    return v


# -- orbit detection ---------------------------------------------------------

@dataclass(frozen=True)
class OrbitDetection:
    """Outcome of the recurrence search on a trajectory."""

    found: bool
    anchor: np.ndarray | None = None
    period: float | None = None
    crossing_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reason: str = ""

    def to_dict(self) -> dict:
        if not self.found:
            return {"found": False, "reason": self.reason}
        return {"found": True, "anchor": [float(v) for v in self.anchor], "period": float(self.period),
                "crossing_times": [float(t) for t in self.crossing_times]}


def detect_periodic_orbit(
    traj: Trajectory,
    transient: float = 0.5,
    period_tol: float = 0.01,
    min_crossings: int = 3,
    damping_ratio: float = 0.95,
) -> OrbitDetection:
    """Find a recurrent orbit on a Poincare section.

    The section passes through the post-transient sample with the largest first
    coordinate (earliest on ties) with the flow direction as normal.  Only
    crossings in the flow direction and near the anchor are counted.  A
    recurrence whose successive return times agree to ``period_tol`` and whose
    cycle amplitudes are not shrinking is reported as an orbit.
    """
    if not 0 <= transient < 1:
        raise ValueError("transient must lie in [0, 1)")
    if traj.times.size < 4:
        return OrbitDetection(False, reason="trajectory too short")
    t0, t1 = traj.times[0], traj.times[-1]
    keep = traj.times >= t0 + transient * (t1 - t0)
    t, x, dx = traj.times[keep], traj.states[keep], traj.derivatives[keep]
    if t.size < 4:
        return OrbitDetection(False, reason="trajectory too short after transient cut")
    diameter = float(np.max(np.ptp(x, axis=0)))
    if diameter <= 1e-8 * _scale(x):
        return OrbitDetection(False, reason="no orbit detected: trajectory is constant")
    i_star = int(np.argmax(x[:, 0]))
    p = x[i_star]
    speed = np.linalg.norm(dx[i_star])
    if speed <= 1e-12 * _scale(x):
        return OrbitDetection(False, reason="no orbit detected: anchor is stationary")
    normal = dx[i_star] / speed
    g = (x - p) @ normal
    near = 0.25 * diameter
    crossings, points = [], []
    for i in range(t.size - 1):
        if g[i] < 0 <= g[i + 1]:
            s = -g[i] / (g[i + 1] - g[i])
            xc = x[i] + s * (x[i + 1] - x[i])
            if np.linalg.norm(xc - p) <= near:
                crossings.append(t[i] + s * (t[i + 1] - t[i]))
                points.append(xc)
    if len(crossings) < min_crossings:
        return OrbitDetection(False, crossing_times=np.array(crossings),
                              reason=f"no orbit detected: {len(crossings)} section crossings")
    ct = np.array(crossings)
    returns = np.diff(ct)[-4:]
    spread = float(np.max(np.abs(returns - returns[-1])) / returns[-1])
    if spread > period_tol:
        return OrbitDetection(False, crossing_times=ct,
                              reason=f"no orbit detected: return times disagree by {spread:.2%}")
    amplitudes = []
    for a, b in zip(ct[:-1], ct[1:]):
        seg = x[(t >= a) & (t <= b)]
        if len(seg):
            amplitudes.append(float(np.max(np.linalg.norm(seg - seg.mean(axis=0), axis=1))))
    if len(amplitudes) >= 2:
        amp = np.array(amplitudes)
        if np.all(np.diff(amp) < 0) and amp[-1] / amp[0] < damping_ratio:
            return OrbitDetection(False, crossing_times=ct,
                                  reason="no orbit detected: oscillation amplitude decays (damped spiral)")
    return OrbitDetection(True, np.array(points[-1]), float(returns[-1]), ct)


# -- shooting ----------------------------------------------------------------

def _variational_field(f, jac, n: int, p: int):
    def g(y):
        x = y[:n]
        phi = y[n:].reshape(n, p)
        out = np.empty_like(y)
        out[:n] = f(x)
        out[n:] = (jac(x) @ phi).ravel()
        return out

    return g


def _flow(sys, x, T, directions, rtol, atol):
    """Integrate the state and the tangent vectors ``directions`` over [0, T]."""
    n, p = directions.shape
    f, jac = vector_field(sys), jacobian_field(sys)
    y0 = np.concatenate([x, directions.ravel()])
    sol = dopri(_variational_field(f, jac, n, p), 0.0, y0, T, rtol=rtol, atol=atol)
    return sol.y[:n], sol.y[n:].reshape(n, p), sol


def refine_orbit(
    sys: MassActionSystem,
    rough: OrbitDetection,
    basis: ReducedBasis | None = None,
    tol: ClassificationTolerances | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    max_iter: int = 30,
    samples: int = 1000,
    segments: int | None = None,
    full_monodromy: bool = False,
) -> LimitSetReport:
    """Newton shooting on (anchor, period) with a flow-normal phase condition.

    Single shooting is tried first; a step size failure falls back to
    two-segment multiple shooting.  The monodromy is the product of the
    variational solutions over the segments; ``full_monodromy`` additionally
    computes the n x n monodromy on the whole space.

    Raises:
        ShootingError: divergence, or the residual stays above 1e-9 * scale.
    """
    if not rough.found:
        raise ShootingError(f"cannot refine: {rough.reason}")
    tol = tol or ClassificationTolerances()
    basis = basis or reduced_basis(sys)
    if segments is None:
        try:
            return _shoot(sys, rough, basis, tol, rtol, atol, max_iter, samples, 1, full_monodromy)
        except IntegrationError:
            return _shoot(sys, rough, basis, tol, rtol, atol, max_iter, samples, 2, full_monodromy)
    return _shoot(sys, rough, basis, tol, rtol, atol, max_iter, samples, segments, full_monodromy)


def _shoot(sys, rough, basis, tol, rtol, atol, max_iter, samples, nseg, full_monodromy) -> LimitSetReport:
    b = basis.columns
    n, rank = b.shape
    f = vector_field(sys)
    T = float(rough.period)
    anchors = [np.array(rough.anchor, dtype=float)]
    for _ in range(nseg - 1):
        anchors.append(dopri(f, 0.0, anchors[-1], T / nseg, rtol=rtol, atol=atol).y)
    normal = f(anchors[0])
    normal /= np.linalg.norm(normal)
    nb = normal @ b
    u = np.zeros((nseg, rank))
    nunk = nseg * rank + 1

    def evaluate(u, T):
        xs = [anchors[i] + b @ u[i] for i in range(nseg)]
        ends, phis, sols = [], [], []
        for x in xs:
            xe, ph, sol = _flow(sys, x, T / nseg, b, rtol, atol)
            ends.append(xe)
            phis.append(ph)
            sols.append(sol)
        gaps = [ends[i] - xs[(i + 1) % nseg] for i in range(nseg)]
        return xs, ends, phis, sols, gaps

    def norm_gaps(gaps):
        return float(np.sqrt(sum(float(g @ g) for g in gaps)))

    xs, ends, phis, sols, gaps = evaluate(u, T)
    res = norm_gaps(gaps)
    history = [res]
    target = 1e-11 * _scale(anchors[0])
    it = 0
    for it in range(1, max_iter + 1):
        if res < target:
            break
        jm = np.zeros((nunk, nunk))
        rhs = np.zeros(nunk)
        for i in range(nseg):
            rows = slice(i * rank, (i + 1) * rank)
            j = (i + 1) % nseg
            jm[rows, i * rank:(i + 1) * rank] += b.T @ phis[i]
            jm[rows, j * rank:(j + 1) * rank] -= np.eye(rank)
            jm[rows, -1] = b.T @ f(ends[i]) / nseg
            rhs[rows] = -(b.T @ gaps[i])
        jm[-1, :rank] = nb
        rhs[-1] = -(nb @ u[0])
        try:
            step = np.linalg.solve(jm, rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jm, rhs, rcond=None)[0]
        du, dT = step[:-1].reshape(nseg, rank), step[-1]
        lam, improved = 1.0, False
        while lam >= 1 / 64:
            cand_u, cand_T = u + lam * du, T + lam * dT
            if cand_T > 0 and all(np.all(anchors[i] + b @ cand_u[i] > 0) for i in range(nseg)):
                try:
                    trial = evaluate(cand_u, cand_T)
                except KineticsError:
                    trial = None
                if trial is not None and norm_gaps(trial[4]) < res:
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
        u, T = cand_u, cand_T
        xs, ends, phis, sols, gaps = trial
        res = norm_gaps(gaps)
        history.append(res)
    scale = _scale(xs[0])
    if not np.isfinite(res) or res >= 1e-9 * scale:
        raise ShootingError(f"shooting did not converge: residual {res:.3e} (scale {scale:.3g})")

    mono = np.eye(rank)
    for ph in phis:
        mono = (b.T @ ph) @ mono
    mult = np.linalg.eigvals(mono)
    trivial, rest, problem = split_trivial_multiplier(mult, tol.trivial_multiplier_tol)
    rest = _symmetrize(rest)
    cls = DEGENERATE_CLASS if problem else classify(PERIODIC_ORBIT, rest, tol)
    x0 = xs[0]
    grid = np.linspace(0.0, T, samples)
    orbit = dopri(f, 0.0, x0, T, rtol=rtol, atol=atol, t_eval=grid).samples
    diag = {
        "newton_iterations": it,
        "residual_history": history,
        "segments": nseg,
        "steps_per_period": int(sum(s.n_accepted for s in sols)),
    }
    if problem:
        diag["trivial_multiplier_problem"] = problem
    if full_monodromy:
        full = np.eye(n)
        for x in xs:
            full = _flow(sys, x, T / nseg, np.eye(n), rtol, atol)[1] @ full
        diag["full_multipliers"] = np.linalg.eigvals(full)
    return LimitSetReport(
        PERIODIC_ORBIT, x0, rest, cls, tol, period=T, samples=orbit, trivial_multiplier=trivial,
        residual=res, monodromy=mono, diagnostics=diag,
        steps=sols[0].step_times if nseg == 1 else None,
    )


def finite_difference_monodromy(sys: MassActionSystem, report: LimitSetReport, basis: ReducedBasis | None = None,
                                h: float = 1e-7) -> np.ndarray:
    """Central differences of the period map along each basis vector.

    When the report carries the accepted steps of its shooting run, they are
    replayed so the difference quotient differentiates the same discrete map
    as the variational equation.
    """
    basis = basis or reduced_basis(sys)
    b = basis.columns
    f = vector_field(sys)
    x0, T = report.point, report.period
    steps = report.steps
    cols = []
    for k in range(b.shape[1]):
        ends = []
        for sign in (1.0, -1.0):
            start = x0 + sign * h * b[:, k]
            if steps is not None:
                ends.append(dopri(f, 0.0, start, T, steps=steps).y)
            else:
                ends.append(dopri(f, 0.0, start, T, rtol=1e-12, atol=1e-14).y)
        cols.append(b.T @ (ends[0] - ends[1]) / (2 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def find_orbit(
    sys: MassActionSystem,
    x0: Sequence[float],
    t_end: float,
    basis: ReducedBasis | None = None,
    tol: ClassificationTolerances | None = None,
    transient: float = 0.5,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> tuple[Trajectory, OrbitDetection, LimitSetReport | None]:
    """Integrate, detect and refine; the report is None when no orbit is found."""
    traj = integrate(sys, x0, t_end, rtol=rtol, atol=atol)
    rough = detect_periodic_orbit(traj, transient=transient)
    if not rough.found:
        return traj, rough, None
    return traj, rough, refine_orbit(sys, rough, basis, tol)


# -- distances ---------------------------------------------------------------

def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two finite point samples."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("Hausdorff distance needs two nonempty samples")
    if a.shape[1] != b.shape[1]:
        raise ValueError("samples live in different dimensions")
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))
