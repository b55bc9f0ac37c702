"""Dormand-Prince 5(4) integration with dense output and step replay."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..kinetics import KineticsError

C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension (Shampine), y(t + th) = y + h K^T P [t, t^2, t^3, t^4]
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    """Step size underflow or too many steps."""

    def __init__(self, message: str, t: float, y: np.ndarray | None = None,
                 sample_times: np.ndarray | None = None, samples: np.ndarray | None = None):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t
        self.y = y
        self.sample_times = sample_times
        self.samples = samples


@dataclass
class Solution:
    t: float
    y: np.ndarray
    step_times: np.ndarray  # accepted step boundaries, starting at t0
    sample_times: np.ndarray
    samples: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    n_evals: int = 0
    extras: dict = field(default_factory=dict)


def _initial_step(f, t0, y0, f0, rtol, atol, direction=1.0) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(y0.size)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    try:
        f1 = f(y0 + h0 * direction * f0)
    except KineticsError:
        return h0 * 1e-3
    d2 = np.linalg.norm((f1 - f0) / scale) / np.sqrt(y0.size) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri(
    f: Callable[[np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    t_eval: Sequence[float] | None = None,
    steps: Sequence[float] | None = None,
    max_steps: int = 2_000_000,
    first_step: float | None = None,
    error_slice: slice | None = None,
) -> Solution:
    """Integrate the autonomous system y' = f(y) from t0 to t_end.

    ``steps`` replays a given sequence of accepted step boundaries without error
    control, so that perturbed runs see exactly the same discrete map.
    ``error_slice`` restricts the error norm to part of the state.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t_end = float(t_end)
    if t_end < t:
        raise ValueError("t_end must not precede t0")
    t_eval = np.asarray([] if t_eval is None else t_eval, dtype=float)
    if t_eval.size and (np.any(np.diff(t_eval) < 0) or t_eval[0] < t or t_eval[-1] > t_end + 1e-12 * max(1.0, abs(t_end))):
        raise ValueError("t_eval must be sorted and inside [t0, t_end]")
    samples = np.empty((t_eval.size, y.size))
    next_sample = 0
    while next_sample < t_eval.size and t_eval[next_sample] <= t:
        samples[next_sample] = y
        next_sample += 1

    f0 = f(y)
    n_evals = 1
    step_times = [t]
    n_acc = n_rej = 0
    sel = error_slice if error_slice is not None else slice(None)
    K = np.empty((7, y.size))

    if steps is not None:
        replay = np.asarray(steps, dtype=float)
        if replay[0] != t or abs(replay[-1] - t_end) > 1e-12 * max(1.0, abs(t_end)):
            raise ValueError("replayed steps must span [t0, t_end]")
        for t_next in replay[1:]:
            h = t_next - t
            y_new, f_new = _stage(f, y, f0, h, K)
            n_evals += 6
            next_sample = _fill(samples, t_eval, next_sample, t, h, y, K, t_next)
            t, y, f0 = t_next, y_new, f_new
            step_times.append(t)
            n_acc += 1
        return Solution(t, y, np.array(step_times), t_eval, samples, n_acc, 0, n_evals)

    if t_end == t:
        return Solution(t, y, np.array(step_times), t_eval, samples, 0, 0, n_evals)

    h = first_step if first_step is not None else _initial_step(f, t, y, f0, rtol, atol)
    n_evals += 1
    h = min(h, t_end - t)
    while t < t_end:
        if n_acc + n_rej >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t, y,
                                   t_eval[:next_sample], samples[:next_sample])
        min_step = 10 * np.spacing(max(abs(t), 1.0))
        if h < min_step:
            raise IntegrationError("step size underflow", t, y,
                                   t_eval[:next_sample], samples[:next_sample])
        last = t + h >= t_end or t_end - (t + h) < min_step
        if last:
            h = t_end - t
        try:
            y_new, f_new = _stage(f, y, f0, h, K)
            n_evals += 6
        except KineticsError:
            n_rej += 1
            h *= 0.25
            continue
        scale = atol + np.maximum(np.abs(y[sel]), np.abs(y_new[sel])) * rtol
        err_vec = h * (K[:, sel].T @ E) / scale
        err = np.sqrt(np.mean(err_vec * err_vec)) if err_vec.size else 0.0
        if not np.isfinite(err):
            n_rej += 1
            h *= 0.25
            continue
        if err <= 1.0:
            t_next = t_end if last else t + h
            next_sample = _fill(samples, t_eval, next_sample, t, h, y, K, t_next)
            t, y, f0 = t_next, y_new, f_new
            step_times.append(t)
            n_acc += 1
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
            h *= factor
            if t < t_end:
                h = min(h, t_end - t)
        else:
            n_rej += 1
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
    return Solution(t, y, np.array(step_times), t_eval, samples, n_acc, n_rej, n_evals)


def _stage(f, y, f0, h, K):
    K[0] = f0
    for s in range(1, 6):
        K[s] = f(y + h * (A[s] @ K[:s]))
    y_new = y + h * (B @ K[:6])
    f_new = f(y_new)
    K[6] = f_new
    return y_new, f_new


def _fill(samples, t_eval, idx, t, h, y, K, t_next):
    while idx < t_eval.size and t_eval[idx] <= t_next:
        theta = (t_eval[idx] - t) / h if h else 1.0
        powers = theta ** np.arange(1, 5)
        samples[idx] = y + h * (K.T @ (P @ powers))
        idx += 1
    return idx
