"""Simulation of mass action systems and trajectory export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..kinetics import MassActionSystem, vector_field
from ..network import conservation_basis
from .integrator import IntegrationError, dopri


@dataclass(frozen=True)
class Trajectory:
    """Dense-output samples of one integration run.

    ``derivatives`` holds the vector field at each sample, which orbit detection
    uses for section normals.  ``drift`` is the largest deviation of any
    conservation law from its initial value over the samples.
    """

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    species: tuple[str, ...]
    n_accepted: int = 0
    n_rejected: int = 0
    drift: float = 0.0
    complete: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape[0] != self.times.size:
            raise ValueError("times and states disagree in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def drift_bound(self, factor: float = 1e-8) -> float:
        """The admissible drift factor * elapsed * scale."""
        elapsed = max(self.times[-1] - self.times[0], 1.0)
        scale = max(1.0, float(np.max(np.abs(self.states))))
        return factor * elapsed * scale

    def after(self, t: float) -> "Trajectory":
        keep = self.times >= t
        return Trajectory(self.times[keep], self.states[keep], self.derivatives[keep], self.species,
                          self.n_accepted, self.n_rejected, self.drift, self.complete, dict(self.meta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *self.species])
        for t, x in zip(self.times, self.states):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in x)])
        return buf.getvalue()


def conservation_matrix(sys: MassActionSystem) -> np.ndarray:
    basis = conservation_basis(sys.net)
    if not basis:
        return np.zeros((0, sys.n))
    return np.array([[float(v) for v in w] for w in basis])


def _sample_grid(t_end: float, samples: int | None, t_eval) -> np.ndarray:
    if t_eval is not None:
        return np.asarray(t_eval, dtype=float)
    count = samples if samples is not None else max(2001, int(20 * t_end) + 1)
    return np.linspace(0.0, t_end, count)


def _build(sys, times, states, sol_stats, complete, x0, meta) -> Trajectory:
    f = vector_field(sys)
    derivs = np.array([f(x) for x in states]) if len(states) else np.zeros((0, sys.n))
    w = conservation_matrix(sys)
    drift = float(np.max(np.abs((states - x0) @ w.T))) if w.size and len(states) else 0.0
    return Trajectory(np.asarray(times), np.asarray(states), derivs, sys.net.species,
                      sol_stats[0], sol_stats[1], drift, complete, meta)


def integrate(
    sys: MassActionSystem,
    x0: Sequence[float],
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    samples: int | None = None,
    t_eval: Sequence[float] | None = None,
    max_steps: int = 2_000_000,
) -> Trajectory:
    """Integrate x' = Gamma v(x) from x0 over [0, t_end].

    Samples are taken from the dense output on a uniform grid (``samples``
    points, default about 20 per time unit) unless ``t_eval`` is given.

    Raises:
        ValueError: negative or non-finite initial state, bad tolerances.
        IntegrationError: step size underflow or too many steps.  The
            exception carries a ``trajectory`` attribute with the samples
            produced before the failure.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ValueError(f"initial state must have length {sys.n}")
    if not np.all(np.isfinite(x0)) or np.any(x0 < 0):
        raise ValueError("initial state must be finite and nonnegative")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    grid = _sample_grid(t_end, samples, t_eval)
    meta = {"rtol": rtol, "atol": atol, "t_end": float(t_end)}
    try:
        sol = dopri(vector_field(sys), 0.0, x0, t_end, rtol=rtol, atol=atol, t_eval=grid, max_steps=max_steps)
    except IntegrationError as exc:
        if exc.samples is not None and len(exc.samples):
            exc.trajectory = _build(sys, exc.sample_times, exc.samples, (0, 0), False, x0, meta)
        else:
            exc.trajectory = None
        raise
    meta["n_evals"] = sol.n_evals
    return _build(sys, sol.sample_times, sol.samples, (sol.n_accepted, sol.n_rejected), True, x0, meta)
