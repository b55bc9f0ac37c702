"""Classification of limit sets relative to their stoichiometric class."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

EQUILIBRIUM = "equilibrium"
PERIODIC_ORBIT = "periodic orbit"

DEGENERATE = "degenerate"
NONDEGENERATE = "nondegenerate"
HYPERBOLIC = "hyperbolic"
LINEARLY_STABLE = "linearly stable"


@dataclass(frozen=True)
class ClassificationTolerances:
    zero_eig_tol: float = 1e-6
    unit_circle_tol: float = 1e-4
    trivial_multiplier_tol: float = 1e-6

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not 0 < value < 0.1:
                raise ValueError(f"{name} must lie in (0, 0.1), got {value}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Classification:
    nondegenerate: bool
    hyperbolic: bool
    linearly_stable: bool

    @property
    def label(self) -> str:
        """The strongest property that holds."""
        if self.linearly_stable:
            return LINEARLY_STABLE
        if self.hyperbolic:
            return HYPERBOLIC
        if self.nondegenerate:
            return NONDEGENERATE
        return DEGENERATE

    def flags(self) -> dict[str, bool]:
        return {NONDEGENERATE: self.nondegenerate, HYPERBOLIC: self.hyperbolic, LINEARLY_STABLE: self.linearly_stable}


DEGENERATE_CLASS = Classification(False, False, False)


def _check_conjugate_closed(values: np.ndarray) -> None:
    remaining = list(values)
    while remaining:
        v = remaining.pop()
        if abs(v.imag) <= 1e-8 * (1 + abs(v)):
            continue
        j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - np.conj(v)), default=None)
        if j is None or abs(remaining[j] - np.conj(v)) > 1e-8 * (1 + abs(v)):
            raise ValueError(f"spectrum is not closed under conjugation (unpaired {v})")
        remaining.pop(j)


def classify(kind: str, values: Sequence[complex], tol: ClassificationTolerances | None = None) -> Classification:
    """Classify from reduced eigenvalues (equilibria) or nontrivial multipliers (orbits).

    Equilibria: nondegenerate iff all |l| > tol, hyperbolic iff all |Re l| > tol,
    stable iff all Re l < -tol.  Orbits: nondegenerate iff all |mu - 1| > tol,
    hyperbolic iff all ||mu| - 1| > tol, stable iff all |mu| < 1 - tol.
    """
    tol = tol or ClassificationTolerances()
    vals = np.asarray(values, dtype=complex).reshape(-1)
    _check_conjugate_closed(vals)
    if kind == EQUILIBRIUM:
        t = tol.zero_eig_tol
        return Classification(
            bool(np.all(np.abs(vals) > t)),
            bool(np.all(np.abs(vals.real) > t)),
            bool(np.all(vals.real < -t)),
        )
    if kind == PERIODIC_ORBIT:
        t = tol.unit_circle_tol
        mod = np.abs(vals)
        return Classification(
            bool(np.all(np.abs(vals - 1) > t)),
            bool(np.all(np.abs(mod - 1) > t)),
            bool(np.all(mod < 1 - t)),
        )
    raise ValueError(f"unknown limit set kind {kind!r}")


def split_trivial_multiplier(multipliers: Sequence[complex], tol: float) -> tuple[complex | None, np.ndarray, str | None]:
    """Remove the multiplier nearest 1.

    Returns (trivial, rest, problem) where ``problem`` is a diagnostic when no
    multiplier lies within ``tol`` of 1 or when two do.
    """
    mu = np.asarray(multipliers, dtype=complex).reshape(-1)
    if mu.size == 0:
        return None, mu, "no multipliers"
    dist = np.abs(mu - 1)
    i = int(np.argmin(dist))
    rest = np.delete(mu, i)
    if dist[i] > tol:
        return mu[i], rest, f"no multiplier within {tol:g} of 1 (nearest {mu[i]:.6g})"
    if rest.size and np.min(np.abs(rest - 1)) <= tol:
        return mu[i], rest, "two multipliers within tolerance of 1"
    return mu[i], rest, None


def _complex_pairs(values) -> list[list[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


@dataclass(frozen=True)
class LimitSetReport:
    """An equilibrium or a periodic orbit together with its spectral data.

    ``values`` are the reduced eigenvalues (equilibrium) or the nontrivial
    Floquet multipliers (orbit).  ``samples`` is one period of the orbit, or
    the single equilibrium point.
    """

    kind: str
    point: np.ndarray
    values: np.ndarray
    classification: Classification
    tolerances: ClassificationTolerances
    period: float | None = None
    samples: np.ndarray | None = None
    trivial_multiplier: complex | None = None
    residual: float = 0.0
    monodromy: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    steps: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return self.classification.label

    @property
    def is_orbit(self) -> bool:
        return self.kind == PERIODIC_ORBIT

    def point_set(self) -> np.ndarray:
        if self.samples is not None:
            return np.atleast_2d(self.samples)
        return np.atleast_2d(self.point)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "point": [float(v) for v in self.point],
            "classification": self.label,
            "flags": self.classification.flags(),
            "residual": float(self.residual),
            "tolerances": self.tolerances.as_dict(),
        }
        if self.is_orbit:
            out["period"] = float(self.period)
            out["anchor"] = out["point"]
            out["multipliers"] = _complex_pairs(self.values)
            out["trivial_multiplier"] = _complex_pairs([self.trivial_multiplier])[0] \
                if self.trivial_multiplier is not None else None
        else:
            out["eigenvalues"] = _complex_pairs(self.values)
        if self.diagnostics:
            out["diagnostics"] = _jsonable(self.diagnostics)
        return out

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def no_orbit_dict(reason: str) -> dict:
    return {"kind": None, "found": False, "reason": reason}
