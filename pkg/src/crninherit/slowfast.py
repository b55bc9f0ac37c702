"""Slow-fast decomposition of a split (E6) enlargement.

Given a split record with matrices alpha (n x m), beta ((m+k) x m) and c
(n x m), a nonsingular block ``beta_hat`` of m rows of beta is selected and
the enlarged dynamics is rewritten in coordinates

    z = x - alpha beta_hat^-1 y_hat,     w = y_hat / eps,

on the invariant hyperplane delta^t y_hat + y_hathat = offset.  In these
coordinates the system is singularly perturbed; its critical manifold is
w = V(z) o z^gamma and the layer Jacobian there has real negative spectrum.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .enlarge import E6, EnlargementRecord, beta_hat_rows
from .kinetics import MassActionSystem
from .network import stoichiometric_matrix
from .rational import RationalMatrix

A_EPS, B_EPS, A_ZERO, B_ZERO = "A_eps", "B_eps", "A0", "B0"
VARIANTS = (A_EPS, B_EPS, A_ZERO, B_ZERO)


class DomainError(ValueError):
    """A state lies outside the domain where the transformed systems are defined."""


def _mono(base: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """Row-wise monomials: out_i = prod_j base_j ** exps[i, j]."""
    with np.errstate(all="ignore"):
        return np.prod(np.power(base[None, :], exps), axis=1)


@dataclass(frozen=True)
class SlowFastModel:
    """Exact data of the decomposition, plus float copies for evaluation.

    ``rows`` index the new species forming beta_hat and ``other_rows`` the
    remaining k.  ``delta`` is m x k, ``gamma`` is m x n and ``v_exponent``
    is (beta_hat^-1)^t.
    """

    record: EnlargementRecord
    rows: tuple[int, ...]
    other_rows: tuple[int, ...]
    beta_hat: RationalMatrix
    beta_hat_inv: RationalMatrix
    doublehat_beta: RationalMatrix
    delta: RationalMatrix
    gamma: RationalMatrix
    v_exponent: RationalMatrix
    alpha_beta_hat_inv: RationalMatrix
    offset: np.ndarray
    f: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.record.base.n_species

    @property
    def m(self) -> int:
        return self.record.m

    @property
    def k(self) -> int:
        return len(self.other_rows)

    @property
    def split_indices(self) -> tuple[int, ...]:
        return self.record.split_indices

    def sigma(self) -> tuple[Fraction, ...]:
        """Column sums of beta_hat, the eps exponents of the second legs."""
        return tuple(sum(self.beta_hat.column(i), Fraction(0)) for i in range(self.m))

    def gamma_prime(self) -> RationalMatrix:
        """The block matrix [[Gamma, alpha], [0, beta]] of the rewritten system."""
        g = stoichiometric_matrix(self.record.base)
        top = g.hstack(self.record.alpha)
        bottom = RationalMatrix.zeros(self.beta_hat.nrows + self.k, g.ncols).hstack(self.record.beta)
        return top.vstack(bottom)

    def conserved_weights(self) -> tuple[Fraction, ...]:
        """Weights on the full species vector of delta^t y_hat + y_hathat."""
        w = [Fraction(0)] * (self.n + self.m + self.k)
        for j, r in enumerate(self.other_rows):
            w[self.n + r] = Fraction(1)
            for i, rr in enumerate(self.rows):
                w[self.n + rr] += self.delta[i, j]
        return tuple(w)

    def to_dict(self) -> dict:
        return {
            "beta_hat_rows": [self.record.result.species[self.n + r] for r in self.rows],
            "beta_hat": self.beta_hat.to_strings(),
            "beta_hat_inv": self.beta_hat_inv.to_strings(),
            "doublehat_beta": self.doublehat_beta.to_strings(),
            "delta": self.delta.to_strings(),
            "gamma": self.gamma.to_strings(),
            "v_exponent": self.v_exponent.to_strings(),
            "alpha_beta_hat_inv": self.alpha_beta_hat_inv.to_strings(),
            "sigma": [str(s) for s in self.sigma()],
            "offset": [float(v) for v in self.offset],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def decompose(record: EnlargementRecord, offset: Sequence[float] | None = None) -> SlowFastModel:
    """Select beta_hat (lowest row indices first) and compute delta, gamma, V.

    Raises:
        ValueError: the record is not a split, or ``offset`` is not a
            positive vector of length k.
    """
    if record.kind != E6:
        raise ValueError("slow-fast decomposition needs a split (E6) record")
    beta = record.beta
    rows = beta_hat_rows(beta)
    other = tuple(i for i in range(beta.nrows) if i not in rows)
    bh = beta.select_rows(rows)
    bhh = beta.select_rows(other) if other else RationalMatrix.zeros(0, beta.ncols)
    inv = bh.inverse()
    delta = -((bhh @ inv).T) if other else RationalMatrix.zeros(record.m, 0)
    gamma = -((record.c_matrix @ inv).T)
    k = len(other)
    off = np.ones(k) if offset is None else np.asarray(offset, dtype=float)
    if off.shape != (k,) or np.any(off <= 0):
        raise ValueError(f"offset must be a positive vector of length {k}")
    sfm = SlowFastModel(record, rows, other, bh, inv, bhh, delta, gamma, inv.T, record.alpha @ inv, off)
    sfm.f.update(
        bh=bh.to_numpy(), bhh=bhh.to_numpy().reshape(k, record.m), delta=delta.to_numpy().reshape(record.m, k),
        gamma=gamma.to_numpy(), vexp=inv.T.to_numpy(), abi=sfm.alpha_beta_hat_inv.to_numpy().reshape(record.base.n_species, record.m),
        c=record.c_matrix.to_numpy().reshape(record.base.n_species, record.m),
    )
    weights = sfm.conserved_weights()
    full = stoichiometric_matrix(record.result)
    for col in full.columns():
        if sum(a * b for a, b in zip(weights, col)) != 0:
            raise AssertionError("delta^t y_hat + y_hathat is not conserved")
    return sfm


# -- coordinate maps ---------------------------------------------------------

def _split_y(sfm: SlowFastModel, y_full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return y_full[list(sfm.rows)], y_full[list(sfm.other_rows)]


def on_hyperplane(sfm: SlowFastModel, y_full, tol: float = 1e-12) -> bool:
    yh, yhh = _split_y(sfm, np.asarray(y_full, dtype=float))
    r = sfm.f["delta"].T @ yh + yhh - sfm.offset
    return bool(np.all(np.abs(r) <= tol * (1 + np.abs(sfm.offset))))


def phi_map(sfm: SlowFastModel, x, y_full, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """(x, y) -> (z, y_hat); the input must lie on the invariant hyperplane."""
    x = np.asarray(x, dtype=float)
    y_full = np.asarray(y_full, dtype=float)
    if not on_hyperplane(sfm, y_full, tol):
        raise DomainError("state is off the hyperplane delta^t y_hat + y_hathat = offset")
    yh, _ = _split_y(sfm, y_full)
    return x - sfm.f["abi"] @ yh, yh


def phi_inverse(sfm: SlowFastModel, z, y_hat) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=float)
    yh = np.asarray(y_hat, dtype=float)
    y = np.empty(sfm.m + sfm.k)
    y[list(sfm.rows)] = yh
    y[list(sfm.other_rows)] = sfm.offset - sfm.f["delta"].T @ yh
    return z + sfm.f["abi"] @ yh, y


def psi_map(z, y_hat, eps: float) -> tuple[np.ndarray, np.ndarray]:
    if not eps > 0:
        raise ValueError("eps must be positive")
    return np.asarray(z, dtype=float), np.asarray(y_hat, dtype=float) / eps


def psi_inverse(z, w, eps: float) -> tuple[np.ndarray, np.ndarray]:
    if not eps > 0:
        raise ValueError("eps must be positive")
    return np.asarray(z, dtype=float), eps * np.asarray(w, dtype=float)


def to_slow_fast(sfm: SlowFastModel, state, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Full enlarged state -> (z, w)."""
    state = np.asarray(state, dtype=float)
    z, yh = phi_map(sfm, state[: sfm.n], state[sfm.n:], tol=1e-8)
    return psi_map(z, yh, eps)


def from_slow_fast(sfm: SlowFastModel, z, w, eps: float) -> np.ndarray:
    z, yh = psi_inverse(z, w, eps)
    x, y = phi_inverse(sfm, z, yh)
    return np.concatenate([x, y])


# -- vector fields -----------------------------------------------------------

def _split_rates(sfm: SlowFastModel, sys_base: MassActionSystem, x: np.ndarray) -> np.ndarray:
    return sys_base.rates(x)[list(sfm.split_indices)]


def _fast_terms(sfm, sys_base, x, w, hh):
    """beta_hat (v(x) - w^(bh^t) o hh^(bhh^t) o x^(c^t))."""
    vs = _split_rates(sfm, sys_base, x)
    back = _mono(w, sfm.f["bh"].T) * _mono(hh, sfm.f["bhh"].T) * _mono(x, sfm.f["c"].T)
    return sfm.f["bh"] @ (vs - back)


def system_rhs(sfm: SlowFastModel, sys_base: MassActionSystem, variant: str, z, w, eps: float = 0.0):
    """Right-hand sides of the four transformed systems.

    A_eps returns (z', w') in slow time (w' already divided by eps); B_eps is
    the fast-time form (eps z', eps w').  A0 returns (Gamma v(z), algebraic
    residual) and B0 returns (0, the same residual).

    Raises:
        DomainError: x, w or offset - eps delta^t w not positive.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if np.any(w <= 0):
        raise DomainError("w must be positive")
    if variant in (A_EPS, B_EPS):
        if not eps > 0:
            raise ValueError("eps must be positive")
        x = z + eps * (sfm.f["abi"] @ w)
        hh = sfm.offset - eps * (sfm.f["delta"].T @ w)
    else:
        x = z
        hh = sfm.offset
    if np.any(x <= 0) or np.any(hh <= 0):
        raise DomainError("state leaves the positive domain")
    fast = _fast_terms(sfm, sys_base, x, w, hh)
    if variant == A_EPS:
        return sys_base.rhs(x), fast / eps
    if variant == B_EPS:
        return eps * sys_base.rhs(x), fast
    if variant == A_ZERO:
        return sys_base.rhs(x), fast
    return np.zeros(sfm.n), fast


def critical_manifold(sfm: SlowFastModel, sys_base: MassActionSystem, z) -> np.ndarray:
    """w = V(z) o z^gamma o offset^delta, with V(z) = v_split(z)^((beta_hat^-1)^t)."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("z must be positive")
    vs = _split_rates(sfm, sys_base, z)
    return _mono(vs, sfm.f["vexp"]) * _mono(z, sfm.f["gamma"]) * _mono(sfm.offset, sfm.f["delta"])


def layer_jacobian(sfm: SlowFastModel, sys_base: MassActionSystem, z, w) -> np.ndarray:
    """D_w F = -beta_hat diag(w^(bh^t) o z^(c^t) o offset^(bhh^t)) beta_hat^t diag(1/w)."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(z <= 0) or np.any(w <= 0):
        raise DomainError("z and w must be positive")
    d1 = _mono(w, sfm.f["bh"].T) * _mono(z, sfm.f["c"].T) * _mono(sfm.offset, sfm.f["bhh"].T)
    bh = sfm.f["bh"]
    return -(bh * d1[None, :]) @ bh.T / w[None, :]


def symmetrized_layer_matrix(sfm: SlowFastModel, sys_base: MassActionSystem, z, w) -> np.ndarray:
    """D2^(1/2) (-bh D1 bh^t) D2^(1/2) with D2 = diag(1/w); similar to the layer Jacobian."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    d1 = _mono(w, sfm.f["bh"].T) * _mono(z, sfm.f["c"].T) * _mono(sfm.offset, sfm.f["bhh"].T)
    s = 1 / np.sqrt(w)
    bh = sfm.f["bh"]
    return -(s[:, None] * ((bh * d1[None, :]) @ bh.T) * s[None, :])


# -- enlarged system ---------------------------------------------------------

def enlarged_system(sfm: SlowFastModel, sys_base: MassActionSystem, eps: float) -> MassActionSystem:
    """The enlarged mass action system with l = eps^(-sigma) on the second legs."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    res = sfm.record.result
    base_k = dict(zip(sys_base.net.labels, sys_base.rate_constants))
    rates = {lab: base_k[src] * fac for lab, (src, fac) in sfm.record.inherited.items()}
    for j, s in zip(sfm.record.new_reaction_indices, sfm.sigma()):
        rates[res.reactions[j].label] = (1.0 / eps) ** float(s)
    return MassActionSystem.from_mapping(res, rates)


def lifted_initial_condition(sfm: SlowFastModel, sys_base: MassActionSystem, z0, eps: float) -> np.ndarray:
    """Full state over z0 on the zeroth-order slow manifold.

    y_hat = eps w with w on the critical manifold, x = z0 + alpha beta_hat^-1 y_hat
    and y_hathat = offset - delta^t y_hat.

    Raises:
        DomainError: some coordinate is not positive (eps too large for z0).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    w = critical_manifold(sfm, sys_base, z0)
    state = from_slow_fast(sfm, z0, w, eps)
    if np.any(state <= 0):
        raise DomainError(f"lifted state is not positive at eps={eps:g}")
    return state


# -- eps bounds --------------------------------------------------------------

@dataclass(frozen=True)
class OrbitTube:
    """Union of closed coordinate boxes of half-width ``radius`` around samples."""

    centers: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        object.__setattr__(self, "centers", c)
        if c.size == 0:
            raise ValueError("tube needs at least one center")
        if not self.radius >= 0:
            raise ValueError("radius must be nonnegative")

    def boundary_distance(self) -> float:
        return float(np.min(self.centers) - self.radius)

    def disjoint_from(self, other: "OrbitTube") -> bool:
        """Boxes are disjoint iff every pair of centers differs by more than the radii in some coordinate."""
        gap = self.radius + other.radius
        for c in self.centers:
            if np.any(np.all(np.abs(other.centers - c) <= gap, axis=1)):
                return False
        return True


@dataclass(frozen=True)
class EpsilonBound:
    K_O: float
    D_O: float
    eps0_cap: float
    eps1: float
    terms: dict
    audit: list

    def admits(self, eps: float) -> bool:
        return 0 < eps < self.eps1

    def to_dict(self) -> dict:
        return {"K_O": self.K_O, "D_O": self.D_O, "eps0_cap": self.eps0_cap, "eps1": self.eps1,
                "terms": self.terms, "audit": self.audit,
                "note": "conditional on the persistence threshold eps0 being at least eps0_cap"}


def _box_points(center: np.ndarray, radius: float, g: int) -> np.ndarray:
    if g == 1 or radius == 0:
        return center[None, :]
    axis = np.linspace(-radius, radius, g)
    grid = np.array(list(itertools.product(axis, repeat=center.size)))
    return center[None, :] + grid


def manifold_batch(sfm: SlowFastModel, sys_base: MassActionSystem, points: np.ndarray) -> np.ndarray:
    """:func:`critical_manifold` evaluated on the rows of ``points``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(p <= 0):
        raise DomainError("z must be positive")
    idx = list(sfm.split_indices)
    logp = np.log(p)
    log_v = np.log(sys_base.rate_constants[idx])[None, :] + logp @ sys_base.exponents[idx].T
    log_w = log_v @ sfm.f["vexp"].T + logp @ sfm.f["gamma"].T + (np.log(sfm.offset) @ sfm.f["delta"].T)[None, :]
    return np.exp(log_w)


def _sup_norm(sfm, sys_base, points) -> float:
    return float(np.max(np.linalg.norm(manifold_batch(sfm, sys_base, points), axis=1)))


def epsilon_bound(sfm: SlowFastModel, sys_base: MassActionSystem, tube: OrbitTube, eps0_cap: float,
                  max_points: int = 200_000, safety: float = 1.05) -> EpsilonBound:
    """K_O, D_O and eps1 for a tube.

    K_O = 2 sup |V(z) o z^gamma| is estimated on per-box grids with 2, 3, 5,
    9, ... points per axis until the estimate changes by less than 1%, then
    inflated by ``safety``.  Norms of alpha beta_hat^-1 and delta^t are
    spectral norms; the delta term is dropped when k = 0.

    Raises:
        DomainError: the tube touches the boundary of the orthant.
    """
    if not eps0_cap > 0:
        raise ValueError("eps0_cap must be positive")
    d_o = tube.boundary_distance()
    if d_o <= 0:
        raise DomainError(f"tube reaches the orthant boundary (distance {d_o:g})")
    n = tube.centers.shape[1]
    audit = []
    previous = None
    sup = 0.0
    g = 2 if tube.radius > 0 else 1
    while True:
        per_box = g ** n
        if per_box * len(tube.centers) > max_points and audit:
            audit.append({"grid": g, "stopped": "point budget"})
            break
        sup = _sup_norm(sfm, sys_base, np.concatenate([_box_points(c, tube.radius, g) for c in tube.centers]))
        audit.append({"grid": g, "points": per_box * len(tube.centers), "sup": sup})
        if g == 1 or (previous is not None and abs(sup - previous) <= 0.01 * sup):
            break
        previous = sup
        g = 2 * g - 1
    exact_point = tube.radius == 0
    k_o = 2 * sup * (1.0 if exact_point else safety)
    n_abi = float(np.linalg.norm(sfm.f["abi"], 2)) if sfm.f["abi"].size else 0.0
    n_delta = float(np.linalg.norm(sfm.f["delta"].T, 2)) if sfm.f["delta"].size else 0.0
    terms = {"eps0_cap": eps0_cap}
    if n_abi > 0:
        terms["positivity"] = d_o / (2 * k_o * n_abi)
    if sfm.k > 0 and n_delta > 0:
        terms["hyperplane"] = 1 / (2 * k_o * n_delta)
    return EpsilonBound(k_o, d_o, eps0_cap, min(terms.values()), terms, audit)


__all__ = [
    "A_EPS", "A_ZERO", "B_EPS", "B_ZERO", "DomainError", "EpsilonBound", "OrbitTube", "SlowFastModel",
    "critical_manifold", "decompose", "enlarged_system", "epsilon_bound", "from_slow_fast", "layer_jacobian",
    "lifted_initial_condition", "manifold_batch", "on_hyperplane", "phi_inverse", "phi_map", "psi_inverse", "psi_map",
    "symmetrized_layer_matrix", "system_rhs", "to_slow_fast",
]
