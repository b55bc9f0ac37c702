"""Mass action rate functions, vector fields and Jacobians."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import qr

from .network import Network, network_rank, reactant_exponent_matrix, stoichiometric_matrix


class KineticsError(ArithmeticError):
    """Raised when a rate cannot be evaluated (bad state, overflow, NaN)."""


@dataclass(frozen=True)
class MassActionSystem:
    """A network with one positive rate constant per reaction.

    ``rates`` is the single place that fixes the kinetics family. Anything that
    only needs ``rates``/``rate_jacobian`` (the slow-fast machinery included)
    would accept another positive, C^2 rate family with the same interface.
    """

    net: Network
    rate_constants: np.ndarray
    gamma: np.ndarray = field(init=False, repr=False, compare=False)
    exponents: np.ndarray = field(init=False, repr=False, compare=False)
    _integer_exponents: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.array(self.rate_constants, dtype=float).reshape(-1)
        k.setflags(write=False)
        if k.size != self.net.n_reactions:
            raise ValueError(f"expected {self.net.n_reactions} rate constants, got {k.size}")
        if not np.all(np.isfinite(k)) or np.any(k <= 0):
            raise ValueError("rate constants must be finite and strictly positive")
        object.__setattr__(self, "rate_constants", k)
        g = stoichiometric_matrix(self.net).to_numpy()
        a = reactant_exponent_matrix(self.net).to_numpy().T  # r x n
        g.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "exponents", a)
        object.__setattr__(self, "_integer_exponents", bool(np.all(a == np.round(a))))

    @classmethod
    def from_mapping(cls, net: Network, constants: Mapping[str, float]) -> "MassActionSystem":
        missing = [lab for lab in net.labels if lab not in constants]
        if missing:
            raise KeyError(f"missing rate constants for: {', '.join(missing)}")
        return cls(net, np.array([constants[lab] for lab in net.labels], dtype=float))

    @property
    def n(self) -> int:
        return self.net.n_species

    def rates(self, x: Sequence[float]) -> np.ndarray:
        return rates(self, x)

    def rhs(self, x: Sequence[float]) -> np.ndarray:
        return rhs(self, x)

    def jacobian(self, x: Sequence[float]) -> np.ndarray:
        return jacobian(self, x)


def _checked_state(sys: MassActionSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"state must have length {sys.n}")
    if not np.all(np.isfinite(x)):
        raise KineticsError("non-finite state")
    if np.any(x < 0):
        raise KineticsError("negative concentration")
    if np.any(x == 0) and not sys._integer_exponents:
        zero = x == 0
        if np.any(sys.exponents[:, zero] % 1 != 0):
            raise KineticsError("fractional exponent at a zero concentration")
    return x


def _monomials(exponents: np.ndarray, x: np.ndarray) -> np.ndarray:
    # x**0 == 1 even at x == 0, which gives the continuous extension
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        try:
            return np.prod(np.power(x[None, :], exponents), axis=1)
        except FloatingPointError as exc:
            raise KineticsError(f"rate evaluation failed: {exc}") from None


def rates(sys: MassActionSystem, x) -> np.ndarray:
    """v_j(x) = k_j * prod_i x_i^(a_ji)."""
    x = _checked_state(sys, x)
    v = sys.rate_constants * _monomials(sys.exponents, x)
    if not np.all(np.isfinite(v)):
        raise KineticsError("overflow in rate evaluation")
    return v


def rhs(sys: MassActionSystem, x) -> np.ndarray:
    out = sys.gamma @ rates(sys, x)
    if not np.all(np.isfinite(out)):
        raise KineticsError("overflow in vector field")
    return out


def rate_jacobian(sys: MassActionSystem, x) -> np.ndarray:
    """r x n matrix Dv; (Dv)_ji = k_j a_ji x_i^(a_ji - 1) prod_{l != i} x_l^(a_jl)."""
    x = _checked_state(sys, x)
    a = sys.exponents
    r, n = a.shape
    dv = np.zeros((r, n))
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        try:
            for i in range(n):
                col = a[:, i]
                active = col != 0
                if not np.any(active):
                    continue
                e = a[active].copy()
                e[:, i] -= 1
                dv[active, i] = sys.rate_constants[active] * col[active] * np.prod(np.power(x[None, :], e), axis=1)
        except FloatingPointError as exc:
            raise KineticsError(f"Jacobian evaluation failed: {exc}") from None
    return dv


def jacobian(sys: MassActionSystem, x) -> np.ndarray:
    """Gamma @ Dv(x)."""
    out = sys.gamma @ rate_jacobian(sys, x)
    if not np.all(np.isfinite(out)):
        raise KineticsError("overflow in Jacobian")
    return out


@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal basis (columns) of the stoichiometric subspace."""

    columns: np.ndarray

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T

    def coordinates(self, x) -> np.ndarray:
        return self.columns.T @ np.asarray(x, dtype=float)


def reduced_basis(net_or_sys, rank: int | None = None, order: Sequence[int] | None = None) -> ReducedBasis:
    """Orthonormal basis of im Gamma from a pivoted QR of the columns.

    The number of vectors kept is the exact rank, never a float threshold.
    ``order`` permutes the columns before factorisation (any order spans the
    same space; used to check basis independence).
    """
    net = net_or_sys.net if isinstance(net_or_sys, MassActionSystem) else net_or_sys
    g = stoichiometric_matrix(net).to_numpy()
    if rank is None:
        rank = network_rank(net)
    if rank == 0:
        return ReducedBasis(np.zeros((net.n_species, 0)))
    if order is not None:
        g = g[:, list(order)]
    q, _, _ = qr(g, pivoting=True, mode="economic")
    return ReducedBasis(np.ascontiguousarray(q[:, :rank]))


def reduced_jacobian(sys: MassActionSystem, x, basis: ReducedBasis) -> np.ndarray:
    """B^t (Gamma Dv(x)) B, the linearisation restricted to im Gamma."""
    b = basis.columns
    return b.T @ jacobian(sys, x) @ b


def vector_field(sys: MassActionSystem):
    """Fast closure x -> Gamma v(x) for integrators.

    With integer exponents the field is polynomial and is evaluated as such
    off the orthant too (RK stages may dip slightly below zero).
    """
    g, a, k = sys.gamma, sys.exponents, sys.rate_constants
    polynomial = sys._integer_exponents

    def f(x: np.ndarray) -> np.ndarray:
        if not polynomial and np.any(x < 0):
            raise KineticsError("negative concentration with fractional exponents")
        with np.errstate(all="ignore"):
            out = g @ (k * np.prod(np.power(x[None, :], a), axis=1))
        if not np.all(np.isfinite(out)):
            raise KineticsError("non-finite vector field")
        return out

    return f


def jacobian_field(sys: MassActionSystem):
    """Fast closure x -> Gamma Dv(x), companion of :func:`vector_field`."""
    g, a, k = sys.gamma, sys.exponents, sys.rate_constants
    polynomial = sys._integer_exponents
    r, n = a.shape
    shifted = []
    for i in range(n):
        e = a.copy()
        e[:, i] = np.where(a[:, i] != 0, a[:, i] - 1, 0)
        shifted.append(e)

    def jac(x: np.ndarray) -> np.ndarray:
        if not polynomial and np.any(x <= 0):
            raise KineticsError("non-positive concentration with fractional exponents")
        with np.errstate(all="ignore"):
            if np.all(x > 0):
                v = k * np.prod(np.power(x[None, :], a), axis=1)
                dv = v[:, None] * a / x[None, :]
            else:
                dv = np.empty((r, n))
                for i in range(n):
                    dv[:, i] = k * a[:, i] * np.prod(np.power(x[None, :], shifted[i]), axis=1)
            out = g @ dv
        if not np.all(np.isfinite(out)):
            raise KineticsError("non-finite Jacobian")
        return out

    return jac
