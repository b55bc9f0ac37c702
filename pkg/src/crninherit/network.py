"""Chemical reaction networks with exact rational stoichiometry."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .rational import Number, RationalMatrix, as_fraction


@dataclass(frozen=True)
class Complex:
    """Formal nonnegative combination of species, keyed by species index.

    Only strictly positive coefficients are stored; ``terms`` is sorted by index.
    """

    terms: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def from_mapping(cls, coefficients: Mapping[int, Number]) -> "Complex":
        merged: dict[int, Fraction] = {}
        for idx, coeff in coefficients.items():
            c = as_fraction(coeff)
            if c < 0:
                raise ValueError(f"negative stoichiometric coefficient {c} for species {idx}")
            if c:
                merged[idx] = merged.get(idx, Fraction(0)) + c
        return cls(tuple(sorted(merged.items())))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.terms)

    def coefficient(self, idx: int) -> Fraction:
        for i, c in self.terms:
            if i == idx:
                return c
        return Fraction(0)

    def vector(self, n: int) -> list[Fraction]:
        out = [Fraction(0)] * n
        for i, c in self.terms:
            out[i] = c
        return out

    def is_empty(self) -> bool:
        return not self.terms

    def species_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.terms)

    def __add__(self, other: "Complex") -> "Complex":
        merged = self.as_dict()
        for i, c in other.terms:
            merged[i] = merged.get(i, Fraction(0)) + c
        return Complex.from_mapping(merged)

    def reindex(self, mapping: Mapping[int, int]) -> "Complex":
        return Complex.from_mapping({mapping[i]: c for i, c in self.terms})

    def format(self, species: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for i, c in self.terms:
            parts.append(species[i] if c == 1 else f"{c} {species[i]}")
        return " + ".join(parts)


@dataclass(frozen=True)
class Reaction:
    reactant: Complex
    product: Complex
    label: str

    def is_trivial(self) -> bool:
        return self.reactant == self.product

    def net(self, n: int) -> list[Fraction]:
        a = self.reactant.vector(n)
        b = self.product.vector(n)
        return [bi - ai for ai, bi in zip(a, b)]

    def format(self, species: Sequence[str]) -> str:
        return f"{self.reactant.format(species)} -> {self.product.format(species)}"


@dataclass(frozen=True)
class Network:
    """Ordered species and ordered irreversible reactions."""

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        species = tuple(self.species)
        reactions = tuple(self.reactions)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "reactions", reactions)
        if len(set(species)) != len(species):
            raise ValueError("duplicate species names")
        labels = [r.label for r in reactions]
        if len(set(labels)) != len(labels):
            dup = sorted({l for l in labels if labels.count(l) > 1})
            raise ValueError(f"duplicate reaction labels: {', '.join(dup)}")
        n = len(species)
        for r in reactions:
            for idx in r.reactant.species_indices() + r.product.species_indices():
                if not 0 <= idx < n:
                    raise ValueError(f"reaction {r.label} references species index {idx}")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(species)})

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(r.label for r in self.reactions)

    def species_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown species {name!r}") from None

    def reaction_index(self, label: str) -> int:
        for j, r in enumerate(self.reactions):
            if r.label == label:
                return j
        raise KeyError(f"unknown reaction label {label!r}")

    def complex(self, coefficients: Mapping[str, Number]) -> Complex:
        return Complex.from_mapping({self.species_index(s): c for s, c in coefficients.items()})

    def describe(self) -> str:
        return "\n".join(f"{r.label}: {r.format(self.species)}" for r in self.reactions)


def stoichiometric_matrix(net: Network) -> RationalMatrix:
    """n x r matrix of net production; column j is product_j - reactant_j."""
    n = net.n_species
    return RationalMatrix.from_columns([r.net(n) for r in net.reactions], n) if net.reactions \
        else RationalMatrix.zeros(n, 0)


def reactant_exponent_matrix(net: Network) -> RationalMatrix:
    n = net.n_species
    return RationalMatrix.from_columns([r.reactant.vector(n) for r in net.reactions], n) \
        if net.reactions else RationalMatrix.zeros(n, 0)


def network_rank(net: Network) -> int:
    return stoichiometric_matrix(net).rank()


def conservation_basis(net: Network) -> list[tuple[Fraction, ...]]:
    """Exact basis of the left kernel of the stoichiometric matrix."""
    gamma = stoichiometric_matrix(net)
    if gamma.ncols == 0:
        return [tuple(Fraction(int(i == j)) for j in range(net.n_species)) for i in range(net.n_species)]
    return gamma.left_nullspace()


def canonical_form(net: Network) -> tuple[tuple[str, ...], tuple]:
    """Label- and order-independent description used for isomorphism checks."""

    def cplx(c: Complex) -> tuple:
        return tuple(sorted((net.species[i], c_) for i, c_ in c.terms))

    reactions = sorted((cplx(r.reactant), cplx(r.product)) for r in net.reactions)
    return tuple(sorted(net.species)), tuple(reactions)


def is_isomorphic(a: Network, b: Network) -> bool:
    """Same species names and the same multiset of reactions, ignoring order and labels."""
    return canonical_form(a) == canonical_form(b)


def build_network(species: Iterable[str], reactions: Iterable[tuple[Mapping[str, Number], Mapping[str, Number], str]]) -> Network:
    """Convenience constructor from name-keyed complexes."""
    species = tuple(species)
    index = {s: i for i, s in enumerate(species)}
    built = []
    for reactant, product, label in reactions:
        built.append(
            Reaction(
                Complex.from_mapping({index[s]: c for s, c in reactant.items()}),
                Complex.from_mapping({index[s]: c for s, c in product.items()}),
                label,
            )
        )
    return Network(species, tuple(built))
