"""The enlargements E1-E6, enzymatic mechanisms and their provenance.

Every operation returns an :class:`EnlargementRecord` (or a list of them)
holding the base and resulting networks together with the exact matrices
needed later by the slow-fast analysis.  Validity conditions are checked in
rational arithmetic; a failed check raises :class:`EnlargementError` carrying
a certificate that explains the failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .kinetics import MassActionSystem
from .network import Complex, Network, Reaction, network_rank, stoichiometric_matrix
from .parser import RateSpec, parse_complex
from .rational import RationalMatrix, format_vector

E1, E2, E3, E4, E5, E6 = "E1", "E2", "E3", "E4", "E5", "E6"
DUPLICATE = "duplicate"
TRIVIAL = "trivial"


class EnlargementError(ValueError):
    """A validity condition failed.

    ``certificate`` is a JSON-friendly dict describing the failure, for example
    the dependent combination of columns of beta.  ``position`` is set by
    :func:`compose_enlargements` to the index of the failing step.
    """

    def __init__(self, message: str, certificate: dict | None = None, position: int | None = None):
        super().__init__(message)
        self.certificate = certificate or {}
        self.position = position

    def __str__(self) -> str:
        base = super().__str__()
        return f"step {self.position}: {base}" if self.position is not None else base


@dataclass(frozen=True)
class EnlargementRecord:
    """Provenance of one enlargement.

    For splits (E6) ``alpha`` is n x m (c_i - b_i), ``beta`` is (m+k) x m and
    ``c_matrix`` is n x m, all on the base species.  Old species and reactions
    keep their indices in ``result``; new species and reactions are appended.
    ``inherited`` maps each result label whose rate derives from a base
    reaction to (base label, factor).
    """

    kind: str
    base: Network
    result: Network
    alpha: RationalMatrix
    beta: RationalMatrix
    c_matrix: RationalMatrix
    species_map: tuple[int, ...]
    reaction_map: tuple[int, ...]
    new_reaction_indices: tuple[int, ...] = ()
    split_indices: tuple[int, ...] = ()
    new_species_indices: tuple[int, ...] = ()
    inherited: Mapping[str, tuple[str, float]] = field(default_factory=dict)
    details: Mapping[str, Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.beta.ncols

    @property
    def new_species(self) -> tuple[str, ...]:
        return tuple(self.result.species[i] for i in self.new_species_indices)

    @property
    def new_labels(self) -> tuple[str, ...]:
        return tuple(self.result.reactions[j].label for j in self.new_reaction_indices)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "base_rank": network_rank(self.base),
            "result_rank": network_rank(self.result),
            "new_species": list(self.new_species),
            "new_reactions": [self.result.reactions[j].label for j in self.new_reaction_indices],
            "split_reactions": [self.base.reactions[j].label for j in self.split_indices],
            "alpha": self.alpha.to_strings(),
            "beta": self.beta.to_strings(),
            "c": self.c_matrix.to_strings(),
            "details": self.details,
        }


def _empty(n: int) -> RationalMatrix:
    return RationalMatrix.zeros(n, 0)


def _identity_maps(base: Network) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return tuple(range(base.n_species)), tuple(range(base.n_reactions))


def _plain_record(kind, base, result, new_rx=(), new_sp=(), inherited=None, details=None) -> EnlargementRecord:
    sm, rm = _identity_maps(base)
    if inherited is None:
        inherited = {r.label: (r.label, 1.0) for r in base.reactions}
    return EnlargementRecord(kind, base, result, _empty(base.n_species), _empty(0), _empty(base.n_species),
                             sm, rm, tuple(new_rx), (), tuple(new_sp), inherited, details or {})


def _fresh_label(existing: set[str], wanted: str) -> str:
    if wanted not in existing:
        return wanted
    i = 2
    while f"{wanted}_{i}" in existing:
        i += 1
    return f"{wanted}_{i}"


def _named_complex(net_species: Sequence[str], mapping: Mapping[str, Any]) -> Complex:
    index = {s: i for i, s in enumerate(net_species)}
    missing = [s for s in mapping if s not in index]
    if missing:
        raise EnlargementError(f"unknown species: {', '.join(missing)}")
    return Complex.from_mapping({index[s]: c for s, c in mapping.items()})


def _as_mapping(cplx) -> dict[str, Fraction]:
    if isinstance(cplx, str):
        return parse_complex(cplx)
    return {s: Fraction(c) for s, c in dict(cplx).items()}


def _resolve_reaction(net: Network, ref: int | str) -> int:
    if isinstance(ref, int):
        if not 0 <= ref < net.n_reactions:
            raise EnlargementError(f"reaction index {ref} out of range")
        return ref
    try:
        return net.reaction_index(ref)
    except KeyError:
        raise EnlargementError(f"unknown reaction {ref!r}") from None


# -- E1 ----------------------------------------------------------------------

@dataclass(frozen=True)
class NewReaction:
    reactant: Mapping[str, Any] | str
    product: Mapping[str, Any] | str
    label: str | None = None


def add_dependent_reactions(net: Network, reactions: Sequence[NewReaction]) -> EnlargementRecord:
    """E1: add reactions on existing species whose net vectors lie in im Gamma."""
    gamma = stoichiometric_matrix(net)
    labels = set(net.labels)
    added = []
    for spec in reactions:
        a = _named_complex(net.species, _as_mapping(spec.reactant))
        b = _named_complex(net.species, _as_mapping(spec.product))
        label = spec.label or _fresh_label(labels, f"r{net.n_reactions + len(added) + 1}")
        if label in labels:
            raise EnlargementError(f"reaction label {label!r} already exists")
        rx = Reaction(a, b, label)
        vec = rx.net(net.n_species)
        if not gamma.column_span_contains(vec):
            witness = next(w for w in (gamma.left_nullspace() if gamma.ncols else _unit_rows(net.n_species))
                           if sum(x * y for x, y in zip(w, vec)) != 0)
            raise EnlargementError(
                f"E1: reaction {rx.format(net.species)} is not linearly dependent (it changes the rank)",
                {"reaction": rx.format(net.species), "net_vector": [str(v) for v in vec],
                 "violated_conservation_law": [str(v) for v in witness]},
            )
        labels.add(label)
        added.append(rx)
    result = Network(net.species, net.reactions + tuple(added))
    return _plain_record(E1, net, result, range(net.n_reactions, result.n_reactions),
                         details={"added": [r.format(net.species) for r in added]})


def _unit_rows(n: int):
    return [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]


def add_reverse_reactions(net: Network, labels: Sequence[str]) -> EnlargementRecord:
    """E1 shorthand: add the reverse of existing reactions as ``<label>_rev``."""
    specs = []
    for lab in labels:
        r = net.reactions[_resolve_reaction(net, lab)]
        specs.append(NewReaction(_complex_names(net, r.product), _complex_names(net, r.reactant), f"{r.label}_rev"))
    return add_dependent_reactions(net, specs)


def _complex_names(net: Network, cplx: Complex) -> dict[str, Fraction]:
    return {net.species[i]: c for i, c in cplx.terms}


# -- E2 ----------------------------------------------------------------------

def fully_open(net: Network) -> EnlargementRecord:
    """E2: add 0 -> X and X -> 0 for every species, where absent."""
    existing = {(r.reactant, r.product) for r in net.reactions}
    labels = set(net.labels)
    added = []
    for i, s in enumerate(net.species):
        x = Complex.from_mapping({i: 1})
        for a, b, tag in ((Complex(), x, "in"), (x, Complex(), "out")):
            if (a, b) not in existing:
                lab = _fresh_label(labels, f"{s}_{tag}")
                labels.add(lab)
                added.append(Reaction(a, b, lab))
    result = Network(net.species, net.reactions + tuple(added))
    return _plain_record(E2, net, result, range(net.n_reactions, result.n_reactions))


# -- E3 / E4 -----------------------------------------------------------------

def _insert_species(net: Network, name: str, coefficients: Mapping[str, Any]) -> Network:
    if name in net.species:
        raise EnlargementError(f"species {name!r} already exists")
    idx = net.n_species
    reactions = list(net.reactions)
    for ref, sides in coefficients.items():
        j = _resolve_reaction(net, ref)
        if isinstance(sides, (int, str, Fraction)):
            sides = {"reactant": sides, "product": sides}
        ra = Fraction(sides.get("reactant", 0))
        pa = Fraction(sides.get("product", 0))
        if ra < 0 or pa < 0:
            raise EnlargementError("stoichiometric coefficients must be nonnegative")
        r = reactions[j]
        reactions[j] = Reaction(r.reactant + Complex.from_mapping({idx: ra}),
                                r.product + Complex.from_mapping({idx: pa}), r.label)
    return Network(net.species + (name,), tuple(reactions))


def add_dependent_species(net: Network, name: str, coefficients: Mapping[str, Any]) -> EnlargementRecord:
    """E3: insert a new species into existing reactions without changing the rank.

    ``coefficients`` maps a reaction label to ``{"reactant": a, "product": b}``
    (a bare number means the same coefficient on both sides).
    """
    result = _insert_species(net, name, coefficients)
    before, after = network_rank(net), network_rank(result)
    if after != before:
        gamma = stoichiometric_matrix(net)
        row = stoichiometric_matrix(result).row(result.n_species - 1)
        kernel = gamma.nullspace()
        witness = next((v for v in kernel if sum(a * b for a, b in zip(row, v)) != 0), None)
        raise EnlargementError(
            f"E3: adding {name} raises the rank from {before} to {after}",
            {"species": name, "new_row": [str(v) for v in row],
             "flux_vector": [str(v) for v in witness] if witness else None},
        )
    return _plain_record(E3, net, result, new_sp=[result.n_species - 1])


def add_species_with_flow(net: Network, name: str, coefficients: Mapping[str, Any],
                          inflow_label: str | None = None, outflow_label: str | None = None) -> EnlargementRecord:
    """E4: insert a new species anywhere and add 0 -> Y, Y -> 0."""
    mid = _insert_species(net, name, coefficients)
    idx = mid.n_species - 1
    labels = set(mid.labels)
    lin = inflow_label or _fresh_label(labels, f"{name}_in")
    labels.add(lin)
    lout = outflow_label or _fresh_label(labels, f"{name}_out")
    y = Complex.from_mapping({idx: 1})
    result = Network(mid.species, mid.reactions + (Reaction(Complex(), y, lin), Reaction(y, Complex(), lout)))
    return _plain_record(E4, net, result, range(net.n_reactions, result.n_reactions), [idx])


# -- E5 ----------------------------------------------------------------------

def add_reversible_with_new_species(net: Network, reactions: Sequence[NewReaction],
                                    new_species: Sequence[str]) -> EnlargementRecord:
    """E5: add m reversible reactions involving m+k new species.

    The new species must figure nontrivially: the rows of the new stoichiometric
    matrix belonging to the new species, restricted to the forward reactions,
    have rank m.
    """
    new_species = tuple(new_species)
    clash = [s for s in new_species if s in net.species]
    if clash:
        raise EnlargementError(f"species already present: {', '.join(clash)}")
    if not reactions:
        raise EnlargementError("E5 needs at least one reversible reaction")
    species = net.species + new_species
    labels = set(net.labels)
    added = []
    for spec in reactions:
        a = _named_complex(species, _as_mapping(spec.reactant))
        b = _named_complex(species, _as_mapping(spec.product))
        lab = spec.label or _fresh_label(labels, f"r{net.n_reactions + len(added) + 1}")
        rev = f"{lab}_rev"
        for l_ in (lab, rev):
            if l_ in labels:
                raise EnlargementError(f"reaction label {l_!r} already exists")
            labels.add(l_)
        added += [Reaction(a, b, lab), Reaction(b, a, rev)]
    result = Network(species, net.reactions + tuple(added))
    n, k_all = net.n_species, len(new_species)
    forward = added[0::2]
    beta = RationalMatrix.from_columns([r.net(len(species))[n:] for r in forward], k_all)
    m = len(forward)
    if beta.rank() < m:
        raise EnlargementError(f"E5: new species enter with rank {beta.rank()} < m = {m}", _dependency(beta))
    sm, rm = _identity_maps(net)
    inherited = {r.label: (r.label, 1.0) for r in net.reactions}
    return EnlargementRecord(E5, net, result, _empty(n), beta, _empty(n), sm, rm,
                             tuple(range(net.n_reactions, result.n_reactions)), (),
                             tuple(range(n, len(species))), inherited, {})


def _dependency(beta: RationalMatrix) -> dict:
    combo = beta.nullspace()[0]
    terms = [f"{c}*col{j + 1}" for j, c in enumerate(combo) if c != 0]
    return {"beta": beta.to_strings(), "dependency": [str(c) for c in combo],
            "relation": " + ".join(terms) + " = 0"}


# -- E6 ----------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    """Replace reaction ``reaction`` (a -> b) by a -> c + beta -> b.

    ``intermediate_old`` is c on existing species, ``intermediate_new`` is
    beta on the new species.  ``label`` names the appended second leg
    (default ``<label>'``).
    """

    reaction: int | str
    intermediate_old: Mapping[str, Any] | str = field(default_factory=dict)
    intermediate_new: Mapping[str, Any] | str = field(default_factory=dict)
    label: str | None = None


@dataclass(frozen=True)
class SplitSpec:
    splits: tuple[Split, ...]
    new_species: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "splits", tuple(self.splits))
        object.__setattr__(self, "new_species", tuple(self.new_species))


def split_reactions(net: Network, spec: SplitSpec) -> EnlargementRecord:
    """E6: split m reactions, inserting intermediates on m+k new species.

    The first leg keeps the label (and so the rate constant) of the original
    reaction; second legs are appended in split order.

    Raises:
        EnlargementError: rank(beta) < m (certificate lists the dependent
            columns), repeated or unknown reactions, clashing names.
    """
    new = spec.new_species
    m = len(spec.splits)
    if m < 1:
        raise EnlargementError("E6 needs at least one split")
    if len(set(new)) != len(new):
        raise EnlargementError("new species names repeat")
    clash = [s for s in new if s in net.species]
    if clash:
        raise EnlargementError(f"species already present: {', '.join(clash)}")
    n = net.n_species
    species = net.species + new
    old_set, new_set = set(net.species), set(new)
    idx = [_resolve_reaction(net, s.reaction) for s in spec.splits]
    if len(set(idx)) != m:
        raise EnlargementError("a reaction is split twice; duplicate it first")

    labels = set(net.labels)
    reactions = list(net.reactions)
    second = []
    c_cols, beta_cols, alpha_cols = [], [], []
    for s, j in zip(spec.splits, idx):
        merged = dict(_as_mapping(s.intermediate_old))
        for name, c in _as_mapping(s.intermediate_new).items():
            merged[name] = merged.get(name, Fraction(0)) + c
        unknown = [x for x in merged if x not in old_set and x not in new_set]
        if unknown:
            raise EnlargementError(f"unknown species in intermediate: {', '.join(unknown)}")
        inter = _named_complex(species, merged)
        r = reactions[j]
        lab = s.label or f"{r.label}'"
        if lab in labels:
            raise EnlargementError(f"reaction label {lab!r} already exists")
        labels.add(lab)
        reactions[j] = Reaction(r.reactant, inter, r.label)
        second.append(Reaction(inter, r.product, lab))
        vec = inter.vector(len(species))
        c_cols.append(vec[:n])
        beta_cols.append(vec[n:])
        b = r.product.vector(n)
        alpha_cols.append([ci - bi for ci, bi in zip(vec[:n], b)])

    beta = RationalMatrix.from_columns(beta_cols, len(new))
    if beta.rank() < m:
        raise EnlargementError(
            f"E6: beta has rank {beta.rank()} < m = {m}; the new species do not enter nontrivially",
            _dependency(beta),
        )
    result = Network(species, tuple(reactions) + tuple(second))
    sm, rm = _identity_maps(net)
    inherited = {r.label: (r.label, 1.0) for r in net.reactions}
    return EnlargementRecord(
        E6, net, result,
        RationalMatrix.from_columns(alpha_cols, n), beta, RationalMatrix.from_columns(c_cols, n),
        sm, rm, tuple(range(net.n_reactions, result.n_reactions)), tuple(idx),
        tuple(range(n, len(species))), inherited,
        {"splits": [net.reactions[j].label for j in idx], "second_legs": [r.label for r in second]},
    )


def contract_splits(record: EnlargementRecord) -> Network:
    """Compose the two legs of every split back into one reaction."""
    if record.kind != E6:
        raise ValueError("only split records can be contracted")
    res = record.result
    n = record.base.n_species
    reactions = list(res.reactions[: record.base.n_reactions])
    for j, leg in zip(record.split_indices, record.new_reaction_indices):
        first = reactions[j]
        reactions[j] = Reaction(first.reactant, res.reactions[leg].product, first.label)
    return Network(res.species[:n], tuple(reactions))


def beta_hat_rows(beta: RationalMatrix) -> tuple[int, ...]:
    """Rows of beta forming a nonsingular m x m block, lowest indices first."""
    rows = beta.independent_rows()
    if len(rows) != beta.ncols:
        raise EnlargementError("beta does not have full column rank")
    return rows


def epsilon_exponents(record: EnlargementRecord, rows: Sequence[int] | None = None) -> tuple[Fraction, ...]:
    """Column sums sigma_i of beta-hat; second-leg i gets rate eps^(-sigma_i)."""
    if record.kind != E6:
        raise EnlargementError("rate scheduling applies to split (E6) records only")
    rows = beta_hat_rows(record.beta) if rows is None else tuple(rows)
    bh = record.beta.select_rows(rows)
    return tuple(sum(bh.column(i), Fraction(0)) for i in range(bh.ncols))


def epsilon_rate_specs(record: EnlargementRecord, rows: Sequence[int] | None = None) -> dict[str, RateSpec]:
    out = {}
    for lab, sigma in zip(record.new_labels, epsilon_exponents(record, rows)):
        if sigma.denominator != 1:
            raise EnlargementError("fractional eps exponent cannot be written as eps^INT")
        out[lab] = RateSpec(1.0, -int(sigma))
    return out


def epsilon_rate_assignment(record: EnlargementRecord, eps: float, rows: Sequence[int] | None = None) -> dict[str, float]:
    """ell_i = eps^(-sigma_i) for the m appended second legs."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    # (1/eps)**s rather than eps**-s: exact for eps = 0.1 and small integer s
    return {lab: (1.0 / eps) ** float(s) for lab, s in zip(record.new_labels, epsilon_exponents(record, rows))}


# -- Remark-style tricks -----------------------------------------------------

def duplicate_in_network(net: Network, reaction: int | str, parts: int) -> EnlargementRecord:
    """Replace a reaction by ``parts`` identical copies labelled ``<label>_1..``."""
    if parts < 1:
        raise EnlargementError("parts must be at least 1")
    j = _resolve_reaction(net, reaction)
    r = net.reactions[j]
    if parts == 1:
        return _plain_record(DUPLICATE, net, net)
    labels = set(net.labels) - {r.label}
    copies = []
    for p in range(1, parts + 1):
        lab = _fresh_label(labels, f"{r.label}_{p}")
        labels.add(lab)
        copies.append(Reaction(r.reactant, r.product, lab))
    reactions = list(net.reactions)
    reactions[j] = copies[0]
    result = Network(net.species, tuple(reactions) + tuple(copies[1:]))
    inherited = {x.label: (x.label, 1.0) for x in net.reactions if x.label != r.label}
    for c in copies:
        inherited[c.label] = (r.label, 1.0 / parts)
    return _plain_record(DUPLICATE, net, result, range(net.n_reactions, result.n_reactions),
                         inherited=inherited, details={"reaction": r.label, "parts": parts})


def duplicate_reaction(sys: MassActionSystem, reaction: int | str, parts: int) -> MassActionSystem:
    """Split one reaction into ``parts`` copies each with rate constant k/parts."""
    rec = duplicate_in_network(sys.net, reaction, parts)
    return MassActionSystem.from_mapping(rec.result, propagate_rates(rec, dict(zip(sys.net.labels, sys.rate_constants))))


def add_trivial_then_split(net: Network, complex_a: Mapping[str, Any] | str, intermediate_old, intermediate_new,
                           new_species: Sequence[str], label: str | None = None,
                           second_label: str | None = None) -> tuple[EnlargementRecord, EnlargementRecord]:
    """Add a trivial reaction a -> a and split it, giving a <-> c + beta.

    Returns the record adding the trivial reaction and the split record.
    """
    a = _named_complex(net.species, _as_mapping(complex_a))
    lab = label or _fresh_label(set(net.labels), "t1")
    if lab in net.labels:
        raise EnlargementError(f"reaction label {lab!r} already exists")
    with_trivial = Network(net.species, net.reactions + (Reaction(a, a, lab),))
    triv = _plain_record(TRIVIAL, net, with_trivial, [net.n_reactions])
    split = split_reactions(with_trivial, SplitSpec((Split(lab, intermediate_old, intermediate_new, second_label),),
                                                    tuple(new_species)))
    return triv, split


def apply_enzymatic(net: Network, reactions: Sequence[int | str], enzyme: str,
                    intermediates: Sequence[str], stoichiometry: Sequence[Any] | None = None) -> list[EnlargementRecord]:
    """Replace each a_i -> b_i by c_i E + a_i <-> I_i -> c_i E + b_i.

    Performed as E3 (enzyme on both sides), E6 (intermediates) and one E1 per
    reverse reaction, returning all records in order.
    """
    m = len(reactions)
    if m == 0:
        raise EnlargementError("no reactions given for the enzymatic mechanism")
    if len(intermediates) != m:
        raise EnlargementError("one intermediate per reaction is required")
    stoich = [Fraction(1)] * m if stoichiometry is None else [Fraction(c) for c in stoichiometry]
    if len(stoich) != m or any(c < 0 for c in stoich):
        raise EnlargementError("enzyme stoichiometries must be nonnegative, one per reaction")
    idx = [_resolve_reaction(net, r) for r in reactions]
    if len(set(idx)) != m:
        raise EnlargementError("reactions must be distinct")
    labels = [net.reactions[j].label for j in idx]
    step1 = add_dependent_species(net, enzyme, {lab: {"reactant": c, "product": c} for lab, c in zip(labels, stoich)})
    spec = SplitSpec(tuple(Split(lab, {}, {inter: 1}) for lab, inter in zip(labels, intermediates)), tuple(intermediates))
    step2 = split_reactions(step1.result, spec)
    records = [step1, step2]
    current = step2.result
    for lab in labels:
        rec = add_reverse_reactions(current, [lab])
        records.append(rec)
        current = rec.result
    return records


# -- rates -------------------------------------------------------------------

def propagate_rates(record: EnlargementRecord, rates: Mapping[str, float]) -> dict[str, float]:
    """Rates of the result network's reactions that derive from the base."""
    out = {}
    for lab, (src, factor) in record.inherited.items():
        if src in rates:
            out[lab] = rates[src] * factor
    return out


# -- scripts -----------------------------------------------------------------

def _new_reactions(items) -> list[NewReaction]:
    out = []
    for it in items:
        lhs = it.get("reactant", it.get("lhs"))
        rhs = it.get("product", it.get("rhs"))
        if lhs is None or rhs is None:
            raise EnlargementError("reaction entries need reactant/product (or lhs/rhs)")
        out.append(NewReaction(lhs, rhs, it.get("label")))
    return out


def apply_step(net: Network, step: Mapping[str, Any]) -> list[EnlargementRecord]:
    """Apply one script step given as a JSON-style dict."""
    op = step.get("op")
    if op == E1:
        records = []
        cur = net
        if step.get("reactions"):
            records.append(add_dependent_reactions(cur, _new_reactions(step["reactions"])))
            cur = records[-1].result
        if step.get("reverse"):
            records.append(add_reverse_reactions(cur, step["reverse"]))
        if not records:
            raise EnlargementError("E1 step adds nothing")
        return records
    if op == E2:
        return [fully_open(net)]
    if op == E3:
        return [add_dependent_species(net, step["species"], step.get("reactions", {}))]
    if op == E4:
        return [add_species_with_flow(net, step["species"], step.get("reactions", {}),
                                      step.get("inflow_label"), step.get("outflow_label"))]
    if op == E5:
        return [add_reversible_with_new_species(net, _new_reactions(step["reactions"]), step["new_species"])]
    if op == E6:
        splits = []
        for s in step["splits"]:
            inter_old = s.get("intermediate_old", s.get("intermediate", "0"))
            splits.append(Split(s["reaction"], inter_old, s.get("intermediate_new", "0"), s.get("label")))
        return [split_reactions(net, SplitSpec(tuple(splits), tuple(step["new_species"])))]
    if op == "enzymatic":
        items = step["reactions"]
        return apply_enzymatic(net, [it["reaction"] for it in items], step["enzyme"],
                               [it["intermediate"] for it in items], [it.get("c", 1) for it in items])
    if op == DUPLICATE:
        return [duplicate_in_network(net, step["reaction"], int(step["parts"]))]
    if op == "trivial_split":
        return list(add_trivial_then_split(net, step["complex"], step.get("intermediate_old", step.get("intermediate", "0")),
                                           step.get("intermediate_new", "0"), step["new_species"],
                                           step.get("label"), step.get("second_label")))
    if op == "sequence":
        records = []
        cur = net
        for sub in step.get("steps", []):
            recs = apply_step(cur, sub)
            records.extend(recs)
            cur = recs[-1].result
        return records or [_plain_record("identity", net, net)]
    raise EnlargementError(f"unknown enlargement op {op!r}")


def compose_enlargements(net: Network, script: Iterable[Mapping[str, Any]]) -> list[EnlargementRecord]:
    """Run a script step by step; an empty script returns no records.

    Raises:
        EnlargementError: with ``position`` set to the failing step (0-based).
    """
    records: list[EnlargementRecord] = []
    current = net
    for pos, step in enumerate(script):
        try:
            recs = apply_step(current, step)
        except EnlargementError as exc:
            exc.position = pos
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise EnlargementError(f"malformed step: {exc}", position=pos) from None
        records.extend(recs)
        current = recs[-1].result
    return records


def final_network(net: Network, records: Sequence[EnlargementRecord]) -> Network:
    return records[-1].result if records else net


def load_script(text: str) -> list[dict]:
    """Parse a JSON enlargement script (a list of steps, or {"steps": [...]})."""
    data = json.loads(text)
    if isinstance(data, dict):
        if "steps" not in data:
            raise EnlargementError("script object has no 'steps' list")
        data = data["steps"]
    if not isinstance(data, list) or not all(isinstance(s, dict) for s in data):
        raise EnlargementError("script must be a JSON list of step objects")
    return data


def chain_rates(records: Sequence[EnlargementRecord], rates: Mapping[str, float]) -> dict[str, float]:
    """Carry rate constants through a chain; new reactions are left unassigned."""
    cur = dict(rates)
    for rec in records:
        cur = propagate_rates(rec, cur)
    return cur


def describe_certificate(exc: EnlargementError) -> str:
    lines = [str(exc)]
    for k, v in exc.certificate.items():
        lines.append(f"  {k}: {v}")
    return "\n".join(lines)


def as_numpy(m: RationalMatrix) -> np.ndarray:
    return m.to_numpy()


__all__ = [
    "E1", "E2", "E3", "E4", "E5", "E6", "EnlargementError", "EnlargementRecord", "NewReaction", "Split", "SplitSpec",
    "add_dependent_reactions", "add_dependent_species", "add_reverse_reactions", "add_reversible_with_new_species",
    "add_species_with_flow", "add_trivial_then_split", "apply_enzymatic", "apply_step", "beta_hat_rows",
    "chain_rates", "compose_enlargements", "contract_splits", "duplicate_in_network", "duplicate_reaction",
    "epsilon_exponents", "epsilon_rate_assignment", "epsilon_rate_specs", "final_network", "fully_open",
    "load_script", "propagate_rates", "describe_certificate", "format_vector",
]
