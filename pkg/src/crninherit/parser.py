"""Line-oriented network file format.

One reaction per line::

    species: X, Y, Z            # optional, pins species order
    X + Y -> 2 Y @ k1 k=0.5
    Z + 2 U -> 2 Y @ k1' k=eps^-2
    A <-> B @ ab k=1,2          # forward then reverse
    0 -> X

A complex is ``0`` or ``coeff? NAME (+ coeff? NAME)*`` with coefficients given as
nonnegative decimals or fractions ``p/q``.  Everything after ``#`` is a comment.
After ``@`` come a label and/or ``k=VALUE`` where VALUE is a positive number,
``eps^INT`` or ``NUMBER*eps^INT``.  Reversible lines take ``k=FWD,REV`` and the
reverse reaction is labelled ``<label>_rev``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .network import Complex, Network, Reaction

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-'\[\]:]*")
_COEFF = re.compile(r"\d+(?:\.\d+)?(?:/\d+)?|\.\d+")
_LABEL = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-'\[\]:]*$")
_ARROW = re.compile(r"<->|->")
_RATE = re.compile(
    r"^(?:(?P<coef>[0-9.]+(?:[eE][-+]?\d+)?)\*)?eps\^(?P<pow>[-+]?\d+)$|^(?P<num>[0-9.]+(?:[eE][-+]?\d+)?)$"
)


class NetworkParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


@dataclass(frozen=True)
class RateSpec:
    """A positive rate constant, optionally a power of the small parameter eps."""

    coefficient: float
    eps_power: int | None = None

    def resolve(self, eps: float | None = None) -> float:
        if self.eps_power is None:
            return self.coefficient
        if eps is None:
            raise ValueError("rate depends on eps but no eps value was bound")
        if eps <= 0:
            raise ValueError("eps must be positive")
        if self.eps_power < 0:
            return self.coefficient * (1.0 / eps) ** -self.eps_power
        return self.coefficient * eps**self.eps_power

    def format(self) -> str:
        if self.eps_power is None:
            return _fmt_float(self.coefficient)
        base = f"eps^{self.eps_power}"
        return base if self.coefficient == 1 else f"{_fmt_float(self.coefficient)}*{base}"


def _fmt_float(x: float) -> str:
    return repr(float(x))


def parse_rate_value(text: str) -> RateSpec:
    m = _RATE.match(text.strip())
    if not m:
        raise ValueError(f"malformed rate value {text!r}")
    if m.group("num") is not None:
        value = float(m.group("num"))
        if not value > 0:
            raise ValueError(f"rate constant must be positive, got {text!r}")
        return RateSpec(value)
    coef = float(m.group("coef")) if m.group("coef") else 1.0
    if not coef > 0:
        raise ValueError(f"rate coefficient must be positive, got {text!r}")
    return RateSpec(coef, int(m.group("pow")))


def _parse_complex(text: str, line: int, col0: int, species: list[str], index: dict[str, int]) -> Complex:
    stripped = text.strip()
    if not stripped:
        raise NetworkParseError("empty complex (write 0 for the empty complex)", line, col0 + 1)
    if stripped == "0":
        return Complex()
    coeffs: dict[int, Fraction] = {}
    pos = 0
    for term in text.split("+"):
        start = pos
        pos += len(term) + 1
        lead = len(term) - len(term.lstrip())
        body = term.strip()
        col = col0 + start + lead + 1
        if not body:
            raise NetworkParseError("missing term around '+'", line, col)
        if body.startswith("-"):
            raise NetworkParseError("negative coefficient", line, col)
        coeff = Fraction(1)
        if body[0].isdigit() or body[0] == ".":
            m = _COEFF.match(body)
            if m is None:
                raise NetworkParseError(f"malformed coefficient in {body!r}", line, col)
            if m.end() == len(body):
                raise NetworkParseError(f"coefficient {body!r} without species", line, col)
            coeff = Fraction(m.group(0))
            rest = body[m.end():]
            col += m.end() + (len(rest) - len(rest.lstrip()))
            body = rest.strip()
        nm = _NAME.fullmatch(body)
        if not nm:
            raise NetworkParseError(f"invalid species name {body!r}", line, col)
        name = nm.group(0)
        if name not in index:
            index[name] = len(species)
            species.append(name)
        if coeff:
            coeffs[index[name]] = coeffs.get(index[name], Fraction(0)) + coeff
    return Complex.from_mapping(coeffs)


def read_network(text: str) -> tuple[Network, dict[str, RateSpec]]:
    """Parse a network file, returning the network and any inline rate constants."""
    species: list[str] = []
    index: dict[str, int] = {}
    pending: list[tuple[Complex, Complex, str | None, RateSpec | None, int]] = []
    explicit: dict[str, int] = {}
    saw_reaction_species = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.lstrip().lower().startswith("species:"):
            if saw_reaction_species:
                raise NetworkParseError("species declaration must precede reactions", lineno, 1)
            body = line.split(":", 1)[1]
            offset = line.index(":") + 1
            for name in body.split(","):
                n = name.strip()
                col = offset + body.find(name) + 1
                if not n:
                    continue
                if not _NAME.fullmatch(n):
                    raise NetworkParseError(f"invalid species name {n!r}", lineno, col)
                if n in index:
                    raise NetworkParseError(f"species {n!r} declared twice", lineno, col)
                index[n] = len(species)
                species.append(n)
            continue

        head, _, tail = line.partition("@")
        arrow = _ARROW.search(head)
        if arrow is None:
            raise NetworkParseError("expected '->' or '<->'", lineno, len(head.rstrip()) + 1)
        if _ARROW.search(head, arrow.end()):
            raise NetworkParseError("more than one arrow on a line", lineno, _ARROW.search(head, arrow.end()).start() + 1)
        saw_reaction_species = True
        lhs = _parse_complex(head[: arrow.start()], lineno, 0, species, index)
        rhs = _parse_complex(head[arrow.end():], lineno, arrow.end(), species, index)
        reversible = arrow.group(0) == "<->"

        label = None
        rates: list[RateSpec] = []
        if _:
            col = len(head) + 2
            for tok in tail.split():
                tcol = col + tail.find(tok)
                if tok.startswith("k="):
                    try:
                        rates = [parse_rate_value(v) for v in tok[2:].split(",")]
                    except ValueError as exc:
                        raise NetworkParseError(str(exc), lineno, tcol) from None
                elif _LABEL.match(tok):
                    if label is not None:
                        raise NetworkParseError("more than one label", lineno, tcol)
                    label = tok
                else:
                    raise NetworkParseError(f"unexpected token {tok!r} after '@'", lineno, tcol)
        expected = 2 if reversible else 1
        if rates and len(rates) != expected:
            raise NetworkParseError(f"expected {expected} rate value(s), got {len(rates)}", lineno, len(head) + 2)

        entries = [(lhs, rhs, label)]
        if reversible:
            entries.append((rhs, lhs, None if label is None else f"{label}_rev"))
        for k, (a, b, lab) in enumerate(entries):
            if lab is not None:
                if lab in explicit:
                    raise NetworkParseError(f"duplicate reaction label {lab!r}", lineno, len(head) + 2)
                explicit[lab] = lineno
            pending.append((a, b, lab, rates[k] if rates else None, lineno))

    if not pending:
        raise NetworkParseError("network file contains no reactions", 1, 1)

    reactions = []
    rate_map: dict[str, RateSpec] = {}
    counter = 0
    for a, b, lab, rate, _lineno in pending:
        counter += 1
        if lab is None:
            lab = f"r{counter}"
            while lab in explicit:
                counter += 1
                lab = f"r{counter}"
            explicit[lab] = _lineno
        reactions.append(Reaction(a, b, lab))
        if rate is not None:
            rate_map[lab] = rate
    return Network(tuple(species), tuple(reactions)), rate_map


def parse_complex(text: str) -> dict[str, Fraction]:
    """Parse a single complex such as ``Z + 2 U`` into a name-keyed mapping."""
    species: list[str] = []
    index: dict[str, int] = {}
    cplx = _parse_complex(text, 1, 0, species, index)
    return {species[i]: c for i, c in cplx.terms}


def parse_network(text: str) -> Network:
    return read_network(text)[0]


def serialize_network(net: Network, rates: Mapping[str, RateSpec | float] | None = None) -> str:
    """Canonical text form; parsing it back yields the same network."""
    lines = ["species: " + ", ".join(net.species)]
    for r in net.reactions:
        line = f"{r.format(net.species)} @ {r.label}"
        if rates and r.label in rates:
            spec = rates[r.label]
            if not isinstance(spec, RateSpec):
                spec = RateSpec(float(spec))
            line += f" k={spec.format()}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_rate_file(text: str) -> dict[str, RateSpec]:
    """Key-value rate file: ``label = value`` per line."""
    out: dict[str, RateSpec] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise NetworkParseError("expected 'label = value'", lineno, 1)
        label, value = (s.strip() for s in line.split("=", 1))
        if label in out:
            raise NetworkParseError(f"duplicate rate for {label!r}", lineno, 1)
        try:
            out[label] = parse_rate_value(value)
        except ValueError as exc:
            raise NetworkParseError(str(exc), lineno, raw.index("=") + 2) from None
    return out
