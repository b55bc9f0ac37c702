"""Helpers and hypothesis strategies shared by the test modules."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from crninherit.corpus import load_network, script_text
from crninherit.enlarge import E6, compose_enlargements, load_script
from crninherit.kinetics import MassActionSystem
from crninherit.network import build_network


def system_with_rates(name: str, eps: float = 0.1, seed: int = 0) -> MassActionSystem:
    """Fixture network with its inline rates; labels without one get a seeded rate in [0.5, 2]."""
    net, specs = load_network(name)
    rng = np.random.default_rng(seed)
    rates = {lab: (specs[lab].resolve(eps) if lab in specs else float(rng.uniform(0.5, 2.0))) for lab in net.labels}
    return MassActionSystem.from_mapping(net, rates)


def fd_jacobian(f, x, h: float = 1e-6) -> np.ndarray:
    """Central differences with a step scaled to each coordinate."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        cols.append((f(x + e) - f(x - e)) / (2 * step))
    return np.column_stack(cols)


def split_record(base: str, script: str):
    """The last E6 record of a bundled script applied to a bundled network."""
    net, _ = load_network(base)
    records = compose_enlargements(net, load_script(script_text(script)))
    return [r for r in records if r.kind == E6][-1]


def int_rank(rows) -> int:
    """Independent float oracle for the rank of a small integer matrix."""
    a = np.asarray(rows, dtype=float)
    return 0 if a.size == 0 else int(np.linalg.matrix_rank(a))


@st.composite
def networks(draw, min_species=2, max_species=4, max_reactions=5):
    """Small random networks with coefficients in {0, 1, 2}."""
    n = draw(st.integers(min_species, max_species))
    r = draw(st.integers(1, max_reactions))
    species = [f"S{i}" for i in range(n)]
    coeff = st.lists(st.integers(0, 2), min_size=n, max_size=n)
    reactions = []
    for j in range(r):
        a, b = draw(coeff), draw(coeff)
        reactions.append(({s: c for s, c in zip(species, a) if c},
                          {s: c for s, c in zip(species, b) if c}, f"r{j + 1}"))
    return build_network(species, reactions)
