"""Access to the bundled example networks, scripts and tasks."""

from __future__ import annotations

from pathlib import Path

from .kinetics import MassActionSystem
from .network import Network
from .parser import RateSpec, read_network

FIXTURES = Path(__file__).resolve().parent / "fixtures"

NETWORKS = ("R1", "R2", "R3", "R4", "erk_reduced", "erk_full", "mapk_reduced", "mapk_dependent", "mapk_full")


def resolve(name: str | Path, base_dir: str | Path | None = None, suffix: str = ".net") -> Path:
    """Find a file by path, relative to ``base_dir``, or by bundled fixture name.

    Raises:
        FileNotFoundError: nothing matches.
    """
    p = Path(name)
    candidates = [p]
    if base_dir is not None and not p.is_absolute():
        candidates.append(Path(base_dir) / p)
    candidates += [FIXTURES / p, FIXTURES / f"{p}{suffix}"]
    for c in candidates:
        if c.is_file():
            return c
    raise FileNotFoundError(f"no such file or fixture: {name}")


def load_network(name: str | Path, base_dir=None) -> tuple[Network, dict[str, RateSpec]]:
    return read_network(resolve(name, base_dir).read_text(encoding="utf-8"))


def load_system(name: str | Path, eps: float | None = None, overrides: dict | None = None) -> MassActionSystem:
    """A fixture network with its inline rates, eps bound where needed."""
    net, specs = load_network(name)
    rates = {lab: spec.resolve(eps) for lab, spec in specs.items()}
    rates.update(overrides or {})
    return MassActionSystem.from_mapping(net, rates)


def script_text(name: str | Path, base_dir=None) -> str:
    p = Path(name)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    try:
        path = resolve(Path("scripts") / p, base_dir, ".json")
    except FileNotFoundError:
        path = resolve(p, base_dir, ".json")
    return path.read_text(encoding="utf-8")
