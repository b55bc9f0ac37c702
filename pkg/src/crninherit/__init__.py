"""Inheritance of limit sets in enlarged chemical reaction networks."""

from .kinetics import KineticsError, MassActionSystem, ReducedBasis, reduced_basis, reduced_jacobian
from .network import (
    Complex,
    Network,
    Reaction,
    build_network,
    conservation_basis,
    is_isomorphic,
    network_rank,
    reactant_exponent_matrix,
    stoichiometric_matrix,
)
from .parser import NetworkParseError, RateSpec, parse_network, read_network, serialize_network
from .rational import RationalMatrix

__version__ = "0.1.0"

from .enlarge import (  # noqa: E402
    EnlargementError,
    EnlargementRecord,
    Split,
    SplitSpec,
    apply_enzymatic,
    compose_enlargements,
    duplicate_reaction,
    epsilon_rate_assignment,
    split_reactions,
)
from .slowfast import SlowFastModel, decompose  # noqa: E402
from .verify import InheritanceCertificate, InheritanceTask, run_inheritance  # noqa: E402
