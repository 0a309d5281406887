"""Round-based simulation of the compiled auction, its attack suite and the
honest-execution equivalence check."""

from ..outcome import LengthMismatch, xor_coin
from .network import Blockchain, ConfigInvalid, ProtocolConfig
from .attacks import AttackCase, attack_by_name, attack_suite
from .equivalence import EquivalenceReport, coupled_run, honest_equivalence, outcome_marginals
from .protocol import Adversary, IdentityHijack, ProtocolTrace, Submission, run_protocol

__all__ = [
    "Adversary", "AttackCase", "Blockchain", "EquivalenceReport", "attack_by_name", "attack_suite",
    "coupled_run", "honest_equivalence", "outcome_marginals", "ConfigInvalid", "IdentityHijack", "LengthMismatch",
    "ProtocolConfig", "ProtocolTrace", "Submission", "run_protocol", "xor_coin",
]
