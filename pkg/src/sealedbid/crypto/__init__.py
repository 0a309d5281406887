"""Desk-scale cryptographic building blocks for the compiled auction."""

from .aok import TransparentAoK
from .merkle import MerkleProof, VcCrs, vc_digest, vc_gen, vc_open, vc_vf
from .nitc import (
    DecryptionInconsistent,
    ForcedOpening,
    MalformedCommitment,
    NitcCrs,
    Opening,
    TimedCommitment,
    cached_gen as nitc_cached_gen,
    com as nitc_com,
    com_vf as nitc_com_vf,
    dec_vf as nitc_dec_vf,
    fdec as nitc_fdec,
    fdec_vf as nitc_fdec_vf,
    gen as nitc_gen,
)
from .por import ChallengeTooLarge, por_challenge, por_respond, por_verify
from .relation import Context, Statement, Witness, WitnessEntry, check_relation
from .rs import InsufficientSymbols, RsCodeword, rs_encode, rs_recons

__all__ = [
    "ChallengeTooLarge", "Context", "DecryptionInconsistent", "ForcedOpening",
    "InsufficientSymbols", "MalformedCommitment", "MerkleProof", "NitcCrs", "Opening",
    "RsCodeword", "Statement", "TimedCommitment", "TransparentAoK", "VcCrs", "Witness",
    "WitnessEntry", "check_relation", "nitc_cached_gen", "nitc_com", "nitc_com_vf",
    "nitc_dec_vf", "nitc_fdec", "nitc_fdec_vf", "nitc_gen", "por_challenge", "por_respond",
    "por_verify", "rs_encode", "rs_recons", "vc_digest", "vc_gen", "vc_open", "vc_vf",
]
