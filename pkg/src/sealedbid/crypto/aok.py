"""Argument-of-knowledge backends for the outcome relation.

The shipped backend is transparent: the proof is the witness itself and
verification re-runs the relation checker. It is complete and trivially
knowledge-sound but not succinct. Any object with the same
``gen``/``prove``/``verify`` methods can replace it.
"""

from __future__ import annotations

from typing import Protocol

from .relation import Context, RelationResult, Statement, Witness, check_relation


class AokBackend(Protocol):
    def gen(self) -> object: ...

    def prove(self, crs, statement: Statement, witness: Witness) -> object: ...

    def verify(self, crs, statement: Statement, proof) -> bool: ...


class TransparentAoK:
    """proof = witness; verify = check_relation.

    Verdicts are memoised per instance on ``(statement, id(proof))``, so
    one run that hands the same proof to every player checks it once.
    """

    def __init__(self, ctx: Context, rules):
        self.ctx = ctx
        self.rules = rules
        self._memo: dict[tuple[Statement, int], RelationResult] = {}
        self._keep: list = []

    def gen(self) -> None:
        return None

    def prove(self, crs, statement: Statement, witness: Witness) -> Witness:
        return witness

    def check(self, statement: Statement, proof) -> RelationResult:
        if not isinstance(proof, Witness):
            return RelationResult(False, "proof is not a witness")
        key = (statement, id(proof))
        if key not in self._memo:
            self._memo[key] = check_relation(self.ctx, statement, proof, self.rules)
            self._keep.append(proof)  # keeps id(proof) from being reused
        return self._memo[key]

    def verify(self, crs, statement: Statement, proof) -> bool:
        return self.check(statement, proof).ok
