"""Execution records shared by the ascending auction and the compiled protocol."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .outcome import AuctionOutcome

PLATFORM = "platform"
BROADCAST = "broadcast"

Party = Union[int, str]


@dataclass
class Message:
    round: int
    sender: Party
    receiver: Party
    step: str
    payload: Any = None

    def payload_bytes(self) -> bytes:
        p = self.payload
        if p is None:
            return b""
        if isinstance(p, (bytes, bytearray)):
            return bytes(p)
        if isinstance(p, str):
            return p.encode()
        return json.dumps(p, sort_keys=True, default=str).encode()

    def record(self, full: bool = False) -> dict:
        raw = self.payload_bytes()
        rec = {
            "round": self.round,
            "from": self.sender,
            "to": self.receiver,
            "step": self.step,
            "payload_digest": hashlib.sha256(raw).hexdigest(),
        }
        if full:
            rec["payload"] = raw.hex()
        return rec


@dataclass
class ExecutionTrace:
    """Messages, per-player decisions and outcomes of one run.

    ``decisions`` maps every player (buyer ids, ``0`` for the seller and
    ``"platform"``) to accept/reject. ``honest`` lists the players whose
    decisions define safety.
    """

    messages: list[Message] = field(default_factory=list)
    decisions: dict[Party, bool] = field(default_factory=dict)
    private_outcomes: dict[Party, Any] = field(default_factory=dict)
    outcome: Optional[AuctionOutcome] = None
    honest: set = field(default_factory=set)
    notes: list[str] = field(default_factory=list)

    def send(self, rnd: int, sender: Party, receiver: Party, step: str, payload=None) -> Message:
        msg = Message(rnd, sender, receiver, step, payload)
        self.messages.append(msg)
        return msg

    def reject(self, player: Party, reason: str) -> None:
        if self.decisions.get(player, True):
            self.notes.append(f"{player} rejects: {reason}")
        self.decisions[player] = False

    @property
    def safe(self) -> bool:
        return all(self.decisions.get(p, False) for p in self.honest)

    def accepted(self, player: Party) -> bool:
        return self.decisions.get(player, False)

    def to_jsonl(self, full: bool = False) -> str:
        lines = [json.dumps(m.record(full), sort_keys=True) for m in self.messages]
        trailer = {
            "decisions": {str(k): v for k, v in sorted(self.decisions.items(), key=lambda kv: str(kv[0]))},
            "outcome": self.outcome.to_json() if self.outcome is not None else None,
            "safe": self.safe,
        }
        lines.append(json.dumps({"trailer": trailer}, sort_keys=True))
        return "\n".join(lines) + "\n"


def read_jsonl(text: str) -> tuple[list[dict], dict]:
    """Parse an exported trace back into (message records, trailer)."""
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not records or "trailer" not in records[-1]:
        raise ValueError("trace has no trailer record")
    return records[:-1], records[-1]["trailer"]
