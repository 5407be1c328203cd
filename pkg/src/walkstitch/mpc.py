"""Deterministic simulation of synchronous message-passing over machines.

Vertices are hashed to machines; computation proceeds in supersteps, each a
compute phase followed by a barrier exchange. The simulator only accounts
for communication (message and word counts per machine per round); delivery
order is canonicalized so downstream randomness never depends on arrival
order. A request+reply pair during stitching costs 2 supersteps and is
reported as a single "paper round".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .rng import splitmix64, splitmix64_array

# Superstep kinds; request/reply pairs collapse 2:1 into paper rounds.
KIND_REQUEST = "stitch-request"
KIND_REPLY = "stitch-reply"
KIND_UPDATE = "budget-update"
KIND_OTHER = "message"
_PAIRED_KINDS = (KIND_REQUEST, KIND_REPLY)


class CapacityError(RuntimeError):
    def __init__(self, machine: int, round_index: int, words: int, capacity: int):
        super().__init__(
            f"machine {machine} received {words} words in round {round_index}, "
            f"capacity {capacity}")
        self.machine = machine
        self.round_index = round_index
        self.words = words


@dataclass(frozen=True)
class ClusterConfig:
    """num_machines and a per-machine per-round word capacity.

    enforce_capacity=False records violations without failing ("report-only");
    True aborts the run on the first overflow (strict mode).
    """

    num_machines: int = 1
    machine_capacity: int = 1 << 62
    enforce_capacity: bool = False

    def __post_init__(self):
        if self.num_machines < 1:
            raise ValueError("num_machines must be >= 1")
        if self.machine_capacity < 1:
            raise ValueError("machine_capacity must be >= 1")


@dataclass
class RoundRecord:
    kind: str
    messages_sent: int
    total_words: int
    max_words_per_machine: int


@dataclass
class RoundLedger:
    rounds: List[RoundRecord] = field(default_factory=list)
    violations: List[Dict[str, int]] = field(default_factory=list)

    @property
    def superstep_count(self) -> int:
        return len(self.rounds)

    def paper_rounds(self) -> int:
        paired = sum(1 for r in self.rounds if r.kind in _PAIRED_KINDS)
        other = len(self.rounds) - paired
        return paired // 2 + other

    def max_machine_words(self) -> int:
        return max((r.max_words_per_machine for r in self.rounds), default=0)

    def transcript(self) -> Tuple[Tuple[str, int, int, int], ...]:
        """Canonical (kind, messages, words, max-machine-words) tuple per round."""
        return tuple((r.kind, r.messages_sent, r.total_words, r.max_words_per_machine)
                     for r in self.rounds)


@dataclass(frozen=True)
class Msg:
    dest: int
    sender: int
    words: int
    payload: object = None


def assign_machine(cfg: ClusterConfig, v: int) -> int:
    """Stable machine for vertex v: splitmix64(v) mod num_machines."""
    if cfg.num_machines == 1:
        return 0
    return splitmix64(int(v)) % cfg.num_machines


class Cluster:
    """A ClusterConfig plus the running ledger of exchanges."""

    def __init__(self, cfg: ClusterConfig | None = None):
        self.cfg = cfg or ClusterConfig()
        self.ledger = RoundLedger()

    def assign_machine(self, v: int) -> int:
        return assign_machine(self.cfg, v)

    def assign_machines(self, vs: np.ndarray) -> np.ndarray:
        if self.cfg.num_machines == 1:
            return np.zeros(vs.shape, dtype=np.int64)
        hashed = splitmix64_array(vs.astype(np.uint64))
        return (hashed % np.uint64(self.cfg.num_machines)).astype(np.int64)

    def exchange_bulk(self, dest: np.ndarray, sender: np.ndarray,
                      words, kind: str = KIND_OTHER) -> np.ndarray:
        """Barrier exchange over parallel message arrays.

        Returns the canonical delivery permutation: indices sorted by
        (dest, sender, submission order). Word accounting happens per
        receiving machine; strict mode raises CapacityError on overflow.
        """
        dest = np.asarray(dest)
        n_msgs = int(dest.size)
        if np.isscalar(words) or getattr(words, "ndim", 1) == 0:
            words_arr = None
            total_words = int(words) * n_msgs
        else:
            words_arr = np.asarray(words, dtype=np.int64)
            total_words = int(words_arr.sum())

        if n_msgs == 0:
            max_per_machine = 0
        elif self.cfg.num_machines == 1:
            max_per_machine = total_words
        else:
            machines = self.assign_machines(dest)
            if words_arr is None:
                loads = np.bincount(machines, minlength=self.cfg.num_machines) * int(words)
            else:
                loads = np.bincount(machines, weights=words_arr,
                                    minlength=self.cfg.num_machines).astype(np.int64)
            max_per_machine = int(loads.max())

        round_index = self.ledger.superstep_count
        self.ledger.rounds.append(RoundRecord(
            kind=kind, messages_sent=n_msgs, total_words=total_words,
            max_words_per_machine=max_per_machine))

        if max_per_machine > self.cfg.machine_capacity:
            if self.cfg.num_machines == 1:
                offender = 0
            else:
                offender = int(np.argmax(loads))
            self.ledger.violations.append(
                {"round": round_index, "machine": offender, "words": max_per_machine})
            if self.cfg.enforce_capacity:
                raise CapacityError(offender, round_index, max_per_machine,
                                    self.cfg.machine_capacity)

        if n_msgs == 0:
            return np.empty(0, dtype=np.int64)
        sender = np.asarray(sender)
        return np.lexsort((np.arange(n_msgs), sender, dest))

    def exchange(self, outbox: Sequence[Msg]) -> Dict[int, List[Msg]]:
        """Object-level exchange; groups the inbox by destination vertex in
        canonical (sender, sequence-number) order."""
        dest = np.array([m.dest for m in outbox], dtype=np.int64)
        sender = np.array([m.sender for m in outbox], dtype=np.int64)
        words = np.array([m.words for m in outbox], dtype=np.int64)
        order = self.exchange_bulk(dest, sender, words if outbox else 0)
        inbox: Dict[int, List[Msg]] = {}
        for i in order:
            msg = outbox[int(i)]
            inbox.setdefault(msg.dest, []).append(msg)
        return inbox

    def report(self) -> dict:
        """Ledger counters in the run-metrics JSON fragment shape."""
        return {
            "supersteps": self.ledger.superstep_count,
            "paper_rounds": self.ledger.paper_rounds(),
            "max_machine_words": self.ledger.max_machine_words(),
            "violations": list(self.ledger.violations),
            "rounds": [
                {"kind": r.kind, "messages_sent": r.messages_sent,
                 "total_words": r.total_words,
                 "max_words_per_machine": r.max_words_per_machine}
                for r in self.ledger.rounds
            ],
        }
