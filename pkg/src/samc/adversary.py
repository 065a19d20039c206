"""Adversaries: deterministic resolution of nondeterministic edge choice.

When one expiring clock enables several edges, an adversary picks the edge.
The general contract receives the location history, but the concrete policies
shipped here are memoryless, which is what the matrix engine and the
vectorised simulator require.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .automaton import Edge

__all__ = [
    "Adversary",
    "FirstEdge",
    "StaticPolicy",
    "MissingPolicy",
    "ConflictingPolicy",
    "PolicyParseError",
    "load_policy",
    "builtin_adversary",
]


class MissingPolicy(Exception):
    """No applicable choice for a (location, clock) with several candidates."""


class ConflictingPolicy(Exception):
    """Two different actions declared for the same (location, clock)."""


class PolicyParseError(Exception):
    pass


class Adversary:
    """Behavioural contract: pick one edge from the enabled candidates."""

    memoryless: bool = False

    def resolve(
        self,
        history: Sequence[str],
        current: str,
        expiring: str,
        candidates: Sequence[Edge],
    ) -> Edge:
        raise NotImplementedError

    @staticmethod
    def _check(current: str, expiring: str, candidates: Sequence[Edge]) -> None:
        if not candidates:
            raise ValueError("candidate edge list is empty")
        for edge in candidates:
            if edge.source != current or edge.trigger_clock != expiring:
                raise ValueError(f"candidate {edge} does not match ({current}, {expiring})")


class FirstEdge(Adversary):
    """Always picks the lexicographically first candidate by action name."""

    memoryless = True

    def resolve(self, history, current, expiring, candidates):
        self._check(current, expiring, candidates)
        return min(candidates, key=lambda e: e.action)

    def __repr__(self):
        return "FirstEdge()"


@dataclass(frozen=True)
class StaticPolicy(Adversary):
    """A memoryless map (location, clock) -> action."""

    table: tuple  # ((location, clock), action) pairs

    memoryless = True

    @property
    def _map(self) -> dict:
        return dict(self.table)

    def resolve(self, history, current, expiring, candidates):
        self._check(current, expiring, candidates)
        if len(candidates) == 1:
            return candidates[0]
        action = self._map.get((current, expiring))
        if action is None:
            raise MissingPolicy(f"no policy entry for ({current}, {expiring})")
        for edge in candidates:
            if edge.action == action:
                return edge
        raise MissingPolicy(
            f"policy action {action!r} is not enabled at ({current}, {expiring})"
        )


def load_policy(text: str) -> StaticPolicy:
    """Parse lines of the form ``<location> <clock> -> <action>``."""
    entries: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("->")
        if len(parts) != 2:
            raise PolicyParseError(f"line {ln}: expected '<location> <clock> -> <action>'")
        head = parts[0].split()
        action = parts[1].strip()
        if len(head) != 2 or not action:
            raise PolicyParseError(f"line {ln}: expected '<location> <clock> -> <action>'")
        key = (head[0], head[1])
        if key in entries and entries[key] != action:
            raise ConflictingPolicy(f"line {ln}: conflicting actions for {key}")
        entries[key] = action
    return StaticPolicy(tuple(sorted(entries.items())))


def builtin_adversary(name: str) -> Adversary:
    if name == "first-edge":
        return FirstEdge()
    raise ValueError(f"unknown built-in adversary {name!r}")
