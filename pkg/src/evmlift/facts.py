"""Call-structure facts shared between the pattern detectors and the analyses."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property


@dataclass(frozen=True)
class PatternFacts:
    """Raw, unverified pattern-detector output for one program.

    public_call_candidates:  (block, selector, target) triples
    private_call_candidates: (caller, continuation, push_pc) triples
    private_returns:         blocks jumping to an entry-stack value
    stack_balancing:         blocks made only of stack shuffles plus a final JUMP
    """

    public_call_candidates: frozenset[tuple[int, int, int]] = frozenset()
    private_call_candidates: frozenset[tuple[int, int, int]] = frozenset()
    private_returns: frozenset[int] = frozenset()
    stack_balancing: frozenset[int] = frozenset()


@dataclass(frozen=True)
class ConfirmedFacts:
    """Call facts driving context merges, after any pre-analysis filtering.

    public_calls:  (dispatch block, function entry) pairs
    private_calls: (caller block, continuation block) pairs
    """

    public_calls: frozenset[tuple[int, int]] = frozenset()
    private_calls: frozenset[tuple[int, int]] = frozenset()
    private_returns: frozenset[int] = frozenset()
    important_edges: frozenset[tuple[int, int]] = frozenset()

    @cached_property
    def private_callers(self) -> frozenset[int]:
        return frozenset(caller for caller, _ in self.private_calls)


def raw_confirmed(candidates: PatternFacts) -> ConfirmedFacts:
    """Project candidates into call facts without any filtering."""
    return ConfirmedFacts(
        public_calls=frozenset((b, t) for b, _s, t in candidates.public_call_candidates),
        private_calls=frozenset((b, c) for b, c, _p in candidates.private_call_candidates),
        private_returns=candidates.private_returns,
    )
