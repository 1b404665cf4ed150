"""Context sensitivity for the global analysis.

A context pairs the most recent public entry point with a bounded stack of
private call sites. The shrinking scheme pops that stack back down when a
return is provably matched to a call site still on it, so recursion-free
call chains end in the same context they started in. The transactional
scheme only ever prepends, which keeps contexts long-lived and is retained
as the comparison baseline.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .facts import ConfirmedFacts


class Scheme(enum.Enum):
    SHRINKING = "shrinking"
    SHRINKING_IMPORTANT = "shrinking+important-edges"
    TRANSACTIONAL = "transactional"


DEFAULT_DEPTH: dict[Scheme, int] = {
    Scheme.SHRINKING: 20,
    Scheme.SHRINKING_IMPORTANT: 20,
    Scheme.TRANSACTIONAL: 8,
}


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme
    depth: int

    @classmethod
    def default(cls, scheme: Scheme) -> "SchemeConfig":
        return cls(scheme, DEFAULT_DEPTH[scheme])


@dataclass(frozen=True)
class Context:
    """public is the active function entry block; private lists call sites,
    most recent first, never longer than the configured depth."""

    public: int | None
    private: tuple[int, ...]

    def __str__(self) -> str:
        pub = "-" if self.public is None else f"0x{self.public:x}"
        return f"<{pub}|{','.join(f'0x{c:x}' for c in self.private)}>"


INITIAL_CONTEXT = Context(None, ())


def cut_to(private: tuple[int, ...], call_site: int) -> tuple[int, ...]:
    """Drop everything up to and including the matched call site."""
    return private[private.index(call_site) + 1 :]


def merge(
    cfg: SchemeConfig,
    facts: ConfirmedFacts,
    ctx: Context,
    cur: int,
    nxt: int,
) -> Context:
    if cfg.scheme is Scheme.TRANSACTIONAL:
        return _merge_transactional(cfg, facts, ctx, cur, nxt)
    return _merge_shrinking(cfg, facts, ctx, cur, nxt)


def _merge_shrinking(
    cfg: SchemeConfig,
    facts: ConfirmedFacts,
    ctx: Context,
    cur: int,
    nxt: int,
) -> Context:
    if (cur, nxt) in facts.public_calls:
        return Context(nxt, ctx.private)
    is_return = cur in facts.private_returns
    matched = None
    if is_return:
        matched = next((c for c in ctx.private if (c, nxt) in facts.private_calls), None)
    grow = (
        cur in facts.private_callers
        or (is_return and matched is None)
        or (cfg.scheme is Scheme.SHRINKING_IMPORTANT and (cur, nxt) in facts.important_edges)
    )
    if grow:
        return Context(ctx.public, ((cur,) + ctx.private)[: cfg.depth])
    if is_return:
        return Context(ctx.public, cut_to(ctx.private, matched))
    return ctx


def _merge_transactional(
    cfg: SchemeConfig,
    facts: ConfirmedFacts,
    ctx: Context,
    cur: int,
    nxt: int,
) -> Context:
    if (cur, nxt) in facts.public_calls:
        return Context(nxt, ctx.private)
    if cur in facts.private_callers or cur in facts.private_returns:
        return Context(ctx.public, ((cur,) + ctx.private)[: cfg.depth])
    return ctx
