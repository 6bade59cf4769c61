"""Feasibility and optimal-matching routines for bidder-weighted bipartite graphs.

Weights sit on bidders rather than edges: a bidder contributes its weight to a
matching no matter which slot of its choice set it receives. Feasible bidder
sets therefore form a transversal matroid, and the greedy algorithm (heaviest
first, insert while still matchable) is exactly optimal.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .core import Bidder, dummy_for


def _augment(b: Bidder, owner: dict, seen: set) -> bool:
    for s in b.choice_set:
        if s in seen:
            continue
        seen.add(s)
        holder = owner.get(s)
        if holder is None or _augment(holder, owner, seen):
            owner[s] = b
            return True
    return False


def _restrict(bidders: Iterable[Bidder], slots: Iterable[str] | None) -> list[Bidder]:
    if slots is None:
        return list(bidders)
    allowed = set(slots)
    return [b if set(b.choice_set) <= allowed else replace(b, choice_set=tuple(s for s in b.choice_set if s in allowed))
            for b in bidders]


def find_matching(bidders: Iterable[Bidder], slots: Iterable[str] | None = None) -> dict[str, str] | None:
    """Slot -> bidder id assignment covering every bidder, or None if impossible."""
    owner: dict[str, Bidder] = {}
    for b in _restrict(bidders, slots):
        if not _augment(b, owner, set()):
            return None
    return {s: b.id for s, b in owner.items()}


def can_match(bidders: Iterable[Bidder], slots: Iterable[str] | None = None) -> bool:
    """True iff the bidders admit a system of distinct representatives."""
    return find_matching(bidders, slots) is not None


def max_weight_matching(
    bidders: Sequence[Bidder],
    slots: Iterable[str] | None = None,
    weights: Mapping[str, float] | None = None,
    required: Iterable[str] = (),
) -> tuple[dict[str, str], float]:
    """Maximum-weight matching; returns (slot -> bidder id, total weight).

    Bidders are considered heaviest first, ties by smaller id, so the optimum
    returned is deterministic. ``required`` ids are inserted before anything
    else, which yields the best matching forced to contain them (they must be
    matchable together).
    """
    w = {b.id: b.bid for b in bidders} if weights is None else weights
    bidders = _restrict(bidders, slots)
    forced = set(required)
    order = sorted(bidders, key=lambda b: (b.id not in forced, -w[b.id], b.id))
    owner: dict[str, Bidder] = {}
    chosen = []
    for b in order:
        trial = dict(owner)
        if _augment(b, trial, set()):
            owner = trial
            chosen.append(b.id)
        elif b.id in forced:
            raise ValueError(f"required bidders cannot be matched together (failed at {b.id!r})")
    return {s: b.id for s, b in owner.items()}, math.fsum(w[i] for i in chosen)


@dataclass
class MatchState:
    """The alive set as a perfect matching slot -> bidder, dummies included."""

    assignment: dict[str, Bidder]

    @classmethod
    def initial(cls, slots: Sequence[str]) -> "MatchState":
        return cls({s: dummy_for(s, slots) for s in slots})

    @property
    def alive(self) -> set[str]:
        return {b.id for b in self.assignment.values()}

    def copy(self) -> "MatchState":
        return MatchState(dict(self.assignment))

    def check(self) -> None:
        ids = [b.id for b in self.assignment.values()]
        assert len(ids) == len(set(ids)), "bidder matched twice"
        for s, b in self.assignment.items():
            assert b.is_dummy or s in b.choice_set, f"{b.id} sits on {s} outside its choice set"


def alternating_reach(state: MatchState, t: Bidder) -> dict[str, str | None]:
    """Slots reachable from N(t) along alternating paths.

    Maps each reached slot to the slot its holder would vacate to let the
    newcomer's chain in (None for slots of N(t) itself). The holder of any
    reached slot can be removed in exchange for ``t``.
    """
    reached: dict[str, str | None] = {}
    queue = deque()
    for s in t.choice_set:
        if s in state.assignment and s not in reached:
            reached[s] = None
            queue.append(s)
    while queue:
        s = queue.popleft()
        holder = state.assignment[s]
        for s2 in holder.choice_set:
            if s2 not in reached:
                reached[s2] = s
                queue.append(s2)
    return reached


def exchange_set(state: MatchState, t: Bidder) -> set[str]:
    """Alive bidders b such that alive + t - b can still be matched."""
    return {state.assignment[s].id for s in alternating_reach(state, t)}


def exchange_set_naive(state: MatchState, t: Bidder) -> set[str]:
    alive = list(state.assignment.values())
    slots = list(state.assignment)
    return {b.id for b in alive if can_match([x for x in alive if x.id != b.id] + [t], slots)}


def exchange(state: MatchState, t: Bidder, out_id: str) -> tuple[MatchState, list[tuple[str, str | None, str | None]]]:
    """Swap ``t`` in and ``out_id`` out, shifting holders along one alternating path.

    Returns the new state and the moves as (bidder id, from slot, to slot).
    """
    reached = alternating_reach(state, t)
    end = next((s for s in reached if state.assignment[s].id == out_id), None)
    if end is None:
        raise ValueError(f"{out_id!r} is not exchangeable for {t.id!r}")
    path = [end]
    while reached[path[-1]] is not None:
        path.append(reached[path[-1]])
    path.reverse()  # path[0] in N(t); holder of path[k] moves to path[k+1]
    new = dict(state.assignment)
    moves = [(out_id, end, None)]
    for a, b in zip(path, path[1:]):
        new[b] = state.assignment[a]
        moves.append((state.assignment[a].id, a, b))
    new[path[0]] = t
    moves.append((t.id, None, path[0]))
    return MatchState(new), moves
