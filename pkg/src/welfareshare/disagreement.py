"""Reference-point mechanisms: Uniform, Random Priority, Eating.

Random Priority averages serial dictatorship over all agent orders.  Ties in
an agent's top remaining items are handled by putting the agent on hold;
held agents are released in minimal tight groups (a group of held agents
whose desired items number exactly the group size), and leftover holds are
resolved at the end of the order by a lexicographically smallest matching.
Within any tight group each member receives an item she is indifferent
about, so utilities do not depend on which matching is used.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Dict, List, Sequence, Tuple

from .model import (
    BoundExceededError,
    DisagreementPoint,
    Instance,
    MatchingInstance,
    enumeration_bound,
)


def uniform(inst) -> DisagreementPoint:
    """Mean utility over items (matching) or alternatives (general)."""
    if isinstance(inst, MatchingInstance):
        k = inst.n_items
    elif isinstance(inst, Instance):
        k = inst.n_alternatives
    else:
        raise TypeError("expected Instance or MatchingInstance")
    utils = tuple(sum(row, Fraction(0)) / k for row in inst.values)
    return DisagreementPoint(utilities=utils, provenance="uniform")


def _has_row_ties(values) -> bool:
    return any(len(set(row)) != len(row) for row in values)


def _lex_perfect_matching(agents: Sequence[int], desired: Dict[int, frozenset]):
    """Lexicographically smallest perfect matching: agents in ascending
    order each take their smallest desired item that keeps the rest
    matchable.  Returns {agent: item}."""

    def matchable(rest: List[int], taken: set) -> bool:
        match: Dict[int, int] = {}

        def augment(a, seen):
            for j in sorted(desired[a]):
                if j in taken or j in seen:
                    continue
                seen.add(j)
                if j not in match or augment(match[j], seen):
                    match[j] = a
                    return True
            return False

        return all(augment(a, set()) for a in rest)

    result: Dict[int, int] = {}
    taken: set = set()
    order = sorted(agents)
    for pos, a in enumerate(order):
        rest = order[pos + 1 :]
        for j in sorted(desired[a]):
            if j in taken:
                continue
            if matchable(rest, taken | {j}):
                result[a] = j
                taken.add(j)
                break
        else:
            raise AssertionError("no perfect matching for held agents")
    return result


def _serial_assignment(values, order: Sequence[int], m: int) -> List[int]:
    """One serial-dictatorship pass; returns item index per agent."""
    n = len(values)
    remaining = set(range(m))
    assignment: List[int] = [-1] * n
    held: Dict[int, frozenset] = {}

    def desired_of(i) -> frozenset:
        row = values[i]
        top = max(row[j] for j in remaining)
        return frozenset(j for j in remaining if row[j] == top)

    def assign(match: Dict[int, int]):
        for a, j in match.items():
            assignment[a] = j
            remaining.discard(j)
            held.pop(a, None)
        for a in list(held):
            held[a] = desired_of(a)

    def release_tight():
        progress = True
        while progress and held:
            progress = False
            agents = sorted(held)
            for k in range(1, len(agents) + 1):
                hit = None
                for combo in combinations(agents, k):
                    union = frozenset().union(*(held[a] for a in combo))
                    if len(union) <= k:
                        hit = combo
                        break
                if hit is not None:
                    assign(_lex_perfect_matching(hit, held))
                    progress = True
                    break

    for i in order:
        release_tight()
        want = desired_of(i)
        if len(want) == 1:
            assign({i: next(iter(want))})
        else:
            held[i] = want
    release_tight()
    if held:
        assign(_lex_perfect_matching(sorted(held), held))
    return assignment


def _rp_tiefree_utilities(values, m: int) -> Tuple[Fraction, ...]:
    """Expected RP utilities when every row has distinct values: recursion
    over (remaining agents, remaining items) with memoization."""
    n = len(values)
    memo: Dict[Tuple[int, int], Tuple[Fraction, ...]] = {}
    zeros = (Fraction(0),) * n

    def solve(agents_mask: int, items_mask: int) -> Tuple[Fraction, ...]:
        if agents_mask == 0:
            return zeros
        got = memo.get((agents_mask, items_mask))
        if got is not None:
            return got
        total = list(zeros)
        count = 0
        for i in range(n):
            if not agents_mask & (1 << i):
                continue
            count += 1
            row = values[i]
            best_j = max(
                (j for j in range(m) if items_mask & (1 << j)), key=lambda j: row[j]
            )
            sub = solve(agents_mask & ~(1 << i), items_mask & ~(1 << best_j))
            for a in range(n):
                total[a] += sub[a]
            total[i] += row[best_j]
        result = tuple(v / count for v in total)
        memo[(agents_mask, items_mask)] = result
        return result

    return solve((1 << n) - 1, (1 << m) - 1)


def rp_exact(m: MatchingInstance) -> DisagreementPoint:
    """Exact Random Priority: average over all n! serial orders.

    Accepts any instance with at least as many items as agents; agents in
    turn pick their favorite remaining item, extra items go unassigned.
    """
    n = m.n_agents
    if n > enumeration_bound("rp_exact"):
        raise BoundExceededError("rp_exact bound exceeded; use rp_montecarlo")
    if not _has_row_ties(m.values):
        utils = _rp_tiefree_utilities(m.values, m.n_items)
    else:
        totals = [Fraction(0)] * n
        count = 0
        for order in permutations(range(n)):
            assignment = _serial_assignment(m.values, order, m.n_items)
            for i in range(n):
                totals[i] += m.values[i][assignment[i]]
            count += 1
        utils = tuple(t / count for t in totals)
    return DisagreementPoint(utilities=utils, provenance="rp_exact")


def rp_allocation(m: MatchingInstance):
    """(probability matrix, DisagreementPoint) under exact Random Priority.

    Full order enumeration; x[i][j] = probability agent i receives item j.
    """
    if not m.is_square:
        raise ValueError("rp_allocation requires a square instance")
    n = m.n_agents
    if n > enumeration_bound("rp_exact"):
        raise BoundExceededError("rp_allocation bound exceeded")
    counts = [[0] * m.n_items for _ in range(n)]
    total = 0
    for order in permutations(range(n)):
        assignment = _serial_assignment(m.values, order, m.n_items)
        for i in range(n):
            counts[i][assignment[i]] += 1
        total += 1
    x = tuple(tuple(Fraction(c, total) for c in row) for row in counts)
    utils = tuple(
        sum((x[i][j] * m.values[i][j] for j in range(m.n_items)), Fraction(0))
        for i in range(n)
    )
    return x, DisagreementPoint(utilities=utils, provenance="rp_exact")


def rp_montecarlo(m: MatchingInstance, samples: int, seed: int) -> DisagreementPoint:
    """Monte-Carlo Random Priority; deterministic for a fixed seed."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not m.is_square:
        raise ValueError("rp_montecarlo requires a square instance")
    n = m.n_agents
    tie_free = not _has_row_ties(m.values)
    prefs = [sorted(range(m.n_items), key=lambda j: (-m.values[i][j], j)) for i in range(n)]
    counts = [[0] * m.n_items for _ in range(n)]
    rng = random.Random(seed)
    order = list(range(n))
    for _ in range(samples):
        rng.shuffle(order)
        if tie_free:
            free = [True] * m.n_items
            for i in order:
                for j in prefs[i]:
                    if free[j]:
                        free[j] = False
                        counts[i][j] += 1
                        break
        else:
            assignment = _serial_assignment(m.values, order, m.n_items)
            for i in range(n):
                counts[i][assignment[i]] += 1
    utils = tuple(
        sum(
            (Fraction(counts[i][j], samples) * m.values[i][j] for j in range(m.n_items)),
            Fraction(0),
        )
        for i in range(n)
    )
    return DisagreementPoint(
        utilities=utils, provenance=f"rp_montecarlo(seed={seed}, samples={samples})"
    )


@dataclass(frozen=True)
class EatingSchedule:
    allocation: tuple  # n x m matrix of Fractions in [0, 1]
    phases: tuple  # ((phase length, consumed item ids), ...)


def eating(m: MatchingInstance):
    """Simultaneous eating (probabilistic serial) in exact arithmetic.

    Every agent eats probability mass of her top remaining items at total
    rate 1; with k tied tops, each is eaten at rate 1/k.  A phase ends when
    some item's capacity reaches 0.
    """
    if not m.is_square:
        raise ValueError("eating requires a square instance")
    n = m.n_agents
    items = m.n_items
    capacity = [Fraction(1)] * items
    x = [[Fraction(0)] * items for _ in range(n)]
    phases = []
    alive = set(range(items))
    while alive:
        rates = [[Fraction(0)] * items for _ in range(n)]
        for i in range(n):
            row = m.values[i]
            top = max(row[j] for j in alive)
            tops = [j for j in alive if row[j] == top]
            share = Fraction(1, len(tops))
            for j in tops:
                rates[i][j] = share
        item_rate = [sum((rates[i][j] for i in range(n)), Fraction(0)) for j in range(items)]
        length = min(capacity[j] / item_rate[j] for j in alive if item_rate[j] > 0)
        consumed = []
        for j in list(alive):
            if item_rate[j] == 0:
                continue
            capacity[j] -= item_rate[j] * length
            for i in range(n):
                x[i][j] += rates[i][j] * length
            if capacity[j] == 0:
                consumed.append(m.item_ids[j])
                alive.discard(j)
        phases.append((length, tuple(consumed)))
    schedule = EatingSchedule(
        allocation=tuple(tuple(row) for row in x), phases=tuple(phases)
    )
    utils = tuple(
        sum((x[i][j] * m.values[i][j] for j in range(items)), Fraction(0))
        for i in range(n)
    )
    return schedule, DisagreementPoint(utilities=utils, provenance="eating")
