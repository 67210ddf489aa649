"""Comparison mechanisms and the per-mechanism report harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Dict, Optional

from .core import (
    EQ,
    GE,
    EmptyCoreError,
    InfeasibleError,
    LinearProgram,
    check_anticore,
    check_domination,
    lexicographic_maxmin,
    simplex_solve,
    ws_core_nonempty,
)
from .model import (
    BoundExceededError,
    DisagreementPoint,
    Instance,
    MatchingInstance,
    Solution,
    enumeration_bound,
)
from .welfare import SetFunctionOracle, agents_of, dual, is_submodular


def _solution_from_utilities(o: SetFunctionOracle, utilities, mechanism: str) -> Solution:
    alt = o.wmax_argmax(range(o.n_agents))
    return Solution.build(alt, o.values_at(alt), utilities, mechanism)


def shapley(o: SetFunctionOracle) -> Solution:
    """Subset-weighted closed form: n * 2^n oracle evaluations."""
    n = o.n_agents
    if n > enumeration_bound("shapley"):
        raise BoundExceededError("shapley enumeration bound exceeded")
    fact = [math.factorial(k) for k in range(n + 1)]
    denom = fact[n]
    phi = [Fraction(0)] * n
    for mask in range(1 << n):
        size = bin(mask).count("1")
        base = o.wmax_mask(mask)
        weight = Fraction(fact[size] * fact[n - 1 - size], denom) if size < n else None
        if weight is None:
            continue
        for i in range(n):
            bit = 1 << i
            if mask & bit:
                continue
            phi[i] += weight * (o.wmax_mask(mask | bit) - base)
    return _solution_from_utilities(o, phi, "shapley")


def shapley_by_permutations(o: SetFunctionOracle):
    """Order-enumeration Shapley; cross-check path for small n."""
    n = o.n_agents
    totals = [Fraction(0)] * n
    count = 0
    for order in permutations(range(n)):
        mask = 0
        for i in order:
            before = o.wmax_mask(mask)
            mask |= 1 << i
            totals[i] += o.wmax_mask(mask) - before
        count += 1
    return tuple(t / count for t in totals)


def ef_maxmin(m: MatchingInstance) -> Solution:
    """Envy-free item transfers maximizing the minimum utility.

    The assignment is fixed to the lexicographically smallest max-weight
    matching; the transfer vector q (one entry per item, summing to zero)
    must make every agent weakly prefer her own item.  Among max-min
    optimal q a lexicographic max-min refinement pins the output.
    """
    if not m.is_square:
        raise ValueError("ef_maxmin requires a square matching instance")
    o = SetFunctionOracle(m)
    n = m.n_agents
    sigma = o.wmax_argmax(range(n))
    rows = [([Fraction(1)] * n, EQ, Fraction(0))]
    for i in range(n):
        mine = sigma[i]
        for j in range(n):
            if j == mine:
                continue
            row = [Fraction(0)] * n
            row[mine] += Fraction(1)
            row[j] -= Fraction(1)
            rows.append((row, GE, m.values[i][j] - m.values[i][mine]))
    exprs = []
    for i in range(n):
        coeffs = [Fraction(0)] * n
        coeffs[sigma[i]] = Fraction(1)
        exprs.append((coeffs, m.values[i][sigma[i]]))
    levels, q = lexicographic_maxmin(n, rows, exprs)
    transfers = tuple(q[sigma[i]] for i in range(n))
    return Solution(
        alternative=sigma, transfers=transfers, utilities=tuple(levels), mechanism="ef-maxmin"
    )


def ks_bargaining(o: SetFunctionOracle, d: DisagreementPoint) -> Solution:
    """Kalai-Smorodinsky: move from d toward the best-utility point
    b_i = W_max({i}) until the frontier sum u = W_max(N) is hit."""
    n = o.n_agents
    b = [o.wmax_mask(1 << i) for i in range(n)]
    sum_b = sum(b, Fraction(0))
    sum_d = d.total()
    if sum_b == sum_d:
        u = d.utilities
    else:
        t = (o.wmax_mask(o.full_mask) - sum_d) / (sum_b - sum_d)
        u = tuple(d[i] + t * (b[i] - d[i]) for i in range(n))
    return _solution_from_utilities(o, u, "ks")


def nash_bargaining(o: SetFunctionOracle, d: DisagreementPoint) -> Solution:
    """With transferable utility the Nash solution splits the surplus equally."""
    n = o.n_agents
    surplus = o.wmax_mask(o.full_mask) - d.total()
    u = tuple(d[i] + surplus / n for i in range(n))
    return _solution_from_utilities(o, u, "nash")


def nucleolus_ws(o: SetFunctionOracle, d: DisagreementPoint) -> Solution:
    """Nucleolus against g(S) = max(D(S), sum of d over S).

    Iteratively maximizes the minimum excess u(S) - g(S) over nonempty
    proper S, freezing coalitions whose excess cannot rise, until the
    utility vector is pinned.
    """
    n = o.n_agents
    if not ws_core_nonempty(o, d):
        raise EmptyCoreError("WS-core is empty")
    full = o.full_mask
    if n == 1:
        return _solution_from_utilities(o, (o.wmax_mask(full),), "nucleolus-ws")
    masks = [m for m in range(1, full) ]
    g = {m: max(dual(o, agents_of(m)), sum((d[i] for i in agents_of(m)), Fraction(0)))
         for m in masks}

    def row_of(mask):
        return [Fraction(1 if mask & (1 << i) else 0) for i in range(n)]

    eq_row = ([Fraction(1)] * n, EQ, o.wmax_mask(full))
    fixed = [eq_row]
    active = set(masks)

    def solve(objective, rows, nv):
        res = simplex_solve(LinearProgram(nv, objective, rows, maximize=True, nonneg=False))
        if res.status != "optimal":
            raise InfeasibleError(f"nucleolus LP {res.status}")
        return res

    while True:
        rows = [(r + [Fraction(0)], rel, rhs) for r, rel, rhs in fixed]
        for mask in active:
            rows.append((row_of(mask) + [Fraction(-1)], GE, g[mask]))
        res = solve([Fraction(0)] * n + [Fraction(1)], rows, n + 1)
        eps = res.value
        point = res.point[:n]
        floors = [(row_of(mask), GE, g[mask] + eps) for mask in active]
        newly = []
        for mask in sorted(active):
            excess = sum((point[i] for i in agents_of(mask)), Fraction(0)) - g[mask]
            if excess != eps:
                continue
            probe = solve(row_of(mask), fixed + floors, n)
            if probe.value == g[mask] + eps:
                newly.append(mask)
        assert newly, "nucleolus made no progress"
        for mask in newly:
            fixed.append((row_of(mask), EQ, g[mask] + eps))
            active.discard(mask)
        # stop once the utilities are pinned by the accumulated equalities
        pinned = []
        probe_rows = fixed + floors
        unique = True
        for i in range(n):
            obj = [Fraction(0)] * n
            obj[i] = Fraction(1)
            hi = solve(obj, probe_rows, n).value
            obj[i] = Fraction(-1)
            lo = -solve(obj, probe_rows, n).value
            if hi != lo:
                unique = False
                break
            pinned.append(hi)
        if unique:
            return _solution_from_utilities(o, pinned, "nucleolus-ws")
        if not active:
            raise AssertionError("nucleolus exhausted coalitions without pinning")


# ---------------------------------------------------------------------------
# Mechanism dispatch and reporting
# ---------------------------------------------------------------------------

MECHANISMS = ("lexmax", "shapley", "ef-maxmin", "ks", "nash", "nucleolus-ws")


class IncompatibleOptionsError(ValueError):
    pass


def compute_disagreement(
    inst,
    mode: str,
    seed: int = 0,
    samples: int = 100_000,
    explicit=None,
) -> DisagreementPoint:
    from . import disagreement as dis

    if mode == "explicit":
        if explicit is None:
            raise IncompatibleOptionsError("explicit disagreement needs utilities")
        return DisagreementPoint(utilities=tuple(explicit), provenance="explicit")
    if mode == "uniform":
        return dis.uniform(inst)
    if not isinstance(inst, MatchingInstance) or not inst.is_square:
        raise IncompatibleOptionsError(f"--disagreement {mode} needs a square matching instance")
    if mode == "rp":
        return dis.rp_exact(inst)
    if mode == "rp-mc":
        return dis.rp_montecarlo(inst, samples=samples, seed=seed)
    if mode == "eating":
        return dis.eating(inst)[1]
    raise IncompatibleOptionsError(f"unknown disagreement mode {mode!r}")


def run_mechanism(tag: str, inst, d: DisagreementPoint) -> Solution:
    o = SetFunctionOracle(inst)
    if tag == "lexmax":
        from .egalitarian import lexmax_lp, water_filling

        if not ws_core_nonempty(o, d):
            raise EmptyCoreError("WS-core is empty")
        try:
            submodular = bool(is_submodular(o))
        except BoundExceededError:
            submodular = isinstance(inst, MatchingInstance)
        if submodular:
            sol, trace = water_filling(o, d)
            if sol is not None:
                return sol
        return lexmax_lp(o, d)
    if tag == "shapley":
        return shapley(o)
    if tag == "ef-maxmin":
        if not isinstance(inst, MatchingInstance) or not inst.is_square:
            raise IncompatibleOptionsError("ef-maxmin needs a square matching instance")
        return ef_maxmin(inst)
    if tag == "ks":
        return ks_bargaining(o, d)
    if tag == "nash":
        return nash_bargaining(o, d)
    if tag == "nucleolus-ws":
        return nucleolus_ws(o, d)
    raise IncompatibleOptionsError(f"unknown mechanism {tag!r}")


@dataclass(frozen=True)
class MechanismReport:
    mechanism: str
    solution: Solution
    flags: Dict[str, bool]


def mechanism_report(
    inst, tag: str, d: DisagreementPoint, partition=None
) -> MechanismReport:
    """Run one mechanism and attach the standard property flags."""
    from . import decompose

    o = SetFunctionOracle(inst)
    sol = run_mechanism(tag, inst, d)
    u = sol.utilities
    if partition is None:
        partition = decompose.find_components(inst)
    flags = {
        "in_anticore": bool(check_anticore(o, u)),
        "dominates_disagreement": bool(check_domination(u, d)),
        "reasonable_from_above": all(
            u[i] <= o.wmax_mask(1 << i) for i in range(o.n_agents)
        ),
        "weakly_decomposable": bool(
            decompose.check_weak_decomposability(inst, partition, sol)
        ),
    }
    return MechanismReport(mechanism=tag, solution=sol, flags=flags)
