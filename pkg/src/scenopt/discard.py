"""Ex-post constraint removal: exhaustive, greedy, and multiplier-guided.

All three algorithms are deterministic functions of (program, multisample,
budgets): ties in the searches break on the lowest stage index, then the
lowest sample index, so a removal result is reproducible bit for bit.

After removal, ``check_discard_assumption`` reports per stage whether the
probabilistic guarantee for discarding applies: either every removed
constraint is violated by the reduced solution, or the stage was declared
monotone.  A FAIL is a result, not an exception.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lp import solve_lp_lexicographic
from .program import MultiSample, ScenarioProgram, Solution, StageSpec
from .scenario_core import NS_PROBE, AssembledProgram, derived_stream

__all__ = [
    "RemovalResult",
    "remove_optimal",
    "remove_greedy",
    "remove_marginal",
    "check_discard_assumption",
    "monotonicity_empirical_check",
]

_OBJ_TIE_TOL = 1e-9
_VIOLATION_MARGIN = 1e-9


@dataclass
class RemovalResult:
    removed: list[list[int]]          # per stage, sorted sample indices
    solution: Solution                # reduced problem solution
    objective_improvement: float
    assumption_modes: list[str]       # per stage: violated-by-reduced | monotone-declared | FAIL | none


def _budgets(program: ScenarioProgram, ms: MultiSample, discards) -> list[int]:
    budgets = [int(r) for r in discards]
    if len(budgets) != program.n_stages:
        raise ValueError(f"expected {program.n_stages} discard counts, got {len(budgets)}")
    if any(r < 0 for r in budgets):
        raise ValueError("discard counts must be nonnegative")
    for r, k in zip(budgets, ms.sizes()):
        if r > k:
            raise ValueError(f"cannot discard {r} of {k} samples")
    return budgets


def _finish(
    program: ScenarioProgram,
    ms: MultiSample,
    assembled: AssembledProgram,
    drop: list[tuple[int, int]],
    base_objective: float,
    solution: Solution | None = None,
) -> RemovalResult:
    if solution is None:
        res, _ = assembled.solve_lex(drop=drop)
        solution = assembled.to_solution(res)
    removed: list[list[int]] = [[] for _ in range(program.n_stages)]
    for i, kappa in drop:
        removed[i].append(kappa)
    removed = [sorted(r) for r in removed]
    improvement = base_objective - solution.objective
    result = RemovalResult(
        removed=removed, solution=solution,
        objective_improvement=improvement, assumption_modes=[],
    )
    result.assumption_modes = check_discard_assumption(program, ms, result)
    return result


def remove_optimal(
    program: ScenarioProgram,
    ms: MultiSample,
    discards,
    guard: int = 10**6,
) -> RemovalResult:
    """Exhaustive search over all per-stage removal combinations.

    Ties on the reduced objective break toward the lexicographically smallest
    removed-index tuple.  Guarded by the total combination count.
    """
    budgets = _budgets(program, ms, discards)
    sizes = ms.sizes()
    total = 1
    for k, r in zip(sizes, budgets):
        total *= math.comb(k, r)
    if total > guard:
        raise ValueError(f"{total} removal combinations exceed the guard {guard}")

    assembled = AssembledProgram(program, ms)
    base = assembled.objective()
    if base is None:
        raise ValueError("base problem is not solvable")

    best_obj = math.inf
    best_combo: tuple = ()
    for combo in itertools.product(
        *[itertools.combinations(range(sizes[i]), budgets[i]) for i in range(len(sizes))]
    ):
        drop = [(i, kappa) for i in range(len(combo)) for kappa in combo[i]]
        obj = assembled.objective(drop=drop)
        if obj is None:
            continue
        if obj < best_obj - _OBJ_TIE_TOL * (1.0 + abs(obj)):
            best_obj = obj
            best_combo = combo
    drop = [(i, kappa) for i in range(len(best_combo)) for kappa in best_combo[i]]
    return _finish(program, ms, assembled, drop, base)


def remove_greedy(program: ScenarioProgram, ms: MultiSample, discards) -> RemovalResult:
    """Sequential removal: each step drops the single constraint (over all
    stages with remaining budget) whose removal lowers the re-solved objective
    the most.

    A constraint slack at the current optimizer cannot move it, so only active
    candidates are re-solved; slack candidates tie at the current objective.
    """
    budgets = _budgets(program, ms, discards)
    sizes = ms.sizes()
    assembled = AssembledProgram(program, ms)
    res, _ = assembled.solve_lex()
    if res.status != "optimal":
        raise ValueError(f"base problem is not solvable: status {res.status}")
    current = assembled.to_solution(res)
    base = current.objective
    drop: list[tuple[int, int]] = []

    for _ in range(sum(budgets)):
        dropped = set(drop)
        best_obj = math.inf
        best_pair: tuple[int, int] | None = None
        for i in range(program.n_stages):
            if budgets[i] == 0:
                continue
            active = set(current.active[i])
            for kappa in range(sizes[i]):
                if (i, kappa) in dropped:
                    continue
                if kappa in active:
                    obj = assembled.objective(drop=drop + [(i, kappa)])
                    if obj is None:
                        continue
                else:
                    obj = current.objective
                if obj < best_obj - _OBJ_TIE_TOL * (1.0 + abs(obj)):
                    best_obj = obj
                    best_pair = (i, kappa)
        if best_pair is None:
            break
        drop.append(best_pair)
        budgets[best_pair[0]] -= 1
        res, _ = assembled.solve_lex(drop=drop)
        current = assembled.to_solution(res)

    return _finish(program, ms, assembled, drop, base, solution=current)


def remove_marginal(program: ScenarioProgram, ms: MultiSample, discards) -> RemovalResult:
    """Sequential removal guided by the largest Lagrange multiplier.

    Each step removes the active constraint (within remaining budgets) whose
    sample-aggregated multiplier is largest; a step where every multiplier is
    numerically zero falls back to a greedy search restricted to the active
    set.  Ties break as in the greedy algorithm.
    """
    budgets = _budgets(program, ms, discards)
    assembled = AssembledProgram(program, ms)
    res, _ = assembled.solve_lex()
    if res.status != "optimal":
        raise ValueError(f"base problem is not solvable: status {res.status}")
    current = assembled.to_solution(res)
    base = current.objective
    drop: list[tuple[int, int]] = []

    sizes = ms.sizes()
    for _ in range(sum(budgets)):
        dropped = set(drop)
        candidates = [
            (i, kappa)
            for i in range(program.n_stages)
            if budgets[i] > 0
            for kappa in current.active[i]
            if (i, kappa) not in dropped
        ]
        if not candidates:
            # Budgeted stages may have nothing active; the removal count is
            # still contractual, so fall back to the greedy tie-break over
            # every remaining sample in those stages.
            candidates = [
                (i, kappa)
                for i in range(program.n_stages)
                if budgets[i] > 0
                for kappa in range(sizes[i])
                if (i, kappa) not in dropped
            ]
        mults = np.array([current.stage_duals[i][kappa] for i, kappa in candidates])
        top = float(mults.max())
        if top > 1e-9:
            eligible = [c for c, mult in zip(candidates, mults) if mult >= top - 1e-9 * (1.0 + top)]
            pick = min(eligible)
        else:
            best_obj = math.inf
            pick = None
            for pair in candidates:
                obj = assembled.objective(drop=drop + [pair])
                if obj is not None and obj < best_obj - _OBJ_TIE_TOL * (1.0 + abs(obj)):
                    best_obj = obj
                    pick = pair
            if pick is None:
                pick = min(candidates)
        drop.append(pick)
        budgets[pick[0]] -= 1
        res, _ = assembled.solve_lex(drop=drop)
        current = assembled.to_solution(res)

    return _finish(program, ms, assembled, drop, base, solution=current)


def check_discard_assumption(
    program: ScenarioProgram, ms: MultiSample, result: RemovalResult
) -> list[str]:
    """Per-stage applicability of the discarding guarantee.

    A stage with removals passes as "violated-by-reduced" when every removed
    constraint is violated by the reduced solution (margin > 1e-9); otherwise
    a declared-monotone stage passes as "monotone-declared"; otherwise the
    stage is flagged FAIL, meaning the a-priori bound is not certified for it.
    """
    x = result.solution.x
    modes: list[str] = []
    for i, stage in enumerate(program.stages):
        removed = result.removed[i]
        if not removed:
            modes.append("none")
            continue
        all_violated = True
        for kappa in removed:
            a, b = stage.generator.rows(ms.outcomes[i][kappa])
            if float(np.max(a @ x - b)) <= _VIOLATION_MARGIN:
                all_violated = False
                break
        if all_violated:
            modes.append("violated-by-reduced")
        elif stage.monotone:
            modes.append("monotone-declared")
        else:
            modes.append("FAIL")
    return modes


def monotonicity_empirical_check(
    stage: StageSpec,
    cost: np.ndarray,
    box_lower: np.ndarray,
    box_upper: np.ndarray,
    trials: int,
    seed: int = 0,
    size_range: tuple[int, int] = (2, 6),
    probe_attempts: int = 200,
) -> tuple[bool, dict | None]:
    """Randomized falsification of the stage's monotonicity property.

    Each trial draws a fresh multisample for the stage alone, computes the
    stage-only cost-minimal point, picks a random feasible probe from the
    given box, and draws one more outcome.  A counterexample is an outcome
    that cuts the probe but not the cost-minimal point; the first one found
    is returned.

    The stage-only program lives over the extended reals, so it is solved
    inside a guard box far beyond the probe box; a trial whose optimum lands
    on the guard facets has its cost-minimal point at infinity, where the
    implication has no finite evaluation, and is skipped.
    """
    if stage.sampler is None:
        raise ValueError("stage has no sampler configured")
    cost = np.asarray(cost, dtype=float)
    box_lower = np.asarray(box_lower, dtype=float)
    box_upper = np.asarray(box_upper, dtype=float)
    d = cost.shape[0]
    eye = np.eye(d)
    guard = max(1e5, 1e3 * float(np.max(np.abs(np.concatenate([box_lower, box_upper])))))
    guard_a = np.vstack([eye, -eye])
    guard_b = np.full(2 * d, guard)
    rng = derived_stream(seed, NS_PROBE, stage.index if stage.index >= 0 else 0)

    lo, hi = size_range
    for _ in range(trials):
        k = int(rng.integers(lo, hi + 1))
        omega = stage.sampler.draw(rng, k)
        a_s, b_s = stage.generator.rows_batch(omega)
        rows_a = np.vstack([guard_a, a_s.reshape(-1, d)])
        rows_b = np.concatenate([guard_b, b_s.reshape(-1)])
        res = solve_lp_lexicographic(cost, rows_a, rows_b)
        if res.status != "optimal":
            continue
        x_min = res.x
        if float(np.max(np.abs(x_min))) >= guard * (1.0 - 1e-9):
            continue  # stage-only optimum escapes to infinity

        probe = None
        for _ in range(probe_attempts):
            xi = rng.uniform(box_lower, box_upper)
            if float(np.max(a_s.reshape(-1, d) @ xi - b_s.reshape(-1))) <= 0.0:
                probe = xi
                break
        if probe is None:
            continue

        fresh = stage.sampler.draw(rng, 1)[0]
        a_f, b_f = stage.generator.rows(fresh)
        cuts_probe = float(np.max(a_f @ probe - b_f)) > _VIOLATION_MARGIN
        cuts_min = float(np.max(a_f @ x_min - b_f)) > 0.0
        if cuts_probe and not cuts_min:
            return False, {
                "multisample": omega,
                "probe": probe,
                "outcome": fresh,
                "cost_minimal_point": x_min,
            }
    return True, None
