"""Deterministic first-order methods under black-box oracle accounting.

Methods see a problem only through its smooth-part oracle and the declared
regularizer and smoothness metadata.  Every oracle call is recorded: the
query point and the full objective value at it, so a run's value curve has
exactly one entry per call, line-search probes included.  All methods start
from the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, ConvergenceError, InputError, NumericalError, UnsupportedConfigError
from .regularizer import PowerNorm, euclidean_power_prox, reg_subgrad, reg_value

__all__ = [
    "CompositeProblem",
    "RunRecord",
    "subgradient_method",
    "prox_gradient",
    "fgm_composite",
    "fgm_restart",
    "reference_solve",
    "run_method",
    "METHODS",
]

MAX_BACKTRACK_DOUBLINGS = 200


@dataclass
class CompositeProblem:
    """Smooth black-box oracle plus an explicitly known regularizer."""

    smooth_oracle: Callable[[np.ndarray], tuple[float, np.ndarray]]
    reg: PowerNorm
    dim: int
    holder_nu: float
    holder_const: float


@dataclass
class RunRecord:
    """Per-run artifact; one value-curve entry per oracle call."""

    method_id: str
    queries: list[np.ndarray]
    value_curve: list[float]
    oracle_calls: int
    best_value: float
    best_point: np.ndarray
    accepted_iterations: int
    residual_curve: list[float] | None = None


class _BudgetSpent(Exception):
    """Internal: the next oracle call would exceed the run budget."""


class _RoundSpent(Exception):
    """Internal: the next oracle call would exceed the current restart round."""


class _Recorder:
    """Counts oracle calls, logs queries and objective values, enforces budgets."""

    def __init__(self, problem: CompositeProblem, budget: int):
        if budget < 1:
            raise InputError(f"budget must be >= 1, got {budget}")
        self.problem = problem
        self.budget = budget
        self.round_limit: int | None = None
        self.calls = 0
        self.queries: list[np.ndarray] = []
        self.value_curve: list[float] = []
        self.best_value = math.inf
        self.best_point: np.ndarray | None = None
        self.accepted_iterations = 0

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray, float]:
        if self.calls >= self.budget:
            raise _BudgetSpent
        if self.round_limit is not None and self.calls >= self.round_limit:
            raise _RoundSpent
        f, g = self.problem.smooth_oracle(x)
        g = np.asarray(g, dtype=float)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise NumericalError(
                f"oracle returned non-finite data at call {self.calls + 1}: "
                f"value = {f}"
            )
        F = f + reg_value(self.problem.reg, x)
        self.calls += 1
        self.queries.append(np.array(x, dtype=float, copy=True))
        self.value_curve.append(F)
        if F < self.best_value:
            self.best_value = F
            self.best_point = self.queries[-1]
        return f, g, F

    def to_record(self, method_id: str) -> RunRecord:
        best_point = self.best_point
        if best_point is None:
            raise NumericalError("run made no oracle calls")
        return RunRecord(
            method_id=method_id,
            queries=self.queries,
            value_curve=self.value_curve,
            oracle_calls=self.calls,
            best_value=self.best_value,
            best_point=best_point,
            accepted_iterations=self.accepted_iterations,
        )


def _model_slack(f_a: float, f_b: float) -> float:
    # round-off allowance so exact-boundary model checks do not flap
    return 4e-15 * (abs(f_a) + abs(f_b) + 1e-300)


def subgradient_method(
    problem: CompositeProblem,
    budget: int,
    step_rule: Callable[[int], float] | None = None,
) -> RunRecord:
    """Plain subgradient descent with a decaying step.

    Default step is ``c / sqrt(k)`` with ``c = 1 / (H + sigma + 1)``; the
    optimum value is unknown to the method, so no adaptive step is used.
    """
    if step_rule is None:
        c = 1.0 / (problem.holder_const + problem.reg.sigma + 1.0)
        step_rule = lambda k: c / math.sqrt(k)  # noqa: E731
    rec = _Recorder(problem, budget)
    x = np.zeros(problem.dim)
    k = 1
    try:
        while True:
            _, g, _ = rec(x)
            rec.accepted_iterations += 1
            x = x - step_rule(k) * (g + reg_subgrad(problem.reg, x))
            k += 1
    except _BudgetSpent:
        pass
    return rec.to_record("subgradient")


def _initial_stepsize(problem: CompositeProblem) -> float:
    return problem.holder_const if problem.holder_nu == 1.0 else 1.0


def _require_prox(problem: CompositeProblem, method: str) -> None:
    if problem.reg.norm_q != 2.0:
        raise UnsupportedConfigError(
            f"{method} needs the exact Euclidean prox, got q = {problem.reg.norm_q}"
        )


def prox_gradient(problem: CompositeProblem, budget: int) -> RunRecord:
    """Monotone proximal gradient with doubling-only backtracking.

    The stepsize estimate only grows, so once the local curvature is matched
    every probe is accepted immediately and the value curve is nonincreasing.
    """
    _require_prox(problem, "prox_gradient")
    rec = _Recorder(problem, budget)
    L = _initial_stepsize(problem)
    x = np.zeros(problem.dim)
    try:
        f, g, F = rec(x)
        while True:
            doublings = 0
            while True:
                y = euclidean_power_prox(problem.reg, x - g / L, L)
                f_y, g_y, F_y = rec(y)
                d = y - x
                quad = f + g @ d + 0.5 * L * (d @ d)
                if f_y <= quad + _model_slack(f, f_y) and F_y <= F + _model_slack(F, F_y):
                    break
                L *= 2.0
                doublings += 1
                if doublings > MAX_BACKTRACK_DOUBLINGS:
                    raise NumericalError(
                        "backtracking exceeded 200 doublings; the smooth part "
                        "does not admit a quadratic upper model at this scale"
                    )
            x, f, g, F = y, f_y, g_y, F_y
            rec.accepted_iterations += 1
    except _BudgetSpent:
        pass
    return rec.to_record("prox_grad")


def _fgm_core(rec: _Recorder, problem: CompositeProblem, x0: np.ndarray, L: float) -> None:
    """Accelerated proximal gradient from ``x0`` until the budget interrupts.

    When the declared smoothness is Lipschitz (nu = 1) the quadratic model
    with the declared constant holds globally, so steps at that constant are
    accepted without a verification query and each iteration costs one oracle
    call.  Otherwise backtracking verifies each step, doubling the stepsize
    estimate on failure and halving it once per accepted step.
    """
    trusted_L = problem.holder_const if problem.holder_nu == 1.0 else math.inf
    x_prev = x0
    t = 1.0
    y = x0
    f_y, g_y, _ = rec(y)
    while True:
        doublings = 0
        while True:
            z = euclidean_power_prox(problem.reg, y - g_y / L, L)
            if L >= trusted_L:
                break
            f_z, g_z, _ = rec(z)
            d = z - y
            quad = f_y + g_y @ d + 0.5 * L * (d @ d)
            if f_z <= quad + _model_slack(f_y, f_z):
                break
            L *= 2.0
            doublings += 1
            if doublings > MAX_BACKTRACK_DOUBLINGS:
                raise NumericalError(
                    "backtracking exceeded 200 doublings; the smooth part "
                    "does not admit a quadratic upper model at this scale"
                )
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - x_prev)
        x_prev, t = z, t_next
        if L < trusted_L:
            L = 0.5 * L  # halve once per accepted step while probing
        rec.accepted_iterations += 1
        f_y, g_y, _ = rec(y)


def fgm_composite(problem: CompositeProblem, budget: int) -> RunRecord:
    """Accelerated proximal gradient with backtracking, started at the origin."""
    _require_prox(problem, "fgm_composite")
    rec = _Recorder(problem, budget)
    try:
        _fgm_core(rec, problem, np.zeros(problem.dim), _initial_stepsize(problem))
    except _BudgetSpent:
        pass
    return rec.to_record("fgm")


RESTART_ROUND_START = 8
RESTART_ROUND_GROWTH = 2


def fgm_restart(problem: CompositeProblem, budget: int) -> RunRecord:
    """Accelerated method run in restart rounds of geometrically growing length.

    Each round restarts from the best point seen in the previous round (a
    round's first query is its start point, so the carried value never
    regresses).  The returned curve is indexed by cumulative oracle calls
    across all rounds.
    """
    _require_prox(problem, "fgm_restart")
    if not problem.reg.power > 2:
        raise UnsupportedConfigError(
            f"restart scheme targets powers > 2, got p = {problem.reg.power}"
        )
    rec = _Recorder(problem, budget)
    x_start = np.zeros(problem.dim)
    round_len = RESTART_ROUND_START
    L = _initial_stepsize(problem)
    try:
        while True:
            rec.round_limit = min(rec.calls + round_len, budget)
            try:
                _fgm_core(rec, problem, x_start, L)
            except _RoundSpent:
                pass
            x_start = rec.best_point
            round_len *= RESTART_ROUND_GROWTH
    except _BudgetSpent:
        pass
    return rec.to_record("fgm_restart")


REFERENCE_CALL_CAP = 10**7


def reference_solve(
    problem: CompositeProblem, tol: float, start_budget: int = 1024
) -> tuple[np.ndarray, float]:
    """Estimate the problem optimum by restarted runs with escalating budgets.

    Stops when two successive best values differ by at most
    ``tol * (1 + |best|)``.  The returned value is the best observed objective,
    hence an upper bound on the true minimum.  Quadratic regularization (p = 2)
    falls outside the restart scheme's precondition, so plain accelerated runs
    are escalated instead.
    """
    _require_prox(problem, "reference_solve")
    solver = fgm_restart if problem.reg.power > 2 else fgm_composite
    budget = start_budget
    total = 0
    prev_best: float | None = None
    best_x: np.ndarray | None = None
    best_f = math.inf
    while True:
        if total + budget > REFERENCE_CALL_CAP:
            gap = math.inf if prev_best is None else abs(prev_best - best_f)
            raise ConvergenceError(
                f"reference solve hit the {REFERENCE_CALL_CAP} call cap "
                f"with gap {gap:.3e}",
                gap=gap,
            )
        record = solver(problem, budget)
        total += record.oracle_calls
        if record.best_value < best_f:
            best_f = record.best_value
            best_x = record.best_point
        if prev_best is not None and abs(prev_best - best_f) <= tol * (1.0 + abs(best_f)):
            assert best_x is not None
            return best_x, best_f
        prev_best = best_f
        budget *= 2


METHODS: dict[str, Callable[[CompositeProblem, int], RunRecord]] = {
    "subgradient": subgradient_method,
    "prox_grad": prox_gradient,
    "fgm": fgm_composite,
    "fgm_restart": fgm_restart,
}


def run_method(method_id: str, problem: CompositeProblem, budget: int) -> RunRecord:
    """Dispatch a method by its string identifier."""
    try:
        method = METHODS[method_id]
    except KeyError:
        raise ConfigError(
            f"unknown method {method_id!r}, expected one of {sorted(METHODS)}"
        ) from None
    return method(problem, budget)
