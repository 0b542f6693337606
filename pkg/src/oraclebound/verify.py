"""Property-test engine certifying smoothing lemmas and bound inequalities.

Every check samples or runs at a configurable scale, aggregates the worst
signed violation (negative means the property held with margin), and records
a witness for the worst trial.  A check is reproducible from its identifier,
seed, and configuration alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import adversary as adv
from .adversary import AdversaryConfig, AdversaryState, BoundReport, Instance
from .envelope import AffinePiece, ChainFunction, envelope, eval_max, holder_constant
from .errors import ConfigError, DataError, InputError
from .solvers import CompositeProblem, RunRecord, reference_solve, run_method

__all__ = [
    "CheckReport",
    "certify_run",
    "check_smoothing_lemmas",
    "check_lower_bound",
    "check_solution_bound",
    "check_parameter_identities",
    "estimate_rate",
    "adversary_problem",
    "instance_problem",
    "run_against_adversary",
]


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one certified check; violation <= tolerance means pass."""

    check_id: str
    trials: int
    worst_violation: float
    tolerance: float
    passed: bool
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "trials": self.trials,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "witness": self.witness,
        }


def _report(check_id: str, trials: int, worst: float, tol: float, witness) -> CheckReport:
    return CheckReport(
        check_id=check_id,
        trials=trials,
        worst_violation=worst,
        tolerance=tol,
        passed=worst <= tol,
        witness=witness,
    )


def _random_chain(rng: np.random.Generator, n: int, t: int, delta: float) -> ChainFunction:
    coords = rng.choice(n, size=t, replace=False) + 1
    signs = rng.choice([-1, 1], size=t)
    offsets = np.abs(rng.normal(scale=delta, size=t))
    pieces = tuple(
        AffinePiece(int(c), int(s), float(o)) for c, s, o in zip(coords, signs, offsets)
    )
    return ChainFunction(pieces, n, delta)


LEMMA_TOLERANCE = 1e-10


def check_smoothing_lemmas(
    n: int, t: int, mu: float, trials: int, seed: int
) -> CheckReport:
    """Sample random chains and points; certify the six smoothing invariants.

    Per trial: sandwich lower (smoothing never exceeds the function), sandwich
    upper (gap at most 1/(2 mu)), 1-Lipschitz value, mu-Lipschitz gradient,
    inner minimizer within 2/mu of the center, and the subgradient optimality
    condition of the inner minimizer against a random probe point.
    """
    if t > n:
        raise InputError(f"need t <= n, got t = {t}, n = {n}")
    if trials < 1:
        raise InputError(f"need at least one trial, got {trials}")
    rng = np.random.default_rng(seed)
    worst = -math.inf
    witness = None
    half_gap = 1.0 / (2.0 * mu)
    for trial in range(trials):
        chain = _random_chain(rng, n, t, 4.0 / mu)
        scale = float(rng.choice([1.0, 1.0 / mu, 10.0]))
        x = rng.normal(scale=scale, size=n)
        y = rng.normal(scale=scale, size=n)
        ex = envelope(chain, x, mu)
        ey = envelope(chain, y, mu)
        gx, _ = eval_max(chain, x)
        probe = rng.normal(scale=scale, size=n)
        g_probe, _ = eval_max(chain, probe)
        g_prox, _ = eval_max(chain, ex.prox_point)
        dist = float(np.linalg.norm(x - y))
        violations = (
            ("sandwich_lower", ex.value - gx),
            ("sandwich_upper", (gx - ex.value) - half_gap),
            ("value_lipschitz", abs(ex.value - ey.value) - dist),
            (
                "gradient_lipschitz",
                float(np.linalg.norm(ex.gradient - ey.gradient)) - mu * dist,
            ),
            (
                "prox_in_ball",
                float(np.linalg.norm(ex.prox_point - x)) - 2.0 / mu,
            ),
            # the inner subgradient is mu*(z - x) = -gradient; the gradient
            # form avoids amplifying the round-off of z by mu
            (
                "prox_optimality",
                g_prox
                - g_probe
                + float(ex.gradient @ (probe - ex.prox_point)),
            ),
        )
        for name, v in violations:
            if v > worst:
                worst = v
                witness = {
                    "invariant": name,
                    "trial": trial,
                    "pieces": [
                        {"coord": p.coord, "sign": p.sign, "offset": p.offset}
                        for p in chain.pieces
                    ],
                    "x": x.tolist(),
                    "y": y.tolist(),
                    "probe": probe.tolist(),
                }
    return _report(
        f"smoothing_lemmas/n{n}_t{t}_mu{mu:g}_seed{seed}",
        trials,
        worst,
        LEMMA_TOLERANCE,
        witness,
    )


def adversary_problem(state: AdversaryState) -> CompositeProblem:
    """Wrap a resisting-oracle state as a black-box composite problem."""
    cfg = state.config
    return CompositeProblem(
        smooth_oracle=lambda x: adv.respond(state, x),
        reg=cfg.regularizer,
        dim=cfg.dim_n,
        holder_nu=cfg.nu,
        holder_const=cfg.holder_const,
    )


def instance_problem(instance: Instance) -> CompositeProblem:
    """Wrap a finalized instance as a black-box composite problem."""
    cfg = instance.config
    return CompositeProblem(
        smooth_oracle=instance.smooth_oracle,
        reg=cfg.regularizer,
        dim=cfg.dim_n,
        holder_nu=cfg.nu,
        holder_const=cfg.holder_const,
    )


def run_against_adversary(
    config: AdversaryConfig, method_id: str
) -> tuple[RunRecord, AdversaryState, Instance, BoundReport]:
    """Run a method for exactly T oracle calls against a fresh adversary."""
    if config.norm_q != 2.0 and method_id != "subgradient":
        raise ConfigError(
            f"method {method_id!r} needs the Euclidean prox and cannot run "
            f"with q = {config.norm_q}"
        )
    state = AdversaryState(config)
    record = run_method(method_id, adversary_problem(state), config.budget_T)
    instance, report = adv.finalize(state)
    return record, state, instance, report


def _ball_samples(
    rng: np.random.Generator, center: np.ndarray, radius: float, count: int
) -> np.ndarray:
    n = center.shape[0]
    directions = rng.normal(size=(count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(count, 1)) ** (1.0 / n)
    return center + radii * directions


INDISTINGUISHABILITY_SAMPLES = 100
REPLAY_TOLERANCE = 1e-9


def _indistinguishability_violation(
    state: AdversaryState, instance: Instance, rng: np.random.Generator
) -> float:
    """Worst disagreement between intermediate and final chains near queries.

    The chains grow pointwise with their length, so agreement of stage s with
    the final stage at a point implies agreement of every stage in between;
    checking each stage against the final one covers all pairs.
    """
    chain = instance.chain
    radius = 2.0 / instance.params.mu
    worst = -math.inf
    for s, (x_s, _, _) in enumerate(state.log, start=1):
        points = _ball_samples(rng, x_s, radius, INDISTINGUISHABILITY_SAMPLES)
        piece_vals = chain.piece_values_batch(points)
        prefix_max = np.maximum.accumulate(piece_vals, axis=1)
        gap = np.abs(prefix_max[:, -1] - prefix_max[:, s - 1])
        worst = max(worst, float(gap.max()))
    return worst


def check_lower_bound(
    config: AdversaryConfig, method_id: str, seed: int = 0
) -> CheckReport:
    """Certify the residual guarantee for one method on one configuration.

    Asserts, with a relative slack of 1e-12 on the bound quantities: the
    final objective value stays above its floor, the residual against the
    closed-form minimum estimate reaches the guaranteed bound, the final
    chain value at the last query respects its floor, every logged answer is
    reproduced by the finalized instance to 1e-9, and intermediate chains are
    indistinguishable from the final one near every query.
    """
    _, state, instance, report = run_against_adversary(config, method_id)
    return certify_run(state, instance, report, method_id, seed=seed)


def certify_run(
    state: AdversaryState,
    instance: Instance,
    report: BoundReport,
    method_id: str,
    seed: int = 0,
) -> CheckReport:
    """Certification core for an already finalized adversary run."""
    config = state.config
    x_T = state.log[-1][0]
    F_T = instance.value(x_T)
    scale = abs(report.h_star)
    slack = 1e-12 * scale

    g_T, _ = eval_max(instance.chain, x_T)
    g_floor = -(config.budget_T - 1) * 4.0 / instance.params.mu

    replay = -math.inf
    for x_s, val, grad in state.log:
        f_s, g_s = instance.smooth_oracle(x_s)
        replay = max(
            replay, abs(f_s - val), float(np.max(np.abs(g_s - grad)))
        )

    rng = np.random.default_rng(seed)
    indist = _indistinguishability_violation(state, instance, rng)

    checks = (
        ("value_floor", report.value_floor - F_T - slack),
        ("residual_bound", report.lower_bound - (F_T - report.h_star) - slack),
        ("chain_floor", g_floor - g_T - slack / max(instance.params.beta, 1e-300)),
        ("replay", replay - REPLAY_TOLERANCE),
        ("indistinguishability", indist - slack),
    )
    worst_name, worst = max(checks, key=lambda item: item[1])
    witness = None
    if worst > 0:
        witness = {
            "check": worst_name,
            "method": method_id,
            "F_T": F_T,
            "bound_report": report.to_dict(),
            "x_T": x_T.tolist(),
        }
    return _report(
        f"lower_bound/{method_id}_p{config.power:g}_nu{config.nu:g}"
        f"_T{config.budget_T}_q{config.norm_q:g}",
        config.budget_T,
        worst,
        0.0,
        witness,
    )


def check_solution_bound(
    config: AdversaryConfig, tol: float = 1e-13
) -> CheckReport:
    """Certify the closed-form solution-size bound on a finalized instance.

    The reference solve leaves a value gap of order ``tol``; uniform convexity
    of the regularizer converts it into a point displacement, which is added
    to the bound as slack.
    """
    if config.norm_q != 2.0:
        raise ConfigError("solution bound check requires the Euclidean norm")
    _, _, instance, report = run_against_adversary(config, "fgm")
    x_hat, f_hat = reference_solve(instance_problem(instance), tol)
    p, sigma = config.power, config.sigma
    gap_estimate = 10.0 * tol * (1.0 + abs(f_hat))
    displacement = (p * 2.0 ** (p - 2.0) * gap_estimate / sigma) ** (1.0 / p)
    bound = report.solution_bound
    assert bound is not None
    limit = bound * (1.0 + 1e-6) + displacement
    worst = float(np.linalg.norm(x_hat)) - limit
    witness = None
    if worst > 0:
        witness = {"x_hat_norm": float(np.linalg.norm(x_hat)), "limit": limit}
    return _report(
        f"solution_bound/p{config.power:g}_nu{config.nu:g}_T{config.budget_T}",
        1,
        worst,
        0.0,
        witness,
    )


def check_parameter_identities(configs: list[AdversaryConfig]) -> CheckReport:
    """Cross-check the two closed-form routes to the guaranteed residual.

    For each configuration: the derived parameters must reproduce the
    gradient Holder constant, and the theorem-constant formula must agree
    with the balance form ``(p-1)/(2p) * (beta^p / (sigma T^(p/q)))^(1/(p-1))``
    computed from the derived beta.
    """
    worst = -math.inf
    witness = None
    for config in configs:
        params = adv.derive_params(config)
        h = holder_constant(params.beta, params.mu, config.nu)
        v1 = abs(h - config.holder_const) / config.holder_const - 1e-10
        lb_theorem = adv.lower_bound(config)
        lb_balance = -0.5 * adv.hstar(config, params)
        v2 = abs(lb_theorem - lb_balance) / lb_theorem - 1e-10
        vf = adv.value_floor(config, params)
        v3 = abs(abs(vf) - lb_theorem) / lb_theorem - 1e-10
        for name, v in (("holder", v1), ("residual_constant", v2), ("floor", v3)):
            if v > worst:
                worst = v
                witness = {
                    "identity": name,
                    "power": config.power,
                    "nu": config.nu,
                    "T": config.budget_T,
                    "q": config.norm_q,
                }
    return _report("parameter_identities", len(configs), worst, 0.0, witness)


def estimate_rate(curve, k_lo: int, k_hi: int) -> tuple[float, float]:
    """Least-squares slope and intercept of log residual against log index.

    ``curve`` holds residuals indexed from k = 1; the window is inclusive and
    must span at least a factor of two.
    """
    curve = np.asarray(curve, dtype=float)
    if k_lo < 1 or k_hi > curve.shape[0]:
        raise InputError(
            f"window [{k_lo}, {k_hi}] outside curve of length {curve.shape[0]}"
        )
    if k_hi < 2 * k_lo:
        raise InputError(f"window [{k_lo}, {k_hi}] must satisfy k_hi >= 2*k_lo")
    window = curve[k_lo - 1 : k_hi]
    if np.any(window <= 0.0):
        raise DataError(
            "nonpositive residuals in the fit window; clamp to the reference "
            "tolerance before fitting"
        )
    ks = np.arange(k_lo, k_hi + 1, dtype=float)
    slope, intercept = np.polyfit(np.log(ks), np.log(window), 1)
    return float(slope), float(intercept)


def running_best_residuals(record: RunRecord, f_star: float) -> np.ndarray:
    """Best-so-far objective residuals against a reference value, per call."""
    best = np.minimum.accumulate(np.asarray(record.value_curve, dtype=float))
    return best - f_star
