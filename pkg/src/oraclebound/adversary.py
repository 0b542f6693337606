"""Adaptive worst-case instance construction and its closed-form bounds.

The resisting oracle answers first-order queries while incrementally building
a chain function: each query claims the unused coordinate (among the first T)
where the query point is largest in absolute value, with the sign chosen to
match the point.  The answered smooth part is ``beta * S_mu[g_t]``, the
scaled quadratic smoothing of the chain built so far; locality of the
smoothing makes every answer consistent with the final function, so no
deterministic method can distinguish the evolving instance from the frozen
one.

Parameter choices (``delta = 4/mu``, the balancing ``mu``, and ``beta`` fixed
by the gradient Holder identity) make the guaranteed residual after T calls
collapse to an explicit positive constant, exposed here together with the
matching floor and ceiling quantities.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .envelope import AffinePiece, ChainFunction, envelope, holder_constant
from .errors import BudgetError, ConfigError, InputError, StateError, UnsupportedConfigError
from .regularizer import PowerNorm, reg_value

__all__ = [
    "AdversaryConfig",
    "InstanceParams",
    "AdversaryState",
    "BoundReport",
    "Instance",
    "derive_params",
    "respond",
    "finalize",
    "hstar",
    "lower_bound",
    "solution_size_bound",
    "value_floor",
    "instance_to_dict",
    "instance_from_dict",
    "save_instance",
    "load_instance",
]


@dataclass(frozen=True)
class AdversaryConfig:
    """Problem-class parameters the worst case is built for."""

    power: float  # regularization power p >= 2
    nu: float  # gradient Holder degree in [0, 1], strictly below power - 1
    holder_const: float
    sigma: float
    budget_T: int
    dim_n: int
    norm_q: float = 2.0

    def __post_init__(self):
        if not self.power >= 2:
            raise ConfigError(f"power must be >= 2, got {self.power}")
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigError(f"nu must lie in [0, 1], got {self.nu}")
        if not self.nu < self.power - 1:
            raise ConfigError(
                f"nu must satisfy nu < power - 1, got nu = {self.nu}, "
                f"power = {self.power}"
            )
        if not self.holder_const > 0:
            raise ConfigError(f"holder_const must be > 0, got {self.holder_const}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if not self.norm_q >= 1:
            raise ConfigError(f"norm_q must be >= 1, got {self.norm_q}")
        if self.budget_T < 1:
            raise ConfigError(f"budget_T must be >= 1, got {self.budget_T}")
        if self.budget_T > self.dim_n:
            raise ConfigError(
                f"budget_T must not exceed dim_n, got T = {self.budget_T}, "
                f"n = {self.dim_n}"
            )

    @property
    def regularizer(self) -> PowerNorm:
        return PowerNorm(self.sigma, self.power, self.norm_q)


@dataclass(frozen=True)
class InstanceParams:
    """Derived instance parameters; logs are kept for scale-safe arithmetic."""

    delta: float
    mu: float
    beta: float
    log_mu: float
    log_beta: float

    def __post_init__(self):
        if not (self.mu > 0 and self.beta > 0 and self.delta > 0):
            raise ConfigError("instance parameters must be positive")
        if self.delta != 4.0 / self.mu:
            raise ConfigError("delta must equal 4 / mu")


@dataclass(frozen=True)
class BoundReport:
    """Closed-form certification quantities for one finalized instance."""

    h_star: float  # upper bound on the instance minimum, < 0
    lower_bound: float  # guaranteed residual after T calls, > 0
    value_floor: float  # lower bound on the T-th objective value, < 0
    solution_bound: float | None  # Euclidean configurations only

    def __post_init__(self):
        if not (self.h_star < 0 and self.value_floor < 0 and self.lower_bound > 0):
            raise ConfigError("bound quantities have inconsistent signs")
        # the balancing choice makes the guaranteed residual exactly half
        # the magnitude of the minimum estimate
        if abs(self.lower_bound - 0.5 * abs(self.h_star)) > 1e-10 * self.lower_bound:
            raise ConfigError(
                "guaranteed residual disagrees with the minimum estimate: "
                f"{self.lower_bound} vs half of {abs(self.h_star)}"
            )

    def to_dict(self) -> dict:
        return {
            "h_star": self.h_star,
            "lower_bound": self.lower_bound,
            "value_floor": self.value_floor,
            "solution_bound": self.solution_bound,
        }


def _chain_growth_exponent(p: float, q: float) -> float:
    """Exponent of T inside the mu/beta balancing; (3p-2)/2 when q = 2."""
    return (p + q * p - q) / q


def _prefer_direct(direct: float, log_value: float) -> float:
    """Pick the directly computed power when it stayed inside double range."""
    if math.isfinite(direct) and direct > 0.0:
        return direct
    return math.exp(log_value)


def derive_params(config: AdversaryConfig) -> InstanceParams:
    """Compute (delta, mu, beta) for a configuration.

    All exponent arithmetic is carried in the log domain so extreme budgets
    cannot overflow intermediate powers; the final values are exponentiated
    once (directly evaluated powers are preferred while they stay
    representable, which keeps moderate cases exact to the last bit).
    """
    p, nu, H = config.power, config.nu, config.holder_const
    sigma, T, q = config.sigma, config.budget_T, config.norm_q
    E = _chain_growth_exponent(p, q)
    gap = p - 1.0 - nu

    base = 0.5 * ((p - 1.0) / (4.0 * p)) ** nu * H
    log_scale = math.log(sigma) + E * math.log(T)
    log_beta = (p - 1.0) / gap * math.log(base) - nu / gap * log_scale
    beta = _prefer_direct(
        base ** ((p - 1.0) / gap) * (sigma * float(T) ** E) ** (-nu / gap), log_beta
    )
    log_mu = math.log(8.0 * p / (p - 1.0)) + (log_scale - log_beta) / (p - 1.0)
    mu = _prefer_direct(
        8.0 * p / (p - 1.0) * (sigma * float(T) ** E / beta) ** (1.0 / (p - 1.0)),
        log_mu,
    )
    return InstanceParams(
        delta=4.0 / mu, mu=mu, beta=beta, log_mu=log_mu, log_beta=log_beta
    )


def validate_params(config: AdversaryConfig, params: InstanceParams) -> None:
    """Check the gradient Holder identity linking beta, mu and the config."""
    h = holder_constant(params.beta, params.mu, config.nu)
    if abs(h - config.holder_const) > 1e-10 * config.holder_const:
        raise ConfigError(
            f"instance parameters violate the Holder identity: "
            f"beta * 2^(1-nu) * mu^nu = {h}, expected {config.holder_const}"
        )


def lower_bound(config: AdversaryConfig) -> float:
    """Guaranteed residual after T oracle calls, from the theorem constant."""
    p, nu, H = config.power, config.nu, config.holder_const
    sigma, T, q = config.sigma, config.budget_T, config.norm_q
    gap = p - 1.0 - nu
    kappa = (1.0 + nu + nu * q) / q  # (1 + 3 nu) / 2 when q = 2
    log_c = (p - 1.0) * (1.0 + nu) / gap * math.log((p - 1.0) / p) + (
        2.0 * p - 1.0
    ) * (1.0 + nu) / gap * math.log(0.5)
    log_arg = math.log(H) - (1.0 + nu) / p * math.log(sigma) - kappa * math.log(T)
    log_value = log_c + p / gap * log_arg
    direct = (
        ((p - 1.0) / p) ** ((p - 1.0) * (1.0 + nu) / gap)
        * 0.5 ** ((2.0 * p - 1.0) * (1.0 + nu) / gap)
        * (H / (sigma ** ((1.0 + nu) / p) * float(T) ** kappa)) ** (p / gap)
    )
    return _prefer_direct(direct, log_value)


def hstar(config: AdversaryConfig, params: InstanceParams) -> float:
    """Closed-form upper bound on the instance minimum (strictly negative)."""
    p, sigma, T, q = config.power, config.sigma, config.budget_T, config.norm_q
    log_value = (
        p * params.log_beta - math.log(sigma) - p / q * math.log(T)
    ) / (p - 1.0)
    direct = (params.beta**p / (sigma * float(T) ** (p / q))) ** (1.0 / (p - 1.0))
    return -(p - 1.0) / p * _prefer_direct(direct, log_value)


def value_floor(config: AdversaryConfig, params: InstanceParams) -> float:
    """Lower bound on the objective at the T-th query: ``-4 beta T / mu``."""
    T = config.budget_T
    direct = 4.0 * params.beta * T / params.mu
    log_value = math.log(4.0) + params.log_beta + math.log(T) - params.log_mu
    return -_prefer_direct(direct, log_value)


def solution_size_bound(config: AdversaryConfig) -> float:
    """Bound on the norm of the instance solution (Euclidean case only)."""
    if config.norm_q != 2.0:
        raise UnsupportedConfigError(
            "solution size bound is only available for the Euclidean norm"
        )
    p, nu, H = config.power, config.nu, config.holder_const
    sigma, T = config.sigma, config.budget_T
    gap = p - 1.0 - nu
    kappa = (1.0 + 3.0 * nu) / 2.0
    log_value = (
        math.log(3.0 * (p - 1.0) * 2.0 ** (p - 3.0)) / p
        + math.log(0.5 * ((p - 1.0) / (4.0 * p)) ** nu) / gap
        + (math.log(H) - math.log(sigma) - kappa * math.log(T)) / gap
    )
    direct = (
        (3.0 * (p - 1.0) * 2.0 ** (p - 3.0)) ** (1.0 / p)
        * (0.5 * ((p - 1.0) / (4.0 * p)) ** nu) ** (1.0 / gap)
        * (H / (sigma * float(T) ** kappa)) ** (1.0 / gap)
    )
    return _prefer_direct(direct, log_value)


@dataclass(frozen=True)
class Instance:
    """A finalized worst-case instance: chain, parameters, configuration."""

    config: AdversaryConfig
    params: InstanceParams
    chain: ChainFunction

    def smooth_oracle(self, x) -> tuple[float, np.ndarray]:
        """Value and gradient of the smooth part ``beta * S_mu[g_T]``."""
        res = envelope(self.chain, x, self.params.mu)
        return self.params.beta * res.value, self.params.beta * res.gradient

    def value(self, x) -> float:
        """Full objective: smooth part plus regularizer."""
        f, _ = self.smooth_oracle(x)
        return f + reg_value(self.config.regularizer, x)


@dataclass
class AdversaryState:
    """Mutable state of one resisting-oracle run (single owner, no sharing)."""

    config: AdversaryConfig
    params: InstanceParams = None  # type: ignore[assignment]
    step: int = 0
    pieces: list[AffinePiece] = field(default_factory=list)
    log: list[tuple[np.ndarray, float, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        if self.params is None:
            self.params = derive_params(self.config)
        validate_params(self.config, self.params)

    @property
    def used_coords(self) -> set[int]:
        return {p.coord for p in self.pieces}

    @property
    def chain(self) -> ChainFunction:
        if not self.pieces:
            raise StateError("no queries answered yet, the chain is empty")
        return ChainFunction(tuple(self.pieces), self.config.dim_n, self.params.delta)


def respond(state: AdversaryState, x) -> tuple[float, np.ndarray]:
    """Answer one first-order query, extending the chain by one piece.

    The new piece uses the unused coordinate among the first T where ``|x_i|``
    is largest (ties to the smallest index; sign of 0 counts as +1).  The
    returned value and gradient are those of the smooth part built from the
    extended chain, which locality makes identical to the final instance's
    answers at this point.
    """
    cfg, prm = state.config, state.params
    if state.step >= cfg.budget_T:
        raise BudgetError(f"oracle budget of {cfg.budget_T} calls is exhausted")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != cfg.dim_n:
        raise InputError(
            f"expected a vector of dimension {cfg.dim_n}, got shape {x.shape}"
        )

    head = np.abs(x[: cfg.budget_T]).copy()
    for p in state.pieces:
        head[p.coord - 1] = -1.0  # below any |x_i|, excludes used coordinates
    idx0 = int(np.argmax(head))
    sign = 1 if x[idx0] >= 0.0 else -1
    t = state.step + 1
    state.pieces.append(AffinePiece(idx0 + 1, sign, (t - 1) * prm.delta))

    res = envelope(state.chain, x, prm.mu)
    value = prm.beta * res.value
    gradient = prm.beta * res.gradient
    state.step = t
    state.log.append((x.copy(), value, gradient.copy()))
    return value, gradient


def finalize(state: AdversaryState) -> tuple[Instance, BoundReport]:
    """Freeze the instance after exactly T answered queries."""
    cfg = state.config
    if state.step != cfg.budget_T:
        raise StateError(
            f"cannot finalize after {state.step} of {cfg.budget_T} queries"
        )
    instance = Instance(cfg, state.params, state.chain)
    report = BoundReport(
        h_star=hstar(cfg, state.params),
        lower_bound=lower_bound(cfg),
        value_floor=value_floor(cfg, state.params),
        solution_bound=solution_size_bound(cfg) if cfg.norm_q == 2.0 else None,
    )
    return instance, report


def instance_to_dict(instance: Instance) -> dict:
    """Flat, self-describing record of a finalized instance."""
    cfg, prm = instance.config, instance.params
    return {
        "p": cfg.power,
        "nu": cfg.nu,
        "H": cfg.holder_const,
        "sigma": cfg.sigma,
        "q": cfg.norm_q,
        "T": cfg.budget_T,
        "n": cfg.dim_n,
        "delta": prm.delta,
        "mu": prm.mu,
        "beta": prm.beta,
        "pieces": [
            {"coord": p.coord, "sign": p.sign, "offset": p.offset}
            for p in instance.chain.pieces
        ],
    }


def instance_from_dict(record: dict) -> Instance:
    cfg = AdversaryConfig(
        power=float(record["p"]),
        nu=float(record["nu"]),
        holder_const=float(record["H"]),
        sigma=float(record["sigma"]),
        norm_q=float(record["q"]),
        budget_T=int(record["T"]),
        dim_n=int(record["n"]),
    )
    prm = InstanceParams(
        delta=float(record["delta"]),
        mu=float(record["mu"]),
        beta=float(record["beta"]),
        log_mu=math.log(float(record["mu"])),
        log_beta=math.log(float(record["beta"])),
    )
    validate_params(cfg, prm)
    pieces = tuple(
        AffinePiece(int(p["coord"]), int(p["sign"]), float(p["offset"]))
        for p in record["pieces"]
    )
    chain = ChainFunction(pieces, cfg.dim_n, prm.delta)
    return Instance(cfg, prm, chain)


def save_instance(instance: Instance, path: str) -> None:
    """Write the instance record as JSON, atomically (write then rename)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))
