"""Command-line front end: run experiments, verify properties, emit figures.

Exit codes: 0 success, 1 usage/config/numerical error, 2 a certified check
failed.  All outputs are written atomically (write to a temp name, rename).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import adversary as adv
from . import figures, verify
from .adversary import AdversaryConfig
from .errors import ConfigError, DataError, InputError, NumericalError
from .regularizer import reg_value
from .solvers import METHODS

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2

_CONFIG_KEYS = {
    "p",
    "nu",
    "holder_const",
    "sigma",
    "q",
    "T",
    "n",
    "method",
    "seed",
    "out_dir",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One adversary-vs-method experiment."""

    adversary: AdversaryConfig
    method: str
    seed: int
    out_dir: str

    @staticmethod
    def from_file(path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"p", "nu", "T"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        adversary = AdversaryConfig(
            power=float(raw["p"]),
            nu=float(raw["nu"]),
            holder_const=float(raw.get("holder_const", 1.0)),
            sigma=float(raw.get("sigma", 1.0)),
            norm_q=float(raw.get("q", 2.0)),
            budget_T=int(raw["T"]),
            dim_n=int(raw.get("n", raw["T"])),
        )
        method = str(raw.get("method", "fgm"))
        if method not in METHODS:
            raise ConfigError(
                f"unknown method {method!r}, expected one of {sorted(METHODS)}"
            )
        return ExperimentConfig(
            adversary=adversary,
            method=method,
            seed=int(raw.get("seed", 0)),
            out_dir=str(raw.get("out_dir", "results")),
        )


def _write_atomic(path: str, body: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(body)
    os.replace(tmp, path)


def _write_json(path: str, payload: dict) -> None:
    _write_atomic(path, json.dumps(payload, indent=1) + "\n")


def _write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    _write_atomic(path, buf.getvalue())


def _fmt(value) -> str:
    # shortest representation that parses back to the same double
    return repr(float(value))


def cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.method is not None:
        if args.method not in METHODS:
            raise ConfigError(f"unknown method {args.method!r}")
        config = ExperimentConfig(
            config.adversary, args.method, config.seed, config.out_dir
        )
    if args.seed is not None:
        config = ExperimentConfig(
            config.adversary, config.method, args.seed, config.out_dir
        )
    out_dir = args.out if args.out is not None else config.out_dir
    os.makedirs(out_dir, exist_ok=True)

    record, state, instance, report = verify.run_against_adversary(
        config.adversary, config.method
    )
    check = verify.certify_run(state, instance, report, config.method, seed=config.seed)

    # a tampered or miscounting solver shows up as a record/log mismatch
    consistency = 0.0
    for (x_s, val, _), F_rec, x_rec in zip(
        state.log, record.value_curve, record.queries
    ):
        psi = reg_value(config.adversary.regularizer, x_rec)
        consistency = max(
            consistency,
            abs((val + psi) - F_rec),
            float(np.max(np.abs(x_s - x_rec))) if x_s.size else 0.0,
        )
    record_ok = (
        len(record.value_curve) == config.adversary.budget_T
        and consistency <= 1e-9 * (1.0 + abs(report.h_star))
    )

    instance_path = os.path.join(out_dir, "instance.json")
    adv.save_instance(instance, instance_path)

    ks = np.arange(1, len(record.value_curve) + 1)
    values = np.asarray(record.value_curve)
    residuals = values - report.h_star
    _write_csv(
        os.path.join(out_dir, "curve.csv"),
        ["k", "F_value", "residual_vs_hstar"],
        [[int(k), _fmt(v), _fmt(r)] for k, v, r in zip(ks, values, residuals)],
    )
    figures.render_run_curve(ks, values, residuals, os.path.join(out_dir, "curve.png"))
    _write_json(os.path.join(out_dir, "bound_report.json"), report.to_dict())
    check_payload = check.to_dict()
    check_payload["record_consistent"] = record_ok
    check_path = os.path.join(out_dir, "check_report.json")
    _write_json(check_path, check_payload)

    if not check.passed or not record_ok:
        print(f"certified check failed, witness at {check_path}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(
        f"ok: method={config.method} T={config.adversary.budget_T} "
        f"residual={values[-1] - report.h_star:.6e} "
        f"lower_bound={report.lower_bound:.6e}"
    )
    return EXIT_OK


def _verify_cells(scale: str, seed: int):
    """Yield (cell_id, thunk) pairs for the requested verification scale."""
    cells = []

    def lemma_cell(n, t, mu, trials):
        cells.append(
            (
                f"lemmas/n{n}_t{t}_mu{mu:g}",
                lambda: verify.check_smoothing_lemmas(n, t, mu, trials, seed),
            )
        )

    trials = 10_000 if scale == "full" else 2_000
    lemma_cell(6, 4, 1.0, trials)
    lemma_cell(8, 5, 0.1, trials)
    lemma_cell(6, 4, 1e6, trials)

    grid_T = [4, 8, 16, 32] if scale == "small" else [4, 8, 16, 32, 64, 256]
    identity_configs = []
    for p in (2.5, 3.0, 4.0):
        for nu in (0.0, 0.5, 1.0):
            if not nu < p - 1:
                continue
            for T in (4, 16, 64):
                for q in (1.0, 2.0, 3.0):
                    identity_configs.append(
                        AdversaryConfig(
                            power=p,
                            nu=nu,
                            holder_const=1.0,
                            sigma=1.0,
                            norm_q=q,
                            budget_T=T,
                            dim_n=T,
                        )
                    )
    cells.append(
        ("identities/grid", lambda: verify.check_parameter_identities(identity_configs))
    )

    for method in sorted(METHODS):
        for p in (2.5, 3.0, 4.0):
            for nu in (0.0, 0.5, 1.0):
                if not nu < p - 1:
                    continue
                for T in grid_T:
                    cfg = AdversaryConfig(
                        power=p,
                        nu=nu,
                        holder_const=1.0,
                        sigma=1.0,
                        norm_q=2.0,
                        budget_T=T,
                        dim_n=T,
                    )
                    cells.append(
                        (
                            f"lower/{method}_p{p:g}_nu{nu:g}_T{T}_q2",
                            lambda cfg=cfg, m=method: verify.check_lower_bound(
                                cfg, m, seed=seed
                            ),
                        )
                    )
    for q in (1.0, 3.0):
        for nu in (0.0, 1.0):
            for T in (4, 16):
                cfg = AdversaryConfig(
                    power=3.0,
                    nu=nu,
                    holder_const=1.0,
                    sigma=1.0,
                    norm_q=q,
                    budget_T=T,
                    dim_n=T,
                )
                cells.append(
                    (
                        f"lower/subgradient_p3_nu{nu:g}_T{T}_q{q:g}",
                        lambda cfg=cfg: verify.check_lower_bound(
                            cfg, "subgradient", seed=seed
                        ),
                    )
                )

    sol_T = [4] if scale == "small" else [4, 8]
    for T in sol_T:
        cfg = AdversaryConfig(
            power=3.0,
            nu=1.0,
            holder_const=1.0,
            sigma=1.0,
            norm_q=2.0,
            budget_T=T,
            dim_n=T,
        )
        cells.append(
            (f"solution/T{T}", lambda cfg=cfg: verify.check_solution_bound(cfg))
        )

    def rate_cell(p_val, T, budget, k_lo, k_hi, threshold):
        def thunk():
            cfg = AdversaryConfig(
                power=p_val,
                nu=1.0,
                holder_const=1.0,
                sigma=1.0,
                norm_q=2.0,
                budget_T=T,
                dim_n=T,
            )
            slope = rate_experiment(cfg, budget, k_lo, k_hi)
            return verify.CheckReport(
                check_id=f"rate/p{p_val:g}_T{T}",
                trials=budget,
                worst_violation=slope - threshold,
                tolerance=0.0,
                passed=slope <= threshold,
                witness={"slope": slope, "threshold": threshold},
            )

        cells.append((f"rate/p{p_val:g}_T{T}", thunk))

    # Residual decay on a frozen instance only begins after a call count
    # proportional to T (the chain forces coordinate-by-coordinate progress),
    # so the fit window must sit past that horizon; T = 8 puts the whole
    # super-accelerated decay inside [16, 512].
    rate_cell(3.0, 8, 2048, 16, 512, -5.0)
    if scale == "full":
        rate_cell(4.0, 8, 2048, 16, 512, -3.5)

    return cells


def rate_experiment(
    config: AdversaryConfig, budget: int, k_lo: int, k_hi: int
) -> float:
    """Freeze an instance, rerun the restart method on it, fit the decay slope.

    The reference value comes from a run several times longer than the fitted
    one; its error sits at the round-off floor of the objective evaluation,
    so residuals within ten times that floor are excluded from the window and
    anything below it is clamped before fitting.
    """
    from .solvers import fgm_restart, reference_solve

    _, _, instance, _ = verify.run_against_adversary(config, "fgm_restart")
    problem = verify.instance_problem(instance)
    record = fgm_restart(problem, budget)
    _, f_star = reference_solve(problem, tol=1e-3, start_budget=4 * budget)
    residuals = verify.running_best_residuals(record, f_star)
    record.residual_curve = residuals.tolist()
    floor = 10.0 * np.finfo(float).eps * (abs(f_star) + 1e-300)
    hi = k_hi
    while hi > 2 * k_lo and residuals[hi - 1] <= floor:
        hi -= 1
    slope, _ = verify.estimate_rate(np.maximum(residuals, floor), k_lo, hi)
    return slope


def cmd_verify(args) -> int:
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    cells = _verify_cells(args.scale, args.seed)
    started = time.monotonic()
    # cells are pure given (seed, config) and own all their state, so they
    # may run concurrently; results are emitted in grid order either way
    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(lambda cell: cell[1](), cells))
    else:
        reports = [thunk() for _, thunk in cells]

    rows = []
    failed = 0
    for (cell_id, _), report in zip(cells, reports):
        rows.append(
            [
                cell_id,
                report.trials,
                _fmt(report.worst_violation),
                _fmt(report.tolerance),
                report.passed,
            ]
        )
        name = cell_id.replace("/", "_")
        _write_json(os.path.join(out_dir, f"check_{name}.json"), report.to_dict())
        status = "pass" if report.passed else "FAIL"
        print(f"{status}  {cell_id}  worst_violation={report.worst_violation:.3e}")
        if not report.passed:
            failed += 1
    _write_csv(
        os.path.join(out_dir, "summary.csv"),
        ["check_id", "trials", "worst_violation", "tolerance", "passed"],
        rows,
    )
    elapsed = time.monotonic() - started
    print(f"{len(cells) - failed}/{len(cells)} checks passed in {elapsed:.1f}s")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {what} list {text!r}") from exc
    if not values:
        raise ConfigError(f"empty {what} list")
    return values


def cmd_figures(args) -> int:
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    if args.which == "smoothing":
        mus = _parse_floats(args.mu, "mu")
        header, data = figures.smoothing_columns(figures.DEFAULT_PROFILE, mus)
        csv_path = os.path.join(out_dir, "smoothing.csv")
        _write_csv(csv_path, header, [[_fmt(v) for v in row] for row in data])
        figures.render_smoothing(header, data, os.path.join(out_dir, "smoothing.png"))
        print(f"wrote {csv_path} and smoothing.png")
    else:
        powers = _parse_floats(args.powers, "power")
        header, data = figures.levelset_columns(powers)
        csv_path = os.path.join(out_dir, "levelsets.csv")
        _write_csv(csv_path, header, [[_fmt(v) for v in row] for row in data])
        figures.render_levelsets(header, data, os.path.join(out_dir, "levelsets.png"))
        print(f"wrote {csv_path} and levelsets.png")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oraclebound",
        description=(
            "Build worst-case regularized instances against first-order "
            "methods, certify the guaranteed bounds, and emit figure data."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one adversary-vs-method experiment")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--method", default=None, choices=sorted(METHODS))
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the certified property grid")
    p_ver.add_argument("--scale", choices=("small", "full"), default="small")
    p_ver.add_argument("--out", default="verify-out")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--jobs", type=int, default=1, help="concurrent cells")
    p_ver.set_defaults(func=cmd_verify)

    p_fig = sub.add_parser("figures", help="emit figure data and renderings")
    p_fig.add_argument("which", choices=("smoothing", "levelsets"))
    p_fig.add_argument("--mu", default="1,4,16", help="comma-separated list")
    p_fig.add_argument("--powers", default="1,2,3", help="comma-separated list")
    p_fig.add_argument("--out", default="figures-out")
    p_fig.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse reserves 2 for usage errors; our contract keeps 2 for
        # certified-check failures, so usage problems map to 1
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (ConfigError, InputError, DataError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
