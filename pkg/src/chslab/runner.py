"""Experiment runner: config validation, dispatch, sweeps, serialization.

Every experiment is a pure function of (params, seed, budgets); the seed fully
determines all randomized outputs through counter-based substreams, so
re-running any config reproduces every numeric field bit-exactly. Reports are
serialized without wall-clock timing by default, which keeps the artifacts
byte-identical across repeated runs (pass ``include_timing`` for a local,
non-canonical copy).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import commitments, pgm, prsg, typestates
from .budgets import DEFAULT_BUDGETS, Budgets
from .haar import sample_haar
from .reporting import ExperimentReport, combined_csv

PARALLELISM_ENV = "CHS_LAB_PARALLELISM"


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    trials: int = 10_000
    output_path: str | None = None
    format: str = "json"
    budgets: Budgets = DEFAULT_BUDGETS

    def __post_init__(self):
        if self.format not in ("json", "csv"):
            raise ValueError(f"format must be json or csv, got {self.format!r}")


# Parameter schemas: name -> (type, default); default None means required.
SCHEMAS: dict[str, dict[str, tuple[type, object]]] = {
    "prsg-td": {"lam": (int, None), "n": (int, None), "ell": (int, 1), "t": (int, 0)},
    "hybrid-scan": {"lam": (int, None), "n": (int, None), "ell": (int, 1), "t": (int, 0)},
    "multikey-td": {
        "lam": (int, None),
        "n": (int, None),
        "ell": (int, 1),
        "t": (int, 0),
        "p": (int, 2),
    },
    "impossibility": {"lam": (int, None), "n": (int, None), "ell": (int, 1), "t": (int, 1)},
    "commit-binding": {
        "lam": (int, None),
        "n": (int, None),
        "p": (int, 1),
        "adversary": (str, "honest-0"),
    },
    "commit-hiding": {"lam": (int, None), "n": (int, None), "p": (int, 1), "t": (int, 1)},
    "pgm": {"n": (int, None), "m": (int, 1)},
    "typestats": {
        "lam": (int, None),
        "m_suffix": (int, 0),
        "ell": (int, 1),
        "t": (int, 2),
    },
}


def validate_params(experiment: str, params: dict) -> dict:
    if experiment not in SCHEMAS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {sorted(SCHEMAS)}")
    schema = SCHEMAS[experiment]
    unknown = set(params) - set(schema)
    if unknown:
        raise ValueError(f"unknown parameters for {experiment}: {sorted(unknown)}")
    resolved = {}
    for name, (kind, default) in schema.items():
        if name in params:
            resolved[name] = kind(params[name])
        elif default is None:
            raise ValueError(f"{experiment} requires parameter {name!r}")
        else:
            resolved[name] = default
    return resolved


def _run_typestats(params: dict, seed: int, trials: int, budgets: Budgets) -> ExperimentReport:
    lam, m_suffix, ell, t = params["lam"], params["m_suffix"], params["ell"], params["t"]
    rng = rng_for(seed)
    estimate = typestates.estimate_cf_probability(lam, m_suffix, ell, t, trials, rng, budgets)
    stderr = math.sqrt(max(estimate * (1 - estimate), 1e-12) / trials)
    # Collision-rate readings of the per-pair probability: the source text
    # prints O(1/2^n - 2 ell); the surrounding argument needs O(1/(2^n - 2 ell)).
    reading_literal = 1.0 / 2**lam - 2 * ell
    reading_intended = 1.0 / (2**lam - 2 * ell) if 2**lam > 2 * ell else float("inf")
    rate = t ** (2 * ell) / 2**lam
    quantities = {
        "cf_probability_estimate": estimate,
        "standard_error": stderr,
        "miss_probability": 1.0 - estimate,
        "per_pair_collision_reading_literal": reading_literal,
        "per_pair_collision_reading_intended": reading_intended,
    }
    bounds = {
        "miss_rate_t2l_over_2lam": rate,
        "fitted_constant": (1.0 - estimate) / rate if rate > 0 else float("nan"),
    }
    exact_count = math.comb((1 << (lam + m_suffix)) + t - 1, t)
    flags = {}
    if exact_count <= 20_000:
        exact = typestates.exact_cf_probability(lam, m_suffix, ell, t, budgets)
        quantities["cf_probability_exact"] = exact
        flags["estimate_within_4_sigma_of_exact"] = abs(exact - estimate) <= 4 * stderr + 1e-9
    else:
        quantities["cf_probability_exact"] = None
    return ExperimentReport(
        experiment="typestats",
        params=params,
        quantities=quantities,
        bounds=bounds,
        flags=flags,
        notes=[
            "the per-pair collision probability is printed as O(1/2^n - 2l) in the "
            "source; the intended reading O(1/(2^n - 2l)) is the one tested"
        ],
    )


def _run_commit_binding(params: dict, seed: int, budgets: Budgets) -> ExperimentReport:
    rng = rng_for(seed)
    theta = sample_haar(params["n"], rng, budgets)
    cparams = commitments.CommitmentParams(
        lam=params["lam"], n=params["n"], p=params["p"], theta=theta
    )
    catalog = commitments.builtin_adversaries(cparams, rng)
    name = params["adversary"]
    if name not in catalog:
        raise ValueError(f"unknown adversary {name!r}; choose from {sorted(catalog)}")
    return commitments.binding_experiment(catalog[name], cparams, budgets)


def execute(config: ExperimentConfig) -> ExperimentReport:
    """Dispatch one experiment; the report is not yet serialized."""
    params = validate_params(config.experiment, config.params)
    seed, budgets = config.seed, config.budgets
    if config.experiment in ("prsg-td", "hybrid-scan"):
        report = prsg.single_key_report(prsg.PrsParams(**params), budgets)
        report.experiment = config.experiment
    elif config.experiment == "multikey-td":
        report = prsg.multi_key_report(prsg.PrsParams(**params), budgets)
    elif config.experiment == "impossibility":
        report = prsg.impossibility_attack(prsg.PrsParams(**params), budgets)
    elif config.experiment == "commit-binding":
        report = _run_commit_binding(params, seed, budgets)
    elif config.experiment == "commit-hiding":
        rng = rng_for(seed)
        theta = sample_haar(params["n"], rng, budgets)
        cparams = commitments.CommitmentParams(
            lam=params["lam"], n=params["n"], p=params["p"], theta=theta
        )
        report = commitments.hiding_distance(cparams, params["t"], budgets)
    elif config.experiment == "pgm":
        pparams = pgm.PgmParams(n=params["n"], m=params["m"])
        bound = pgm.overlap_bound_report(pparams, budgets)
        guess = pgm.guess_probability_report(pparams, budgets)
        report = ExperimentReport(
            experiment="pgm",
            params=params,
            quantities={**bound.quantities, **guess.quantities},
            bounds={**bound.bounds, **guess.bounds},
            flags={**bound.flags, **guess.flags},
            notes=bound.notes + guess.notes,
        )
    elif config.experiment == "typestats":
        report = _run_typestats(params, seed, config.trials, budgets)
    else:  # unreachable after validate_params
        raise ValueError(config.experiment)
    report.seed = seed
    return report


def run(config: ExperimentConfig) -> ExperimentReport:
    """Execute, stamp timing, and serialize to ``output_path`` when given."""
    start = time.perf_counter()
    report = execute(config)
    report.duration_s = time.perf_counter() - start
    if config.output_path:
        payload = report.to_json() if config.format == "json" else report.to_csv()
        with open(config.output_path, "w", encoding="utf-8") as handle:
            handle.write(payload)
    return report


def _parallelism() -> int:
    value = os.environ.get(PARALLELISM_ENV)
    if value is None:
        return os.cpu_count() or 1
    degree = int(value)
    if degree < 1:
        raise ValueError(f"{PARALLELISM_ENV} must be a positive integer, got {value!r}")
    return degree


def _sweep_one(config: ExperimentConfig) -> ExperimentReport:
    try:
        return run(config)
    except Exception as err:  # noqa: BLE001 - a sweep marks failures and continues
        return ExperimentReport(
            experiment=config.experiment,
            params=dict(config.params),
            quantities={},
            flags={"run_completed": False},
            notes=[f"run failed: {err}"],
            seed=config.seed,
        )


def sweep(
    base: ExperimentConfig, axis: str, values: list
) -> tuple[list[ExperimentReport], str]:
    """One run per axis value; failures are marked and the sweep continues.

    Report order follows the input values regardless of completion order. The
    returned CSV combines all rows; it is also written to ``base.output_path``
    when set.
    """
    schema = SCHEMAS.get(base.experiment)
    if schema is None:
        raise ValueError(f"unknown experiment {base.experiment!r}")
    if axis not in schema:
        raise ValueError(f"axis {axis!r} is not a parameter of {base.experiment}")
    configs = [
        replace(base, params={**base.params, axis: value}, output_path=None)
        for value in values
    ]
    degree = min(_parallelism(), max(len(configs), 1))
    if degree > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=degree) as pool:
            reports = list(pool.map(_sweep_one, configs))
    else:
        reports = [_sweep_one(config) for config in configs]
    table = combined_csv(reports) if reports else ""
    if base.output_path:
        with open(base.output_path, "w", encoding="utf-8") as handle:
            handle.write(table)
    return reports, table
