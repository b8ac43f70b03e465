"""
End-to-end acceptance suite behind the `verify` command.

Every check records its measured value, its threshold and whether it passed;
a check that raises is recorded as failed with the error message.
"""

import math
import os
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from wave_stability.core.data_conversion import read_csv_columns, save_config_file, write_csv, write_json
from wave_stability.core.errors import WaveStabilityError
from wave_stability.core.greens import (
    build_tilde_system,
    d_matrix_cubic,
    index_cubic,
    index_quadratic,
    limit_targets,
    psi_cubic,
    psi_quadratic,
    unit_modulus_limit,
    wronskian_closed_form,
)
from wave_stability.core.hillop import kernel_check, lame_check
from wave_stability.core.linspec import (
    peakon_chain_check,
    peakon_mode_check,
    stability_margin_sweep,
)
from wave_stability.core.logger import logger
from wave_stability.core.plotting import plot_index_sweep
from wave_stability.core.positivity import certify_hill, neg_def_2x2, sample_instances
from wave_stability.core.profiles import cubic_profile, quadratic_profile
from wave_stability.core.schemas import (
    Normalization,
    RecordStatus,
    RunConfig,
    SweepRecord,
    Verdict,
    WaveModel,
)
from wave_stability.core.sweep import index_sweep, record_columns, worker_count, write_records

LAME_MODULI = (0.3, 0.5, 0.7, 0.9)
MARGIN_MODULI = (0.3, 0.6, 0.9)
CERTIFY_MODULI = (0.3, 0.5, 0.8)
SWEEP_RANGE = (0.05, 0.995, 60)


class CheckResult(BaseModel):
    name: str
    value: float
    threshold: float
    passed: bool
    message: str = ""


def _check(name: str, value: float, threshold: float, passed: bool, message: str = "") -> CheckResult:
    result = CheckResult(
        name=name, value=float(value), threshold=float(threshold), passed=bool(passed), message=message
    )
    marker = "✅" if result.passed else "❌"
    logger.info(f"{marker} {name}: value={result.value:.6g} threshold={result.threshold:.3g}")
    return result


def _guard(name: str, run: Callable[[], List[CheckResult]]) -> List[CheckResult]:
    try:
        return run()
    except WaveStabilityError as e:
        logger.error(f"❌ {name}: {type(e).__name__}: {e.message}")
        return [_check(name, math.nan, math.nan, False, f"{type(e).__name__}: {e.message}")]


def _sweep_grid() -> List[float]:
    low, high, steps = SWEEP_RANGE
    return [float(k) for k in np.linspace(low, high, steps)]


def lame_checks() -> List[CheckResult]:
    return [
        _check(f"lame k={k}", report.max_rel_err, 1e-8, report.max_rel_err <= 1e-8)
        for k, report in ((k, lame_check(k, 256)) for k in LAME_MODULI)
    ]


def kernel_checks() -> List[CheckResult]:
    results = []
    for k in LAME_MODULI:
        for label, profile in (
            ("quadratic", quadratic_profile(k)),
            ("cubic", cubic_profile(k, Normalization.CANONICAL)),
        ):
            report = kernel_check(profile, 256)
            results.append(
                _check(f"kernel {label} k={k}", report.residual, 1e-8, report.residual < 1e-8)
            )
    return results


def wronskian_checks() -> List[CheckResult]:
    results = []
    for k in np.linspace(0.05, 0.99, 8):
        pair = psi_quadratic(build_tilde_system(k), 256)
        closed = wronskian_closed_form(k)
        err = (abs(pair.wronskian - closed) + pair.wronskian_spread) / closed
        results.append(_check(f"wronskian quadratic k={k:.4f}", err, 1e-9, err <= 1e-9))
    for k in np.linspace(0.05, 0.95, 8):
        pair = psi_cubic(k, 256)
        # spread over 256 points bounds the deviation on every 64-point subgrid
        err = abs(pair.wronskian - 1.0) + pair.wronskian_spread
        results.append(_check(f"wronskian cubic k={k:.4f}", err, 1e-9, err <= 1e-9))
    return results


def cubic_identity_checks() -> List[CheckResult]:
    results = []
    for k in (0.2, 0.5, 0.8, 0.95):
        index = index_cubic(k)
        K = index.components["K"]
        err = abs(index.components["int_psi_dphi"] + 2.0 * K) / (2.0 * K)
        results.append(_check(f"int psi dphi = -2K k={k}", err, 1e-8, err <= 1e-8))
    return results


def _sweep_checks(model: WaveModel, records) -> List[CheckResult]:
    failed = [r for r in records if r.status == RecordStatus.FAIL]
    worst = max((r.values.get("index", -math.inf) for r in records), default=math.nan)
    disc = max((r.values.get("discrepancy", math.nan) for r in records), default=math.nan)
    return [
        _check(f"{model.value} index negative on sweep", worst, 0.0, not failed and worst < 0.0),
        _check(f"{model.value} dual-method agreement", disc, 1e-6, not failed and disc <= 1e-6),
    ]


def limit_checks(model: WaveModel) -> Tuple[List[CheckResult], Dict]:
    estimate = unit_modulus_limit(model)
    target = limit_targets(model)["k_to_1"]
    err = abs(estimate.limit - target) / abs(target)
    monotone = bool(np.all(np.diff(estimate.values) > 0.0))
    results = [
        _check(f"{model.value} index limit k->1", err, 1e-2, err <= 1e-2),
        _check(f"{model.value} monotone approach", float(monotone), 1.0, monotone),
    ]
    if model == WaveModel.QUADRATIC:
        small = index_quadratic(0.01)
        k0 = limit_targets(model)["k_to_0"]
        err0 = abs(small.value_greens - k0) / abs(k0)
        results.append(_check("quadratic index k=0.01 vs -24 pi", err0, 1e-2, err0 <= 1e-2))
    return results, estimate.model_dump(mode="json")


def margin_checks(model: WaveModel, output_dir: str) -> List[CheckResult]:
    coarse = stability_margin_sweep(model, MARGIN_MODULI, 128)
    fine = stability_margin_sweep(model, MARGIN_MODULI, 256)
    write_records(os.path.join(output_dir, f"margins_{model.value}.csv"), coarse.records)
    results = []
    for row, refined in zip(coarse.records, fine.records):
        max_re = row.values.get("max_re", math.nan)
        results.append(
            _check(f"{model.value} pencil max_re k={row.k}", max_re, 1e-6, row.status == RecordStatus.OK)
        )
        results.append(
            _check(
                f"{model.value} pencil max_re n=256 k={row.k}",
                refined.values.get("max_re", math.nan),
                1e-6,
                refined.status == RecordStatus.OK,
            )
        )
        results.append(
            _check(
                f"{model.value} constraints k={row.k}",
                row.values.get("max_constraint", math.nan),
                1e-6,
                row.values.get("max_constraint", math.inf) < 1e-6,
            )
        )
    return results


def d_matrix_checks() -> List[CheckResult]:
    results = []
    for k in np.linspace(0.1, 0.95, 10):
        report = d_matrix_cubic(k)
        D = np.asarray(report.matrix)
        results.append(
            _check(f"cubic D-matrix k={k:.4f}", max(abs(D[0, 1]), abs(D[1, 0])), 1e-9, report.negative_definite)
        )
    return results


def positivity_checks(trials: int, seed: int) -> List[CheckResult]:
    workers = worker_count()
    results = []
    for theorem in ("codim_one", "codim_k"):
        summary = sample_instances(theorem, trials, seed, workers=workers)
        fails = summary.counts[Verdict.CONCLUSION_FAILS.value]
        results.append(_check(f"{theorem} random instances", fails, 0.0, fails == 0))

    rng = np.random.default_rng(seed)
    disagreements = 0
    for _ in range(10_000):
        A = rng.standard_normal((2, 2))
        D = 0.5 * (A + A.T)
        if neg_def_2x2(D) != bool(np.all(np.linalg.eigvalsh(D) < 0.0)):
            disagreements += 1
    results.append(_check("2x2 criterion vs eigenvalues", disagreements, 0.0, disagreements == 0))

    for model in (WaveModel.QUADRATIC, WaveModel.CUBIC):
        for k in CERTIFY_MODULI:
            check = certify_hill(model, k, 256)
            holds = check.verdict == Verdict.CONCLUSION_HOLDS
            value = check.conclusion_min_eig if check.conclusion_min_eig is not None else math.nan
            results.append(_check(f"certify {model.value} k={k}", value, 0.0, holds))
    return results


def peakon_checks(L_domain: float, x_max: float, n: int) -> List[CheckResult]:
    mode = peakon_mode_check(L_domain, x_max, n)
    chain = peakon_chain_check(L_domain, x_max)
    expected_mu = L_domain / 27.0
    return [
        _check("peakon residual q1", mode.residual_q, 1e-10, mode.residual_q < 1e-10),
        _check("peakon residual f", mode.residual_f, 1e-8, mode.residual_f < 1e-8),
        _check("peakon left limit", abs(mode.left_limit + 2.0), 1e-8, abs(mode.left_limit + 2.0) < 1e-8),
        _check("peakon right limit", abs(mode.right_limit), 1e-8, abs(mode.right_limit) < 1e-8),
        _check("peakon chain", chain.rescaled_residual, 1e-8, chain.rescaled_residual < 1e-8),
        _check("peakon growth rate", abs(mode.mu - expected_mu), 1e-15, abs(mode.mu - expected_mu) <= 1e-15),
    ]


def reload_checks(path: str, records: Sequence[SweepRecord]) -> List[CheckResult]:
    """Re-read a written sweep CSV and compare every numeric column with the records."""
    name = os.path.basename(path)
    columns = read_csv_columns(path)
    expected = {"k": np.array([record.k for record in records])}
    for key in record_columns(records):
        expected[key] = np.array([record.values.get(key, np.nan) for record in records])
    results = []
    for key, values in expected.items():
        reloaded = columns[key]
        same = np.array_equal(reloaded, values, equal_nan=True)
        if reloaded.shape == values.shape:
            deviation = float(np.max(np.nan_to_num(np.abs(reloaded - values), nan=0.0), initial=0.0))
        else:
            deviation = math.inf
        results.append(_check(f"{name} {key} reloads exactly", deviation, 0.0, same))
    return results


def run_verify(config: RunConfig) -> Tuple[List[CheckResult], bool]:
    """
    Run every acceptance check and write its artifacts to `config.output_dir`.

    Returns:
        Tuple[List[CheckResult], bool]: All checks and whether every one passed.
    """
    output_dir = config.output_dir
    os.makedirs(output_dir, exist_ok=True)
    logger.info(f"🔹 Running acceptance suite into {output_dir}")
    save_config_file(os.path.join(output_dir, "run_config.yaml"), config.model_dump(mode="json"))

    checks: List[CheckResult] = []
    checks += _guard("lame", lame_checks)
    checks += _guard("kernel", kernel_checks)
    checks += _guard("wronskian", wronskian_checks)
    checks += _guard("cubic identity", cubic_identity_checks)

    limits = {}
    figures = {WaveModel.QUADRATIC: "fig1_quadratic.svg", WaveModel.CUBIC: "fig2_cubic.svg"}
    for model, figure in figures.items():
        records = index_sweep(model, _sweep_grid(), config.n_quad, config.tolerances)
        index_path = os.path.join(output_dir, f"index_{model.value}.csv")
        write_records(index_path, records)
        checks += _guard(
            f"{model.value} index csv", lambda path=index_path, records=records: reload_checks(path, records)
        )
        keys = ("index",) if model == WaveModel.QUADRATIC else ("index", "half_normalized")
        plot_index_sweep(model, records, os.path.join(output_dir, figure), keys)
        checks += _sweep_checks(model, records)

        def run_limits(model=model):
            results, limits[model.value] = limit_checks(model)
            return results

        checks += _guard(f"{model.value} limits", run_limits)
        checks += _guard(f"{model.value} margins", lambda model=model: margin_checks(model, output_dir))

    checks += _guard("d-matrix", d_matrix_checks)
    checks += _guard("positivity", lambda: positivity_checks(config.trials, config.seed))
    checks += _guard(
        "peakon", lambda: peakon_checks(config.L_domain, config.x_max, config.n_peakon)
    )

    passed = all(check.passed for check in checks)
    write_csv(
        os.path.join(output_dir, "checks.csv"),
        ["name", "value", "threshold", "passed", "message"],
        [[c.name, c.value, c.threshold, c.passed, c.message] for c in checks],
    )
    write_json(
        os.path.join(output_dir, "summary.json"),
        {
            "passed": passed,
            "failed": [c.name for c in checks if not c.passed],
            "limits": limits,
            "checks": [c.model_dump() for c in checks],
        },
    )
    logger.info(f"{'✅' if passed else '❌'} Acceptance suite: {sum(c.passed for c in checks)}/{len(checks)} passed")
    return checks, passed
