"""
Command-line surface: `wave-stability <command> [flags]`.

All moduli are Jacobi moduli k, not the parameter m = k^2.
"""

import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from wave_stability import __version__
from wave_stability.core.data_conversion import (
    csv_text,
    json_text,
    load_config_file,
    write_csv,
    write_json,
)
from wave_stability.core.errors import WaveStabilityError
from wave_stability.core.hillop import (
    assemble,
    eig_sym,
    kernel_check,
    lame_check,
    rescaled_operator,
    spectrum_dump,
)
from wave_stability.core.linspec import (
    constraint_check,
    pencil_dump,
    pencil_profile,
    pencil_spectrum,
    peakon_chain_check,
    peakon_mode_check,
    stability_margin_sweep,
)
from wave_stability.core.logger import logger, set_verbosity
from wave_stability.core.plotting import plot_index_sweep
from wave_stability.core.positivity import certificate_dump, certify_hill
from wave_stability.core.profiles import (
    change_of_variables,
    check_relations,
    cubic_profile,
    peakon_profile,
    profile_residual,
    quadratic_profile,
    sample_profile,
)
from wave_stability.core.schemas import (
    Command,
    Normalization,
    RecordStatus,
    RunConfig,
    SweepRecord,
    Verdict,
    WaveModel,
)
from wave_stability.core.sweep import index_sweep, record_columns, write_records
from wave_stability.core.verify import run_verify

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

PROFILE_COLUMNS = ["y", "phi", "dphi"]


def _shared_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parent.add_argument("--model", choices=[m.value for m in WaveModel])
    parent.add_argument("--k", type=float, help="Jacobi modulus k in (0, 1).")
    parent.add_argument("--k-min", dest="k_min", type=float)
    parent.add_argument("--k-max", dest="k_max", type=float)
    parent.add_argument("--steps", type=int)
    parent.add_argument("--n", type=int, help="Collocation points (even).")
    parent.add_argument("--n-quad", dest="n_quad", type=int)
    parent.add_argument("--shift-re", dest="shift_re", type=float)
    parent.add_argument("--shift-im", dest="shift_im", type=float)
    parent.add_argument("--L", dest="L_domain", type=float, help="Peakon domain half-length.")
    parent.add_argument("--x-max", dest="x_max", type=float)
    parent.add_argument("--n-peakon", dest="n_peakon", type=int)
    parent.add_argument("--seed", type=int)
    parent.add_argument("--trials", type=int)
    parent.add_argument("--out", help="CSV output path (stdout if omitted).")
    parent.add_argument("--svg", help="SVG figure path.")
    parent.add_argument("--json", dest="json_out", help="JSON output path (stdout if omitted).")
    parent.add_argument("--output-dir", dest="output_dir")
    parent.add_argument("--config", help="JSON, YAML or TOML file; its values override flags.")
    parent.add_argument("--verbose", action="store_true")
    parent.add_argument("--quiet", action="store_true")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wave-stability",
        description="Periodic waves of the Ostrovsky and short-pulse equations and their stability.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    parent = _shared_flags()
    helps = {
        Command.WAVE: "Sample a wave profile to CSV.",
        Command.SPECTRUM: "Lowest eigenvalues of the Hill operator.",
        Command.INDEX: "Stability index <L^-1 Phi', Phi'> over k.",
        Command.PENCIL: "Eigenvalues of L Z = mu Z'.",
        Command.PEAKON: "Unstable mode of the parabolic peakon.",
        Command.CERTIFY: "Positivity certificate of the Hill operator.",
        Command.VERIFY: "Run the acceptance suite.",
    }
    for command, text in helps.items():
        commands.add_parser(command.value, parents=[parent], help=text)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge flags with the optional config file and validate.

    Raises:
        ValidationError: On invalid or unknown settings.
        ValueError: If the config file format is unsupported.
    """
    values: Dict[str, Any] = {
        key: value
        for key, value in vars(args).items()
        if key not in ("config", "verbose", "quiet")
    }
    config_path = getattr(args, "config", None)
    if config_path:
        loaded = load_config_file(config_path)
        logger.info(f"🔹 Loaded settings from {config_path}: {sorted(loaded)}")
        values.update(loaded)
    return RunConfig.model_validate(values)


def _emit_json(config: RunConfig, data: Any) -> None:
    if config.json_out:
        write_json(config.json_out, data)
    else:
        print(json.dumps(json.loads(json_text(data)), indent=4, sort_keys=True))


def _emit_csv(config: RunConfig, header: Sequence[str], rows) -> None:
    if config.out:
        write_csv(config.out, header, rows)
    else:
        sys.stdout.write(csv_text(header, rows))


def _emit_records(config: RunConfig, records: List[SweepRecord]) -> None:
    if config.out:
        write_records(config.out, records)
        return
    columns = record_columns(records)
    rows = [
        [r.k] + [r.values.get(c, float("nan")) for c in columns] + [r.status.value, r.message]
        for r in records
    ]
    sys.stdout.write(csv_text(["k"] + columns + ["status", "message"], rows))


def _elliptic_profile(config: RunConfig, k: float):
    if config.model == WaveModel.QUADRATIC:
        return quadratic_profile(k)
    return cubic_profile(k, Normalization.CANONICAL)


def run_wave(config: RunConfig) -> int:
    if config.model == WaveModel.PEAKON:
        profile, cov = peakon_profile(config.L_domain)
        summary = {
            "model": "peakon",
            "L_domain": config.L_domain,
            "c": profile.c,
            "monotonicity_margin": cov.monotonicity_margin,
        }
    else:
        profile = _elliptic_profile(config, config.moduli()[0])
        cov = change_of_variables(profile)
        summary = {
            "model": config.model.value,
            "k": profile.k,
            "c": profile.c,
            "relations_residual": check_relations(profile),
            "profile_residual": profile_residual(profile, config.n),
            "monotonicity_margin": cov.monotonicity_margin,
        }
    half_width = config.x_max / profile.alpha if config.model == WaveModel.PEAKON else None
    samples = sample_profile(profile, config.n, half_width)
    _emit_csv(config, PROFILE_COLUMNS, samples.tolist())
    if config.json_out:
        write_json(config.json_out, summary)
    return EXIT_OK


def run_spectrum(config: RunConfig) -> int:
    dumps = []
    for k in config.moduli():
        lame = lame_check(k, config.n)
        profile = _elliptic_profile(config, k)
        kernel = kernel_check(profile, config.n, config.tolerances.hill_kernel)
        eigenvalues = eig_sym(
            rescaled_operator(profile, config.n), want_vectors=False
        ).eigenvalues[:6]
        dump = spectrum_dump(
            config.model,
            k,
            config.n,
            eigenvalues,
            {"nu": lame.nu_closed, "eps": lame.eps_closed},
            lame.max_rel_err,
        )
        dump["kernel_residual"] = kernel.residual
        dumps.append(dump)
    _emit_json(config, dumps[0] if len(dumps) == 1 else dumps)
    return EXIT_OK


def run_index(config: RunConfig) -> int:
    records = index_sweep(config.model, config.moduli(), config.n_quad, config.tolerances)
    _emit_records(config, records)
    if config.svg:
        keys = ("index",) if config.model == WaveModel.QUADRATIC else ("index", "half_normalized")
        plot_index_sweep(config.model, records, config.svg, keys)
    return _records_exit(records)


def run_pencil(config: RunConfig) -> int:
    moduli = config.moduli()
    if len(moduli) > 1:
        sweep = stability_margin_sweep(
            config.model, moduli, config.n, config.shift, config.tolerances
        )
        _emit_records(config, sweep.records)
        return _records_exit(sweep.records)

    k = moduli[0]
    profile = pencil_profile(config.model, k)
    op = assemble(profile, config.n)
    spectrum = pencil_spectrum(op, config.shift, config.tolerances, config.seed)
    constraints = constraint_check(spectrum, profile, op, config.tolerances)
    _emit_json(config, pencil_dump(config.model, k, spectrum, constraints))
    stable = spectrum.max_re < config.tolerances.imaginary_axis
    return EXIT_OK if stable and constraints.passed else EXIT_FAILURE


def run_peakon(config: RunConfig) -> int:
    mode = peakon_mode_check(config.L_domain, config.x_max, config.n_peakon, config.tolerances)
    chain = peakon_chain_check(config.L_domain, config.x_max, tolerances=config.tolerances)
    _emit_json(config, {"mode": mode.model_dump(), "chain": chain.model_dump()})
    return EXIT_OK


def run_certify(config: RunConfig) -> int:
    dumps = []
    for k in config.moduli():
        check = certify_hill(config.model, k, config.n, config.tolerances)
        dumps.append(certificate_dump(config.model, k, config.n, check))
    _emit_json(config, dumps[0] if len(dumps) == 1 else dumps)
    holds = all(d["verdict"] == Verdict.CONCLUSION_HOLDS.value for d in dumps)
    return EXIT_OK if holds else EXIT_FAILURE


def run_verify_command(config: RunConfig) -> int:
    _, passed = run_verify(config)
    return EXIT_OK if passed else EXIT_FAILURE


def _records_exit(records: List[SweepRecord]) -> int:
    failed = [r.k for r in records if r.status == RecordStatus.FAIL]
    if failed:
        logger.error(f"❌ {len(failed)} fail rows, first at k={failed[0]}")
        return EXIT_FAILURE
    return EXIT_OK


HANDLERS = {
    Command.WAVE: run_wave,
    Command.SPECTRUM: run_spectrum,
    Command.INDEX: run_index,
    Command.PENCIL: run_pencil,
    Command.PEAKON: run_peakon,
    Command.CERTIFY: run_certify,
    Command.VERIFY: run_verify_command,
}


def run(config: RunConfig) -> int:
    """
    Dispatch a validated config to its command.

    Returns:
        int: 0 on success, 1 on fail rows or a numerical failure.
    """
    logger.info(f"🔹 Running {config.command.value} ({config.model.value})")
    try:
        return HANDLERS[config.command](config)
    except WaveStabilityError as e:
        logger.error(f"❌ {type(e).__name__}: {e.message}")
        sys.stderr.write(json_text(e.to_dict()) + "\n")
    except (OSError, ValueError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        sys.stderr.write(json_text({"error": type(e).__name__, "message": str(e), "details": {}}) + "\n")
    return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_verbosity(getattr(args, "verbose", False), getattr(args, "quiet", False))
    try:
        config = build_config(args)
    except ValidationError as e:
        sys.stderr.write(f"{parser.prog}: invalid settings\n{e}\n")
        return EXIT_USAGE
    except (OSError, ValueError) as e:
        sys.stderr.write(f"{parser.prog}: {e}\n")
        return EXIT_USAGE
    return run(config)
