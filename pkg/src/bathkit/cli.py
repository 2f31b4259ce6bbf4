"""Command-line front end for the discretization pipeline.

Subcommands: ``eval-sd`` (tabulate J and the quantum noise), ``discretize``
(compress a kernel into a bath model JSON), ``reconstruct`` (model vs
reference correlation series), ``validate`` (convergence study across a
tolerance sweep) and ``build-model`` (assemble a system-bath model JSON).

Data goes to stdout or --out; diagnostics go to stderr.  Every artifact
embeds a metadata block (tool version, full effective config, input
hashes) and contains no timestamps, so repeated runs are byte-identical.

Exit codes: 0 success, 2 config/parse error, 3 solver non-convergence,
4 resource cap, 5 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .discretize import (
    FdrGrid,
    discretize_bath,
    load_bath_model,
    reconstruct_bcf,
    reference_bcf,
    save_bath_model,
)
from .dynamics import convergence_study
from .errors import (
    BathkitError,
    ConvergenceError,
    ResourceLimitError,
    ValidationError,
)
from .hamiltonian import build_model, export_model, system_from_dict
from .specdens import NoiseKernel, Temperature, load_tabulated, sd_from_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_RESOURCE = 4
EXIT_VALIDATION_FAILED = 5


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _metadata(command: str, config: dict, input_paths) -> dict:
    return {
        "tool": f"bathkit {__version__}",
        "command": command,
        "config": config,
        "inputs": {p: _sha256(p) for p in input_paths},
    }


def _metadata_comment_block(meta: dict) -> str:
    lines = [f"# {meta['tool']}", f"# command: {meta['command']}"]
    lines.append("# config: " + json.dumps(meta["config"], sort_keys=True))
    lines.append("# inputs: " + json.dumps(meta["inputs"], sort_keys=True))
    return "\n".join(lines) + "\n"


def _write_text(out_path, text: str):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_sd(path: str):
    if path.endswith(".csv"):
        return load_tabulated(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return sd_from_config(config)


def _temperature_from_args(args) -> Temperature:
    if getattr(args, "zero_temp", False):
        return Temperature.zero()
    if getattr(args, "temp_k", None) is not None:
        return Temperature.finite(args.temp_k)
    return Temperature.zero()


def _load_system(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return system_from_dict(doc, pointer="")


# --- subcommands -----------------------------------------------------------


def _cmd_eval_sd(args) -> int:
    sd = _load_sd(args.sd)
    temperature = _temperature_from_args(args)
    kernel = NoiseKernel(sd, temperature)
    if args.n < 2:
        raise ValidationError(f"--n must be >= 2, got {args.n}")
    omegas = np.linspace(args.omega_min, args.omega_max, args.n)
    j_vals = sd.evaluate(omegas)
    s_vals = kernel.evaluate(omegas)

    config = {
        "sd": args.sd,
        "temperature_K": temperature.to_json(),
        "omega_min": args.omega_min,
        "omega_max": args.omega_max,
        "n": args.n,
        "out": args.out,
    }
    meta = _metadata("eval-sd", config, [args.sd])
    rows = [
        f"{float(w)!r},{float(j)!r},{float(s)!r}"
        for w, j, s in zip(omegas, j_vals, s_vals)
    ]
    text = (
        _metadata_comment_block(meta)
        + "omega_cm1,J_cm1,S_beta_cm1\n"
        + "\n".join(rows)
        + "\n"
    )
    _write_text(args.out, text)
    return EXIT_OK


def _cmd_discretize(args) -> int:
    sd = _load_sd(args.sd)
    temperature = _temperature_from_args(args)
    if not args.zero_temp and args.temp_k is None:
        raise ValidationError("provide --temp-k or --zero-temp")
    kernel = NoiseKernel(sd, temperature)
    grid = FdrGrid(
        t_max_fs=args.t_max_fs,
        omega_max_cm1=args.omega_max_cm1,
        n_time=args.n_time,
        n_freq=args.n_freq,
    )
    config = {
        "sd": args.sd,
        "temperature_K": temperature.to_json(),
        "t_max_fs": args.t_max_fs,
        "omega_max_cm1": args.omega_max_cm1,
        "n_time": args.n_time,
        "n_freq": args.n_freq,
        "tol": args.tol,
        "memory_cap_gib": args.memory_cap_gib,
        "out": args.out,
    }
    meta = _metadata("discretize", config, [args.sd])
    try:
        model = discretize_bath(
            kernel,
            grid,
            args.tol,
            memory_cap_bytes=int(args.memory_cap_gib * 2**30),
        )
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(
                "partial diagnostics: " + json.dumps(exc.diagnostics, sort_keys=True),
                file=sys.stderr,
            )
        return EXIT_NONCONVERGED
    save_bath_model(model, args.out, metadata=meta)
    d = model.diagnostics
    print(
        f"modes M={d.mode_count} (id rank r={d.id_rank}); "
        f"bcf errors: max_abs={d.max_abs_error:.6e} "
        f"mean_abs={d.mean_abs_error:.6e} rel={d.rel_error:.6e}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    model = load_bath_model(args.model)
    if args.n_time < 2:
        raise ValidationError(f"--n-time must be >= 2, got {args.n_time}")
    times = np.linspace(0.0, model.t_max_fs, args.n_time)
    c_model = reconstruct_bcf(model, times)
    c_ref = reference_bcf(model.kernel, times, model.omega_max_cm1)

    config = {"model": args.model, "n_time": args.n_time, "out": args.out}
    meta = _metadata("reconstruct", config, [args.model])
    rows = [
        f"{float(t)!r},{float(cm.real)!r},{float(cm.imag)!r},"
        f"{float(cr.real)!r},{float(cr.imag)!r}"
        for t, cm, cr in zip(times, c_model, c_ref)
    ]
    text = (
        _metadata_comment_block(meta)
        + "t_fs,re_C,im_C,re_C_ref,im_C_ref\n"
        + "\n".join(rows)
        + "\n"
    )
    _write_text(args.out, text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    sd = _load_sd(args.sd)
    temperature = _temperature_from_args(args)
    if not args.zero_temp and args.temp_k is None:
        raise ValidationError("provide --temp-k or --zero-temp")
    kernel = NoiseKernel(sd, temperature)
    system = _load_system(args.system)
    tols = [float(t) for t in args.tol_sweep.split(",") if t.strip()]
    if not tols:
        raise ValidationError("--tol-sweep must list at least one tolerance")
    grid = FdrGrid(
        t_max_fs=args.t_max_fs,
        omega_max_cm1=args.omega_max_cm1,
        n_time=args.n_time,
        n_freq=args.n_freq,
    )
    report = convergence_study(
        kernel, system, tols, grid, dimension_cap=args.dim_cap
    )
    config = {
        "sd": args.sd,
        "temperature_K": temperature.to_json(),
        "system": args.system,
        "tol_sweep": report.tols,
        "t_max_fs": args.t_max_fs,
        "omega_max_cm1": args.omega_max_cm1,
        "n_time": args.n_time,
        "n_freq": args.n_freq,
        "dim_cap": args.dim_cap,
        "out": args.out,
        "series_out": args.series_out,
    }
    meta = _metadata("validate", config, [args.sd, args.system])
    doc = {
        "metadata": meta,
        "observable": report.observable,
        "tols": list(report.tols),
        "mode_counts": list(report.mode_counts),
        "distances": list(report.distances),
        "slack": report.slack,
        "monotone_within_slack": report.monotone_within_slack,
    }
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")

    if args.series_out is not None:
        if report.observable == "dephasing_coherence":
            names = [f"coherence_tol{i}" for i in range(len(report.tols))]
            columns = [np.asarray(s) for s in report.series]
        else:
            names, columns = [], []
            for i, s in enumerate(report.series):
                for j in range(s.shape[1]):
                    names.append(f"pop{j + 1}_tol{i}")
                    columns.append(s[:, j])
        rows = []
        for k, t in enumerate(report.times):
            rows.append(",".join([repr(float(t))] + [repr(float(c[k])) for c in columns]))
        text = (
            _metadata_comment_block(meta)
            + ",".join(["t_fs"] + names)
            + "\n"
            + "\n".join(rows)
            + "\n"
        )
        _write_text(args.series_out, text)

    print(
        f"observable={report.observable} tols={list(report.tols)} "
        f"mode_counts={list(report.mode_counts)} distances={list(report.distances)}",
        file=sys.stderr,
    )
    return EXIT_OK if report.monotone_within_slack else EXIT_VALIDATION_FAILED


def _cmd_build_model(args) -> int:
    system = _load_system(args.system)
    baths = []
    for item in args.bath:
        if "=" not in item:
            raise ValidationError(
                f"--bath expects LABEL=path.json, got {item!r}"
            )
        label, path = item.split("=", 1)
        baths.append((label, load_bath_model(path)))
    model = build_model(system, baths)
    config = {
        "system": args.system,
        "baths": {label: path for label, path in (b.split("=", 1) for b in args.bath)},
        "out": args.out,
    }
    inputs = [args.system] + [b.split("=", 1)[1] for b in args.bath]
    meta = _metadata("build-model", config, inputs)
    export_model(model, args.out, metadata=meta)
    print(
        f"model with {model.system.dim} system levels, "
        f"{len(model.baths)} bath(s), {model.total_mode_count} total modes",
        file=sys.stderr,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bathkit",
        description="Compress structured harmonic environments into discrete mode sets.",
    )
    parser.add_argument("--version", action="version", version=f"bathkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval-sd", help="tabulate J(omega) and the quantum noise")
    p.add_argument("--sd", required=True, help="spectral density JSON config or CSV table")
    temp = p.add_mutually_exclusive_group()
    temp.add_argument("--temp-k", type=float, default=None, help="temperature in K (default: zero)")
    temp.add_argument("--zero-temp", action="store_true", help="force zero temperature")
    p.add_argument("--omega-min", type=float, required=True, help="first frequency (cm^-1)")
    p.add_argument("--omega-max", type=float, required=True, help="last frequency (cm^-1)")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p.set_defaults(func=_cmd_eval_sd)

    p = sub.add_parser("discretize", help="compress a kernel into a bath model JSON")
    p.add_argument("--sd", required=True)
    temp = p.add_mutually_exclusive_group()
    temp.add_argument("--temp-k", type=float, default=None)
    temp.add_argument("--zero-temp", action="store_true")
    p.add_argument("--t-max-fs", type=float, default=1000.0)
    p.add_argument("--omega-max-cm1", type=float, required=True)
    p.add_argument("--n-time", type=int, default=1000)
    p.add_argument("--n-freq", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--memory-cap-gib", type=float, default=4.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_discretize)

    p = sub.add_parser("reconstruct", help="model vs reference correlation series CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--n-time", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("validate", help="convergence study across a tolerance sweep")
    p.add_argument("--sd", required=True)
    temp = p.add_mutually_exclusive_group()
    temp.add_argument("--temp-k", type=float, default=None)
    temp.add_argument("--zero-temp", action="store_true")
    p.add_argument("--system", required=True, help="system spec JSON")
    p.add_argument("--tol-sweep", required=True, help="comma-separated tolerances")
    p.add_argument("--t-max-fs", type=float, default=1000.0)
    p.add_argument("--omega-max-cm1", type=float, required=True)
    p.add_argument("--n-time", type=int, default=1000)
    p.add_argument("--n-freq", type=int, default=10000)
    p.add_argument("--dim-cap", type=int, default=1 << 22)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--series-out", default=None, help="optional observable series CSV")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("build-model", help="assemble a system-bath model JSON")
    p.add_argument("--system", required=True)
    p.add_argument(
        "--bath",
        action="append",
        required=True,
        metavar="LABEL=PATH",
        help="bath model JSON for a label; repeatable",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BathkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
