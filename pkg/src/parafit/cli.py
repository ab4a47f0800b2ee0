"""Command line front end.

Subcommands: generate (benchmark datasets), fit (phase 1), compress
(phase 2), eval (error metrics on a grid), bode (magnitude curves).

Exit codes: 0 success, 2 bad flags or malformed/mismatched files, 3 a
sub-solver stopped on its iteration budget (outputs are still written),
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import io as pio
from ._threads import thread_count
from .bench import ChainSpec, ConvDiffSpec, PenzlSpec, sample_model
from .compress import IRKAConfig, compress
from .coupled import Phase1Config, fit_fixed_basis, fit_local_models
from .exceptions import (
    BasisMismatchError,
    GuardViolationError,
    NotConvergedWarning,
    OutOfRangeError,
    ParafitError,
    ProblemTooLargeError,
    ShapeMismatchError,
)
from .metrics import h2_rel, hinf_rel, rms_rel
from .models import (
    CompressedParametricModel,
    ParametricBasis,
    ParametricModel,
    eval_compressed_grid,
    eval_parametric_grid,
)
from .multiparam import (
    FrequencyResponseDataset2,
    ParametricModel2,
    TwoParamConfig,
    eval_two_param_grid,
    fit_two_param,
)
from .varpro import VarproConfig, default_initial_poles, fit_adaptive_basis
from .vecfit import VFConfig
from .io import format_number

__all__ = ["main"]

_TRUTH_DEFAULTS = {
    "penzl": {
        "freq_min": 1e-1, "freq_max": 1e5, "freq_count": 100,
        "param_min": 1.0, "param_max": 5.0, "param_count": 8,
    },
    "chain": {
        "freq_min": 1e-3, "freq_max": 1e3, "freq_count": 80,
        "param_min": 0.01, "param_max": 0.8, "param_count": 10,
        "size": 200,
    },
    "convdiff": {
        "freq_min": 1e2, "freq_max": 1e6, "freq_count": 100,
        "param_min": 0.0, "param_max": 1.0, "param_count": 6,
        "param2_min": 0.0, "param2_max": 1.0, "param2_count": 6,
        "size": 20,
    },
}


def _make_evaluator(name: str, size: int | None):
    if name == "penzl":
        if size is not None:
            raise ValueError("--size does not apply to the penzl model")
        return PenzlSpec()
    if name == "chain":
        return ChainSpec(n=size if size is not None else 200)
    if name == "convdiff":
        return ConvDiffSpec(grid_n=size if size is not None else 20)
    raise ValueError(f"unknown benchmark model {name!r}")


def _pick(args_value, defaults: dict, key: str):
    if args_value is not None:
        return args_value
    if key not in defaults:
        raise ValueError(f"no default for {key.replace('_', '-')} here; pass it explicitly")
    return defaults[key]


def _freq_grid(fmin: float, fmax: float, count: int, spacing: str = "log") -> np.ndarray:
    if not 0.0 < fmin < fmax:
        raise ValueError("need 0 < freq-min < freq-max")
    if count < 2:
        raise ValueError("freq-count must be at least 2")
    if spacing == "lin":
        return 1j * np.linspace(fmin, fmax, count)
    return 1j * np.geomspace(fmin, fmax, count)


def _hull(values) -> tuple[float, float]:
    re = np.asarray(values, dtype=np.complex128).real
    a, b = float(np.min(re)), float(np.max(re))
    if not a < b:
        raise ValueError("parameter samples span a degenerate interval")
    return a, b


def _parse_basis_flag(text: str) -> tuple[str, int]:
    kind, sep, count = text.partition(":")
    if not sep:
        raise ValueError("--basis must look like monomial:2, bernstein:3 or rational:4")
    try:
        size = int(count)
    except ValueError as exc:
        raise ValueError(f"bad basis size {count!r}") from exc
    if kind in ("monomial", "bernstein"):
        if size < 0:
            raise ValueError("polynomial degree must be nonnegative")
    elif kind == "rational":
        if size < 1:
            raise ValueError("rational basis needs at least one pole")
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return kind, size


def _build_basis(kind: str, size: int, interval: tuple[float, float]) -> ParametricBasis:
    if kind == "monomial":
        return ParametricBasis.monomial(size, interval)
    if kind == "bernstein":
        return ParametricBasis.bernstein(size, interval)
    return ParametricBasis.rational(default_initial_poles(size, interval), interval)


def _param_cell(p: complex) -> str:
    p = complex(p)
    if p.imag == 0.0:
        return format_number(p.real)
    sign = "+" if p.imag >= 0.0 else "-"
    return f"{format_number(p.real)}{sign}{format_number(abs(p.imag))}j"


def _model_values(model, freqs, params, params_q=None) -> np.ndarray:
    if isinstance(model, ParametricModel2):
        if params_q is None:
            raise ValueError("two-parameter model needs a parameter grid on both axes")
        return eval_two_param_grid(model, freqs, params, params_q)
    if params_q is not None:
        raise ValueError("second parameter axis only applies to two-parameter models")
    if isinstance(model, CompressedParametricModel):
        return eval_compressed_grid(model, freqs, params)
    return eval_parametric_grid(model, freqs, params)


def cmd_generate(args) -> int:
    defaults = _TRUTH_DEFAULTS[args.model]
    freqs = _freq_grid(
        _pick(args.freq_min, defaults, "freq_min"),
        _pick(args.freq_max, defaults, "freq_max"),
        int(_pick(args.freq_count, defaults, "freq_count")),
        args.freq_spacing,
    )
    params = np.linspace(
        _pick(args.param_min, defaults, "param_min"),
        _pick(args.param_max, defaults, "param_max"),
        int(_pick(args.param_count, defaults, "param_count")),
    )
    evaluator = _make_evaluator(args.model, args.size)
    if args.model == "convdiff":
        params_q = np.linspace(
            _pick(args.param2_min, defaults, "param2_min"),
            _pick(args.param2_max, defaults, "param2_max"),
            int(_pick(args.param2_count, defaults, "param2_count")),
        )
        dataset = sample_model(evaluator, freqs, params, params_q)
        columns = params.size * params_q.size
    else:
        if args.param2_min is not None or args.param2_max is not None or args.param2_count is not None:
            raise ValueError(f"{args.model} has a single parameter; --param2-* does not apply")
        dataset = sample_model(evaluator, freqs, params)
        columns = params.size
    pio.write_dataset(args.out, dataset)
    print(f"generate: wrote {args.out} ({freqs.size} frequencies x {columns} parameter points)")
    return 0


def cmd_fit(args) -> int:
    dataset = pio.read_dataset(args.data)
    kind, size = _parse_basis_flag(args.basis)
    vf = VFConfig(
        order=args.local_order,
        max_iters=args.max_iters if (args.max_iters and not args.adaptive) else 50,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if isinstance(dataset, FrequencyResponseDataset2):
            if args.adaptive:
                raise ValueError("--adaptive applies to single-parameter data only")
            if args.real:
                raise ValueError("--real applies to single-parameter data only")
            config = TwoParamConfig(
                basis_p=_build_basis(kind, size, _hull(dataset.parameters_p)),
                basis_q=_build_basis(kind, size, _hull(dataset.parameters_q)),
                vf=vf,
                decimation=args.decimation,
            )
            model, info = fit_two_param(dataset, config, full_output=True)
            residual, converged = info["residual"], info["converged"]
        else:
            if args.decimation != 1:
                raise ValueError("--decimation applies to two-parameter data only")
            interval = _hull(dataset.parameters)
            if args.adaptive:
                if kind != "rational":
                    raise ValueError("--adaptive needs --basis rational:<count>")
                local_models, local_infos = fit_local_models(
                    dataset,
                    Phase1Config(basis=ParametricBasis.monomial(0, interval), vf=vf),
                )
                vconfig = VarproConfig(max_iters=args.max_iters or 100)
                model, _, vinfo = fit_adaptive_basis(
                    dataset, local_models, size,
                    config=vconfig, enforce_real=args.real, full_output=True,
                )
                fit_vals = eval_parametric_grid(model, dataset.frequencies, dataset.parameters)
                residual = rms_rel(fit_vals, dataset.samples)
                converged = vinfo.converged and all(i.converged for i in local_infos)
            else:
                config = Phase1Config(
                    basis=_build_basis(kind, size, interval),
                    vf=vf,
                    enforce_real=args.real,
                )
                model, info = fit_fixed_basis(dataset, config, full_output=True)
                residual, converged = info.residual, info.converged
    pio.write_model(args.out, model)
    for caught_warning in caught:
        print(f"warning: {caught_warning.message}", file=sys.stderr)
    if isinstance(dataset, FrequencyResponseDataset2):
        fit_vals = _model_values(model, dataset.frequencies, dataset.parameters_p, dataset.parameters_q)
        cells = [
            f"{_param_cell(p)};{_param_cell(q)}"
            for p in dataset.parameters_p for q in dataset.parameters_q
        ]
    else:
        fit_vals = _model_values(model, dataset.frequencies, dataset.parameters)
        cells = [_param_cell(p) for p in dataset.parameters]
    per_param = " ".join(
        f"{cell}:{rms_rel(fit_vals[:, j], dataset.samples[:, j]):.3e}"
        for j, cell in enumerate(cells)
    )
    print(
        f"fit: wrote {args.out} (local order {args.local_order}, basis {args.basis}, "
        f"rel residual {residual:.3e}, converged={converged}) per-param rms: {per_param}"
    )
    return 0 if converged else 3


def cmd_compress(args) -> int:
    model = pio.read_model(args.model)
    if not isinstance(model, ParametricModel):
        raise ValueError("compress expects an uncompressed single-parameter model file")
    config = IRKAConfig(
        n_red=args.order,
        max_iters=args.max_iters or 100,
        shift_tol=args.shift_tol,
        init=args.init,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        compressed, info = compress(model, config, full_output=True)
    pio.write_model(args.out, compressed)
    for caught_warning in caught:
        print(f"warning: {caught_warning.message}", file=sys.stderr)
    rel = info.joint_error / max(info.joint_norm, np.finfo(float).tiny)
    print(
        f"compress: wrote {args.out} (order {args.order}, joint error "
        f"{info.joint_error:.6e}, relative {rel:.6e})"
    )
    return 0 if info.irka.converged else 3


def _metric_row(cell: str, requested: set, fit, ref, omega) -> list:
    return [
        cell,
        rms_rel(fit, ref) if "rms" in requested else None,
        h2_rel(fit, ref, omega) if "h2" in requested else None,
        hinf_rel(fit, ref) if "hinf" in requested else None,
    ]


def cmd_eval(args) -> int:
    model = pio.read_model(args.model)
    requested = set(filter(None, args.metrics.split(",")))
    unknown = requested - {"rms", "h2", "hinf"}
    if unknown or not requested:
        raise ValueError("--metrics must be a nonempty subset of rms,h2,hinf")
    two = isinstance(model, ParametricModel2)
    if (args.data is None) == (args.truth is None):
        raise ValueError("eval needs exactly one of --data or --truth")

    if args.data is not None:
        dataset = pio.read_dataset(args.data)
        if two != isinstance(dataset, FrequencyResponseDataset2):
            raise ValueError("model and dataset disagree on the number of parameters")
        freqs = dataset.frequencies
        if two:
            params_p, params_q = dataset.parameters_p, dataset.parameters_q
        else:
            params_p, params_q = dataset.parameters, None
        reference = dataset.samples
    else:
        evaluator = _make_evaluator(args.truth, args.size)
        defaults = _TRUTH_DEFAULTS[args.truth]
        freqs = _freq_grid(
            _pick(args.freq_min, defaults, "freq_min"),
            _pick(args.freq_max, defaults, "freq_max"),
            int(_pick(args.freq_count, defaults, "freq_count")),
        )
        count = args.param_grid
        if two:
            if args.truth != "convdiff":
                raise ValueError("two-parameter models validate against convdiff only")
            params_p = np.linspace(*model.basis_p.interval, count)
            params_q = np.linspace(*model.basis_q.interval, count)
            reference = sample_model(evaluator, freqs, params_p, params_q).samples
        else:
            if args.truth == "convdiff":
                raise ValueError("convdiff is two-parameter; the model has one")
            params_p = np.linspace(*model.basis.interval, count)
            params_q = None
            reference = sample_model(evaluator, freqs, params_p).samples

    fit_vals = _model_values(model, freqs, params_p, params_q)
    omega = np.abs(freqs.imag)
    rows = []
    if two:
        m_q = params_q.size
        for j1, p in enumerate(params_p):
            for j2, q in enumerate(params_q):
                col = j1 * m_q + j2
                cell = f"{_param_cell(p)};{_param_cell(q)}"
                rows.append(_metric_row(cell, requested, fit_vals[:, col], reference[:, col], omega))
    else:
        for j, p in enumerate(params_p):
            rows.append(_metric_row(_param_cell(p), requested, fit_vals[:, j], reference[:, j], omega))
    pio.write_csv(args.out, ["param", "rms", "h2_rel", "hinf_rel"], rows)
    print(f"eval: wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_bode(args) -> int:
    model = pio.read_model(args.model)
    freqs = _freq_grid(args.freq_min, args.freq_max, args.freq_count)
    two = isinstance(model, ParametricModel2)
    if two and args.param2 is None:
        raise ValueError("--param2 is required for two-parameter models")
    if not two and args.param2 is not None:
        raise ValueError("--param2 only applies to two-parameter models")
    params_q = np.array([args.param2]) if two else None
    fit_vals = _model_values(model, freqs, np.array([args.param]), params_q)[:, 0]
    omega = np.abs(freqs.imag)
    if args.truth is not None:
        evaluator = _make_evaluator(args.truth, args.size)
        if two:
            true_vals = np.array([evaluator.eval(s, args.param, args.param2) for s in freqs])
        else:
            true_vals = np.array([evaluator.eval(s, args.param) for s in freqs])
        header = ["omega", "abs_true", "abs_fit", "abs_err"]
        rows = [
            [w, abs(t), abs(f), abs(f - t)]
            for w, t, f in zip(omega, true_vals, fit_vals)
        ]
    else:
        header = ["omega", "abs_fit"]
        rows = [[w, abs(f)] for w, f in zip(omega, fit_vals)]
    pio.write_csv(args.out, header, rows)
    print(f"bode: wrote {args.out} ({len(rows)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parafit",
        description="Fit and compress parametric rational models of frequency response data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample a benchmark model into a dataset file")
    gen.add_argument("--model", required=True, choices=("penzl", "chain", "convdiff"))
    gen.add_argument("--out", required=True)
    gen.add_argument("--freq-min", type=float)
    gen.add_argument("--freq-max", type=float)
    gen.add_argument("--freq-count", type=int)
    gen.add_argument("--freq-spacing", choices=("log", "lin"), default="log")
    gen.add_argument("--param-min", type=float)
    gen.add_argument("--param-max", type=float)
    gen.add_argument("--param-count", type=int)
    gen.add_argument("--param2-min", type=float)
    gen.add_argument("--param2-max", type=float)
    gen.add_argument("--param2-count", type=int)
    gen.add_argument("--size", type=int, help="state count (chain) or grid width (convdiff)")
    gen.set_defaults(func=cmd_generate)

    fit = sub.add_parser("fit", help="fit a parametric model to a dataset")
    fit.add_argument("--data", required=True)
    fit.add_argument("--local-order", required=True, type=int)
    fit.add_argument(
        "--basis", required=True,
        help="monomial:<degree>, bernstein:<degree> or rational:<pole count>",
    )
    fit.add_argument("--adaptive", action="store_true",
                     help="optimize rational basis poles (single-parameter only)")
    fit.add_argument("--real", action="store_true",
                     help="project coefficients onto conjugate-symmetric models")
    fit.add_argument("--max-iters", type=int)
    fit.add_argument("--decimation", type=int, default=1,
                     help="local-model stride over the flattened two-parameter grid")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    comp = sub.add_parser("compress", help="reduce a fitted model to a small joint realization")
    comp.add_argument("--model", required=True)
    comp.add_argument("--order", required=True, type=int)
    comp.add_argument("--max-iters", type=int)
    comp.add_argument("--shift-tol", type=float, default=1e-6)
    comp.add_argument("--init", choices=("dominant-poles", "log-spaced"), default="dominant-poles")
    comp.add_argument("--out", required=True)
    comp.set_defaults(func=cmd_compress)

    eva = sub.add_parser("eval", help="tabulate error metrics per parameter point")
    eva.add_argument("--model", required=True)
    eva.add_argument("--data", help="dataset file holding the reference values")
    eva.add_argument("--truth", choices=("penzl", "chain", "convdiff"),
                     help="sample the reference from a benchmark instead")
    eva.add_argument("--size", type=int)
    eva.add_argument("--param-grid", type=int, default=50,
                     help="validation points per parameter axis (--truth only)")
    eva.add_argument("--freq-min", type=float)
    eva.add_argument("--freq-max", type=float)
    eva.add_argument("--freq-count", type=int)
    eva.add_argument("--metrics", default="rms,h2,hinf")
    eva.add_argument("--out", required=True)
    eva.set_defaults(func=cmd_eval)

    bode = sub.add_parser("bode", help="magnitude curve at one parameter point")
    bode.add_argument("--model", required=True)
    bode.add_argument("--param", required=True, type=float)
    bode.add_argument("--param2", type=float)
    bode.add_argument("--truth", choices=("penzl", "chain", "convdiff"))
    bode.add_argument("--size", type=int)
    bode.add_argument("--freq-min", type=float, default=1e-1)
    bode.add_argument("--freq-max", type=float, default=1e5)
    bode.add_argument("--freq-count", type=int, default=200)
    bode.add_argument("--out", required=True)
    bode.set_defaults(func=cmd_bode)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_count()  # fail fast on a malformed PARAFIT_THREADS
        return args.func(args)
    except (
        ShapeMismatchError,
        OutOfRangeError,
        GuardViolationError,
        ProblemTooLargeError,
        BasisMismatchError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParafitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
