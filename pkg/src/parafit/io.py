"""Canonical on-disk formats.

JSON files are emitted by a fixed-order, fixed-float-format writer so a
parse/serialize round trip is byte identical: keys in a frozen order, floats
as '%.17g', no whitespace, one trailing newline. Complex scalars are stored
as two-element [re, im] arrays.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .exceptions import NonFiniteError
from .models import (
    CompressedParametricModel,
    FrequencyResponseDataset,
    ParametricBasis,
    ParametricModel,
    PoleResidueModel,
)
from .multiparam import FrequencyResponseDataset2, ParametricModel2

__all__ = [
    "canonical_json",
    "format_number",
    "serialize_dataset",
    "parse_dataset",
    "write_dataset",
    "read_dataset",
    "serialize_model",
    "parse_model",
    "write_model",
    "read_model",
    "write_csv",
]

FILE_VERSION = 1


def format_number(x) -> str:
    """Canonical text for one real number."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteError("canonical files cannot hold non-finite numbers")
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def canonical_json(obj) -> str:
    """Serialize nested dict/list/str/bool/None/number data compactly.
    Dict keys keep insertion order; callers build dicts in canonical order."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return format_number(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        parts = (f"{json.dumps(str(k))}:{canonical_json(v)}" for k, v in obj.items())
        return "{" + ",".join(parts) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cpair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _cvec(arr) -> list:
    return [_cpair(z) for z in np.asarray(arr).ravel()]


def _cmat(arr) -> list:
    arr = np.asarray(arr)
    return [_cvec(row) for row in arr]


def _parse_cpair(item) -> complex:
    if not isinstance(item, list) or len(item) != 2:
        raise ValueError("complex values must be [re, im] pairs")
    return complex(float(item[0]), float(item[1]))


def _parse_cvec(items) -> np.ndarray:
    return np.array([_parse_cpair(it) for it in items], dtype=np.complex128)


def _parse_cmat(rows) -> np.ndarray:
    if not rows:
        return np.zeros((0, 0), dtype=np.complex128)
    mat = np.array([[_parse_cpair(it) for it in row] for row in rows], dtype=np.complex128)
    return mat


def _require(payload: dict, key: str):
    if key not in payload:
        raise ValueError(f"missing field {key!r}")
    return payload[key]


def _check_version(payload: dict) -> None:
    version = _require(payload, "version")
    if version != FILE_VERSION:
        raise ValueError(f"unsupported file version {version!r}")


def _basis_payload(basis: ParametricBasis) -> dict:
    out = {"kind": basis.kind}
    if basis.kind == "rational":
        out["poles"] = _cvec(basis.poles)
    else:
        out["degree"] = int(basis.degree)
    out["interval"] = [float(basis.interval[0]), float(basis.interval[1])]
    return out


def _parse_basis(payload) -> ParametricBasis:
    if not isinstance(payload, dict):
        raise ValueError("basis must be an object")
    kind = _require(payload, "kind")
    interval = _require(payload, "interval")
    if not isinstance(interval, list) or len(interval) != 2:
        raise ValueError("basis interval must be [a, b]")
    interval = (float(interval[0]), float(interval[1]))
    if kind == "rational":
        poles = _parse_cvec(_require(payload, "poles"))
        # no guard check here: stored poles were validated when fitted
        return ParametricBasis(kind="rational", interval=interval, poles=poles)
    if kind in ("monomial", "bernstein"):
        return ParametricBasis(kind=kind, interval=interval, degree=int(_require(payload, "degree")))
    raise ValueError(f"unknown basis kind {kind!r}")


def _real_params(name: str, values) -> list:
    arr = np.asarray(values, dtype=np.complex128).ravel()
    if np.any(arr.imag != 0.0):
        raise ValueError(f"dataset files store real {name} grids only")
    return [float(v) for v in arr.real]


def serialize_dataset(dataset) -> str:
    """Canonical JSON text (with trailing newline) for either dataset kind."""
    if isinstance(dataset, FrequencyResponseDataset):
        kind = "1p"
        parameters = _real_params("parameter", dataset.parameters)
    elif isinstance(dataset, FrequencyResponseDataset2):
        kind = "2p"
        parameters = {
            "p": _real_params("parameter", dataset.parameters_p),
            "q": _real_params("parameter", dataset.parameters_q),
        }
    else:
        raise TypeError(f"cannot serialize {type(dataset).__name__} as a dataset")
    payload = {
        "version": FILE_VERSION,
        "kind": kind,
        "frequencies": _cvec(dataset.frequencies),
        "parameters": parameters,
        "samples": _cmat(dataset.samples),
        "weights": None if dataset.weights is None else [
            [float(w) for w in row] for row in dataset.weights
        ],
        "real_symmetric": bool(dataset.real_symmetric),
    }
    return canonical_json(payload) + "\n"


def _parse_real_params(items) -> np.ndarray:
    if not isinstance(items, list):
        raise ValueError("parameter grids must be arrays of numbers")
    return np.array([float(v) for v in items], dtype=np.complex128)


def parse_dataset(text: str):
    """Inverse of serialize_dataset."""
    payload = json.loads(text)
    if not isinstance(payload, dict):
        raise ValueError("dataset file must hold a JSON object")
    _check_version(payload)
    kind = _require(payload, "kind")
    freqs = _parse_cvec(_require(payload, "frequencies"))
    parameters = _require(payload, "parameters")
    samples = _parse_cmat(_require(payload, "samples"))
    weights = payload.get("weights")
    if weights is not None:
        weights = np.array(weights, dtype=np.float64)
    real_symmetric = bool(payload.get("real_symmetric", False))
    if kind == "1p":
        return FrequencyResponseDataset(
            frequencies=freqs,
            parameters=_parse_real_params(parameters),
            samples=samples,
            weights=weights,
            real_symmetric=real_symmetric,
        )
    if kind == "2p":
        if not isinstance(parameters, dict):
            raise ValueError("two-parameter files hold parameters as {p, q}")
        return FrequencyResponseDataset2(
            frequencies=freqs,
            parameters_p=_parse_real_params(_require(parameters, "p")),
            parameters_q=_parse_real_params(_require(parameters, "q")),
            samples=samples,
            weights=weights,
            real_symmetric=real_symmetric,
        )
    raise ValueError(f"unknown dataset kind {kind!r}")


def _local_models_payload(local_models) -> list:
    return [
        {"poles": _cvec(m.poles), "residues": _cvec(m.residues)}
        for m in local_models
    ]


def _parse_local_models(items, real_flag: bool) -> tuple:
    models = []
    for item in items:
        if not isinstance(item, dict):
            raise ValueError("local models must be objects")
        models.append(
            PoleResidueModel(
                poles=_parse_cvec(_require(item, "poles")),
                residues=_parse_cvec(_require(item, "residues")),
                real_flag=real_flag,
            )
        )
    return tuple(models)


def serialize_model(model) -> str:
    """Canonical JSON text (with trailing newline) for any fitted model."""
    if isinstance(model, ParametricModel):
        payload = {
            "version": FILE_VERSION,
            "kind": "parametric",
            "local_models": _local_models_payload(model.local_models),
            "basis": _basis_payload(model.basis),
            "coefficients": _cmat(model.coefficients),
            "real_flag": bool(model.real_flag),
        }
    elif isinstance(model, CompressedParametricModel):
        payload = {
            "version": FILE_VERSION,
            "kind": "compressed",
            "local_models": [],
            "basis": _basis_payload(model.basis),
            "coefficients": [],
            "gram_chol": _cmat(model.gram_chol),
            "a_red": _cmat(model.a_red),
            "b_red": _cvec(model.b_red),
            "c_red_unweighted": _cmat(model.c_red_unweighted),
            "real_flag": bool(model.real_flag),
        }
    elif isinstance(model, ParametricModel2):
        payload = {
            "version": FILE_VERSION,
            "kind": "parametric2",
            "local_models": _local_models_payload(model.local_models),
            "basis_p": _basis_payload(model.basis_p),
            "basis_q": _basis_payload(model.basis_q),
            "coefficients": _cmat(model.coefficients),
            "real_flag": bool(model.real_flag),
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__} as a model")
    return canonical_json(payload) + "\n"


def parse_model(text: str):
    """Inverse of serialize_model."""
    payload = json.loads(text)
    if not isinstance(payload, dict):
        raise ValueError("model file must hold a JSON object")
    _check_version(payload)
    kind = _require(payload, "kind")
    real_flag = bool(payload.get("real_flag", False))
    if kind == "parametric":
        return ParametricModel(
            local_models=_parse_local_models(_require(payload, "local_models"), real_flag),
            basis=_parse_basis(_require(payload, "basis")),
            coefficients=_parse_cmat(_require(payload, "coefficients")),
            real_flag=real_flag,
        )
    if kind == "compressed":
        return CompressedParametricModel(
            basis=_parse_basis(_require(payload, "basis")),
            gram_chol=_parse_cmat(_require(payload, "gram_chol")),
            a_red=_parse_cmat(_require(payload, "a_red")),
            b_red=_parse_cvec(_require(payload, "b_red")),
            c_red_unweighted=_parse_cmat(_require(payload, "c_red_unweighted")),
            real_flag=real_flag,
        )
    if kind == "parametric2":
        return ParametricModel2(
            local_models=_parse_local_models(_require(payload, "local_models"), real_flag),
            basis_p=_parse_basis(_require(payload, "basis_p")),
            basis_q=_parse_basis(_require(payload, "basis_q")),
            coefficients=_parse_cmat(_require(payload, "coefficients")),
            real_flag=real_flag,
        )
    raise ValueError(f"unknown model kind {kind!r}")


def _write_text(path, text: str) -> None:
    with open(path, "wb") as handle:
        handle.write(text.encode("utf-8"))


def write_dataset(path, dataset) -> None:
    _write_text(path, serialize_dataset(dataset))


def read_dataset(path):
    with open(path, "rb") as handle:
        return parse_dataset(handle.read().decode("utf-8"))


def write_model(path, model) -> None:
    _write_text(path, serialize_model(model))


def read_model(path):
    with open(path, "rb") as handle:
        return parse_model(handle.read().decode("utf-8"))


def write_csv(path, header: list, rows: list) -> None:
    """CSV with LF newlines; cells are canonical numbers, literal strings
    pass through, None leaves the cell empty."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if cell is None:
                cells.append("")
            elif isinstance(cell, str):
                cells.append(cell)
            else:
                cells.append(format_number(cell))
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")
