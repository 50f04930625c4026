"""Dataset readers/writers (CSV, LIBSVM) and the plain-text model format."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Dataset, FitConfig, PrimalSolution

MODEL_MAGIC = "dualloco-model 1"


class ParseError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


def _float(text, path, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r}", path, line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", path, line)
    return value


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_csv(path):
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if not rows and width is None and not all(_is_number(c) for c in row):
                width = len(row)  # header row
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"expected {width} fields, found {len(row)}", path, lineno)
            rows.append([_float(c, path, lineno) for c in row])
    if not rows:
        raise ParseError("no data rows", path)
    if width < 2:
        raise ParseError("need a label column and at least one feature column", path)
    arr = np.array(rows)
    return arr[:, 1:], arr[:, 0]


def _read_libsvm(path, dimension):
    labels, entries = [], []
    max_index = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_float(tokens[0], path, lineno))
            row = {}
            for tok in tokens[1:]:
                idx_text, sep, val_text = tok.partition(":")
                if not sep or not idx_text.isdigit() or int(idx_text) < 1:
                    raise ParseError(f"malformed entry {tok!r}", path, lineno)
                idx = int(idx_text)
                if idx in row:
                    raise ParseError(f"duplicate index {idx}", path, lineno)
                if dimension is not None and idx > dimension:
                    raise ParseError(f"index {idx} exceeds dimension {dimension}", path, lineno)
                row[idx] = _float(val_text, path, lineno)
                max_index = max(max_index, idx)
            entries.append(row)
    if not labels:
        raise ParseError("no data rows", path)
    p = dimension if dimension is not None else max_index
    if p < 1:
        raise ParseError("no features found; pass a dimension", path)
    X = np.zeros((len(labels), p))
    for i, row in enumerate(entries):
        for idx, val in row.items():
            X[i, idx - 1] = val
    return X, np.array(labels)


def load_dataset(path, fmt: str = "csv", dimension: Optional[int] = None,
                 binarize: Optional[float] = None) -> Dataset:
    """Read a dataset. CSV: label first, then features, optional header row.

    LIBSVM indices are 1-based; the matrix is densified to ``dimension`` or to
    the largest index seen. ``binarize`` maps labels equal to it to +1 and all
    others to -1.
    """
    if fmt == "csv":
        X, y = _read_csv(path)
    elif fmt == "libsvm":
        X, y = _read_libsvm(path, dimension)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if binarize is not None:
        y = np.where(y == binarize, 1.0, -1.0)
    return Dataset(X, y)


def save_dataset(data: Dataset, path, fmt: str = "csv") -> None:
    with open(path, "w", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh)
            for label, row in zip(data.labels, data.features):
                writer.writerow([repr(float(label))] + [repr(float(v)) for v in row])
        elif fmt == "libsvm":
            for label, row in zip(data.labels, data.features):
                nz = np.flatnonzero(row)
                items = " ".join(f"{j + 1}:{float(row[j])!r}" for j in nz)
                fh.write(f"{float(label)!r} {items}".rstrip() + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")


def save_model(solution: PrimalSolution, path) -> None:
    """Header of key=value lines, a ``---`` separator, then ``index value`` lines.

    Values are written with ``repr`` so they read back bit-for-bit.
    """
    lines = [MODEL_MAGIC]
    if solution.config_echo is not None:
        for key, value in solution.config_echo.as_dict().items():
            lines.append(f"config.{key}={value!r}" if isinstance(value, float) else f"config.{key}={value}")
    for key, value in sorted((solution.metrics or {}).items()):
        if isinstance(value, (int, float, str)) and not isinstance(value, bool):
            lines.append(f"metric.{key}={value!r}" if isinstance(value, float) else f"metric.{key}={value}")
    lines.append(f"p={solution.p}")
    lines.append("---")
    lines.extend(f"{j} {float(v)!r}" for j, v in enumerate(solution.coefficients))
    Path(path).write_text("\n".join(lines) + "\n")


_CONFIG_TYPES = {
    "lambda": float, "num_workers": int, "loss": str, "smoothing": float, "gap_tol": float,
    "max_epochs": int, "seed": int, "projection": str,
}


def load_model(path) -> PrimalSolution:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != MODEL_MAGIC:
        raise ParseError("not a model file", path, 1)
    try:
        sep = text.index("---")
    except ValueError:
        raise ParseError("missing '---' separator", path) from None
    config, metrics, p = {}, {}, None
    for lineno, line in enumerate(text[1:sep], start=2):
        key, eq, value = line.partition("=")
        if not eq:
            raise ParseError(f"expected key=value, got {line!r}", path, lineno)
        if key.startswith("config."):
            config[key[7:]] = value
        elif key.startswith("metric."):
            metrics[key[7:]] = _metric_value(value)
        elif key == "p":
            p = int(value)
    coefs = {}
    for lineno, line in enumerate(text[sep + 1:], start=sep + 2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit():
            raise ParseError(f"expected 'index value', got {line!r}", path, lineno)
        coefs[int(parts[0])] = _float(parts[1], path, lineno)
    if p is None:
        p = len(coefs)
    if sorted(coefs) != list(range(p)):
        raise ParseError(f"coefficient indices do not cover 0..{p - 1}", path)
    beta = np.array([coefs[j] for j in range(p)])
    return PrimalSolution(beta, _config_from(config), metrics or None)


def _metric_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _config_from(fields: dict) -> Optional[FitConfig]:
    if not fields:
        return None
    kwargs = {}
    for key, conv in _CONFIG_TYPES.items():
        if key in fields:
            kwargs["lam" if key == "lambda" else key] = conv(fields[key])
    if "projection_dim" in fields:
        raw = fields["projection_dim"]
        kwargs["projection_dim"] = int(raw) if raw.lstrip("-").isdigit() else float(raw)
    return FitConfig(**kwargs)
