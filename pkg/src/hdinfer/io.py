"""Reading numeric CSV and group files; the test report and its formats."""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._validation import groups_from_records


class InputError(ValueError):
    """Unusable input file; the message names the file and, if known, the line."""


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_numeric_csv(path) -> tuple[np.ndarray, list | None]:
    """Comma-separated numeric table, rows are observations.

    The first row is a header iff any of its tokens is not a number.
    Returns the matrix and the header (or ``None``).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: cannot read file ({exc})") from exc
    rows = list(csv.reader(io.StringIO(text)))
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(t.strip() for t in r)]
    if not numbered:
        raise InputError(f"{path}: no data")
    header = None
    _, first = numbered[0]
    if not all(_is_number(t) for t in first):
        header = [t.strip() for t in first]
        numbered = numbered[1:]
    if not numbered:
        raise InputError(f"{path}: header but no data rows")
    width = len(header) if header is not None else len(numbered[0][1])
    data = np.empty((len(numbered), width))
    for k, (line, row) in enumerate(numbered):
        if len(row) != width:
            raise InputError(f"{path}: line {line}: expected {width} fields, found {len(row)}")
        for c, token in enumerate(row):
            try:
                value = float(token)
            except ValueError:
                raise InputError(
                    f"{path}: line {line}: field {c + 1} is not a number: {token.strip()!r}"
                ) from None
            if not np.isfinite(value):
                raise InputError(f"{path}: line {line}: field {c + 1} is not finite")
            data[k, c] = value
    return data, header


def read_response_csv(path) -> np.ndarray:
    y, _ = read_numeric_csv(path)
    if y.shape[1] != 1:
        raise InputError(f"{path}: response must have one column, found {y.shape[1]}")
    return y[:, 0]


def read_groups_json(path, p: int) -> list:
    """Groups file ``[{"label": str, "indices": [int, ...]}]``, 1-based indices."""
    path = Path(path)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: cannot read file ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    try:
        groups = groups_from_records(records)
        for g in groups:
            g.check(p)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return groups


@dataclass
class TestReport:
    """Outcome of testing one data set.

    Coefficients are reported on the input scale and statistics on the
    standardized scale. Indices are 1-based.
    """

    __test__ = False  # not a pytest class

    coefficients: list
    groups: list
    sigma_hat: float
    config: dict
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TestReport":
        return cls(**json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["kind", "label", "index", "coef_original", "statistic", "delta",
             "pvalue_raw", "pvalue_adjusted", "reject"]
        )
        for c in self.coefficients:
            w.writerow(
                ["coefficient", "", c["index"], repr(c["coef_original"]), repr(c["statistic"]),
                 repr(c["delta"]), repr(c["pvalue_raw"]), repr(c["pvalue_adjusted"]),
                 int(c["reject"])]
            )
        for g in self.groups:
            w.writerow(
                ["group", g["label"], "", "", repr(g["statistic"]), "", repr(g["pvalue_raw"]),
                 repr(g["pvalue_adjusted"]), int(g["reject"])]
            )
        return buf.getvalue()


def build_test_report(est, config: dict) -> TestReport:
    """Collect a fitted ``RidgeProjectionTest`` into a report."""
    alpha = est.alpha
    coefs = [
        {
            "index": j + 1,
            "coef_original": float(est.coef_[j]),
            "statistic": float(est.statistics_[j]),
            "delta": float(est.delta_[j]),
            "pvalue_raw": float(est.pvalues_[j]),
            "pvalue_adjusted": float(est.pvalues_corr_[j]),
            "reject": bool(est.pvalues_corr_[j] <= alpha),
            "testable": not bool(est.untestable_[j]),
        }
        for j in range(est.n_features_in_)
    ]
    groups = [
        {
            "label": g.label,
            "indices": [i + 1 for i in g.indices],
            "statistic": float(est.group_statistics_[k]),
            "pvalue_raw": float(est.group_pvalues_[k]),
            "pvalue_adjusted": float(est.group_pvalues_corr_[k]),
            "reject": bool(est.group_pvalues_corr_[k] <= alpha),
        }
        for k, g in enumerate(est.groups_)
    ]
    warnings = []
    bad = np.flatnonzero(est.untestable_) + 1
    if bad.size:
        warnings.append(f"untestable coefficients (p-value set to 1): {bad.tolist()}")
    if not est.initial_fit_.converged:
        warnings.append(
            f"scaled lasso stopped after {est.initial_fit_.iterations} iterations without converging"
        )
    return TestReport(coefs, groups, float(est.sigma_), config, warnings)


def jsonable(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def write_text(text: str, out) -> None:
    """Write to ``out`` (a path) or to stdout when ``out`` is ``None`` or ``-``."""
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text, encoding="utf-8")
