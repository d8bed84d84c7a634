"""Argument checks shared by the estimators and the command line."""

from __future__ import annotations

import numbers

from .inference import GroupHypothesis


def check_scalar_range(value, name, low=None, high=None, *, low_open=False, high_open=False):
    """Return ``value`` as float after checking it lies in the given interval."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if low is not None and (value < low or (low_open and value == low)):
        raise ValueError(f"{name} must be {'>' if low_open else '>='} {low}, got {value}")
    if high is not None and (value > high or (high_open and value == high)):
        raise ValueError(f"{name} must be {'<' if high_open else '<='} {high}, got {value}")
    return value


def check_ridge_lambda(lam, n: int) -> float:
    """``"auto"`` resolves to ``1/n``; anything else must be positive."""
    if isinstance(lam, str):
        if lam != "auto":
            raise ValueError(f"ridge lambda must be 'auto' or a positive number, got {lam!r}")
        return 1.0 / n
    return check_scalar_range(lam, "ridge lambda", 0.0, low_open=True)


def check_groups(groups, p: int) -> list:
    """Normalize groups to ``GroupHypothesis`` objects and range-check them.

    Accepts ``GroupHypothesis`` instances, plain sequences of 0-based
    indices, or ``(label, indices)`` pairs.
    """
    if groups is None:
        return []
    out = []
    for k, g in enumerate(groups):
        if isinstance(g, GroupHypothesis):
            hyp = g
        elif (
            isinstance(g, tuple)
            and len(g) == 2
            and isinstance(g[0], str)
        ):
            hyp = GroupHypothesis(tuple(g[1]), g[0])
        else:
            hyp = GroupHypothesis(tuple(g), f"group{k + 1}")
        hyp.check(p)
        out.append(hyp)
    return out


def groups_from_records(records) -> list:
    """Parse ``[{"label": str, "indices": [int, ...]}]`` with 1-based indices."""
    if not isinstance(records, list):
        raise ValueError("groups file must hold a JSON list")
    out = []
    for k, rec in enumerate(records):
        if not isinstance(rec, dict) or "indices" not in rec:
            raise ValueError(f"group entry {k} needs an 'indices' list")
        idx = rec["indices"]
        if not isinstance(idx, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in idx
        ):
            raise ValueError(f"group entry {k}: indices must be a list of integers")
        label = rec.get("label", f"group{k + 1}")
        if not isinstance(label, str):
            raise ValueError(f"group entry {k}: label must be a string")
        if idx and min(idx) < 1:
            raise ValueError(f"group {label!r}: indices are 1-based")
        out.append(GroupHypothesis(tuple(i - 1 for i in idx), label))
    return out
