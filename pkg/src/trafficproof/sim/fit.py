"""Least-squares fit of y = a*ln(x) + b.

The model is linear in u = ln(x), so the closed-form simple-regression
solution applies; no iterative optimizer is involved and noiseless
inputs are recovered to machine precision.
"""

from __future__ import annotations

import math


class DegenerateFit(ValueError):
    """All x values coincide; the slope is undefined."""


def fit_log(points: list[tuple[float, float]]) -> tuple[float, float, float]:
    """Fit y = a*ln(x) + b over (x, y) points; returns (a, b, rmse).

    Requires at least two points and strictly positive x.
    """
    if len(points) < 2:
        raise DegenerateFit("need at least two points")
    us = []
    ys = []
    for x, y in points:
        if x <= 0:
            raise ValueError(f"x must be positive for a log fit, got {x}")
        us.append(math.log(x))
        ys.append(y)
    n = len(us)
    u_mean = sum(us) / n
    y_mean = sum(ys) / n
    s_uu = sum((u - u_mean) ** 2 for u in us)
    if s_uu == 0.0:
        raise DegenerateFit("all x values are equal")
    s_uy = sum((u - u_mean) * (y - y_mean) for u, y in zip(us, ys))
    a = s_uy / s_uu
    b = y_mean - a * u_mean
    sq_err = sum((y - (a * u + b)) ** 2 for u, y in zip(us, ys))
    return a, b, math.sqrt(sq_err / n)


def fit_report_lines(a: float, b: float, rmse: float) -> list[str]:
    return [f"a = {a:.10g}", f"b = {b:.10g}", f"rmse = {rmse:.10g}"]
