"""Pixel-to-distance calibration for roadside cameras.

A camera's view of the (locally straight) road is reduced to a reference
line in image space.  A detection's bottom-center point is projected onto
that line, giving a scalar coordinate s in pixels, and a low-order
polynomial maps s to metric distance from the camera:

    d_hat(s) = w^T phi(s),   phi(s) = [1, s, s^2, ..., s^k]

The weights come from ground-truth pairs (s_i, d_i) by ordinary least
squares on the normal equations:

    w = (Phi^T Phi)^{-1} Phi^T d

solved with a pivoted dense solve; the residual Phi^T (d - Phi w) is zero
up to conditioning.  Order k defaults to at most 2 - higher orders
oscillate on the few ground-truth points a survey crew can collect.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_MAX_ORDER = 2
CONDITION_LIMIT = 1e12


class CalibrationError(Exception):
    """Base class for calibration failures."""


class InsufficientPoints(CalibrationError):
    """Fewer ground-truth pairs than polynomial coefficients."""


class SingularSystem(CalibrationError):
    """Normal equations too ill-conditioned to solve reliably."""


@dataclass(frozen=True)
class ReferenceLine:
    """Directed image-space segment from p0 to p1, in pixels.

    s_max is the segment length; projections are clamped to [0, s_max].
    """

    p0: tuple[float, float]
    p1: tuple[float, float]
    s_max: float = field(init=False)

    def __post_init__(self):
        dx = self.p1[0] - self.p0[0]
        dy = self.p1[1] - self.p0[1]
        length = float(np.hypot(dx, dy))
        if length <= 0.0:
            raise CalibrationError("reference line endpoints coincide")
        object.__setattr__(self, "s_max", length)

    @property
    def direction(self) -> tuple[float, float]:
        return ((self.p1[0] - self.p0[0]) / self.s_max,
                (self.p1[1] - self.p0[1]) / self.s_max)


def project_to_line(point: Sequence[float], line: ReferenceLine) -> float:
    """Scalar projection of an image point onto the line, clamped to [0, s_max]."""
    ux, uy = line.direction
    s = (point[0] - line.p0[0]) * ux + (point[1] - line.p0[1]) * uy
    return min(max(s, 0.0), line.s_max)


@dataclass(frozen=True)
class CalibrationSet:
    """Ground-truth (s, d) pairs: line coordinate in pixels, distance in metres."""

    s: tuple[float, ...]
    d: tuple[float, ...]

    def __post_init__(self):
        if len(self.s) != len(self.d):
            raise CalibrationError("s and d must have the same length")
        if len(self.s) == 0:
            raise CalibrationError("empty calibration set")
        if len(set(self.s)) != len(self.s):
            raise CalibrationError("line coordinates must be distinct")
        if any(d <= 0 for d in self.d):
            raise CalibrationError("distances must be positive")

    def __len__(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class CalibrationModel:
    """Fitted polynomial d_hat(s) = w[0] + w[1] s + ... + w[k] s^k."""

    order: int
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != self.order + 1:
            raise CalibrationError("weights length must be order + 1")

    def raw(self, s: float) -> float:
        """Unclamped polynomial value at s (Horner)."""
        acc = 0.0
        for w in reversed(self.weights):
            acc = acc * s + w
        return acc


class DistanceEstimate(NamedTuple):
    meters: float
    extrapolation_suspect: bool


def fit(calib: CalibrationSet, order: int = DEFAULT_MAX_ORDER) -> CalibrationModel:
    """Least-squares polynomial fit of distance against line coordinate.

    Raises InsufficientPoints when len(calib) < order + 1 and
    SingularSystem when cond(Phi^T Phi) exceeds 1e12.
    """
    if order < 0:
        raise CalibrationError("order must be non-negative")
    n_coef = order + 1
    if len(calib) < n_coef:
        raise InsufficientPoints(
            f"{len(calib)} points cannot determine {n_coef} coefficients")
    s = np.asarray(calib.s, dtype=float)
    d = np.asarray(calib.d, dtype=float)
    phi = np.vander(s, n_coef, increasing=True)
    gram = phi.T @ phi
    if np.linalg.cond(gram) > CONDITION_LIMIT:
        raise SingularSystem("normal equations condition number exceeds 1e12")
    w = np.linalg.solve(gram, phi.T @ d)
    return CalibrationModel(order, tuple(float(x) for x in w))


def estimate_distance(model: CalibrationModel, s: float) -> DistanceEstimate:
    """Evaluate the model at s.

    A negative polynomial value is physically meaningless (it means s sits
    outside the calibrated range), so it is clamped to 0 and the estimate
    is flagged extrapolation-suspect.
    """
    value = model.raw(s)
    if value < 0.0:
        return DistanceEstimate(0.0, True)
    return DistanceEstimate(value, False)


def load_calibration_csv(path) -> CalibrationSet:
    """Read ground-truth pairs from a two-column CSV (s, d) with one header line."""
    s_vals: list[float] = []
    d_vals: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)  # header
        except StopIteration:
            raise CalibrationError(f"{path}: empty calibration file") from None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise CalibrationError(f"{path}:{lineno}: expected two columns")
            try:
                s_vals.append(float(row[0]))
                d_vals.append(float(row[1]))
            except ValueError:
                raise CalibrationError(f"{path}:{lineno}: non-numeric value") from None
    return CalibrationSet(tuple(s_vals), tuple(d_vals))
