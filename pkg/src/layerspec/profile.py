"""Celerity profiles c(y) on [0, H].

Three concrete representations are supported: piecewise-constant pieces,
sampled grids (step or linear interpolation) and a small set of analytic
presets.  Every profile is immutable and exposes the same query surface:
``evaluate``, ``travel_time``, ``inverse_travel_time``, cached ``c_min``,
``c_max``, ``tv``, and the knot set where c may fail to be smooth.
"""

from __future__ import annotations

import math
import sys
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import (
    EmptyProfile,
    NonPositiveValue,
    OutOfDomain,
    ProfileError,
    ThresholdOutOfRange,
    UnsortedBreakpoints,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "CelerityProfile",
    "PiecewiseConstant",
    "SampledGrid",
    "AnalyticPreset",
    "ProfileSummary",
    "WellInterval",
    "validate",
    "evaluate",
    "travel_time",
    "find_well",
    "load_profile",
    "profile_from_mapping",
    "PRESETS",
]

# kernel codes understood by the compiled Pruefer integrator
KIND_PIECEWISE = 0
KIND_LINEAR = 1
KIND_CONSTANT = 2
KIND_RAMP = 3
KIND_SINE_BUMP = 4
KIND_SMOOTH_WELL = 5

_DOMAIN_SLACK = 1e-12

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ProfileSummary:
    c_m: float
    c_M: float
    tv: float
    H: float


class CelerityProfile:
    """Common interface; concrete profiles subclass this."""

    H: float

    # -- to be provided by subclasses -------------------------------------
    def _evaluate(self, y: np.ndarray, side: str) -> np.ndarray:
        raise NotImplementedError

    def _travel_time(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def knots(self) -> np.ndarray:
        """Points (including 0 and H) where c may be non-smooth."""
        raise NotImplementedError

    @property
    def kernel_spec(self) -> tuple[int, np.ndarray]:
        raise NotImplementedError

    is_piecewise_constant: bool = False
    is_smooth: bool = False

    # -- shared behaviour ---------------------------------------------------
    def _check_domain(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = -_DOMAIN_SLACK * self.H, self.H * (1 + _DOMAIN_SLACK)
        if np.any(~np.isfinite(y)) or np.any(y < lo) or np.any(y > hi):
            raise OutOfDomain(f"y outside [0, {self.H}]")
        return np.clip(y, 0.0, self.H)

    def evaluate(self, y, side: str = "right"):
        """c(y). ``side='left'`` returns left limits at breakpoints."""
        yy = self._check_domain(y)
        out = self._evaluate(np.atleast_1d(yy), side)
        return float(out[0]) if np.ndim(y) == 0 else out

    __call__ = evaluate

    def travel_time(self, y):
        """t(y) = integral of 1/c from 0 to y."""
        yy = self._check_domain(y)
        out = self._travel_time(np.atleast_1d(yy))
        return float(out[0]) if np.ndim(y) == 0 else out

    @cached_property
    def total_travel_time(self) -> float:
        return float(self._travel_time(np.array([self.H]))[0])

    def inverse_travel_time(self, t):
        """y(t), the inverse of :meth:`travel_time` (Newton on a monotone map)."""
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        T = self.total_travel_time
        if np.any(tt < -_DOMAIN_SLACK * T) or np.any(tt > T * (1 + _DOMAIN_SLACK)):
            raise OutOfDomain(f"t outside [0, {T}]")
        tt = np.clip(tt, 0.0, T)
        y = tt / T * self.H
        lo, hi = np.zeros_like(y), np.full_like(y, self.H)
        for _ in range(200):
            r = self._travel_time(y) - tt
            lo = np.where(r <= 0, y, lo)
            hi = np.where(r >= 0, y, hi)
            y_new = y - r * self._evaluate(y, "right")
            # Newton steps leaving the bracket fall back to bisection
            bad = (y_new <= lo) | (y_new >= hi)
            y_new = np.where(bad, 0.5 * (lo + hi), y_new)
            done = np.max(np.abs(y_new - y), initial=0.0) <= 1e-15 * self.H
            y = y_new
            if done:
                break
        return float(y[0]) if np.ndim(t) == 0 else y

    @property
    def c_min(self) -> float:
        raise NotImplementedError

    @property
    def c_max(self) -> float:
        raise NotImplementedError

    @property
    def tv(self) -> float:
        raise NotImplementedError

    def summary(self) -> ProfileSummary:
        return ProfileSummary(self.c_min, self.c_max, self.tv, self.H)

    def dense_sample(self, n: int | None = None) -> np.ndarray:
        """Sample points used for set conditions (wells, sup-errors)."""
        if n is None:
            n = max(10 * len(self.knots), 10_000)
        return np.union1d(np.linspace(0.0, self.H, n + 1), self.knots)


def _gl_cell_integral(func, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """8-point Gauss-Legendre integral of ``func`` over each [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * _GL8_X[None, :]
    return half * (func(nodes.ravel()).reshape(nodes.shape) @ _GL8_W)


# ---------------------------------------------------------------------------
# piecewise constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PiecewiseConstant(CelerityProfile):
    """c(y) = values[j] on [breakpoints[j], breakpoints[j+1]), right-continuous."""

    breakpoints: np.ndarray
    values: np.ndarray
    H: float = field(init=False)

    is_piecewise_constant = True

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size == 0 or bp.size < 2:
            raise EmptyProfile("piecewise-constant profile needs at least one piece")
        if bp.size != vals.size + 1:
            raise ProfileError(
                f"{vals.size} values need {vals.size + 1} breakpoints, got {bp.size}"
            )
        if bp[0] != 0.0:
            raise ProfileError("first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0) or not np.all(np.isfinite(bp)):
            raise UnsortedBreakpoints("breakpoints must be strictly increasing")
        if np.any(~(vals > 0)) or not np.all(np.isfinite(vals)):
            raise NonPositiveValue("piece values must be positive and finite")
        bp.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "H", float(bp[-1]))

    @property
    def n_pieces(self) -> int:
        return self.values.size

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def knots(self) -> np.ndarray:
        return self.breakpoints

    @property
    def kernel_spec(self):
        n = self.n_pieces
        return KIND_PIECEWISE, np.concatenate(([float(n)], self.breakpoints, self.values))

    @cached_property
    def c_min(self) -> float:
        return float(self.values.min())

    @cached_property
    def c_max(self) -> float:
        return float(self.values.max())

    @cached_property
    def tv(self) -> float:
        return float(np.abs(np.diff(self.values)).sum())

    def piece_index(self, y, side: str = "right") -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, y, side="right" if side == "right" else "left") - 1
        return np.clip(idx, 0, self.n_pieces - 1)

    def _evaluate(self, y, side):
        return self.values[self.piece_index(y, side)]

    @cached_property
    def _cum_time(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.lengths / self.values)))

    def _travel_time(self, y):
        j = self.piece_index(y)
        return self._cum_time[j] + (y - self.breakpoints[j]) / self.values[j]

    def inverse_travel_time(self, t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        T = self._cum_time[-1]
        if np.any(tt < -_DOMAIN_SLACK * T) or np.any(tt > T * (1 + _DOMAIN_SLACK)):
            raise OutOfDomain(f"t outside [0, {T}]")
        tt = np.clip(tt, 0.0, T)
        j = np.clip(np.searchsorted(self._cum_time, tt, side="right") - 1, 0, self.n_pieces - 1)
        y = np.clip(self.breakpoints[j] + (tt - self._cum_time[j]) * self.values[j], 0.0, self.H)
        return float(y[0]) if np.ndim(t) == 0 else y


# ---------------------------------------------------------------------------
# sampled grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledGrid(CelerityProfile):
    """Samples (ys, cs) with step (right-continuous) or linear interpolation.

    In step mode ``cs`` may have ``len(ys)`` or ``len(ys) - 1`` entries; the
    value attached to the final sample y = H only matters as a validity check.
    """

    ys: np.ndarray
    cs: np.ndarray
    interp: str = "linear"
    H: float = field(init=False)

    def __post_init__(self):
        ys = np.asarray(self.ys, dtype=float).ravel()
        cs = np.asarray(self.cs, dtype=float).ravel()
        if ys.size < 2 or cs.size == 0:
            raise EmptyProfile("sampled grid needs at least two samples")
        if self.interp not in ("step", "linear"):
            raise ProfileError(f"unknown interpolation mode {self.interp!r}")
        if self.interp == "linear" and cs.size != ys.size:
            raise ProfileError("linear interpolation needs one value per sample")
        if self.interp == "step" and cs.size not in (ys.size, ys.size - 1):
            raise ProfileError("step interpolation needs len(ys) or len(ys)-1 values")
        if ys[0] != 0.0:
            raise ProfileError("first sample must be at y = 0")
        if np.any(np.diff(ys) <= 0) or not np.all(np.isfinite(ys)):
            raise UnsortedBreakpoints("sample locations must be strictly increasing")
        if np.any(~(cs > 0)) or not np.all(np.isfinite(cs)):
            raise NonPositiveValue("sampled values must be positive and finite")
        ys.flags.writeable = False
        cs.flags.writeable = False
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "cs", cs)
        object.__setattr__(self, "H", float(ys[-1]))

    @property
    def is_piecewise_constant(self) -> bool:  # type: ignore[override]
        return self.interp == "step"

    @cached_property
    def _pc(self) -> PiecewiseConstant | None:
        if self.interp != "step":
            return None
        return PiecewiseConstant(self.ys, self.cs[: self.ys.size - 1])

    def to_piecewise_constant(self) -> PiecewiseConstant:
        if self._pc is None:
            raise ProfileError("linear sampled grid is not piecewise constant")
        return self._pc

    @property
    def knots(self) -> np.ndarray:
        return self.ys

    @property
    def kernel_spec(self):
        if self._pc is not None:
            return self._pc.kernel_spec
        return KIND_LINEAR, np.concatenate(([float(self.ys.size)], self.ys, self.cs))

    @cached_property
    def c_min(self) -> float:
        return self._pc.c_min if self._pc is not None else float(self.cs.min())

    @cached_property
    def c_max(self) -> float:
        return self._pc.c_max if self._pc is not None else float(self.cs.max())

    @cached_property
    def tv(self) -> float:
        return self._pc.tv if self._pc is not None else float(np.abs(np.diff(self.cs)).sum())

    def _evaluate(self, y, side):
        if self._pc is not None:
            return self._pc._evaluate(y, side)
        return np.interp(y, self.ys, self.cs)

    def _travel_time(self, y):
        if self._pc is not None:
            return self._pc._travel_time(y)
        j = np.clip(np.searchsorted(self.ys, y, side="right") - 1, 0, self.ys.size - 2)
        return self._cum_time[j] + _linear_segment_time(
            self.cs[j], self._slopes[j], y - self.ys[j]
        )

    @cached_property
    def _slopes(self) -> np.ndarray:
        return np.diff(self.cs) / np.diff(self.ys)

    @cached_property
    def _cum_time(self) -> np.ndarray:
        seg = _linear_segment_time(self.cs[:-1], self._slopes, np.diff(self.ys))
        return np.concatenate(([0.0], np.cumsum(seg)))

    def inverse_travel_time(self, t):
        if self._pc is not None:
            return self._pc.inverse_travel_time(t)
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        T = float(self._cum_time[-1])
        if np.any(tt < -_DOMAIN_SLACK * T) or np.any(tt > T * (1 + _DOMAIN_SLACK)):
            raise OutOfDomain(f"t outside [0, {T}]")
        tt = np.clip(tt, 0.0, T)
        j = np.clip(np.searchsorted(self._cum_time, tt, side="right") - 1, 0, self.ys.size - 2)
        # invert t = log(1 + s dy / c0) / s on the segment
        c0, sl, dt = self.cs[j], self._slopes[j], tt - self._cum_time[j]
        x = sl * dt
        small = np.abs(x) < 1e-8
        ratio = np.where(small, 1.0 + x / 2 + x * x / 6, np.expm1(x) / np.where(small, 1.0, x))
        y = np.minimum(self.ys[j] + c0 * dt * ratio, self.ys[j + 1])
        return float(y[0]) if np.ndim(t) == 0 else y


def _linear_segment_time(c0, slope, dy):
    """Exact integral of 1/(c0 + slope*s) over s in [0, dy]."""
    c0 = np.asarray(c0, dtype=float)
    x = np.asarray(slope, dtype=float) * dy / c0
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0 - x / 2 + x * x / 3, np.log1p(safe) / safe)
    return dy / c0 * ratio


# ---------------------------------------------------------------------------
# analytic presets
# ---------------------------------------------------------------------------

PRESETS = {
    "constant": ("c",),
    "linear-ramp": ("c0", "c1"),
    "sine-bump": ("c0", "amp"),
    "smooth-well": ("c_out", "c_in", "center", "width"),
}


@dataclass(frozen=True, eq=False)
class AnalyticPreset(CelerityProfile):
    """Closed-form smooth profiles.

    ``constant``     c(y) = c
    ``linear-ramp``  c(y) = c0 + (c1 - c0) y / H
    ``sine-bump``    c(y) = c0 + amp sin(pi y / H)
    ``smooth-well``  c(y) = c_out - (c_out - c_in) exp(-((y - center)/width)^2)
    """

    name: str
    params: Mapping | tuple
    H: float = 1.0

    is_smooth = True

    def __post_init__(self):
        if self.name not in PRESETS:
            raise ProfileError(f"unknown preset {self.name!r}; choose from {sorted(PRESETS)}")
        keys = PRESETS[self.name]
        if isinstance(self.params, Mapping):
            missing = [k for k in keys if k not in self.params]
            if missing:
                raise ProfileError(f"preset {self.name!r} missing parameters {missing}")
            vals = tuple(float(self.params[k]) for k in keys)
        else:
            vals = tuple(float(v) for v in self.params)
            if len(vals) != len(keys):
                raise ProfileError(f"preset {self.name!r} takes parameters {keys}")
        if not (self.H > 0 and math.isfinite(self.H)):
            raise ProfileError("H must be positive")
        if self.name == "smooth-well" and not vals[3] > 0:
            raise ProfileError("smooth-well width must be positive")
        object.__setattr__(self, "params", dict(zip(keys, vals)))
        object.__setattr__(self, "H", float(self.H))
        if not self.c_min > 0:
            raise NonPositiveValue(f"preset {self.name!r} reaches c <= 0 on [0, H]")

    @property
    def is_piecewise_constant(self) -> bool:  # type: ignore[override]
        return False

    @property
    def knots(self) -> np.ndarray:
        return np.array([0.0, self.H])

    @property
    def kernel_spec(self):
        p = self.params
        if self.name == "constant":
            return KIND_CONSTANT, np.array([p["c"]])
        if self.name == "linear-ramp":
            return KIND_RAMP, np.array([p["c0"], p["c1"], self.H])
        if self.name == "sine-bump":
            return KIND_SINE_BUMP, np.array([p["c0"], p["amp"], self.H])
        return KIND_SMOOTH_WELL, np.array([p["c_out"], p["c_in"], p["center"], p["width"]])

    def _evaluate(self, y, side):
        p = self.params
        if self.name == "constant":
            return np.full_like(y, p["c"], dtype=float)
        if self.name == "linear-ramp":
            return p["c0"] + (p["c1"] - p["c0"]) * y / self.H
        if self.name == "sine-bump":
            return p["c0"] + p["amp"] * np.sin(np.pi * y / self.H)
        return p["c_out"] - (p["c_out"] - p["c_in"]) * np.exp(-(((y - p["center"]) / p["width"]) ** 2))

    @cached_property
    def _range(self) -> tuple[float, float]:
        p = self.params
        if self.name == "constant":
            return p["c"], p["c"]
        if self.name == "linear-ramp":
            return min(p["c0"], p["c1"]), max(p["c0"], p["c1"])
        if self.name == "sine-bump":
            return p["c0"] + min(0.0, p["amp"]), p["c0"] + max(0.0, p["amp"])
        g = lambda y: math.exp(-(((y - p["center"]) / p["width"]) ** 2))  # noqa: E731
        g_hi = g(min(max(p["center"], 0.0), self.H))
        g_lo = min(g(0.0), g(self.H))
        vals = (p["c_out"] - (p["c_out"] - p["c_in"]) * g_hi, p["c_out"] - (p["c_out"] - p["c_in"]) * g_lo)
        return min(vals), max(vals)

    @property
    def c_min(self) -> float:
        return float(self._range[0])

    @property
    def c_max(self) -> float:
        return float(self._range[1])

    @cached_property
    def tv(self) -> float:
        if self.name == "constant":
            return 0.0
        return _adaptive_tv(lambda y: self._evaluate(y, "right"), self.H)

    # travel time through a cumulative Gauss-Legendre table
    _TABLE_CELLS = 2048

    @cached_property
    def _time_table(self) -> np.ndarray:
        edges = np.linspace(0.0, self.H, self._TABLE_CELLS + 1)
        cell = _gl_cell_integral(lambda y: 1.0 / self._evaluate(y, "right"), edges[:-1], edges[1:])
        return np.concatenate(([0.0], np.cumsum(cell)))

    def _travel_time(self, y):
        if self.name == "constant":
            return y / self.params["c"]
        if self.name == "linear-ramp":
            p = self.params
            return _linear_segment_time(p["c0"], (p["c1"] - p["c0"]) / self.H, y)
        h = self.H / self._TABLE_CELLS
        j = np.clip((y / h).astype(int), 0, self._TABLE_CELLS - 1)
        a = j * h
        return self._time_table[j] + _gl_cell_integral(
            lambda s: 1.0 / self._evaluate(s, "right"), a, y
        )


def _adaptive_tv(f, H: float, tol: float = 1e-8) -> float:
    """Sampled total variation, refined until successive values agree to ``tol``."""
    n = 1024
    prev = float(np.abs(np.diff(f(np.linspace(0.0, H, n + 1)))).sum())
    while n < 2**22:
        n *= 2
        cur = float(np.abs(np.diff(f(np.linspace(0.0, H, n + 1)))).sum())
        if abs(cur - prev) <= tol * max(1.0, cur):
            return cur
        prev = cur
    return prev


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def validate(profile: CelerityProfile) -> ProfileSummary:
    """Check (H) on a dense sample and return the cached summary."""
    s = profile.summary()
    ys = profile.dense_sample()
    cs = profile.evaluate(ys)
    if not (s.c_m > 0):
        raise NonPositiveValue("c_m must be positive")
    slack = 1e-12 * s.c_M
    if np.any(cs < s.c_m - slack) or np.any(cs > s.c_M + slack):
        raise ProfileError("cached range inconsistent with evaluate()")
    return s


def evaluate(profile: CelerityProfile, y, side: str = "right"):
    return profile.evaluate(y, side)


def travel_time(profile: CelerityProfile, y):
    return profile.travel_time(y)


@dataclass(frozen=True)
class WellInterval:
    alpha: float
    beta: float
    c1: float

    def verify(self, profile: CelerityProfile, tol: float = 1e-9) -> bool:
        ys = profile.dense_sample()
        cs = profile.evaluate(ys)
        # endpoints count as inside: they carry no measure and PC values there may be either side
        inside = (ys >= self.alpha) & (ys <= self.beta)
        outside_ok = bool(np.all(cs[~inside] >= self.c1 - tol))
        dips = bool(np.any(cs[inside] < self.c1)) if inside.any() else False
        return outside_ok and dips and 0.0 <= self.alpha < self.beta <= profile.H


def find_well(profile: CelerityProfile, c1: float, n_samples: int | None = None) -> WellInterval | None:
    """Smallest interval outside of which c >= c1, or None.

    Returns None when the sublevel set {c < c1} is empty or splits into more
    than one component (only a single well is allowed).
    """
    if not (profile.c_min < c1 <= profile.c_max):
        raise ThresholdOutOfRange(
            f"c1={c1} must satisfy c_m={profile.c_min} < c1 <= c_M={profile.c_max}"
        )
    if profile.is_piecewise_constant:
        pc = profile if isinstance(profile, PiecewiseConstant) else profile.to_piecewise_constant()
        low = np.flatnonzero(pc.values < c1)
        if low.size == 0 or np.any(np.diff(low) > 1):
            return None
        return WellInterval(float(pc.breakpoints[low[0]]), float(pc.breakpoints[low[-1] + 1]), float(c1))

    ys = profile.dense_sample(n_samples)
    below = profile.evaluate(ys) < c1
    if not below.any():
        return None
    idx = np.flatnonzero(below)
    if np.any(np.diff(idx) > 1):
        return None
    g = lambda y: profile.evaluate(y) - c1  # noqa: E731
    i0, i1 = idx[0], idx[-1]
    alpha = 0.0 if i0 == 0 else brentq(g, ys[i0 - 1], ys[i0], xtol=1e-14)
    beta = profile.H if i1 == ys.size - 1 else brentq(g, ys[i1], ys[i1 + 1], xtol=1e-14)
    return WellInterval(float(alpha), float(beta), float(c1))


# ---------------------------------------------------------------------------
# profile files
# ---------------------------------------------------------------------------

_TYPE_ALIASES = {
    "piecewise_constant": "pc",
    "piecewise-constant": "pc",
    "pc": "pc",
    "sampled": "grid",
    "sampled_grid": "grid",
    "sampled-grid": "grid",
    "grid": "grid",
    "preset": "preset",
    "analytic": "preset",
}


def profile_from_mapping(doc: Mapping) -> CelerityProfile:
    """Build a profile from the parsed key/value document."""
    try:
        kind = _TYPE_ALIASES[str(doc["type"]).lower()]
    except KeyError as exc:
        raise ProfileError(f"missing or unknown profile type: {doc.get('type')!r}") from exc
    H = doc.get("H")
    if kind == "pc":
        prof: CelerityProfile = PiecewiseConstant(doc["breakpoints"], doc["values"])
    elif kind == "grid":
        prof = SampledGrid(doc["ys"], doc["cs"], str(doc.get("interp", "linear")))
    else:
        if H is None:
            raise ProfileError("preset profiles need H")
        prof = AnalyticPreset(str(doc["preset"]), doc.get("params", {}), float(H))
    if H is not None and not math.isclose(float(H), prof.H, rel_tol=1e-12, abs_tol=0.0):
        raise ProfileError(f"H={H} disagrees with the profile extent {prof.H}")
    return prof


def load_profile(path: str | Path) -> CelerityProfile:
    """Parse a TOML profile file."""
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ProfileError(f"{path}: {exc}") from exc
    try:
        return profile_from_mapping(doc)
    except KeyError as exc:
        raise ProfileError(f"{path}: missing field {exc}") from exc
