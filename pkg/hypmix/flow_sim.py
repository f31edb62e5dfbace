"""suspension flows, return counts and correlations

This module advances points of the suspensions Sigma_rho (roof rho over
P) and Sigma_r (roof over Ptilde), projects Sigma_r onto Sigma_rho,
counts returns of the semiflow over Ftilde and estimates correlation
functions of bump observables, with exponential fits of their decay.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from matplotlib.pyplot import show, subplots, title  # type: ignore [import]

from hypmix._general import (
    DomainError,
    InsufficientSignalError,
    RejectionBudgetError,
    SingularityError,
    _check_inputs,
    _check_range,
    _Dispatcher,
    _map_chunks,
)
from hypmix.map_family import MapFamily
from hypmix.measure import (
    DensitySpec,
    m_rho_normalizer,
    rng_stream,
    sample_m_rho_array,
    sample_nu,
    sample_nu_r,
)
from hypmix.parameters_settings import hm_params
from hypmix.roof import RoofConfig, induced_roof_array, rho_eval
from hypmix.skew import FlowPoint, P_step, PlanePoint, ptilde_array

__all__: List[str] = [
    "CorrelationEstimate",
    "DecayCurve",
    "FlowPoint",
    "Observable",
    "TransportReport",
    "correlate",
    "default_observables",
    "fit_decay",
    "flow_advance",
    "flow_r_array",
    "flow_rho_array",
    "project_pi",
    "project_pi_array",
    "return_count",
    "return_count_array",
    "return_count_decay",
    "roof_tail",
    "time_grid",
    "transport_check",
]

logger = logging.getLogger(__name__)

# a height within a few ulps of the roof counts as a crossing
_CROSS = 1.0 - 4.0 * np.finfo(float).eps

# stream ids of the flow experiments; correlate uses _STREAM_CORR + k
_STREAM_CORR = 100
_STREAM_RETURNS = 200
_STREAM_TAIL = 201
_STREAM_TRANSPORT = 300


def time_grid(t_max: float, t_step: float) -> np.ndarray:
    """the grid 0, t_step, ..., t_max

    examples
    --------
    >>> time_grid(1.0, 0.25).tolist()
    [0.0, 0.25, 0.5, 0.75, 1.0]
    """

    _check_range("t_step", t_step, 0.0)
    _check_range("t_max", t_max, 0.0, None, closed=True)
    steps = int(math.floor(t_max / t_step + 1e-9))
    return t_step * np.arange(steps + 1, dtype=float)


# Sigma_rho


def _right_run(
    rho0: float, x: float, y: float, total: float
) -> Tuple[int, float]:
    """the longest run of m steps (x, y) -> (x - 1, y + 1) whose rho sum
    rho0 ln(x (y + m) / (y (x - m))) does not exceed total."""

    avail = math.ceil(x) - 1
    decay = math.exp(-total / rho0)
    m = int(min(avail, math.floor(x * y * (1.0 - decay) / (x * decay + y))))
    while m > 0:
        run = rho0 * math.log(x * (y + m) / (y * (x - m)))
        if run <= total:
            return m, run
        m -= 1
    return 0, 0.0


def _right_run_array(
    rho0: float, x: np.ndarray, y: np.ndarray, total: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    avail = np.ceil(x) - 1.0
    decay = np.exp(-total / rho0)
    m = np.floor(x * y * (1.0 - decay) / (x * decay + y))
    m = np.clip(m, 0.0, avail)
    for _ in range(2):
        run = rho0 * np.log(x * (y + m) / (y * (x - m)))
        over = run > total
        m = np.where(over, np.maximum(m - 1.0, 0.0), m)
    run = rho0 * np.log(x * (y + m) / (y * (x - m)))
    over = run > total
    m = np.where(over, 0.0, m)
    run = np.where(over, 0.0, run)
    return m, run


def _advance_rho(
    family: MapFamily, base: PlanePoint, s: float, t: float
) -> Tuple[PlanePoint, float, int]:
    point = PlanePoint(float(base.x), float(base.y))
    total = s + t
    n = 0
    while True:
        if point.x > 1:
            m, run = _right_run(family.rho0, point.x, point.y, total)
            if m:
                total -= run
                point = PlanePoint(point.x - m, point.y + m)
                n += m
        roof = rho_eval(family, point)
        if total < roof * _CROSS:
            return point, total, n
        total = max(total - roof, 0.0)
        point = P_step(family, point)
        n += 1


def _clip_delta(family: MapFamily, x: np.ndarray) -> np.ndarray:
    lo = float(family.delta_lo())
    return np.clip(x, np.nextafter(lo, 1.0), np.nextafter(1.0, 0.0))


def _advance_r(
    family: MapFamily,
    base: PlanePoint,
    s: float,
    t: float,
    kind: str,
    cfg: RoofConfig,
) -> Tuple[PlanePoint, float, int]:
    state = _RState(
        family,
        np.array([float(base.x)]),
        np.array([float(base.y)]),
        np.array([s]),
        kind,
        cfg,
    )
    state.advance(family, t, kind, cfg)
    if not state.valid[0]:
        raise SingularityError(f"the orbit of {base!r} meets a singular roof.")
    point = PlanePoint(float(state.x[0]), float(state.y[0]))
    return point, float(state.s[0]), int(state.n[0])


def _check_height(
    family: MapFamily, pt: FlowPoint, kind: str, cfg: RoofConfig
) -> None:
    """0 <= s < roof(base) for a point of either suspension."""

    if pt.space == "sigma_rho":
        roof = rho_eval(family, pt.base)
    else:
        roof = float(
            induced_roof_array(
                family,
                np.array([float(pt.base.x)]),
                np.array([float(pt.base.y)]),
                kind,
                cfg,
            )[0][0]
        )
        if not math.isfinite(roof):
            raise SingularityError(f"the roof at {pt.base!r} is singular.")
    if not pt.s < roof:
        raise DomainError(
            f"Input Error: s should be < {roof:.6g}, the roof at "
            f"{pt.base!r}, got {pt.s}."
        )


def flow_advance(
    family: MapFamily,
    pt: FlowPoint,
    t: float,
    cfg: Optional[RoofConfig] = None,
    kind: str = "birkhoff",
) -> Tuple[FlowPoint, int]:
    """the flow at time t >= 0 from a point of Sigma_rho or Sigma_r

    the height is raised by t and the base stepped by P (Sigma_rho) or
    Ptilde (Sigma_r) as long as it reaches the roof; a DomainError is
    raised unless the start lies under the roof, s < roof(base).

    parameters
    ----------
    family : MapFamily
        the family
    pt : FlowPoint
        the starting point
    t : float
        the time, >= 0
    cfg : RoofConfig, optional
        y' of the roof r
    kind : str
        the roof of Sigma_r, birkhoff [default] or r

    returns
    -------
    (FlowPoint, int)
        the point at time t and the number of base steps

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> start = FlowPoint(PlanePoint(3.5, 1.0), 0.0, "sigma_rho")
    >>> end, steps = flow_advance(modular_family(), start, 0.6)
    >>> steps, end.base
    (1, PlanePoint(2.5, 2.0))
    """

    _check_range("t", t, 0.0, None, closed=True)
    cfg = cfg if cfg is not None else RoofConfig()
    _check_height(family, pt, kind, cfg)
    if t == 0:
        return pt, 0
    if pt.space == "sigma_rho":
        base, s, n = _advance_rho(family, pt.base, pt.s, t)
    else:
        base, s, n = _advance_r(family, pt.base, pt.s, t, kind, cfg)
    return FlowPoint(base, s, pt.space), n


def _rho_array(family: MapFamily, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    left = x < 1.0
    out = np.empty_like(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xl, yl = x[left], y[left]
        f_value, f_d1, _ = family.f0_float.evaluate(xl)
        g_value, g_d1, _ = family.g0_float.evaluate(yl)
        out[left] = family.rho0 * (
            np.log(xl)
            - np.log(yl)
            + np.log(g_value)
            - np.log(f_value)
            + np.log(f_d1)
            - np.log(g_d1)
        )
        xr, yr = x[~left], y[~left]
        out[~left] = family.rho0 * (
            np.log(xr) - np.log(yr) + np.log1p(yr) - np.log(xr - 1.0)
        )
    return out


def _p_array(
    family: MapFamily, x: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    left = x < 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f_value = family.f0_float(np.where(left, x, 0.5))
        new_x = np.where(left, f_value, x - 1.0)
        new_y = np.where(left, family.g0_float(y), y + 1.0)
    return new_x, new_y


def flow_rho_array(
    family: MapFamily,
    x: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    t: Any,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """the flow of Sigma_rho on arrays of points

    returns
    -------
    (x, y, s, steps, valid)
        valid is False for orbits that reach the singular line x = 1
    """

    # pylint: disable=too-many-locals

    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    total = np.array(s, dtype=float) + np.asarray(t, dtype=float)
    total = np.broadcast_to(total, x.shape).copy()
    steps = np.zeros(x.shape, dtype=np.int64)
    valid = np.ones(x.shape, dtype=bool)
    active = np.ones(x.shape, dtype=bool)
    margin = hm_params.singularity_margin
    while True:
        idx = np.flatnonzero(active & (x > 1.0))
        if idx.size:
            m, run = _right_run_array(family.rho0, x[idx], y[idx], total[idx])
            x[idx] -= m
            y[idx] += m
            total[idx] -= run
            steps[idx] += m.astype(np.int64)
        idx = np.flatnonzero(active)
        singular = np.abs(x[idx] - 1.0) < margin
        valid[idx[singular]] = False
        active[idx[singular]] = False
        idx = idx[~singular]
        if not idx.size:
            break
        roof = _rho_array(family, x[idx], y[idx])
        finite = np.isfinite(roof)
        valid[idx[~finite]] = False
        cross = finite & (total[idx] >= roof * _CROSS)
        active[idx[~cross]] = False
        go = idx[cross]
        total[go] = np.maximum(total[go] - roof[cross], 0.0)
        x[go], y[go] = _p_array(family, x[go], y[go])
        steps[go] += 1
    return x, y, total, steps, valid


class _RState:
    """class for arrays of points of Sigma_r with their roof and the
    cached image Ptilde(x, y)."""

    __slots__ = ("x", "y", "s", "roof", "next_x", "next_y", "n", "valid")
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    roof: np.ndarray
    next_x: np.ndarray
    next_y: np.ndarray
    n: np.ndarray
    valid: np.ndarray

    def __init__(
        self,
        family: MapFamily,
        x: np.ndarray,
        y: np.ndarray,
        s: np.ndarray,
        kind: str,
        cfg: RoofConfig,
    ) -> None:
        # pylint: disable=too-many-arguments
        self.x = np.array(x, dtype=float)
        self.y = np.array(y, dtype=float)
        self.s = np.array(s, dtype=float)
        self.roof, self.next_x, self.next_y = induced_roof_array(
            family, self.x, self.y, kind, cfg
        )
        self.n = np.zeros(self.x.shape, dtype=np.int64)
        self.valid = np.isfinite(self.roof)

    def advance(
        self, family: MapFamily, dt: float, kind: str, cfg: RoofConfig
    ) -> None:
        self.s = self.s + dt
        active = self.valid & (self.s >= self.roof * _CROSS)
        while np.any(active):
            idx = np.flatnonzero(active)
            self.s[idx] = np.maximum(self.s[idx] - self.roof[idx], 0.0)
            self.x[idx] = _clip_delta(family, self.next_x[idx])
            self.y[idx] = self.next_y[idx]
            self.n[idx] += 1
            roof, next_x, next_y = induced_roof_array(
                family, self.x[idx], self.y[idx], kind, cfg
            )
            finite = np.isfinite(roof)
            self.roof[idx] = roof
            self.next_x[idx] = next_x
            self.next_y[idx] = next_y
            self.valid[idx[~finite]] = False
            active[idx] = finite & (self.s[idx] >= roof * _CROSS)


def flow_r_array(
    family: MapFamily,
    x: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    t: float,
    kind: str = "birkhoff",
    cfg: Optional[RoofConfig] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """the flow of Sigma_r on arrays of points, as (x, y, s, steps,
    valid)."""

    # pylint: disable=too-many-arguments

    _check_range("t", t, 0.0, None, closed=True)
    cfg = cfg if cfg is not None else RoofConfig()
    state = _RState(family, x, y, s, kind, cfg)
    state.advance(family, t, kind, cfg)
    return state.x, state.y, state.s, state.n, state.valid


def project_pi(
    family: MapFamily,
    pt: FlowPoint,
    cfg: Optional[RoofConfig] = None,
    kind: str = "birkhoff",
) -> FlowPoint:
    """the projection of [(x, y), s] in Sigma_r onto Sigma_rho: the flow of
    Sigma_rho from [(x, y), 0] at time s, for s under the roof of Sigma_r

    examples
    --------
    >>> from hypmix.map_family import modular_family
    >>> start = FlowPoint(PlanePoint(math.sqrt(0.5), 1.0), 0.25, "sigma_r")
    >>> image = project_pi(modular_family(), start)
    >>> image.base == start.base, image.s, image.space
    (True, 0.25, 'sigma_rho')
    """

    if pt.space != "sigma_r":
        raise DomainError(
            f"Input Error: the point should lie in sigma_r, got {pt.space}."
        )
    _check_height(family, pt, kind, cfg if cfg is not None else RoofConfig())
    start = FlowPoint(pt.base, 0.0, "sigma_rho")
    return flow_advance(family, start, pt.s)[0]


def project_pi_array(
    family: MapFamily, x: np.ndarray, y: np.ndarray, s: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """project_pi on arrays, as (x, y, s, valid)."""

    x, y, s, _, valid = flow_rho_array(family, x, y, np.zeros_like(s), s)
    return x, y, s, valid


# return counts


def _r_step(
    family: MapFamily, x: np.ndarray, cfg: RoofConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """r(x) and Ftilde(x) on an array."""

    y = np.full(x.shape, cfg.y_prime)
    new_x, _, log_f, log_g, _ = ptilde_array(family, x, y)
    return family.rho0 * (log_f - log_g), new_x


def return_count_array(
    family: MapFamily,
    x: np.ndarray,
    a: np.ndarray,
    t_grid: Sequence[float],
    cfg: Optional[RoofConfig] = None,
) -> np.ndarray:
    """the number of returns sup{n >= 1 : a + t > r^(n)(x)} (0 if none)
    of the semiflow over Ftilde, for each x and each t of the grid, as an
    (n, len(t_grid)) integer array."""

    cfg = cfg if cfg is not None else RoofConfig()
    x = np.array(x, dtype=float)
    a = np.asarray(a, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    counts = np.zeros((x.size, t.size), dtype=np.int64)
    cumulative = np.zeros(x.size)
    active = np.arange(x.size)
    while active.size:
        roof, new_x = _r_step(family, x[active], cfg)
        roof = np.where(np.isfinite(roof), roof, np.inf)
        cumulative[active] += roof
        counts[active] += (
            a[active, None] + t[None, :] > cumulative[active, None]
        ).astype(np.int64)
        x[active] = _clip_delta(family, new_x)
        active = active[a[active] + t[-1] > cumulative[active]]
    return counts


def return_count(
    family: MapFamily,
    x: float,
    a: float,
    t: float,
    cfg: Optional[RoofConfig] = None,
) -> int:
    """the number of returns up to time t of [x, a] under the semiflow over
    Ftilde with roof r."""

    _check_range("t", t, 0.0, None, closed=True)
    counts = return_count_array(
        family, np.array([x]), np.array([a]), [t], cfg
    )
    return int(counts[0, 0])


# observables


class _Profile:  # pragma: no cover
    """abstract class for the one dimensional profile of a bump."""

    @staticmethod
    def value(u: np.ndarray) -> np.ndarray:
        """the profile, supported on |u| < 1."""

        raise NotImplementedError

    @staticmethod
    def sup_derivative() -> float:
        """the sup of the derivative of the profile."""

        raise NotImplementedError


class _ProfileSmooth(_Profile):
    """exp(1 - 1 / (1 - u^2)) on |u| < 1, of value 1 at 0."""

    @staticmethod
    def value(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    @staticmethod
    def sup_derivative() -> float:
        u = np.linspace(0.0, 1.0, 100_001)[:-1]
        w = 1.0 - u**2
        return float(np.max(2.0 * u * np.exp(1.0 - 1.0 / w) / w**2))


class _ProfileBiweight(_Profile):
    """(1 - u^2)^2 on |u| < 1."""

    @staticmethod
    def value(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)

    @staticmethod
    def sup_derivative() -> float:
        return 8.0 / (3.0 * math.sqrt(3.0))


class _ProfileConstant(_Profile):
    @staticmethod
    def value(u: np.ndarray) -> np.ndarray:
        return np.ones(np.shape(u))

    @staticmethod
    def sup_derivative() -> float:
        return 0.0


_dp_profile: _Dispatcher[_Profile] = _Dispatcher(_Profile())
"""dispatcher for the profile of an Observable

_dp_profile.dispatch("smooth") returns a C-infinity bump, "biweight" a C^1
one and "constant" the function 1.
"""
_dp_profile.set_method("smooth", _ProfileSmooth())
_dp_profile.set_method("biweight", _ProfileBiweight())
_dp_profile.set_method("constant", _ProfileConstant())


class Observable:
    """class for a product bump a phi((x - cx)/rx) phi((y - cy)/ry)
    phi((s - cs)/rs) on a suspension

    Attributes
    ----------
    center : FlowPoint
        the center, whose space is the space of the observable
    radii : tuple of float
        the half widths (rx, ry, rs)
    profile : str
        smooth [default], biweight or constant
    amplitude : float
        the factor a
    """

    __slots__ = ("center", "radii", "profile", "amplitude")
    center: FlowPoint
    radii: Tuple[float, float, float]
    profile: str
    amplitude: float

    def __init__(
        self,
        center: FlowPoint,
        radii: Tuple[float, float, float],
        profile: str = "smooth",
        amplitude: float = 1.0,
    ) -> None:
        """constructor for the Observable class.

        the support should stay off s = 0, off x = 1 and in x, y > 0; a
        DomainError is raised otherwise.

        examples
        --------
        >>> center = FlowPoint(PlanePoint(0.7, 0.8), 0.25, "sigma_r")
        >>> bump = Observable(center, (0.15, 0.6, 0.2))
        >>> float(bump(0.7, 0.8, 0.25)[()])
        1.0
        """

        _check_inputs("profile", _dp_profile.signatures(), profile)
        for name, radius in zip(("rx", "ry", "rs"), radii):
            _check_range(name, radius, 0.0)
        self.center = center
        self.radii = (float(radii[0]), float(radii[1]), float(radii[2]))
        self.profile = profile
        self.amplitude = float(amplitude)
        if profile == "constant":
            return
        x_lo, x_hi, y_lo, _, s_lo, _ = self.support()
        if x_lo <= 0 or y_lo <= 0 or s_lo <= 0:
            raise DomainError(
                f"Input Error: the support of {self!r} should lie in "
                "x, y > 0 and s > 0."
            )
        if x_lo < 1.0 < x_hi:
            raise DomainError(
                f"Input Error: the support of {self!r} should avoid x = 1."
            )

    def __repr__(self) -> str:
        return (
            f"Observable({self.center!r}, radii={self.radii}, "
            f"{self.profile})"
        )

    def support(self) -> Tuple[float, float, float, float, float, float]:
        """the box (x_lo, x_hi, y_lo, y_hi, s_lo, s_hi) of the support."""

        rx, ry, rs = self.radii
        cx = float(self.center.base.x)
        cy = float(self.center.base.y)
        cs = self.center.s
        return cx - rx, cx + rx, cy - ry, cy + ry, cs - rs, cs + rs

    @property
    def space(self) -> str:
        return self.center.space

    def __call__(self, x: Any, y: Any, s: Any) -> np.ndarray:
        base = self.center.base
        rx, ry, rs = self.radii
        phi = _dp_profile.dispatch(self.profile).value
        return self.amplitude * (
            phi((np.asarray(x, dtype=float) - float(base.x)) / rx)
            * phi((np.asarray(y, dtype=float) - float(base.y)) / ry)
            * phi((np.asarray(s, dtype=float) - self.center.s) / rs)
        )

    def derivative_bounds(self) -> Tuple[float, float, float]:
        """bounds of the partial derivatives in x, y and s."""

        profile = _dp_profile.dispatch(self.profile)
        sup = abs(self.amplitude) * profile.sup_derivative()
        rx, ry, rs = self.radii
        return sup / rx, sup / ry, sup / rs

    def validate(
        self,
        family: MapFamily,
        cfg: Optional[RoofConfig] = None,
        kind: str = "birkhoff",
        grid: int = 9,
    ) -> None:
        """check that the support lies under the roof, on a grid of its
        (x, y) box, and in Delta x R+ for Sigma_r; a DomainError is raised
        otherwise."""

        if self.profile == "constant":
            return
        x_lo, x_hi, y_lo, y_hi, _, top = self.support()
        xs, ys = np.meshgrid(
            np.linspace(x_lo, x_hi, grid), np.linspace(y_lo, y_hi, grid)
        )
        xs, ys = xs.ravel(), ys.ravel()
        if self.space == "sigma_r":
            if x_lo <= float(family.delta_lo()) or x_hi >= 1.0:
                raise DomainError(
                    f"Input Error: the x-support of {self!r} should lie in "
                    "Delta."
                )
            roof, _, _ = induced_roof_array(
                family, xs, ys, kind, cfg if cfg is not None else RoofConfig()
            )
        else:
            roof = _rho_array(family, xs, ys)
        # grid points on partition endpoints carry no roof
        roof = roof[np.isfinite(roof)]
        if not np.all(roof > top):
            raise DomainError(
                f"Input Error: the support of {self!r} should lie under the "
                f"roof, min roof {float(np.min(roof)):.4g} <= {top:.4g}."
            )


def default_observables(
    space: str = "sigma_r",
) -> Tuple[Observable, Observable]:
    """the bumps (u, v) of the correlation experiments on a space."""

    _check_inputs("space", ["sigma_r", "sigma_rho"], space)
    if space == "sigma_r":
        u = Observable(
            FlowPoint(PlanePoint(0.7, 0.8), 0.25, space), (0.15, 0.6, 0.2)
        )
        v = Observable(
            FlowPoint(PlanePoint(0.8, 1.2), 0.3, space), (0.15, 0.8, 0.25)
        )
    else:
        u = Observable(
            FlowPoint(PlanePoint(0.7, 0.8), 0.2, space), (0.15, 0.5, 0.15)
        )
        v = Observable(
            FlowPoint(PlanePoint(0.6, 1.5), 0.25, space), (0.1, 0.6, 0.2)
        )
    return u, v


# correlations


class CorrelationEstimate:
    """class for an estimate of the correlation function
    C(t) = E[u . v o P_t] - E[u] E[v] on Sigma_r

    Attributes
    ----------
    t_grid : numpy.ndarray
        the times
    c_hat : numpy.ndarray
        the pooled estimate at each time
    stderr : numpy.ndarray
        the standard error, from the spread of the per-stream estimates
    n_effective : numpy.ndarray
        the number of samples used at each time
    n_samples : int
        the budget
    seed : int
        the master seed
    rejected : int
        samples dropped for a singular roof
    mode : str
        ensemble or birkhoff
    streams : int
        the number of streams
    delta_hat, prefactor, r_squared : float
        the fit |C(t)| ~ prefactor exp(-delta_hat t), nan without signal
    """

    # pylint: disable=too-many-instance-attributes

    __slots__ = (
        "t_grid",
        "c_hat",
        "stderr",
        "n_effective",
        "n_samples",
        "seed",
        "rejected",
        "mode",
        "streams",
        "delta_hat",
        "prefactor",
        "r_squared",
    )
    t_grid: np.ndarray
    c_hat: np.ndarray
    stderr: np.ndarray
    n_effective: np.ndarray
    n_samples: int
    seed: int
    rejected: int
    mode: str
    streams: int
    delta_hat: float
    prefactor: float
    r_squared: float

    def __init__(
        self,
        t_grid: Sequence[float],
        c_hat: Sequence[float],
        stderr: Sequence[float],
        n_effective: Optional[Sequence[int]] = None,
        **fields: Any,
    ) -> None:
        """constructor for the CorrelationEstimate class.

        remaining fields: n_samples, seed, rejected, mode and streams.
        """

        self.t_grid = np.asarray(t_grid, dtype=float)
        self.c_hat = np.asarray(c_hat, dtype=float)
        self.stderr = np.asarray(stderr, dtype=float)
        if not self.t_grid.shape == self.c_hat.shape == self.stderr.shape:
            raise DomainError(
                "Input Error: t_grid, c_hat and stderr should have the same "
                "length."
            )
        if n_effective is None:
            n_effective = [0] * self.t_grid.size
        self.n_effective = np.asarray(n_effective, dtype=np.int64)
        self.n_samples = int(fields.get("n_samples", 0))
        self.seed = int(fields.get("seed", 0))
        self.rejected = int(fields.get("rejected", 0))
        self.mode = str(fields.get("mode", "ensemble"))
        self.streams = int(fields.get("streams", 1))
        self.delta_hat = math.nan
        self.prefactor = math.nan
        self.r_squared = math.nan

    def __repr__(self) -> str:
        return (
            f"CorrelationEstimate({self.mode}, n={self.n_samples}, "
            f"delta_hat={self.delta_hat:.4g})"
        )

    def fit(self) -> "CorrelationEstimate":
        """set delta_hat, prefactor and r_squared by fit_decay; they stay
        nan when the signal is too short."""

        try:
            self.delta_hat, self.prefactor, self.r_squared = fit_decay(self)
        except InsufficientSignalError as err:
            logger.warning("no decay fit: %s", err)
        return self

    def records(self) -> List[Dict[str, object]]:
        """rows t, c_hat, stderr, n_effective."""

        return [
            {"t": t, "c_hat": c, "stderr": se, "n_effective": int(n)}
            for t, c, se, n in zip(
                self.t_grid.tolist(),
                self.c_hat.tolist(),
                self.stderr.tolist(),
                self.n_effective.tolist(),
            )
        ]

    def summary(self) -> Dict[str, object]:
        return {
            "delta_hat": self.delta_hat,
            "prefactor": self.prefactor,
            "r_squared": self.r_squared,
            "rejected_samples": self.rejected,
        }

    def plot(self) -> None:  # pragma: no cover
        """plot |c_hat| with its error bars on a log scale, with the fit

        examples
        --------
        >>> estimate.plot()  # doctest: +SKIP
        """

        _, axes = subplots()
        axes.errorbar(
            self.t_grid, np.abs(self.c_hat), yerr=self.stderr, fmt="o"
        )
        if math.isfinite(self.delta_hat):
            axes.plot(
                self.t_grid,
                self.prefactor * np.exp(-self.delta_hat * self.t_grid),
            )
        axes.set_yscale("log")
        axes.set_xlabel("t")
        title(f"|C(t)|, delta_hat = {self.delta_hat:.4g}")
        show()


_StreamSums = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]


class _Mode:  # pragma: no cover
    """abstract class for the sampling scheme of correlate."""

    @staticmethod
    def sums(
        spec: DensitySpec,
        pair: Tuple[Observable, Observable],
        t_grid: np.ndarray,
        n: int,
        rng: np.random.Generator,
        roof: Tuple[str, RoofConfig],
    ) -> _StreamSums:
        """count, sum u, sum v_t, sum u v_t at each time and the number of
        rejected samples, for one stream."""

        raise NotImplementedError


class _ModeEnsemble(_Mode):
    """n independent points of nu_r, each flowed along the grid."""

    @staticmethod
    def sums(
        spec: DensitySpec,
        pair: Tuple[Observable, Observable],
        t_grid: np.ndarray,
        n: int,
        rng: np.random.Generator,
        roof: Tuple[str, RoofConfig],
    ) -> _StreamSums:
        # pylint: disable=too-many-arguments, too-many-locals
        u, v = pair
        kind, cfg = roof
        sample = sample_nu_r(spec, rng, n, cfg, kind)
        state = _RState(spec.family, sample.x, sample.y, sample.s, kind, cfg)
        u0 = u(state.x, state.y, state.s)
        count = np.zeros(t_grid.size, dtype=np.int64)
        sum_u, sum_v, sum_uv = (np.zeros(t_grid.size) for _ in range(3))
        elapsed = 0.0
        for j, t in enumerate(t_grid):
            state.advance(spec.family, t - elapsed, kind, cfg)
            elapsed = t
            valid = state.valid
            v_t = v(state.x[valid], state.y[valid], state.s[valid])
            count[j] = int(np.sum(valid))
            sum_u[j] = np.sum(u0[valid])
            sum_v[j] = np.sum(v_t)
            sum_uv[j] = np.sum(u0[valid] * v_t)
        rejected = sample.singular + int(np.sum(~state.valid))
        return count, sum_u, sum_v, sum_uv, rejected


class _ModeBirkhoff(_Mode):
    """one orbit of n + max lag steps of the uniform grid, restarted from a
    fresh nu_r point when it meets a singular roof."""

    @staticmethod
    def sums(
        spec: DensitySpec,
        pair: Tuple[Observable, Observable],
        t_grid: np.ndarray,
        n: int,
        rng: np.random.Generator,
        roof: Tuple[str, RoofConfig],
    ) -> _StreamSums:
        # pylint: disable=too-many-arguments, too-many-locals
        u, v = pair
        kind, cfg = roof
        step = t_grid[1] - t_grid[0] if t_grid.size > 1 else 1.0
        lags = np.rint(t_grid / step).astype(np.int64)
        if not np.allclose(lags * step, t_grid) or lags[0] < 0:
            raise DomainError(
                "Input Error: the birkhoff mode needs a grid of multiples of "
                f"its step, got {t_grid.tolist()}."
            )
        length = n + int(lags[-1])
        values_u = np.empty(length)
        values_v = np.empty(length)
        rejected = 0

        def fresh() -> _RState:
            sample = sample_nu_r(spec, rng, 1, cfg, kind)
            return _RState(
                spec.family, sample.x, sample.y, sample.s, kind, cfg
            )

        state = fresh()
        for j in range(length):
            if j:
                state.advance(spec.family, step, kind, cfg)
            if not state.valid[0]:
                rejected += 1
                state = fresh()
            values_u[j] = u(state.x, state.y, state.s)[0]
            values_v[j] = v(state.x, state.y, state.s)[0]
        count = np.full(t_grid.size, n, dtype=np.int64)
        sum_u = np.full(t_grid.size, np.sum(values_u[:n]))
        sum_v = np.array([np.sum(values_v[lag : lag + n]) for lag in lags])
        sum_uv = np.array(
            [np.sum(values_u[:n] * values_v[lag : lag + n]) for lag in lags]
        )
        return count, sum_u, sum_v, sum_uv, rejected


_dp_mode: _Dispatcher[_Mode] = _Dispatcher(_Mode())
"""dispatcher for the sampling scheme of correlate

_dp_mode.dispatch("ensemble") flows independent nu_r points, "birkhoff"
averages along orbits.
"""
_dp_mode.set_method("ensemble", _ModeEnsemble())
_dp_mode.set_method("birkhoff", _ModeBirkhoff())


def _correlation_stream(
    mode: str,
    spec: DensitySpec,
    pair: Tuple[Observable, Observable],
    t_grid: np.ndarray,
    n: int,
    seed: int,
    stream: int,
    roof: Tuple[str, RoofConfig],
) -> _StreamSums:
    # pylint: disable=too-many-arguments
    rng = rng_stream(seed, _STREAM_CORR + stream)
    return _dp_mode.dispatch(mode).sums(spec, pair, t_grid, n, rng, roof)


def _correlation(
    count: np.ndarray, sum_u: np.ndarray, sum_v: np.ndarray, sum_uv: np.ndarray
) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return sum_uv / count - (sum_u / count) * (sum_v / count)


def correlate(
    spec: DensitySpec,
    u: Observable,
    v: Observable,
    t_grid: Sequence[float],
    budget: int,
    seed: int = 0,
    mode: str = "ensemble",
    streams: int = 16,
    threads: int = 1,
    cfg: Optional[RoofConfig] = None,
    kind: str = "birkhoff",
) -> CorrelationEstimate:
    """Monte Carlo estimate of C(t) = int u . v o P_t dnu_r - int u dnu_r
    int v dnu_r on Sigma_r

    the budget is split over independent streams, one Philox key
    (seed, 100 + k) each, so that the result does not depend on threads.

    parameters
    ----------
    spec : DensitySpec
        the density
    u, v : Observable
        the observables, on sigma_r
    t_grid : sequence of float
        increasing times >= 0; a uniform grid for the birkhoff mode
    budget : int
        the number of samples (ensemble) or orbit steps (birkhoff)
    seed : int
        the master seed
    mode : str
        ensemble [default] or birkhoff
    streams : int
        the number of streams, >= 2
    threads : int
        the number of worker processes
    cfg : RoofConfig, optional
        y' of the roof r
    kind : str
        the roof of Sigma_r, birkhoff [default] or r

    returns
    -------
    CorrelationEstimate
        with the decay fit when the signal allows it
    """

    # pylint: disable=too-many-arguments, too-many-locals

    _check_inputs("mode", _dp_mode.signatures(), mode)
    _check_range("streams", streams, 2, None, closed=True)
    _check_range("budget", budget, streams, None, closed=True)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or not t.size or t[0] < 0 or np.any(np.diff(t) <= 0):
        raise DomainError(
            "Input Error: t_grid should be increasing and >= 0, got "
            f"{t.tolist()}."
        )
    for observable in (u, v):
        if observable.space != "sigma_r":
            raise DomainError(
                f"Input Error: {observable!r} should live on sigma_r."
            )
    cfg = cfg if cfg is not None else RoofConfig()
    sizes = [
        budget // streams + (1 if k < budget % streams else 0)
        for k in range(streams)
    ]
    args = [
        (mode, spec, (u, v), t, sizes[k], seed, k, (kind, cfg))
        for k in range(streams)
    ]
    logger.info(
        "correlate: %s mode, budget %d over %d streams, %d threads",
        mode,
        budget,
        streams,
        threads,
    )
    results = _map_chunks(_correlation_stream, args, threads)
    rejected = sum(result[4] for result in results)
    if rejected > 0.5 * budget:
        raise RejectionBudgetError(
            f"correlate: {rejected} of {budget} samples met a singular roof."
        )
    totals = [
        np.sum([result[i] for result in results], axis=0) for i in range(4)
    ]
    c_hat = _correlation(*totals)
    per_stream = np.array([_correlation(*result[:4]) for result in results])
    stderr = np.nanstd(per_stream, axis=0, ddof=1) / math.sqrt(streams)
    estimate = CorrelationEstimate(
        t,
        c_hat,
        stderr,
        totals[0],
        n_samples=budget,
        seed=seed,
        rejected=rejected,
        mode=mode,
        streams=streams,
    )
    return estimate.fit()


def _loglinear_fit(
    t: np.ndarray, values: np.ndarray, stderr: Optional[np.ndarray] = None
) -> Tuple[float, float, float]:
    """weighted least squares of ln(values) on t, as (slope, intercept,
    r_squared); the weights are values / stderr, uniform when some stderr
    vanishes."""

    log_values = np.log(values)
    if stderr is None or np.any(stderr <= 0):
        weights = np.ones(t.size)
    else:
        weights = values / stderr
    slope, intercept = np.polyfit(t, log_values, 1, w=weights)
    w2 = weights**2
    mean = np.sum(w2 * log_values) / np.sum(w2)
    ss_res = np.sum(w2 * (log_values - (slope * t + intercept)) ** 2)
    ss_tot = np.sum(w2 * (log_values - mean) ** 2)
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r_squared)


def fit_decay(estimate: CorrelationEstimate) -> Tuple[float, float, float]:
    """fit |c_hat(t)| ~ prefactor exp(-delta t) on the longest leading run
    of times where |c_hat| > 3 stderr

    returns
    -------
    (delta_hat, prefactor, r_squared)

    examples
    --------
    >>> t = np.arange(10, dtype=float)
    >>> exact = CorrelationEstimate(t, 0.5 * np.exp(-0.7 * t), np.zeros(10))
    >>> [round(value, 9) for value in fit_decay(exact)]
    [0.7, 0.5, 1.0]
    """

    size = np.abs(estimate.c_hat)
    signal = (size > 3.0 * estimate.stderr) & (size > 0)
    window = int(signal.size if np.all(signal) else np.argmin(signal))
    if window < 4:
        raise InsufficientSignalError(
            f"{window} leading points above 3 stderr, at least 4 needed."
        )
    slope, intercept, r_squared = _loglinear_fit(
        estimate.t_grid[:window], size[:window], estimate.stderr[:window]
    )
    return -slope, math.exp(intercept), r_squared


class DecayCurve:
    """class for a curve t -> value with an exponential fit on a window

    Attributes
    ----------
    t_grid, values, stderr : numpy.ndarray
        the curve and its standard error
    rate, prefactor, r_squared : float
        the fit values ~ prefactor exp(-rate t)
    fit_window : tuple of float
        the first and last time of the fit
    """

    # pylint: disable=too-few-public-methods

    __slots__ = (
        "t_grid",
        "values",
        "stderr",
        "rate",
        "prefactor",
        "r_squared",
        "fit_window",
    )
    t_grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    rate: float
    prefactor: float
    r_squared: float
    fit_window: Tuple[float, float]

    def __init__(
        self,
        t_grid: np.ndarray,
        values: np.ndarray,
        stderr: np.ndarray,
        mask: np.ndarray,
    ) -> None:
        self.t_grid = t_grid
        self.values = values
        self.stderr = stderr
        if int(np.sum(mask)) < 3:
            raise InsufficientSignalError(
                f"{int(np.sum(mask))} points in the fit window, at least 3 "
                "needed."
            )
        slope, intercept, self.r_squared = _loglinear_fit(
            t_grid[mask], values[mask], stderr[mask]
        )
        self.rate = -slope
        self.prefactor = math.exp(intercept)
        self.fit_window = (float(t_grid[mask][0]), float(t_grid[mask][-1]))

    def __repr__(self) -> str:
        return (
            f"DecayCurve(rate={self.rate:.4g}, "
            f"r_squared={self.r_squared:.4g})"
        )

    def records(self) -> List[Dict[str, object]]:
        return [
            {"t": t, "value": value, "stderr": se}
            for t, value, se in zip(
                self.t_grid.tolist(),
                self.values.tolist(),
                self.stderr.tolist(),
            )
        ]


def return_count_decay(
    spec: DensitySpec,
    t_grid: Sequence[float],
    n: int,
    seed: int = 0,
    k: float = 2.0,
    cfg: Optional[RoofConfig] = None,
    fit_range: Tuple[float, float] = (1.0, 8.0),
) -> DecayCurve:
    """E[k^(-returns up to t)] over nu_r with the roof r, and its log-linear
    fit on fit_range; the decay reflects the spectral gap of the twisted
    transfer operators."""

    # pylint: disable=too-many-arguments

    _check_range("k", k, 1.0)
    cfg = cfg if cfg is not None else RoofConfig()
    t = np.asarray(t_grid, dtype=float)
    sample = sample_nu_r(spec, rng_stream(seed, _STREAM_RETURNS), n, cfg, "r")
    counts = return_count_array(spec.family, sample.x, sample.s, t, cfg)
    weights = k ** (-counts.astype(float))
    values = weights.mean(axis=0)
    stderr = weights.std(axis=0, ddof=1) / math.sqrt(n)
    mask = (t >= fit_range[0]) & (t <= fit_range[1]) & (values > 0)
    return DecayCurve(t, values, stderr, mask)


def roof_tail(
    spec: DensitySpec,
    t_grid: Sequence[float],
    n: int,
    seed: int = 0,
    cfg: Optional[RoofConfig] = None,
) -> DecayCurve:
    """the tail t -> mu_hat(r >= t) of the roof r, fitted where it is
    resolved above 3 stderr."""

    cfg = cfg if cfg is not None else RoofConfig()
    t = np.asarray(t_grid, dtype=float)
    x, _ = sample_nu(spec, rng_stream(seed, _STREAM_TAIL), n)
    roof, _ = _r_step(spec.family, x, cfg)
    values = np.mean(roof[:, None] >= t[None, :], axis=0)
    stderr = np.sqrt(values * (1.0 - values) / n)
    mask = (values < 1.0) & (values > 3.0 * stderr)
    return DecayCurve(t, values, stderr, mask)


class TransportReport:
    """class for the comparison of int u . v o phi_t dm_rho with its
    transport to Sigma_r by the projection

    Attributes
    ----------
    t : float
        the time
    n : int
        samples on each side
    sigma_r, sigma_rho : float
        the two estimates of the normalized integral
    se_r, se_rho : float
        their standard errors
    n_sigma : float
        the tolerance in standard errors
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("t", "n", "sigma_r", "sigma_rho", "se_r", "se_rho", "n_sigma")
    t: float
    n: int
    sigma_r: float
    sigma_rho: float
    se_r: float
    se_rho: float
    n_sigma: float

    def __init__(self, **fields: Any) -> None:
        for key in self.__slots__:
            setattr(self, key, fields[key])

    @property
    def z(self) -> float:
        scale = math.hypot(self.se_r, self.se_rho)
        difference = self.sigma_r - self.sigma_rho
        return difference / scale if scale > 0 else math.nan

    @property
    def passed(self) -> bool:
        return abs(self.z) < self.n_sigma

    def record(self) -> Dict[str, object]:
        return {
            "check": "transport",
            "n": self.n,
            "grid_size": 1,
            "value": self.sigma_r,
            "reference": self.sigma_rho,
            "witness": self.t,
            "pass": self.passed,
        }


def transport_check(
    spec: DensitySpec,
    u: Observable,
    v: Observable,
    t: float,
    n: int,
    seed: int = 0,
    n_sigma: float = 3.0,
) -> TransportReport:
    """compare E_{nu_r}[u o Pi . v o Pi o P_t] with
    (W / M) E_{m_rho on the window}[u . v o phi_t], W the m_rho mass of the
    window and M the full one; u and v live on sigma_rho and their
    support should lie in the window."""

    # pylint: disable=too-many-arguments, too-many-locals

    family = spec.family
    y_lo, y_hi = spec.window.y_window
    for observable in (u, v):
        if observable.space != "sigma_rho":
            raise DomainError(
                f"Input Error: {observable!r} should live on sigma_rho."
            )
        x_lo, x_hi, b_lo, b_hi, _, _ = observable.support()
        pieces = spec.window.x_pieces()
        inside = any(lo <= x_lo and x_hi <= hi for lo, hi in pieces)
        if not (inside and y_lo <= b_lo and b_hi <= y_hi):
            raise DomainError(
                f"Input Error: the support of {observable!r} should lie in "
                "the sampling window."
            )

    rng = rng_stream(seed, _STREAM_TRANSPORT)
    cfg = RoofConfig()
    sample = sample_nu_r(spec, rng, n, cfg, "birkhoff")
    px, py, ps, valid0 = project_pi_array(family, sample.x, sample.y, sample.s)
    ux = u(px, py, ps)
    fx, fy, fs, _, valid_t = flow_r_array(
        family, sample.x, sample.y, sample.s, t, "birkhoff", cfg
    )
    qx, qy, qs, valid1 = project_pi_array(family, fx, fy, fs)
    keep = valid0 & valid_t & valid1
    products_r = np.where(keep, ux * v(qx, qy, qs), 0.0)

    rng = rng_stream(seed, _STREAM_TRANSPORT + 1)
    x, y, s = sample_m_rho_array(spec, rng, n)
    ux = u(x, y, s)
    fx, fy, fs, _, valid = flow_rho_array(family, x, y, s, t)
    normalizer = m_rho_normalizer(spec)
    scale = normalizer.window / normalizer.full
    products_rho = scale * np.where(valid, ux * v(fx, fy, fs), 0.0)

    report = TransportReport(
        t=t,
        n=n,
        sigma_r=float(np.mean(products_r)),
        sigma_rho=float(np.mean(products_rho)),
        se_r=float(np.std(products_r, ddof=1) / math.sqrt(n)),
        se_rho=float(np.std(products_rho, ddof=1) / math.sqrt(n)),
        n_sigma=n_sigma,
    )
    if not math.hypot(report.se_r, report.se_rho) > 0:
        raise InsufficientSignalError(
            f"transport at t = {t}: u . v o phi_t vanishes on all {n} "
            "samples of both sides, choose a time or observables with "
            "overlapping supports."
        )
    logger.info("transport at t = %g: z = %.3g", t, report.z)
    return report
