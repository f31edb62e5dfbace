"""parameters & settings for the package

This module defines a class for the package parameters and creates an
instance of this class. Also the settings classes for the sections of a
run configuration are created here, together with the parser of the
INI-style configuration file.
"""

import configparser
import os
import re
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from hypmix._general import ConfigError, _check_inputs, _check_range

__all__: List[str] = [
    "hm_params",
    "FamilySettings",
    "MeasureSettings",
    "VerifySettings",
    "SimulateSettings",
    "RunConfig",
    "read_config",
    "read_config_text",
    "threads_from_env",
]

OmegaSpec = Union[str, Tuple[float, ...]]


class _HMParameters:
    """class for package parameters

    Attributes
    ----------
    inverse_tol: float
        tolerance for the round trip g0(f0(x)) = x (default: 1e-12)
    boundary_ulps: int
        distance in ulps below which a point is considered to sit on a
        partition endpoint (default: 4)
    singularity_margin: float
        distance to x = 1 below which a float orbit is rejected
        (default: 1e-10)
    boundary_slack_cap: float
        cap of the carried orbit error in the endpoint test; once the
        running bound of a float orbit passes it the orbit is treated as
        a pseudo-orbit of nearby points (default: 1e-9)
    closed_form_tol: float
        tolerance for Birkhoff sums against closed forms (default: 1e-9)
    series_tail_tol: float
        target for truncated omega series (default: 1e-9)
    extended_precision_q: int
        above this q, derivative products are accumulated as compensated
        sums of logarithms (default: 1000)
    orbit_table_size: int
        number of cached Moebius powers for the vectorised paths
        (default: 65536)
    rejection_cap: int
        maximum number of rejection rounds per draw (default: 10000)
    roof_cap: float
        envelope of the roof weight when sampling size-biased measures
        (default: 60)
    finite_difference_step: float
        step for central differences (default: 1e-6)
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "inverse_tol",
        "boundary_ulps",
        "singularity_margin",
        "boundary_slack_cap",
        "closed_form_tol",
        "series_tail_tol",
        "extended_precision_q",
        "orbit_table_size",
        "rejection_cap",
        "roof_cap",
        "finite_difference_step",
    )
    inverse_tol: float
    boundary_ulps: int
    singularity_margin: float
    boundary_slack_cap: float
    closed_form_tol: float
    series_tail_tol: float
    extended_precision_q: int
    orbit_table_size: int
    rejection_cap: int
    roof_cap: float
    finite_difference_step: float

    def __init__(self) -> None:
        """constructor for the _HMParameters class."""
        self.inverse_tol = 1e-12
        self.boundary_ulps = 4
        self.singularity_margin = 1e-10
        self.boundary_slack_cap = 1e-9
        self.closed_form_tol = 1e-9
        self.series_tail_tol = 1e-9
        self.extended_precision_q = 1000
        self.orbit_table_size = 65536
        self.rejection_cap = 10_000
        self.roof_cap = 60.0
        self.finite_difference_step = 1e-6


hm_params = _HMParameters()
"""instance of _HMParameters

global variable to be used throughout.
"""


def _check_omega(parameter: str, omega: OmegaSpec) -> OmegaSpec:
    if isinstance(omega, str):
        _check_inputs(parameter, ["inverse_square"], omega)
        return omega
    values = tuple(float(value) for value in omega)
    if len(values) < 2:
        raise ConfigError(
            f"Input Error: {parameter} should be inverse_square or a table "
            f"of at least 2 values, got {omega}."
        )
    for value in values:
        _check_range(parameter, value, 0.0, 1.0, closed=True)
        _check_range(parameter, value, 0.0)
    if any(nxt >= cur for cur, nxt in zip(values, values[1:])):
        raise ConfigError(
            f"Input Error: {parameter} should be strictly decreasing, "
            f"got {omega}."
        )
    return values


class FamilySettings:
    """class for the [family] settings

    Attributes
    ----------
    name : str
        modular (built-in) or mobius (from f0_coeffs)
    f0_coeffs : tuple of 4 numbers
        Moebius coefficients (a, b, c, d) of f0(x) = (ax+b)/(cx+d)
    rho0 : float
        roof-function scale
    omega1, omega2 : str or tuple of float
        the tail sequences, by name (inverse_square) or as a table
    ci1, ci2 : float
        the constants in assumption (B)
    sigma1, sigma2 : float
        the tail exponents in assumption (B)
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "name",
        "f0_coeffs",
        "rho0",
        "omega1",
        "omega2",
        "ci1",
        "ci2",
        "sigma1",
        "sigma2",
    )
    name: str
    f0_coeffs: Tuple[Union[int, Fraction, float], ...]
    rho0: float
    omega1: OmegaSpec
    omega2: OmegaSpec
    ci1: float
    ci2: float
    sigma1: float
    sigma2: float

    def __init__(
        self,
        name: str = "modular",
        f0_coeffs: Optional[Tuple[Union[int, Fraction, float], ...]] = None,
        rho0: float = 0.5,
        omega1: OmegaSpec = "inverse_square",
        omega2: OmegaSpec = "inverse_square",
        ci1: float = 1.0,
        ci2: float = 4.0,
        sigma1: float = 0.49,
        sigma2: float = 0.49,
    ) -> None:
        """constructor for the FamilySettings class.

        parameters
        ----------
        name : str
            modular [default] or mobius
        f0_coeffs : tuple of 4 numbers, optional
            required for mobius; must describe an increasing bijection
            (0,1) -> R+, i.e. b = 0, c = -d and a/d > 0
        rho0 : float
            roof-function scale, > 0 (default: 0.5)
        omega1, omega2 : str or tuple of float
            tail sequences (default: inverse_square)
        ci1, ci2 : float
            positive constants (default: 1 and 4)
        sigma1, sigma2 : float
            tail exponents in (0, 1) (default: 0.49)

        returns
        -------
        None

        examples
        --------
        >>> settings = FamilySettings(
        ...     name = "mobius",
        ...     f0_coeffs = (2, 0, -1, 1),
        ... )
        """

        # pylint: disable=too-many-arguments

        _check_inputs("name", ["modular", "mobius"], name)
        self.name = name
        if name == "modular":
            if f0_coeffs is not None and tuple(f0_coeffs) != (1, 0, -1, 1):
                raise ConfigError(
                    "Input Error: f0_coeffs should be omitted for the "
                    f"modular family, got {f0_coeffs}."
                )
            self.f0_coeffs = (1, 0, -1, 1)
        else:
            if f0_coeffs is None or len(f0_coeffs) != 4:
                raise ConfigError(
                    "Input Error: f0_coeffs should be 4 numbers a,b,c,d, "
                    f"got {f0_coeffs}."
                )
            a, b, c, d = f0_coeffs
            if b != 0 or c != -d or d == 0 or a / d <= 0:
                raise ConfigError(
                    "Input Error: f0_coeffs should satisfy b = 0, c = -d "
                    f"and a/d > 0, got {f0_coeffs}."
                )
            self.f0_coeffs = tuple(f0_coeffs)
        _check_range("rho0", rho0, 0.0)
        self.rho0 = rho0
        self.omega1 = _check_omega("omega1", omega1)
        self.omega2 = _check_omega("omega2", omega2)
        _check_range("ci1", ci1, 0.0)
        _check_range("ci2", ci2, 0.0)
        self.ci1 = ci1
        self.ci2 = ci2
        _check_range("sigma1", sigma1, 0.0, 1.0)
        _check_range("sigma2", sigma2, 0.0, 1.0)
        self.sigma1 = sigma1
        self.sigma2 = sigma2


class MeasureSettings:
    """class for the [measure] settings

    Attributes
    ----------
    x_window : (float, float)
        x-range of the windowed sampling of m, x_lo < 1 < x_hi
    y_window : (float, float)
        y-range of the windowed sampling of m_rho
    singular_gap : float
        half width of the excluded strip around x = 1
    rejection_cap : int
        maximum number of rejection rounds per draw
    roof_cap : float
        roof envelope for size-biased sampling of nu_r
    seed : int, optional
        seed of the sampling streams (default: the run seed)
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "x_window",
        "y_window",
        "singular_gap",
        "rejection_cap",
        "roof_cap",
        "seed",
    )
    x_window: Tuple[float, float]
    y_window: Tuple[float, float]
    singular_gap: float
    rejection_cap: int
    roof_cap: float
    seed: Optional[int]

    def __init__(
        self,
        x_window: Tuple[float, float] = (0.05, 20.0),
        y_window: Tuple[float, float] = (0.05, 20.0),
        singular_gap: float = 1e-3,
        rejection_cap: Optional[int] = None,
        roof_cap: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> None:
        """constructor for the MeasureSettings class.

        parameters
        ----------
        x_window : (float, float)
            0 < x_lo < 1 - singular_gap, x_hi > 1 + singular_gap
        y_window : (float, float)
            0 < y_lo < y_hi
        singular_gap : float
            in (0, 0.5) (default: 1e-3)
        rejection_cap : int, optional
            default hm_params.rejection_cap
        roof_cap : float, optional
            default hm_params.roof_cap
        seed : int, optional
            non-negative seed

        returns
        -------
        None
        """

        # pylint: disable=too-many-arguments

        _check_range("singular_gap", singular_gap, 0.0, 0.5)
        self.singular_gap = singular_gap
        x_lo, x_hi = x_window
        _check_range("x_window", x_lo, 0.0, 1.0 - singular_gap)
        _check_range("x_window", x_hi, 1.0 + singular_gap)
        self.x_window = (x_lo, x_hi)
        y_lo, y_hi = y_window
        _check_range("y_window", y_lo, 0.0)
        _check_range("y_window", y_hi, y_lo)
        self.y_window = (y_lo, y_hi)
        if rejection_cap is None:
            rejection_cap = hm_params.rejection_cap
        _check_range("rejection_cap", rejection_cap, 1, None, closed=True)
        self.rejection_cap = int(rejection_cap)
        if roof_cap is None:
            roof_cap = hm_params.roof_cap
        _check_range("roof_cap", roof_cap, 0.0)
        self.roof_cap = roof_cap
        if seed is not None:
            _check_range("seed", seed, 0, 2**64 - 1, closed=True)
        self.seed = seed


class VerifySettings:
    """class for the [verify] settings

    Attributes
    ----------
    uni_n : tuple of int
        the n values of the UNI check
    uni_grid : int
        grid size of the UNI check
    tails_smax, tails_qmax : int
        truncation of the tails series
    sigma : float, optional
        tail exponent (default: 0.8 of the admissible bound)
    ordini_samples : int
        number of sampled quads for the comparability check
    distortion_pairs : int
        number of pairs for the distortion check
    n_max : int
        range of the (B) checks
    y_prime : float
        the reference fiber point
    truncation_n : int
        order of the cohomology series
    cohomology_points : int
        number of sampled points for the cohomology check
    transfer_points : int
        number of grid points for the transfer residual
    transfer_truncation : int
        truncation (s_max = q_max) of the transfer sum
    invariance_samples : int
        Monte Carlo samples per rectangle for the invariance of m
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "uni_n",
        "uni_grid",
        "tails_smax",
        "tails_qmax",
        "sigma",
        "ordini_samples",
        "distortion_pairs",
        "n_max",
        "y_prime",
        "truncation_n",
        "cohomology_points",
        "transfer_points",
        "transfer_truncation",
        "invariance_samples",
    )
    uni_n: Tuple[int, ...]
    uni_grid: int
    tails_smax: int
    tails_qmax: int
    sigma: Optional[float]
    ordini_samples: int
    distortion_pairs: int
    n_max: int
    y_prime: float
    truncation_n: int
    cohomology_points: int
    transfer_points: int
    transfer_truncation: int
    invariance_samples: int

    def __init__(
        self,
        uni_n: Tuple[int, ...] = (1, 2, 3, 4),
        uni_grid: int = 1000,
        tails_smax: int = 100,
        tails_qmax: int = 100,
        sigma: Optional[float] = None,
        ordini_samples: int = 1000,
        distortion_pairs: int = 10_000,
        n_max: int = 1000,
        y_prime: float = 1.0,
        truncation_n: int = 20,
        cohomology_points: int = 100,
        transfer_points: int = 20,
        transfer_truncation: int = 200,
        invariance_samples: int = 1_000_000,
    ) -> None:
        """constructor for the VerifySettings class; every count must be
        at least 1 (tails truncations and n_max at least 2), sigma and
        y_prime positive.
        """

        # pylint: disable=too-many-arguments, too-many-locals

        if len(uni_n) == 0:
            raise ConfigError(
                "Input Error: uni_n should be non-empty, got ()."
            )
        for n in uni_n:
            _check_range("uni_n", n, 1, None, closed=True)
        self.uni_n = tuple(int(n) for n in uni_n)
        counts: Dict[str, Tuple[int, int]] = {
            "uni_grid": (uni_grid, 2),
            "tails_smax": (tails_smax, 4),
            "tails_qmax": (tails_qmax, 2),
            "ordini_samples": (ordini_samples, 1),
            "distortion_pairs": (distortion_pairs, 1),
            "n_max": (n_max, 2),
            "truncation_n": (truncation_n, 1),
            "cohomology_points": (cohomology_points, 1),
            "transfer_points": (transfer_points, 1),
            "transfer_truncation": (transfer_truncation, 2),
            "invariance_samples": (invariance_samples, 2),
        }
        for key, (value, lowest) in counts.items():
            _check_range(key, value, lowest, None, closed=True)
            setattr(self, key, int(value))
        if sigma is not None:
            _check_range("sigma", sigma, 0.0)
        self.sigma = sigma
        _check_range("y_prime", y_prime, 0.0)
        self.y_prime = y_prime


class SimulateSettings:
    """class for the [simulate] settings

    Attributes
    ----------
    budget : int
        number of nu_r samples (ensemble) or orbit length (birkhoff)
    t_max, t_step : float
        the time grid 0, t_step, ..., t_max
    mode : str
        ensemble [default] or birkhoff
    streams : int
        number of independent random streams
    """

    # pylint: disable=too-few-public-methods

    __slots__ = ("budget", "t_max", "t_step", "mode", "streams")
    budget: int
    t_max: float
    t_step: float
    mode: str
    streams: int

    def __init__(
        self,
        budget: int = 100_000,
        t_max: float = 10.0,
        t_step: float = 0.5,
        mode: str = "ensemble",
        streams: int = 16,
    ) -> None:
        """constructor for the SimulateSettings class."""

        # pylint: disable=too-many-arguments

        _check_range("streams", streams, 2, None, closed=True)
        self.streams = int(streams)
        _check_range("budget", budget, self.streams, None, closed=True)
        self.budget = int(budget)
        _check_range("t_step", t_step, 0.0)
        _check_range("t_max", t_max, t_step, None, closed=True)
        self.t_step = t_step
        self.t_max = t_max
        _check_inputs("mode", ["ensemble", "birkhoff"], mode)
        self.mode = mode


def threads_from_env(default: int = 1) -> int:
    """the worker count given by HYPMIX_THREADS, or the default."""

    raw = os.environ.get("HYPMIX_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        threads = int(raw)
    except ValueError as err:
        raise ConfigError(
            f"Input Error: HYPMIX_THREADS should be an integer, got {raw}."
        ) from err
    _check_range("HYPMIX_THREADS", threads, 1, None, closed=True)
    return threads


class RunConfig:
    """class bundling the settings of one run

    Attributes
    ----------
    family : FamilySettings
    measure : MeasureSettings
    verify : VerifySettings
    simulate : SimulateSettings
    output_dir : Path
        directory for the emitted CSV files
    seed : int
        master seed
    threads : int
        number of worker processes
    """

    # pylint: disable=too-few-public-methods, too-many-instance-attributes

    __slots__ = (
        "family",
        "measure",
        "verify",
        "simulate",
        "output_dir",
        "seed",
        "threads",
    )
    family: FamilySettings
    measure: MeasureSettings
    verify: VerifySettings
    simulate: SimulateSettings
    output_dir: Path
    seed: int
    threads: int

    def __init__(
        self,
        family: Optional[FamilySettings] = None,
        measure: Optional[MeasureSettings] = None,
        verify: Optional[VerifySettings] = None,
        simulate: Optional[SimulateSettings] = None,
        output_dir: Union[str, Path] = ".",
        seed: int = 0,
        threads: Optional[int] = None,
    ) -> None:
        """constructor for the RunConfig class; missing sections get
        their defaults, threads defaults to HYPMIX_THREADS (or 1).
        """

        # pylint: disable=too-many-arguments

        self.family = family if family is not None else FamilySettings()
        self.measure = measure if measure is not None else MeasureSettings()
        self.verify = verify if verify is not None else VerifySettings()
        self.simulate = (
            simulate if simulate is not None else SimulateSettings()
        )
        self.output_dir = Path(output_dir)
        _check_range("seed", seed, 0, 2**64 - 1, closed=True)
        self.seed = int(seed)
        if threads is None:
            threads = threads_from_env()
        _check_range("threads", threads, 1, None, closed=True)
        self.threads = int(threads)

    @property
    def measure_seed(self) -> int:
        """seed of the measure streams (falls back on the run seed)."""

        return self.seed if self.measure.seed is None else self.measure.seed


_SECTION_KEYS: Dict[str, Tuple[str, ...]] = {
    "family": (
        "name",
        "f0_coeffs",
        "rho0",
        "omega1",
        "omega2",
        "ci1",
        "ci2",
        "sigma1",
        "sigma2",
    ),
    "measure": (
        "x_window",
        "y_window",
        "singular_gap",
        "rejection_cap",
        "roof_cap",
        "seed",
    ),
    "verify": VerifySettings.__slots__,
    "simulate": SimulateSettings.__slots__,
    "run": ("output_dir", "seed", "threads"),
}

_INT_KEYS = {
    "rejection_cap",
    "seed",
    "uni_grid",
    "tails_smax",
    "tails_qmax",
    "ordini_samples",
    "distortion_pairs",
    "n_max",
    "truncation_n",
    "cohomology_points",
    "transfer_points",
    "transfer_truncation",
    "invariance_samples",
    "budget",
    "streams",
    "threads",
}
_STR_KEYS = {"name", "mode", "output_dir"}
_PAIR_KEYS = {"x_window", "y_window"}


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    """line numbers of every (section, key) in the text."""

    lines: Dict[Tuple[str, str], int] = {}
    section = ""
    header = re.compile(r"^\s*\[([^\]]+)\]")
    option = re.compile(r"^\s*([^=:\s#;][^=:]*?)\s*[=:]")
    for lineno, line in enumerate(text.splitlines(), start=1):
        match = header.match(line)
        if match:
            section = match.group(1).strip()
            lines[(section, "")] = lineno
            continue
        match = option.match(line)
        if match and not line[:1].isspace():
            lines.setdefault((section, match.group(1).strip()), lineno)
    return lines


def _parse_int(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(raw)
    return int(value)


def _parse_number(raw: str) -> Union[int, Fraction, float]:
    """integers and p/q stay exact, anything else becomes a float."""

    raw = raw.strip()
    if re.fullmatch(r"[+-]?\d+", raw):
        return int(raw)
    if re.fullmatch(r"[+-]?\d+/\d+", raw):
        return Fraction(raw)
    return float(raw)


def _parse_value(key: str, raw: str) -> object:
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    if key == "f0_coeffs":
        return tuple(_parse_number(part) for part in raw.split(","))
    if key in ("omega1", "omega2"):
        if "," in raw:
            return tuple(float(part) for part in raw.split(","))
        return raw
    if key == "uni_n":
        return tuple(_parse_int(part) for part in raw.split(","))
    if key in _PAIR_KEYS:
        parts = [float(part) for part in raw.split(",")]
        if len(parts) != 2:
            raise ValueError(raw)
        return (parts[0], parts[1])
    if key in _INT_KEYS:
        return _parse_int(raw)
    return float(raw)


def read_config_text(text: str, source: str = "<string>") -> RunConfig:
    """parse the text of an INI-style configuration

    every failure is reported as a ConfigError naming the offending key
    and line.

    parameters
    ----------
    text : str
        the configuration text
    source : str
        name of the source used in diagnostics

    returns
    -------
    RunConfig
        the validated configuration

    examples
    --------
    >>> config = read_config_text("[family]\\nname = modular\\n")
    >>> config.family.rho0
    0.5
    """

    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # type: ignore[assignment, method-assign]
    try:
        parser.read_string(text, source)
    except configparser.MissingSectionHeaderError as err:
        raise ConfigError(
            f"Input Error: {source} line {err.lineno}: missing section header."
        ) from err
    except configparser.ParsingError as err:
        lineno = err.errors[0][0] if err.errors else "?"
        raise ConfigError(
            f"Input Error: {source} line {lineno}: cannot parse line."
        ) from err
    except (
        configparser.DuplicateSectionError,
        configparser.DuplicateOptionError,
    ) as err:
        raise ConfigError(
            f"Input Error: {source} line {err.lineno}: {err.message}"
        ) from err
    except configparser.Error as err:
        raise ConfigError(f"Input Error: {source}: {err}") from err

    lines = _key_lines(text)
    values: Dict[str, Dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(
                f"Input Error: {source} line {lines.get((section, ''), '?')}"
                f": unknown section [{section}]."
            )
        values[section] = {}
        for key, raw in parser.items(section):
            lineno = lines.get((section, key), "?")
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(
                    f"Input Error: {source} line {lineno}: unknown key "
                    f"{key} in [{section}]."
                )
            try:
                values[section][key] = _parse_value(key, raw)
            except ValueError as err:
                raise ConfigError(
                    f"Input Error: {source} line {lineno}: cannot read "
                    f"{key} = {raw}."
                ) from err

    def build(section: str, cls):  # type: ignore[no-untyped-def]
        kwargs = values.get(section, {})
        try:
            return cls(**kwargs)
        except ConfigError as err:
            message = str(err)
            for key in kwargs:
                if f"Input Error: {key} " in message:
                    raise ConfigError(
                        f"{message} ({source} line "
                        f"{lines.get((section, key), '?')}, [{section}])"
                    ) from err
            raise

    family = build("family", FamilySettings)
    measure = build("measure", MeasureSettings)
    verify = build("verify", VerifySettings)
    simulate = build("simulate", SimulateSettings)
    run = values.get("run", {})
    try:
        return RunConfig(
            family=family,
            measure=measure,
            verify=verify,
            simulate=simulate,
            **run,  # type: ignore[arg-type]
        )
    except ConfigError as err:
        message = str(err)
        for key in run:
            if f"Input Error: {key} " in message:
                raise ConfigError(
                    f"{message} ({source} line "
                    f"{lines.get(('run', key), '?')}, [run])"
                ) from err
        raise


def read_config(path: Union[str, Path]) -> RunConfig:
    """read and validate a configuration file

    parameters
    ----------
    path : str or Path
        location of the INI-style file

    returns
    -------
    RunConfig
    """

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"Input Error: cannot read {path}: {err}") from err
    return read_config_text(text, str(path))
