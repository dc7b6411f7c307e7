"""Device parameters, unit conventions and the couplings of the linearized model.

Everything in :class:`PhysicalParams` is SI.  :func:`derive_couplings` turns it
into the effective rates used downstream; the dynamics and spectra modules then
work in units of the mechanical frequency (``omega_m == 1``).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from scipy import constants as _const

HBAR = _const.hbar
K_B = _const.k
C_LIGHT = _const.c

# Bose-Einstein exponent above which the occupancy is reported as exactly zero
_MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class PhysicalParams:
    """Raw device and drive parameters (SI units, angular frequencies in rad/s)."""

    omega_m: float
    quality_factor: float
    mass: float
    bath_temperature: float
    omega_w: float
    kappa_w: float
    power_w: float
    drive_omega_w: float
    lambda_c: float
    kappa_c: float
    power_c: float
    cavity_length: float
    gap: float
    mu: float
    delta_c: float
    delta_w: float

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number, got {v!r}")
        positive = ("omega_m", "quality_factor", "mass", "omega_w", "kappa_w",
                    "drive_omega_w", "lambda_c", "kappa_c", "cavity_length", "gap")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("bath_temperature", "power_w", "power_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu!r}")

    @property
    def drive_omega_c(self) -> float:
        """Optical drive frequency 2*pi*c/lambda."""
        return 2.0 * math.pi * C_LIGHT / self.lambda_c

    @property
    def omega_c(self) -> float:
        # cavity resonance; the detuning is negligible against the carrier
        return self.drive_omega_c + self.delta_c

    @property
    def gamma_m(self) -> float:
        return self.omega_m / self.quality_factor

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DerivedParams:
    """Effective couplings, drive amplitudes and occupancies (rates in rad/s)."""

    g0c: float
    g0w: float
    drive_amp_c: float
    drive_amp_w: float
    gc: float
    gw: float
    nbar_m: float
    n_w: float
    n_c: float
    gamma_m: float


def thermal_occupancy(omega: float, T: float) -> float:
    """Bose-Einstein occupancy ``1/(exp(hbar*omega/(k_B*T)) - 1)``.

    Returns exactly 0 at ``T == 0`` and whenever the exponent would underflow
    the result.
    """
    if omega <= 0:
        raise ValueError(f"omega must be > 0, got {omega!r}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T!r}")
    if T == 0:
        return 0.0
    x = HBAR * omega / (K_B * T)
    if x > _MAX_EXPONENT:
        return 0.0
    return 1.0 / math.expm1(x)


def derive_couplings(p: PhysicalParams) -> DerivedParams:
    """Compute single-photon couplings, drive amplitudes and effective couplings.

    ``p.delta_c`` and ``p.delta_w`` are taken as the effective (shifted)
    detunings.  The effective couplings satisfy ``gc = sqrt(2)*g0c*alpha_s`` and
    ``gw = sqrt(2)*g0w*beta_s`` with the stationary amplitudes of
    :func:`eomech.dynamics.fixed_point`.
    """
    zpf = math.sqrt(HBAR / (p.mass * p.omega_m))
    w0c = p.drive_omega_c
    w0w = p.drive_omega_w
    g0c = p.omega_c / p.cavity_length * zpf
    g0w = p.mu * p.omega_w / (2.0 * p.gap) * zpf
    drive_amp_c = math.sqrt(2.0 * p.power_c * p.kappa_c / (HBAR * w0c))
    drive_amp_w = math.sqrt(2.0 * p.power_w * p.kappa_w / (HBAR * w0w))
    gc = (2.0 * p.omega_c / p.cavity_length) * math.sqrt(
        p.power_c * p.kappa_c / (p.mass * p.omega_m * w0c * (p.kappa_c**2 + p.delta_c**2)))
    gw = (p.mu * p.omega_w / p.gap) * math.sqrt(
        p.power_w * p.kappa_w / (p.mass * p.omega_m * w0w * (p.kappa_w**2 + p.delta_w**2)))

    d = DerivedParams(
        g0c=g0c, g0w=g0w, drive_amp_c=drive_amp_c, drive_amp_w=drive_amp_w,
        gc=gc, gw=gw,
        nbar_m=thermal_occupancy(p.omega_m, p.bath_temperature),
        n_w=thermal_occupancy(p.omega_w, p.bath_temperature),
        n_c=thermal_occupancy(p.omega_c, p.bath_temperature),
        gamma_m=p.gamma_m,
    )
    _check_derived(d)
    if p.bath_temperature <= 1.0 and d.n_c >= 1e-30:
        raise ValueError(f"optical thermal occupancy {d.n_c!r} is not negligible")
    return d


_DEPENDS = {
    "g0c": "omega_c, cavity_length, mass, omega_m",
    "g0w": "mu, omega_w, gap, mass, omega_m",
    "drive_amp_c": "power_c, kappa_c, lambda_c",
    "drive_amp_w": "power_w, kappa_w, drive_omega_w",
    "gc": "power_c, kappa_c, delta_c, mass, omega_m, lambda_c, cavity_length",
    "gw": "power_w, kappa_w, delta_w, mass, omega_m, drive_omega_w, mu, gap",
    "nbar_m": "omega_m, bath_temperature",
    "n_w": "omega_w, bath_temperature",
    "n_c": "lambda_c, bath_temperature",
    "gamma_m": "omega_m, quality_factor",
}


def _check_derived(d: DerivedParams) -> None:
    for f in dataclasses.fields(d):
        v = getattr(d, f.name)
        if not math.isfinite(v):
            raise ValueError(
                f"derived quantity {f.name} is not finite ({v!r}); "
                f"check the inputs it depends on: {_DEPENDS[f.name]}")


def default_params() -> PhysicalParams:
    """Default working point for microwave/optical teleportation.

    Optical drive on the blue sideband and microwave drive on the red one
    (``delta_c = -omega_m``, ``delta_w = +omega_m``); the opposite choice has no
    stationary state at these couplings.  The bath temperature defaults to 15 mK.
    """
    omega_m = 2.0 * math.pi * 10e6
    return PhysicalParams(
        omega_m=omega_m,
        quality_factor=1.5e5,
        mass=10e-12,
        bath_temperature=15e-3,
        omega_w=2.0 * math.pi * 10e9,
        kappa_w=0.04 * omega_m,
        power_w=42e-3,
        drive_omega_w=2.0 * math.pi * 10e9,
        lambda_c=810e-9,
        kappa_c=0.04 * omega_m,
        power_c=3.4e-3,
        cavity_length=1e-3,
        gap=100e-9,
        mu=0.013,
        delta_c=-omega_m,
        delta_w=omega_m,
    )


PARAM_KEYS = tuple(f.name for f in dataclasses.fields(PhysicalParams))


class ConfigError(ValueError):
    """Malformed configuration text; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


def parse_config(text: str, base: PhysicalParams | None = None) -> PhysicalParams:
    """Parse flat ``key = value`` text into :class:`PhysicalParams`.

    ``#`` starts a comment.  Keys must be :class:`PhysicalParams` field names;
    missing keys keep their value from ``base`` (the built-in defaults).
    """
    base = base if base is not None else default_params()
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in PARAM_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"value for {key!r} is not a number: {value!r}", lineno) from None
    try:
        return base.replace(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, base: PhysicalParams | None = None) -> PhysicalParams:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def format_config(p: PhysicalParams) -> str:
    """Inverse of :func:`parse_config` (round-trip exact)."""
    return "".join(f"{k} = {v!r}\n" for k, v in p.as_dict().items())
