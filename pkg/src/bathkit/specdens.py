"""Spectral densities J(omega) and the temperature-dressed quantum noise.

Every spectral density is an odd function of frequency.  Oddness is
enforced structurally: a kind only ever defines its magnitude on
omega >= 0 and evaluation returns sign(omega) * magnitude(|omega|), so
J(-omega) + J(omega) is exactly zero in floating point.

The quantum noise combines J with the thermal occupation factor,

    S_beta(omega) = 0.5 * J(omega) * (coth(beta*omega/2) + 1),

evaluated through the cancellation-free identity
coth(x) + 1 = -2/expm1(-2x) and a power series below |beta*omega| = 1e-6,
so values are finite for all real omega and detailed balance
S_beta(-omega) = exp(-beta*omega) * S_beta(omega) holds to machine
precision.  At zero temperature S_beta(omega) = J(omega) for omega > 0 and
exactly 0 for omega <= 0.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .units import beta_from_kelvin

__all__ = [
    "SpectralDensity",
    "Debye",
    "OhmicExp",
    "LorentzianSum",
    "Tabulated",
    "Temperature",
    "NoiseKernel",
    "load_tabulated",
    "sd_from_config",
]

# Below this value of |beta*omega| the thermal factor switches to its
# power series; the linearized coth is then exact to < 1e-12 relative.
SERIES_SWITCHOVER = 1e-6


class SpectralDensity:
    """Base class; subclasses implement the magnitude on omega >= 0."""

    def _magnitude(self, x):
        raise NotImplementedError

    def derivative_at_zero(self) -> float:
        """Slope J'(0), needed for the omega -> 0 limit of the noise."""
        raise NotImplementedError

    def to_config(self) -> dict:
        """JSON-ready description of this spectral density."""
        raise NotImplementedError

    def evaluate(self, omega):
        """J(omega) with exact odd extension; accepts scalars or arrays."""
        w = np.asarray(omega, dtype=float)
        out = np.sign(w) * self._magnitude(np.abs(w))
        return out if w.ndim else float(out)

    __call__ = evaluate


@dataclass(frozen=True, eq=False)
class Debye(SpectralDensity):
    """Overdamped form J(omega) = 2*lam*omega*gamma / (omega^2 + gamma^2).

    ``lam`` is the reorganization energy and ``gamma`` the cutoff, both in
    cm^-1.  The peak value J(gamma) equals lam.
    """

    lam: float
    gamma: float

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValidationError(f"debye: lambda must be positive, got {self.lam}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValidationError(f"debye: gamma must be positive, got {self.gamma}")

    def _magnitude(self, x):
        return 2.0 * self.lam * self.gamma * x / (x * x + self.gamma * self.gamma)

    def derivative_at_zero(self) -> float:
        return 2.0 * self.lam / self.gamma

    def to_config(self) -> dict:
        return {"kind": "debye", "lambda": self.lam, "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class OhmicExp(SpectralDensity):
    """Ohmic J(omega) = (pi/2)*alpha*omega*exp(-|omega|/omega_c).

    The pi/2 prefactor makes ``alpha`` the usual dimensionless coupling of
    the standard spin-boson convention.
    """

    alpha: float
    omega_c: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValidationError(f"ohmic_exp: alpha must be positive, got {self.alpha}")
        if not (self.omega_c > 0 and np.isfinite(self.omega_c)):
            raise ValidationError(
                f"ohmic_exp: omega_c must be positive, got {self.omega_c}"
            )

    def _magnitude(self, x):
        return 0.5 * np.pi * self.alpha * x * np.exp(-x / self.omega_c)

    def derivative_at_zero(self) -> float:
        return 0.5 * np.pi * self.alpha

    def to_config(self) -> dict:
        return {"kind": "ohmic_exp", "alpha": self.alpha, "omega_c": self.omega_c}


@dataclass(frozen=True, eq=False)
class LorentzianSum(SpectralDensity):
    """Sum of antisymmetrized Lorentzian pairs.

    Each term (lam, gamma, omega0) contributes

        lam * gamma^2 * [ ((omega-omega0)^2 + gamma^2)^-1
                          - ((omega+omega0)^2 + gamma^2)^-1 ],

    which is odd by construction; lam is approximately the peak height at
    omega0 when gamma << omega0.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(a), float(b), float(c)) for a, b, c in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValidationError("lorentzian_sum: needs at least one term")
        for i, (lam, gamma, omega0) in enumerate(terms):
            if not (lam > 0 and np.isfinite(lam)):
                raise ValidationError(
                    f"lorentzian_sum: term {i}: lambda must be positive, got {lam}"
                )
            if not (gamma > 0 and np.isfinite(gamma)):
                raise ValidationError(
                    f"lorentzian_sum: term {i}: gamma must be positive, got {gamma}"
                )
            if not (omega0 > 0 and np.isfinite(omega0)):
                raise ValidationError(
                    f"lorentzian_sum: term {i}: omega0 must be positive, got {omega0}"
                )

    def _magnitude(self, x):
        out = np.zeros_like(np.asarray(x, dtype=float))
        for lam, gamma, omega0 in self.terms:
            g2 = gamma * gamma
            out = out + lam * g2 * (
                1.0 / ((x - omega0) ** 2 + g2) - 1.0 / ((x + omega0) ** 2 + g2)
            )
        return out

    def derivative_at_zero(self) -> float:
        total = 0.0
        for lam, gamma, omega0 in self.terms:
            g2 = gamma * gamma
            total += 4.0 * lam * g2 * omega0 / (omega0 * omega0 + g2) ** 2
        return total

    def to_config(self) -> dict:
        return {
            "kind": "lorentzian_sum",
            "terms": [
                {"lambda": lam, "gamma": gamma, "omega0": omega0}
                for lam, gamma, omega0 in self.terms
            ],
        }


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralDensity):
    """Piecewise-linear J from sampled (omega > 0, J) pairs.

    Interpolation is linear between points and between (0, 0) and the
    first point; J is zero beyond the last abscissa.
    """

    omega: np.ndarray
    values: np.ndarray
    # interpolation nodes with the (0, 0) anchor prepended
    _xs: np.ndarray = field(repr=False, default=None)
    _ys: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if omega.ndim != 1 or values.shape != omega.shape:
            raise ValidationError("tabulated: omega and values must be equal-length 1-d arrays")
        if omega.size < 2:
            raise ValidationError(f"tabulated: needs at least 2 points, got {omega.size}")
        if not np.all(np.isfinite(omega)) or not np.all(np.isfinite(values)):
            raise ValidationError("tabulated: non-finite entries")
        if omega[0] <= 0.0:
            raise ValidationError(
                f"tabulated: first abscissa must be positive, got {omega[0]}"
            )
        if not np.all(np.diff(omega) > 0.0):
            bad = int(np.flatnonzero(np.diff(omega) <= 0.0)[0]) + 1
            raise ValidationError(
                f"tabulated: abscissae not strictly increasing at point {bad} "
                f"(omega={omega[bad]})"
            )
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_xs", np.concatenate(([0.0], omega)))
        object.__setattr__(self, "_ys", np.concatenate(([0.0], values)))

    def _magnitude(self, x):
        return np.interp(x, self._xs, self._ys, left=0.0, right=0.0)

    def derivative_at_zero(self) -> float:
        # one-sided difference through the (0, 0) anchor
        return float(self.values[0] / self.omega[0])

    def support_max(self) -> float:
        """Largest frequency with nonzero J (the last abscissa)."""
        return float(self.omega[-1])

    def to_config(self) -> dict:
        return {
            "kind": "tabulated",
            "points": [[float(w), float(j)] for w, j in zip(self.omega, self.values)],
        }


def load_tabulated(source) -> Tabulated:
    """Read a two-column CSV (omega_cm1, J_cm1) into a Tabulated density.

    ``source`` is a path, a text stream, or a CSV string.  A single
    non-numeric header line is allowed.  Errors carry the line number.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if "\n" not in text and "," not in text:
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
    omegas, values = [], []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected 2 columns, got {len(parts)}")
        try:
            w, j = float(parts[0]), float(parts[1])
        except ValueError:
            if lineno == 1 and not omegas:
                continue  # header row
            raise ValidationError(f"line {lineno}: could not parse '{line}'") from None
        omegas.append(w)
        values.append(j)
    if len(omegas) < 2:
        raise ValidationError(f"tabulated: needs at least 2 points, got {len(omegas)}")
    try:
        return Tabulated(np.array(omegas), np.array(values))
    except ValidationError as exc:
        raise ValidationError(f"tabulated CSV: {exc}") from None


_SD_KINDS = {
    "debye": lambda c: Debye(lam=float(c["lambda"]), gamma=float(c["gamma"])),
    "ohmic_exp": lambda c: OhmicExp(
        alpha=float(c["alpha"]), omega_c=float(c["omega_c"])
    ),
    "lorentzian_sum": lambda c: LorentzianSum(
        terms=tuple(
            (float(t["lambda"]), float(t["gamma"]), float(t["omega0"]))
            for t in c["terms"]
        )
    ),
    "tabulated": lambda c: Tabulated(
        omega=np.array([p[0] for p in c["points"]], dtype=float),
        values=np.array([p[1] for p in c["points"]], dtype=float),
    ),
}


def sd_from_config(config: dict) -> SpectralDensity:
    """Build a spectral density from its JSON config object."""
    if not isinstance(config, dict) or "kind" not in config:
        raise ValidationError("spectral density config must be an object with a 'kind'")
    kind = config["kind"]
    if kind not in _SD_KINDS:
        raise ValidationError(
            f"unknown spectral density kind '{kind}' "
            f"(expected one of {sorted(_SD_KINDS)})"
        )
    try:
        return _SD_KINDS[kind](config)
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"bad '{kind}' config: missing/invalid {exc}") from None


@dataclass(frozen=True)
class Temperature:
    """Environment temperature; ``kelvin is None`` means exactly zero.

    Zero temperature is handled symbolically (dedicated code paths), never
    as a floating-point infinity.
    """

    kelvin: float | None

    def __post_init__(self):
        if self.kelvin is not None and not (
            self.kelvin > 0 and np.isfinite(self.kelvin)
        ):
            raise ValidationError(
                f"temperature must be positive or zero-mode, got {self.kelvin} K"
            )

    @classmethod
    def zero(cls) -> "Temperature":
        return cls(kelvin=None)

    @classmethod
    def finite(cls, kelvin: float) -> "Temperature":
        return cls(kelvin=float(kelvin))

    @property
    def is_zero(self) -> bool:
        return self.kelvin is None

    @property
    def beta(self) -> float:
        """1/(kB*T) in (cm^-1)^-1; only defined at finite temperature."""
        if self.kelvin is None:
            raise ValidationError("beta is not a finite number at zero temperature")
        return beta_from_kelvin(self.kelvin)

    def to_json(self):
        return "zero" if self.kelvin is None else self.kelvin

    @classmethod
    def from_json(cls, value) -> "Temperature":
        if value == "zero":
            return cls.zero()
        if isinstance(value, (int, float)):
            return cls.finite(float(value))
        raise ValidationError(f"temperature must be a number or 'zero', got {value!r}")


@dataclass(frozen=True, eq=False)
class NoiseKernel:
    """Quantum noise S_beta(omega) for one spectral density and temperature."""

    sd: SpectralDensity
    temperature: Temperature

    def evaluate(self, omega):
        """S_beta(omega); finite for every real omega, scalars or arrays."""
        w = np.asarray(omega, dtype=float)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        j = self.sd.evaluate(w)
        if self.temperature.is_zero:
            out = np.where(w > 0.0, j, 0.0)
            return float(out[0]) if scalar else out

        beta = self.temperature.beta
        y = beta * w
        out = np.empty_like(w)
        small = np.abs(y) < SERIES_SWITCHOVER
        big = ~small
        # coth(y/2) + 1 == -2/expm1(-y), exact to machine precision for all y != 0
        with np.errstate(over="ignore"):  # e^{|y|} -> inf gives a clean S -> 0
            out[big] = -j[big] / np.expm1(-y[big])
        if np.any(small):
            ws, ys, js = w[small], y[small], j[small]
            slope = np.where(
                ws == 0.0,
                self.sd.derivative_at_zero(),
                np.divide(js, ws, out=np.zeros_like(js), where=ws != 0.0),
            )
            out[small] = slope / beta + js * (0.5 + ys / 12.0)
        return float(out[0]) if scalar else out

    __call__ = evaluate
