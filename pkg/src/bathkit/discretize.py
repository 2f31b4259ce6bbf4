"""Compression of a noise kernel into a finite set of harmonic modes.

The pipeline samples the kernel's time-frequency fingerprint

    f(t, omega) = S_beta(omega) * exp(-i * omega_rad * t)

on a dense rectangular grid, stacks real and imaginary parts into a tall
real matrix, selects a small set of physically meaningful frequency
columns with a column interpolative decomposition, and fits nonnegative
weights z_k against a refined quadrature of the correlation function

    C(t) = integral_{-W}^{W} S_beta(omega) exp(-i*omega_rad*t) domega.

The surviving modes (omega_k, z_k) with couplings
g_k = sqrt(z_k * S_beta(omega_k)) reproduce C(t) on the fitted window as
C(t) ~ sum_k g_k^2 exp(-i*omega_k_rad*t).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from functools import cached_property

import numpy as np

from ._schema import require, require_list, require_number
from .errors import ConvergenceError, ResourceLimitError, SchemaError, ValidationError
from .lowrank import column_id, nnls
from .quadrature import fourier_midpoint_sum, midpoint_frequencies
from .specdens import NoiseKernel, SpectralDensity, Temperature, sd_from_config
from .units import RAD_PER_FS_PER_CM1

__all__ = [
    "FdrGrid",
    "FdrMatrix",
    "BathDiagnostics",
    "BathModel",
    "BcfErrorStats",
    "reference_bcf",
    "assemble_fdr",
    "discretize_bath",
    "reconstruct_bcf",
    "bcf_error_stats",
    "error_report",
    "bath_model_to_dict",
    "bath_model_from_dict",
    "save_bath_model",
    "load_bath_model",
]

DEFAULT_MEMORY_CAP_BYTES = 4 << 30
DEFAULT_QUAD_POINTS = 16384
MAX_QUAD_POINTS = 1 << 20
QUAD_REL_TOL = 1e-6


@dataclass(frozen=True)
class FdrGrid:
    """Uniform sampling rectangle [0, t_max] x [-omega_max, omega_max].

    Frequencies are midpoint-offset so omega = 0 is never sampled
    (``n_freq`` must be even); times include both endpoints.
    """

    t_max_fs: float
    omega_max_cm1: float
    n_time: int = 1000
    n_freq: int = 10000

    def __post_init__(self):
        if not np.isfinite(self.t_max_fs) or self.t_max_fs < 0:
            raise ValidationError(f"t_max_fs must be >= 0, got {self.t_max_fs}")
        if self.n_time < 1:
            raise ValidationError(f"n_time must be >= 1, got {self.n_time}")
        if self.n_time == 1 and self.t_max_fs != 0.0:
            raise ValidationError("n_time=1 requires t_max_fs=0")
        if self.n_time > 1 and self.t_max_fs == 0.0:
            raise ValidationError("t_max_fs must be positive for n_time > 1")
        if not (self.omega_max_cm1 > 0 and np.isfinite(self.omega_max_cm1)):
            raise ValidationError(f"omega_max_cm1 must be positive, got {self.omega_max_cm1}")
        if self.n_freq < 2 or self.n_freq % 2 != 0:
            raise ValidationError(f"n_freq must be even and >= 2, got {self.n_freq}")

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max_fs, self.n_time)

    @cached_property
    def freqs(self) -> np.ndarray:
        return midpoint_frequencies(self.omega_max_cm1, self.n_freq)


@dataclass(frozen=True)
class FdrMatrix:
    """Realified kernel samples: rows [0, m) hold Re f, rows [m, 2m) Im f."""

    grid: FdrGrid
    realified: np.ndarray


@dataclass(frozen=True)
class BcfErrorStats:
    """Pointwise error summary of a model correlation series vs a reference."""

    max_abs_error: float
    mean_abs_error: float
    rel_error: float  # max abs error / peak |reference|


@dataclass(frozen=True)
class BathDiagnostics:
    id_rank: int
    mode_count: int
    max_abs_error: float
    mean_abs_error: float
    rel_error: float
    nnls_iterations: int
    nnls_residual_norm: float
    nnls_converged: bool
    nnls_dual_tolerance: float
    nnls_max_dual_inactive: float
    nnls_max_abs_dual_active: float


@dataclass(frozen=True, eq=False)
class BathModel:
    """A compressed harmonic environment: modes, weights and couplings.

    ``omegas`` are grid frequencies (cm^-1, may be negative), ``z`` the
    strictly positive fitted weights and ``g`` the couplings
    sqrt(z * S_beta(omega)).  The spectral density and frequency window are
    kept so the reference correlation function can be recomputed from the
    serialized model alone.
    """

    omegas: np.ndarray
    z: np.ndarray
    g: np.ndarray
    temperature: Temperature
    sd: SpectralDensity
    t_max_fs: float
    omega_max_cm1: float
    tol: float
    diagnostics: BathDiagnostics

    def __post_init__(self):
        if not (len(self.omegas) == len(self.z) == len(self.g)):
            raise ValidationError("bath model arrays must have equal length")
        if np.any(self.z <= 0.0):
            raise ValidationError("bath model weights must be strictly positive")
        if np.any(self.g < 0.0):
            raise ValidationError("bath model couplings must be nonnegative")

    @property
    def mode_count(self) -> int:
        return len(self.omegas)

    @property
    def kernel(self) -> NoiseKernel:
        return NoiseKernel(self.sd, self.temperature)


def reference_bcf(
    kernel: NoiseKernel,
    times_fs,
    omega_max_cm1: float,
    quad_n: int = DEFAULT_QUAD_POINTS,
    rel_tol: float = QUAD_REL_TOL,
    max_points: int = MAX_QUAD_POINTS,
) -> np.ndarray:
    """Band-limited correlation function by refined midpoint quadrature.

    Integrates S_beta(omega)*exp(-i*omega_rad*t) over [-omega_max,
    omega_max] on midpoint-offset points, doubling the count until one
    doubling changes the values by less than ``rel_tol`` of the peak.
    Negative times are filled in through C(-t) = conj(C(t)).
    """
    if quad_n < 10_000:
        raise ValidationError(f"quad_n must be >= 10^4, got {quad_n}")
    if quad_n % 2 != 0:
        raise ValidationError(f"quad_n must be even, got {quad_n}")
    times = np.atleast_1d(np.asarray(times_fs, dtype=float))
    tabs = np.abs(times)

    def level(n_points: int) -> np.ndarray:
        weights = kernel.evaluate(midpoint_frequencies(omega_max_cm1, n_points))
        return fourier_midpoint_sum(weights, omega_max_cm1, tabs)

    n = quad_n
    current = level(n)
    achieved = np.inf
    while 2 * n <= max_points:
        finer = level(2 * n)
        scale = float(np.max(np.abs(finer)))
        achieved = float(np.max(np.abs(finer - current))) / max(scale, 1e-300)
        current = finer
        n *= 2
        if achieved < rel_tol:
            return np.where(times < 0.0, np.conj(current), current)
    raise ConvergenceError(
        f"correlation quadrature did not reach {rel_tol:.1e} within "
        f"{max_points} points (best relative change {achieved:.3e})"
    )


def assemble_fdr(
    kernel: NoiseKernel,
    grid: FdrGrid,
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES,
) -> FdrMatrix:
    """Sample the kernel on the grid and stack Re/Im into a 2m x n matrix."""
    m, n = grid.n_time, grid.n_freq
    estimate = 2 * m * n * 8
    if estimate > memory_cap_bytes:
        raise ResourceLimitError(
            f"grid {m} x {n} needs {estimate / 2**30:.1f} GiB for the sample "
            f"matrix, above the {memory_cap_bytes / 2**30:.1f} GiB cap; "
            "use a coarser grid or raise the cap"
        )
    s_vals = kernel.evaluate(grid.freqs)
    arg = np.outer(grid.times, grid.freqs * RAD_PER_FS_PER_CM1)
    realified = np.empty((2 * m, n))
    realified[:m] = s_vals * np.cos(arg)
    realified[m:] = -(s_vals * np.sin(arg))
    return FdrMatrix(grid=grid, realified=realified)


def discretize_bath(
    kernel: NoiseKernel,
    grid: FdrGrid,
    tol: float,
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES,
    quad_n: int = DEFAULT_QUAD_POINTS,
) -> BathModel:
    """Run the full compression pipeline and return the mode set.

    Steps: sample the kernel, select frequency columns by interpolative
    decomposition at ``tol``, fit nonnegative weights against the refined
    quadrature reference on the grid times, prune zero weights, build
    couplings, and attach reconstruction diagnostics.  Deterministic for
    fixed inputs; modes come out sorted by ascending frequency.
    """
    if not (0.0 < tol < 1.0):
        raise ValidationError(f"tol must be in (0, 1), got {tol}")
    fdr = assemble_fdr(kernel, grid, memory_cap_bytes=memory_cap_bytes)
    id_res = column_id(fdr.realified, tol=tol)

    c_ref = reference_bcf(kernel, grid.times, grid.omega_max_cm1, quad_n=quad_n)
    target = np.concatenate((c_ref.real, c_ref.imag))

    basis = fdr.realified[:, id_res.selected]
    if id_res.rank == 0:
        raise ValidationError(
            "interpolative decomposition selected no columns; "
            "the kernel is identically zero on the grid or tol is too large"
        )
    fit = nnls(basis, target)
    duals = basis.T @ (target - basis @ fit.z)
    active = fit.z > 0.0
    # 0.0 when the inactive set is empty (keeps the JSON strict)
    max_dual_inactive = float(np.max(duals[~active])) if (~active).any() else 0.0
    max_abs_dual_active = float(np.max(np.abs(duals[active]), initial=0.0))

    if not fit.converged:
        partial = {
            "id_rank": id_res.rank,
            "nnls_iterations": fit.iterations,
            "nnls_residual_norm": fit.residual_norm,
            "nnls_dual_tolerance": fit.dual_tolerance,
            "nnls_max_dual_inactive": max_dual_inactive,
        }
        raise ConvergenceError(
            f"nonnegative fit did not converge in {fit.iterations} iterations",
            diagnostics=partial,
        )

    omegas = grid.freqs[id_res.selected][active]
    z = fit.z[active]
    s_at_modes = kernel.evaluate(omegas)
    if np.any(s_at_modes < 0.0):
        bad = omegas[s_at_modes < 0.0]
        raise ValidationError(
            f"quantum noise is negative at selected frequencies {bad}; "
            "the input spectral density is unphysical"
        )
    g = np.sqrt(z * s_at_modes)

    order = np.argsort(omegas)
    omegas, z, g = omegas[order], z[order], g[order]

    c_model = _mode_sum(g * g, omegas, grid.times)
    stats = bcf_error_stats(c_model, c_ref)
    diagnostics = BathDiagnostics(
        id_rank=id_res.rank,
        mode_count=int(np.count_nonzero(active)),
        max_abs_error=stats.max_abs_error,
        mean_abs_error=stats.mean_abs_error,
        rel_error=stats.rel_error,
        nnls_iterations=fit.iterations,
        nnls_residual_norm=fit.residual_norm,
        nnls_converged=fit.converged,
        nnls_dual_tolerance=fit.dual_tolerance,
        nnls_max_dual_inactive=max_dual_inactive,
        nnls_max_abs_dual_active=max_abs_dual_active,
    )
    return BathModel(
        omegas=omegas,
        z=z,
        g=g,
        temperature=kernel.temperature,
        sd=kernel.sd,
        t_max_fs=grid.t_max_fs,
        omega_max_cm1=grid.omega_max_cm1,
        tol=tol,
        diagnostics=diagnostics,
    )


def _mode_sum(weights, omegas, times_fs) -> np.ndarray:
    """sum_k weights_k * exp(-i*omega_k_rad*t), Hermitian in t."""
    times = np.atleast_1d(np.asarray(times_fs, dtype=float))
    tabs = np.abs(times)
    phases = np.exp(-1j * np.outer(tabs, omegas * RAD_PER_FS_PER_CM1))
    out = phases @ np.asarray(weights, dtype=float)
    return np.where(times < 0.0, np.conj(out), out)


def reconstruct_bcf(model: BathModel, times_fs) -> np.ndarray:
    """Correlation function of the discrete modes, C(t) = sum g_k^2 e^{-i w_k t}."""
    return _mode_sum(model.g * model.g, model.omegas, times_fs)


def bcf_error_stats(c_model, c_reference) -> BcfErrorStats:
    """Max-abs, mean-abs and relative-to-peak distances of two series."""
    diff = np.abs(np.asarray(c_model) - np.asarray(c_reference))
    peak = float(np.max(np.abs(c_reference), initial=0.0))
    max_abs = float(np.max(diff, initial=0.0))
    return BcfErrorStats(
        max_abs_error=max_abs,
        mean_abs_error=float(np.mean(diff)) if diff.size else 0.0,
        rel_error=max_abs / max(peak, 1e-300),
    )


def error_report(model: BathModel, kernel: NoiseKernel, times_fs, quad_n: int = DEFAULT_QUAD_POINTS) -> BcfErrorStats:
    """Recompute reconstruction-vs-reference errors on the supplied times."""
    c_model = reconstruct_bcf(model, times_fs)
    c_ref = reference_bcf(kernel, times_fs, model.omega_max_cm1, quad_n=quad_n)
    return bcf_error_stats(c_model, c_ref)


# --- serialization (schema "bathkit-bath/1") ------------------------------

BATH_SCHEMA = "bathkit-bath/1"


def bath_model_to_dict(model: BathModel) -> dict:
    return {
        "schema": BATH_SCHEMA,
        "temperature_K": model.temperature.to_json(),
        "t_max_fs": model.t_max_fs,
        "omega_max_cm1": model.omega_max_cm1,
        "tol": model.tol,
        "spectral_density": model.sd.to_config(),
        "modes": [
            {"omega_cm1": float(w), "z": float(z), "g_cm1": float(g)}
            for w, z, g in zip(model.omegas, model.z, model.g)
        ],
        "diagnostics": asdict(model.diagnostics),
    }


def bath_model_from_dict(doc: dict, pointer: str = "") -> BathModel:
    schema = doc.get("schema", BATH_SCHEMA)
    if schema != BATH_SCHEMA:
        raise SchemaError(f"{pointer}/schema", f"expected '{BATH_SCHEMA}', got {schema!r}")
    temperature = Temperature.from_json(require(doc, "temperature_K", pointer))
    t_max = require_number(doc, "t_max_fs", pointer)
    omega_max = require_number(doc, "omega_max_cm1", pointer)
    tol = require_number(doc, "tol", pointer)
    try:
        sd = sd_from_config(require(doc, "spectral_density", pointer))
    except ValidationError as exc:
        raise SchemaError(f"{pointer}/spectral_density", str(exc)) from None
    modes = require_list(doc, "modes", pointer)
    omegas, z, g = [], [], []
    for i, mode in enumerate(modes):
        mp = f"{pointer}/modes/{i}"
        omegas.append(require_number(mode, "omega_cm1", mp))
        z.append(require_number(mode, "z", mp))
        g.append(require_number(mode, "g_cm1", mp))
    diag_doc = require(doc, "diagnostics", pointer)
    dp = f"{pointer}/diagnostics"
    diagnostics = BathDiagnostics(
        id_rank=int(require_number(diag_doc, "id_rank", dp)),
        mode_count=int(require_number(diag_doc, "mode_count", dp)),
        max_abs_error=require_number(diag_doc, "max_abs_error", dp),
        mean_abs_error=require_number(diag_doc, "mean_abs_error", dp),
        rel_error=require_number(diag_doc, "rel_error", dp),
        nnls_iterations=int(require_number(diag_doc, "nnls_iterations", dp)),
        nnls_residual_norm=require_number(diag_doc, "nnls_residual_norm", dp),
        nnls_converged=bool(require(diag_doc, "nnls_converged", dp)),
        nnls_dual_tolerance=require_number(diag_doc, "nnls_dual_tolerance", dp),
        nnls_max_dual_inactive=require_number(diag_doc, "nnls_max_dual_inactive", dp),
        nnls_max_abs_dual_active=require_number(diag_doc, "nnls_max_abs_dual_active", dp),
    )
    return BathModel(
        omegas=np.array(omegas, dtype=float),
        z=np.array(z, dtype=float),
        g=np.array(g, dtype=float),
        temperature=temperature,
        sd=sd,
        t_max_fs=t_max,
        omega_max_cm1=omega_max,
        tol=tol,
        diagnostics=diagnostics,
    )


def save_bath_model(model: BathModel, sink, metadata: dict | None = None):
    """Write the model as JSON to a path or file object."""
    doc = bath_model_to_dict(model)
    if metadata is not None:
        doc["metadata"] = metadata
    text = json.dumps(doc, indent=2, sort_keys=False)
    if hasattr(sink, "write"):
        sink.write(text + "\n")
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def load_bath_model(source) -> BathModel:
    """Read a model from a path, file object, or JSON string."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    return bath_model_from_dict(doc)
