"""Desk-scale exact dynamics for validating discretized environments.

``propagate`` integrates the Schroedinger equation for a DiscreteModel in
a truncated number-state space with fixed-step Lanczos exponentials, never
materializing the Hamiltonian: the action of each mode's ladder operators
is applied axis by axis on the state tensor.  The bath always starts in
its vacuum; at finite temperature the thermal occupation is already baked
into the couplings and signed frequencies of the bath model.

``dephasing_gamma`` is the closed-form decoherence exponent of a qubit
with diagonal (sigma_z) coupling and vacuum bath,

    Gamma(t) = sum_k 4 g_k^2 (1 - cos(omega_k_rad t)) / omega_k^2,

with |rho01(t)/rho01(0)| = exp(-Gamma(t)).  It scales to any number of
modes and acts as the oracle for the exact propagator and for the full
discretization pipeline; its continuum counterpart
``dephasing_gamma_continuum`` integrates 4 S(omega)(1-cos omega t)/omega^2
over the model band by refined midpoint quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .discretize import FdrGrid, discretize_bath
from .errors import ConvergenceError, ResourceLimitError, ValidationError
from .hamiltonian import DiscreteModel, SystemSpec, build_model
from .quadrature import fourier_midpoint_sum, midpoint_frequencies
from .specdens import NoiseKernel
from .units import RAD_PER_FS_PER_CM1

__all__ = [
    "FockTruncation",
    "PropagationResult",
    "ConvergenceReport",
    "propagate",
    "dephasing_gamma",
    "dephasing_gamma_continuum",
    "convergence_study",
]

DEFAULT_DIMENSION_CAP = 1 << 22


def _model_modes(model: DiscreteModel):
    """Flatten the per-coupling bath copies into (omega, g, coupling_idx)."""
    modes = []
    for ci, (label, _) in enumerate(model.system.couplings):
        bath = model.bath_for(label)
        for w, g in zip(bath.omegas, bath.g):
            modes.append((float(w), float(g), ci))
    return modes


@dataclass(frozen=True)
class FockTruncation:
    """Per-mode occupation caps; mode k keeps levels 0..caps[k]."""

    caps: tuple

    def __post_init__(self):
        caps = tuple(int(c) for c in self.caps)
        if any(c < 1 for c in caps):
            raise ValidationError(f"all occupation caps must be >= 1, got {caps}")
        object.__setattr__(self, "caps", caps)

    @classmethod
    def for_model(cls, model: DiscreteModel, max_cap: int = 10) -> "FockTruncation":
        """Displaced-oscillator heuristic: cap ~ 8 (g/omega)^2 + 3, at most max_cap."""
        caps = []
        for omega, g, _ in _model_modes(model):
            ratio2 = (g / omega) ** 2 if omega != 0.0 else 0.0
            caps.append(min(max_cap, int(math.ceil(8.0 * ratio2)) + 3))
        return cls(caps=tuple(caps))

    def dimension(self, system_dim: int) -> int:
        d = system_dim
        for c in self.caps:
            d *= c + 1
        return d


@dataclass(frozen=True)
class PropagationResult:
    """Observable time series from one propagation run."""

    times: np.ndarray
    populations: np.ndarray  # (n_steps+1, d_s)
    coherences: dict  # (i, j) -> complex series
    norm: np.ndarray
    energy: np.ndarray  # <H> in cm^-1

    def to_csv(self, sink, coherence_pair=None):
        """Columns t_fs, pop_1..pop_d, re_coh, im_coh, norm, energy_cm1."""
        if coherence_pair is None:
            coherence_pair = next(iter(self.coherences), None)
        coh = (
            self.coherences[coherence_pair]
            if coherence_pair is not None
            else np.zeros_like(self.times, dtype=complex)
        )
        d = self.populations.shape[1]
        header = (
            "t_fs,"
            + ",".join(f"pop_{i + 1}" for i in range(d))
            + ",re_coh,im_coh,norm,energy_cm1"
        )
        lines = [header]
        for i, t in enumerate(self.times):
            pops = ",".join(repr(float(p)) for p in self.populations[i])
            lines.append(
                f"{float(t)!r},{pops},{float(coh[i].real)!r},{float(coh[i].imag)!r},"
                f"{float(self.norm[i])!r},{float(self.energy[i])!r}"
            )
        text = "\n".join(lines) + "\n"
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


class _HamiltonianAction:
    """Matrix-free application of the assembled Hamiltonian on a state tensor."""

    def __init__(self, model: DiscreteModel, trunc: FockTruncation):
        modes = _model_modes(model)
        if len(trunc.caps) != len(modes):
            raise ValidationError(
                f"truncation has {len(trunc.caps)} caps but the model has "
                f"{len(modes)} modes"
            )
        self.h_s = model.system.h_s
        self.v_ops = [v for _, v in model.system.couplings]
        self.modes = modes
        self.caps = trunc.caps
        self.shape = (model.system.dim,) + tuple(c + 1 for c in self.caps)
        # total oscillator-energy diagonal, broadcast over the full tensor
        diag = np.zeros(self.shape[1:])
        for k, (omega, _, _) in enumerate(modes):
            occ = np.arange(self.caps[k] + 1, dtype=float)
            diag = diag + omega * occ.reshape(
                (1,) * k + (-1,) + (1,) * (len(modes) - k - 1)
            )
        self.bath_diag = diag[np.newaxis, ...]
        self.sqrt_n = [np.sqrt(np.arange(1.0, c + 1.0)) for c in self.caps]

    def _ladder_sum(self, psi, k):
        """(a + a^dag) psi along mode axis k."""
        ax = 1 + k
        out = np.zeros_like(psi)
        src = np.moveaxis(psi, ax, 0)
        dst = np.moveaxis(out, ax, 0)
        s = self.sqrt_n[k].reshape((-1,) + (1,) * (psi.ndim - 1))
        dst[:-1] += s * src[1:]  # annihilation: sqrt(n+1) from level n+1
        dst[1:] += s * src[:-1]  # creation: sqrt(n) from level n-1
        return out

    def __call__(self, psi):
        out = np.tensordot(self.h_s, psi, axes=(1, 0))
        out += self.bath_diag * psi
        for k, (_, g, ci) in enumerate(self.modes):
            if g == 0.0:
                continue
            phi = self._ladder_sum(psi, k)
            out += g * np.tensordot(self.v_ops[ci], phi, axes=(1, 0))
        return out


def _lanczos_expm_apply(apply_h, psi, dt_rad, krylov_dim, tol, halvings=3):
    """exp(-i*dt_rad*H) psi by a Lanczos projection; halves dt on demand."""
    flat = psi.reshape(-1)
    nrm = np.linalg.norm(flat)
    basis = np.empty((krylov_dim, flat.size), dtype=complex)
    basis[0] = flat / nrm
    alphas, betas = [], []
    k_used = krylov_dim
    breakdown = False
    for j in range(krylov_dim):
        w = apply_h(basis[j].reshape(psi.shape)).reshape(-1)
        alpha = float(np.real(np.vdot(basis[j], w)))
        alphas.append(alpha)
        w = w - alpha * basis[j]
        if j > 0:
            w = w - betas[j - 1] * basis[j - 1]
        # full re-orthogonalization keeps the small projection accurate
        coeffs = basis[: j + 1].conj() @ w
        w = w - coeffs @ basis[: j + 1]
        beta = float(np.linalg.norm(w))
        if j + 1 == krylov_dim:
            betas.append(beta)
            break
        if beta < 1e-14 * nrm:
            k_used = j + 1
            breakdown = True
            break
        betas.append(beta)
        basis[j + 1] = w / beta

    k = k_used if breakdown else krylov_dim
    a = np.array(alphas[:k])
    b = np.array(betas[: k - 1]) if k > 1 else np.zeros(0)
    evals, evecs = scipy.linalg.eigh_tridiagonal(a, b)
    y = evecs @ (np.exp(-1j * dt_rad * evals) * evecs[0, :].conj())
    if breakdown:
        err = 0.0
    else:
        err = abs(betas[-1]) * abs(y[-1]) if k == krylov_dim else 0.0
    if err > tol:
        if halvings <= 0:
            raise ConvergenceError(
                f"Lanczos step error {err:.3e} above tolerance {tol:.1e} "
                "after 3 step halvings; reduce dt or raise krylov_dim"
            )
        half = _lanczos_expm_apply(apply_h, psi, dt_rad / 2, krylov_dim, tol, halvings - 1)
        return _lanczos_expm_apply(apply_h, half, dt_rad / 2, krylov_dim, tol, halvings - 1)
    out = (nrm * y) @ basis[:k]
    return out.reshape(psi.shape)


def propagate(
    model: DiscreteModel,
    trunc: FockTruncation,
    psi0_system,
    t_max_fs: float,
    dt_fs: float,
    krylov_dim: int = 16,
    tol: float = 1e-10,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    coherence_pairs=None,
) -> PropagationResult:
    """Fixed-step Lanczos propagation from (system state) x (bath vacuum).

    ``psi0_system`` is the normalized system amplitude vector; the full
    initial state is its product with every mode's ground state.  Steps
    are uniform with the end point hit exactly; per-step local error is
    kept at or below ``tol`` by up to three step halvings.
    """
    d_s = model.system.dim
    dim = trunc.dimension(d_s)
    if dim > dimension_cap:
        raise ResourceLimitError(
            f"truncated space has dimension {dim}, above the cap {dimension_cap}"
        )
    psi0_system = np.asarray(psi0_system, dtype=complex)
    if psi0_system.shape != (d_s,):
        raise ValidationError(f"psi0 must have shape ({d_s},), got {psi0_system.shape}")
    if abs(np.linalg.norm(psi0_system) - 1.0) > 1e-8:
        raise ValidationError("psi0 must be normalized")
    if not (t_max_fs > 0 and dt_fs > 0):
        raise ValidationError("t_max_fs and dt_fs must be positive")
    if krylov_dim < 2:
        raise ValidationError(f"krylov_dim must be >= 2, got {krylov_dim}")

    action = _HamiltonianAction(model, trunc)
    psi = np.zeros(action.shape, dtype=complex)
    psi[(slice(None),) + (0,) * len(action.caps)] = psi0_system

    n_steps = max(1, int(math.ceil(t_max_fs / dt_fs - 1e-9)))
    dt = t_max_fs / n_steps
    dt_rad = dt * RAD_PER_FS_PER_CM1
    times = np.arange(n_steps + 1) * dt

    if coherence_pairs is None:
        coherence_pairs = (((0, 1),) if d_s >= 2 else ())

    pops = np.empty((n_steps + 1, d_s))
    coh = {pair: np.empty(n_steps + 1, dtype=complex) for pair in coherence_pairs}
    norm = np.empty(n_steps + 1)
    energy = np.empty(n_steps + 1)

    def record(i, state):
        mat = state.reshape(d_s, -1)
        rho_diag = np.einsum("ib,ib->i", mat, mat.conj()).real
        pops[i] = rho_diag
        for (r, c) in coherence_pairs:
            coh[(r, c)][i] = mat[r] @ mat[c].conj()
        norm[i] = np.linalg.norm(mat)
        energy[i] = float(np.real(np.vdot(state, action(state))))

    record(0, psi)
    for i in range(1, n_steps + 1):
        psi = _lanczos_expm_apply(action, psi, dt_rad, krylov_dim, tol)
        record(i, psi)

    return PropagationResult(
        times=times, populations=pops, coherences=coh, norm=norm, energy=energy
    )


_SIGMA_Z = np.diag([1.0, -1.0])


def _require_pure_dephasing(model: DiscreteModel):
    sys = model.system
    if sys.dim != 2:
        raise ValidationError("pure-dephasing form requires a two-level system")
    if len(sys.couplings) != 1:
        raise ValidationError("pure-dephasing form requires exactly one coupling")
    _, v = sys.couplings[0]
    if np.max(np.abs(v - _SIGMA_Z)) > 1e-10:
        raise ValidationError("pure-dephasing form requires v_sb = diag(1, -1)")
    off = np.abs(sys.h_s[0, 1])
    scale = max(1.0, float(np.max(np.abs(sys.h_s))))
    if off > 1e-10 * scale:
        raise ValidationError("pure-dephasing form requires a diagonal h_s")


def dephasing_gamma(model: DiscreteModel, times_fs) -> np.ndarray:
    """Decoherence exponent of the qubit pure-dephasing model, any mode count."""
    _require_pure_dephasing(model)
    modes = _model_modes(model)
    if any(w == 0.0 for w, _, _ in modes):
        raise ValidationError("dephasing exponent undefined for a zero-frequency mode")
    times = np.atleast_1d(np.asarray(times_fs, dtype=float))
    omegas = np.array([w for w, _, _ in modes])
    g2 = np.array([g * g for _, g, _ in modes])
    phases = np.outer(times, omegas * RAD_PER_FS_PER_CM1)
    return (4.0 * g2 / (omegas * omegas)) @ (1.0 - np.cos(phases)).T


def dephasing_gamma_continuum(
    kernel: NoiseKernel,
    times_fs,
    omega_max_cm1: float,
    quad_n: int = 16384,
    rel_tol: float = 1e-6,
    max_points: int = 1 << 20,
) -> np.ndarray:
    """Band-limited continuum dephasing exponent by refined quadrature.

    Gamma(t) = integral over [-omega_max, omega_max] of
    4 S(omega) (1 - cos(omega_rad t)) / omega^2, evaluated on the same
    midpoint grids as the correlation quadrature and refined by doubling.
    """
    times = np.atleast_1d(np.asarray(times_fs, dtype=float))

    def level(n_points):
        freqs = midpoint_frequencies(omega_max_cm1, n_points)
        weights = 4.0 * kernel.evaluate(freqs) / (freqs * freqs)
        transform = fourier_midpoint_sum(weights, omega_max_cm1, times)
        total = 2.0 * omega_max_cm1 / n_points * float(np.sum(weights))
        return total - transform.real

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
            return current
    raise ConvergenceError(
        f"dephasing quadrature did not reach {rel_tol:.1e} within "
        f"{max_points} points (best relative change {achieved:.3e})"
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Observable distances across a tolerance sweep, loosest tol first."""

    tols: tuple
    mode_counts: tuple
    observable: str  # "dephasing_coherence" or "populations"
    times: np.ndarray
    series: tuple  # one observable array per tol
    distances: tuple  # sup-norm distance between successive series
    slack: float
    monotone_within_slack: bool


def _is_pure_dephasing(system: SystemSpec) -> bool:
    if system.dim != 2 or len(system.couplings) != 1:
        return False
    _, v = system.couplings[0]
    if np.max(np.abs(v - _SIGMA_Z)) > 1e-10:
        return False
    scale = max(1.0, float(np.max(np.abs(system.h_s))))
    return abs(system.h_s[0, 1]) <= 1e-10 * scale


def convergence_study(
    kernel: NoiseKernel,
    system: SystemSpec,
    tol_sweep,
    grid: FdrGrid,
    slack: float = 0.2,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    krylov_dim: int = 16,
    propagation_tol: float = 1e-10,
    memory_cap_bytes=None,
) -> ConvergenceReport:
    """Discretize at each tolerance and compare the resulting observables.

    Tolerances are processed loosest to tightest; successive observable
    distances must not grow by more than ``slack`` (fractional) for the
    report to pass.  Qubit models with a single diagonal coupling use the
    closed-form dephasing coherence (any mode count); anything else is
    propagated exactly and compared on site populations.
    """
    tols = tuple(sorted({float(t) for t in tol_sweep}, reverse=True))
    if not tols:
        raise ValidationError("tolerance sweep must not be empty")
    kwargs = {}
    if memory_cap_bytes is not None:
        kwargs["memory_cap_bytes"] = memory_cap_bytes

    labels = sorted({label for label, _ in system.couplings})
    dephasing = _is_pure_dephasing(system)
    series, mode_counts = [], []
    for tol in tols:
        bath = discretize_bath(kernel, grid, tol, **kwargs)
        model = build_model(system, [(label, bath) for label in labels])
        if dephasing:
            obs = np.exp(-dephasing_gamma(model, grid.times))
        else:
            trunc = FockTruncation.for_model(model)
            dt = grid.t_max_fs / max(grid.n_time - 1, 1)
            result = propagate(
                model,
                trunc,
                _ground_state(system.dim),
                grid.t_max_fs,
                dt,
                krylov_dim=krylov_dim,
                tol=propagation_tol,
                dimension_cap=dimension_cap,
            )
            obs = result.populations.reshape(result.populations.shape[0], -1)
        series.append(np.asarray(obs))
        mode_counts.append(model.total_mode_count)

    distances = tuple(
        float(np.max(np.abs(series[i + 1] - series[i]))) for i in range(len(series) - 1)
    )
    monotone = all(
        distances[i + 1] <= (1.0 + slack) * distances[i] + 1e-12
        for i in range(len(distances) - 1)
    )
    return ConvergenceReport(
        tols=tols,
        mode_counts=tuple(mode_counts),
        observable="dephasing_coherence" if dephasing else "populations",
        times=grid.times,
        series=tuple(series),
        distances=distances,
        slack=slack,
        monotone_within_slack=monotone,
    )


def _ground_state(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi
