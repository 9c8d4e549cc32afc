"""Linearized steady-state model of a waveguide-coupled ring resonator
containing a helicity-sensitive three-level emitter.

The resonator carries a degenerate pair of counter-propagating modes,
``a`` (forward, clockwise) and ``b`` (backward, counter-clockwise). Each
mode couples to the two excited states of a V-type emitter with strengths
weighted by the local field helicity, so a magnetic splitting of the
excited states breaks the forward/backward symmetry. At weak probe power
the emitter lowering operators behave like bosonic modes and the steady
state in the frame rotating at the probe frequency reduces to a 4x4
complex linear solve over the amplitudes (<a>, <b>, <sigma1>, <sigma2>).
Transmission and reflection follow from input-output relations.

All rates are expressed in units of the emitter decay rate ``gamma``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError, ValidationError
from .tableio import finite, write_json, write_table

DIRECTIONS = ("forward", "backward")

SPECTRUM_COLUMNS = ("delta_c", "t_fwd", "t_bwd", "r_fwd", "r_bwd")


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and couplings of the resonator-emitter system.

    g0        coupling magnitude between one cavity mode and one transition
    kappa_i   intrinsic cavity loss rate
    kappa_ex  waveguide-cavity coupling rate
    theta     phase of the complex coupling g = g0 * exp(i*theta)
    p         helicity degree of the field at the emitter, in [-1, 1]
    h         backscattering rate mixing the two cavity modes (real >= 0,
              its phase is absorbed into theta)
    gamma     emitter decay rate, the unit of every other rate
    delta12   splitting between the two excited states
    drive_amp probe amplitude (transmission is independent of it)
    """

    g0: float
    kappa_i: float
    kappa_ex: float
    theta: float = math.pi / 4
    p: float = 1.0
    h: float = 0.0
    gamma: float = 1.0
    delta12: float = 0.0
    drive_amp: float = 1.0

    def __post_init__(self):
        for name in (
            "g0",
            "kappa_i",
            "kappa_ex",
            "theta",
            "p",
            "h",
            "gamma",
            "delta12",
            "drive_amp",
        ):
            if not finite(getattr(self, name)):
                raise ValidationError("%s must be a finite real number" % name)
        for name in ("g0", "kappa_i", "kappa_ex", "h"):
            if getattr(self, name) < 0:
                raise ValidationError("%s must be >= 0" % name)
        if self.gamma <= 0:
            raise ValidationError("gamma must be > 0")
        if not -1.0 <= self.p <= 1.0:
            raise ValidationError("p must lie in [-1, 1]")
        if self.kappa <= 0:
            raise ValidationError("kappa_ex + kappa_i must be > 0")
        if self.drive_amp == 0:
            raise ValidationError("drive_amp must be nonzero")

    @property
    def kappa(self) -> float:
        """Total cavity linewidth kappa_ex + kappa_i."""
        return self.kappa_ex + self.kappa_i


@dataclass(frozen=True)
class DriveSpec:
    """Probe direction and cavity-probe detuning Delta_C = omega_C - omega_p.

    The forward drive feeds mode ``a``, the backward drive mode ``b``.
    """

    direction: str
    detuning: float = 0.0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValidationError(
                "direction must be one of %s, got %r" % (DIRECTIONS, self.direction)
            )
        if not finite(self.detuning):
            raise ValidationError("detuning must be a finite real number")

    @property
    def forward(self) -> bool:
        return self.direction == "forward"


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Coefficient matrix and drive selector of the linearized dynamics.

    The amplitude vector x = (<a>, <b>, <sigma1>, <sigma2>) obeys
    dx/dt = A x - i E_p u with A = -i N - Gamma, N Hermitian and
    Gamma = diag(kappa, kappa, gamma/2, gamma/2).
    """

    matrix: np.ndarray
    drive: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Transmission and reflection in both directions over a detuning grid."""

    detunings: np.ndarray
    t_fwd: np.ndarray
    t_bwd: np.ndarray
    r_fwd: np.ndarray
    r_bwd: np.ndarray


def couplings(g0: float, theta: float, p: float) -> tuple[complex, complex]:
    """Helicity-split coupling amplitudes (g_plus, g_minus).

    g_pm = g0 * exp(i*theta) * sqrt((1 pm p) / 2); the identity
    |g_plus|**2 + |g_minus|**2 = g0**2 holds for every p.
    """
    g = g0 * cmath.exp(1j * theta)
    # clip guards square roots against roundoff just outside [-1, 1]
    gp = g * math.sqrt(max(0.0, (1.0 + p) / 2.0))
    gm = g * math.sqrt(max(0.0, (1.0 - p) / 2.0))
    return gp, gm


def coupling_matrix(params: SystemParams, detuning: float = 0.0) -> np.ndarray:
    """Hermitian coupling matrix N over (<a>, <b>, <sigma1>, <sigma2>).

    Diagonal entries carry the detunings of the modes and transitions;
    off-diagonal entries carry backscattering and the helicity-split
    couplings. The full dynamics matrix is A = -i N - Gamma.
    """
    gp, gm = couplings(params.g0, params.theta, params.p)
    dc = float(detuning)
    h = params.h
    d12 = params.delta12
    return np.array(
        [
            [dc, h, np.conj(gp), np.conj(gm)],
            [h, dc, gm, gp],
            [gp, np.conj(gm), dc + d12 / 2.0, 0.0],
            [gm, np.conj(gp), 0.0, dc - d12 / 2.0],
        ],
        dtype=complex,
    )


def decay_matrix(params: SystemParams) -> np.ndarray:
    """Diagonal decay matrix Gamma = diag(kappa, kappa, gamma/2, gamma/2)."""
    k = params.kappa
    g2 = params.gamma / 2.0
    return np.diag([k, k, g2, g2]).astype(complex)


def build_linear_system(params: SystemParams, drive: DriveSpec) -> LinearSystem:
    """Assemble A = -i N - Gamma and the drive selector for one direction."""
    n = coupling_matrix(params, drive.detuning)
    a = -1j * n - decay_matrix(params)
    u = np.zeros(4, dtype=complex)
    u[0 if drive.forward else 1] = 1.0
    return LinearSystem(matrix=a, drive=u)


def steady_state(system: LinearSystem, drive_amp: float) -> np.ndarray:
    """Steady-state amplitudes x solving A x = i * drive_amp * u.

    Setting dx/dt = A x - i E_p u to zero gives A x = i E_p u. The
    residual is checked against 1e-10 * ||A|| * ||x||.
    """
    a = system.matrix
    rhs = 1j * drive_amp * system.drive
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("steady-state matrix is singular") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("steady-state solve produced non-finite amplitudes")
    residual = np.linalg.norm(a @ x - rhs)
    bound = 1e-10 * np.linalg.norm(a) * max(np.linalg.norm(x), 1e-300)
    if residual > bound:
        raise SingularSystemError(
            "steady-state residual %.3e exceeds tolerance %.3e" % (residual, bound)
        )
    return x


def _amplitudes(params: SystemParams, drive: DriveSpec) -> np.ndarray:
    system = build_linear_system(params, drive)
    try:
        return steady_state(system, params.drive_amp)
    except SingularSystemError as exc:
        raise SingularSystemError(
            "singular steady state at detuning %g for %r" % (drive.detuning, params)
        ) from exc


def transmission(params: SystemParams, drive: DriveSpec) -> float:
    """Normalized transmitted power |i + 2*kappa_ex*<o>/E_p|**2.

    The intracavity amplitude <o> is <a> for forward drive and <b> for
    backward drive.
    """
    x = _amplitudes(params, drive)
    amp = x[0] if drive.forward else x[1]
    return abs(1j + 2.0 * params.kappa_ex * amp / params.drive_amp) ** 2


def reflection(params: SystemParams, drive: DriveSpec) -> float:
    """Normalized reflected power |2*kappa_ex*<o'>/E_p|**2.

    The reflected signal leaves through the mode counter-propagating to
    the drive, so <o'> is <b> for forward drive and <a> for backward.
    """
    x = _amplitudes(params, drive)
    amp = x[1] if drive.forward else x[0]
    return abs(2.0 * params.kappa_ex * amp / params.drive_amp) ** 2


def _check_monotone(values: np.ndarray, what: str) -> None:
    if values.size >= 2:
        steps = np.diff(values)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValidationError("%s must be strictly monotone" % what)


def spectrum(params: SystemParams, detunings) -> SpectrumResult:
    """Transmission and reflection in both directions over a detuning grid.

    Grid points where the steady-state solve fails (possible only at
    measure-zero parameter combinations) are marked NaN rather than
    aborting the sweep.
    """
    grid = np.asarray(detunings, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("detuning grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(grid)):
        raise ValidationError("detuning grid must be finite")
    _check_monotone(grid, "detuning grid")
    out = {key: np.empty(grid.size) for key in ("t_fwd", "t_bwd", "r_fwd", "r_bwd")}
    for i, dc in enumerate(grid):
        for direction, tkey, rkey in (
            ("forward", "t_fwd", "r_fwd"),
            ("backward", "t_bwd", "r_bwd"),
        ):
            drive = DriveSpec(direction, dc)
            try:
                x = _amplitudes(params, drive)
            except SingularSystemError:
                out[tkey][i] = math.nan
                out[rkey][i] = math.nan
                continue
            t_amp = x[0] if direction == "forward" else x[1]
            r_amp = x[1] if direction == "forward" else x[0]
            scale = 2.0 * params.kappa_ex / params.drive_amp
            out[tkey][i] = abs(1j + scale * t_amp) ** 2
            out[rkey][i] = abs(scale * r_amp) ** 2
    return SpectrumResult(detunings=grid, **out)


def save_spectrum(path, result: SpectrumResult, params: SystemParams, sidecar=None):
    """Write a spectrum table plus a metadata sidecar.

    The sidecar (same basename with a .meta.json suffix) records the full
    parameter set by default; callers may pass a richer mapping instead.
    """
    from dataclasses import asdict
    from pathlib import Path

    path = Path(path)
    rows = zip(result.detunings, result.t_fwd, result.t_bwd, result.r_fwd, result.r_bwd)
    write_table(path, SPECTRUM_COLUMNS, rows)
    payload = sidecar if sidecar is not None else {"params": asdict(params)}
    write_json(path.with_suffix(".meta.json"), payload)
