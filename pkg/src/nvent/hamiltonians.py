"""Hamiltonians for the static, vibrating and flying sensor geometries.

All sites sit on the z axis: qubit 1 at the origin, qubit 2 at 2*delta (or
at D for the flying sensor), the NV in between. The rotating-frame
Hamiltonians keep the secular NV-qubit part ``2 C d^-3 Sz_NV Sz_j`` and,
where the qubits are close, the full dipolar coupling between the two
identical qubits.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import SpinSystem, embed

Z_AXIS = np.array([0.0, 0.0, 1.0])

# Gauss-Legendre panel used for time integrals of vibrating couplings.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class StaticGeometry:
    """Qubits at z=0 and z=2*delta, sensor at z=delta."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"half-separation must be positive, got {self.delta}")


@dataclass(frozen=True)
class VibrationMode:
    """Axial mode d_NV,1/2(t) = delta +/- amplitude * cos(w t + phase).

    Fields may be numpy arrays of a common shape; every downstream
    evaluation then broadcasts over them, which is how ensembles of modes
    are integrated in one pass.
    """

    amplitude: float | np.ndarray
    angular_frequency: float | np.ndarray
    phase: float | np.ndarray = math.pi / 2

    def __post_init__(self):
        if np.any(np.asarray(self.amplitude) < 0):
            raise ValueError("vibration amplitude must be non-negative")
        if np.any(np.asarray(self.angular_frequency) < 0):
            raise ValueError("vibration frequency must be non-negative")

    def offset(self, t):
        """delta(t) = amplitude * cos(w t + phase)."""
        return np.asarray(self.amplitude) * np.cos(np.asarray(self.angular_frequency) * t + self.phase)


@dataclass(frozen=True)
class FlightPath:
    """Sensor flying from z0 to D - z0 at constant speed."""

    qubit_separation: float
    start_offset: float
    velocity: float

    def __post_init__(self):
        if not 0 < self.start_offset < self.qubit_separation / 2:
            raise ValueError("start offset must lie in (0, D/2)")
        if not self.velocity > 0:
            raise ValueError("velocity must be positive")

    @property
    def measurement_time(self) -> float:
        return (self.qubit_separation - 2 * self.start_offset) / self.velocity


class ScheduleKind(enum.Enum):
    STATIC = "static"
    VIBRATING = "vibrating"
    FLYING = "flying"


@dataclass(frozen=True)
class Schedule:
    """Sensor-qubit distances as a function of time."""

    kind: ScheduleKind
    geometry: StaticGeometry | None = None
    mode: VibrationMode | None = None
    path: FlightPath | None = None

    def __post_init__(self):
        if self.kind is ScheduleKind.FLYING:
            if self.path is None:
                raise ValueError("a flying schedule needs a FlightPath")
        else:
            if self.geometry is None:
                raise ValueError(f"a {self.kind.value} schedule needs a StaticGeometry")
            if self.kind is ScheduleKind.VIBRATING:
                if self.mode is None:
                    raise ValueError("a vibrating schedule needs a VibrationMode")
                if np.any(np.asarray(self.mode.amplitude) >= self.geometry.delta):
                    raise ValueError("vibration amplitude must stay below the half-separation")

    @classmethod
    def static(cls, geometry: StaticGeometry) -> "Schedule":
        return cls(ScheduleKind.STATIC, geometry=geometry)

    @classmethod
    def vibrating(cls, geometry: StaticGeometry, mode: VibrationMode) -> "Schedule":
        return cls(ScheduleKind.VIBRATING, geometry=geometry, mode=mode)

    @classmethod
    def flying(cls, path: FlightPath) -> "Schedule":
        return cls(ScheduleKind.FLYING, path=path)

    def _check_time(self, t):
        if self.kind is ScheduleKind.FLYING:
            tm = self.path.measurement_time
            t_arr = np.asarray(t)
            if np.any(t_arr < -1e-12 * tm) or np.any(t_arr > tm * (1 + 1e-12)):
                raise ValueError(f"time {t} outside the flight window [0, {tm}]")

    def distances(self, t):
        """(d_NV,1(t), d_NV,2(t)); broadcasts over t and mode arrays."""
        self._check_time(t)
        if self.kind is ScheduleKind.STATIC:
            d = self.geometry.delta * np.ones_like(np.asarray(t, dtype=float))
            return d, d
        if self.kind is ScheduleKind.VIBRATING:
            x = self.mode.offset(t)
            return self.geometry.delta + x, self.geometry.delta - x
        p = self.path
        z = p.start_offset + p.velocity * np.asarray(t, dtype=float)
        return z, p.qubit_separation - z

    def integrated_inverse_cubes(self, t: float):
        """(int_0^t d_NV,1^-3, int_0^t d_NV,2^-3), in closed form where one exists."""
        self._check_time(t)
        if self.kind is ScheduleKind.STATIC:
            v = t / self.geometry.delta**3
            return v, v
        if self.kind is ScheduleKind.FLYING:
            p = self.path
            z0, v, far = p.start_offset, p.velocity, p.qubit_separation - p.start_offset
            z = z0 + v * t
            i1 = (z0**-2 - z**-2) / (2 * v)
            i2 = ((far - v * t) ** -2 - far**-2) / (2 * v)
            return i1, i2
        return _vibrating_integrals(t, self.geometry.delta, self.mode)


def _vibrating_integrals(t: float, delta: float, mode: VibrationMode):
    """Composite Gauss-Legendre integral of (delta +/- amp cos(w t + phi))^-3."""
    if t == 0:
        z = np.zeros(np.broadcast(mode.amplitude, mode.angular_frequency, mode.phase).shape)
        return z, z
    w_max = float(np.max(mode.angular_frequency))
    # a few panels per half period keeps the 24-point rule at machine precision
    panels = max(1, int(math.ceil(3 * w_max * t / math.pi)))
    edges = np.linspace(0.0, t, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    amp = np.asarray(mode.amplitude)[..., None]
    w = np.asarray(mode.angular_frequency)[..., None]
    phi = np.asarray(mode.phase)[..., None]
    x = amp * np.cos(w * nodes + phi)
    i1 = ((delta + x) ** -3 * weights).sum(axis=-1)
    i2 = ((delta - x) ** -3 * weights).sum(axis=-1)
    return i1, i2


def zz_operators(system: SpinSystem) -> tuple[np.ndarray, np.ndarray]:
    """(Sz_NV Sz_1, Sz_NV Sz_2) on the full space."""
    sz_nv = system.sz(1)
    return sz_nv @ system.sz(0), sz_nv @ system.sz(2)


def dipole_hamiltonian(
    i: int,
    j: int,
    distance: float,
    unit_vector,
    system: SpinSystem,
) -> np.ndarray:
    """Point-dipole coupling C d^-3 (3 (x.S_i)(x.S_j) - S_i.S_j) between sites i and j."""
    if not distance > 0:
        raise ValueError(f"dipole distance must be positive, got {distance}")
    x = np.asarray(unit_vector, dtype=float)
    if abs(np.linalg.norm(x) - 1) > 1e-12:
        raise ValueError("unit_vector must be normalised")
    si = [embed(op, i, system) for op in system.site_operators(i)]
    sj = [embed(op, j, system) for op in system.site_operators(j)]
    xi = sum(c * op for c, op in zip(x, si))
    xj = sum(c * op for c, op in zip(x, sj))
    dot = sum(a @ b for a, b in zip(si, sj))
    return system.coupling(i, j) / distance**3 * (3 * xi @ xj - dot)


def qubit_qubit_hamiltonian(system: SpinSystem, separation: float) -> np.ndarray:
    return dipole_hamiltonian(0, 2, separation, Z_AXIS, system)


def zeeman_zfs_hamiltonian(system: SpinSystem) -> np.ndarray:
    """H_0 = -w_NV Sz_NV + D Sz_NV^2 - w_1 Sz_1 - w_2 Sz_2."""
    k = system.constants
    h = k.d_nv * system.sz(1) @ system.sz(1)
    for idx, site in enumerate(system.sites):
        h = h - k.larmor(site.magnetic_moment, system.b_field) * system.sz(idx)
    return h


def static_full_hamiltonian(
    system: SpinSystem, geometry: StaticGeometry, qubit_coupling: bool = True
) -> np.ndarray:
    """Lab-frame Hamiltonian: Zeeman, zero-field splitting and all three dipole pairs."""
    if system.nv.two_level:
        raise ValueError("the lab-frame Hamiltonian needs the NV as a full spin-1 site")
    d = geometry.delta
    h = zeeman_zfs_hamiltonian(system)
    h = h + dipole_hamiltonian(1, 0, d, Z_AXIS, system) + dipole_hamiltonian(1, 2, d, Z_AXIS, system)
    if qubit_coupling:
        h = h + qubit_qubit_hamiltonian(system, 2 * d)
    return h


class ZZHamiltonian:
    """Time-dependent rotating-frame Hamiltonian driven by a ``Schedule``.

    ``H(t) = 2 C d_1(t)^-3 Sz_NV Sz_1 + 2 C d_2(t)^-3 Sz_NV Sz_2 [+ H_12]``

    Calling the object returns an ``(n, n)`` matrix, or ``(..., n, n)`` when
    the schedule carries arrays of mode parameters.
    """

    def __init__(
        self,
        system: SpinSystem,
        schedule: Schedule,
        qubit_coupling: bool = True,
    ):
        self.system = system
        self.schedule = schedule
        self.ops = zz_operators(system)
        self.c1 = 2 * system.coupling(1, 0)
        self.c2 = 2 * system.coupling(1, 2)
        self.h12 = None
        if qubit_coupling:
            if schedule.kind is ScheduleKind.FLYING:
                raise ValueError("the flying scenario neglects the qubit-qubit coupling")
            self.h12 = qubit_qubit_hamiltonian(system, 2 * schedule.geometry.delta)

    @property
    def commuting(self) -> bool:
        """True when H(t) is diagonal in the product basis at every t."""
        return self.h12 is None

    def coefficients(self, t):
        d1, d2 = self.schedule.distances(t)
        return self.c1 * d1**-3.0, self.c2 * d2**-3.0

    def __call__(self, t) -> np.ndarray:
        a1, a2 = self.coefficients(t)
        a1 = np.asarray(a1)[..., None, None]
        a2 = np.asarray(a2)[..., None, None]
        h = a1 * self.ops[0] + a2 * self.ops[1]
        if self.h12 is not None:
            h = h + self.h12
        return h

    def integrated_diagonal(self, t: float) -> np.ndarray:
        """Diagonal of int_0^t H(t') dt' for the zz part (shape ``(..., n)``)."""
        i1, i2 = self.schedule.integrated_inverse_cubes(t)
        i1 = np.asarray(i1)[..., None]
        i2 = np.asarray(i2)[..., None]
        return self.c1 * i1 * np.diag(self.ops[0]).real + self.c2 * i2 * np.diag(self.ops[1]).real


def static_rwa_hamiltonian(
    system: SpinSystem, geometry: StaticGeometry, qubit_coupling: bool = True
) -> np.ndarray:
    """Secular static Hamiltonian 2 C delta^-3 Sz_NV (Sz_1 + Sz_2) + H_12."""
    return ZZHamiltonian(system, Schedule.static(geometry), qubit_coupling)(0.0)


def vibrational_hamiltonian(
    t,
    system: SpinSystem,
    geometry: StaticGeometry,
    mode: VibrationMode,
    qubit_coupling: bool = True,
) -> np.ndarray:
    """Secular Hamiltonian with d_NV,1/2(t) = delta +/- amplitude cos(w t + phase)."""
    return ZZHamiltonian(system, Schedule.vibrating(geometry, mode), qubit_coupling)(t)


def flying_hamiltonian(t, system: SpinSystem, path: FlightPath) -> np.ndarray:
    """Secular Hamiltonian for a sensor moving from z0 to D - z0; no qubit-qubit term."""
    return ZZHamiltonian(system, Schedule.flying(path), qubit_coupling=False)(t)


def alpha(system: SpinSystem, geometry: StaticGeometry) -> float:
    """NV-qubit zz coefficient 2 C delta^-3 (negative for parallel moments)."""
    return 2 * system.coupling(1, 0) / geometry.delta**3


def series_coefficients(t, geometry: StaticGeometry, mode: VibrationMode, order: int, coupling: float):
    """Taylor coefficients of the two NV-qubit couplings in the vibration offset.

    Returns the perturbation (c_1(t), c_2(t)) multiplying Sz_NV Sz_1 and
    Sz_NV Sz_2; the static part 2 C delta^-3 is excluded.
    """
    if order not in (1, 2):
        raise ValueError(f"series order must be 1 or 2, got {order}")
    d = geometry.delta
    x = mode.offset(t) / d
    pref = 2 * coupling / d**3
    c1 = pref * (-3 * x)
    c2 = pref * (3 * x)
    if order == 2:
        c1 = c1 + pref * 6 * x**2
        c2 = c2 + pref * 6 * x**2
    return c1, c2


def interaction_picture_series(
    t,
    system: SpinSystem,
    geometry: StaticGeometry,
    mode: VibrationMode,
    order: int = 2,
) -> np.ndarray:
    """Vibration perturbation expanded to first or second order in the offset.

    The qubit-qubit coupling is neglected, so the zz terms commute with the
    static Hamiltonian and the interaction picture leaves them unchanged.
    """
    c1, c2 = series_coefficients(t, geometry, mode, order, system.coupling(1, 0))
    a1, a2 = zz_operators(system)
    return np.asarray(c1)[..., None, None] * a1 + np.asarray(c2)[..., None, None] * a2
