"""Time evolution: dephasing master equation, Schrodinger evolution and
the perturbative vibration solutions.

The numerical integrator is scipy's DOP853 embedded Runge-Kutta pair on
the flattened complex state. Ensembles of pure states (one per mode
parameter) are integrated as a single stacked system so that averaging
costs one adaptive solve rather than one per node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .core import SpinSystem, ket2dm, plus_state
from .hamiltonians import (
    StaticGeometry,
    VibrationMode,
    ZZHamiltonian,
    Schedule,
    series_coefficients,
    static_rwa_hamiltonian,
    zz_operators,
)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class IntegrationError(RuntimeError):
    """The adaptive integrator failed to reach the requested tolerance."""


@dataclass(frozen=True)
class DephasingSpec:
    """Pure-dephasing channels: rate 2/T2 with jump operator S_z per site."""

    rates: tuple[float, ...]
    jumps: tuple[np.ndarray, ...]

    def __post_init__(self):
        if any(r < 0 for r in self.rates):
            raise ValueError("dephasing rates must be non-negative")
        if len(self.rates) != len(self.jumps):
            raise ValueError("one rate per jump operator")

    @classmethod
    def from_system(cls, system: SpinSystem) -> "DephasingSpec":
        rates, jumps = [], []
        for idx, site in enumerate(system.sites):
            if site.dephasing_rate > 0:
                rates.append(site.dephasing_rate)
                jumps.append(system.sz(idx))
        return cls(tuple(rates), tuple(jumps))

    @classmethod
    def none(cls) -> "DephasingSpec":
        return cls((), ())

    def dissipator(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for g, c in zip(self.rates, self.jumps):
            cd = c.conj().T
            cdc = cd @ c
            out += g * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
        return out

    def diagonal_mask(self, dim: int) -> np.ndarray | None:
        """Elementwise dissipator when every jump is diagonal, else None.

        For diagonal L = diag(l) the channel multiplies rho_ij by
        -g |l_i - l_j|^2 / 2.
        """
        mask = np.zeros((dim, dim))
        for g, c in zip(self.rates, self.jumps):
            if np.count_nonzero(c - np.diag(np.diag(c))):
                return None
            l = np.diag(c)
            mask -= 0.5 * g * np.abs(l[:, None] - l[None, :]) ** 2
        return mask


@dataclass
class EvolutionResult:
    """States on the requested grid plus integrator diagnostics."""

    times: np.ndarray
    states: np.ndarray
    nfev: int = 0
    max_trace_error: float = 0.0
    error_estimate: float | None = None
    _dense: Callable | None = field(default=None, repr=False)
    _shape: tuple = field(default=(), repr=False)

    def at(self, t) -> np.ndarray:
        """Interpolate the state at arbitrary times inside the window."""
        if self._dense is None:
            raise ValueError("evolution was run without dense output")
        t = np.asarray(t, dtype=float)
        y = self._dense(np.atleast_1d(t))
        y = np.moveaxis(y, -1, 0).reshape((-1,) + self._shape)
        return y[0] if t.ndim == 0 else y


def _as_callable(h):
    if callable(h):
        return h
    h = np.asarray(h)
    return lambda t: h


def _solve(rhs, y0, t_grid, rtol, atol, dense):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if t_grid[0] < 0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be ascending and non-negative")
    t_end = t_grid[-1]
    if t_end == 0:
        return np.repeat(y0[:, None], t_grid.size, axis=1), 0, (lambda t: np.repeat(y0[:, None], len(t), 1))
    def checked(t, y):
        dy = rhs(t, y)
        if not np.all(np.isfinite(dy)):
            raise IntegrationError(f"non-finite derivative at t={t}")
        return dy

    sol = solve_ivp(
        checked,
        (0.0, t_end),
        y0,
        method="DOP853",
        t_eval=t_grid,
        rtol=rtol,
        atol=atol,
        dense_output=dense,
    )
    if sol.status != 0:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else 0}: {sol.message}")
    return sol.y, sol.nfev, sol.sol


def evolve_master_equation(
    rho0: np.ndarray,
    hamiltonian,
    dephasing: DephasingSpec,
    t_grid,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    dense: bool = False,
    estimate_error: bool = False,
) -> EvolutionResult:
    """Integrate drho/dt = -i[H(t), rho] + sum_j g_j D[L_j](rho).

    Parameters
    ----------
    rho0 : ndarray
        Initial density matrix, or a stack ``(..., n, n)`` evolved together
        (the Hamiltonian may then return a matching stack).
    hamiltonian : ndarray or callable
        Constant matrix or ``t -> H(t)``.
    dephasing : DephasingSpec
        Channels to apply; ``DephasingSpec.none()`` for unitary evolution.
    t_grid : array_like
        Ascending output times starting at or after 0.
    estimate_error : bool
        Repeat the solve at a tenth of the tolerances and report the largest
        entry difference as ``error_estimate``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    shape = rho0.shape
    n = shape[-1]
    h = _as_callable(hamiltonian)
    mask = dephasing.diagonal_mask(n)

    def rhs(t, y):
        rho = y.reshape(shape)
        hm = h(t)
        d = -1j * (hm @ rho - rho @ hm)
        d += mask * rho if mask is not None else dephasing.dissipator(rho)
        return d.ravel()

    y, nfev, dense_fn = _solve(rhs, rho0.ravel(), t_grid, rtol, atol, dense)
    states = np.moveaxis(y, -1, 0).reshape((-1,) + shape)
    traces = np.trace(states, axis1=-2, axis2=-1)
    trace_err = float(np.max(np.abs(traces - np.trace(rho0, axis1=-2, axis2=-1))))
    result = EvolutionResult(np.asarray(t_grid, float), states, nfev, trace_err, None, dense_fn, shape)
    if estimate_error:
        fine = evolve_master_equation(rho0, hamiltonian, dephasing, t_grid, rtol / 10, atol / 10)
        result.error_estimate = float(np.max(np.abs(fine.states - states)))
    return result


def evolve_coherent(
    psi0: np.ndarray,
    hamiltonian,
    t_grid,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    dense: bool = False,
) -> EvolutionResult:
    """Integrate i dpsi/dt = H(t) psi.

    ``psi0`` may be a single state ``(n,)`` or a stack ``(..., n)``; the
    Hamiltonian must then return a matching stack ``(..., n, n)`` (or a
    single matrix shared by all members).
    """
    psi0 = np.asarray(psi0, dtype=complex)
    shape = psi0.shape
    h = _as_callable(hamiltonian)

    def rhs(t, y):
        psi = y.reshape(shape)
        return (-1j * np.einsum("...ij,...j->...i", h(t), psi)).ravel()

    y, nfev, dense_fn = _solve(rhs, psi0.ravel(), t_grid, rtol, atol, dense)
    states = np.moveaxis(y, -1, 0).reshape((-1,) + shape)
    norm_err = float(np.max(np.abs(np.linalg.norm(states, axis=-1) - np.linalg.norm(psi0, axis=-1))))
    return EvolutionResult(np.asarray(t_grid, float), states, nfev, norm_err, None, dense_fn, shape)


def evolve_commuting(psi0: np.ndarray, hamiltonian: ZZHamiltonian, t_grid) -> np.ndarray:
    """Exact propagation for a zz-only schedule: psi(t) = exp(-i int_0^t H) psi0.

    Returns states of shape ``(len(t_grid), ..., n)``.
    """
    if not hamiltonian.commuting:
        raise ValueError("exact propagation needs a commuting (zz-only) Hamiltonian")
    psi0 = np.asarray(psi0, dtype=complex)
    out = []
    for t in np.atleast_1d(t_grid):
        phase = hamiltonian.integrated_diagonal(float(t))
        out.append(np.exp(-1j * phase) * psi0)
    return np.array(out)


def unitary_from_hermitian(h: np.ndarray, t) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h``; ``t`` may be an array of times."""
    lam, vec = np.linalg.eigh(h)
    t = np.asarray(t, dtype=float)
    ph = np.exp(-1j * np.multiply.outer(t, lam))
    return np.einsum("ik,...k,jk->...ij", vec, ph, vec.conj())


def to_frame(rho: np.ndarray, h_static: np.ndarray, t, inverse: bool = False) -> np.ndarray:
    """Interaction picture rho_I = U^dag rho U with U = exp(-i H t); ``inverse`` undoes it."""
    u = unitary_from_hermitian(h_static, t)
    ud = np.conj(np.swapaxes(u, -1, -2))
    if inverse:
        return u @ rho @ ud
    return ud @ rho @ u


def initial_density(system: SpinSystem) -> np.ndarray:
    return ket2dm(plus_state(system))


def _comm(a, b):
    return a @ b - b @ a


def _panel_nodes(t: float, w: float):
    panels = max(1, int(math.ceil(3 * w * t / math.pi)))
    edges = np.linspace(0.0, t, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def perturbative_propagate(
    rho0: np.ndarray,
    t: float,
    system: SpinSystem,
    geometry: StaticGeometry,
    mode: VibrationMode,
    order: int = 2,
) -> np.ndarray:
    """Dyson expansion of the interaction-picture state to first or second order.

    rho_I(t) = rho_I(0) - i int_0^t [H_I(t'), rho_I(0)] dt'
               - int_0^t int_0^t' [H_I(t'), [H_I(t''), rho_I(0)]] dt'' dt'

    ``order`` selects both the truncation of the vibration series in H_I and
    the number of Dyson terms kept. Integrals use composite Gauss-Legendre
    quadrature; the nested one is taken over the triangle t'' < t'.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    rho0 = np.asarray(rho0, dtype=complex)
    if t == 0:
        return rho0.copy()
    a1, a2 = zz_operators(system)
    c_nv = system.coupling(1, 0)
    nodes, weights = _panel_nodes(t, float(mode.angular_frequency))
    c1, c2 = series_coefficients(nodes, geometry, mode, order, c_nv)
    h_int = (weights * c1).sum() * a1 + (weights * c2).sum() * a2
    out = rho0 - 1j * _comm(h_int, rho0)
    if order == 2:
        # inner integrals int_0^{t_k} c(t'') dt'', [0, t_k] split into equal panels
        sub = max(1, int(math.ceil(3 * float(mode.angular_frequency) * t / math.pi)))
        frac = np.linspace(0, 1, sub + 1)
        lo = nodes[:, None] * frac[None, :-1]
        half = nodes[:, None] * np.diff(frac)[None, :] / 2
        inner_x = ((lo + half)[..., None] + half[..., None] * _GL_NODES).reshape(len(nodes), -1)
        inner_w = (half[..., None] * _GL_WEIGHTS).reshape(len(nodes), -1)
        k1, k2 = series_coefficients(inner_x, geometry, mode, order, c_nv)
        big1 = (inner_w * k1).sum(axis=1)
        big2 = (inner_w * k2).sum(axis=1)
        second = np.zeros_like(rho0)
        for wk, h1, h2, b1, b2 in zip(weights, c1, c2, big1, big2):
            h_outer = h1 * a1 + h2 * a2
            k_inner = b1 * a1 + b2 * a2
            second += wk * _comm(h_outer, _comm(k_inner, rho0))
        out = out - second
    return out


def _sine_window(t, w, phi):
    """(sin(w t + phi) - sin(phi)) / w, stable as w -> 0."""
    x = np.asarray(w) * t / 2
    return t * np.cos(x + phi) * np.sinc(x / np.pi)


def _cosine_window(t, w):
    """(1 - cos(w t)) / w^2, stable as w -> 0 (limit t^2/2)."""
    x = np.asarray(w) * t / 2
    return t**2 / 2 * np.sinc(x / np.pi) ** 2


def perturbative_state_first_order(
    t: float,
    system: SpinSystem,
    geometry: StaticGeometry,
    mode: VibrationMode,
    rho0: np.ndarray | None = None,
) -> np.ndarray:
    """Interaction-picture state to first order in the vibration amplitude.

    rho_I(t) = rho_I(0) + i (6C/delta^4) amp s(t) [Sz_NV Sz_1 - Sz_NV Sz_2, rho_I(0)]
    with s(t) = (sin(w t + phi) - sin phi)/w. Mode fields may be arrays; the
    result then stacks in the leading axes.
    """
    rho0 = initial_density(system) if rho0 is None else rho0
    a1, a2 = zz_operators(system)
    c = system.coupling(1, 0)
    d = geometry.delta
    coef = 6 * c / d**4 * np.asarray(mode.amplitude) * _sine_window(t, mode.angular_frequency, mode.phase)
    return rho0 + 1j * np.asarray(coef)[..., None, None] * _comm(a1 - a2, rho0)


def phase_averaged_state_second_order(
    t: float,
    system: SpinSystem,
    geometry: StaticGeometry,
    mode: VibrationMode,
    rho0: np.ndarray | None = None,
) -> np.ndarray:
    """Second-order interaction-picture state averaged over a uniform phase.

    The phase field of ``mode`` is ignored. The result is

        rho_I(0) - i 6 C amp^2 t / delta^5 [A_1 + A_2, rho_I(0)]
                 - 18 C^2 amp^2 / delta^8 (1 - cos w t)/w^2 [A_1 - A_2, [A_1 - A_2, rho_I(0)]]

    with A_j = Sz_NV Sz_j.
    """
    rho0 = initial_density(system) if rho0 is None else rho0
    a1, a2 = zz_operators(system)
    c = system.coupling(1, 0)
    d = geometry.delta
    amp = float(mode.amplitude)
    drift = 6 * c / d**5 * amp**2 * t
    decoh = 18 * c**2 / d**8 * amp**2 * float(_cosine_window(t, mode.angular_frequency))
    b = a1 - a2
    return rho0 - 1j * drift * _comm(a1 + a2, rho0) - decoh * _comm(b, _comm(b, rho0))


def exact_interaction_state(
    t: float,
    system: SpinSystem,
    geometry: StaticGeometry,
    mode: VibrationMode,
    rho0: np.ndarray | None = None,
) -> np.ndarray:
    """Interaction-picture state for the vibrating Hamiltonian without H_12.

    Every term is diagonal, so the propagator is the exponential of the
    time-integrated perturbation; mode fields may be arrays.
    """
    rho0 = initial_density(system) if rho0 is None else rho0
    vib = ZZHamiltonian(system, Schedule.vibrating(geometry, mode), qubit_coupling=False)
    stat = ZZHamiltonian(system, Schedule.static(geometry), qubit_coupling=False)
    phase = vib.integrated_diagonal(t) - stat.integrated_diagonal(t)
    u = np.exp(-1j * phase)
    return u[..., :, None] * rho0 * u[..., None, :].conj()


def interaction_to_rotating(rho_i: np.ndarray, t, system: SpinSystem, geometry: StaticGeometry,
                            qubit_coupling: bool = True) -> np.ndarray:
    """Undo the interaction picture with respect to the static secular Hamiltonian."""
    h = static_rwa_hamiltonian(system, geometry, qubit_coupling)
    return to_frame(rho_i, h, t, inverse=True)
