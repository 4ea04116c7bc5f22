"""Ensemble averages of pure-state trajectories over one vibration parameter.

The averaged state is the mixture

    rho_bar(t) = int D(p) |psi(t, p)><psi(t, p)| dp

evaluated either with Gauss-Legendre quadrature against the density or by
seeded Monte Carlo sampling. Members are pure Schrodinger solutions by
default; passing a ``DephasingSpec`` evolves each member under the master
equation instead, which goes beyond the pure-state average.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import stats

from .core import SpinSystem, ket2dm, nearest_density_matrix, plus_state
from .dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    DephasingSpec,
    evolve_coherent,
    evolve_master_equation,
    exact_interaction_state,
    initial_density,
    interaction_to_rotating,
    perturbative_state_first_order,
    phase_averaged_state_second_order,
)
from .hamiltonians import Schedule, StaticGeometry, VibrationMode, ZZHamiltonian, alpha
from .measurement import branch_statistics, max_mean_ef

PARAMETERS = {"omega": "angular_frequency", "delta": "amplitude", "phi": "phase"}
METHODS = ("exact", "commuting", "first_order", "second_order_phase")


class DistributionKind(enum.Enum):
    TRUNCATED_NORMAL = "truncated_normal"
    UNIFORM = "uniform"


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ParameterDistribution:
    """Truncated normal on [0, inf) or uniform on [0, 2 pi)."""

    kind: DistributionKind
    mean: float = math.pi
    std_dev: float = 0.0

    def __post_init__(self):
        if self.kind is DistributionKind.TRUNCATED_NORMAL and not self.std_dev > 0:
            raise ValueError("truncated normal needs a positive standard deviation")

    @classmethod
    def truncated_normal(cls, mean: float, rel_std: float = 0.01) -> "ParameterDistribution":
        return cls(DistributionKind.TRUNCATED_NORMAL, mean, rel_std * mean)

    @classmethod
    def uniform_phase(cls) -> "ParameterDistribution":
        return cls(DistributionKind.UNIFORM, math.pi, math.pi / math.sqrt(3))

    @property
    def _frozen(self):
        if self.kind is DistributionKind.UNIFORM:
            return stats.uniform(0.0, 2 * math.pi)
        a = (0.0 - self.mean) / self.std_dev
        return stats.truncnorm(a, np.inf, loc=self.mean, scale=self.std_dev)

    def pdf(self, x):
        return self._frozen.pdf(x)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self._frozen.rvs(size=n, random_state=np.random.default_rng(seed))

    def quadrature(self, n_nodes: int = 33, width: float = 6.0) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes and normalised weights.

        The interval is mean +/- width*sigma clipped to the support. If the
        captured probability mass is below 0.999 the interval is widened
        twice before giving up.
        """
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        for k in (width, 2 * width, 4 * width):
            if self.kind is DistributionKind.UNIFORM:
                lo, hi = 0.0, 2 * math.pi
            else:
                lo, hi = max(0.0, self.mean - k * self.std_dev), self.mean + k * self.std_dev
            nodes = (hi - lo) / 2 * x + (hi + lo) / 2
            weights = (hi - lo) / 2 * w * self.pdf(nodes)
            mass = weights.sum()
            if mass >= 0.999:
                return nodes, weights / mass
        raise QuadratureError(f"quadrature captured only {mass:.6f} of the distribution mass")


@dataclass(frozen=True)
class VibratingScenario:
    """Sensor vibrating about the midpoint between the qubits."""

    system: SpinSystem
    geometry: StaticGeometry
    mode: VibrationMode
    qubit_coupling: bool = True

    @property
    def window(self) -> float:
        """Maximisation window 2 pi / |alpha|."""
        return 2 * math.pi / abs(alpha(self.system, self.geometry))

    def with_values(self, parameter: str, values) -> "VibratingScenario":
        if parameter not in PARAMETERS:
            raise ValueError(f"parameter must be one of {sorted(PARAMETERS)}, got {parameter!r}")
        return replace(self, mode=replace(self.mode, **{PARAMETERS[parameter]: np.asarray(values, float)}))


@dataclass(frozen=True)
class AveragedState:
    rho_bar: np.ndarray
    error_bound: float | None
    n_points: int
    seed: int | None = None


def _nodes(dist, backend, n_nodes, n_samples, seed):
    if backend == "quadrature":
        return dist.quadrature(n_nodes)
    if backend == "montecarlo":
        return dist.sample(n_samples, seed), np.full(n_samples, 1.0 / n_samples)
    raise ValueError(f"unknown backend {backend!r}")


def _member_states(scenario: VibratingScenario, method: str, rtol, atol, dephasing: DephasingSpec | None = None,
                   t_end: float | None = None):
    """Return f(t) -> member states, pure kets ``(..., B, n)`` or densities ``(..., B, n, n)``.

    Exact members are integrated once over [0, t_end] (default: the
    maximisation window) with dense output.
    """
    s = scenario
    t_end = s.window if t_end is None else t_end
    if method == "exact":
        h = ZZHamiltonian(s.system, Schedule.vibrating(s.geometry, s.mode), s.qubit_coupling)
        batch = np.broadcast(s.mode.amplitude, s.mode.angular_frequency, s.mode.phase).shape
        if dephasing is not None and dephasing.rates:
            rho0 = np.broadcast_to(initial_density(s.system), batch + (s.system.dim,) * 2).copy()
            res = evolve_master_equation(rho0, h, dephasing, [0.0, t_end], rtol, atol, dense=True)
            return (lambda t: res.at(np.asarray(t, float))), False
        psi0 = np.broadcast_to(plus_state(s.system), batch + (s.system.dim,)).copy()
        res = evolve_coherent(psi0, h, [0.0, t_end], rtol=rtol, atol=atol, dense=True)
        return (lambda t: res.at(np.asarray(t, float))), True
    if method == "commuting":
        if s.qubit_coupling:
            raise ValueError("the commuting method drops the qubit-qubit coupling; set qubit_coupling=False")
        rho0 = initial_density(s.system)

        def commuting(t):
            t = np.atleast_1d(np.asarray(t, float))
            out = [interaction_to_rotating(exact_interaction_state(x, s.system, s.geometry, s.mode, rho0),
                                           x, s.system, s.geometry, False) for x in t]
            return np.array(out)

        return commuting, False
    if method == "first_order":
        rho0 = initial_density(s.system)

        def first_order(t):
            t = np.atleast_1d(np.asarray(t, float))
            out = [interaction_to_rotating(perturbative_state_first_order(x, s.system, s.geometry, s.mode, rho0),
                                           x, s.system, s.geometry, s.qubit_coupling) for x in t]
            return np.array(out)

        return first_order, False
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _phase_second_order(scenario: VibratingScenario):
    s = scenario

    def rho_bar(t):
        out = []
        for x in np.atleast_1d(np.asarray(t, float)):
            rho_i = phase_averaged_state_second_order(x, s.system, s.geometry, s.mode)
            rho = interaction_to_rotating(rho_i, x, s.system, s.geometry, s.qubit_coupling)
            out.append(nearest_density_matrix(rho))
        return np.array(out)

    return rho_bar


def averaged_trajectory(
    parameter: str,
    dist: ParameterDistribution | None,
    scenario: VibratingScenario,
    method: str = "exact",
    backend: str = "quadrature",
    n_nodes: int = 33,
    n_samples: int = 4096,
    seed: int = 0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    dephasing: DephasingSpec | None = None,
) -> Callable[[np.ndarray], np.ndarray]:
    """Build t -> rho_bar(t) for times inside [0, 2 pi/|alpha|].

    Parameters
    ----------
    parameter : {"omega", "delta", "phi"}
        Mode field that is distributed.
    dist : ParameterDistribution or None
        ``None`` is a point mass at the scenario's own value.
    method : str
        ``exact`` integrates the Schrodinger equation for every member,
        ``commuting`` uses the closed-form propagator (no qubit-qubit term),
        ``first_order`` the linear-in-amplitude state and
        ``second_order_phase`` the closed-form uniform-phase average, for
        which ``parameter`` must be ``phi`` and ``dist`` is not used.
    dephasing : DephasingSpec, optional
        Only for ``exact``: evolve members under the master equation.
    """
    if method == "second_order_phase":
        if parameter != "phi":
            raise ValueError("second_order_phase is the uniform-phase average; parameter must be 'phi'")
        return _phase_second_order(scenario)
    if dephasing is not None and method != "exact":
        raise ValueError("dephasing inside the average is only available with method='exact'")
    if dist is None:
        nodes, weights = None, np.ones(1)
        members = replace(scenario, mode=replace(
            scenario.mode, amplitude=np.atleast_1d(np.asarray(scenario.mode.amplitude, float))))
    else:
        nodes, weights = _nodes(dist, backend, n_nodes, n_samples, seed)
        members = scenario.with_values(parameter, nodes)
    states, pure = _member_states(members, method, rtol, atol, dephasing)

    def rho_bar(t):
        st = states(t)
        if pure:
            return np.einsum("b,...bi,...bj->...ij", weights, st, st.conj())
        mix = np.einsum("b,...bij->...ij", weights, st)
        if method == "first_order":
            # truncated expansion is positive only up to second order
            mix = np.array([nearest_density_matrix(m) for m in mix])
        return mix

    return rho_bar


def _mixture(parameter, dist, scenario, t, method, backend, n_nodes, n_samples, seed):
    if dist is None:
        nodes, weights = None, np.ones(1)
        members = replace(scenario, mode=replace(
            scenario.mode, amplitude=np.atleast_1d(np.asarray(scenario.mode.amplitude, float))))
    else:
        nodes, weights = _nodes(dist, backend, n_nodes, n_samples, seed)
        members = scenario.with_values(parameter, nodes)
    states, pure = _member_states(members, method, DEFAULT_RTOL, DEFAULT_ATOL, t_end=t if t > 0 else None)
    st = states(np.array([t]))[0]
    per = ket2dm(st) if pure else st
    return np.einsum("b,bij->ij", weights, per), per, weights


def average_state(
    parameter: str,
    dist: ParameterDistribution | None,
    scenario: VibratingScenario,
    t: float,
    method: str = "exact",
    backend: str = "quadrature",
    n_nodes: int = 33,
    n_samples: int = 4096,
    seed: int = 0,
) -> AveragedState:
    """Mixture state at time ``t`` with an error estimate.

    Monte Carlo reports the largest entrywise standard error. Quadrature
    reports the change against a rule with roughly half as many nodes.
    ``dist=None`` is a point mass and returns the single trajectory.
    """
    if method == "second_order_phase":
        rho = averaged_trajectory(parameter, dist, scenario, method)(t)[0]
        return AveragedState(rho, None, 0)
    rho, per, weights = _mixture(parameter, dist, scenario, t, method, backend, n_nodes, n_samples, seed)
    if method == "first_order":
        rho = nearest_density_matrix(rho)
    if dist is None:
        return AveragedState(rho, 0.0, 1)
    if backend == "montecarlo":
        var = np.einsum("b,bij->ij", weights, np.abs(per - rho) ** 2)
        return AveragedState(rho, float(np.sqrt(var.max() / len(weights))), len(weights), seed)
    err = None
    if n_nodes > 4:
        coarse, _, _ = _mixture(parameter, dist, scenario, t, method, backend, n_nodes // 2 + 1, 0, seed)
        err = float(np.abs(coarse - rho).max())
    return AveragedState(rho, err, len(weights))


def max_mean_ef_averaged(
    parameter: str,
    dist: ParameterDistribution | None,
    scenario: VibratingScenario,
    method: str = "exact",
    n_grid: int = 401,
    **kwargs,
) -> tuple[float, float]:
    """Maximal achievable mean EF of the averaged state over [0, 2 pi/|alpha|]."""
    rho_bar = averaged_trajectory(parameter, dist, scenario, method, **kwargs)
    system = scenario.system
    return max_mean_ef(lambda t: branch_statistics(rho_bar(t), system).mean_ef, scenario.window, n_grid)
