"""NV read-out in the |+/-> basis and two-qubit entanglement measures."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import InvariantError, SpinSystem, check_density_matrix, ket2dm
from .hamiltonians import FlightPath

UNDEFINED_BRANCH = 1e-12

_SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


class Outcome(enum.Enum):
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class MeasurementOutcome:
    """One branch of the NV read-out.

    ``qubit_state`` is None when the branch probability is below 1e-12.
    """

    label: Outcome
    probability: float
    qubit_state: np.ndarray | None


def nv_pm_kets(system: SpinSystem) -> tuple[np.ndarray, np.ndarray]:
    """|+/-> = (|0> +/- |1>)/sqrt(2) in the local NV basis."""
    s = 1 / math.sqrt(2)
    if system.nv.two_level:
        return np.array([s, s], complex), np.array([s, -s], complex)
    return np.array([0, s, s], complex), np.array([0, s, -s], complex)


def project_nv(rho: np.ndarray, system: SpinSystem, ket: np.ndarray) -> np.ndarray:
    """Unnormalised qubit state <k|rho|k> for NV ket k; stacks in leading axes."""
    d1, dn, d2 = system.dims
    rho = np.asarray(rho)
    lead = rho.shape[:-2]
    r = rho.reshape(*lead, d1, dn, d2, d1, dn, d2)
    out = np.einsum("...iakjbl,a,b->...ikjl", r, ket.conj(), ket)
    return out.reshape(*lead, d1 * d2, d1 * d2)


def measure_nv_pm(rho: np.ndarray, system: SpinSystem) -> tuple[MeasurementOutcome, MeasurementOutcome]:
    """Project the NV onto |+> and |->, returning the normalised qubit states."""
    outcomes = []
    for label, ket in zip((Outcome.PLUS, Outcome.MINUS), nv_pm_kets(system)):
        sub = project_nv(rho, system, ket)
        p = float(np.trace(sub).real)
        state = sub / p if p >= UNDEFINED_BRANCH else None
        outcomes.append(MeasurementOutcome(label, min(max(p, 0.0), 1.0), state))
    return outcomes[0], outcomes[1]


def static_outcome_probability(t, alpha: float, t2_nv: float = math.inf):
    """Closed-form (p_plus, p_minus) for the static sensor with NV dephasing."""
    t = np.asarray(t, dtype=float)
    decay = np.ones_like(t) if math.isinf(t2_nv) else np.exp(-t / t2_nv)
    c2 = np.cos(alpha * t / 2) ** 2
    return (1 + decay * c2) / 2, (1 - decay * c2) / 2


def _normalise(v):
    return v / np.linalg.norm(v)


def static_post_measurement_states(t: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Dephasing-free qubit states after each outcome, basis (uu, ud, du, dd).

    psi_+ ~ e^{-i a t}|dd> + |uu> + 2 e^{3 i a t/32}/(1 + e^{i a t}) (|du> + |ud>)
    psi_- = (-e^{-i a t}|dd> + |uu>)/sqrt(2)

    psi_+ is assembled after multiplying through by (1 + e^{i a t}), which
    removes the pole and gives the normalised limit at a t = pi mod 2 pi.
    """
    e = np.exp(1j * alpha * t)
    cross = 2 * np.exp(1j * 3 * alpha * t / 32)
    plus = np.array([1 + e, cross, cross, (1 + e) / e])
    minus = np.array([1, 0, 0, -1 / e]) / math.sqrt(2)
    return _normalise(plus), minus


def fitted_cross_phase_exponent(times, alpha: float, states) -> np.ndarray:
    """Recover k in the e^{i k a t} cross-term phase of psi_+ from states.

    For each time, the phase of the (ud) amplitude relative to (uu) is
    corrected for the 2/(1 + e^{i a t}) factor and divided by a t. Global
    phases drop out.
    """
    times = np.asarray(times, float)
    states = np.asarray(states)
    e = np.exp(1j * alpha * times)
    ratio = states[..., 1] / states[..., 0] * (1 + e) / 2
    return np.angle(ratio) / (alpha * times)


def concurrence(state: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit state vector or density matrix.

    Density matrices are handled through rho = W W^dag with
    W = V sqrt(diag(p)); the Wootters values are then the singular values of
    W^T (sy x sy) W, which avoids square roots of the tiny round-off
    eigenvalues of rho rho~. Stacks of matrices are accepted.
    """
    state = np.asarray(state)
    if state.shape[-1:] == (4,) and state.ndim == 1:
        v = _normalise(state)
        return float(abs(v @ _SIGMA_YY @ v))
    if state.shape[-2:] != (4, 4):
        raise ValueError(f"concurrence needs a two-qubit state, got shape {state.shape}")
    h = (state + np.conj(np.swapaxes(state, -1, -2))) / 2
    lam, vec = np.linalg.eigh(h)
    w = vec * np.sqrt(np.clip(lam, 0.0, None))[..., None, :]
    tau = np.swapaxes(w, -1, -2) @ _SIGMA_YY @ w
    s = np.linalg.svd(tau, compute_uv=False)
    c = np.clip(s[..., 0] - s[..., 1] - s[..., 2] - s[..., 3], 0.0, 1.0)
    return float(c) if c.ndim == 0 else c


def binary_entropy(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    return np.where((x == 0) | (x == 1), 0.0, h)


def ef_from_concurrence(c):
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    ef = binary_entropy(0.5 + 0.5 * np.sqrt(1 - c**2))
    return float(ef) if ef.ndim == 0 else ef


def entanglement_of_formation(state: np.ndarray) -> float:
    """EF = H(1/2 + sqrt(1 - C^2)/2) with H the binary entropy."""
    return ef_from_concurrence(concurrence(state))


def mean_ef(outcomes) -> float:
    """Probability-weighted entanglement of formation over read-out branches."""
    total = 0.0
    for o in outcomes:
        if o.qubit_state is not None and o.probability > 0:
            total += o.probability * entanglement_of_formation(o.qubit_state)
    return total


@dataclass(frozen=True)
class BranchStatistics:
    """Vectorised read-out summary for a stack of full-system states."""

    p_plus: np.ndarray
    p_minus: np.ndarray
    ef_plus: np.ndarray
    ef_minus: np.ndarray

    @property
    def mean_ef(self) -> np.ndarray:
        return self.p_plus * self.ef_plus + self.p_minus * self.ef_minus


def branch_statistics(rho: np.ndarray, system: SpinSystem) -> BranchStatistics:
    """Probabilities and EFs of both branches for one state or a stack."""
    rho = np.asarray(rho)
    probs, efs = [], []
    for ket in nv_pm_kets(system):
        sub = project_nv(rho, system, ket)
        p = np.trace(sub, axis1=-2, axis2=-1).real
        ok = p >= UNDEFINED_BRANCH
        safe = np.where(ok, p, 1.0)[..., None, None]
        ef = np.asarray(ef_from_concurrence(concurrence(sub / safe)))
        probs.append(p)
        efs.append(np.where(ok, ef, 0.0))
    return BranchStatistics(probs[0], probs[1], efs[0], efs[1])


def max_mean_ef(
    mean_ef_of_t: Callable[[np.ndarray], np.ndarray],
    t_max: float,
    n_grid: int = 401,
    rel_resolution: float = 1e-4,
) -> tuple[float, float]:
    """Maximise the mean EF over [0, t_max].

    A uniform grid of ``n_grid`` points locates the best sample (ties go to
    the earliest time); golden-section search on the neighbouring interval
    then refines the time to ``rel_resolution * t_max``.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    grid = np.linspace(0.0, t_max, n_grid)
    vals = np.asarray(mean_ef_of_t(grid), dtype=float)
    k = int(np.argmax(vals))
    best_t, best = float(grid[k]), float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
    f = lambda x: float(np.asarray(mean_ef_of_t(np.array([x])), dtype=float)[0])
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rel_resolution * t_max:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    for x, fx in sorted(((c, fc), (d, fd))):
        if fx > best:
            best_t, best = x, fx
    return best, best_t


@dataclass(frozen=True)
class FlyingDerived:
    beta: float
    xi: float
    p_minus: float
    p_plus: float

    @classmethod
    def from_beta(cls, beta: float) -> "FlyingDerived":
        return cls(
            beta,
            (1 - math.cos(beta)) / (3 + math.cos(beta)),
            math.sin(beta / 2) ** 2 / 2,
            (3 + math.cos(beta)) / 4,
        )


def flying_beta(path: FlightPath, system: SpinSystem | None = None) -> float:
    """beta = C ((D - z0)^-2 - z0^-2) / v."""
    system = system or SpinSystem.default()
    c = system.coupling(1, 0)
    far = path.qubit_separation - path.start_offset
    return c * (far**-2 - path.start_offset**-2) / path.velocity


def optimal_velocity(qubit_separation: float, start_offset: float, system: SpinSystem | None = None) -> float:
    """Fastest speed with |beta| = pi."""
    system = system or SpinSystem.default()
    c = system.coupling(1, 0)
    far = qubit_separation - start_offset
    return abs(c * (far**-2 - start_offset**-2)) / math.pi


def ef_plus_from_beta(beta) -> float:
    """EF of the flying PLUS branch, H(1/2 + sqrt(1 - xi^2)/2)."""
    cb = np.cos(beta)
    xi = (1 - cb) / (3 + cb)
    return ef_from_concurrence(xi)


def flying_states(beta: float) -> tuple[np.ndarray, np.ndarray]:
    """(Psi_+, Psi_-) in the basis (uu, ud, du, dd).

    Psi_+ is built from (1 + e^{i b})(e^{i b}|dd> + |uu>) + 2 e^{i b}(|du> + |ud>),
    i.e. after clearing the 1 + e^{i b} denominator.
    """
    e = np.exp(1j * beta)
    plus = np.array([1 + e, 2 * e, 2 * e, (1 + e) * e])
    minus = np.array([1, 0, 0, -e]) / math.sqrt(2)
    return _normalise(plus), minus


def flying_outcome(beta: float) -> tuple[MeasurementOutcome, MeasurementOutcome]:
    d = FlyingDerived.from_beta(beta)
    plus, minus = flying_states(beta)
    return (
        MeasurementOutcome(Outcome.PLUS, d.p_plus, ket2dm(plus)),
        MeasurementOutcome(Outcome.MINUS, d.p_minus, ket2dm(minus) if d.p_minus >= UNDEFINED_BRANCH else None),
    )


def validate_outcomes(outcomes, tol: float = 1e-10) -> None:
    total = sum(o.probability for o in outcomes)
    if abs(total - 1) > tol:
        raise InvariantError(f"branch probabilities sum to {total}")
    for o in outcomes:
        if o.qubit_state is not None:
            check_density_matrix(o.qubit_state)
