"""Lab-frame versus secular dynamics at reduced splittings.

The NV is kept as a full spin-1 site. The zero-field splitting is set to
``ratio * |alpha|`` and the field to give a Zeeman splitting of
``zeeman_over_zfs`` times that. Both Hamiltonians are time independent, so
each is propagated exactly through its eigendecomposition. The lab state is
moved into the rotating frame of H_0 and compared with the secular state
over one period 2 pi/|alpha|. The lab-frame error oscillates at up to about
three times the ZFS, so the sample count grows with the ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import PhysicalConstants, SpinSystem, plus_state
from ..dynamics import IntegrationError
from ..hamiltonians import (
    StaticGeometry,
    alpha,
    static_full_hamiltonian,
    static_rwa_hamiltonian,
    zeeman_zfs_hamiltonian,
)

RWA_COLUMNS = ["ratio", "fidelity_deficit", "worst_t_us"]

# Beyond this resolving every lab-frame oscillation needs more than ~1e7 samples.
MAX_RATIO = 1e5
SAMPLES_PER_RATIO = 64
CHUNK = 1 << 16


def _propagate(h: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(h)
    c = vec.conj().T @ psi0
    return np.einsum("ik,tk->ti", vec, np.exp(-1j * np.outer(times, lam)) * c)


def scaled_system(ratio: float, geometry: StaticGeometry, zeeman_over_zfs: float = 2.0) -> SpinSystem:
    """Spin-1 system whose ZFS is ``ratio * |alpha|``."""
    a = abs(alpha(SpinSystem.default(), geometry))
    base = PhysicalConstants()
    consts = PhysicalConstants(d_nv=ratio * a)
    moment = 2.0
    b_field = zeeman_over_zfs * consts.d_nv / abs(base.larmor(moment, 1.0))
    return SpinSystem.default(nv_two_level=False, constants=consts, b_field=b_field, moment=moment)


def fidelity_deficit(
    ratio: float,
    geometry: StaticGeometry,
    zeeman_over_zfs: float = 2.0,
    n_points: int | None = None,
    qubit_coupling: bool = True,
) -> tuple[float, float]:
    """Largest 1 - |<psi_RWA|psi_rot>|^2 over one period and where it occurs.

    ``n_points`` defaults to ``SAMPLES_PER_RATIO * ratio + 1``, enough to
    resolve the fast lab-frame oscillation.
    """
    if ratio > MAX_RATIO:
        raise IntegrationError(
            f"ratio {ratio:g} exceeds {MAX_RATIO:g}: too many lab-frame oscillations to resolve; "
            "use a smaller ratio")
    if abs(zeeman_over_zfs - 0.5) < 0.05 or abs(zeeman_over_zfs - 1.0) < 0.05:
        raise ValueError("Zeeman splitting near D/2 or D makes NV levels resonant with the qubits")
    system = scaled_system(ratio, geometry, zeeman_over_zfs)
    if n_points is None:
        n_points = max(4001, int(SAMPLES_PER_RATIO * ratio) + 1)
    times = np.linspace(0.0, 2 * math.pi / abs(alpha(system, geometry)), n_points)
    psi0 = plus_state(system)
    h_lab = static_full_hamiltonian(system, geometry, qubit_coupling)
    h_rwa = static_rwa_hamiltonian(system, geometry, qubit_coupling)
    h0 = np.diag(zeeman_zfs_hamiltonian(system)).real
    worst, worst_t = -1.0, 0.0
    for start in range(0, n_points, CHUNK):
        t = times[start:start + CHUNK]
        rotating = np.exp(1j * np.outer(t, h0)) * _propagate(h_lab, psi0, t)
        secular = _propagate(h_rwa, psi0, t)
        deficit = 1 - np.abs(np.einsum("ti,ti->t", secular.conj(), rotating)) ** 2
        k = int(np.argmax(deficit))
        if deficit[k] > worst:
            worst, worst_t = float(deficit[k]), float(t[k])
    return worst, worst_t


def rwa_point(c) -> dict:
    deficit, t = fidelity_deficit(
        c["rwa.ratio"],
        StaticGeometry(c["geometry.delta_nm"] * 1e-9),
        c["rwa.zeeman_over_zfs"],
        c["rwa.points"] or None,
        c["coupling.qubit_qubit"],
    )
    return {"ratio": c["rwa.ratio"], "fidelity_deficit": deficit, "worst_t_us": t / 1e-6}


@dataclass(frozen=True)
class RWAReport:
    """Deficits against ratio with a power-law fit deficit ~ A ratio^slope."""

    ratios: np.ndarray
    deficits: np.ndarray
    slope: float
    prefactor: float

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.deficits) < 0))

    def extrapolate(self, ratio: float) -> float:
        return self.prefactor * ratio**self.slope

    def lines(self) -> list[str]:
        out = [f"{'ratio':>12}  {'max deficit':>14}"]
        out += [f"{r:12.4g}  {d:14.6e}" for r, d in zip(self.ratios, self.deficits)]
        out.append(f"monotone decrease: {'yes' if self.monotone else 'no'}")
        out.append(f"fitted slope d(log deficit)/d(log ratio): {self.slope:.3f}")
        out.append(f"extrapolated deficit at ratio 1e9: {self.extrapolate(1e9):.3e}")
        return out


def rwa_report(ratios, deficits) -> RWAReport:
    ratios = np.asarray(ratios, float)
    deficits = np.asarray(deficits, float)
    if len(ratios) >= 2 and np.all(deficits > 0):
        slope, intercept = np.polyfit(np.log(ratios), np.log(deficits), 1)
    else:
        slope, intercept = float("nan"), float("nan")
    return RWAReport(ratios, deficits, float(slope), float(np.exp(intercept)))
