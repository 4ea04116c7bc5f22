"""Spin-system scaffolding: constants, local spin matrices, tensor embedding.

Units are angular frequency with hbar = 1 throughout. Lengths are metres,
times seconds and every Hamiltonian entry is in rad/s.

Site order is fixed as (qubit 1, NV, qubit 2). Local bases are ordered by
descending magnetic quantum number, so a qubit reads (up, down) and a full
spin-1 NV reads (m=+1, m=0, m=-1).

The NV sensor is normally kept as an effective two-level site made of its
m=0 and m=-1 levels, labelled |0> and |1>. On that subspace the spin-1
S_z restricts to diag(0, -1); no rescaling is applied, so the levels
differ by exactly one unit of S_z like a spin-1/2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np
from scipy import constants as _sc

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


class InvariantError(ValueError):
    """A state or operator violates a physical invariant."""


class SiteLabel(enum.Enum):
    QUBIT1 = "qubit1"
    NV = "nv"
    QUBIT2 = "qubit2"


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants used to build couplings.

    ``d_nv`` is the NV zero-field splitting as an angular frequency.
    """

    mu0_over_4pi: float = _sc.mu_0 / (4 * math.pi)
    mu_B: float = _sc.physical_constants["Bohr magneton"][0]
    hbar: float = _sc.hbar
    d_nv: float = 2 * math.pi * 2.87e9

    def coupling(self, moment_i: float, moment_j: float) -> float:
        """Dipolar constant C = -(mu0/4pi) mu_i mu_j / hbar in rad s^-1 m^3.

        Moments are given in Bohr magnetons.
        """
        return -self.mu0_over_4pi * (moment_i * self.mu_B) * (moment_j * self.mu_B) / self.hbar

    def larmor(self, moment: float, b_field: float) -> float:
        """Zeeman angular frequency mu B / hbar for a moment in Bohr magnetons."""
        return moment * self.mu_B * b_field / self.hbar


@dataclass(frozen=True)
class SpinSite:
    """One spin in the register.

    ``two_level`` truncates a spin-1 to its m=0 and m=-1 levels; it is only
    meaningful for the NV site.
    """

    label: SiteLabel
    spin: float = 0.5
    magnetic_moment: float = 2.0
    t2: float = math.inf
    two_level: bool = False

    def __post_init__(self):
        if self.spin not in (0.5, 1.0):
            raise ValueError(f"unsupported spin {self.spin}; only 1/2 and 1 are handled")
        if not self.t2 > 0:
            raise ValueError(f"t2 must be positive or infinite, got {self.t2}")
        if self.two_level and self.spin != 1.0:
            raise ValueError("two-level truncation applies to spin-1 sites only")

    @property
    def dim(self) -> int:
        return 2 if self.two_level else int(round(2 * self.spin + 1))

    @property
    def dephasing_rate(self) -> float:
        """Lindblad rate 2/T2 attached to the S_z jump operator."""
        return 0.0 if math.isinf(self.t2) else 2.0 / self.t2


@dataclass(frozen=True)
class SpinSystem:
    sites: tuple[SpinSite, SpinSite, SpinSite]
    b_field: float = 0.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        labels = tuple(s.label for s in self.sites)
        if labels != (SiteLabel.QUBIT1, SiteLabel.NV, SiteLabel.QUBIT2):
            raise ValueError(f"sites must be ordered (qubit1, nv, qubit2), got {labels}")
        for s in (self.sites[0], self.sites[2]):
            if s.spin != 0.5:
                raise ValueError("qubit sites must be spin-1/2")
        if self.sites[1].spin != 1.0:
            raise ValueError("the NV site must be spin-1 (optionally two-level)")

    @classmethod
    def default(
        cls,
        t2_nv: float = math.inf,
        t2_qubits: float | tuple[float, float] = math.inf,
        nv_two_level: bool = True,
        b_field: float = 0.0,
        constants: PhysicalConstants | None = None,
        moment: float = 2.0,
    ) -> "SpinSystem":
        """Two electron-spin qubits either side of an NV sensor, all with moment 2 mu_B."""
        if np.isscalar(t2_qubits):
            t2_qubits = (t2_qubits, t2_qubits)
        sites = (
            SpinSite(SiteLabel.QUBIT1, 0.5, moment, float(t2_qubits[0])),
            SpinSite(SiteLabel.NV, 1.0, moment, float(t2_nv), two_level=nv_two_level),
            SpinSite(SiteLabel.QUBIT2, 0.5, moment, float(t2_qubits[1])),
        )
        return cls(sites, b_field, constants or PhysicalConstants())

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.sites)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def nv(self) -> SpinSite:
        return self.sites[1]

    def coupling(self, i: int, j: int) -> float:
        return self.constants.coupling(self.sites[i].magnetic_moment, self.sites[j].magnetic_moment)

    def site_operators(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Sx, Sy, Sz) acting on the local space of one site."""
        site = self.sites[index]
        sx, sy, sz = spin_operators(site.spin)
        if site.two_level:
            keep = [1, 2]  # m = 0, -1
            sx, sy, sz = (m[np.ix_(keep, keep)] for m in (sx, sy, sz))
        return sx, sy, sz

    def sz(self, index: int) -> np.ndarray:
        """S_z of one site embedded in the full space."""
        return embed(self.site_operators(index)[2], index, self)

    def with_t2(self, t2_nv: float | None = None, t2_qubits: float | None = None) -> "SpinSystem":
        sites = list(self.sites)
        if t2_nv is not None:
            sites[1] = replace(sites[1], t2=t2_nv)
        if t2_qubits is not None:
            sites[0] = replace(sites[0], t2=t2_qubits)
            sites[2] = replace(sites[2], t2=t2_qubits)
        return SpinSystem(tuple(sites), self.b_field, self.constants)


def spin_operators(s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin matrices (Sx, Sy, Sz) in the S_z eigenbasis, m descending.

    Parameters
    ----------
    s : float
        Spin quantum number, 1/2 or 1.
    """
    if s not in (0.5, 1.0):
        raise ValueError(f"unsupported spin quantum number {s}")
    m = np.arange(s, -s - 1, -1)
    dim = len(m)
    sz = np.diag(m).astype(complex)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    splus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        splus[k - 1, k] = math.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sminus = splus.conj().T
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    return sx, sy, sz


def embed(op: np.ndarray, site_index: int, system: SpinSystem) -> np.ndarray:
    """Place a local operator at ``site_index``, identity elsewhere."""
    dims = system.dims
    op = np.asarray(op)
    if op.shape != (dims[site_index], dims[site_index]):
        raise ValueError(
            f"operator of shape {op.shape} does not fit site {site_index} of dimension {dims[site_index]}"
        )
    factors = [op if k == site_index else np.eye(d) for k, d in enumerate(dims)]
    return reduce(np.kron, factors).astype(complex)


def plus_state(system: SpinSystem) -> np.ndarray:
    """|+>_1 |+>_NV |+>_2 with |+>_NV = (|0> + |1>)/sqrt(2)."""
    qubit = np.array([1, 1], dtype=complex) / math.sqrt(2)
    if system.nv.two_level:
        nv = np.array([1, 1], dtype=complex) / math.sqrt(2)
    else:
        nv = np.array([0, 1, 1], dtype=complex) / math.sqrt(2)
    return reduce(np.kron, [qubit, nv, qubit])


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.einsum("...i,...j->...ij", psi, psi.conj())


def partial_trace_to_qubits(rho: np.ndarray, system: SpinSystem) -> np.ndarray:
    """Trace out the NV site, leaving the 4x4 two-qubit state.

    Accepts a stack of density matrices in the leading axes.
    """
    rho = np.asarray(rho)
    d1, dn, d2 = system.dims
    lead = rho.shape[:-2]
    r = rho.reshape(*lead, d1, dn, d2, d1, dn, d2)
    out = np.einsum("...aibcid->...abcd", r)
    return out.reshape(*lead, d1 * d2, d1 * d2)


def hermiticity_error(op: np.ndarray) -> float:
    """Relative Frobenius norm of the anti-Hermitian part."""
    op = np.asarray(op)
    norm = np.linalg.norm(op)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(op - op.conj().T) / norm)


def check_density_matrix(
    rho: np.ndarray,
    trace_tol: float = TRACE_TOL,
    herm_tol: float = HERMITIAN_TOL,
    pos_tol: float = POSITIVITY_TOL,
) -> np.ndarray:
    """Raise ``InvariantError`` unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvariantError(f"density matrix must be square, got shape {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise InvariantError(f"trace {tr} deviates from 1 by more than {trace_tol}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise InvariantError(f"non-Hermitian density matrix (max deviation {herm:.3e})")
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if lam[0] < -pos_tol:
        raise InvariantError(f"negative eigenvalue {lam[0]:.3e}")
    return rho


def nearest_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Project a Hermitian, unit-trace matrix onto the positive cone.

    Negative eigenvalues are clipped and the trace restored. Used for
    truncated perturbative states, which are only positive up to the
    neglected order.
    """
    h = (rho + rho.conj().T) / 2
    lam, vec = np.linalg.eigh(h)
    lam = np.clip(lam, 0.0, None)
    lam /= lam.sum()
    return (vec * lam) @ vec.conj().T
