"""Independent reference computations used by the tests.

Nothing here imports the package; each oracle is written from the defining
formula by a different route than the library uses.
"""
import math

import numpy as np

# CODATA 2018, typed in by hand
MU0 = 1.25663706212e-6
MU_B = 9.2740100783e-24
HBAR = 1.054571817e-34

SY = np.array([[0, -1j], [1j, 0]])
SYSY = np.kron(SY, SY)


def dipolar_constant(moment_bohr=2.0):
    """C = -(mu0/4pi) mu^2 / hbar in rad s^-1 m^3."""
    return -MU0 / (4 * math.pi) * (moment_bohr * MU_B) ** 2 / HBAR


def alpha(delta):
    return 2 * dipolar_constant() / delta**3


def wootters_eigen(rho):
    """Concurrence from square roots of the spectrum of rho (sy sy) rho* (sy sy)."""
    rt = SYSY @ rho.conj() @ SYSY
    lam = np.linalg.eigvals(rho @ rt)
    lam = np.sort(np.sqrt(np.clip(lam.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def binary_entropy(x):
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def ef_of_concurrence(c):
    return binary_entropy(0.5 + 0.5 * math.sqrt(max(0.0, 1 - c * c)))


def werner_like(p):
    """p |psi+><psi+| + (1-p) I/4 with psi+ = (|01> + |10>)/sqrt 2."""
    v = np.array([0, 1, 1, 0]) / math.sqrt(2)
    return p * np.outer(v, v) + (1 - p) * np.eye(4) / 4


def ppt_entangled(rho):
    """Peres-Horodecki: negative partial transpose eigenvalue."""
    r = rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    return np.linalg.eigvalsh(r).min() < -1e-12


def taylor_coefficients(f, h=1e-3):
    """First and second derivative at 0 by five-point central differences."""
    f1 = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
    f2 = (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)
    return f1, f2


def expm_hermitian(h, t):
    """exp(-i h t) by scipy's Pade algorithm (different route from eigh)."""
    from scipy.linalg import expm

    return expm(-1j * h * t)


def random_density(n, rng, rank=None):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
