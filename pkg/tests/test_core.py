import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvent.core import (
    InvariantError,
    SpinSite,
    SiteLabel,
    SpinSystem,
    check_density_matrix,
    embed,
    ket2dm,
    nearest_density_matrix,
    partial_trace_to_qubits,
    plus_state,
    spin_operators,
)

import oracles


def test_spin_half_sz():
    _, _, sz = spin_operators(0.5)
    assert np.allclose(sz, np.diag([0.5, -0.5]))


def test_spin_one_sz():
    _, _, sz = spin_operators(1.0)
    assert np.allclose(sz, np.diag([1, 0, -1]))


@pytest.mark.parametrize("s", [0.5, 1.0])
def test_su2_algebra(s):
    sx, sy, sz = spin_operators(s)
    assert np.abs(sx @ sy - sy @ sx - 1j * sz).max() < 1e-14
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.allclose(casimir, s * (s + 1) * np.eye(int(2 * s + 1)))


def test_unsupported_spin():
    with pytest.raises(ValueError):
        spin_operators(1.5)


def test_embed_nv_sz_matches_kron(system):
    sz_nv = system.site_operators(1)[2]
    expected = np.kron(np.kron(np.eye(2), sz_nv), np.eye(2))
    assert np.array_equal(embed(sz_nv, 1, system), expected)


def test_embed_identity(system):
    assert np.array_equal(embed(np.eye(2), 0, system), np.eye(8))


def test_embed_trace_and_dimension_check():
    sys3 = SpinSystem.default(nv_two_level=False)
    op = np.diag([1.0, 2.0, 5.0])
    assert np.trace(embed(op, 1, sys3)) == pytest.approx(8 * 4)
    with pytest.raises(ValueError):
        embed(np.eye(2), 1, sys3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2), st.floats(-3, 3), st.integers(0, 10_000))
def test_embed_is_linear(site, scale, seed):
    system = SpinSystem.default()
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2))
    lhs = embed(a + scale * b, site, system)
    rhs = embed(a, site, system) + scale * embed(b, site, system)
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_two_level_nv_uses_m0_and_m_minus1(system):
    _, _, sz = system.site_operators(1)
    assert np.allclose(sz, np.diag([0, -1]))
    assert system.dims == (2, 2, 2)
    assert SpinSystem.default(nv_two_level=False).dim == 12


def test_site_invariants():
    with pytest.raises(ValueError):
        SpinSite(SiteLabel.QUBIT1, 0.5, 2.0, t2=0.0)
    with pytest.raises(ValueError):
        SpinSystem((SpinSite(SiteLabel.NV, 1.0), SpinSite(SiteLabel.QUBIT1, 0.5), SpinSite(SiteLabel.QUBIT2, 0.5)))


def test_dephasing_rate_is_two_over_t2():
    site = SpinSite(SiteLabel.NV, 1.0, 2.0, t2=2e-3, two_level=True)
    assert site.dephasing_rate == pytest.approx(1e3)
    assert SpinSite(SiteLabel.QUBIT1, 0.5).dephasing_rate == 0.0


def test_dipolar_constant_against_codata():
    c = SpinSystem.default().coupling(1, 0)
    assert c < 0
    assert c == pytest.approx(oracles.dipolar_constant(), rel=1e-8)


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(1)
    r1, rn, r2 = (oracles.random_density(2, rng) for _ in range(3))
    full = np.kron(np.kron(r1, rn), r2)
    assert np.allclose(partial_trace_to_qubits(full, SpinSystem.default()), np.kron(r1, r2), atol=1e-14)


def test_partial_trace_of_maximally_mixed():
    sys3 = SpinSystem.default(nv_two_level=False)
    out = partial_trace_to_qubits(np.eye(12) / 12, sys3)
    assert np.allclose(out, np.eye(4) / 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_partial_trace_linear_and_trace_preserving(seed, spin_one):
    system = SpinSystem.default(nv_two_level=not spin_one)
    rng = np.random.default_rng(seed)
    a = oracles.random_density(system.dim, rng)
    b = oracles.random_density(system.dim, rng)
    ta, tb = partial_trace_to_qubits(a, system), partial_trace_to_qubits(b, system)
    assert abs(np.trace(ta) - 1) < 1e-12
    assert np.allclose(partial_trace_to_qubits(0.3 * a + 0.7 * b, system), 0.3 * ta + 0.7 * tb, atol=1e-14)
    check_density_matrix(ta)


def test_plus_state_is_normalised_product(system):
    psi = plus_state(system)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert np.allclose(psi, np.full(8, 1 / math.sqrt(8)))


def test_check_density_matrix_rejections():
    good = np.eye(4) / 4
    check_density_matrix(good)
    with pytest.raises(InvariantError, match="trace"):
        check_density_matrix(good * 2)
    bad = good.astype(complex)
    bad[0, 1] = 0.1j
    with pytest.raises(InvariantError, match="Hermitian"):
        check_density_matrix(bad)
    with pytest.raises(InvariantError, match="negative"):
        check_density_matrix(np.diag([1.2, -0.2, 0, 0]))


def test_nearest_density_matrix_clips_negative_part():
    rho = np.diag([0.6, 0.45, -0.05, 0.0]).astype(complex)
    out = nearest_density_matrix(rho)
    check_density_matrix(out)
    assert np.allclose(np.diag(out).real, [0.6 / 1.05, 0.45 / 1.05, 0, 0])


def test_ket2dm_stacks():
    v = np.array([[1, 0], [0, 1j]])
    out = ket2dm(v)
    assert out.shape == (2, 2, 2)
    assert np.allclose(out[1], np.diag([0, 1]))
