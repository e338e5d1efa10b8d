import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinboson.errors import InvalidDimensionError, NotPSDError, TruncationError
from spinboson.operators import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    dag,
    displacement,
    embed,
    expm,
    expm_hermitian,
    fock_annihilate,
    fock_create,
    herm_sqrt,
    interior_max_diff,
    is_unitary,
    number_op,
    parity,
    squeeze,
)


def test_annihilator_smallest():
    np.testing.assert_array_equal(fock_annihilate(2), [[0, 1], [0, 0]])


@pytest.mark.parametrize("N", [2, 5, 17])
def test_annihilator_entries_exact(N):
    a = fock_annihilate(N)
    for m in range(N - 1):
        assert a[m, m + 1] == np.sqrt(m + 1)
    mask = np.ones((N, N), bool)
    mask[np.arange(N - 1), np.arange(1, N)] = False
    assert not np.any(a[mask])
    # sqrt(m)^2 is m only to rounding
    np.testing.assert_allclose(dag(a) @ a, np.diag(np.arange(N)), atol=1e-12)


def test_creation_acts_exactly():
    N = 9
    ad = fock_create(N)
    for m in range(N - 1):
        v = np.zeros(N)
        v[m] = 1
        out = ad @ v
        assert out[m + 1] == np.sqrt(m + 1)
        assert np.count_nonzero(out) == 1


def test_truncation_edge_commutator():
    N = 7
    a = fock_annihilate(N)
    comm = a @ dag(a) - dag(a) @ a
    expected = np.eye(N)
    expected[-1, -1] -= N
    np.testing.assert_allclose(comm, expected, atol=0)


@pytest.mark.parametrize("N", [0, 1, 1.5])
def test_bad_dimension(N):
    with pytest.raises(InvalidDimensionError):
        fock_annihilate(N)


def test_displacement_zero_is_identity():
    np.testing.assert_allclose(displacement(0, 10), np.eye(10), atol=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 1.0 + 0.5j, -1.2j, 2.0])
def test_displacement_vacuum_overlap(alpha):
    N = 40
    assert abs(alpha) ** 2 <= N / 4
    D = displacement(alpha, N)
    assert abs(abs(D[0, 0]) - np.exp(-abs(alpha) ** 2 / 2)) < 1e-8
    assert is_unitary(D)


def test_displacement_inverse_on_interior():
    N, alpha = 40, 1.1 - 0.4j
    keep = N - int(np.ceil(4 * abs(alpha) ** 2))
    prod = displacement(alpha, N) @ displacement(-alpha, N)
    assert np.max(np.abs(prod - np.eye(N))[:keep, :keep]) < 1e-9


def test_squeeze_identity_and_inverse():
    N = 40
    np.testing.assert_allclose(squeeze(0.0, N), np.eye(N), atol=1e-14)
    prod = squeeze(0.3, N) @ squeeze(-0.3, N)
    assert np.max(np.abs(prod - np.eye(N))[: N // 2, : N // 2]) < 1e-9


@pytest.mark.parametrize("z", [-0.3, 0.1, 0.25])
def test_squeeze_bogoliubov_scaling(z):
    # brute force: <0|S^† x^2 S|0> for x = a + a^†, compared with the vacuum value 1
    N = 50
    a = fock_annihilate(N)
    x = a + dag(a)
    S = squeeze(z, N)
    val = (dag(S) @ x @ x @ S)[0, 0].real
    assert val == pytest.approx(np.exp(2 * z) * (x @ x)[0, 0].real, rel=1e-10)


def test_squeeze_truncation_guard():
    with pytest.raises(TruncationError):
        squeeze(1.5, 8)
    with pytest.raises(InvalidDimensionError):
        squeeze(0.1, 3)


def test_embed_identities():
    N = 6
    a = fock_annihilate(N)
    np.testing.assert_array_equal(embed(np.eye(2), np.eye(N)), np.eye(2 * N))
    np.testing.assert_array_equal(embed(SIGMA_Z, None, N) @ embed(None, a), embed(SIGMA_Z, a))
    assert np.trace(embed(SIGMA_Z, number_op(N))) == 0
    with pytest.raises(InvalidDimensionError):
        embed(SIGMA_Z, np.eye(3), N=4)
    with pytest.raises(InvalidDimensionError):
        embed(np.eye(3), np.eye(2))
    with pytest.raises(InvalidDimensionError):
        embed(SIGMA_Z, None)


def test_spin_ladder_completeness():
    np.testing.assert_array_equal(SIGMA_PLUS @ SIGMA_MINUS + SIGMA_MINUS @ SIGMA_PLUS, np.eye(2))


def test_kron_associativity():
    rng = np.random.default_rng(1)
    A, B, C = (rng.integers(-5, 6, size=(2, 2)) for _ in range(3))
    np.testing.assert_array_equal(np.kron(np.kron(A, B), C), np.kron(A, np.kron(B, C)))


def test_herm_sqrt_examples():
    np.testing.assert_allclose(herm_sqrt(np.eye(3)), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(herm_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    with pytest.raises(NotPSDError):
        herm_sqrt(np.diag([1.0, -0.1]))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=2**31 - 1))
def test_herm_sqrt_random_psd(d, seed):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    A = G @ dag(G)
    B = herm_sqrt(A)
    assert np.max(np.abs(B @ B - A)) <= 1e-9 * np.max(np.abs(A))
    # idempotence on an explicit square
    np.testing.assert_allclose(herm_sqrt(B @ B), B, atol=1e-8 * max(1, np.max(np.abs(B))))


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=20), st.floats(min_value=0.01, max_value=1e3))
def test_expm_unitary(d, t):
    rng = np.random.default_rng(d)
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (G + dag(G)) / 2
    H /= np.linalg.norm(H, 2)  # ||H|| t <= 1e3
    assert is_unitary(expm_hermitian(H, t))
    assert is_unitary(expm(-1j * H * t))


def test_expm_general_matches_scipy_route():
    A = np.array([[0.1, 1.0], [0.0, -0.3]], dtype=complex)
    from scipy.linalg import expm as sexpm

    np.testing.assert_allclose(expm(A), sexpm(A), atol=1e-14)


def test_parity_and_interior_diff():
    N = 6
    P = parity(N)
    np.testing.assert_allclose(P @ P, np.eye(2 * N), atol=1e-14)
    A = np.eye(2 * N)
    B = A.copy()
    B[N - 1, N - 1] = 5
    assert interior_max_diff(A, B, N - 1) == 0
    assert interior_max_diff(A, B, N) == 4
