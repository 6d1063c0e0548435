"""Generalized structure tests.

The 4x4 block matrices at n=1 are frozen by hand; spinor-kernel spans are
checked against explicitly listed generalized vectors, and the two
construction routes (block formula vs kernel of the spinor) must agree.
"""

import numpy as np
import pytest

from genkf.multivector import (
    GenVector,
    GradedForm,
    b_transform,
    exp_two_form,
    mukai_pair,
    neutral_pairing,
)
from genkf.structures import (
    GCStructure,
    GKPair,
    UDecomposition,
    classify_spinor,
    gcs_b_transform,
    gcs_complex,
    gcs_from_spinor,
    gcs_symplectic,
    gk_validate,
    spinor_kernel,
    spinor_line,
)

RNG = np.random.default_rng(515151)

J_STD = np.array([[0.0, -1.0], [1.0, 0.0]])  # J d1 = d2
OMEGA_STD = np.array([[0.0, 1.0], [-1.0, 0.0]])  # omega = dx1 ^ dx2


def random_omega(n, rng=RNG):
    """Random invertible antisymmetric matrix (a constant symplectic form)."""
    while True:
        m = rng.standard_normal((2 * n, 2 * n))
        m = m - m.T
        if abs(np.linalg.det(m)) > 1e-3:
            return m


def psi_from_omega(b, omega):
    return exp_two_form(GradedForm.from_two_form_matrix(b + 1j * omega))


def in_span(columns, vector, tol=1e-10):
    """Least-squares membership test."""
    sol, *_ = np.linalg.lstsq(columns, vector, rcond=None)
    return np.linalg.norm(columns @ sol - vector) < tol


# ---------------------------------------------------------------------------
# block constructors (frozen 4x4 matrices)


def test_gcs_complex_blocks():
    got = gcs_complex(J_STD).J
    expect = np.zeros((4, 4))
    expect[:2, :2] = J_STD
    expect[2:, 2:] = -J_STD.T
    assert np.allclose(got, expect)


def test_gcs_symplectic_blocks():
    got = gcs_symplectic(OMEGA_STD).J
    expect = np.zeros((4, 4))
    expect[:2, 2:] = -np.linalg.inv(OMEGA_STD)
    expect[2:, :2] = OMEGA_STD
    assert np.allclose(got, expect)
    # concrete entries, by hand from the -i eigenspace {d1 - i dx2, d2 + i dx1}
    assert np.allclose(
        got,
        np.array(
            [
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0, 0.0],
            ]
        ),
    )


@pytest.mark.parametrize("n", [1, 2])
def test_gcs_axioms_random_symplectic(n):
    for _ in range(5):
        s = gcs_symplectic(random_omega(n))
        assert s.square_defect() < 1e-10
        assert s.orthogonality_defect() < 1e-10


def test_gcs_rejects_non_square_root():
    with pytest.raises(ValueError):
        gcs_complex(np.array([[0.0, 2.0], [-1.0, 0.0]]))
    with pytest.raises(ValueError):
        GCStructure(np.eye(4))


# ---------------------------------------------------------------------------
# spinor kernels and classification


def test_kernel_of_dz():
    # ker(dx1 + i dx2) = span{d1 + i d2, dx1 + i dx2}
    phi = GradedForm.blade(1, (0,)) + 1j * GradedForm.blade(1, (1,))
    k = spinor_kernel(phi)
    assert k.shape == (4, 2)
    assert in_span(k, np.array([1.0, 1j, 0.0, 0.0]))
    assert in_span(k, np.array([0.0, 0.0, 1.0, 1j]))


def test_kernel_of_symplectic_exponential():
    # ker(e^{i omega}) = span{d1 - i dx2, d2 + i dx1}
    psi = psi_from_omega(np.zeros((2, 2)), OMEGA_STD)
    k = spinor_kernel(psi)
    assert k.shape == (4, 2)
    assert in_span(k, np.array([1.0, 0.0, 0.0, -1j]))
    assert in_span(k, np.array([0.0, 1.0, 1j, 0.0]))


def test_classify_types():
    psi = psi_from_omega(np.zeros((2, 2)), OMEGA_STD)
    c = classify_spinor(psi)
    assert c.is_pure and c.is_nondegenerate and c.type_number == 0
    phi = GradedForm.blade(1, (0,)) + 1j * GradedForm.blade(1, (1,))
    c = classify_spinor(phi)
    assert c.is_pure and c.is_nondegenerate and c.type_number == 1
    # real decomposable one-form: pure but degenerate (kernel equals its conjugate)
    c = classify_spinor(GradedForm.blade(1, (0,)))
    assert c.is_pure and not c.is_nondegenerate
    # non-pure: kernel too small
    c = classify_spinor(GradedForm.scalar(1, 1.0) + GradedForm.blade(1, (0,)))
    assert not c.is_pure and c.kernel_dim < 2


def test_kernel_isotropy_random():
    for n in (1, 2):
        psi = psi_from_omega(random_omega(n), random_omega(n))
        k = spinor_kernel(psi)
        assert k.shape[1] == 2 * n
        for i in range(2 * n):
            for j in range(2 * n):
                e1 = GenVector.from_array(k[:, i])
                e2 = GenVector.from_array(k[:, j])
                assert abs(neutral_pairing(e1, e2)) < 1e-10


# ---------------------------------------------------------------------------
# spinor <-> structure roundtrips


@pytest.mark.parametrize("n", [1, 2])
def test_symplectic_roundtrip(n):
    for _ in range(5):
        omega = random_omega(n)
        via_spinor = gcs_from_spinor(psi_from_omega(np.zeros_like(omega), omega))
        direct = gcs_symplectic(omega)
        assert np.max(np.abs(via_spinor.J - direct.J)) < 1e-9


def test_complex_roundtrip():
    phi = GradedForm.blade(1, (0,)) + 1j * GradedForm.blade(1, (1,))
    assert np.max(np.abs(gcs_from_spinor(phi).J - gcs_complex(J_STD).J)) < 1e-10


@pytest.mark.parametrize("n", [1, 2])
def test_spinor_line_roundtrip(n):
    omega = random_omega(n)
    b = random_omega(n)
    psi = psi_from_omega(b, omega)
    line = spinor_line(gcs_from_spinor(psi))
    assert np.max(np.abs(line.coeffs - psi.coeffs)) < 1e-8


def test_gcs_from_degenerate_spinor_rejected():
    with pytest.raises(ValueError):
        gcs_from_spinor(GradedForm.blade(1, (0,)))


# ---------------------------------------------------------------------------
# b-field transform


@pytest.mark.parametrize("n", [1, 2])
def test_b_transform_dual_route(n):
    # conjugating the structure matches transforming the spinor
    for _ in range(5):
        omega = random_omega(n)
        bmat = random_omega(n)
        psi = psi_from_omega(np.zeros_like(omega), omega)
        j0 = gcs_from_spinor(psi)
        route_matrix = gcs_b_transform(bmat, j0)
        route_spinor = gcs_from_spinor(
            b_transform(GradedForm.from_two_form_matrix(bmat), psi)
        )
        assert np.max(np.abs(route_matrix.J - route_spinor.J)) < 1e-8


# ---------------------------------------------------------------------------
# eigenspace decomposition of the spin representation


@pytest.mark.parametrize("n", [1, 2])
def test_u_decomposition_dimensions(n):
    from math import comb

    omega = random_omega(n)
    dec = UDecomposition(gcs_symplectic(omega))
    for k in range(-n, n + 1):
        assert dec.dimension(k) == comb(2 * n, k + n)


@pytest.mark.parametrize("n", [1, 2])
def test_u_decomposition_resolution_and_eigen(n):
    omega = random_omega(n)
    bmat = random_omega(n)
    psi = psi_from_omega(bmat, omega)
    j = gcs_from_spinor(psi)
    dec = UDecomposition(j)
    total = np.zeros((4**n, 4**n), dtype=complex)
    for k in range(-n, n + 1):
        p = dec.projector(k)
        # eigenprojector of the spin operator: op @ p = i k p
        assert np.max(np.abs(dec.operator @ p - 1j * k * p)) < 1e-8
        total += p
    assert np.max(np.abs(total - np.eye(4**n))) < 1e-8


@pytest.mark.parametrize("n", [1, 2])
def test_psi_line_is_lowest_eigenspace(n):
    omega = random_omega(n)
    psi = psi_from_omega(random_omega(n), omega)
    dec = UDecomposition(gcs_from_spinor(psi))
    proj = dec.project(-n, psi)
    assert np.max(np.abs(proj.coeffs - psi.coeffs)) < 1e-8
    for k in range(-n + 1, n + 1):
        assert dec.project(k, psi).norm() < 1e-8 * psi.norm()


def test_u_projection_mixes_only_adjacent_degrees():
    # U^{k} pairs only with U^{-k}: cross Mukai pairings vanish
    n = 2
    omega = random_omega(n)
    psi = psi_from_omega(np.zeros((4, 4)), omega)
    dec = UDecomposition(gcs_from_spinor(psi))
    rng = np.random.default_rng(7)
    a = GradedForm(n, rng.standard_normal(16) + 1j * rng.standard_normal(16))
    b = GradedForm(n, rng.standard_normal(16) + 1j * rng.standard_normal(16))
    for j in range(-n, n + 1):
        for k in range(-n, n + 1):
            val = mukai_pair(dec.project(j, a), dec.project(k, b))
            if j + k != 0:
                assert abs(val) < 1e-8


# ---------------------------------------------------------------------------
# compatible pairs


def kaehler_pair(n=1):
    if n == 1:
        return GKPair(gcs_complex(J_STD), gcs_symplectic(OMEGA_STD))
    j = np.kron(np.eye(n), J_STD)
    om = np.kron(np.eye(n), OMEGA_STD)
    return GKPair(gcs_complex(j), gcs_symplectic(om))


@pytest.mark.parametrize("n", [1, 2])
def test_kaehler_pair_valid(n):
    pair = kaehler_pair(n)
    rep = gk_validate(pair.J1, pair.J2)
    assert rep["commutator"] < 1e-12
    assert rep["metric_symmetry"] < 1e-12
    assert rep["metric_min_eigenvalue"] > 0
    assert rep["square_defect"] < 1e-12
    assert rep["valid"]


def test_gk_pair_eigenspace_dims():
    pair = kaehler_pair(1)
    assert pair.c_plus().shape[1] == 2
    assert pair.c_minus().shape[1] == 2
    lp, lm = pair.ell_plus(), pair.ell_minus()
    assert lp.shape[1] == 1 and lm.shape[1] == 1
    # ell_pm sit inside the -i eigenspaces of both structures
    for basis, sign in ((lp, 1.0), (lm, -1.0)):
        vec = basis[:, 0]
        assert np.linalg.norm(pair.J1.J @ vec + 1j * vec) < 1e-10
        ghat = pair.g_hat()
        assert np.linalg.norm(ghat @ vec - sign * vec) < 1e-10


def test_gk_pair_b_transform_stays_valid():
    pair = kaehler_pair(1)
    bmat = random_omega(1)
    j1 = gcs_b_transform(bmat, pair.J1)
    j2 = gcs_b_transform(bmat, pair.J2)
    rep = gk_validate(j1.J, j2.J)
    assert rep["valid"]


def test_noncommuting_pair_rejected():
    # in four dimensions a form with a (2,0)+(0,2) part fails to commute
    j1 = gcs_complex(np.kron(np.eye(2), J_STD))
    om = np.zeros((4, 4))
    om[0, 2] = om[3, 1] = 1.0
    om[2, 0] = om[1, 3] = -1.0
    j2 = gcs_symplectic(om)
    rep = gk_validate(j1.J, j2.J)
    assert rep["commutator"] > 0.5
    assert not rep["valid"]
    with pytest.raises(ValueError):
        GKPair(j1, j2)


def test_indefinite_pair_rejected():
    # J paired with itself commutes but G = J^2 = -1 has no positivity
    j1 = gcs_complex(J_STD)
    rep = gk_validate(j1, j1)
    assert rep["commutator"] < 1e-14
    assert rep["metric_min_eigenvalue"] < 0
    assert not rep["valid"]
