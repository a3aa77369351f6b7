"""
Test deformed symplectic forms, dressing maps and commutator kernels
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.ncfields.errors import InvalidArgumentError
from src.ncfields.symplectic_core import (
    DeformationKind,
    DeformationParams,
    KernelKind,
    ModeSystem,
    SymplecticMatrix,
    build_canonical_form,
    build_deformed_form,
    commutator_kernel,
    complex_mode_coordinates,
    dressing_map,
    pullback_residual,
    quantum_commutator_matrix,
    real_mode_coordinates,
    sign_function,
    sign_kernel,
    smear,
)


def test_canonical_single_mode_block():
    """Test n_modes=1 gives [[0, I], [-I, 0]]"""
    form = build_canonical_form(1)
    expected = np.array([
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [-1, 0, 0, 0],
        [0, -1, 0, 0],
    ], dtype=float)
    assert_array_equal(form.omega, expected)
    assert form.bracket_entry("q1", "q2") == 0.0
    assert form.bracket_entry("q1", "p1") == 1.0
    assert form.bracket_entry("q2", "p2") == 1.0


def test_canonical_three_modes_antisymmetric():
    """Test n_modes=3 is a 12x12 block-diagonal antisymmetric form"""
    form = build_canonical_form(3)
    assert form.omega.shape == (12, 12)
    assert_array_equal(form.omega.T, -form.omega)
    assert_array_equal(form.omega[0:4, 4:8], np.zeros((4, 4)))
    assert_allclose(form.bracket.T @ form.omega, np.eye(12), atol=1e-12)


def test_zero_theta_matches_canonical():
    """Test both deformed kinds reduce to the canonical form at theta=0"""
    canonical = build_canonical_form(2)
    for kind in (DeformationKind.E_DEFORMED, DeformationKind.B_DEFORMED):
        form = build_deformed_form(DeformationParams(kind, 0.0), 2)
        assert_array_equal(form.omega, canonical.omega)
        assert_array_equal(form.bracket, canonical.bracket)


def test_e_deformed_brackets():
    """Test E-kind: {q1, q2} = -theta, {p, p} = 0, {q, p} = delta"""
    theta = 0.7
    form = build_deformed_form(DeformationParams.e_deformed(theta), 2)
    for n in (1, 2):
        assert form.bracket_entry("q1", "q2", n) == pytest.approx(-theta, abs=1e-12)
        assert form.bracket_entry("p1", "p2", n) == 0.0
        assert form.bracket_entry("q1", "p1", n) == 1.0
        assert form.bracket_entry("q1", "p2", n) == 0.0
    assert form.bracket_entry("q1", "q2", 1, 2) == 0.0


def test_b_deformed_brackets():
    """Test B-kind: {q, q} = 0, {p1, p2} = theta, {q, p} = delta"""
    theta = 0.7
    form = build_deformed_form(DeformationParams.b_deformed(theta), 1)
    assert form.bracket_entry("q1", "q2") == 0.0
    assert form.bracket_entry("p1", "p2") == pytest.approx(theta, abs=1e-12)
    assert form.bracket_entry("q2", "p2") == 1.0


def test_canonical_kind_ignores_theta():
    """Test the canonical kind behaves like theta=0"""
    params = DeformationParams(DeformationKind.CANONICAL, 3.0)
    assert params.effective_theta == 0.0
    assert_array_equal(build_deformed_form(params, 1).omega, build_canonical_form(1).omega)


def test_zero_mode_block():
    """Test the zero mode adds a leading 4x4 block"""
    system = ModeSystem(3, include_zero_mode=True)
    assert system.dim == 16
    assert system.modes == [0, 1, 2, 3]
    assert system.block_slice(2) == slice(8, 12)
    form = build_deformed_form(DeformationParams.e_deformed(1.0), 3, include_zero_mode=True)
    assert form.bracket_entry("q1", "q2", 0) == pytest.approx(-1.0)


def test_dressing_identity_at_zero_theta():
    """Test forward map is the identity at theta=0"""
    for kind in (DeformationKind.E_DEFORMED, DeformationKind.B_DEFORMED):
        dressing = dressing_map(DeformationParams(kind, 0.0), 2)
        assert_array_equal(dressing.forward, np.eye(8))


def test_dressing_maps_invert():
    """Test forward @ inverse = identity"""
    for params in (DeformationParams.e_deformed(2.5), DeformationParams.b_deformed(-1.5)):
        dressing = dressing_map(params, 3)
        assert_allclose(dressing.forward @ dressing.inverse, np.eye(12), atol=1e-12)


def test_e_dressing_gives_canonical_brackets():
    """Test transformed E-kind brackets {Q, Q} = 0 and {Q, P} = delta"""
    params = DeformationParams.e_deformed(1.3)
    form = build_deformed_form(params, 2)
    dressing = dressing_map(params, 2)
    transformed = dressing.forward @ form.bracket @ dressing.forward.T
    assert_allclose(transformed, build_canonical_form(2).bracket, atol=1e-12)


def test_b_dressing_example():
    """Test B-kind theta=2 maps (1, 0, 0, 0) to (1, 0, 0, 1)"""
    dressing = dressing_map(DeformationParams.b_deformed(2.0), 1)
    assert_allclose(dressing.apply([1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.0, 0.1, 1.0, 10.0, -0.5, -3.0])
@pytest.mark.parametrize("n_modes", [1, 4, 8])
def test_pullback_residual(kind, theta, n_modes):
    """Test the dressed deformed form is canonical to 1e-12"""
    residual = pullback_residual(DeformationParams(kind, theta), n_modes)
    assert residual < 1e-12
    if theta == 0.0:
        assert residual == 0.0


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.1, 1.0, 2.5])
@pytest.mark.parametrize("n_modes", [1, 3])
def test_theta_sign_negates_deformation(kind, theta, n_modes):
    """Test flipping theta negates the deformation part of omega and the bracket"""
    canonical = build_canonical_form(n_modes)
    positive = build_deformed_form(DeformationParams(kind, theta), n_modes)
    negative = build_deformed_form(DeformationParams(kind, -theta), n_modes)
    assert_array_equal(negative.omega - canonical.omega, -(positive.omega - canonical.omega))
    assert_array_equal(negative.bracket - canonical.bracket, -(positive.bracket - canonical.bracket))


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, -2.0])
def test_b_and_e_deformations_are_dual(theta):
    """Test the B-kind q-q block of omega is the negated E-kind p-p block"""
    e_form = build_deformed_form(DeformationParams.e_deformed(theta), 2)
    b_form = build_deformed_form(DeformationParams.b_deformed(theta), 2)
    for n in (1, 2):
        block = e_form.system.block_slice(n)
        e_omega = e_form.omega[block, block]
        b_omega = b_form.omega[block, block]
        assert_array_equal(b_omega[:2, :2], -e_omega[2:, 2:])
        assert_array_equal(b_omega[:2, 2:], e_omega[:2, 2:])
        assert_array_equal(b_form.bracket[block, block][2:, 2:], -e_form.bracket[block, block][:2, :2])


def test_quantum_commutator_matrix():
    """Test [xi_I, xi_J] = i C_IJ entries"""
    canonical = quantum_commutator_matrix(DeformationParams.canonical(), 1)
    assert_array_equal(canonical, build_canonical_form(1).bracket)

    e_matrix = quantum_commutator_matrix(DeformationParams.e_deformed(0.5), 2)
    assert e_matrix[0, 1] == pytest.approx(-0.5)
    assert e_matrix[4, 5] == pytest.approx(-0.5)

    b_matrix = quantum_commutator_matrix(DeformationParams.b_deformed(0.5), 1)
    assert b_matrix[2, 3] == pytest.approx(0.5)


def test_symplectic_matrix_rejects_bad_input():
    """Test non-antisymmetric and degenerate omegas are rejected"""
    with pytest.raises(InvalidArgumentError):
        SymplecticMatrix.from_omega(np.eye(2))
    with pytest.raises(InvalidArgumentError):
        SymplecticMatrix.from_omega(np.zeros((4, 4)))
    with pytest.raises(InvalidArgumentError):
        build_canonical_form(0)


def test_symplectic_matrix_is_read_only():
    """Test stored arrays cannot be modified"""
    form = build_canonical_form(1)
    with pytest.raises(ValueError):
        form.omega[0, 0] = 1.0


def test_deformation_params_validation():
    """Test non-finite theta and unknown kinds raise"""
    with pytest.raises(InvalidArgumentError):
        DeformationParams.e_deformed(float("inf"))
    with pytest.raises(InvalidArgumentError):
        DeformationParams("X", 1.0)
    assert DeformationParams("b", 1.0).kind is DeformationKind.B_DEFORMED


def test_real_mode_coordinates():
    """Test complex modes split into sqrt(2) * (Re, Im) sectors"""
    q_n = (1.0 + 2.0j, -0.5j)
    p_n = (0.25, 3.0 - 1.0j)
    x_sector, y_sector = real_mode_coordinates(q_n, p_n)
    assert_allclose(x_sector, np.sqrt(2.0) * np.array([1.0, 0.0, 0.25, 3.0]))
    assert_allclose(y_sector, np.sqrt(2.0) * np.array([2.0, -0.5, 0.0, -1.0]))

    q_back, p_back = complex_mode_coordinates(x_sector, y_sector)
    assert_allclose(q_back, q_n)
    assert_allclose(p_back, p_n)


def test_phi_phi_kernel_vanishes_canonically():
    """Test canonical fields commute"""
    x = np.linspace(0.0, 6.0, 7)
    y = np.linspace(0.3, 5.3, 7)
    kernel = commutator_kernel(DeformationParams.canonical(), x, y, 50, KernelKind.PHI_PHI)
    assert_array_equal(kernel, np.zeros(7))


def test_phi_pi_kernel_smears_to_delta():
    """Test the phi-pi kernel integrates to i f(x) delta_ij at n_max=200"""
    x = 0.7
    f = lambda y: np.exp(np.cos(y))
    params = DeformationParams.e_deformed(0.3)

    diagonal = smear(lambda y: commutator_kernel(params, x, y, 200, KernelKind.PHI_PI), f)
    assert abs(diagonal - 1j * f(x)) < 1e-3

    off_diagonal = smear(lambda y: commutator_kernel(params, x, y, 200, KernelKind.PHI_PI, i=1, j=2), f)
    assert abs(off_diagonal) < 1e-12


def test_pi_pi_kernel_b_deformed():
    """Test the B-kind pi-pi kernel integrates to i theta f(x)"""
    x, theta = 2.1, 0.5
    f = lambda y: np.exp(np.cos(y))
    params = DeformationParams.b_deformed(theta)
    value = smear(lambda y: commutator_kernel(params, x, y, 200, KernelKind.PI_PI), f)
    assert abs(value - 1j * theta * f(x)) < 1e-3


def test_phi_phi_kernel_e_deformed():
    """Test the E-kind phi-phi kernel integrates to -i theta f(x)"""
    x, theta = 4.0, 0.8
    f = lambda y: np.exp(np.cos(y))
    params = DeformationParams.e_deformed(theta)
    value = smear(lambda y: commutator_kernel(params, x, y, 200, KernelKind.PHI_PHI), f)
    assert abs(value + 1j * theta * f(x)) < 1e-3


def test_sign_kernel_converges():
    """Test the truncated sign kernel approaches the odd sign function"""
    u = np.array([-2.0, -1.0, 1.0, 2.0])
    assert_allclose(sign_function(u), -sign_function(-u))
    assert sign_function(1.0) == pytest.approx(0.5 - 1.0 / (2.0 * np.pi))
    assert_allclose(sign_kernel(u, 2000).real, sign_function(u), atol=1e-3)
    assert_allclose(sign_kernel(u, 2000).imag, 0.0, atol=1e-12)
