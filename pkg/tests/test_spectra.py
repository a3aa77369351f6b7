"""
Test dressed Hamiltonians, closed-form spectra and the eigen-oracle
"""

import math

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.ncfields.errors import InvalidArgumentError
from src.ncfields.spectra import (
    OracleAssembly,
    Splitting,
    SpectrumSource,
    closed_form_spectrum,
    hamiltonian_matrix,
    ladder_frequency,
    mode_coefficients,
    normal_mode_trajectory,
    oracle_spectrum,
    SOURCE_COLUMNS,
    spectrum_rows,
    spectrum_table,
    trajectory_residual,
)
from src.ncfields.symplectic_core import DeformationKind, DeformationParams

SQRT5_HALF = math.sqrt(5.0) / 2.0


def test_undeformed_hamiltonian():
    """Test theta=0, n=2 gives M = diag(4, 4, 1, 1)"""
    h = hamiltonian_matrix(DeformationParams.e_deformed(0.0), 2)
    assert_array_equal(h.h_matrix, np.diag([4.0, 4.0, 1.0, 1.0]))


def test_zero_mode_hamiltonian():
    """Test n=0 keeps only the P-P entries"""
    h = hamiltonian_matrix(DeformationParams.e_deformed(1.0), 0)
    assert_array_equal(h.qq, np.zeros((2, 2)))
    assert_array_equal(h.qp, np.zeros((2, 2)))
    assert_array_equal(h.pp, np.eye(2))
    assert h.energy([0.0, 0.0, 1.0, 1.0]) == pytest.approx(1.0)


def test_e_kind_pp_coefficient():
    """Test E-kind n=1 theta=1 has P-P coefficient 5/4"""
    h = hamiltonian_matrix(DeformationParams.e_deformed(1.0), 1)
    assert_allclose(h.pp, 1.25 * np.eye(2))
    assert_allclose(h.qp, 0.5 * np.array([[0.0, 1.0], [-1.0, 0.0]]))


@pytest.mark.parametrize("kind", ["E", "B"])
def test_hamiltonian_positive_semidefinite(kind):
    """Test M is symmetric and bounded below"""
    for theta in (-3.0, 0.0, 0.5, 2.0):
        for n in (0, 1, 4):
            h = hamiltonian_matrix(DeformationParams(kind, theta), n)
            assert_array_equal(h.h_matrix, h.h_matrix.T)
            assert np.linalg.eigvalsh(h.h_matrix).min() >= -1e-12


def test_negative_mode_rejected():
    """Test negative mode indices raise"""
    with pytest.raises(InvalidArgumentError):
        hamiltonian_matrix(DeformationParams.e_deformed(1.0), -1)
    with pytest.raises(InvalidArgumentError):
        closed_form_spectrum(DeformationParams.e_deformed(1.0), 0)


@pytest.mark.parametrize("kind", ["E", "B"])
def test_zero_theta_degenerate(kind):
    """Test theta=0 gives omega+ = omega- = |n|"""
    for n in (1, 2, 5, -3):
        result = closed_form_spectrum(DeformationParams(kind, 0.0), n)
        assert result.omega_minus == pytest.approx(abs(n))
        assert result.omega_plus == pytest.approx(abs(n))
        assert result.source is SpectrumSource.CLOSED_FORM


def test_e_kind_closed_form():
    """Test E-kind n=1 theta=1 under both splittings"""
    params = DeformationParams.e_deformed(1.0)
    exact = closed_form_spectrum(params, 1)
    assert exact.omega_plus == pytest.approx(SQRT5_HALF + 0.5, abs=1e-12)
    assert exact.omega_minus == pytest.approx(SQRT5_HALF - 0.5, abs=1e-12)

    doubled = closed_form_spectrum(params, 1, Splitting.DOUBLED)
    assert doubled.omega_plus == pytest.approx(2.1180, abs=1e-4)
    assert doubled.omega_minus == pytest.approx(0.1180, abs=1e-4)


def test_b_kind_closed_form():
    """Test B-kind n=1 theta=1 gives sqrt(5)/2 +- 1/2"""
    result = closed_form_spectrum(DeformationParams.b_deformed(1.0), 1)
    assert result.omega_plus == pytest.approx(1.6180, abs=1e-4)
    assert result.omega_minus == pytest.approx(0.6180, abs=1e-4)
    assert result.gap == pytest.approx(1.0)


def test_e_kind_gap():
    """Test the E-kind gap is theta n^2 (exact) or 2 theta n^2 (doubled)"""
    params = DeformationParams.e_deformed(0.3)
    assert closed_form_spectrum(params, 3).gap == pytest.approx(0.3 * 9)
    assert closed_form_spectrum(params, 3, Splitting.DOUBLED).gap == pytest.approx(0.6 * 9)
    assert ladder_frequency(params, 3) == pytest.approx(1.5 * math.sqrt(4.0 + 0.81))


def test_doubled_splitting_instability():
    """Test theta=2, n=2 flags an unstable mode only with the doubled splitting"""
    params = DeformationParams.e_deformed(2.0)
    assert closed_form_spectrum(params, 2).stable
    doubled = closed_form_spectrum(params, 2, Splitting.DOUBLED)
    assert not doubled.stable
    assert doubled.omega_minus < 0


def test_oracle_zero_theta():
    """Test oracle frequencies equal |n| at theta=0"""
    for n in (1, 3):
        result = oracle_spectrum(DeformationParams.b_deformed(0.0), n)
        assert result.omega_minus == pytest.approx(n, abs=1e-12)
        assert result.omega_plus == pytest.approx(n, abs=1e-12)
        assert result.source is SpectrumSource.ORACLE


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.1, 1.0, 3.0, -1.0])
@pytest.mark.parametrize("n", [1, 2, 5])
def test_oracle_matches_closed_form(kind, theta, n):
    """Test closed form agrees with the eigen-oracle to 1e-10"""
    params = DeformationParams(kind, theta)
    closed = closed_form_spectrum(params, n)
    oracle = oracle_spectrum(params, n)
    assert oracle.omega_minus == pytest.approx(closed.omega_minus, abs=1e-10)
    assert oracle.omega_plus == pytest.approx(closed.omega_plus, abs=1e-10)
    assert oracle.stable
    assert not oracle.degenerate


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.1, 1.0, 3.0])
@pytest.mark.parametrize("n", [1, 2, 5])
def test_oracle_assembly_paths_agree(kind, theta, n):
    """Test deformed bracket with M0 and canonical bracket with dressed M agree"""
    params = DeformationParams(kind, theta)
    undressed = oracle_spectrum(params, n, OracleAssembly.UNDRESSED)
    dressed = oracle_spectrum(params, n, OracleAssembly.DRESSED)
    assert dressed.omega_minus == pytest.approx(undressed.omega_minus, abs=1e-10)
    assert dressed.omega_plus == pytest.approx(undressed.omega_plus, abs=1e-10)


def test_mode_coefficients():
    """Test Delta_n and Lambda+- at the documented points"""
    unit = mode_coefficients(DeformationParams.e_deformed(0.0), 1)
    assert unit.delta_n == pytest.approx(1.0)
    assert unit.lambda_plus == pytest.approx(1.0)
    assert unit.lambda_minus == pytest.approx(1.0)

    fourth = mode_coefficients(DeformationParams.e_deformed(0.0), 4)
    assert fourth.delta_n == pytest.approx(4.0)
    assert fourth.lambda_plus == pytest.approx(0.5)

    deformed = mode_coefficients(DeformationParams.e_deformed(1.0), 1)
    assert deformed.delta_n == pytest.approx(2.0 / math.sqrt(5.0))
    assert deformed.lambda_plus > deformed.lambda_minus > 0


def test_mode_coefficients_b_kind_rejected():
    """Test mode_coefficients is E-kind only"""
    with pytest.raises(InvalidArgumentError):
        mode_coefficients(DeformationParams.b_deformed(1.0), 1)


def test_zero_amplitudes_trajectory():
    """Test zero amplitudes give the zero trajectory"""
    t = np.linspace(0.0, 5.0, 11)
    q1, q2 = normal_mode_trajectory(DeformationParams.e_deformed(1.0), 1, [0, 0, 0, 0], t)
    assert_array_equal(q1, np.zeros(11))
    assert_array_equal(q2, np.zeros(11))


def test_undeformed_trajectory_oscillates_at_n():
    """Test theta=0 trajectories oscillate at |n|"""
    t = np.linspace(0.0, 3.0, 7)
    q1, q2 = normal_mode_trajectory(DeformationParams.e_deformed(0.0), 2, [1, 0, 0, 0], t)
    amplitude = 0.5 / math.sqrt(2.0)
    assert_allclose(q1, amplitude * np.exp(-2j * t))
    assert_allclose(q2, 1j * amplitude * np.exp(-2j * t))


def test_e_kind_branch_frequency():
    """Test the A1 branch has q2 = i q1 and rotates at omega+"""
    params = DeformationParams.e_deformed(1.0)
    coefficients = mode_coefficients(params, 1)
    omega_plus = closed_form_spectrum(params, 1).omega_plus
    q1, q2 = normal_mode_trajectory(params, 1, [1, 0, 0, 0], 0.8)
    assert q1 == pytest.approx(0.5 * coefficients.lambda_plus * np.exp(-0.8j * omega_plus))
    assert q2 == pytest.approx(1j * q1)


@pytest.mark.parametrize("kind", ["E", "B"])
def test_trajectory_solves_equations_of_motion(kind):
    """Test the normal-mode trajectory residual is below 1e-10"""
    times = np.linspace(0.0, 10.0, 41)
    params = DeformationParams(kind, 1.0)
    assert trajectory_residual(params, 1, [1, 0, 0, 0], times) < 1e-10
    mixed = [0.3 + 0.1j, -0.2, 0.5j, 0.4]
    assert trajectory_residual(params, 2, mixed, times) < 1e-10


def test_spectrum_table_rows_and_workers():
    """Test one theta-major row per (theta, n), independent of worker count"""
    single = spectrum_table(DeformationKind.B_DEFORMED, [0.0, 1.0], [1, 2, 3], workers=1)
    pooled = spectrum_table(DeformationKind.B_DEFORMED, [0.0, 1.0], [1, 2, 3], workers=4)
    assert len(single) == 6
    assert list(single["theta"]) == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    assert list(single["n"]) == [1, 2, 3, 1, 2, 3]
    assert single["deviation"].max() < 1e-10
    pd.testing.assert_frame_equal(single, pooled)


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.0, 0.1, 0.5, 1.0])
@pytest.mark.parametrize("n", range(1, 9))
def test_closed_form_matches_oracle_on_sweep_grid(kind, theta, n):
    """Test closed form and oracle agree to 1e-10 on the default sweep grid"""
    params = DeformationParams(kind, theta)
    closed = closed_form_spectrum(params, n)
    oracle = oracle_spectrum(params, n)
    assert abs(closed.omega_minus - oracle.omega_minus) <= 1e-10
    assert abs(closed.omega_plus - oracle.omega_plus) <= 1e-10
    assert closed.stable


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.1, 0.5, 1.0, 3.0])
@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_theta_sign_swaps_branches(kind, theta, n):
    """Test omega+(theta) = omega-(-theta) and omega-(theta) = omega+(-theta)"""
    positive = closed_form_spectrum(DeformationParams(kind, theta), n)
    negative = closed_form_spectrum(DeformationParams(kind, -theta), n)
    assert abs(positive.omega_plus - negative.omega_minus) <= 1e-12
    assert abs(positive.omega_minus - negative.omega_plus) <= 1e-12


@pytest.mark.parametrize("kind", ["E", "B"])
@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0, -1.0])
@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_negative_mode_index_symmetry(kind, theta, n):
    """Test omega+-(n) = omega+-(-n) for the closed form and the oracle"""
    params = DeformationParams(kind, theta)
    for spectrum in (closed_form_spectrum, oracle_spectrum):
        positive = spectrum(params, n)
        negative = spectrum(params, -n)
        assert abs(positive.omega_minus - negative.omega_minus) <= 1e-12
        assert abs(positive.omega_plus - negative.omega_plus) <= 1e-12
        assert negative.n == n


@pytest.mark.parametrize("source", [SpectrumSource.CLOSED_FORM, SpectrumSource.ORACLE])
def test_spectrum_rows_single_source(source):
    """Test single-source rows carry their source tag and match the comparison table"""
    frame = spectrum_rows(DeformationKind.E_DEFORMED, [0.0, 1.0], [1, 2], source=source)
    assert list(frame.columns) == SOURCE_COLUMNS
    assert list(frame["source"]) == [source.value] * 4
    assert list(frame["n"]) == [1, 2, 1, 2]
    reference = spectrum_table(DeformationKind.E_DEFORMED, [0.0, 1.0], [1, 2])
    prefix = "omega" if source is SpectrumSource.CLOSED_FORM else "oracle"
    assert_allclose(frame["omega_minus"], reference[f"{prefix}_minus"], atol=1e-12)
    assert_allclose(frame["omega_plus"], reference[f"{prefix}_plus"], atol=1e-12)
    pooled = spectrum_rows(DeformationKind.E_DEFORMED, [0.0, 1.0], [1, 2], source=source, workers=3)
    pd.testing.assert_frame_equal(frame, pooled)


def test_spectrum_result_as_row():
    """Test as_row gives plain values with the source as its label"""
    row = closed_form_spectrum(DeformationParams.b_deformed(1.0), 1).as_row()
    assert row["source"] == "closed_form"
    assert row["kind"] == "B"
    assert row["omega_plus"] == pytest.approx((math.sqrt(5.0) + 1.0) / 2.0)
    assert set(SOURCE_COLUMNS) <= set(row)
