"""
Dressed quadratic Hamiltonians, closed-form deformed spectra and the eigen-oracle.

The undeformed mode Hamiltonian is H = 1/2 (n^2 |q|^2 + |p|^2), i.e.
M0 = diag(n^2, n^2, 1, 1) in (q1, q2, p1, p2). Frequencies of a mode are
the imaginary parts of the eigenvalues of K = bracket @ M, computed either
from the deformed bracket with M0 ("undressed") or from the canonical
bracket with the dressed M ("dressed").

Usage:
    from ncfields.spectra import closed_form_spectrum, oracle_spectrum

    params = DeformationParams.b_deformed(1.0)
    closed_form_spectrum(params, 1).omega_plus   # 1.618...
    oracle_spectrum(params, 1).omega_plus        # same to 1e-10
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import get_config
from .errors import InvalidArgumentError
from .symplectic_core import (
    EPSILON,
    IDENTITY_2,
    DeformationKind,
    DeformationParams,
    bracket_block,
)

logger = logging.getLogger(__name__)


class Splitting(Enum):
    """
    Size of the E-kind level splitting in the closed form.

    EXACT uses +-theta n^2 / 2, which is what the deformed brackets produce.
    DOUBLED uses +-theta n^2; it disagrees with the oracle by theta n^2 / 2
    and has omega_minus < 0 once theta^2 n^2 > 4/3.
    """

    EXACT = "exact"
    DOUBLED = "doubled"


class SpectrumSource(Enum):
    CLOSED_FORM = "closed_form"
    ORACLE = "oracle"


class OracleAssembly(Enum):
    UNDRESSED = "undressed"   # deformed bracket, free Hamiltonian
    DRESSED = "dressed"       # canonical bracket, dressed Hamiltonian


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """H = 1/2 xi^T M xi for one mode, in dressed coordinates (Q1, Q2, P1, P2)."""

    mode_index: int
    h_matrix: np.ndarray

    def __post_init__(self):
        if not np.array_equal(self.h_matrix, self.h_matrix.T):
            raise InvalidArgumentError("Hamiltonian matrix is not symmetric")
        self.h_matrix.setflags(write=False)

    def energy(self, state: Iterable[float]) -> float:
        xi = np.asarray(state, dtype=float)
        return float(0.5 * xi @ self.h_matrix @ xi)

    @property
    def qq(self) -> np.ndarray:
        return self.h_matrix[:2, :2]

    @property
    def pp(self) -> np.ndarray:
        return self.h_matrix[2:, 2:]

    @property
    def qp(self) -> np.ndarray:
        return self.h_matrix[:2, 2:]


@dataclass(frozen=True)
class SpectrumResult:
    """Frequency pair of one mode with its provenance."""

    kind: str
    theta: float
    n: int
    omega_minus: float
    omega_plus: float
    source: SpectrumSource
    stable: bool = True
    degenerate: bool = False

    @property
    def gap(self) -> float:
        return self.omega_plus - self.omega_minus

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row["source"] = self.source.value
        return row


@dataclass(frozen=True)
class ModeCoefficients:
    n: int
    lambda_plus: float
    lambda_minus: float
    delta_n: float


# ============================================================================
# Hamiltonians
# ============================================================================

def _check_mode(n: int, allow_zero: bool) -> int:
    if int(n) != n:
        raise InvalidArgumentError(f"Mode index must be an integer, got {n}")
    n = int(n)
    if n < 0 or (n == 0 and not allow_zero):
        lowest = 0 if allow_zero else 1
        raise InvalidArgumentError(f"Mode index must be >= {lowest}, got {n} (use |n|)")
    return n


def free_hamiltonian_matrix(n: int) -> np.ndarray:
    """M0 = diag(n^2, n^2, 1, 1), the undeformed mode Hamiltonian."""
    n2 = float(n) ** 2
    return np.diag([n2, n2, 1.0, 1.0])


def hamiltonian_matrix(params: DeformationParams, n: int) -> QuadraticHamiltonian:
    """
    Mode Hamiltonian in dressed coordinates.

    E-kind: Q-Q n^2, P-P (1 + theta^2 n^2 / 4), Q-P block n^2 theta eps / 2.
    B-kind: Q-Q (n^2 + theta^2 / 4), P-P 1, Q-P block -theta eps / 2.
    The cross blocks carry the full cross term once both orderings of
    1/2 xi^T M xi are counted.
    """
    n = _check_mode(n, allow_zero=True)
    theta = params.effective_theta
    n2 = float(n) ** 2

    if params.kind is DeformationKind.B_DEFORMED:
        qq = (n2 + 0.25 * theta ** 2) * IDENTITY_2
        pp = IDENTITY_2
        qp = -0.5 * theta * EPSILON
    else:
        qq = n2 * IDENTITY_2
        pp = (1.0 + 0.25 * theta ** 2 * n2) * IDENTITY_2
        qp = 0.5 * n2 * theta * EPSILON

    h_matrix = np.block([[qq, qp], [qp.T, pp]]) + 0.0
    return QuadraticHamiltonian(mode_index=n, h_matrix=h_matrix)


def ladder_frequency(params: DeformationParams, n: int) -> float:
    """Centre of the split pair: (|n|/2) sqrt(4 + theta^2 n^2) or sqrt(4 n^2 + theta^2)/2."""
    theta = params.effective_theta
    if params.kind is DeformationKind.B_DEFORMED:
        return 0.5 * math.sqrt(4.0 * n * n + theta * theta)
    return 0.5 * abs(n) * math.sqrt(4.0 + theta * theta * n * n)


# ============================================================================
# Spectra
# ============================================================================

def closed_form_spectrum(
    params: DeformationParams, n: int, splitting: Splitting = Splitting.EXACT
) -> SpectrumResult:
    """
    Closed-form frequencies.

    E-kind: omega+- = (|n|/2) sqrt(4 + theta^2 n^2) +- theta n^2 / 2 (EXACT)
            or +- theta n^2 (DOUBLED).
    B-kind: omega+- = sqrt(4 n^2 + theta^2) / 2 +- theta / 2.

    Negative n is accepted and gives the same result as |n|.
    """
    if int(n) != n or n == 0:
        raise InvalidArgumentError(f"Mode index must be a nonzero integer, got {n}")
    n = int(n)
    splitting = Splitting(splitting)
    theta = params.effective_theta
    centre = ladder_frequency(params, n)

    if params.kind is DeformationKind.B_DEFORMED:
        half_gap = 0.5 * theta
    elif splitting is Splitting.DOUBLED:
        half_gap = theta * n * n
    else:
        half_gap = 0.5 * theta * n * n

    omega_minus = centre - half_gap
    omega_plus = centre + half_gap
    stable = omega_minus >= 0.0 and omega_plus >= 0.0
    if not stable:
        logger.warning(
            f"Unstable mode: kind={params.label} theta={theta} n={n} "
            f"omega-={omega_minus:.6g} omega+={omega_plus:.6g}"
        )

    return SpectrumResult(
        kind=params.label,
        theta=params.theta,
        n=abs(n),
        omega_minus=omega_minus,
        omega_plus=omega_plus,
        source=SpectrumSource.CLOSED_FORM,
        stable=stable,
    )


def generator_matrix(
    params: DeformationParams, n: int, assembly: OracleAssembly = OracleAssembly.UNDRESSED
) -> np.ndarray:
    """Linear generator K with d(xi)/dt = K xi for one mode."""
    n = _check_mode(n, allow_zero=True)
    assembly = OracleAssembly(assembly)
    if assembly is OracleAssembly.UNDRESSED:
        return bracket_block(params) @ free_hamiltonian_matrix(n)
    canonical = bracket_block(DeformationParams.canonical())
    return canonical @ hamiltonian_matrix(params, n).h_matrix


def oracle_spectrum(
    params: DeformationParams, n: int, assembly: OracleAssembly = OracleAssembly.UNDRESSED
) -> SpectrumResult:
    """
    Frequencies from the eigenvalues of K = bracket @ M.

    The four eigenvalues come in pairs +-i omega; the pair values are sorted
    and labelled (omega-, omega+) for theta >= 0, swapped for theta < 0.
    A defective eigenstructure (eigenvector condition number above the
    configured bound) sets degenerate=True and falls back to moduli.
    """
    if int(n) != n or n == 0:
        raise InvalidArgumentError(f"Mode index must be a nonzero integer, got {n}")
    n = abs(int(n))
    config = get_config()

    k_matrix = generator_matrix(params, n, assembly)
    eigenvalues, eigenvectors = np.linalg.eig(k_matrix)

    degenerate = bool(np.linalg.cond(eigenvectors) > config.tolerances["defective_condition"])
    if degenerate:
        logger.warning(f"Defective generator for kind={params.label} theta={params.theta} n={n}")
        frequencies = np.sort(np.abs(eigenvalues))
    else:
        frequencies = np.sort(np.abs(eigenvalues.imag))

    low, high = float(frequencies[0]), float(frequencies[2])
    if params.effective_theta < 0:
        low, high = high, low

    scale = max(float(np.max(np.abs(eigenvalues))), 1.0)
    stable = bool(np.max(np.abs(eigenvalues.real)) <= 1e-8 * scale)

    return SpectrumResult(
        kind=params.label,
        theta=params.theta,
        n=n,
        omega_minus=low,
        omega_plus=high,
        source=SpectrumSource.ORACLE,
        stable=stable,
        degenerate=degenerate,
    )


def _spectrum_row(task: Tuple[DeformationParams, int, Splitting]) -> Dict[str, Any]:
    params, n, splitting = task
    closed = closed_form_spectrum(params, n, splitting)
    oracle = oracle_spectrum(params, n)
    deviation = max(
        abs(closed.omega_minus - oracle.omega_minus),
        abs(closed.omega_plus - oracle.omega_plus),
    )
    return {
        "kind": params.label,
        "theta": params.theta,
        "n": n,
        "omega_minus": closed.omega_minus,
        "omega_plus": closed.omega_plus,
        "oracle_minus": oracle.omega_minus,
        "oracle_plus": oracle.omega_plus,
        "deviation": deviation,
        "stable": closed.stable,
    }


SPECTRUM_COLUMNS = [
    "kind", "theta", "n", "omega_minus", "omega_plus",
    "oracle_minus", "oracle_plus", "deviation", "stable",
]


def spectrum_table(
    kind: DeformationKind,
    thetas: Sequence[float],
    ns: Sequence[int],
    splitting: Splitting = Splitting.EXACT,
    workers: int = 1,
) -> pd.DataFrame:
    """One row per (theta, n), theta-major; order does not depend on workers."""
    tasks = [(DeformationParams(kind, theta), int(n), Splitting(splitting)) for theta in thetas for n in ns]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_spectrum_row, tasks))
    else:
        rows = [_spectrum_row(task) for task in tasks]
    return pd.DataFrame(rows, columns=SPECTRUM_COLUMNS)


SOURCE_COLUMNS = ["kind", "theta", "n", "omega_minus", "omega_plus", "source", "stable"]


def _single_source_row(task: Tuple[DeformationParams, int, Splitting, SpectrumSource]) -> Dict[str, Any]:
    params, n, splitting, source = task
    if source is SpectrumSource.ORACLE:
        return oracle_spectrum(params, n).as_row()
    return closed_form_spectrum(params, n, splitting).as_row()


def spectrum_rows(
    kind: DeformationKind,
    thetas: Sequence[float],
    ns: Sequence[int],
    source: SpectrumSource = SpectrumSource.CLOSED_FORM,
    splitting: Splitting = Splitting.EXACT,
    workers: int = 1,
) -> pd.DataFrame:
    """Frequencies from one source only, theta-major, tagged with that source."""
    source = SpectrumSource(source)
    tasks = [
        (DeformationParams(kind, theta), int(n), Splitting(splitting), source)
        for theta in thetas for n in ns
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_single_source_row, tasks))
    else:
        rows = [_single_source_row(task) for task in tasks]
    return pd.DataFrame(rows, columns=SOURCE_COLUMNS)


# ============================================================================
# Normal modes
# ============================================================================

def mode_coefficients(params: DeformationParams, n: int) -> ModeCoefficients:
    """Delta_n = 2|n| / sqrt(4 + theta^2 n^2), Lambda+- = 1/sqrt(Delta) +- (theta/2) sqrt(Delta)."""
    if params.kind is DeformationKind.B_DEFORMED:
        raise InvalidArgumentError("mode_coefficients is defined for the E kind only")
    if int(n) != n or n == 0:
        raise InvalidArgumentError(f"Mode index must be a nonzero integer, got {n} (Delta_0 = 0)")
    n = int(n)
    theta = params.effective_theta

    delta_n = 2.0 * abs(n) / math.sqrt(4.0 + theta * theta * n * n)
    root = math.sqrt(delta_n)
    return ModeCoefficients(
        n=n,
        lambda_plus=1.0 / root + 0.5 * theta * root,
        lambda_minus=1.0 / root - 0.5 * theta * root,
        delta_n=delta_n,
    )


def _trajectory_terms(
    params: DeformationParams, n: int, amplitudes: Sequence[complex]
) -> List[Tuple[np.ndarray, float]]:
    """
    (vector, nu) pairs with q(t) = sum vector * exp(-i nu t).

    Amplitudes are (A1_n, A1_-n, A2_n, A2_-n). The A1 branch has q2 = i q1.
    Under the deformed brackets that branch oscillates at omega+ for the E
    kind and at omega- for the B kind.
    """
    if len(amplitudes) != 4:
        raise InvalidArgumentError("amplitudes must hold four complex values")
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"Mode index must be >= 1, got {n}")
    a1, b1, a2, b2 = (complex(a) for a in amplitudes)
    spectrum = closed_form_spectrum(params, n)

    if params.kind is DeformationKind.B_DEFORMED:
        prefactor = 1.0 / (2.0 * math.sqrt(ladder_frequency(params, n)))
        c1 = c2 = prefactor
        nu1, nu2 = spectrum.omega_minus, spectrum.omega_plus
    else:
        coefficients = mode_coefficients(params, n)
        c1 = 0.5 * coefficients.lambda_plus
        c2 = 0.5 * coefficients.lambda_minus
        nu1, nu2 = spectrum.omega_plus, spectrum.omega_minus

    plus_i = np.array([1.0, 1j])
    minus_i = np.array([1.0, -1j])
    return [
        (c1 * a1 * plus_i, nu1),
        (c1 * b1 * minus_i, -nu1),
        (c2 * a2 * minus_i, nu2),
        (c2 * b2 * plus_i, -nu2),
    ]


def _evaluate(terms, t, derivative: int = 0, dtype=complex) -> Tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t)
    q1 = np.zeros(t.shape, dtype=dtype)
    q2 = np.zeros(t.shape, dtype=dtype)
    for vector, nu in terms:
        factor = (-1j * nu) ** derivative
        phase = np.exp(-1j * nu * t.astype(dtype))
        q1 = q1 + vector[0] * factor * phase
        q2 = q2 + vector[1] * factor * phase
    return q1, q2


def normal_mode_trajectory(
    params: DeformationParams, n: int, amplitudes: Sequence[complex], t
) -> Tuple[Any, Any]:
    """(q1_n(t), q2_n(t)) built from the four normal-mode amplitudes."""
    q1, q2 = _evaluate(_trajectory_terms(params, n, amplitudes), t)
    if np.ndim(t) == 0:
        return complex(q1), complex(q2)
    return q1, q2


def trajectory_residual(
    params: DeformationParams,
    n: int,
    amplitudes: Sequence[complex],
    times: Sequence[float],
    step: float = None,
) -> float:
    """
    Max residual of the q-equations of motion along a trajectory.

    E-kind: q'' = -theta n^2 eps q' - n^2 q.  B-kind: q'' = theta eps q' - n^2 q.
    Derivatives are central differences at `step`, evaluated in longdouble.
    """
    step = get_config().dynamics["fd_step"] if step is None else step
    theta = params.effective_theta
    coupling = -theta if params.kind is DeformationKind.B_DEFORMED else theta * n * n

    terms = _trajectory_terms(params, n, amplitudes)
    t = np.asarray(times, dtype=np.longdouble)
    h = np.longdouble(step)
    t_up, t_down = t + h, t - h
    span = t_up - t_down

    q = np.stack(_evaluate(terms, t, dtype=np.clongdouble))
    v = np.stack(_evaluate(terms, t, derivative=1, dtype=np.clongdouble))
    v_up = np.stack(_evaluate(terms, t_up, derivative=1, dtype=np.clongdouble))
    v_down = np.stack(_evaluate(terms, t_down, derivative=1, dtype=np.clongdouble))
    q_up = np.stack(_evaluate(terms, t_up, dtype=np.clongdouble))
    q_down = np.stack(_evaluate(terms, t_down, dtype=np.clongdouble))

    acceleration = (v_up - v_down) / span
    eps_v = np.stack([v[1], -v[0]])
    second_order = acceleration + coupling * eps_v + n * n * q
    first_order = (q_up - q_down) / span - v

    residual = max(np.max(np.abs(second_order)), np.max(np.abs(first_order)))
    return float(residual)
