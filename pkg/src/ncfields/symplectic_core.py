"""
Canonical and deformed symplectic forms on truncated mode spaces.

Each mode n carries a real 4-dim block in the layout (q1, q2, p1, p2).
Blocks are stacked in increasing n (the zero mode first when present).

Conventions:
- epsilon has epsilon[0, 1] = +1.
- The bracket matrix P is the transpose of omega^-1, so P.T @ omega = I and
  {xi_I, xi_J} = P[I, J]. With this reading the canonical block
  [[0, I], [-I, 0]] gives {q, p} = +1.
- E-kind: {q1, q2} = -theta. B-kind: {p1, p2} = +theta.

Usage:
    from ncfields.symplectic_core import DeformationParams, build_deformed_form

    params = DeformationParams.e_deformed(0.5)
    form = build_deformed_form(params, n_modes=3)
    form.bracket_entry("q1", "q2")   # -0.5
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
from scipy.linalg import block_diag

from .config import get_config
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

EPSILON = np.array([[0.0, 1.0], [-1.0, 0.0]])
IDENTITY_2 = np.eye(2)
ZERO_2 = np.zeros((2, 2))

COORDINATES = ("q1", "q2", "p1", "p2")
BLOCK_DIM = 4


# ============================================================================
# Domain types
# ============================================================================

class DeformationKind(Enum):
    """Which sector of phase space carries the deformation."""

    CANONICAL = "canonical"
    E_DEFORMED = "E"
    B_DEFORMED = "B"

    @classmethod
    def from_label(cls, label: str) -> "DeformationKind":
        """Accept 'E', 'B', 'canonical' and the long names, case-insensitive."""
        aliases = {
            "canonical": cls.CANONICAL,
            "c": cls.CANONICAL,
            "e": cls.E_DEFORMED,
            "edeformed": cls.E_DEFORMED,
            "e_deformed": cls.E_DEFORMED,
            "b": cls.B_DEFORMED,
            "bdeformed": cls.B_DEFORMED,
            "b_deformed": cls.B_DEFORMED,
        }
        key = str(label).strip().lower()
        if key not in aliases:
            raise InvalidArgumentError(f"Unknown deformation kind: {label}")
        return aliases[key]


@dataclass(frozen=True)
class DeformationParams:
    """Deformation kind plus the real noncommutativity parameter theta."""

    kind: DeformationKind
    theta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, DeformationKind):
            object.__setattr__(self, "kind", DeformationKind.from_label(self.kind))
        theta = float(self.theta)
        if not math.isfinite(theta):
            raise InvalidArgumentError(f"theta must be finite, got {self.theta}")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def canonical(cls) -> "DeformationParams":
        return cls(DeformationKind.CANONICAL, 0.0)

    @classmethod
    def e_deformed(cls, theta: float) -> "DeformationParams":
        return cls(DeformationKind.E_DEFORMED, theta)

    @classmethod
    def b_deformed(cls, theta: float) -> "DeformationParams":
        return cls(DeformationKind.B_DEFORMED, theta)

    @property
    def effective_theta(self) -> float:
        """theta as seen by the constructions; always 0 for the canonical kind."""
        if self.kind is DeformationKind.CANONICAL:
            return 0.0
        return self.theta

    @property
    def label(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class ModeBlock:
    """One real 4-dim block (q1, q2, p1, p2) for the mode pair (n, -n)."""

    mode_index: int
    offset: int

    @property
    def indices(self) -> slice:
        return slice(self.offset, self.offset + BLOCK_DIM)


class ModeSystem:
    """
    Truncated mode space: modes 1..n_modes, optionally preceded by the zero mode.

    Usage:
        system = ModeSystem(3, include_zero_mode=True)
        system.dim                 # 16
        system.block_slice(2)      # slice(8, 12)
    """

    def __init__(self, n_modes: int, include_zero_mode: bool = False):
        if int(n_modes) != n_modes or n_modes < 1:
            raise InvalidArgumentError(f"n_modes must be an integer >= 1, got {n_modes}")
        self.n_modes = int(n_modes)
        self.include_zero_mode = include_zero_mode

        modes = ([0] if include_zero_mode else []) + list(range(1, self.n_modes + 1))
        self.blocks: List[ModeBlock] = [
            ModeBlock(mode_index=n, offset=BLOCK_DIM * k) for k, n in enumerate(modes)
        ]

    @property
    def modes(self) -> List[int]:
        return [block.mode_index for block in self.blocks]

    @property
    def dim(self) -> int:
        return BLOCK_DIM * len(self.blocks)

    def block_slice(self, n: int) -> slice:
        for block in self.blocks:
            if block.mode_index == n:
                return block.indices
        raise InvalidArgumentError(f"Mode {n} is not part of this system")

    def index_of(self, coordinate: str, n: int) -> int:
        """Global index of a coordinate label ('q1', ..., 'p2') in mode n."""
        if coordinate not in COORDINATES:
            raise InvalidArgumentError(f"Unknown coordinate: {coordinate}")
        return self.block_slice(n).start + COORDINATES.index(coordinate)


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    """Antisymmetric nondegenerate omega together with its bracket matrix."""

    omega: np.ndarray
    bracket: np.ndarray
    system: Optional[ModeSystem] = None

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        bracket = np.array(self.bracket, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1] or omega.shape[0] % 2:
            raise InvalidArgumentError(f"omega must be square with even dimension, got {omega.shape}")
        if bracket.shape != omega.shape:
            raise InvalidArgumentError("omega and bracket must have the same shape")
        if not np.array_equal(omega.T, -omega):
            raise InvalidArgumentError("omega is not antisymmetric")
        if not np.array_equal(bracket.T, -bracket):
            raise InvalidArgumentError("bracket is not antisymmetric")

        tol = get_config().algebraic_tol
        residual = np.max(np.abs(bracket.T @ omega - np.eye(omega.shape[0])))
        if residual > tol:
            raise InvalidArgumentError(f"bracket is not the inverse of omega (residual {residual:.3e})")

        omega.setflags(write=False)
        bracket.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "bracket", bracket)

    @classmethod
    def from_omega(cls, omega: np.ndarray) -> "SymplecticMatrix":
        """Build from omega alone; the bracket is inverted numerically."""
        omega = np.asarray(omega, dtype=float)
        if np.linalg.matrix_rank(omega) < omega.shape[0]:
            raise InvalidArgumentError("omega is degenerate")
        bracket = np.linalg.inv(omega).T
        return cls(omega=omega, bracket=0.5 * (bracket - bracket.T))

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    def bracket_entry(self, first: str, second: str, n: Optional[int] = None, m: Optional[int] = None) -> float:
        """Poisson bracket {first_n, second_m} by coordinate label."""
        system = self.system or ModeSystem(self.dim // BLOCK_DIM)
        n = system.modes[0] if n is None else n
        m = n if m is None else m
        return float(self.bracket[system.index_of(first, n), system.index_of(second, m)])


@dataclass(frozen=True, eq=False)
class DressingMap:
    """Linear change of variables (q, p) -> (Q, P) and its inverse."""

    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        tol = get_config().algebraic_tol
        dim = self.forward.shape[0]
        if np.max(np.abs(self.forward @ self.inverse - np.eye(dim))) > tol:
            raise InvalidArgumentError("forward and inverse dressing maps do not compose to identity")

    def apply(self, state: Iterable[float]) -> np.ndarray:
        return self.forward @ np.asarray(state, dtype=float)

    def pull_back(self, omega: np.ndarray) -> np.ndarray:
        """Express a two-form given in old coordinates in the new ones."""
        return self.inverse.T @ omega @ self.inverse


# ============================================================================
# Per-mode blocks
# ============================================================================

def _block(top_left: np.ndarray, top_right: np.ndarray, bottom_left: np.ndarray, bottom_right: np.ndarray) -> np.ndarray:
    # + 0.0 turns the -0.0 entries of negated zero blocks into +0.0
    return np.block([[top_left, top_right], [bottom_left, bottom_right]]) + 0.0


def omega_block(params: DeformationParams) -> np.ndarray:
    """4x4 omega for one mode."""
    theta = params.effective_theta
    if params.kind is DeformationKind.B_DEFORMED:
        return _block(-theta * EPSILON, IDENTITY_2, -IDENTITY_2, ZERO_2)
    return _block(ZERO_2, IDENTITY_2, -IDENTITY_2, theta * EPSILON)


def bracket_block(params: DeformationParams) -> np.ndarray:
    """4x4 bracket matrix for one mode, written in closed form."""
    theta = params.effective_theta
    if params.kind is DeformationKind.B_DEFORMED:
        return _block(ZERO_2, IDENTITY_2, -IDENTITY_2, theta * EPSILON)
    return _block(-theta * EPSILON, IDENTITY_2, -IDENTITY_2, ZERO_2)


def forward_dressing_block(params: DeformationParams) -> np.ndarray:
    """
    E-kind: Q = q - (theta/2) eps p,  P = p.
    B-kind: Q = q,  P = p - (theta/2) eps q.
    """
    half = 0.5 * params.effective_theta
    if params.kind is DeformationKind.B_DEFORMED:
        return _block(IDENTITY_2, ZERO_2, -half * EPSILON, IDENTITY_2)
    return _block(IDENTITY_2, -half * EPSILON, ZERO_2, IDENTITY_2)


def inverse_dressing_block(params: DeformationParams) -> np.ndarray:
    half = 0.5 * params.effective_theta
    if params.kind is DeformationKind.B_DEFORMED:
        return _block(IDENTITY_2, ZERO_2, half * EPSILON, IDENTITY_2)
    return _block(IDENTITY_2, half * EPSILON, ZERO_2, IDENTITY_2)


def _assemble(block: np.ndarray, system: ModeSystem) -> np.ndarray:
    return block_diag(*([block] * len(system.blocks)))


# ============================================================================
# Operations
# ============================================================================

def build_canonical_form(n_modes: int, include_zero_mode: bool = False) -> SymplecticMatrix:
    """Block-diagonal Darboux form [[0, I], [-I, 0]] per mode."""
    return build_deformed_form(DeformationParams.canonical(), n_modes, include_zero_mode)


def build_deformed_form(
    params: DeformationParams, n_modes: int, include_zero_mode: bool = False
) -> SymplecticMatrix:
    """
    E-kind adds theta*eps in the p-p sector of omega, B-kind adds -theta*eps in q-q.

    Args:
        params: deformation kind and theta
        n_modes: number of modes n = 1..n_modes
        include_zero_mode: prepend the n = 0 block (same block rules)

    Returns:
        SymplecticMatrix with omega and its bracket matrix
    """
    system = ModeSystem(n_modes, include_zero_mode)
    omega = _assemble(omega_block(params), system)
    bracket = _assemble(bracket_block(params), system)
    logger.debug(f"Built {params.label} form, theta={params.theta}, dim={system.dim}")
    return SymplecticMatrix(omega=omega, bracket=bracket, system=system)


def dressing_map(params: DeformationParams, n_modes: int, include_zero_mode: bool = False) -> DressingMap:
    """Linear map to coordinates in which the deformed form is canonical."""
    system = ModeSystem(n_modes, include_zero_mode)
    return DressingMap(
        forward=_assemble(forward_dressing_block(params), system),
        inverse=_assemble(inverse_dressing_block(params), system),
    )


def pullback_residual(params: DeformationParams, n_modes: int) -> float:
    """Max-norm distance between the dressed deformed form and the canonical one."""
    deformed = build_deformed_form(params, n_modes)
    canonical = build_canonical_form(n_modes)
    dressed = dressing_map(params, n_modes).pull_back(deformed.omega)
    return float(np.max(np.abs(dressed - canonical.omega)))


def quantum_commutator_matrix(params: DeformationParams, n_modes: int) -> np.ndarray:
    """C with [xi_I, xi_J] = i C_IJ; identical to the Poisson bracket matrix."""
    return np.array(build_deformed_form(params, n_modes).bracket)


def real_mode_coordinates(
    q_n: Tuple[complex, complex], p_n: Tuple[complex, complex]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split complex modes q_n = (x + i y)/sqrt(2) into the two real sectors.

    Returns:
        (x_sector, y_sector), each a real 4-vector (q1, q2, p1, p2)
    """
    z = np.concatenate([np.asarray(q_n, dtype=complex), np.asarray(p_n, dtype=complex)])
    if z.shape != (BLOCK_DIM,):
        raise InvalidArgumentError("q_n and p_n must each hold two components")
    scale = math.sqrt(2.0)
    return scale * z.real, scale * z.imag


def complex_mode_coordinates(x_sector: Iterable[float], y_sector: Iterable[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of real_mode_coordinates; returns (q_n, p_n)."""
    z = (np.asarray(x_sector, dtype=float) + 1j * np.asarray(y_sector, dtype=float)) / math.sqrt(2.0)
    return z[:2], z[2:]


# ============================================================================
# Truncated Fourier kernels on the circle
# ============================================================================

def fourier_kernel(coefficients: Callable[[np.ndarray], np.ndarray], u, n_max: int) -> np.ndarray:
    """Partial sum sum_{|n| <= n_max} c(n) exp(i n u)."""
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgumentError(f"n_max must be an integer >= 1, got {n_max}")
    n = np.arange(-int(n_max), int(n_max) + 1)
    u = np.asarray(u, dtype=float)
    phases = np.exp(1j * np.multiply.outer(u, n))
    return phases @ np.asarray(coefficients(n), dtype=complex)


def delta_coefficients(n: np.ndarray) -> np.ndarray:
    return np.full(n.shape, 1.0 / (2.0 * np.pi), dtype=complex)


def sign_coefficients(n: np.ndarray) -> np.ndarray:
    out = np.zeros(n.shape, dtype=complex)
    nonzero = n != 0
    out[nonzero] = 1.0 / (2j * np.pi * n[nonzero])
    return out


def delta_prime_coefficients(n: np.ndarray) -> np.ndarray:
    return 1j * n / (2.0 * np.pi)


def dirichlet_kernel(u, n_max: int) -> np.ndarray:
    """Truncated periodic delta function."""
    return fourier_kernel(delta_coefficients, u, n_max)


def sign_kernel(u, n_max: int) -> np.ndarray:
    """Truncated odd sign kernel; converges to sign_function."""
    return fourier_kernel(sign_coefficients, u, n_max)


def sign_function(u) -> np.ndarray:
    """
    The odd periodic kernel epsilon(u) = sign(u)/2 - u/(2 pi) on (-pi, pi).

    It is odd, which the chiral commutator needs; a Heaviside step is not.
    """
    u = np.asarray(u, dtype=float)
    wrapped = np.mod(u + np.pi, 2.0 * np.pi) - np.pi
    return 0.5 * np.sign(wrapped) - wrapped / (2.0 * np.pi)


class KernelKind(Enum):
    PHI_PHI = "phi_phi"
    PHI_PI = "phi_pi"
    PI_PI = "pi_pi"


_KERNEL_DEFAULT_COMPONENTS = {
    KernelKind.PHI_PHI: (1, 2),
    KernelKind.PHI_PI: (1, 1),
    KernelKind.PI_PI: (1, 2),
}


def commutator_kernel(
    params: DeformationParams,
    x,
    y,
    n_max: int,
    which: KernelKind,
    i: Optional[int] = None,
    j: Optional[int] = None,
) -> np.ndarray:
    """
    Truncated mode-sum of the equal-time field commutator.

    Returns i * C[field_i, field_j] * D_N(x - y), where C is the per-mode
    commutator matrix and D_N the Dirichlet kernel. Field components
    i, j default to (1, 2) for phi_phi and pi_pi and (1, 1) for phi_pi.
    Works elementwise on arrays x, y.
    """
    which = KernelKind(which)
    default_i, default_j = _KERNEL_DEFAULT_COMPONENTS[which]
    i = default_i if i is None else i
    j = default_j if j is None else j
    if i not in (1, 2) or j not in (1, 2):
        raise InvalidArgumentError(f"Field components must be 1 or 2, got ({i}, {j})")

    row_offset = 2 if which is KernelKind.PI_PI else 0
    col_offset = 0 if which is KernelKind.PHI_PHI else 2
    c = bracket_block(params)[row_offset + i - 1, col_offset + j - 1]

    u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return 1j * c * dirichlet_kernel(u, n_max)


def smear(kernel: Callable[[np.ndarray], np.ndarray], f: Callable[[np.ndarray], np.ndarray], n_quad: int = 2048) -> complex:
    """Integral over y in [0, 2 pi) of kernel(y) * f(y) on a uniform periodic grid."""
    y = 2.0 * np.pi * np.arange(n_quad) / n_quad
    return complex(np.sum(kernel(y) * f(y)) * (2.0 * np.pi / n_quad))
