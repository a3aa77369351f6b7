"""
Time evolution of a single mode block under the deformed brackets.

States are real 4-vectors (q1, q2, p1, p2) in undressed coordinates and
evolve by d(xi)/dt = K xi with K = bracket @ diag(n^2, n^2, 1, 1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.fft import rfft, rfftfreq
from scipy.linalg import expm
from scipy.signal import find_peaks

from .config import get_config
from .errors import InvalidArgumentError, StepFailureError
from .spectra import free_hamiltonian_matrix, generator_matrix
from .symplectic_core import COORDINATES, DeformationParams

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t", *COORDINATES, "H"]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled phase-space path with the energy at each sample."""

    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        energy = np.asarray(self.energy, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise InvalidArgumentError("times must be a nonempty 1-d sequence")
        if states.shape[0] != times.size or energy.shape != times.shape:
            raise InvalidArgumentError("times, states and energy must have the same length")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "energy", energy)

    def __len__(self) -> int:
        return self.times.size

    def coordinate(self, name: str) -> np.ndarray:
        return self.states[:, COORDINATES.index(name)]


def _energy(states: np.ndarray, h_matrix: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("ti,ij,tj->t", states, h_matrix, states)


def _initial_state(state0: Sequence[float]) -> np.ndarray:
    x0 = np.asarray(state0, dtype=float)
    if x0.shape != (4,):
        raise InvalidArgumentError(f"state0 must be a 4-vector (q1, q2, p1, p2), got shape {x0.shape}")
    return x0


def exact_evolve(
    params: DeformationParams, n: int, state0: Sequence[float], t_grid: Sequence[float]
) -> Trajectory:
    """
    states(t) = exp(t K) @ state0 on the given time grid.

    For n >= 1 the generator is diagonalized once in the energy-weighted
    coordinates y = sqrt(M0) x, where it is antisymmetric, and every sample
    is a pure phase rotation of the initial amplitudes; |y|^2 = 2 H then
    holds to round-off at any t. The zero mode (M0 singular) falls back to
    x0 + t K x0 when K is nilpotent and to expm otherwise.
    """
    x0 = _initial_state(state0)
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidArgumentError("t_grid must be a nonempty 1-d sequence")

    k_matrix = generator_matrix(params, n)
    h_matrix = free_hamiltonian_matrix(n)
    if n == 0:
        states = _zero_mode_states(k_matrix, x0, times)
    else:
        states = _phase_rotation_states(k_matrix, np.sqrt(np.diag(h_matrix)), x0, times)
    energy = _energy(states, h_matrix)
    return Trajectory(times=times, states=states, energy=energy)


def _phase_rotation_states(
    k_matrix: np.ndarray, weights: np.ndarray, x0: np.ndarray, times: np.ndarray
) -> np.ndarray:
    generator = weights[:, None] * k_matrix / weights[None, :]
    generator = 0.5 * (generator - generator.T)
    # i A is Hermitian, so exp(t A) = W diag(exp(-i w t)) W^H
    frequencies, vectors = np.linalg.eigh(1j * generator)
    amplitudes = vectors.conj().T @ (weights * x0)
    weighted = (np.exp(-1j * np.outer(times, frequencies)) * amplitudes) @ vectors.T
    return weighted.real / weights


def _zero_mode_states(k_matrix: np.ndarray, x0: np.ndarray, times: np.ndarray) -> np.ndarray:
    if not np.any(k_matrix @ k_matrix):
        return x0 + np.outer(times, k_matrix @ x0)
    return np.array([expm(t * k_matrix) @ x0 for t in times])


def midpoint_evolve(
    params: DeformationParams,
    n: int,
    state0: Sequence[float],
    dt: float,
    steps: int,
    max_step_factor: Optional[float] = None,
) -> Trajectory:
    """
    Implicit midpoint steps; for linear K each step is the Cayley map
    (I - dt/2 K)^-1 (I + dt/2 K).

    Raises:
        StepFailureError: dt * ||K||_2 above max_step_factor, or a singular solve
    """
    if dt <= 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    if int(steps) != steps or steps < 1:
        raise InvalidArgumentError(f"steps must be an integer >= 1, got {steps}")
    if max_step_factor is None:
        max_step_factor = get_config().dynamics["max_step_factor"]
    x0 = _initial_state(state0)

    k_matrix = generator_matrix(params, n)
    k_norm = float(np.linalg.norm(k_matrix, 2))
    if dt * k_norm > max_step_factor:
        raise StepFailureError(
            f"Step dt={dt} too large: dt*||K|| = {dt * k_norm:.4g} exceeds {max_step_factor} "
            f"(use dt <= {max_step_factor / k_norm:.4g})"
        )

    identity = np.eye(4)
    try:
        cayley = np.linalg.solve(identity - 0.5 * dt * k_matrix, identity + 0.5 * dt * k_matrix)
    except np.linalg.LinAlgError as e:
        raise StepFailureError(f"Singular midpoint system at dt={dt}: {e}")

    states = np.empty((int(steps) + 1, 4))
    states[0] = x0
    for k in range(int(steps)):
        states[k + 1] = cayley @ states[k]

    times = dt * np.arange(int(steps) + 1)
    energy = _energy(states, free_hamiltonian_matrix(n))
    logger.debug(f"Midpoint run: {steps} steps of dt={dt}, final H={energy[-1]:.12g}")
    return Trajectory(times=times, states=states, energy=energy)


def energy_drift(traj: Trajectory) -> float:
    """max |H(t) - H(0)| / |H(0)|; absolute when H(0) = 0."""
    reference = abs(float(traj.energy[0]))
    change = float(np.max(np.abs(traj.energy - traj.energy[0])))
    return float(change / reference) if reference > 0 else change


def uniform_step(traj: Trajectory) -> float:
    """Sample spacing of a uniform grid; raises for non-uniform grids."""
    steps = np.diff(traj.times)
    if steps.size == 0:
        raise InvalidArgumentError("Need at least two samples")
    dt = float(np.mean(steps))
    if not np.allclose(steps, dt, rtol=1e-6, atol=0.0):
        raise InvalidArgumentError("Time grid is not uniform")
    return dt


def bin_width(traj: Trajectory) -> float:
    """Angular frequency resolution 2 pi / (N dt)."""
    return float(2.0 * np.pi / (len(traj) * uniform_step(traj)))


def frequency_extract(
    traj: Trajectory,
    peak_median_factor: Optional[float] = None,
    min_samples: Optional[int] = None,
    peak_floor: Optional[float] = None,
) -> List[float]:
    """
    Angular frequencies of the spectral peaks of every coordinate.

    A peak is a local maximum of |rfft| above peak_median_factor times the
    median magnitude (and above peak_floor * N * max|x|). The DC bin is
    excluded. Peaks from different coordinates within one bin are merged.
    """
    settings = get_config().dynamics
    peak_median_factor = settings["peak_median_factor"] if peak_median_factor is None else peak_median_factor
    min_samples = int(settings["min_samples"]) if min_samples is None else min_samples
    peak_floor = settings["peak_floor"] if peak_floor is None else peak_floor

    n_samples = len(traj)
    if n_samples < min_samples:
        raise InvalidArgumentError(f"Need at least {min_samples} samples, got {n_samples}")
    dt = uniform_step(traj)

    omegas = 2.0 * np.pi * rfftfreq(n_samples, d=dt)
    width = omegas[1]

    found = []
    for column in traj.states.T:
        scale = float(np.max(np.abs(column)))
        if scale == 0.0:
            continue
        magnitude = np.abs(rfft(column))[1:]
        height = max(peak_median_factor * float(np.median(magnitude)), peak_floor * n_samples * scale)
        peaks, properties = find_peaks(magnitude, height=height)
        for index, peak_height in zip(peaks, properties["peak_heights"]):
            found.append((float(omegas[index + 1]), float(peak_height)))

    found.sort()
    merged: List[List[float]] = []
    for omega, peak_height in found:
        if merged and omega - merged[-1][0] <= 1.0001 * width:
            if peak_height > merged[-1][1]:
                merged[-1] = [omega, peak_height]
            continue
        merged.append([omega, peak_height])

    peaks_out = [omega for omega, _ in merged]
    logger.debug(f"Extracted {len(peaks_out)} peaks (bin width {width:.4g})")
    return peaks_out


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    """Trajectory as a table with columns t, q1, q2, p1, p2, H."""
    frame = pd.DataFrame(traj.states, columns=list(COORDINATES))
    frame.insert(0, "t", traj.times)
    frame["H"] = traj.energy
    return frame[TRAJECTORY_COLUMNS]
