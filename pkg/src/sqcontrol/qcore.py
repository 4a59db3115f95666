"""Dense complex linear algebra shared by the simulation modules.

States are 1-D complex ``numpy`` arrays, operators and density matrices are
2-D complex arrays.  Units are hbar = 1 throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class NumericalError(RuntimeError):
    """A simulation could not be carried out to the requested accuracy."""


class BoundaryError(NumericalError):
    """A wave packet reached the edge of its position grid."""


class ConvergenceError(NumericalError):
    """Step-size refinement failed to converge."""


@dataclass(frozen=True)
class TrapSpec:
    """Harmonic trap in dimensionless units (hbar = 1).

    ``x0`` is always derived from ``mass`` and ``nu``.
    """

    mass: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.nu > 0):
            raise ValueError("trap mass and frequency must be positive")

    @property
    def x0(self) -> float:
        return math.sqrt(1.0 / (2.0 * self.mass * self.nu))


def basis(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def dm(psi: np.ndarray) -> np.ndarray:
    """Projector |psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product; entry ((i*db + k), (j*db + l)) = a[i, j] * b[k, l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def hermitian_propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Return exp(-i h t) for Hermitian ``h`` via its eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("generator must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if not is_hermitian(h, HERMITIAN_TOL * scale):
        raise ValueError("generator is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def fock_operators(n_max: int, trap: TrapSpec = TrapSpec()):
    """Ladder, position and momentum matrices on the Fock space {|0>, ..., |n_max - 1>}.

    Returns ``(a, a_dag, x, p)`` with x = x0 (a + a^dag) and
    p = i (a^dag - a) / (2 x0).  The canonical commutator [x, p] = i holds on
    every level except the highest one.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    a = np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), 1).astype(complex)
    a_dag = a.conj().T
    x0 = trap.x0
    x = x0 * (a + a_dag)
    p = 1j / (2.0 * x0) * (a_dag - a)
    return a, a_dag, x, p


def coherent_amplitudes(alpha: complex, n: int) -> np.ndarray:
    """Untruncated Poisson amplitudes e^{-|a|^2/2} a^k / sqrt(k!) for k < n."""
    k = np.arange(n)
    mag = abs(alpha)
    if mag == 0:
        out = np.zeros(n, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * mag**2 + k * math.log(mag) - 0.5 * gammaln(k + 1)
    return np.exp(log_mag) * np.exp(1j * k * np.angle(alpha))


def required_fock_dim(alpha: complex, tol: float = 1e-6) -> int:
    """Smallest dimension whose highest retained amplitude is below ``tol``."""
    n = max(2, int(abs(alpha) ** 2) + 1)
    while abs(coherent_amplitudes(alpha, n + 1)[-1]) >= tol:
        n += 1
    return n + 1


def default_fock_dim(alpha: complex) -> int:
    """Truncation rule n_max >= |alpha|^2 + 10 |alpha| (never below the amplitude gate)."""
    mag = abs(alpha)
    return max(int(math.ceil(mag**2 + 10 * mag)), required_fock_dim(alpha), 10)


def coherent_state(alpha: complex, n_max: int) -> np.ndarray:
    """Coherent state |alpha> truncated to ``n_max`` Fock levels and renormalized."""
    amps = coherent_amplitudes(alpha, n_max)
    if abs(amps[-1]) >= 1e-6:
        raise ValueError(
            f"n_max={n_max} truncates |alpha={alpha}> too early; "
            f"need n_max >= {required_fock_dim(alpha)}"
        )
    return amps / np.linalg.norm(amps)


def expectation(op: np.ndarray, psi: np.ndarray) -> complex:
    psi = np.asarray(psi, dtype=complex)
    op = np.asarray(op)
    if op.shape != (psi.size, psi.size):
        raise ValueError("operator and state dimensions differ")
    return complex(np.vdot(psi, op @ psi))


def fidelity_pure(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized states."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("state dimensions differ")
    return float(abs(np.vdot(a, b)) ** 2)


def fidelity_mixed(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi|rho|psi>."""
    psi = np.asarray(psi, dtype=complex)
    rho = np.asarray(rho)
    if rho.shape != (psi.size, psi.size):
        raise ValueError("density matrix and state dimensions differ")
    return float(np.vdot(psi, rho @ psi).real)


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Reduced density matrix of factor ``keep`` (0 or 1) of a bipartite state."""
    d1, d2 = dims
    rho = np.asarray(rho)
    if rho.shape != (d1 * d2, d1 * d2):
        raise ValueError(f"density matrix of shape {rho.shape} does not match dims {dims}")
    r = rho.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ikjk->ij", r)
    if keep == 1:
        return np.einsum("kikj->ij", r)
    raise ValueError("keep must be 0 or 1")


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", rho, rho)))
