"""Analog Grover search driven by sequential selections, and its baselines.

Covers the digital Grover reference, the type-I / type-II adiabatic
Hamiltonians at matched energy cost, the multi-entry rotation generator and a
numerical check of the Molmer-Sorensen propagator used to realize the
spin-spin coupling with two ions.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .qcore import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    ConvergenceError,
    basis,
    dm,
    fidelity_pure,
    fock_operators,
    hermitian_propagator,
    kron,
)
from .selection import SelectionPair, design_sigma_y_pair

COST_TYPE_I = (2 * math.sqrt(2) - math.log(math.sqrt(2) - 1) + math.log(1 + math.sqrt(2))) / 4
COST_TYPE_II = (4 + 3 * math.log(3)) / 8
LAMB_DICKE_WARN = 0.3


# -- configurations ---------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    """Selection-driven search for ``target`` in an ``N_G``-entry database.

    ``database`` holds real amplitudes; ``None`` means the uniform
    superposition (|+> for two entries).  The round length satisfies the
    perfect-query condition g dT sigma_w = (pi/2 - theta0) / N.
    """

    g: float = 1.0
    N: int = 1
    P: float = 0.9
    target: int = 0
    N_G: int = 2
    database: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (0 < self.P <= 1):
            raise ValueError("P must be in (0,1]")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.N_G < 2 or not (0 <= self.target < self.N_G):
            raise ValueError("need N_G >= 2 and 0 <= target < N_G")
        if self.database is not None and len(self.database) != self.N_G:
            raise ValueError("database needs one amplitude per entry")

    @property
    def database_state(self) -> np.ndarray:
        if self.database is None:
            return np.full(self.N_G, 1 / math.sqrt(self.N_G), dtype=complex)
        v = np.asarray(self.database, dtype=float)
        return (v / np.linalg.norm(v)).astype(complex)

    @property
    def theta0(self) -> float:
        """Initial half angle arcsin |<t|Psi>|."""
        return math.asin(min(1.0, abs(self.database_state[self.target].real)))

    @property
    def p(self) -> float:
        return self.P ** (1.0 / self.N)

    @property
    def weak_value(self) -> float:
        return 1.0 / math.sqrt(self.p)

    @property
    def dT(self) -> float:
        return (math.pi / 2 - self.theta0) * math.sqrt(self.p) / (self.N * self.g)

    @property
    def T(self) -> float:
        return self.N * self.dT


class Family(enum.Enum):
    TYPE_I = "type-i"
    TYPE_II = "type-ii"


@dataclass(frozen=True)
class AdiabaticSpec:
    """Linear-schedule interpolation; ``amplitude`` is Omega (= Delta) or K."""

    family: Family
    amplitude: float
    T: float

    def __post_init__(self):
        if not (self.amplitude > 0 and self.T > 0):
            raise ValueError("amplitude and T must be positive")


# -- digital reference --------------------------------------------------------


def grover_operator(database: np.ndarray, target: int) -> np.ndarray:
    """G = U_Psi U_t with U_t = I - 2|t><t| and U_Psi = 2|Psi><Psi| - I."""
    n = len(database)
    eye = np.eye(n, dtype=complex)
    u_t = eye - 2 * dm(basis(n, target))
    u_psi = 2 * dm(database) - eye
    return u_psi @ u_t


def grover_reference(N: int, theta: float, basis_pair: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """sin((2N+1) theta/2)|t> + cos((2N+1) theta/2)|t~>.

    Without ``basis_pair`` the result is the 2-vector in the (|t>, |t~>) basis.
    """
    a = (2 * N + 1) * theta / 2
    if basis_pair is None:
        return np.array([math.sin(a), math.cos(a)], dtype=complex)
    t, tc = basis_pair
    return math.sin(a) * np.asarray(t, dtype=complex) + math.cos(a) * np.asarray(tc, dtype=complex)


# -- rotation generator for many entries -------------------------------------


@dataclass(frozen=True)
class GeneralRotation:
    dim: int
    target_state: np.ndarray
    complement: np.ndarray
    theta_half: float

    @property
    def plus(self) -> np.ndarray:
        return (self.target_state + self.complement) / math.sqrt(2)

    @property
    def minus(self) -> np.ndarray:
        return (self.target_state - self.complement) / math.sqrt(2)

    @property
    def J_y(self) -> np.ndarray:
        m, p = self.minus, self.plus
        return -0.5j * (np.outer(m, p.conj()) - np.outer(p, m.conj()))

    @property
    def sigma_y(self) -> np.ndarray:
        return 2 * self.J_y

    def parameterized(self, angle: float) -> np.ndarray:
        """sin(angle)|t> + cos(angle)|t~>."""
        return math.sin(angle) * self.target_state + math.cos(angle) * self.complement

    def rotate(self, phi: float, state: np.ndarray) -> np.ndarray:
        """exp(i phi sigma~_y) state."""
        return hermitian_propagator(self.sigma_y, -phi) @ np.asarray(state, dtype=complex)


def build_general_rotation(target: int, database_amplitudes: Sequence[float], N_G: int | None = None) -> GeneralRotation:
    amps = np.asarray(database_amplitudes)
    if np.iscomplexobj(amps) and np.max(np.abs(amps.imag)) > 0:
        raise ValueError("database amplitudes must be real")
    amps = amps.real.astype(float)
    N_G = N_G or amps.size
    if amps.size != N_G:
        raise ValueError("database size does not match N_G")
    psi = amps / np.linalg.norm(amps)
    overlap = psi[target]
    t = np.zeros(N_G)
    t[target] = 1.0 if overlap >= 0 else -1.0
    rest = psi - abs(overlap) * t
    rest_norm = np.linalg.norm(rest)
    if rest_norm < 1e-12:
        raise ValueError("database equals the target; no complement to rotate from")
    if abs(overlap) < 1e-12:
        raise ValueError("database has no overlap with the target")
    return GeneralRotation(N_G, t.astype(complex), (rest / rest_norm).astype(complex), math.asin(abs(overlap)))


# -- selection rounds -------------------------------------------------------


def _selection_rounds(U: np.ndarray, pair: SelectionPair, psi0: np.ndarray, N: int):
    """N rounds of reset |i>, evolve with U, project the controller on |f>."""
    dim = psi0.size
    psi = psi0.astype(complex)
    f_bra = np.kron(pair.f_state.conj(), np.eye(dim))  # <f| (x) I
    probs = []
    for _ in range(N):
        joint = U @ np.kron(pair.i_state, psi)
        out = f_bra @ joint
        prob = float(np.vdot(out, out).real)
        if not prob > 1e-300:
            raise ValueError("post-selection failed: vanishing norm")
        probs.append(prob)
        psi = out / math.sqrt(prob)
    return psi, probs


def sqc_coupling(g: float) -> np.ndarray:
    """H = -g sigma_y (x) sigma_y between controller and target qubit."""
    return -g * kron(SIGMA_Y, SIGMA_Y)


def sqc_search_run(cfg: SearchConfig):
    """Two-qubit search; returns (fidelity, actual_probability, final_state)."""
    if cfg.N_G != 2:
        raise ValueError("sqc_search_run is the two-entry model; use multiqubit_sqc_search")
    pair = design_sigma_y_pair(cfg.p)
    U = hermitian_propagator(sqc_coupling(cfg.g), cfg.dT)
    psi, probs = _selection_rounds(U, pair, cfg.database_state, cfg.N)
    F = fidelity_pure(basis(2, cfg.target), psi)
    return F, float(np.prod(probs)), psi


def round_kraus(cfg: SearchConfig) -> np.ndarray:
    """Per-round target map sqrt(p) cos(g dT) I + i sin(g dT) sigma_y."""
    a = cfg.g * cfg.dT
    return math.sqrt(cfg.p) * math.cos(a) * I2 + 1j * math.sin(a) * SIGMA_Y


def multiqubit_sqc_search(cfg: SearchConfig):
    """Search over N_G entries with H = -g sigma_y (x) sigma~_y; returns (fidelity, probability)."""
    rot = build_general_rotation(cfg.target, cfg.database_state.real, cfg.N_G)
    pair = design_sigma_y_pair(cfg.p)
    H = -cfg.g * kron(SIGMA_Y, rot.sigma_y)
    U = hermitian_propagator(H, cfg.dT)
    psi, probs = _selection_rounds(U, pair, cfg.database_state, cfg.N)
    return fidelity_pure(basis(cfg.N_G, cfg.target), psi), float(np.prod(probs))


# -- adiabatic baselines ------------------------------------------------------

_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
_TARGET = basis(2, 0)


def adiabatic_hamiltonian(spec: AdiabaticSpec) -> Callable[[float], np.ndarray]:
    A, T = spec.amplitude, spec.T
    if spec.family is Family.TYPE_I:
        def H(t):
            s = t / T
            return (1 - s) * A * SIGMA_X + s * A * SIGMA_Z
    else:
        h_i = A * (I2 - dm(_PLUS))
        h_f = A * (I2 - dm(_TARGET))

        def H(t):
            s = t / T
            return (1 - s) * h_i + s * h_f
    return H


def evolve_midpoint(H: Callable[[float], np.ndarray], psi0: np.ndarray, T: float, dt: float) -> np.ndarray:
    """Product of exp(-i H(t_mid) h) over a uniform mesh ending exactly at T."""
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / n
    mids = (np.arange(n) + 0.5) * h
    stack = np.array([H(t) for t in mids])
    w, v = np.linalg.eigh(stack)
    psi = np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * w * h)
    for k in range(n):
        vk = v[k]
        psi = vk @ (phases[k] * (vk.conj().T @ psi))
    return psi


def default_adiabatic_dt(T: float) -> float:
    return min(1e-3, T / 1e4)


def aqc_search_run(spec: AdiabaticSpec, dt: float | None = None) -> float:
    """|<t|Psi(T)>|^2 starting from |+>, target |0>."""
    dt = dt or default_adiabatic_dt(spec.T)
    psi = evolve_midpoint(adiabatic_hamiltonian(spec), _PLUS, spec.T, dt)
    return fidelity_pure(_TARGET, psi)


# -- energy cost --------------------------------------------------------------


def frobenius(h: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(h) ** 2)))


def energy_cost(hamiltonian: Callable[[float], np.ndarray], T: float) -> float:
    """(1/T) int_0^T ||H(t)||_F dt by adaptive quadrature."""
    if not T > 0:
        raise ValueError("T must be positive")
    val, _ = quad(lambda t: frobenius(hamiltonian(t)), 0.0, T, epsabs=0.0, epsrel=1e-11, limit=200)
    return val / T


def cost_sqc(g: float) -> float:
    return 2.0 * g


def cost_type_i(omega: float) -> float:
    return omega * COST_TYPE_I


def cost_type_ii(K: float) -> float:
    return K * COST_TYPE_II


def equalize_cost(g: float) -> tuple[float, float]:
    """Omega and K whose adiabatic costs equal the selection protocol's 2g."""
    if not g > 0:
        raise ValueError("g must be positive")
    return cost_sqc(g) / COST_TYPE_I, cost_sqc(g) / COST_TYPE_II


# -- Molmer-Sorensen gate -----------------------------------------------------


@dataclass(frozen=True)
class MSSpec:
    """Bichromatic two-ion drive; detuning from the sidebands is eps = nu - delta."""

    eta: float
    Omega: float
    nu: float
    delta: float
    n_max: int = 20

    def __post_init__(self):
        if self.epsilon == 0:
            raise ValueError("sideband detuning eps = nu - delta must be nonzero")
        if self.n_max < 2:
            raise ValueError("n_max must be at least 2")

    @classmethod
    def entangling(cls, eta: float = 0.05, Omega_over_nu: float = 0.02, nu: float = 1.0, n_max: int = 20) -> "MSSpec":
        """Regime where eta^2 Omega^2 t_MS / eps = pi/2, i.e. eps = 2 eta Omega."""
        Omega = Omega_over_nu * nu
        eps = 2 * eta * Omega
        return cls(eta, Omega, nu, nu - eps, n_max)

    @property
    def epsilon(self) -> float:
        return self.nu - self.delta

    @property
    def t_ms(self) -> float:
        return 2 * math.pi / abs(self.epsilon)


def _collective_spin():
    s = [0.5 * SIGMA_X, 0.5 * SIGMA_Y]
    jx = kron(s[0], I2) + kron(I2, s[0])
    jy = kron(s[1], I2) + kron(I2, s[1])
    return jx, jy


def ms_displacement(spec: MSSpec, t: float) -> complex:
    """Displacement amplitude (eta Omega / eps)(e^{i eps t} - 1) multiplying J_y."""
    eps = spec.epsilon
    return spec.eta * spec.Omega / eps * (np.exp(1j * eps * t) - 1)


def ms_phase(spec: MSSpec, t: float) -> float:
    eps = spec.epsilon
    k = (spec.eta * spec.Omega) ** 2
    return k / eps * t - k / eps**2 * math.sin(eps * t)


def ms_effective_propagator(spec: MSSpec, t: float) -> np.ndarray:
    """D(beta J_y) exp(i phi J_y^2) on (spin 1)(x)(spin 2)(x)Fock."""
    _, jy = _collective_spin()
    a, a_dag, _, _ = fock_operators(spec.n_max)
    beta = ms_displacement(spec, t)
    if abs(beta) > 0:
        # exp(J_y (x) (beta a^dag - beta* a)) with a Hermitian generator
        gen = 1j * kron(jy, beta * a_dag - np.conj(beta) * a)
        disp = hermitian_propagator(gen, 1.0)
        # high Fock levels hold the truncation error of the displacement
        tail = np.abs(disp.reshape(4, spec.n_max, 4, spec.n_max)[:, -1, :, 0]).max()
        if tail > 1e-6:
            raise ValueError(f"n_max={spec.n_max} too small for displacement |beta|={abs(beta):.3g}")
    else:
        disp = np.eye(4 * spec.n_max, dtype=complex)
    spin = hermitian_propagator(-jy @ jy, ms_phase(spec, t))
    return disp @ kron(spin, np.eye(spec.n_max))


def ms_test_states(n_max: int) -> list[np.ndarray]:
    """Spin product and entangled states with the motion in its ground state."""
    s = 1 / math.sqrt(2)
    spins = [
        np.array([1, 0, 0, 0]),
        np.array([0, 1, 0, 0]),
        np.array([0, 0, 1, 0]),
        np.array([0, 0, 0, 1]),
        np.array([0.5, 0.5, 0.5, 0.5]),
        np.array([0.5, 0.5j, 0.5j, -0.5]),
        np.array([s, 0, 0, s]),
        np.array([0, s, -s, 0]),
    ]
    vac = basis(n_max, 0)
    return [np.kron(v.astype(complex), vac) for v in spins]


def ms_bichromatic_terms(spec: MSSpec):
    """Constant matrices of H(t) = 2 Omega cos(delta t) [J_x - eta J_y (x) (a e^{-i nu t} + h.c.)]."""
    jx, jy = _collective_spin()
    a, a_dag, _, _ = fock_operators(spec.n_max)
    eye = np.eye(spec.n_max)
    return kron(jx, eye), kron(jy, a), kron(jy, a_dag)


def ms_numeric_evolve(spec: MSSpec, states: np.ndarray, T: float, dt: float) -> np.ndarray:
    """RK4 integration of the full bichromatic Hamiltonian for columns of ``states``."""
    m_c, m_a, m_ad = ms_bichromatic_terms(spec)
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / n
    W, nu, eta, Om = spec.delta, spec.nu, spec.eta, spec.Omega

    def rhs(t, y):
        c = 2 * Om * math.cos(W * t)
        e = np.exp(-1j * nu * t)
        return -1j * c * (m_c @ y - eta * (e * (m_a @ y) + np.conj(e) * (m_ad @ y)))

    y = np.array(states, dtype=complex)
    t = 0.0
    for k in range(n):
        t = k * h
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def lamb_dicke_check(spec: MSSpec) -> float:
    """eta sqrt(<(a + a^dag)^2>) at the largest displacement reached."""
    beta = 2 * spec.eta * spec.Omega / abs(spec.epsilon)  # max |beta| * max |J_y|
    val = spec.eta * math.sqrt(4 * beta**2 + 1)
    if val > LAMB_DICKE_WARN:
        warnings.warn(f"outside the Lamb-Dicke regime: eta*sqrt(<(a+a^dag)^2>) = {val:.3f}", stacklevel=2)
    return val


def ms_numeric_check(spec: MSSpec, dt: float = 0.05, return_states: bool = False):
    """Mean fidelity between numeric evolution to t_MS and the closed-form propagator."""
    lamb_dicke_check(spec)
    states = np.array(ms_test_states(spec.n_max)).T
    U = ms_effective_propagator(spec, spec.t_ms)
    expected = U @ states
    got = ms_numeric_evolve(spec, states, spec.t_ms, dt)
    fids = [fidelity_pure(expected[:, k], got[:, k]) for k in range(states.shape[1])]
    if not np.all(np.isfinite(fids)):
        raise ConvergenceError("numeric MS evolution diverged; reduce dt")
    if return_states:
        return float(np.mean(fids)), got
    return float(np.mean(fids))
