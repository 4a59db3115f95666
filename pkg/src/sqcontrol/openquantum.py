"""Lindblad dynamics with mid-protocol post-selection.

Density matrices are evolved with classical RK4 on the row-major vectorized
state, using a sparse Liouvillian built once per (H, channels) pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .qcore import (
    SIGMA_X,
    SIGMA_Z,
    I2,
    NumericalError,
    TrapSpec,
    coherent_state,
    default_fock_dim,
    dm,
    fock_operators,
    kron,
    partial_trace,
    purity,
)
from .records import ExperimentRecord
from .search import SearchConfig, sqc_coupling
from .selection import design_sigma_x_pair, design_sigma_y_pair
from .transport import Setting, TransportConfig

DEFAULT_DT_MAX = 2.5e-3
MIN_SELECTION_PROB = 1e-12

TRANSPORT_CHANNELS = ("tls_dephasing", "ho_lowering", "ho_raising")
SEARCH_CHANNELS = ("controller_dephasing", "target_dephasing")


@dataclass(frozen=True)
class NoiseSpec:
    """Collapse rate ``gamma`` shared by all ``channels`` and a per-selection loss.

    ``channels`` names the collapse operators; ``None`` selects the protocol's
    standard set (TRANSPORT_CHANNELS or SEARCH_CHANNELS).
    """

    gamma: float = 0.0
    p_error: float = 0.0
    channels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not (0 <= self.p_error < 1):
            raise ValueError("p_error must be in [0,1)")


@dataclass
class OpenRunResult:
    raw_fidelity: float
    penalized_fidelity: float
    actual_probability: float
    purity_trace: list[float] = field(default_factory=list)
    round_probabilities: list[float] = field(default_factory=list)
    trace_errors: list[float] = field(default_factory=list)
    hermiticity_errors: list[float] = field(default_factory=list)
    min_eigenvalues: list[float] = field(default_factory=list)


class Lindbladian:
    """Sparse generator L with vec(d rho/dt) = L vec(rho) (row-major vec)."""

    def __init__(self, h, channels: Sequence = ()):
        h = sp.csr_matrix(h, dtype=complex)
        d = h.shape[0]
        eye = sp.identity(d, dtype=complex, format="csr")
        L = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
        for c in channels:
            c = sp.csr_matrix(c, dtype=complex)
            cdc = (c.conj().T @ c).tocsr()
            L = L + sp.kron(c, c.conj()) - 0.5 * sp.kron(cdc, eye) - 0.5 * sp.kron(eye, cdc.T)
        self.dim = d
        self.L = sp.csr_matrix(L)

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        return (self.L @ rho.reshape(-1)).reshape(self.dim, self.dim)

    def step(self, rho: np.ndarray, dt: float) -> np.ndarray:
        v = rho.reshape(-1)
        L = self.L
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = L @ v
            k2 = L @ (v + 0.5 * dt * k1)
            k3 = L @ (v + 0.5 * dt * k2)
            k4 = L @ (v + dt * k3)
            out = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"Lindblad step produced non-finite values; dt={dt} is too large")
        return out.reshape(self.dim, self.dim)

    def evolve(self, rho: np.ndarray, T: float, dt: float) -> np.ndarray:
        n = max(1, int(math.ceil(T / dt - 1e-9)))
        h = T / n
        for _ in range(n):
            rho = self.step(rho, h)
        return rho


def lindblad_step(rho: np.ndarray, h, channels: Sequence, dt: float) -> np.ndarray:
    """One RK4 step of d rho/dt = -i[H, rho] + sum_k (C rho C^+ - {C^+ C, rho}/2)."""
    return Lindbladian(h, channels).step(np.asarray(rho, dtype=complex), dt)


def post_select_system(rho: np.ndarray, f: np.ndarray, sys_dim: int, app_dim: int):
    """Project the system factor on |f>; returns (renormalized rho, probability)."""
    proj = sp.kron(sp.csr_matrix(dm(f)), sp.identity(app_dim), format="csr")
    if rho.shape != (sys_dim * app_dim,) * 2:
        raise ValueError("density matrix does not match sys_dim * app_dim")
    out = proj @ (proj @ rho.conj().T).conj().T
    prob = float(np.trace(out).real)
    if not prob > MIN_SELECTION_PROB:
        raise NumericalError(f"post-selection probability {prob:.3g} too small; run aborted")
    return out / prob, prob


def _diagnostics(res: OpenRunResult, rho: np.ndarray) -> None:
    res.trace_errors.append(abs(float(np.trace(rho).real) - 1.0))
    res.hermiticity_errors.append(float(np.max(np.abs(rho - rho.conj().T))))
    res.min_eigenvalues.append(float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
    res.purity_trace.append(purity(rho))


def default_open_dt(dT: float) -> float:
    return min(DEFAULT_DT_MAX, dT / 100)


def _selection_rounds(lv: Lindbladian, pair, rho_app: np.ndarray, N: int, dT: float, dt: float):
    app_dim = rho_app.shape[0]
    res = OpenRunResult(0.0, 0.0, 1.0)
    rho_i = dm(pair.i_state)
    for _ in range(N):
        rho = np.kron(rho_i, rho_app)
        rho = lv.evolve(rho, dT, dt)
        _diagnostics(res, rho)
        rho, prob = post_select_system(rho, pair.f_state, 2, app_dim)
        res.round_probabilities.append(prob)
        rho_app = partial_trace(rho, (2, app_dim), keep=1)
    res.actual_probability = float(np.prod(res.round_probabilities))
    return rho_app, res


def transport_channels(gamma: float, n_max: int, names: Sequence[str] = TRANSPORT_CHANNELS) -> list:
    a, a_dag, _, _ = fock_operators(n_max)
    eye_n = np.eye(n_max)
    s = math.sqrt(gamma)
    table = {
        "tls_dephasing": lambda: s * kron(SIGMA_Z, eye_n),
        "ho_lowering": lambda: s * kron(I2, a),
        "ho_raising": lambda: s * kron(I2, a_dag),
    }
    try:
        return [sp.csr_matrix(table[n]()) for n in names] if gamma > 0 else []
    except KeyError as exc:
        raise ValueError(f"unknown transport channel {exc.args[0]!r}") from None


def open_transport_run(cfg: TransportConfig, noise: NoiseSpec, n_max: int | None = None,
                       dt: float | None = None) -> OpenRunResult:
    """Selection-driven transport in truncated Fock space under H = g sigma_x (x) p."""
    alpha = cfg.d / (2 * cfg.trap.x0)
    n_max = n_max or default_fock_dim(alpha)
    target = coherent_state(alpha, n_max)
    _, _, _, p_op = fock_operators(n_max, cfg.trap)
    H = cfg.g * kron(SIGMA_X, p_op)
    lv = Lindbladian(H, transport_channels(noise.gamma, n_max, noise.channels or TRANSPORT_CHANNELS))
    rho_app = np.zeros((n_max, n_max), dtype=complex)
    rho_app[0, 0] = 1.0
    dt = dt or default_open_dt(cfg.dT)
    rho_app, res = _selection_rounds(lv, design_sigma_x_pair(cfg.p), rho_app, cfg.N, cfg.dT, dt)
    res.raw_fidelity = float(np.vdot(target, rho_app @ target).real)
    res.penalized_fidelity = res.raw_fidelity * (1 - noise.p_error) ** cfg.N
    return res


def search_channels(gamma: float, names: Sequence[str] = SEARCH_CHANNELS) -> list:
    s = math.sqrt(gamma)
    table = {
        "controller_dephasing": lambda: s * kron(SIGMA_Z, I2),
        "target_dephasing": lambda: s * kron(I2, SIGMA_Z),
    }
    try:
        return [table[n]() for n in names] if gamma > 0 else []
    except KeyError as exc:
        raise ValueError(f"unknown search channel {exc.args[0]!r}") from None


def open_search_run(cfg: SearchConfig, noise: NoiseSpec, dt: float | None = None) -> OpenRunResult:
    """Two-qubit search with local dephasing on controller and target."""
    if cfg.N_G != 2:
        raise ValueError("the open search model has two entries")
    lv = Lindbladian(sqc_coupling(cfg.g), search_channels(noise.gamma, noise.channels or SEARCH_CHANNELS))
    dt = dt or default_open_dt(cfg.dT)
    rho_app, res = _selection_rounds(lv, design_sigma_y_pair(cfg.p), dm(cfg.database_state), cfg.N, cfg.dT, dt)
    res.raw_fidelity = float(rho_app[cfg.target, cfg.target].real)
    res.penalized_fidelity = res.raw_fidelity * (1 - noise.p_error) ** cfg.N
    return res


def tradeoff_peak(records: Sequence[ExperimentRecord], key: str = "fidelity_penalized") -> int | None:
    """N maximizing ``key`` when the maximum is interior to the sweep, else None."""
    if len(records) < 3:
        return None
    Ns = [r.N for r in records]
    if Ns != sorted(Ns):
        raise ValueError("records must be sorted by N")
    vals = [getattr(r, key) for r in records]
    best = int(np.argmax(vals))
    if best in (0, len(vals) - 1):
        return None
    return Ns[best]


def open_transport_point(setting: Setting | str, P: float, N: int, noise: NoiseSpec,
                         n_max: int | None = None, dt: float | None = None,
                         trap: TrapSpec = TrapSpec()) -> ExperimentRecord:
    s = Setting.parse(setting)
    cfg = TransportConfig.from_setting(s, N, P, trap)
    n_max = n_max or default_fock_dim(cfg.d / (2 * trap.x0))
    res = open_transport_run(cfg, noise, n_max, dt)
    return ExperimentRecord(
        protocol="open-transport", setting=s.label, N=N, g=s.g, d_over_x0=s.d_over_x0,
        P_nominal=P, P_actual=res.actual_probability, T=cfg.T, dT=cfg.dT,
        fidelity_raw=res.raw_fidelity, fidelity_penalized=res.penalized_fidelity,
        gamma=noise.gamma, p_error=noise.p_error, n_max=n_max,
    )


def open_search_point(g: float, P: float, N: int, noise: NoiseSpec, dt: float | None = None) -> ExperimentRecord:
    cfg = SearchConfig(g=g, N=N, P=P)
    res = open_search_run(cfg, noise, dt)
    return ExperimentRecord(
        protocol="open-search", setting="search", N=N, g=g, P_nominal=P, P_actual=res.actual_probability,
        T=cfg.T, dT=cfg.dT, fidelity_raw=res.raw_fidelity, fidelity_penalized=res.penalized_fidelity,
        gamma=noise.gamma, p_error=noise.p_error, n_max=2,
    )
