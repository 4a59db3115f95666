"""Fast ion transport by sequential selections, and the moving-trap baseline."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import comb

from .qcore import TrapSpec
from .records import ExperimentRecord
from .selection import design_sigma_x_pair
from .wavepacket import (
    GaussianSuperposition,
    GridSpec,
    GridWavePacket,
    SpinGridWavePacket,
    conditional_translate,
    default_grid,
    evolve_split_operator,
    fidelity,
    gaussian_ground_state,
    gaussian_overlap,
)

DEFAULT_DT = 1e-3


class Setting(enum.Enum):
    """Coupling and distance (in units of x0) of the three benchmark settings."""

    I = ("i", 0.75, 7.5)
    II = ("ii", 1.0, 10.0)
    III = ("iii", 1.5, 15.0)

    def __init__(self, label, g, d_over_x0):
        self.label = label
        self.g = g
        self.d_over_x0 = d_over_x0

    @classmethod
    def parse(cls, value) -> "Setting":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().strip("()")
        for s in cls:
            if key in (s.label, s.name.lower()):
                return s
        raise ValueError(f"unknown transport setting {value!r}; use i, ii or iii")


@dataclass(frozen=True)
class TransportConfig:
    """Selection-driven transport of the motional ground state by ``d``.

    Per-round probability, weak value, duration and round length are derived
    from (g, d, N, P).  ``duration`` overrides the timing rule T = (d/g) sqrt(p);
    it exists for the uncoupled case g = 0, where that rule has no value.
    """

    g: float
    d: float
    N: int
    P: float
    trap: TrapSpec = field(default_factory=TrapSpec)
    grid: GridSpec | None = None
    duration: float | None = None

    def __post_init__(self):
        if not (0 < self.P <= 1):
            raise ValueError("P must be in (0,1]")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.duration is None and self.g == 0:
            raise ValueError("g = 0 needs an explicit duration")
        if self.duration is not None and self.duration < 0:
            raise ValueError("duration must be non-negative")

    @classmethod
    def from_setting(cls, setting: Setting | str, N: int, P: float, trap: TrapSpec = TrapSpec(), **kw):
        s = Setting.parse(setting)
        return cls(g=s.g, d=s.d_over_x0 * trap.x0, N=N, P=P, trap=trap, **kw)

    @property
    def p(self) -> float:
        return self.P ** (1.0 / self.N)

    @property
    def weak_value(self) -> float:
        return 1.0 / math.sqrt(self.p)

    @property
    def T(self) -> float:
        if self.duration is not None:
            return float(self.duration)
        return self.d / self.g * math.sqrt(self.p)

    @property
    def dT(self) -> float:
        return self.T / self.N

    @property
    def kick(self) -> float:
        """Bare branch displacement g * dT per round."""
        return self.g * self.dT

    def resolved_grid(self) -> GridSpec:
        return self.grid or default_grid(self.d, self.trap, symmetric=True)


@dataclass
class TransportResult:
    fidelity: float
    nominal_probability: float
    actual_probability: float
    final_state: GaussianSuperposition | GridWavePacket
    round_probabilities: list[float] = field(default_factory=list)


def _round_weights(w: float) -> tuple[float, float]:
    # per-round branch weights normalized by <f|i> = sqrt(p)
    return (1 + w) / 2, (1 - w) / 2


def sqc_transport_closed(cfg: TransportConfig) -> TransportResult:
    """Closed form: N rounds give a binomial superposition of displaced Gaussians."""
    N = cfg.N
    right, left = _round_weights(cfg.weak_value)
    k = np.arange(N + 1)
    coeffs = comb(N, k, exact=False) * right**k * left ** (N - k)
    centers = (2 * k - N) * cfg.kick
    sup = GaussianSuperposition(coeffs.astype(complex), centers, cfg.trap.x0)
    norm2 = sup.norm2
    target = GaussianSuperposition.single(cfg.d, cfg.trap.x0)
    F = abs(gaussian_overlap(target, sup)) ** 2 / norm2
    return TransportResult(
        fidelity=float(F),
        nominal_probability=cfg.P,
        actual_probability=float(cfg.p**N * norm2),
        final_state=sup,
    )


def sqc_transport_grid(cfg: TransportConfig) -> TransportResult:
    """Simulate reset / conditional kick / projection rounds on the position grid."""
    grid = cfg.resolved_grid()
    pair = design_sigma_x_pair(cfg.p)
    psi = gaussian_ground_state(grid, cfg.trap, 0.0)
    probs = []
    for _ in range(cfg.N):
        joint = SpinGridWavePacket.product(pair.i_state, psi)
        joint = conditional_translate(joint, cfg.g, cfg.dT)
        out = joint.project(pair.f_state)
        prob = out.norm
        if not prob > 1e-300:
            raise ValueError("post-selection failed: vanishing norm")
        probs.append(prob)
        psi = out.normalized()
    target = gaussian_ground_state(grid, cfg.trap, cfg.d)
    return TransportResult(
        fidelity=fidelity(psi, target),
        nominal_probability=cfg.P,
        actual_probability=float(np.prod(probs)),
        final_state=psi,
        round_probabilities=probs,
    )


def trap_trajectory(d: float, T: float):
    """Cubic ramp x_trap(t) = 3 d t^2/T^2 - 2 d t^3/T^3."""

    def x_trap(t: float) -> float:
        s = t / T
        return d * (3 * s**2 - 2 * s**3)

    return x_trap


def aqc_transport(
    d: float,
    T: float,
    trap: TrapSpec = TrapSpec(),
    grid: GridSpec | None = None,
    dt: float = DEFAULT_DT,
) -> float:
    """Fidelity of moving the trap centre from 0 to ``d`` in time ``T``."""
    if T <= 0:
        raise ValueError("T must be positive")
    grid = grid or default_grid(d, trap, overshoot=True)
    psi = gaussian_ground_state(grid, trap, 0.0)
    if d == 0:
        final = evolve_split_operator(psi, lambda t: 0.0, dt, T)
    else:
        final = evolve_split_operator(psi, trap_trajectory(d, T), dt, T)
    return fidelity(final, gaussian_ground_state(grid, trap, d))


def transport_point(setting: Setting | str, P: float, N: int, method: str = "closed",
                    trap: TrapSpec = TrapSpec(), dt: float = DEFAULT_DT) -> ExperimentRecord:
    s = Setting.parse(setting)
    cfg = TransportConfig.from_setting(s, N, P, trap)
    if method == "closed":
        res = sqc_transport_closed(cfg)
        F, Pa = res.fidelity, res.actual_probability
    elif method == "grid":
        res = sqc_transport_grid(cfg)
        F, Pa = res.fidelity, res.actual_probability
    elif method == "aqc":
        F, Pa = aqc_transport(cfg.d, cfg.T, trap, dt=dt), 1.0
    else:
        raise ValueError(f"unknown transport method {method!r}")
    return ExperimentRecord(
        protocol="transport-" + ("aqc" if method == "aqc" else "sqc"),
        setting=s.label,
        N=N,
        g=s.g,
        d_over_x0=s.d_over_x0,
        P_nominal=P,
        P_actual=Pa,
        T=cfg.T,
        dT=cfg.dT,
        fidelity=F,
        method=method,
    )


def transport_sweep(setting: Setting | str, P: float, N_list: Sequence[int], method: str = "closed",
                    trap: TrapSpec = TrapSpec(), dt: float = DEFAULT_DT) -> list[ExperimentRecord]:
    """One record per N; ``method`` is closed, grid or aqc (moving trap at the matched T)."""
    if not len(N_list):
        raise ValueError("N_list must not be empty")
    return [transport_point(setting, P, int(N), method, trap, dt) for N in N_list]
