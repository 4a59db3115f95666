"""Pre/post-selection pairs, weak values and the cat-state readout."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .qcore import SIGMA_X, SIGMA_Y, TrapSpec

WEAK_GAMMA = 0.01
STRONG_GAMMA = 10.0


class SelectionKind(enum.Enum):
    SIGMA_X_OPTIMAL = "sigma_x_optimal"
    SIGMA_Y_PHASED = "sigma_y_phased"
    EIGEN_ANCHORED = "eigen_anchored"


@dataclass(frozen=True)
class SelectionPair:
    p: float
    i_state: np.ndarray
    f_state: np.ndarray
    kind: SelectionKind

    @property
    def overlap(self) -> complex:
        """<f|i>."""
        return complex(np.vdot(self.f_state, self.i_state))

    @property
    def measured_operator(self) -> np.ndarray:
        return SIGMA_Y if self.kind is SelectionKind.SIGMA_Y_PHASED else SIGMA_X


@dataclass(frozen=True)
class CatReadout:
    """Branch weights of <f| exp(-i gT A (x) p) |i> in the eigenbasis of A.

    ``c0`` multiplies the packet shifted by +gT (eigenvalue +1), ``c1`` the
    one shifted by -gT.
    """

    c0: complex
    c1: complex
    gamma: float = 0.0
    gT: float = 1.0

    def __post_init__(self):
        if abs(self.c0) == 0 and abs(self.c1) == 0:
            raise ValueError("both branch coefficients vanish")
        if self.gamma < 0:
            raise ValueError("interference factor must be non-negative")


def _check_p(p: float) -> float:
    p = float(p)
    if not (0 < p <= 1):
        raise ValueError("selection probability p must be in (0,1]")
    return p


def _optimal_amplitudes(p: float) -> tuple[float, float]:
    r = math.sqrt(1 - p)
    return math.sqrt((1 - r) / 2), math.sqrt((1 + r) / 2)


def design_sigma_x_pair(p: float) -> SelectionPair:
    """Real selections with <f|i> = sqrt(p) and sigma_x weak value 1/sqrt(p)."""
    p = _check_p(p)
    a, b = _optimal_amplitudes(p)
    return SelectionPair(
        p, np.array([a, b], dtype=complex), np.array([b, a], dtype=complex), SelectionKind.SIGMA_X_OPTIMAL
    )


def design_sigma_y_pair(p: float) -> SelectionPair:
    """Phased selections with sigma_y |i> = |f>, so the sigma_y weak value is 1/sqrt(p)."""
    p = _check_p(p)
    a, b = _optimal_amplitudes(p)
    return SelectionPair(
        p, np.array([a, 1j * b]), np.array([b, 1j * a]), SelectionKind.SIGMA_Y_PHASED
    )


def design_eigen_anchored_pair(p: float) -> SelectionPair:
    """|i> = |0>, |f> = sqrt(p)|0> + sqrt(1-p)|1>: strong readout equals <f|sigma_x|f>."""
    p = _check_p(p)
    return SelectionPair(
        p,
        np.array([1.0, 0.0], dtype=complex),
        np.array([math.sqrt(p), math.sqrt(1 - p)], dtype=complex),
        SelectionKind.EIGEN_ANCHORED,
    )


DESIGNS = {
    SelectionKind.SIGMA_X_OPTIMAL: design_sigma_x_pair,
    SelectionKind.SIGMA_Y_PHASED: design_sigma_y_pair,
    SelectionKind.EIGEN_ANCHORED: design_eigen_anchored_pair,
}


def weak_value(pair: SelectionPair, op: np.ndarray) -> complex:
    """<f|op|i> / <f|i>."""
    den = pair.overlap
    if abs(den) < 1e-14:
        raise ValueError("weak value undefined for orthogonal selections")
    return complex(np.vdot(pair.f_state, np.asarray(op) @ pair.i_state)) / den


def interference_factor(gT: float, trap: TrapSpec = TrapSpec()) -> float:
    return abs(gT) / (math.sqrt(2) * trap.x0)


def cat_coefficients(pair: SelectionPair, gT: float = 1.0, trap: TrapSpec = TrapSpec()) -> CatReadout:
    """Expand both selections in the eigenbasis of the measured operator."""
    w, v = np.linalg.eigh(pair.measured_operator)
    plus, minus = v[:, 1], v[:, 0]  # eigh sorts ascending: -1 then +1
    a0, a1 = np.vdot(plus, pair.i_state), np.vdot(minus, pair.i_state)
    b0, b1 = np.vdot(plus, pair.f_state), np.vdot(minus, pair.f_state)
    return CatReadout(complex(a0 * b0.conjugate()), complex(a1 * b1.conjugate()), interference_factor(gT, trap), gT)


def expected_shift(cr: CatReadout) -> float:
    """Mean displacement of the post-selected two-branch packet."""
    n0, n1 = abs(cr.c0) ** 2, abs(cr.c1) ** 2
    cross = 2 * (cr.c0.conjugate() * cr.c1).real
    den = n0 + n1 + cross * math.exp(-cr.gamma**2)
    if den <= 1e-300:
        raise ValueError("post-selected state has vanishing norm")
    return (n0 - n1) * cr.gT / den


def weak_limit(pair: SelectionPair) -> float:
    return weak_value(pair, pair.measured_operator).real


def strong_limit(pair: SelectionPair) -> float:
    cr = cat_coefficients(pair)
    n0, n1 = abs(cr.c0) ** 2, abs(cr.c1) ** 2
    return (n0 - n1) / (n0 + n1)


def readout_curve(kind: SelectionKind | str, gamma_list: Iterable[float], p_grid: Iterable[float]) -> list[dict]:
    """Rows of (p, gamma, shift_over_gT, weak_limit, strong_limit).

    gT is fixed to 1, so Gamma is varied through the trap width.
    """
    kind = SelectionKind(kind) if isinstance(kind, str) else kind
    design = DESIGNS[kind]
    rows = []
    for p in p_grid:
        pair = design(p)
        base = cat_coefficients(pair)
        wl, sl = weak_limit(pair), strong_limit(pair)
        for gamma in gamma_list:
            cr = CatReadout(base.c0, base.c1, float(gamma), 1.0)
            rows.append(
                {
                    "p": float(p),
                    "gamma": float(gamma),
                    "shift_over_gT": expected_shift(cr),
                    "weak_limit": wl,
                    "strong_limit": sl,
                }
            )
    return rows
