"""Position-grid wave packets for the motional mode.

Translations are spectral (FFT phase ramps), so shifts are exact for
band-limited packets.  The grid is periodic; every public operation checks
that the packet stays clear of the edges instead of absorbing it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .qcore import BoundaryError, TrapSpec

BOUNDARY_TOL = 1e-6
EDGE_MARGIN_X0 = 8.0


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int = 2048

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min")
        n = self.n_points
        if n < 256 or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 256")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)


def default_grid(d: float, trap: TrapSpec = TrapSpec(), symmetric: bool = False,
                 overshoot: bool = False) -> GridSpec:
    """Grid covering [0, d] with 8 x0 margins.

    ``symmetric`` also covers [-|d|, 0], which the selection protocols need
    because their unwanted branches travel the other way.  ``overshoot``
    extends the far side to 2|d|, the turning point of a packet left behind
    by a sudden trap displacement.
    """
    x0 = trap.x0
    margin = EDGE_MARGIN_X0 * x0
    a = abs(d)
    left = a if (symmetric or overshoot or d < 0) else 0.0
    right = a if (symmetric or overshoot or d > 0) else 0.0
    if overshoot:
        left, right = (2 * a, a) if d < 0 else (a, 2 * a)
    lo, hi = -margin - left, right + margin
    n = 2048
    while (hi - lo) / n > x0 / 16:
        n *= 2
    return GridSpec(lo, hi, n)


@dataclass(frozen=True)
class GridWavePacket:
    grid: GridSpec
    psi: np.ndarray
    trap: TrapSpec = field(default_factory=TrapSpec)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def normalized(self) -> "GridWavePacket":
        return GridWavePacket(self.grid, self.psi / math.sqrt(self.norm), self.trap)

    def mean_x(self) -> float:
        w = np.abs(self.psi) ** 2
        return float(np.sum(w * self.grid.x) / np.sum(w))

    def var_x(self) -> float:
        w = np.abs(self.psi) ** 2
        w = w / np.sum(w)
        m = np.sum(w * self.grid.x)
        return float(np.sum(w * (self.grid.x - m) ** 2))


@dataclass(frozen=True)
class SpinGridWavePacket:
    """Two-level system times motional grid; ``up`` is the |0> component."""

    grid: GridSpec
    up: np.ndarray
    down: np.ndarray
    trap: TrapSpec = field(default_factory=TrapSpec)

    @classmethod
    def product(cls, spin: Sequence[complex], packet: GridWavePacket) -> "SpinGridWavePacket":
        s0, s1 = complex(spin[0]), complex(spin[1])
        return cls(packet.grid, s0 * packet.psi, s1 * packet.psi, packet.trap)

    @property
    def norm(self) -> float:
        return float((np.sum(np.abs(self.up) ** 2) + np.sum(np.abs(self.down) ** 2)) * self.grid.dx)

    def project(self, f_state: Sequence[complex]) -> GridWavePacket:
        """Unnormalized motional state <f|state>."""
        f0, f1 = np.conj(f_state[0]), np.conj(f_state[1])
        return GridWavePacket(self.grid, f0 * self.up + f1 * self.down, self.trap)


@dataclass(frozen=True)
class GaussianSuperposition:
    """sum_j c_j G(x - x_j) with unit-norm ground-state Gaussians of width x0."""

    coefficients: np.ndarray
    centers: np.ndarray
    x0: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        x = np.atleast_1d(np.asarray(self.centers, dtype=float))
        if c.shape != x.shape:
            raise ValueError("one center per coefficient")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "centers", x)

    @classmethod
    def single(cls, center: float, x0: float, coefficient: complex = 1.0) -> "GaussianSuperposition":
        return cls(np.array([coefficient]), np.array([center]), x0)

    @property
    def norm2(self) -> float:
        return float(gaussian_overlap(self, self).real)

    def mean_x(self) -> float:
        c, x = self.coefficients, self.centers
        dx = x[:, None] - x[None, :]
        mid = 0.5 * (x[:, None] + x[None, :])
        kern = np.exp(-dx**2 / (8 * self.x0**2))
        num = np.sum(c.conj()[:, None] * c[None, :] * kern * mid).real
        return float(num / self.norm2)


def _check_boundary(psi: np.ndarray, what: str = "wave packet") -> None:
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge >= BOUNDARY_TOL:
        raise BoundaryError(f"{what} touches the grid boundary (edge amplitude {edge:.3g})")


def _gaussian(x: np.ndarray, center: float, x0: float) -> np.ndarray:
    return (2 * np.pi * x0**2) ** -0.25 * np.exp(-((x - center) ** 2) / (4 * x0**2))


def gaussian_ground_state(grid: GridSpec, trap: TrapSpec = TrapSpec(), center: float = 0.0) -> GridWavePacket:
    psi = _gaussian(grid.x, center, trap.x0).astype(complex)
    _check_boundary(psi, "ground state")
    return GridWavePacket(grid, psi, trap).normalized()


def inner(a: GridWavePacket, b: GridWavePacket) -> complex:
    if a.grid != b.grid:
        raise ValueError("packets live on different grids")
    return complex(np.vdot(a.psi, b.psi) * a.grid.dx)


def fidelity(a: GridWavePacket, b: GridWavePacket) -> float:
    return abs(inner(a, b)) ** 2 / (a.norm * b.norm)


def _shift(psi: np.ndarray, grid: GridSpec, shift: float) -> np.ndarray:
    if shift == 0:
        return psi.copy()
    return np.fft.ifft(np.fft.fft(psi) * np.exp(-1j * grid.k * shift))


def translate(packet: GridWavePacket, shift: float) -> GridWavePacket:
    """Apply exp(-i shift p): psi(x) -> psi(x - shift)."""
    out = _shift(packet.psi, packet.grid, shift)
    _check_boundary(out, "translated packet")
    return GridWavePacket(packet.grid, out, packet.trap)


def conditional_translate(sp: SpinGridWavePacket, g: float, tau: float) -> SpinGridWavePacket:
    """Exact exp(-i g tau sigma_x (x) p).

    The sigma_x = +1 branch moves by +g tau and the -1 branch by -g tau.
    """
    s = g * tau
    plus = (sp.up + sp.down) / math.sqrt(2)
    minus = (sp.up - sp.down) / math.sqrt(2)
    plus = _shift(plus, sp.grid, s)
    minus = _shift(minus, sp.grid, -s)
    up = (plus + minus) / math.sqrt(2)
    down = (plus - minus) / math.sqrt(2)
    _check_boundary(up, "spin-up branch")
    _check_boundary(down, "spin-down branch")
    return SpinGridWavePacket(sp.grid, up, down, sp.trap)


def evolve_split_operator(
    packet: GridWavePacket,
    trap_center: Callable[[float], float],
    dt: float,
    T: float,
    check_every: int = 200,
) -> GridWavePacket:
    """Strang-split evolution under p^2/2M + M nu^2 (x - x_trap(t))^2 / 2.

    The number of steps is round(T / dt) and the step is adjusted so the
    evolution ends exactly at ``T``.  Adjacent half-potential kicks are merged.
    """
    if T < 0 or dt <= 0:
        raise ValueError("need T >= 0 and dt > 0")
    n_steps = max(1, int(round(T / dt))) if T > 0 else 0
    if n_steps == 0:
        return packet
    h = T / n_steps
    grid, trap = packet.grid, packet.trap
    x = grid.x
    kinetic = np.exp(-1j * h * grid.k**2 / (2 * trap.mass))
    k_pot = 0.5 * trap.mass * trap.nu**2

    def half_kick(t: float) -> np.ndarray:
        return -1j * 0.5 * h * k_pot * (x - trap_center(t)) ** 2

    psi = packet.psi.astype(complex, copy=True)
    prev = half_kick(0.5 * h)
    psi *= np.exp(prev)
    for step in range(n_steps):
        psi = np.fft.ifft(kinetic * np.fft.fft(psi))
        if step + 1 < n_steps:
            nxt = half_kick((step + 1.5) * h)
            psi *= np.exp(prev + nxt)
            prev = nxt
        else:
            psi *= np.exp(prev)
        if (step + 1) % check_every == 0 or step + 1 == n_steps:
            edge = max(abs(psi[0]), abs(psi[-1]))
            if edge >= BOUNDARY_TOL:
                raise BoundaryError(
                    f"packet reached the grid boundary at t={(step + 1) * h:.6g} "
                    f"(edge amplitude {edge:.3g})"
                )
    return GridWavePacket(grid, psi, trap)


def gaussian_overlap(a: GaussianSuperposition, b: GaussianSuperposition) -> complex:
    """<a|b>; unit Gaussians displaced by D overlap as exp(-D^2 / (8 x0^2))."""
    if not math.isclose(a.x0, b.x0, rel_tol=1e-12):
        raise ValueError("superpositions must share one Gaussian width")
    d = a.centers[:, None] - b.centers[None, :]
    kern = np.exp(-d**2 / (8 * a.x0**2))
    return complex(a.coefficients.conj() @ kern @ b.coefficients)


def render(gsup: GaussianSuperposition, grid: GridSpec, trap: TrapSpec | None = None) -> GridWavePacket:
    """Sample the superposition on ``grid`` and normalize it."""
    trap = trap or TrapSpec()
    if not math.isclose(trap.x0, gsup.x0, rel_tol=1e-12):
        raise ValueError("trap width does not match the superposition")
    if np.any(gsup.centers <= grid.x_min) or np.any(gsup.centers >= grid.x_max):
        raise BoundaryError("a Gaussian center lies outside the grid")
    x = grid.x
    psi = np.zeros(grid.n_points, dtype=complex)
    for c, x_j in zip(gsup.coefficients, gsup.centers):
        psi += c * _gaussian(x, x_j, gsup.x0)
    _check_boundary(psi, "rendered superposition")
    return GridWavePacket(grid, psi, trap).normalized()


def write_packet_csv(packet: GridWavePacket, fh) -> None:
    """Write columns x, re, im, abs2."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "re", "im", "abs2"])
    for x, v in zip(packet.grid.x, packet.psi):
        w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v) ** 2))])
