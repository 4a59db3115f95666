"""Command-line front end: configuration, sweeps and figure presets.

Every command produces CSV.  Configuration comes from an optional
``key = value`` file (``--config``) overridden by flags; all values are
validated before any computation starts.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .openquantum import NoiseSpec, open_search_point, open_transport_point
from .qcore import NumericalError, TrapSpec, coherent_state
from .records import (
    MS_COLUMNS,
    OPEN_COLUMNS,
    READOUT_COLUMNS,
    SEARCH_COLUMNS,
    TRANSPORT_COLUMNS,
    ExperimentRecord,
    write_csv,
)
from .search import (
    AdiabaticSpec,
    Family,
    MSSpec,
    SearchConfig,
    aqc_search_run,
    cost_sqc,
    cost_type_i,
    cost_type_ii,
    equalize_cost,
    ms_displacement,
    ms_numeric_check,
    multiqubit_sqc_search,
    sqc_search_run,
)
from .selection import SelectionKind, readout_curve
from .transport import (
    DEFAULT_DT,
    Setting,
    TransportConfig,
    aqc_transport,
    sqc_transport_closed,
    sqc_transport_grid,
)
from .wavepacket import GridSpec, gaussian_ground_state, write_packet_csv

FIGURES = ("fig1b", "fig1c", "fig1d", "fig2b", "fig2c", "fig3a", "fig3b", "figS1")
SWEEP_N = tuple(range(1, 17))
FIG3_GAMMA = 0.01
FIG3_P_ERROR = 5e-3
S1_GAMMAS = (0.01, 0.1, 0.5, 1.0, 2.0, 10.0)
MS_DEFAULT_DT = 0.05

_REQUIRED = object()


@dataclass(frozen=True)
class Param:
    kind: str  # int, float, str, ints, floats
    default: object = None
    help: str = ""


_GLOBAL = {
    "jobs": Param("int", None, "worker processes (default: logical cores)"),
    "dt": Param("float", None, "integration step"),
    "nmax": Param("int", None, "Fock-space truncation"),
}

_GEOMETRY = {
    "setting": Param("str", None, "benchmark setting i, ii or iii"),
    "g": Param("float", None, "coupling strength"),
    "d_over_x0": Param("float", None, "transport distance in units of x0"),
    "grid_extent": Param("float", None, "grid half-width in units of x0 (default: automatic)"),
}

COMMANDS: dict[str, dict[str, Param]] = {
    "transport-sqc": {
        **_GEOMETRY,
        "P": Param("float", _REQUIRED, "total success probability"),
        "N": Param("ints", _REQUIRED, "selection rounds, e.g. 8 or 1,2,4 or 1..16"),
        "method": Param("str", "closed", "closed or grid"),
    },
    "transport-aqc": {
        **_GEOMETRY,
        "T": Param("floats", None, "durations; default is the selection protocol's T(P, N)"),
        "P": Param("float", None, "probability used to match T"),
        "N": Param("ints", None, "rounds used to match T"),
    },
    "search-sqc": {
        "g": Param("float", 1.0, "coupling strength"),
        "P": Param("float", _REQUIRED, "total success probability"),
        "N": Param("ints", _REQUIRED, "selection rounds"),
        "N_G": Param("int", 2, "database size"),
        "target": Param("int", 0, "target index"),
    },
    "search-aqc": {
        "family": Param("str", "both", "type-i, type-ii or both"),
        "g": Param("float", 1.0, "coupling whose cost 2g the amplitudes match"),
        "T": Param("floats", None, "durations; default is the selection protocol's T(P, N)"),
        "P": Param("float", None, "probability used to match T"),
        "N": Param("ints", None, "rounds used to match T"),
    },
    "readout-curve": {
        "kind": Param("str", "sigma_x_optimal", "sigma_x_optimal, sigma_y_phased or eigen_anchored"),
        "gamma": Param("floats", S1_GAMMAS, "interference factors"),
        "p_min": Param("float", 0.01, "smallest selection probability"),
        "p_max": Param("float", 1.0, "largest selection probability"),
        "p_points": Param("int", 100, "number of probabilities"),
    },
    "ms-check": {
        "eta": Param("float", 0.05, "Lamb-Dicke parameter"),
        "Omega": Param("float", 0.02, "Rabi frequency"),
        "nu": Param("float", 1.0, "trap frequency"),
        "delta": Param("float", None, "laser detuning (default: nu - 2 eta Omega)"),
    },
    "open-transport": {
        "setting": Param("str", _REQUIRED, "benchmark setting i, ii or iii"),
        "P": Param("float", _REQUIRED, "total success probability"),
        "N": Param("ints", _REQUIRED, "selection rounds"),
        "gamma": Param("float", FIG3_GAMMA, "dephasing and damping rate"),
        "p_error": Param("float", 0.0, "fidelity loss per selection"),
    },
    "open-search": {
        "g": Param("float", 1.0, "coupling strength"),
        "P": Param("float", _REQUIRED, "total success probability"),
        "N": Param("ints", _REQUIRED, "selection rounds"),
        "gamma": Param("float", FIG3_GAMMA, "dephasing rate"),
        "p_error": Param("float", 0.0, "fidelity loss per selection"),
    },
    "reproduce": {
        "figure": Param("str", _REQUIRED, ", ".join(FIGURES)),
    },
}


def _schema(command: str) -> dict[str, Param]:
    return {**COMMANDS[command], **_GLOBAL}


# -- manifest -----------------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict = field(default_factory=dict)
    output_path: str | None = None

    def get(self, key, default=None):
        v = self.parameters.get(key)
        return default if v is None else v

    def serialize(self) -> str:
        """Config-file text that parses back to this manifest."""
        lines = [f"command = {self.command}"]
        if self.output_path is not None:
            lines.append(f"out = {self.output_path}")
        for key in _schema(self.command):
            v = self.parameters.get(key)
            if v is not None:
                lines.append(f"{key} = {_format(v)}")
        return "\n".join(lines) + "\n"


def _format(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_number(key: str, text: str, kind: str):
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        val = float(text)
    except ValueError:
        raise ValueError(f"malformed number for key '{key}': {text!r}") from None
    if not math.isfinite(val):
        raise ValueError(f"malformed number for key '{key}': {text!r}")
    return val


def _parse_ints(key: str, text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = _parse_number(key, lo, "int"), _parse_number(key, hi, "int")
            if hi < lo:
                raise ValueError(f"empty range for key '{key}': {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_parse_number(key, part, "int"))
    return tuple(out)


def _convert(key: str, raw, kind: str):
    if not isinstance(raw, str):
        return raw
    if kind == "str":
        return raw.strip()
    if kind in ("int", "float"):
        return _parse_number(key, raw, kind)
    if kind == "ints":
        return _parse_ints(key, raw)
    return tuple(_parse_number(key, x, "float") for x in raw.split(","))


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: missing key")
        out[key] = value
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValueError(message)


def _flag(key: str) -> list[str]:
    names = ["--" + key.replace("_", "-")]
    if "_" in key:
        names.append("--" + key)
    return names


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (directory for reproduce)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value configuration file")
    for key, prm in _GLOBAL.items():
        common.add_argument(*_flag(key), dest=key, default=argparse.SUPPRESS, help=prm.help)

    parser = _Parser(prog="sqcontrol", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, schema in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common])
        if name == "reproduce":
            sp.add_argument("figure_pos", nargs="?", choices=FIGURES, metavar="FIGURE", default=argparse.SUPPRESS)
        for key, prm in schema.items():
            sp.add_argument(*_flag(key), dest=key, default=argparse.SUPPRESS, help=prm.help)
    return parser


def parse_config(args: Sequence[str], config_text: str | None = None) -> RunManifest:
    """Merge a config file (text or ``--config`` path) with flags; flags win."""
    ns = vars(build_parser().parse_args(list(args)))
    if config_text is None and "config" in ns:
        try:
            config_text = Path(ns["config"]).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValueError(f"cannot read config file: {exc}") from None
    ns.pop("config", None)
    values = parse_kv(config_text) if config_text else {}
    command = ns.pop("command", None) or values.get("command")
    values.pop("command", None)
    if command is None:
        raise ValueError("missing required key 'command'")
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    if "figure_pos" in ns:
        ns["figure"] = ns.pop("figure_pos")
    values.update(ns)

    output_path = values.pop("out", None)
    schema = _schema(command)
    unknown = sorted(set(values) - set(schema))
    if unknown:
        raise ValueError(f"unknown key '{unknown[0]}' for {command}")
    params = {}
    for key, prm in schema.items():
        if key in values:
            params[key] = _convert(key, values[key], prm.kind)
        elif prm.default is _REQUIRED:
            raise ValueError(f"missing required key '{key}'")
        else:
            params[key] = prm.default
    manifest = RunManifest(command, params, output_path)
    validate(manifest)
    return manifest


# -- validation ---------------------------------------------------------------


def _check_P(P):
    if P is not None and not (0 < P <= 1):
        raise ValueError("P must be in (0,1]")


def _check_N(Ns):
    if Ns is not None:
        if not Ns:
            raise ValueError("N must not be empty")
        if any(n < 1 for n in Ns):
            raise ValueError("N must be a positive integer")


def _positive(m: RunManifest, *keys):
    for k in keys:
        v = m.parameters.get(k)
        if v is not None and not v > 0:
            raise ValueError(f"{k} must be positive")


def _geometry(m: RunManifest) -> tuple[str, float, float]:
    """(label, g, d_over_x0) from a setting or explicit values."""
    s, g, d = m.get("setting"), m.get("g"), m.get("d_over_x0")
    if s is not None:
        if g is not None or d is not None:
            raise ValueError("give either setting or both g and d_over_x0")
        st = Setting.parse(s)
        return st.label, st.g, st.d_over_x0
    if g is None or d is None:
        raise ValueError("missing required key 'setting' (or both 'g' and 'd_over_x0')")
    return "custom", g, d


def _matched_times(m: RunManifest) -> bool:
    if m.get("T") is not None:
        if m.get("P") is not None or m.get("N") is not None:
            raise ValueError("give either T or both P and N")
        return False
    if m.get("P") is None or m.get("N") is None:
        raise ValueError("missing required key 'T' (or both 'P' and 'N')")
    return True


def validate(m: RunManifest) -> None:
    """Check every physical parameter; raises ValueError naming the problem."""
    c = m.command
    _positive(m, "jobs", "dt", "nmax")
    if m.get("nmax") is not None and m.get("nmax") < 2:
        raise ValueError("nmax must be at least 2")
    _check_P(m.get("P"))
    _check_N(m.get("N"))
    if c in ("transport-sqc", "transport-aqc"):
        _, g, d = _geometry(m)
        if not g > 0:
            raise ValueError("g must be positive")
        _positive(m, "grid_extent")
        if c == "transport-sqc":
            if m.get("method") not in ("closed", "grid"):
                raise ValueError("method must be closed or grid")
            for N in m.get("N"):
                TransportConfig(g, d * TrapSpec().x0, N, m.get("P"))
        else:
            if _matched_times(m):
                for N in m.get("N"):
                    TransportConfig(g, d * TrapSpec().x0, N, m.get("P"))
            elif any(not t > 0 for t in m.get("T")):
                raise ValueError("T must be positive")
    elif c == "search-sqc":
        for N in m.get("N"):
            SearchConfig(g=m.get("g"), N=N, P=m.get("P"), target=m.get("target"), N_G=m.get("N_G"))
    elif c == "search-aqc":
        if m.get("family") not in ("type-i", "type-ii", "both"):
            raise ValueError("family must be type-i, type-ii or both")
        equalize_cost(m.get("g"))
        if _matched_times(m):
            for N in m.get("N"):
                SearchConfig(g=m.get("g"), N=N, P=m.get("P"))
        elif any(not t > 0 for t in m.get("T")):
            raise ValueError("T must be positive")
    elif c == "readout-curve":
        SelectionKind(m.get("kind"))
        lo, hi, n = m.get("p_min"), m.get("p_max"), m.get("p_points")
        if not (0 < lo <= hi <= 1):
            raise ValueError("need 0 < p_min <= p_max <= 1")
        if n < 1:
            raise ValueError("p_points must be positive")
        if any(g < 0 for g in m.get("gamma")):
            raise ValueError("gamma must be non-negative")
    elif c == "ms-check":
        _positive(m, "eta", "Omega", "nu")
        _ms_spec(m)
    elif c in ("open-transport", "open-search"):
        NoiseSpec(m.get("gamma"), m.get("p_error"))
        if c == "open-transport":
            st = Setting.parse(m.get("setting"))
            nmax = m.get("nmax")
            if nmax is not None:
                coherent_state(st.d_over_x0 / 2, nmax)
        else:
            for N in m.get("N"):
                SearchConfig(g=m.get("g"), N=N, P=m.get("P"))
    elif c == "reproduce":
        if m.get("figure") not in FIGURES:
            raise ValueError(f"unknown figure {m.get('figure')!r}; choose from {', '.join(FIGURES)}")


# -- workers (module level so they pickle) ------------------------------------


def _grid_for(g_extent: float | None, trap: TrapSpec) -> GridSpec | None:
    if g_extent is None:
        return None
    half = g_extent * trap.x0
    n = 2048
    while 2 * half / n > trap.x0 / 16:
        n *= 2
    return GridSpec(-half, half, n)


def _transport_sqc_task(args) -> ExperimentRecord:
    label, g, d_over_x0, P, N, method, extent = args
    trap = TrapSpec()
    cfg = TransportConfig(g, d_over_x0 * trap.x0, N, P, trap, grid=_grid_for(extent, trap))
    res = sqc_transport_closed(cfg) if method == "closed" else sqc_transport_grid(cfg)
    return ExperimentRecord(
        protocol="transport-sqc", setting=label, N=N, g=g, d_over_x0=d_over_x0, P_nominal=P,
        P_actual=res.actual_probability, T=cfg.T, dT=cfg.dT, fidelity=res.fidelity, method=method,
    )


def _transport_aqc_task(args) -> ExperimentRecord:
    label, g, d_over_x0, P, N, T, dt, extent = args
    trap = TrapSpec()
    if T is None:
        T = TransportConfig(g, d_over_x0 * trap.x0, N, P, trap).T
    F = aqc_transport(d_over_x0 * trap.x0, T, trap, _grid_for(extent, trap), dt or DEFAULT_DT)
    return ExperimentRecord(
        protocol="transport-aqc", setting=label, N=N, g=g, d_over_x0=d_over_x0, P_nominal=P,
        P_actual=1.0, T=T, fidelity=F, method="aqc",
    )


def _search_sqc_task(args) -> ExperimentRecord:
    g, P, N, N_G, target, report_T = args
    cfg = SearchConfig(g=g, N=N, P=P, target=target, N_G=N_G)
    if N_G == 2:
        F, prob, _ = sqc_search_run(cfg)
    else:
        F, prob = multiqubit_sqc_search(cfg)
    return ExperimentRecord(
        protocol="search-sqc", N=None if report_T else N, T=cfg.T, g=g, P_nominal=P,
        P_actual=prob, fidelity=F, cost=cost_sqc(g),
    )


def _search_aqc_task(args) -> ExperimentRecord:
    family, g, T, dt = args
    omega, K = equalize_cost(g)
    fam = Family(family)
    amp = omega if fam is Family.TYPE_I else K
    F = aqc_search_run(AdiabaticSpec(fam, amp, T), dt)
    return ExperimentRecord(
        protocol="search-aqc-" + family, T=T, g=g, P_actual=1.0, fidelity=F,
        cost=cost_type_i(omega) if fam is Family.TYPE_I else cost_type_ii(K),
        Omega=omega if fam is Family.TYPE_I else None, K=K if fam is Family.TYPE_II else None,
    )


def _open_transport_task(args) -> ExperimentRecord:
    setting, P, N, gamma, p_error, nmax, dt = args
    rec = open_transport_point(setting, P, N, NoiseSpec(gamma, p_error), nmax, dt)
    return rec


def _open_search_task(args) -> ExperimentRecord:
    g, P, N, gamma, p_error, dt = args
    return open_search_point(g, P, N, NoiseSpec(gamma, p_error), dt)


def _pmap(fn: Callable, items: list, jobs: int | None) -> list:
    """Order-preserving map, in worker processes when jobs > 1."""
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


# -- commands -----------------------------------------------------------------

COLUMN_NOTES = {
    "transport": "fidelity = |<target|final>|^2; P_actual = product of per-round success probabilities; lengths in x0 units",
    "search": "N_or_T = selection rounds (or duration T for adiabatic rows); cost = time-averaged Frobenius norm of H",
    "open": "fidelity_penalized = fidelity_raw * (1 - p_error)^N",
    "readout": "shift_over_gT = expected centre shift of the post-selected cat state divided by gT",
    "ms": "fidelity = mean test-state fidelity of the numeric propagator against the closed form at t_MS",
}


def _provenance(m: RunManifest, extra: Sequence[str] = ()) -> list[str]:
    lines = [f"sqcontrol {m.command}"]
    for key in COMMANDS[m.command]:
        v = m.parameters.get(key)
        if v is not None:
            lines.append(f"{key} = {_format(v)}")
    for key in ("dt", "nmax"):
        if m.parameters.get(key) is not None:
            lines.append(f"{key} = {_format(m.parameters[key])}")
    return lines + list(extra)


def _transport_sqc(m: RunManifest):
    label, g, d = _geometry(m)
    items = [(label, g, d, m.get("P"), N, m.get("method"), m.get("grid_extent")) for N in m.get("N")]
    return TRANSPORT_COLUMNS, _pmap(_transport_sqc_task, items, m.get("jobs")), COLUMN_NOTES["transport"]


def _transport_aqc(m: RunManifest):
    label, g, d = _geometry(m)
    if m.get("T") is not None:
        items = [(label, g, d, None, None, T, m.get("dt"), m.get("grid_extent")) for T in m.get("T")]
    else:
        items = [(label, g, d, m.get("P"), N, None, m.get("dt"), m.get("grid_extent")) for N in m.get("N")]
    return TRANSPORT_COLUMNS, _pmap(_transport_aqc_task, items, m.get("jobs")), COLUMN_NOTES["transport"]


def _search_sqc(m: RunManifest):
    items = [(m.get("g"), m.get("P"), N, m.get("N_G"), m.get("target"), False) for N in m.get("N")]
    return SEARCH_COLUMNS, _pmap(_search_sqc_task, items, m.get("jobs")), COLUMN_NOTES["search"]


def _search_times(m: RunManifest) -> list[float]:
    if m.get("T") is not None:
        return list(m.get("T"))
    return [SearchConfig(g=m.get("g"), N=N, P=m.get("P")).T for N in m.get("N")]


def _search_aqc(m: RunManifest):
    fams = ["type-i", "type-ii"] if m.get("family") == "both" else [m.get("family")]
    items = [(f, m.get("g"), T, m.get("dt")) for T in _search_times(m) for f in fams]
    return SEARCH_COLUMNS, _pmap(_search_aqc_task, items, m.get("jobs")), COLUMN_NOTES["search"]


def _readout(m: RunManifest):
    p_grid = np.linspace(m.get("p_min"), m.get("p_max"), m.get("p_points"))
    rows = readout_curve(m.get("kind"), m.get("gamma"), p_grid)
    return READOUT_COLUMNS, rows, COLUMN_NOTES["readout"]


def _ms_spec(m: RunManifest) -> MSSpec:
    eta, omega, nu = m.get("eta"), m.get("Omega"), m.get("nu")
    nmax = m.get("nmax", 20)
    if m.get("delta") is None:
        return MSSpec.entangling(eta, omega / nu, nu, nmax)
    return MSSpec(eta, omega, nu, m.get("delta"), nmax)


def _ms_row(spec: MSSpec, dt: float) -> dict:
    f1 = ms_numeric_check(spec, dt)
    f2 = ms_numeric_check(spec, dt / 2)
    return {
        "eta": spec.eta, "Omega": spec.Omega, "nu": spec.nu, "epsilon": spec.epsilon,
        "t_MS": spec.t_ms, "dt": dt, "fidelity": f1, "fidelity_half_dt": f2,
        "displacement_at_t_MS": abs(ms_displacement(spec, spec.t_ms)),
    }


def _ms_check(m: RunManifest):
    return MS_COLUMNS, [_ms_row(_ms_spec(m), m.get("dt", MS_DEFAULT_DT))], COLUMN_NOTES["ms"]


def _open_transport(m: RunManifest):
    items = [(m.get("setting"), m.get("P"), N, m.get("gamma"), m.get("p_error"), m.get("nmax"), m.get("dt"))
             for N in m.get("N")]
    return OPEN_COLUMNS, _pmap(_open_transport_task, items, m.get("jobs")), COLUMN_NOTES["open"]


def _open_search(m: RunManifest):
    items = [(m.get("g"), m.get("P"), N, m.get("gamma"), m.get("p_error"), m.get("dt")) for N in m.get("N")]
    return OPEN_COLUMNS, _pmap(_open_search_task, items, m.get("jobs")), COLUMN_NOTES["open"]


_RUNNERS = {
    "transport-sqc": _transport_sqc,
    "transport-aqc": _transport_aqc,
    "search-sqc": _search_sqc,
    "search-aqc": _search_aqc,
    "readout-curve": _readout,
    "ms-check": _ms_check,
    "open-transport": _open_transport,
    "open-search": _open_search,
}


# -- figure presets -----------------------------------------------------------


def _write(path: Path, columns, rows, comments) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_csv(fh, columns, rows, comments)
    return path


def _fig1b(out: Path, jobs, dt, nmax) -> list[Path]:
    trap = TrapSpec()
    s = Setting.II
    P = 0.25
    blue_cfg = TransportConfig.from_setting(s, 20, P, trap)
    red_cfg = TransportConfig.from_setting(s, 1, P, trap)
    blue = sqc_transport_grid(blue_cfg)
    red = sqc_transport_grid(red_cfg)
    rec = _transport_sqc_task((s.label, s.g, s.d_over_x0, P, 20, "grid", None))
    note = ["fig1b preset: N=20, g=1, d=10 x0, P=0.25; states in fig1b_grey|red|blue.csv", COLUMN_NOTES["transport"]]
    paths = [_write(out / "fig1b.csv", TRANSPORT_COLUMNS, [rec], note)]
    grey = gaussian_ground_state(blue_cfg.resolved_grid(), trap, 0.0)
    for name, packet in (("grey", grey), ("red", red.final_state), ("blue", blue.final_state)):
        path = out / f"fig1b_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_packet_csv(packet, fh)
        paths.append(path)
    return paths


def _fig1c(out: Path, jobs, dt, nmax) -> list[Path]:
    items = [(s.label, s.g, s.d_over_x0, 0.9, N, "closed", None) for s in Setting for N in SWEEP_N]
    rows = _pmap(_transport_sqc_task, items, jobs)
    note = ["Fidelity vs N, P=0.9, settings i-iii", COLUMN_NOTES["transport"]]
    return [_write(out / "fig1c.csv", TRANSPORT_COLUMNS, rows, note)]


def _fig1d(out: Path, jobs, dt, nmax) -> list[Path]:
    items = [(s.label, s.g, s.d_over_x0, 0.9, N, None, dt, None) for s in Setting for N in SWEEP_N]
    rows = _pmap(_transport_aqc_task, items, jobs)
    note = ["Moving-trap fidelity at the selection protocol's T(P=0.9, N), settings i-iii",
            f"split-operator dt = {dt or DEFAULT_DT!r}", COLUMN_NOTES["transport"]]
    return [_write(out / "fig1d.csv", TRANSPORT_COLUMNS, rows, note)]


def _fig2b(out: Path, jobs, dt, nmax) -> list[Path]:
    rows = _pmap(_search_sqc_task, [(1.0, 0.9, N, 2, 0, False) for N in SWEEP_N], jobs)
    note = ["Search fidelity vs N, P=0.9, g=1", COLUMN_NOTES["search"]]
    return [_write(out / "fig2b.csv", SEARCH_COLUMNS, rows, note)]


def _fig2c(out: Path, jobs, dt, nmax) -> list[Path]:
    g = 1.0
    items = []
    for N in SWEEP_N:
        T = SearchConfig(g=g, N=N, P=0.9).T
        items.append((_search_sqc_task, (g, 0.9, N, 2, 0, True)))
        items.append((_search_aqc_task, ("type-i", g, T, dt)))
        items.append((_search_aqc_task, ("type-ii", g, T, dt)))
    rows = _pmap(_call, items, jobs)
    note = ["Search fidelity vs T at equalized cost 2g, g=1, P=0.9; T = T(N) for N=1..16",
            COLUMN_NOTES["search"]]
    return [_write(out / "fig2c.csv", SEARCH_COLUMNS, rows, note)]


def _call(item):
    fn, args = item
    return fn(args)


def _fig3a(out: Path, jobs, dt, nmax) -> list[Path]:
    items = [(s.label, 0.9, N, FIG3_GAMMA, FIG3_P_ERROR, nmax, dt) for s in Setting for N in SWEEP_N]
    rows = _pmap(_open_transport_task, items, jobs)
    note = [f"Open transport, gamma={FIG3_GAMMA!r}, p_error={FIG3_P_ERROR!r}, P=0.9", COLUMN_NOTES["open"]]
    return [_write(out / "fig3a.csv", OPEN_COLUMNS, rows, note)]


def _fig3b(out: Path, jobs, dt, nmax) -> list[Path]:
    items = [(1.0, 0.9, N, FIG3_GAMMA, FIG3_P_ERROR, dt) for N in SWEEP_N]
    rows = _pmap(_open_search_task, items, jobs)
    note = [f"Open search, gamma={FIG3_GAMMA!r}, p_error={FIG3_P_ERROR!r}, P=0.9, g=1", COLUMN_NOTES["open"]]
    return [_write(out / "fig3b.csv", OPEN_COLUMNS, rows, note)]


def _figS1(out: Path, jobs, dt, nmax) -> list[Path]:
    p_grid = np.linspace(0.01, 1.0, 100)
    rows = []
    for kind in (SelectionKind.SIGMA_X_OPTIMAL, SelectionKind.EIGEN_ANCHORED):
        for r in readout_curve(kind, S1_GAMMAS, p_grid):
            rows.append({"kind": kind.value, **r})
    note = ["Weak-to-strong readout for the sigma_x-optimal and eigen-anchored pairs", COLUMN_NOTES["readout"]]
    return [_write(out / "figS1.csv", ["kind", *READOUT_COLUMNS], rows, note)]


PRESETS = {
    "fig1b": _fig1b, "fig1c": _fig1c, "fig1d": _fig1d, "fig2b": _fig2b,
    "fig2c": _fig2c, "fig3a": _fig3a, "fig3b": _fig3b, "figS1": _figS1,
}


def reproduce(figure: str, out: str | Path = ".", jobs: int | None = None,
              dt: float | None = None, nmax: int | None = None) -> list[Path]:
    """Write the CSV file(s) of one figure preset into directory ``out``."""
    if figure not in PRESETS:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return PRESETS[figure](out, jobs, dt, nmax)


# -- entry points -------------------------------------------------------------


def _execute(m: RunManifest, stdout) -> None:
    if m.command == "reproduce":
        paths = reproduce(m.get("figure"), m.output_path or ".", m.get("jobs"), m.get("dt"), m.get("nmax"))
        for p in paths:
            print(f"wrote {p}", file=sys.stderr)
        return
    columns, rows, note = _RUNNERS[m.command](m)
    comments = _provenance(m, [note])
    if m.output_path:
        _write(Path(m.output_path), columns, rows, comments)
    else:
        write_csv(stdout, columns, rows, comments)


def run(manifest: RunManifest, stdout=None) -> int:
    """Execute a validated manifest; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        _execute(manifest, stdout)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        build_parser().print_help(sys.stderr)
        return 1
    try:
        manifest = parse_config(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(manifest)
