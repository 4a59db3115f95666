"""Sweep records and their CSV schemas."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

TRANSPORT_COLUMNS = ["setting", "N", "g", "d_over_x0", "P_nominal", "P_actual", "T", "dT", "fidelity", "method"]
SEARCH_COLUMNS = ["protocol", "N_or_T", "g", "P_nominal", "P_actual", "fidelity", "cost", "Omega", "K"]
OPEN_COLUMNS = ["protocol", "setting", "N", "gamma", "p_error", "P_actual", "fidelity_raw", "fidelity_penalized", "n_max"]
READOUT_COLUMNS = ["p", "gamma", "shift_over_gT", "weak_limit", "strong_limit"]
MS_COLUMNS = ["eta", "Omega", "nu", "epsilon", "t_MS", "dt", "fidelity", "fidelity_half_dt", "displacement_at_t_MS"]


@dataclass
class ExperimentRecord:
    """One sweep point.  Fields a protocol does not use stay ``None``."""

    protocol: str
    N: int | None = None
    T: float | None = None
    setting: str | None = None
    g: float | None = None
    d_over_x0: float | None = None
    P_nominal: float | None = None
    P_actual: float | None = None
    dT: float | None = None
    fidelity: float | None = None
    fidelity_raw: float | None = None
    fidelity_penalized: float | None = None
    cost: float | None = None
    Omega: float | None = None
    K: float | None = None
    gamma: float | None = None
    p_error: float | None = None
    n_max: int | None = None
    method: str | None = None

    def __post_init__(self):
        for k, v in asdict(self).items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"record field {k} is not finite: {v}")
        for k in ("fidelity", "fidelity_raw", "fidelity_penalized"):
            v = getattr(self, k)
            if v is not None and not (-1e-10 <= v <= 1 + 1e-10):
                raise ValueError(f"{k}={v} outside [0, 1]")

    @property
    def N_or_T(self):
        return self.N if self.N is not None else self.T

    def as_row(self, columns: Sequence[str]) -> list[str]:
        return [format_value(getattr(self, c)) for c in columns]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def write_csv(fh, columns: Sequence[str], rows: Iterable, comments: Sequence[str] = ()) -> None:
    """Write ``#`` comment lines, a header and one line per record or dict row."""
    for line in comments:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        if isinstance(r, ExperimentRecord):
            w.writerow(r.as_row(columns))
        else:
            w.writerow([format_value(r.get(c)) for c in columns])
