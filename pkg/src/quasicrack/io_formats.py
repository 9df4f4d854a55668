"""Run configuration files and the on-disk result formats.

Config files are flat `key = value` text with `#` comments. Unknown and
duplicate keys are rejected rather than ignored; a config that parses is
a config that runs. Result tables are plain comma-separated text with a
header row, every float printed with 17 significant digits so values
survive a round trip through the files exactly. Fields go out as legacy
ASCII VTK structured points for quick inspection in standard viewers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.16e"


@dataclass(frozen=True)
class Config:
    """Complete description of one run; field order is the file order.

    Defaults reproduce the reference experiment: unit-speed smoothed
    step loading to T = 2.5 on a 2 x 0.5 strip, 200 x 50 elements, 250
    load steps, zero initial displacement.
    """

    a: float = 2.0
    b: float = 0.5
    nx: int = 200
    ny: int = 50
    s0: float = 0.1
    T: float = 2.5
    n_steps: int = 250
    alpha: float = 100.0
    beta: float = 20.0
    gamma: float = 0.5
    c1: float = 0.1
    c2: float = 0.2
    u0_mode: str = "zero"
    cg_rel_tol: float = 1e-10
    nonneg_tol: float = 1e-8
    snapshot_times: tuple = ()
    output_dir: str = "out"
    reflect_export: bool = False
    sigma_scan: str = "incremental"

    def __post_init__(self):
        for name in ("a", "b", "alpha", "beta", "gamma", "T", "c1", "c2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.nx < 2 or self.ny < 1:
            raise ValueError("need nx >= 2 and ny >= 1")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        hx = self.a / self.nx
        if not 0 < self.s0 < self.a:
            raise ValueError("s0 must lie strictly inside (0, a)")
        if abs(self.s0 / hx - round(self.s0 / hx)) > 1e-9:
            raise ValueError(
                f"s0 = {self.s0!r} does not sit on a mesh node (hx = {hx!r})"
            )
        for t in self.snapshot_times:
            if not 0 <= t <= self.T:
                raise ValueError(f"snapshot time {t!r} outside [0, T]")


CONFIG_HELP = {
    "a": "domain length in x",
    "b": "domain height in y",
    "nx": "element columns",
    "ny": "element rows",
    "s0": "initial crack tip, must sit on a mesh node",
    "T": "final load time",
    "n_steps": "number of load steps",
    "alpha": "shear stiffness",
    "beta": "yield stress of the path",
    "gamma": "crack surface energy per unit length",
    "c1": "height scale of the top-edge profile",
    "c2": "slope scale of the top-edge profile",
    "u0_mode": "initial displacement: zero | harmonic",
    "cg_rel_tol": "relative residual tolerance of the CG solver",
    "nonneg_tol": "nonnegativity slack, relative to the profile height",
    "snapshot_times": "comma separated times to export traces and fields",
    "output_dir": "where run artifacts are written",
    "reflect_export": "mirror exported fields across the crack line: true | false",
    "sigma_scan": "zone-end search: incremental | exhaustive",
}

_FIELDS = {f.name: f for f in dataclasses.fields(Config)}
_CHOICES = {
    "u0_mode": ("zero", "harmonic"),
    "sigma_scan": ("incremental", "exhaustive"),
}


def _parse_value(key: str, raw: str):
    f = _FIELDS[key]
    if f.type in ("int", int):
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"key {key!r} expects an integer, got {raw!r}")
    if f.type in ("float", float):
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"key {key!r} expects a number, got {raw!r}")
    if f.type in ("bool", bool):
        if raw == "true":
            return True
        if raw == "false":
            return False
        raise ValueError(f"key {key!r} expects true or false, got {raw!r}")
    if f.type in ("tuple", tuple):
        raw = raw.strip()
        if not raw:
            return ()
        try:
            return tuple(float(v) for v in raw.split(","))
        except ValueError:
            raise ValueError(f"key {key!r} expects comma separated numbers, got {raw!r}")
    if key in _CHOICES and raw not in _CHOICES[key]:
        raise ValueError(
            f"key {key!r} must be one of {', '.join(_CHOICES[key])}, got {raw!r}"
        )
    return raw


def parse_config(text: str) -> Config:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    cfg = Config(**values)
    _check_profile(cfg)
    return cfg


def _check_profile(cfg: Config) -> None:
    # sampled admissibility of the loading program on the run's own
    # time and node sets; a config that parses is a config that runs
    from .cohesive import ProfileParams, profile_is_admissible

    xs = np.linspace(0.0, cfg.a, cfg.nx + 1)
    ts = cfg.T * np.arange(cfg.n_steps + 1) / cfg.n_steps
    if not profile_is_admissible(
        ProfileParams(cfg.c1, cfg.c2, cfg.s0), ts, xs, tol=1e-14
    ):
        raise ValueError(
            "boundary profile must be nonnegative, nonincreasing in x "
            "and nondecreasing in t"
        )


def write_config(cfg: Config) -> str:
    lines = []
    for f in dataclasses.fields(Config):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            out = "true" if v else "false"
        elif isinstance(v, tuple):
            out = ",".join(repr(x) for x in v)
        elif isinstance(v, float):
            out = repr(v)
        else:
            out = str(v)
        lines.append(f"{f.name} = {out}")
    return "\n".join(lines) + "\n"


def load_config(path) -> Config:
    return parse_config(Path(path).read_text())


def save_config(path, cfg: Config) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(write_config(cfg))


def _write_table(path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(
                ",".join(
                    FLOAT_FMT % c[i] if c.dtype.kind == "f" else str(c[i])
                    for c in columns
                )
                + "\n"
            )


def write_fronts_csv(path, result) -> None:
    """One row per load step: time, fronts and the step energy split.

    The initial state (t = 0) is not a step and gets no row; the first
    row sits at t = T/n.
    """
    _write_table(
        path,
        ["t", "s", "sigma", "E_elastic", "dE_plastic", "dE_crack", "E_total_incr"],
        [
            result.t[1:],
            result.s[1:],
            result.sigma[1:],
            result.e_elastic[1:],
            result.de_plastic[1:],
            result.de_crack[1:],
            result.e_incr[1:],
        ],
    )


def write_energy_csv(path, result) -> None:
    """Stored elastic energy and the two dissipation tallies over time."""
    _write_table(
        path,
        ["t", "E_elastic", "E_plastic_cum", "E_crack_cum"],
        [
            result.t,
            result.e_elastic,
            np.cumsum(result.de_plastic),
            np.cumsum(result.de_crack),
        ],
    )


def write_trace_csv(path, grid, field, s_idx: int, sigma_idx: int) -> None:
    """Bottom and top traces with the cohesive zone flagged per node.

    The flag marks nodes strictly between the tip and the zone end, so
    an empty zone (sigma = s) flags nothing.
    """
    zone = np.zeros(grid.nx + 1, dtype=np.int64)
    zone[s_idx + 1 : sigma_idx] = 1
    _write_table(
        path,
        ["x", "u_bottom", "u_top", "in_cohesive_zone"],
        [grid.xs, field.bottom_trace(), field.top_trace(), zone],
    )


def write_vtk(path, grid, field, reflect: bool = False, title: str = "displacement") -> None:
    """Legacy ASCII structured-points export of one nodal field.

    With reflect=True the field is extended to the mirrored lower half
    with opposite sign, the usual picture of an antisymmetric shear
    displacement. The crack line itself carries the limit from above in
    the main array; the limit from below differs only there, and goes
    out as a second array for viewers that want both faces.
    """
    vals = field.grid_view()
    ny = grid.ny
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        if reflect:
            fh.write(f"DIMENSIONS {grid.nx + 1} {2 * ny + 1} 1\n")
            fh.write(f"ORIGIN 0 {FLOAT_FMT % -grid.spec.b} 0\n")
        else:
            fh.write(f"DIMENSIONS {grid.nx + 1} {ny + 1} 1\n")
            fh.write("ORIGIN 0 0 0\n")
        fh.write(f"SPACING {FLOAT_FMT % grid.hx} {FLOAT_FMT % grid.hy} 1\n")
        npoints = (grid.nx + 1) * ((2 * ny + 1) if reflect else (ny + 1))
        fh.write(f"POINT_DATA {npoints}\n")

        def dump(rows) -> None:
            for row in rows:
                for v in row:
                    fh.write(FLOAT_FMT % v + "\n")

        fh.write("SCALARS u double\nLOOKUP_TABLE default\n")
        if reflect:
            dump(-vals[ny:0:-1])
            dump(vals)
        else:
            dump(vals)
        if reflect:
            fh.write("SCALARS u_lower_limit double\nLOOKUP_TABLE default\n")
            dump(-vals[ny:0:-1])
            dump(-vals[0:1])
            dump(vals[1:])


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Read one of the tables written here back into named arrays."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}
