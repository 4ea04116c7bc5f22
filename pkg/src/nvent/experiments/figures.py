"""Figure reproductions: each writes a CSV and a plot command file.

The command files are plain text, one directive per line::

    data fig2.csv
    title Mean EF against measurement time
    xlabel t (us)
    ylabel mean EF
    series t_us mean_ef_no_dephasing label=T2 infinite style=solid

``data`` is relative to the command file. Any renderer can read them; a
matplotlib one lives in the demos directory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import SpinSystem
from ..measurement import optimal_velocity
from .config import build_config
from .sweep import SweepResult, run_scenario, write_csv

FIGURES = ("fig2", "fig3a", "fig3b", "fig4")


@dataclass(frozen=True)
class Series:
    x: str
    y: str
    label: str
    style: str = "solid"
    group: str | None = None  # split rows by this column's value


@dataclass(frozen=True)
class PlotSpec:
    title: str
    xlabel: str
    ylabel: str
    series: tuple[Series, ...]

    def render(self, csv_name: str) -> str:
        lines = [f"data {csv_name}", f"title {self.title}", f"xlabel {self.xlabel}", f"ylabel {self.ylabel}"]
        for s in self.series:
            line = f"series {s.x} {s.y} label={s.label} style={s.style}"
            if s.group:
                line += f" group={s.group}"
            lines.append(line)
        return "\n".join(lines) + "\n"


@dataclass
class FigureOutput:
    name: str
    result: SweepResult
    csv_path: Path
    plot_path: Path


def _axis_form(key: str) -> tuple[str, str] | None:
    if not key.startswith("sweep."):
        return None
    base, _, part = key.rpartition(".")
    return base, ("values" if part == "values" else "range")


def _merge(defaults: dict, overrides: dict | None) -> dict:
    """Apply overrides; switching a sweep axis between .values and a range drops the default form."""
    raw = {k: str(v) for k, v in defaults.items()}
    for k, v in (overrides or {}).items():
        form = _axis_form(k)
        if form:
            for old in [d for d in raw if (f := _axis_form(d)) and f[0] == form[0] and f[1] != form[1]]:
                del raw[old]
        raw[k] = str(v)
    return raw


def _emit(name: str, result: SweepResult, plot: PlotSpec, out_dir) -> FigureOutput:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    plot_path = out / f"{name}.plot"
    write_csv(csv_path, result)
    plot_path.write_text(plot.render(csv_path.name))
    return FigureOutput(name, result, csv_path, plot_path)


FIG2_VARIANTS = (
    ("no_dephasing", "T2 infinite", "solid", False, False),
    ("all_sites", "T2 all sites", "dashed", True, True),
    ("nv_only", "T2 NV only", "dotted", True, False),
)


def fig2_result(overrides: dict | None = None, threads: int = 1) -> SweepResult:
    """Static mean EF over time for three dephasing variants.

    ``nv.t2_ms`` (default 2) sets the finite T2 used by the dephasing
    variants; other static keys are passed through.
    """
    raw = _merge({"scenario": "static", "geometry.delta_nm": 10, "time.periods": 2, "time.points": 801},
                 overrides)
    t2 = raw.pop("nv.t2_ms", "2")
    raw.pop("qubit1.t2_ms", None)
    raw.pop("qubit2.t2_ms", None)
    columns, merged = ["t_us"], None
    for key, _, _, nv_dephases, qubits_dephase in FIG2_VARIANTS:
        variant = dict(raw)
        if nv_dephases:
            variant["nv.t2_ms"] = t2
        if qubits_dephase:
            variant["qubit1.t2_ms"] = variant["qubit2.t2_ms"] = t2
        res = run_scenario(build_config(variant), threads)
        col = f"mean_ef_{key}"
        columns.append(col)
        if merged is None:
            merged = [{"t_us": r["t_us"]} for r in res.rows]
        for row, r in zip(merged, res.rows):
            row[col] = r["mean_ef"]
    return SweepResult(columns, merged or [])


def fig2(overrides: dict | None = None, out_dir=".", threads: int = 1) -> FigureOutput:
    result = fig2_result(overrides, threads)
    plot = PlotSpec("Mean EF against measurement time", "t (us)", "mean EF",
                    tuple(Series("t_us", f"mean_ef_{k}", label, style) for k, label, style, _, _ in FIG2_VARIANTS))
    return _emit("fig2", result, plot, out_dir)


def fig3a_result(overrides: dict | None = None, threads: int = 1) -> SweepResult:
    """Maximal mean EF against vibration frequency, frequency-averaged."""
    raw = _merge({
        "scenario": "vibrating",
        "mode.phase": math.pi / 2,
        "average.parameter": "omega",
        "average.rel_std": 0.01,
        "average.method": "both",
        "sweep.mode.delta_nm.values": "0.1, 0.2, 0.4",
        "sweep.mode.freq_khz.from": 50,
        "sweep.mode.freq_khz.to": 500,
        "sweep.mode.freq_khz.num": 46,
    }, overrides)
    return run_scenario(build_config(raw), threads)


def fig3a(overrides: dict | None = None, out_dir=".", threads: int = 1) -> FigureOutput:
    result = fig3a_result(overrides, threads)
    plot = PlotSpec("Maximal mean EF against vibration frequency", "f (kHz)", "M", (
        Series("mode.freq_khz", "M_exact", "exact", "solid", "mode.delta_nm"),
        Series("mode.freq_khz", "M_approx", "first order", "dashed", "mode.delta_nm"),
    ))
    return _emit("fig3a", result, plot, out_dir)


def fig3b_result(overrides: dict | None = None, threads: int = 1) -> SweepResult:
    """Maximal mean EF against vibration amplitude, phase-averaged."""
    raw = _merge({
        "scenario": "vibrating",
        "average.parameter": "phi",
        "average.method": "both",
        "sweep.mode.freq_khz.values": "50, 100, 200, 500",
        "sweep.mode.delta_nm.from": 0,
        "sweep.mode.delta_nm.to": 0.5,
        "sweep.mode.delta_nm.num": 26,
    }, overrides)
    return run_scenario(build_config(raw), threads)


def fig3b(overrides: dict | None = None, out_dir=".", threads: int = 1) -> FigureOutput:
    result = fig3b_result(overrides, threads)
    plot = PlotSpec("Maximal mean EF against vibration amplitude", "amplitude (nm)", "M", (
        Series("mode.delta_nm", "M_exact", "exact", "solid", "mode.freq_khz"),
        Series("mode.delta_nm", "M_approx", "second order", "dashed", "mode.freq_khz"),
    ))
    return _emit("fig3b", result, plot, out_dir)


FIG4_COLUMNS = ["v_inverse_s_per_m", "ef_minus", "ef_plus", "mean_ef", "p_minus", "p_plus"]


def fig4_result(overrides: dict | None = None, threads: int = 1) -> SweepResult:
    """Flying-sensor EFs and probabilities against inverse velocity."""
    overrides = dict(overrides or {})
    d_nm = float(overrides.get("geometry.D_nm", 100))
    z0_nm = float(overrides.get("geometry.z0_nm", 5))
    v_opt = optimal_velocity(d_nm * 1e-9, z0_nm * 1e-9, SpinSystem.default())
    raw = _merge({
        "scenario": "flying",
        "geometry.D_nm": d_nm,
        "geometry.z0_nm": z0_nm,
        "sweep.flying.v_inverse_s_per_m.from": 0,
        "sweep.flying.v_inverse_s_per_m.to": repr(2.5 / v_opt),
        "sweep.flying.v_inverse_s_per_m.num": 501,
    }, overrides)
    res = run_scenario(build_config(raw), threads)
    extra = [c for c in res.columns if c not in FIG4_COLUMNS and c != "beta"]
    return SweepResult(FIG4_COLUMNS + ["beta"] + extra, res.rows)


def fig4(overrides: dict | None = None, out_dir=".", threads: int = 1) -> FigureOutput:
    result = fig4_result(overrides, threads)
    plot = PlotSpec("Flying sensor against inverse velocity", "1/v (s/m)", "EF, probability", (
        Series("v_inverse_s_per_m", "ef_minus", "EF minus", "solid"),
        Series("v_inverse_s_per_m", "ef_plus", "EF plus", "solid"),
        Series("v_inverse_s_per_m", "mean_ef", "mean EF", "dashed"),
        Series("v_inverse_s_per_m", "p_minus", "p minus", "dotted"),
        Series("v_inverse_s_per_m", "p_plus", "p plus", "dotted"),
    ))
    return _emit("fig4", result, plot, out_dir)


def run_figure(name: str, overrides: dict | None = None, out_dir=".", threads: int = 1) -> FigureOutput:
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    return globals()[name](overrides, out_dir, threads)


def read_csv(path) -> dict[str, np.ndarray]:
    """Load an emitted CSV into column arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True, deletechars="", dtype=float)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}
