"""Scenario pipelines, sweep execution and CSV emission."""
from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..averaging import (
    ParameterDistribution,
    VibratingScenario,
    averaged_trajectory,
)
from ..core import InvariantError, SpinSystem, check_density_matrix, ket2dm, plus_state
from ..dynamics import (
    DephasingSpec,
    IntegrationError,
    evolve_coherent,
    evolve_master_equation,
    initial_density,
)
from ..hamiltonians import (
    FlightPath,
    Schedule,
    StaticGeometry,
    VibrationMode,
    ZZHamiltonian,
    alpha,
    static_rwa_hamiltonian,
)
from ..measurement import (
    FlyingDerived,
    branch_statistics,
    ef_plus_from_beta,
    max_mean_ef,
)
from .config import Scenario, ScenarioConfig

NM = 1e-9
MS = 1e-3
US = 1e-6
PROB_TOL = 1e-9


class NumericFailure(RuntimeError):
    """A sweep point failed numerically; ``point`` holds its coordinates."""

    def __init__(self, point: dict, cause: Exception):
        coords = ", ".join(f"{k}={v}" for k, v in point.items()) or "base point"
        super().__init__(f"at {coords}: {cause}")
        self.point = point


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[dict]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        return format_csv(self.columns, self.rows)


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.16e}"


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(format_value(r[c]) for c in columns) + "\n")
    return buf.getvalue()


def write_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(result.to_csv())


def default_threads() -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def check_row(row: dict) -> dict:
    """Enforce the SweepRow invariants; raises ``InvariantError``."""
    for a, b in (("p_plus", "p_minus"),):
        if a in row and b in row:
            pa, pb = row[a], row[b]
            if not (-PROB_TOL <= pa <= 1 + PROB_TOL and -PROB_TOL <= pb <= 1 + PROB_TOL):
                raise InvariantError(f"probabilities out of range: {pa}, {pb}")
            if abs(pa + pb - 1) > PROB_TOL:
                raise InvariantError(f"probabilities sum to {pa + pb}")
    for k, v in row.items():
        if (k.startswith("ef") or k.startswith("mean_ef") or k.startswith("M")) and isinstance(v, float):
            if not -1e-12 <= v <= 1 + 1e-9:
                raise InvariantError(f"{k} = {v} outside [0, 1]")
    return row


def _system(c: ScenarioConfig, **kw) -> SpinSystem:
    return SpinSystem.default(
        t2_nv=c["nv.t2_ms"] * MS,
        t2_qubits=(c["qubit1.t2_ms"] * MS, c["qubit2.t2_ms"] * MS),
        **kw,
    )


# --- static -----------------------------------------------------------------

STATIC_COLUMNS = ["t_us", "p_plus", "p_minus", "ef_plus", "ef_minus", "mean_ef"]
STATIC_MAX_COLUMNS = ["M", "argmax_t_us"]


def static_pipeline(c: ScenarioConfig):
    """Evolve the dephasing master equation and read out every grid time."""
    system = _system(c)
    geometry = StaticGeometry(c["geometry.delta_nm"] * NM)
    h = static_rwa_hamiltonian(system, geometry, c["coupling.qubit_qubit"])
    period = 2 * math.pi / abs(alpha(system, geometry))
    deph = DephasingSpec.from_system(system)
    rho0 = initial_density(system)
    rtol, atol = c["integrator.rtol"], c["integrator.atol"]
    if c["output.maximize"]:
        res = evolve_master_equation(rho0, h, deph, [0.0, period], rtol, atol, dense=True)
        m, tm = max_mean_ef(lambda t: branch_statistics(res.at(t), system).mean_ef, period)
        return [{"M": m, "argmax_t_us": tm / US}]
    grid = np.linspace(0.0, c["time.periods"] * period, c["time.points"])
    res = evolve_master_equation(rho0, h, deph, grid, rtol, atol)
    for rho in res.states:
        check_density_matrix(rho, trace_tol=1e-8, herm_tol=1e-10, pos_tol=1e-8)
    st = branch_statistics(res.states, system)
    return [
        {"t_us": t / US, "p_plus": pp, "p_minus": pm, "ef_plus": ep, "ef_minus": em, "mean_ef": me}
        for t, pp, pm, ep, em, me in zip(grid, st.p_plus, st.p_minus, st.ef_plus, st.ef_minus, st.mean_ef)
    ]


# --- vibrating --------------------------------------------------------------

def vibrating_scenario(c: ScenarioConfig) -> VibratingScenario:
    mode = VibrationMode(c["mode.delta_nm"] * NM, 2 * math.pi * c["mode.freq_khz"] * 1e3, c["mode.phase"])
    return VibratingScenario(SpinSystem.default(), StaticGeometry(c["geometry.delta_nm"] * NM), mode,
                             c["coupling.qubit_qubit"])


def _distribution(c: ScenarioConfig, scenario: VibratingScenario):
    p = c["average.parameter"]
    if p == "none":
        return None
    if p == "phi":
        return ParameterDistribution.uniform_phase()
    mean = scenario.mode.angular_frequency if p == "omega" else scenario.mode.amplitude
    if mean == 0:
        return None  # point mass at zero
    return ParameterDistribution.truncated_normal(mean, c["average.rel_std"])


def vibrating_max(c: ScenarioConfig, method: str) -> tuple[float, float]:
    scenario = vibrating_scenario(c)
    parameter = c["average.parameter"]
    rho_bar = averaged_trajectory(
        parameter if parameter != "none" else "omega",
        _distribution(c, scenario),
        scenario,
        method,
        backend=c["average.backend"],
        n_nodes=c["average.nodes"],
        n_samples=c["average.samples"],
        seed=c["seed"],
        rtol=c["integrator.rtol"],
        atol=c["integrator.atol"],
    )
    return max_mean_ef(lambda t: branch_statistics(rho_bar(t), scenario.system).mean_ef, scenario.window)


def approximation_for(c: ScenarioConfig) -> str:
    return "second_order_phase" if c["average.parameter"] == "phi" else "first_order"


def vibrating_columns(c: ScenarioConfig) -> list[str]:
    if c["average.method"] == "both":
        return ["M_exact", "argmax_t_exact_us", "M_approx", "argmax_t_approx_us"]
    return ["M", "argmax_t_us"]


def vibrating_pipeline(c: ScenarioConfig):
    method = c["average.method"]
    if method == "both":
        m, t = vibrating_max(c, "exact")
        ma, ta = vibrating_max(c, approximation_for(c))
        return [{"M_exact": m, "argmax_t_exact_us": t / US, "M_approx": ma, "argmax_t_approx_us": ta / US}]
    m, t = vibrating_max(c, method)
    return [{"M": m, "argmax_t_us": t / US}]


# --- flying -----------------------------------------------------------------

FLYING_COLUMNS = ["v_inverse_s_per_m", "beta", "p_plus", "p_minus", "ef_plus", "ef_minus", "mean_ef"]
FLYING_NUMERIC = ["p_plus_numeric", "p_minus_numeric", "ef_plus_numeric", "ef_minus_numeric", "mean_ef_numeric"]


def beta_per_inverse_velocity(qubit_separation: float, start_offset: float, system: SpinSystem) -> float:
    """beta * v, so that beta = value * (1/v)."""
    c = system.coupling(1, 0)
    return c * ((qubit_separation - start_offset) ** -2 - start_offset**-2)


def flying_numeric(c: ScenarioConfig):
    """Integrate the flight and measure; returns branch statistics."""
    system = _system(c)
    if c["flying.v_inverse_s_per_m"] == 0:
        # infinitely fast pass: no phase and no time to dephase
        return branch_statistics(initial_density(system), system)
    v = 1.0 / c["flying.v_inverse_s_per_m"]
    path = FlightPath(c["geometry.D_nm"] * NM, c["geometry.z0_nm"] * NM, v)
    h = ZZHamiltonian(system, Schedule.flying(path), qubit_coupling=False)
    grid = [0.0, path.measurement_time]
    deph = DephasingSpec.from_system(system)
    rtol, atol = c["integrator.rtol"], c["integrator.atol"]
    if deph.rates:
        rho = evolve_master_equation(initial_density(system), h, deph, grid, rtol, atol).states[-1]
    else:
        rho = ket2dm(evolve_coherent(plus_state(system), h, grid, rtol, atol).states[-1])
    return branch_statistics(rho, system)


def flying_pipeline(c: ScenarioConfig):
    system = SpinSystem.default()
    v_inv = c["flying.v_inverse_s_per_m"]
    beta = beta_per_inverse_velocity(c["geometry.D_nm"] * NM, c["geometry.z0_nm"] * NM, system) * v_inv
    row = {"v_inverse_s_per_m": v_inv, "beta": beta}
    method = c["flying.method"]
    if method in ("closed_form", "both"):
        d = FlyingDerived.from_beta(beta)
        ef_p = ef_plus_from_beta(beta)
        row.update(p_plus=d.p_plus, p_minus=d.p_minus, ef_plus=ef_p, ef_minus=1.0,
                   mean_ef=d.p_plus * ef_p + d.p_minus * 1.0)
    if method in ("numeric", "both"):
        st = flying_numeric(c)
        vals = dict(p_plus=float(st.p_plus), p_minus=float(st.p_minus), ef_plus=float(st.ef_plus),
                    ef_minus=float(st.ef_minus), mean_ef=float(st.mean_ef))
        if method == "numeric":
            row.update(vals)
        else:
            row.update({k + "_numeric": v for k, v in vals.items()})
    return [row]


def flying_columns(c: ScenarioConfig) -> list[str]:
    return FLYING_COLUMNS + (FLYING_NUMERIC if c["flying.method"] == "both" else [])


# --- driver -----------------------------------------------------------------

# swept keys already reported under a pipeline column name
SWEPT_ALIASES = {"flying.v_inverse_s_per_m": "v_inverse_s_per_m", "rwa.ratio": "ratio"}


def result_columns(config: ScenarioConfig) -> list[str]:
    swept = [ax.key for ax in config.sweep if ax.key not in SWEPT_ALIASES]
    if config.scenario is Scenario.STATIC:
        body = STATIC_MAX_COLUMNS if config["output.maximize"] else STATIC_COLUMNS
    elif config.scenario is Scenario.VIBRATING:
        body = vibrating_columns(config)
    elif config.scenario is Scenario.FLYING:
        body = flying_columns(config)
    else:
        from .rwa import RWA_COLUMNS

        body = RWA_COLUMNS
    return swept + [b for b in body if b not in swept]


def _point_rows(config: ScenarioConfig, point: dict) -> list[dict]:
    c = config.at(point)
    try:
        if config.scenario is Scenario.STATIC:
            rows = static_pipeline(c)
        elif config.scenario is Scenario.VIBRATING:
            rows = vibrating_pipeline(c)
        elif config.scenario is Scenario.FLYING:
            rows = flying_pipeline(c)
        else:
            from .rwa import rwa_point

            rows = [rwa_point(c)]
    except (IntegrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise NumericFailure(point, exc) from exc
    except InvariantError as exc:
        raise InvariantError(f"{exc} (at {point or 'base point'})") from exc
    out = []
    for r in rows:
        full = {**point, **r}
        try:
            check_row(full)
        except InvariantError as exc:
            raise InvariantError(f"{exc} (at {point or 'base point'})") from exc
        out.append(full)
    return out


def run_scenario(config: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Run every sweep point, in parameter order, on a pool of ``threads`` workers."""
    points = list(config.points())
    columns = result_columns(config)
    if threads <= 1 or len(points) <= 1:
        chunks = [_point_rows(config, p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda p: _point_rows(config, p), points))
    rows = [r for chunk in chunks for r in chunk]
    return SweepResult(columns, rows)
