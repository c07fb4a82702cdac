"""Experiment runner: config parsing, the per-symbol-vector solve farm and CSV/JSON output.

Configs are INI files with three sections.  Every key is typed and optional
unless noted; unknown keys are rejected.  See :data:`SCHEMA`.

Seeds are split counter-style: the stream for purpose ``k`` and item ``i``
is ``default_rng([master_seed, k, i])``, so results never depend on the order
in which workers pick up tasks.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy

from .alm import AlmConfig, init_radar_only, solve_alm
from .ci import DEFAULT_ENUMERATION_CAP, EnumerationCapError, build_ci, enumerate_symbol_vectors, psk_constellation
from .ci import half_sector, qos_threshold
from .evaluation import (
    beampattern_mse,
    complex_noise,
    iglrt_estimate,
    max_glr,
    pd_at_pfa,
    psk_union_bound,
    rmse_angles,
    roc_curve,
    ser_monte_carlo,
    simulate_capture,
)
from .manifold import RbfgsConfig
from .pdd import PddConfig, solve_pdd
from .report import InfeasibleCIError
from .scenario import (
    ArrayModel,
    DfrcScenario,
    angle_grid,
    build_coupling,
    db_to_linear,
    dbm_to_watts,
    ideal_beampattern,
    instantaneous_beampattern,
    optimal_scale,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4

EXPERIMENTS = ("beampattern", "mse-sweep", "rmse-sweep", "roc", "ser")

# seed streams
STREAM_INIT = 0
STREAM_PDD_START = 1
STREAM_SLOTS = 2
STREAM_RADAR_NOISE = 3
STREAM_SER = 4
STREAM_SYMBOL_SAMPLE = 5


class ConfigError(ValueError):
    pass


class RuntimeCapExceeded(RuntimeError):
    pass


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _optional_int(text):
    return None if text.strip().lower() in ("", "all", "none") else int(text)


# section -> key -> (parser, default)
SCHEMA = {
    "scenario": {
        "num_antennas": (int, 10),
        "spacing_ratio": (float, 0.5),
        "total_power_dbm": (float, 30.0),
        "user_noise_dbm": (float, 10.0),
        "radar_noise_dbm": (float, 20.0),
        "targets_deg": (_floats, (-40.0, 0.0, 40.0)),
        "target_amplitude": (float, 1.0),
        "beam_width_deg": (float, 10.0),
        "grid_resolution_deg": (float, 1.0),
        "num_users": (int, 3),
        "channel_seed": (int, 1),
        "constellation_order": (int, 4),
    },
    "solver": {
        "algorithm": (str, "pdd"),
        "tol": (float, 1e-5),
        "pdd_init": (str, "radar"),
        "pdd_rho0": (float, 1.0),
        "pdd_c": (float, 0.8),
        "pdd_max_outer": (int, 300),
        "pdd_max_inner": (int, 2000),
        "hj_shrink": (float, 0.5),
        "hj_min_step": (float, 1e-6),
        "hj_max_evals": (int, 5000),
        "alm_rho0": (float, 1.0),
        "alm_growth": (float, 1.1),
        "alm_shrink_test": (float, 0.6),
        "alm_rho_max": (float, 1e6),
        "alm_mu_max": (float, 1e4),
        "alm_max_outer": (int, 200),
        "alm_max_inner": (int, 1000),
    },
    "experiment": {
        "type": (str, "beampattern"),
        "seed": (int, 0),
        "gamma_db": (_floats, (6.0,)),
        "num_users_list": (_ints, ()),
        "samples": (_ints, (30,)),
        "trials": (int, 200),
        "symbol_vectors": (_optional_int, None),
        "enumeration_cap": (int, DEFAULT_ENUMERATION_CAP),
        "iglrt_threshold": (float, 0.0),
        "miss_penalty_deg": (float, 90.0),
        "roc_noise_dbm": (_floats, (10.0, 20.0)),
        "roc_target_deg": (float, 0.0),
        "roc_target_amplitude": (float, 0.03),
        "roc_pfa": (float, 0.1),
        "roc_thresholds": (int, 101),
        "ser_transmissions": (int, 100000),
        "reference_file": (str, ""),
        "runtime_cap_s": (float, 0.0),
    },
}


@dataclass
class ExperimentConfig:
    scenario: dict
    solver: dict
    experiment: dict
    source: str = ""

    def echo(self):
        return {"scenario": self.scenario, "solver": self.solver, "experiment": self.experiment}


def parse_config(text, source="<string>") -> ExperimentConfig:
    """Parse INI text into typed sections, applying defaults.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, bad values, or an
        unknown solver/experiment name.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    out = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
    for name, keys in SCHEMA.items():
        values = {k: default for k, (_, default) in keys.items()}
        if cp.has_section(name):
            for key, raw in cp.items(name):
                if key not in keys:
                    raise ConfigError(f"unknown key {key!r} in [{name}]")
                try:
                    values[key] = keys[key][0](raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {name}.{key}: {raw!r}") from exc
        out[name] = values
    cfg = ExperimentConfig(out["scenario"], out["solver"], out["experiment"], source)
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def _validate(cfg: ExperimentConfig):
    s, v, e = cfg.scenario, cfg.solver, cfg.experiment
    if v["algorithm"] not in ("pdd", "alm"):
        raise ConfigError(f"unknown algorithm {v['algorithm']!r}")
    if v["pdd_init"] not in ("radar", "random"):
        raise ConfigError("pdd_init must be 'radar' or 'random'")
    if e["type"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment type {e['type']!r}")
    if s["num_antennas"] < 1 or s["num_users"] < 0 or s["num_users"] > s["num_antennas"]:
        raise ConfigError("need 0 <= num_users <= num_antennas and num_antennas >= 1")
    for k in e["num_users_list"]:
        if not 0 <= k <= s["num_antennas"]:
            raise ConfigError("num_users_list entries must lie in [0, num_antennas]")
    if not e["gamma_db"]:
        raise ConfigError("gamma_db must list at least one value")
    if e["trials"] < 1 or any(n < 1 for n in e["samples"]) or not e["samples"]:
        raise ConfigError("trials and samples must be positive")
    try:
        PddConfig(rho0=v["pdd_rho0"], c=v["pdd_c"], tol=v["tol"], hj_shrink=v["hj_shrink"])
        AlmConfig(rho0=v["alm_rho0"], growth=v["alm_growth"], shrink_test=v["alm_shrink_test"], tol=v["tol"])
        ArrayModel(s["num_antennas"], s["spacing_ratio"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def channel_gen(num_users, num_antennas, seed):
    """Rayleigh channels, one seeded stream per user.

    Row ``k`` depends only on ``(seed, k)``, so adding users keeps the
    existing ones unchanged.
    """
    if num_users > num_antennas:
        raise ValueError("more users than antennas")
    H = np.empty((num_users, num_antennas), dtype=complex)
    for k in range(num_users):
        H[k] = complex_noise(np.random.default_rng([seed, k]), num_antennas, 1.0)
    return H


def stream(master, purpose, *index):
    """Generator for one (purpose, index) stream of a master seed."""
    return np.random.default_rng([int(master), int(purpose), *map(int, index)])


def build_scenario(s: dict, num_users=None, radar_noise_dbm=None) -> DfrcScenario:
    K = s["num_users"] if num_users is None else num_users
    array = ArrayModel(s["num_antennas"], s["spacing_ratio"])
    angles = angle_grid(s["grid_resolution_deg"])
    targets = np.deg2rad(np.asarray(s["targets_deg"], dtype=float))
    grid = ideal_beampattern(targets, np.deg2rad(s["beam_width_deg"]), angles)
    return DfrcScenario(
        array=array,
        channels=channel_gen(K, s["num_antennas"], s["channel_seed"]),
        user_noise=dbm_to_watts(s["user_noise_dbm"]),
        radar_noise=float(dbm_to_watts(s["radar_noise_dbm"] if radar_noise_dbm is None else radar_noise_dbm)),
        total_power=float(dbm_to_watts(s["total_power_dbm"])),
        grid=grid,
        target_angles=targets,
        target_amplitudes=s["target_amplitude"],
        constellation_order=s["constellation_order"],
    )


def solver_configs(v: dict):
    pdd = PddConfig(rho0=v["pdd_rho0"], c=v["pdd_c"], tol=v["tol"], max_outer=v["pdd_max_outer"],
                    max_inner=v["pdd_max_inner"], hj_shrink=v["hj_shrink"], hj_min_step=v["hj_min_step"],
                    hj_max_evals=v["hj_max_evals"])
    alm = AlmConfig(rho0=v["alm_rho0"], growth=v["alm_growth"], shrink_test=v["alm_shrink_test"],
                    rho_max=v["alm_rho_max"], mu_max=v["alm_mu_max"], tol=v["tol"],
                    max_outer=v["alm_max_outer"], max_inner=v["alm_max_inner"])
    return pdd, alm


# ---------------------------------------------------------------------------
# solve farm

_WORKER = {}


def _worker_setup(scenario, coupling, algorithm, pdd_cfg, alm_cfg, x_init, master, margin):
    _WORKER.update(scenario=scenario, coupling=coupling, algorithm=algorithm, pdd=pdd_cfg, alm=alm_cfg,
                   x_init=x_init, master=master, margin=margin)


def _solve_task(task):
    index, symbols = task
    w = _WORKER
    sc = w["scenario"]
    ci = build_ci(sc.channels, symbols, w["margin"], sc.constellation_order)
    try:
        if w["algorithm"] == "pdd":
            start = w["x_init"]
            seed = None
            if start is None:
                seed = stream(w["master"], STREAM_PDD_START, index)
            rep = solve_pdd(sc, w["coupling"], ci, w["pdd"], seed=seed, x_init=start)
        else:
            rep = solve_alm(sc, w["coupling"], ci, w["alm"], x_init=w["x_init"])
    except InfeasibleCIError as exc:
        return index, None, str(exc)
    return index, {
        "x": rep.x,
        "objective": rep.objective,
        "violation": rep.max_violation,
        "flags": dict(rep.flags),
        "seconds": rep.seconds,
        "outer": rep.outer_iterations,
        "inner": rep.inner_iterations,
    }, None


@dataclass
class SolveTable:
    symbols: np.ndarray  # (S, K)
    X: np.ndarray  # (S, M)
    objectives: np.ndarray
    violations: np.ndarray
    seconds: np.ndarray
    flagged: int
    margin: float


def solve_table(scenario, coupling, symbols, algorithm, pdd_cfg, alm_cfg, x_init, master, margin, jobs=1):
    """Solve every symbol vector; results come back in symbol order.

    Raises
    ------
    InfeasibleCIError
        If any symbol vector has an empty CI set.
    """
    tasks = list(enumerate(symbols))
    args = (scenario, coupling, algorithm, pdd_cfg, alm_cfg, x_init, master, margin)
    if jobs <= 1 or len(tasks) <= 1:
        _worker_setup(*args)
        results = [_solve_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_setup, initargs=args) as pool:
            results = list(pool.map(_solve_task, tasks, chunksize=chunk))
    results.sort(key=lambda r: r[0])
    for _, res, err in results:
        if err is not None:
            raise InfeasibleCIError(err)
    return SolveTable(
        symbols=np.asarray(symbols),
        X=np.array([r["x"] for _, r, _ in results]),
        objectives=np.array([r["objective"] for _, r, _ in results]),
        violations=np.array([r["violation"] for _, r, _ in results]),
        seconds=np.array([r["seconds"] for _, r, _ in results]),
        flagged=sum(1 for _, r, _ in results if any(r["flags"].values())),
        margin=margin,
    )


# ---------------------------------------------------------------------------
# experiments


def _solve_relevant(scenario_cfg):
    # radar-side settings do not change the precoders
    return {k: v for k, v in scenario_cfg.items() if k not in ("radar_noise_dbm", "target_amplitude")}


class Runner:
    """Executes one parsed config; collects CSV rows and metadata."""

    def __init__(self, cfg: ExperimentConfig, jobs=1, seed=None, algorithm=None, table_cache=None):
        self.cfg = cfg
        self.table_cache = table_cache
        self.jobs = max(1, int(jobs))
        self.master = cfg.experiment["seed"] if seed is None else int(seed)
        self.algorithm = algorithm or cfg.solver["algorithm"]
        self.pdd_cfg, self.alm_cfg = solver_configs(cfg.solver)
        self.t0 = time.perf_counter()
        self.timings = {}
        self.notes = {}
        self.solve_stats = []
        self._inits = {}

    # -- helpers
    def check_time(self):
        cap = self.cfg.experiment["runtime_cap_s"]
        if cap > 0 and time.perf_counter() - self.t0 > cap:
            raise RuntimeCapExceeded(f"runtime cap of {cap} s exceeded")

    def margin(self, gamma_db, scenario):
        sigma = float(np.sqrt(scenario.user_noise[0])) if scenario.num_users else 0.0
        return float(qos_threshold(sigma, half_sector(scenario.constellation_order), db_to_linear(gamma_db)))

    def radar_init(self, scenario, coupling):
        key = scenario.num_antennas
        if key not in self._inits:
            rng = stream(self.master, STREAM_INIT, 0)
            res = init_radar_only(coupling, scenario.amplitude, rng, RbfgsConfig(tol=self.alm_cfg.tol))
            self._inits[key] = res.x
        return self._inits[key]

    def reference(self, scenario, coupling):
        path = self.cfg.experiment["reference_file"]
        if path:
            ref = np.loadtxt(path, dtype=float).reshape(-1)
            if ref.size != scenario.grid.size:
                raise ConfigError(f"reference file has {ref.size} values, grid has {scenario.grid.size}")
            self.notes["reference_pattern"] = f"file:{path}"
            return ref
        x0 = self.radar_init(scenario, coupling)
        self.notes["reference_pattern"] = "alpha*d from the radar-only initializer"
        return optimal_scale(x0, scenario.grid, scenario.array) * scenario.grid.desired

    def symbols_for(self, scenario):
        e = self.cfg.experiment
        K, order = scenario.num_users, scenario.constellation_order
        try:
            table = enumerate_symbol_vectors(K, order, e["enumeration_cap"])
            sampled = False
        except EnumerationCapError:
            table = None
            sampled = True
        limit = e["symbol_vectors"]
        if sampled or (limit is not None and limit < order**K):
            n = limit or e["enumeration_cap"]
            rng = stream(self.master, STREAM_SYMBOL_SAMPLE, K)
            table = psk_constellation(order)[rng.integers(0, order, size=(n, K))]
            self.notes["symbol_vectors"] = f"{n} sampled uniformly"
        else:
            self.notes["symbol_vectors"] = "all enumerated"
        return table

    def table(self, scenario, coupling, gamma_db, symbols=None):
        self.check_time()
        margin = self.margin(gamma_db, scenario)
        symbols = self.symbols_for(scenario) if symbols is None else symbols
        x_init = self.radar_init(scenario, coupling)
        if self.algorithm == "pdd" and self.cfg.solver["pdd_init"] == "random":
            x_init = None
        key = (self.algorithm, scenario.num_users, float(gamma_db), self.master, x_init is None,
               repr(_solve_relevant(self.cfg.scenario)), repr(self.cfg.solver), np.asarray(symbols).tobytes())
        if self.table_cache is not None and key in self.table_cache:
            return self.table_cache[key]
        t = time.perf_counter()
        tab = solve_table(scenario, coupling, symbols, self.algorithm, self.pdd_cfg, self.alm_cfg, x_init,
                          self.master, margin, self.jobs)
        self.solve_stats.append({
            "num_users": scenario.num_users,
            "gamma_db": gamma_db,
            "solves": len(symbols),
            "mean_solve_seconds": float(tab.seconds.mean()) if len(symbols) else 0.0,
            "wall_seconds": time.perf_counter() - t,
            "flagged": tab.flagged,
            "max_violation": float(tab.violations.max()) if len(symbols) else 0.0,
        })
        self.check_time()
        if self.table_cache is not None:
            self.table_cache[key] = tab
        return tab

    def slot_indices(self, count, n_slots, trial=0):
        return stream(self.master, STREAM_SLOTS, trial).integers(0, count, size=n_slots)

    # -- experiments
    def run(self):
        kind = self.cfg.experiment["type"]
        fn = {
            "beampattern": self.beampattern,
            "mse-sweep": self.mse_sweep,
            "rmse-sweep": self.rmse_sweep,
            "roc": self.roc,
            "ser": self.ser,
        }[kind]
        self.header, self.rows = self._header(kind), []
        fn()
        return self.header, self.rows

    def _header(self, kind):
        if kind == "beampattern":
            return None  # depends on the slot count
        if kind == "roc":
            return ["experiment", "radar_noise_dbm", "threshold", "p_fa", "p_d", "trials", "solver", "seed"]
        return ["experiment", "num_users", "sweep", "sweep_value", "metric", "value", "trials", "solver", "seed"]

    def _row(self, num_users, sweep, value, metric, metric_value, trials):
        self.rows.append([self.cfg.experiment["type"], num_users, sweep, value, metric, metric_value, trials,
                          self.algorithm, self.master])

    def beampattern(self):
        e = self.cfg.experiment
        sc = build_scenario(self.cfg.scenario)
        cp = build_coupling(sc.grid, sc.array)
        ref = self.reference(sc, cp)
        tab = self.table(sc, cp, e["gamma_db"][0])
        n = e["samples"][0]
        X = tab.X[self.slot_indices(len(tab.X), n)].T
        P = np.stack([instantaneous_beampattern(X[:, i], sc.array, sc.grid.angles) for i in range(n)], axis=1)
        self.header = ["theta_deg", "reference"] + [f"slot_{i + 1}" for i in range(n)] + ["mean"]
        for l, th in enumerate(sc.grid.degrees):
            self.rows.append([round(float(th), 10), ref[l], *P[l], P[l].mean()])

    def mse_sweep(self):
        e = self.cfg.experiment
        users = e["num_users_list"] or (self.cfg.scenario["num_users"],)
        for K in users:
            sc = build_scenario(self.cfg.scenario, num_users=K)
            cp = build_coupling(sc.grid, sc.array)
            ref = self.reference(sc, cp)
            symbols = self.symbols_for(sc)
            for g in e["gamma_db"]:
                tab = self.table(sc, cp, g, symbols)
                self._row(K, "gamma_db", g, "mse", beampattern_mse(tab.X.T, ref, sc.grid, sc.array), len(tab.X))
                self._row(K, "gamma_db", g, "mean_objective", float(tab.objectives.mean()), len(tab.X))
                self._row(K, "gamma_db", g, "max_ci_violation", float(tab.violations.max()), len(tab.X))

    def _radar_block(self, tab, n_max, trial, sc):
        idx = self.slot_indices(len(tab.X), n_max, trial)
        X = tab.X[idx].T
        Z = complex_noise(stream(self.master, STREAM_RADAR_NOISE, trial), X.shape, 1.0)
        return X, Z

    def rmse_sweep(self):
        e = self.cfg.experiment
        sc = build_scenario(self.cfg.scenario)
        cp = build_coupling(sc.grid, sc.array)
        tab = self.table(sc, cp, e["gamma_db"][0])
        truth = np.asarray(self.cfg.scenario["targets_deg"])
        n_max = max(e["samples"])
        estimates = {n: [] for n in e["samples"]}
        std = np.sqrt(sc.radar_noise)
        for t in range(e["trials"]):
            if t % 20 == 0:
                self.check_time()
            # nested slots and noise: the block for N is the first N columns
            X, Z = self._radar_block(tab, n_max, t, sc)
            for n in e["samples"]:
                Xn = X[:, :n]
                Y = simulate_capture(Xn, sc.array, sc.target_angles, sc.target_amplitudes, 0.0) + std * Z[:, :n]
                res = iglrt_estimate(Y, Xn, sc.array, sc.grid.angles, len(truth), e["iglrt_threshold"])
                estimates[n].append(np.rad2deg(res.angles))
        self.notes["rmse_miss_penalty_deg"] = e["miss_penalty_deg"]
        for n in e["samples"]:
            self._row(sc.num_users, "samples", n, "rmse_deg",
                      rmse_angles(estimates[n], truth, e["miss_penalty_deg"]), e["trials"])

    def roc(self):
        e = self.cfg.experiment
        sc = build_scenario(self.cfg.scenario)
        cp = build_coupling(sc.grid, sc.array)
        tab = self.table(sc, cp, e["gamma_db"][0])
        n = e["samples"][0]
        target = np.deg2rad(e["roc_target_deg"])
        thresholds = np.linspace(0.0, 1.0, e["roc_thresholds"])
        self.notes["roc_definition"] = (
            f"max-over-grid single-target GLR; one target at {e['roc_target_deg']} deg with amplitude "
            f"{e['roc_target_amplitude']}, other targets absent; paired noise across noise levels")
        stats = {nz: ([], []) for nz in e["roc_noise_dbm"]}
        for t in range(e["trials"]):
            if t % 20 == 0:
                self.check_time()
            X, Z = self._radar_block(tab, n, t, sc)
            Z0 = complex_noise(stream(self.master, STREAM_RADAR_NOISE, e["trials"] + t), X.shape, 1.0)
            echo = simulate_capture(X, sc.array, [target], e["roc_target_amplitude"], 0.0)
            for nz in e["roc_noise_dbm"]:
                std = np.sqrt(dbm_to_watts(nz))
                stats[nz][0].append(max_glr(echo + std * Z, X, sc.array, sc.grid.angles))
                stats[nz][1].append(max_glr(std * Z0, X, sc.array, sc.grid.angles))
        for nz in e["roc_noise_dbm"]:
            h1, h0 = stats[nz]
            pfa, pd = roc_curve(h1, h0, thresholds)
            for th, a, b in zip(thresholds, pfa, pd):
                self.rows.append([e["type"], nz, float(th), float(a), float(b), e["trials"], self.algorithm,
                                  self.master])
            self.rows.append([e["type"], nz, "pd_at_pfa", e["roc_pfa"], pd_at_pfa(h1, h0, e["roc_pfa"]),
                              e["trials"], self.algorithm, self.master])

    def ser(self):
        e = self.cfg.experiment
        sc = build_scenario(self.cfg.scenario)
        cp = build_coupling(sc.grid, sc.array)
        symbols = self.symbols_for(sc)
        sigma = float(np.sqrt(sc.user_noise[0]))
        for g in e["gamma_db"]:
            tab = self.table(sc, cp, g, symbols)
            # common random numbers across the sweep
            res = ser_monte_carlo(tab.X, tab.symbols, sc.channels, sc.user_noise, e["ser_transmissions"],
                                  seed=stream(self.master, STREAM_SER, 0), order=sc.constellation_order)
            trials = e["ser_transmissions"]
            for k, p in enumerate(res.per_user):
                self._row(sc.num_users, "gamma_db", g, f"ser_user_{k + 1}", float(p), trials)
            self._row(sc.num_users, "gamma_db", g, "ser", res.average, trials)
            self._row(sc.num_users, "gamma_db", g, "ser_std_error", res.std_error, trials)
            self._row(sc.num_users, "gamma_db", g, "union_bound", psk_union_bound(tab.margin, sigma), trials)
            self._row(sc.num_users, "gamma_db", g, "max_ci_violation", float(tab.violations.max()), len(tab.X))

    # -- metadata
    def metadata(self, status, message=""):
        from . import __version__

        return {
            "status": status,
            "message": message,
            "config": self.cfg.echo(),
            "config_path": self.cfg.source,
            "master_seed": self.master,
            "solver": self.algorithm,
            "jobs": self.jobs,
            "seed_rule": "default_rng([master_seed, stream, index])",
            "versions": {
                "slp_dfrc": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "design": {
                "grid": "inclusive endpoints, -90..90 deg",
                "lambda_B": "power iteration, rtol 1e-10",
                "pdd_init": self.cfg.solver["pdd_init"],
                "pdd_hj_warm_start": True,
                "pdd_nu_elimination": "closed form",
                "glr_search_grid": "beampattern grid",
                "iglrt_refinement": "cyclic conditional re-estimation",
                **self.notes,
            },
            "solves": self.solve_stats,
            "wall_seconds": time.perf_counter() - self.t0,
        }


def format_value(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    if header:
        w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def run(config_path, out_dir, jobs=1, seed=None, solver=None) -> int:
    """Run one experiment config and write ``<type>.csv`` plus ``<type>.json``.

    Returns the process exit status.
    """
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if solver is not None and solver not in ("pdd", "alm"):
        print(f"config error: unknown solver {solver!r}", file=sys.stderr)
        return EXIT_PARSE
    os.makedirs(out_dir, exist_ok=True)
    runner = Runner(cfg, jobs=jobs, seed=seed, algorithm=solver)
    kind = cfg.experiment["type"]
    runner.header, runner.rows = runner._header(kind), []
    status, code, message = "ok", EXIT_OK, ""
    try:
        runner.run()
    except ConfigError as exc:
        status, code, message = "config-error", EXIT_PARSE, str(exc)
    except InfeasibleCIError as exc:
        status, code, message = "infeasible", EXIT_INFEASIBLE, str(exc)
    except RuntimeCapExceeded as exc:
        status, code, message = "runtime-cap", EXIT_RUNTIME, str(exc)
    stem = os.path.join(out_dir, kind)
    write_csv(stem + ".csv", runner.header, runner.rows)
    with open(stem + ".json", "w", encoding="utf-8") as fh:
        json.dump(runner.metadata(status, message), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    if code:
        print(f"{status}: {message}", file=sys.stderr)
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(prog="slp-dfrc", description="Symbol-level DFRC precoding experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--solver", choices=("pdd", "alm"), default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    return run(args.config, args.out, jobs=args.jobs, seed=args.seed, solver=args.solver)


if __name__ == "__main__":
    sys.exit(main())
