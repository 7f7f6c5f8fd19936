"""Command-line jobs: analytic, simulate, optimize, validate, figure {2..6}.

Each job writes `<out>/<job>.csv` (RFC 4180, header row, CRLF) plus a sidecar
`<out>/<job>.config` holding the effective config in the input grammar, so any
row is regenerable from its sidecar.  NaN is never written: a non-finite cell
aborts with exit code 3.  Exit codes: 0 success, 2 config error, 3 numerical
failure (including a failed validation suite).

Figure jobs hard-code the scenario each figure caption fixes and accept a
config only for runtime knobs (grids, quadrature sizes, Monte Carlo budget,
sweep values); a key that would contradict the hard-coded scenario is rejected
unless it restates the same value, so a figure's own sidecar re-runs cleanly.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from .channel import CompressionPolicy, RatePolicy, SystemConfig
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .fading import FadingModel, quantize
from .ltsc import probability_table, throughput_ltsc
from .optimize import (GridSpec, optimize_lcsit, optimize_no_lcsit,
                       optimize_single_layer)
from .simulate import estimate
from .stsc import stsc_table, throughput_stsc


class NumericalError(RuntimeError):
    """A result that should be finite is not, or a validation suite failed."""


# ---------------------------------------------------------------- artifacts

def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if not math.isfinite(x):
        raise NumericalError("non-finite value reached a CSV cell")
    return repr(x)


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _write_artifacts(outdir: str, job: str, header: list, rows: list,
                     ec: ExperimentConfig) -> str:
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, f"{job}.csv")
    _write_csv(csv_path, header, rows)
    with open(os.path.join(outdir, f"{job}.config"), "w", encoding="utf-8") as fh:
        fh.write(ec.render())
    return csv_path


def _table_header(T: int, with_se: bool = False) -> list:
    names = [f"{q}_{k}" for q in ("p1_out", "p2_out", "p2_dec")
             for k in range(1, T + 1)]
    if with_se:
        names += [f"{q}_se_{k}" for q in ("p1_out", "p2_out", "p2_dec")
                  for k in range(1, T + 1)]
    return names


def _table_cells(table) -> list:
    return [*table.p1_out, *table.p2_out, *table.p2_dec]


# ------------------------------------------------------------- job plumbing

def _sweep_points(ec: ExperimentConfig):
    """(value, bound config) per swept point; a single (None, ec) without sweep."""
    key = ec["sweep.key"]
    if not key:
        return [(None, ec)]
    return [(v, ec.with_value(key, v)) for v in ec.sweep_values()]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _check_single_tuple_job(ec: ExperimentConfig) -> None:
    _require(ec["csi"] == "none",
             "csi: per-node policy tables are not expressible in a flat config; "
             "use csi = none (the optimize job handles csi = lcsit)")
    _require(not (ec["regime"] == "stsc" and ec["T"] != 2),
             "T: stsc analytics support T = 2 only")
    _require(not (ec["regime"] == "stsc" and ec["compression"] == "adaptive"),
             "compression: adaptive compression needs the ltsc regime")


def _analytic_report(ec: ExperimentConfig, cfg: SystemConfig, policy: RatePolicy):
    if cfg.channel_regime == "ltsc":
        return throughput_ltsc(cfg, policy, ec.compression(), quad_n=ec["quad.n"])
    return throughput_stsc(cfg, policy, n=ec["quad.n"])


def run_analytic(ec: ExperimentConfig, outdir: str) -> int:
    _check_single_tuple_job(ec)
    _require(ec["sweep.key"] != "T",
             "sweep.key: sweeping T changes the table column set; "
             "only the optimize job sweeps T")
    policy = ec.rate_policy()
    header = ([ec["sweep.key"]] if ec["sweep.key"] else []) + \
        ["eta", "expected_reward", "expected_length"] + _table_header(ec["T"])
    rows = []
    for value, point in _sweep_points(ec):
        rep = _analytic_report(point, point.system(), policy)
        prefix = [value] if value is not None else []
        rows.append(prefix + [rep.eta, rep.expected_reward, rep.expected_length]
                    + _table_cells(rep.table))
    path = _write_artifacts(outdir, "analytic", header, rows, ec)
    print(f"analytic: wrote {path} ({len(rows)} rows)")
    return 0


def run_simulate(ec: ExperimentConfig, outdir: str) -> int:
    _check_single_tuple_job(ec)
    _require(ec["sweep.key"] != "T",
             "sweep.key: sweeping T changes the table column set; "
             "only the optimize job sweeps T")
    policy = ec.rate_policy()
    header = ([ec["sweep.key"]] if ec["sweep.key"] else []) + \
        ["eta", "eta_se", "expected_reward", "expected_length",
         "n_sessions", "master_seed", "adaptations"] + \
        _table_header(ec["T"], with_se=True)
    rows = []
    for value, point in _sweep_points(ec):
        rep = estimate(point.system(), policy, point.compression(), **point.mc_kwargs())
        se = rep.table.std_errors
        prefix = [value] if value is not None else []
        rows.append(prefix + [rep.eta, rep.eta_std_error, rep.expected_reward,
                              rep.expected_length, rep.n_sessions, rep.master_seed,
                              rep.adaptation_count]
                    + _table_cells(rep.table)
                    + [*se["p1_out"], *se["p2_out"], *se["p2_dec"]])
    path = _write_artifacts(outdir, "simulate", header, rows, ec)
    print(f"simulate: wrote {path} ({len(rows)} rows)")
    return 0


def _policy_cells(policy: RatePolicy) -> list:
    if policy.mode == "lcsit":
        return [";".join(repr(float(x)) for x in np.atleast_1d(arr))
                for arr in (policy.r1, policy.r2, policy.alpha)]
    return [float(policy.r1), float(policy.r2), float(policy.alpha)]


def _reward_length(ec: ExperimentConfig, cfg: SystemConfig, policy: RatePolicy):
    """E[R], E[L] re-evaluated at the returned policy (analytic path)."""
    if cfg.channel_regime == "stsc":
        rep = throughput_stsc(cfg, policy, n=ec["quad.n"])
    elif policy.mode == "lcsit":
        grid = quantize(cfg.model_d, len(np.atleast_1d(policy.r1)))
        rep = throughput_ltsc(cfg, policy, ec.compression(), grid=grid)
    else:
        rep = throughput_ltsc(cfg, policy, ec.compression(), quad_n=ec["quad.n"])
    return rep.expected_reward, rep.expected_length


def run_optimize(ec: ExperimentConfig, outdir: str) -> int:
    backend = ec["backend"]
    lcsit = ec["csi"] == "lcsit"
    _require(not (lcsit and ec["regime"] != "ltsc"),
             "csi: per-node optimization runs under the ltsc regime only")
    _require(not (lcsit and backend != "analytic"),
             "backend: per-node optimization supports the analytic backend only")
    _require(not (ec["regime"] == "stsc" and ec["T"] != 2 and backend == "analytic"),
             "T: stsc analytics support T = 2 only")
    _require(not (ec["regime"] == "stsc" and ec["compression"] == "adaptive"),
             "compression: adaptive compression needs the ltsc regime")

    gs, q = ec.grid_spec(), ec["quad.n"]
    mc = {"sessions": ec["mc.sessions"], "seed": ec["mc.seed"],
          "batch_size": ec["mc.batch"], "workers": ec["mc.workers"]}
    header = ([ec["sweep.key"]] if ec["sweep.key"] else []) + \
        ["mode", "eta", "r1", "r2", "alpha",
         "expected_reward", "expected_length", "converged"]
    rows = []
    for value, point in _sweep_points(ec):
        cfg, comp = point.system(), point.compression()
        if lcsit:
            results = [("bc", optimize_lcsit(cfg, comp, grid_spec=gs,
                                             n_nodes=point.n_nodes(), quad_n=q)),
                       ("sl", optimize_lcsit(cfg, comp, grid_spec=gs,
                                             n_nodes=point.n_nodes(), quad_n=q,
                                             single_layer=True))]
        else:
            results = [("bc", optimize_no_lcsit(cfg, comp, backend, gs, q, mc)),
                       ("sl", optimize_single_layer(cfg, comp, backend, gs, q, mc))]
        prefix = [value] if value is not None else []
        for mode, res in results:
            if backend == "analytic":
                er, el = _reward_length(point, cfg, res.policy)
            else:
                rep = estimate(cfg, res.policy, comp, n_sessions=mc["sessions"],
                               master_seed=mc["seed"], batch_size=mc["batch_size"],
                               workers=mc["workers"])
                er, el = rep.expected_reward, rep.expected_length
            rows.append(prefix + [mode, res.eta] + _policy_cells(res.policy)
                        + [er, el, res.metadata.get("converged", True)])
    path = _write_artifacts(outdir, "optimize", header, rows, ec)
    print(f"optimize: wrote {path} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------- validate

def _rand_model(rng: np.random.Generator, allow_pointmass: bool) -> FadingModel:
    kinds = ("rayleigh", "rician", "pointmass") if allow_pointmass else \
        ("rayleigh", "rician")
    kind = kinds[rng.integers(len(kinds))]
    if kind == "pointmass":
        return FadingModel("pointmass", point_value=float(rng.uniform(0.2, 4.0)))
    rho = 10.0 ** (rng.uniform(-5.0, 15.0) / 10.0)
    k = float(rng.uniform(0.0, 8.0)) if kind == "rician" else 0.0
    return FadingModel(kind, mean_power=rho, rician_k=k)


def _rand_system(rng: np.random.Generator, regime: str, T: int,
                 variant: bool = False) -> SystemConfig:
    model_d = _rand_model(rng, allow_pointmass=True)
    # a PointMass S with a continuous D makes exact-tie decode events float
    # unstable; only pair the atom with an atom
    model_s = _rand_model(rng, allow_pointmass=model_d.kind == "pointmass")
    return SystemConfig(power=10.0 ** (rng.uniform(-5.0, 10.0) / 10.0),
                        backhaul_capacity=float(rng.uniform(0.5, 4.0)),
                        max_rounds=T, model_d=model_d, model_s=model_s,
                        channel_regime=regime, bc_layer2_interference=variant)


def _rand_tuple(rng: np.random.Generator) -> RatePolicy:
    return RatePolicy.constant(float(rng.uniform(0.2, 2.5)),
                               float(rng.uniform(0.0, 1.5)),
                               float(rng.uniform(0.6, 0.98)))


def _validate_rows(ec: ExperimentConfig):
    """(suite, config_id, regime, variant, quantity, k, analytic, mc, sigma,
    gap, gate, status) rows for the oracle-equivalence report."""
    mc_kwargs = ec.mc_kwargs()
    n_mc = mc_kwargs["n_sessions"]
    rng = np.random.default_rng(np.random.SeedSequence(ec["mc.seed"]))
    rows = []

    def compare(suite, config_id, cfg, quantity, k, analytic, est_p, est_se,
                slack=None):
        # sigma under the null: a zero-count estimate must not collapse the gate
        p0 = min(max(analytic, 0.0), 1.0)  # quadrature can overshoot [0,1] by ulps
        sigma = max(est_se, math.sqrt(p0 * (1.0 - p0) / n_mc))
        gap = abs(analytic - est_p)
        asserted = slack is not None
        gate = 4.0 * sigma + slack if asserted else ""
        status = ("pass" if gap <= gate else "fail") if asserted else "recorded"
        rows.append([suite, config_id, cfg.channel_regime,
                     cfg.bc_layer2_interference, quantity, k, analytic, est_p,
                     sigma, gap, gate, status])

    # exact suite: layer-1 outage chain under LTSC, full table under STSC
    for i in range(4):
        cfg = _rand_system(rng, "ltsc", T=int(rng.integers(1, 5)))
        policy = _rand_tuple(rng)
        table = probability_table(cfg, policy, quad_n=ec["quad.n"])
        rep = estimate(cfg, policy, CompressionPolicy("constant"), **mc_kwargs)
        for k in range(cfg.max_rounds):
            compare("exact", f"ltsc-{i}", cfg, "p1_out", k + 1,
                    float(table.p1_out[k]), float(rep.table.p1_out[k]),
                    rep.table.std_errors["p1_out"][k], slack=1e-9)
    for i in range(2):
        base = _rand_system(rng, "stsc", T=2)
        policy = _rand_tuple(rng)
        for variant in (False, True):
            cfg = SystemConfig(base.power, base.backhaul_capacity, 2,
                               base.model_d, base.model_s, "stsc", variant)
            table = stsc_table(cfg, policy, n=256)
            rep = estimate(cfg, policy, CompressionPolicy("constant"), **mc_kwargs)
            for quantity, k, ana in (("p1_out", 2, float(table.p1_out[1])),
                                     ("p2_out", 2, float(table.p2_out[1])),
                                     ("p2_dec", 1, float(table.p2_dec[0]))):
                compare("exact", f"stsc-{i}", cfg, quantity, k,
                        ana, float(getattr(rep.table, quantity)[k - 1]),
                        rep.table.std_errors[quantity][k - 1],
                        slack=2e-4)  # covers the n=256 quadrature floor

    # approximate suite: layer-2 lemmas hold for small leftover power abar*P
    def approx_config(i, abar_power, gated):
        power = 10.0 ** (rng.uniform(0.0, 6.0) / 10.0)
        alpha = 1.0 - abar_power / power
        cfg = _rand_system(rng, "ltsc", T=int(rng.integers(2, 5)))
        cfg = SystemConfig(power, cfg.backhaul_capacity, cfg.max_rounds,
                           cfg.model_d, cfg.model_s, "ltsc", False)
        policy = RatePolicy.constant(float(rng.uniform(0.3, 2.0)),
                                     float(rng.uniform(0.05, 0.6)), alpha)
        table = probability_table(cfg, policy, quad_n=ec["quad.n"])
        rep = estimate(cfg, policy, CompressionPolicy("constant"), **mc_kwargs)
        suite = "approx" if gated else "recorded"
        label = f"approx-{i}" if gated else f"recorded-{i}-abarP-{abar_power}"
        for quantity in ("p2_out", "p2_dec"):
            ana_all = getattr(table, quantity)
            for k in range(cfg.max_rounds):
                compare(suite, label, cfg, quantity, k + 1, float(ana_all[k]),
                        float(getattr(rep.table, quantity)[k]),
                        rep.table.std_errors[quantity][k],
                        slack=0.02 if gated else None)

    for i in range(3):
        approx_config(i, float(rng.uniform(0.01, 0.05)), gated=True)
    for abar_power in (0.2, 0.5):  # quantify, never assert, the regime break
        approx_config(0, abar_power, gated=False)
    return rows


def run_validate(ec: ExperimentConfig, outdir: str) -> int:
    header = ["suite", "config_id", "regime", "variant", "quantity", "k",
              "analytic", "mc", "sigma", "gap", "gate", "status"]
    rows = _validate_rows(ec)
    path = _write_artifacts(outdir, "validate", header, rows, ec)
    n_fail = sum(1 for row in rows if row[-1] == "fail")
    n_pass = sum(1 for row in rows if row[-1] == "pass")
    print(f"validate: wrote {path} ({n_pass} pass, {n_fail} fail, "
          f"{len(rows) - n_pass - n_fail} recorded)")
    if n_fail:
        print("validate: analytic/Monte-Carlo disagreement above gate",
              file=sys.stderr)
        return 3
    return 0


# ----------------------------------------------------------------- figures

# Runtime knobs shared by all figure jobs; every other scenario key is pinned
# by the figure's caption.  Coarser than the optimizer defaults: figures trade
# the last ~1% of eta for sweep runtime, and remain overridable via --config.
_FIGURE_KNOBS = {
    "quad.n": 32, "grid.r_max": 6.0, "grid.r_step": 0.1,
    "grid.alpha_step": 0.05, "grid.refine": 3, "mc.sessions": 200_000,
}

_FIGURE_OVERRIDABLE = frozenset(
    ["quad.n", "grid.r_max", "grid.r_step", "grid.alpha_step", "grid.refine",
     "grid.nodes", "mc.sessions", "mc.seed", "mc.batch", "mc.workers",
     "sweep.values", "out"]
)


def _figure_base(params: dict, sweep_key: str, sweep_default: list,
                 overrides: ExperimentConfig | None) -> ExperimentConfig:
    ec = parse_config_text("").with_values({
        **_FIGURE_KNOBS, **params, "sweep.key": sweep_key,
        "sweep.values": ",".join(repr(float(v)) for v in sweep_default)})
    if overrides is not None:
        for key in sorted(overrides.explicit):
            if key in _FIGURE_OVERRIDABLE:
                ec = ec.with_value(key, overrides[key])
            elif overrides[key] != ec[key]:
                raise ConfigError(
                    f"{key}: fixed by the figure caption; only "
                    f"{', '.join(sorted(_FIGURE_OVERRIDABLE))} may change")
    return ec


def _optimized_quartet(ec: ExperimentConfig, cfg: SystemConfig) -> list:
    """eta for (bc lcsit, sl lcsit, bc no-lcsit, sl no-lcsit), constant comp."""
    comp, gs, q, nd = ec.compression(), ec.grid_spec(), ec["quad.n"], ec.n_nodes()
    return [
        optimize_lcsit(cfg, comp, grid_spec=gs, n_nodes=nd, quad_n=q).eta,
        optimize_lcsit(cfg, comp, grid_spec=gs, n_nodes=nd, quad_n=q,
                       single_layer=True).eta,
        optimize_no_lcsit(cfg, comp, grid_spec=gs, quad_n=q).eta,
        optimize_single_layer(cfg, comp, grid_spec=gs, quad_n=q).eta,
    ]


def _figure_quartet_rows(ec: ExperimentConfig, first_col_int: bool = False):
    rows = []
    for value, point in _sweep_points(ec):
        label = int(value) if first_col_int else value
        rows.append([label] + _optimized_quartet(point, point.system()))
        print(f"  {ec['sweep.key']}={label}: eta={rows[-1][1:]}", flush=True)
    return rows


def _figure_2(ec):  # throughput vs relay-link SNR
    return (["rho_D_dB", "eta_bc_lcsit", "eta_sl_lcsit",
             "eta_bc_nolcsit", "eta_sl_nolcsit"], _figure_quartet_rows(ec))


def _figure_3(ec):  # throughput vs backhaul capacity
    return (["c_max", "eta_bc_lcsit", "eta_sl_lcsit",
             "eta_bc_nolcsit", "eta_sl_nolcsit"], _figure_quartet_rows(ec))


def _figure_4(ec):  # throughput vs max transmissions
    return (["T", "eta_bc_lcsit", "eta_sl_lcsit",
             "eta_bc_nolcsit", "eta_sl_nolcsit"],
            _figure_quartet_rows(ec, first_col_int=True))


def _figure_5(ec):
    """Adaptive vs constant relay compression across the Rician factor K.

    Tuples are optimized analytically per compression kind, then both optima
    are re-estimated by Monte Carlo with one common seed so the gap carries a
    confidence interval.
    """
    header = ["K", "eta_adaptive", "eta_constant", "se_adaptive", "se_constant",
              "eta_adaptive_analytic", "eta_constant_analytic"]
    gs, q = ec.grid_spec(), ec["quad.n"]
    rows = []
    for value, point in _sweep_points(ec):
        cfg = point.system()
        cells = [value]
        analytic = []
        for kind in ("adaptive", "constant"):
            comp = CompressionPolicy(kind)
            res = optimize_no_lcsit(cfg, comp, grid_spec=gs, quad_n=q)
            rep = estimate(cfg, res.policy, comp, **point.mc_kwargs())
            cells.append(rep.eta)
            cells.append(rep.eta_std_error)
            analytic.append(res.eta)
        # interleave: etas, then ses, then the analytic optimizer values
        rows.append([cells[0], cells[1], cells[3], cells[2], cells[4]] + analytic)
        print(f"  K={value}: adaptive={cells[1]:.4f} constant={cells[3]:.4f}",
              flush=True)
    return header, rows


def _figure_6(ec):
    """Frozen vs per-slot fading, both SNRs swept together (rho_D = rho_S)."""
    header = ["rho_dB", "eta_bc_ltsc", "eta_sl_ltsc", "eta_bc_stsc", "eta_sl_stsc"]
    gs, q = ec.grid_spec(), ec["quad.n"]
    comp = CompressionPolicy("constant")
    rows = []
    for value, point in _sweep_points(ec):
        point = point.with_value("fading_S.rho_dB", value)
        etas = []
        for regime in ("ltsc", "stsc"):
            cfg = point.with_value("regime", regime).system()
            etas.append(optimize_no_lcsit(cfg, comp, grid_spec=gs, quad_n=q).eta)
            etas.append(optimize_single_layer(cfg, comp, grid_spec=gs, quad_n=q).eta)
        rows.append([value] + etas)
        print(f"  rho_dB={value}: eta={etas}", flush=True)
    return header, rows


_FIGURES = {
    2: {"params": {"regime": "ltsc", "T": 2, "P_dB": 0.0, "Cmax": 1.0,
                   "fading_D.dist": "rician", "fading_D.K": 0.0,
                   "fading_S.dist": "rayleigh", "fading_S.rho_dB": 0.0},
        "sweep_key": "fading_D.rho_dB",
        "sweep_default": np.arange(-5.0, 20.1, 2.5),
        "runner": _figure_2},
    3: {"params": {"regime": "ltsc", "T": 2, "P_dB": 0.0,
                   "fading_D.dist": "rician", "fading_D.K": 0.0,
                   "fading_D.rho_dB": 0.0,
                   "fading_S.dist": "rayleigh", "fading_S.rho_dB": 0.0},
        "sweep_key": "Cmax",
        "sweep_default": [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0],
        "runner": _figure_3},
    4: {"params": {"regime": "ltsc", "P_dB": 0.0, "Cmax": 1.0,
                   "fading_D.dist": "rician", "fading_D.K": 0.0,
                   "fading_D.rho_dB": 10.0,
                   "fading_S.dist": "rayleigh", "fading_S.rho_dB": 0.0},
        "sweep_key": "T",
        "sweep_default": [1, 2, 3, 4, 5, 6],
        "runner": _figure_4},
    5: {"params": {"regime": "ltsc", "T": 2, "P_dB": 0.0, "Cmax": 2.0,
                   "fading_D.dist": "rician", "fading_D.rho_dB": 20.0,
                   "fading_S.dist": "rayleigh", "fading_S.rho_dB": 20.0},
        "sweep_key": "fading_D.K",
        "sweep_default": [0.0, 2.0, 5.0, 10.0],
        "runner": _figure_5},
    6: {"params": {"T": 2, "P_dB": 0.0, "Cmax": 5.0,
                   "fading_D.dist": "rician", "fading_D.K": 0.0,
                   "fading_S.dist": "rayleigh"},
        "sweep_key": "fading_D.rho_dB",
        "sweep_default": np.arange(-5.0, 20.1, 2.5),
        "runner": _figure_6},
}


def run_figure(number: int, overrides: ExperimentConfig | None, outdir: str | None) -> int:
    spec = _FIGURES[number]
    ec = _figure_base(spec["params"], spec["sweep_key"], spec["sweep_default"],
                      overrides)
    print(f"figure{number}: sweeping {spec['sweep_key']} over "
          f"{ec['sweep.values']}", flush=True)
    header, rows = spec["runner"](ec)
    path = _write_artifacts(outdir or ec["out"], f"figure{number}", header, rows, ec)
    print(f"figure{number}: wrote {path} ({len(rows)} rows)")
    return 0


# --------------------------------------------------------------- entrypoint

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relharq",
        description="Throughput analysis for layered HARQ over a relay channel "
                    "with an out-of-band compressing relay.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, config_required):
        sp.add_argument("--config", required=config_required,
                        help="flat key=value experiment config")
        sp.add_argument("--out", help="output directory (default: `out` key)")
        sp.add_argument("--seed", type=int, help="override mc.seed")
        sp.add_argument("--sessions", type=int, help="override mc.sessions")
        sp.add_argument("--workers", type=int, help="override mc.workers")

    for name, text in (("analytic", "probability table and throughput at a tuple"),
                       ("simulate", "Monte Carlo estimate at a tuple"),
                       ("optimize", "best tuple (bc and sl rows)")):
        add_common(sub.add_parser(name, help=text), config_required=True)
    add_common(sub.add_parser("validate",
                              help="analytic vs Monte Carlo oracle report"),
               config_required=False)
    fig = sub.add_parser("figure", help="reproduce a results figure")
    fig.add_argument("number", type=int, choices=sorted(_FIGURES))
    add_common(fig, config_required=False)
    return parser


def _apply_cli_overrides(ec: ExperimentConfig, args) -> ExperimentConfig:
    for key, value, lo in (("mc.seed", args.seed, 0),
                           ("mc.sessions", args.sessions, 1),
                           ("mc.workers", args.workers, 1)):
        if value is not None:
            if value < lo:
                raise ConfigError(f"{key}: must be >= {lo}")
            ec = ec.with_value(key, value)
    return ec


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "figure":
            overrides = load_config(args.config) if args.config else None
            if overrides is not None:
                overrides = _apply_cli_overrides(overrides, args)
            elif args.seed is not None or args.sessions is not None \
                    or args.workers is not None:
                overrides = _apply_cli_overrides(parse_config_text(""), args)
            return run_figure(args.number, overrides, args.out)
        ec = parse_config_text("") if args.config is None else load_config(args.config)
        ec = _apply_cli_overrides(ec, args)
        outdir = args.out or ec["out"]
        job = {"analytic": run_analytic, "simulate": run_simulate,
               "optimize": run_optimize, "validate": run_validate}[args.command]
        return job(ec, outdir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
