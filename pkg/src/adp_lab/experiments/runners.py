"""Figure and table reproductions.

Each runner returns a :class:`RunRecord` (or a list of them) holding the
reconstructions, metric rows and loss traces; :func:`write_record` turns a
record into CSV and SVG files.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..adp_iterative import IftConfig, adp_ift_solve
from ..dip_lista import dip_lista_inf_solve, dip_lista_solve
from ..errors import AdpLabError, InvalidParameterError
from ..penalties import ElasticNet, SquaredL2
from ..variational import AdpProblem, IstaConfig, adp_exact_solve, tikhonov_l2_solve
from .config import ExperimentConfig, split_preset
from .output import (
    write_metrics_csv,
    write_signals_csv,
    write_svg_plot,
    write_table_csv,
)
from .problems import build_instance, metrics

__all__ = [
    "RunRecord",
    "make_instance",
    "grid_search",
    "run_figure1",
    "run_method_grid",
    "run_initial_value_study",
    "run_all",
    "write_record",
    "execute",
    "distance_table",
]

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """Results of one task on one preset."""

    task: str
    preset: str
    config: dict
    truth: object
    signals: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    wall_ms: dict = field(default_factory=dict)

    @property
    def name(self):
        return f"{self.task}_{self.preset}"


def make_instance(cfg, preset):
    kind, truth = split_preset(preset)
    p = cfg.problem
    return build_instance(kind, truth, p.n, tuple(p.interval), p.sigma, p.psnr[kind],
                          cfg.preset_seed(preset))


def _row(record, method, x, alpha1, alpha2, iterations, wall_ms=None):
    m = metrics(x, record.truth)
    kind, _ = split_preset(record.preset)
    record.signals[method] = x
    record.wall_ms[method] = wall_ms
    record.rows.append({
        "method": method, "preset": record.preset, "operator": kind,
        "alpha1": alpha1, "alpha2": alpha2, "l2_error": m["l2_error"], "psnr": m["psnr"],
        "iterations": iterations, "wall_ms": None,
    })


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, 1e3 * (time.perf_counter() - t0)


def grid_search(cfg, inst):
    """Ivanov-form ADP error over the elastic-net weight grid.

    Returns ``(best, table)`` where ``best = (alpha1, alpha2)`` minimizes the
    L2 error and ``table`` lists every grid cell.
    """
    alpha = cfg.problem.alpha
    table = []
    best = None
    for a1 in cfg.grid.values("alpha1", inst.kind):
        for a2 in cfg.grid.values("alpha2", inst.kind):
            rep = adp_exact_solve(inst.A, inst.y, ElasticNet(a1, a2), alpha)
            err = metrics(rep.final, inst.x_true)["l2_error"]
            table.append((a1, a2, err, rep.extras["multiplier"]))
            if best is None or err < best[2]:
                best = (a1, a2, err)
    return (best[0], best[1]), table


def run_figure1(cfg, preset="integration-step"):
    """Start iterate, discrepancy-stopped iterate, long-run iterate and best Tikhonov.

    Squared-norm penalty on an integration preset. Gradient descent on the
    operator starts at ``A``; the early-stopped iterate is the first whose
    residual drops to ``tau * delta``. If the discrepancy level is never
    reached, the last iterate is reported as early-stopped.
    """
    kind, _ = split_preset(preset)
    if kind != "integration":
        raise InvalidParameterError("the figure-1 study runs on integration presets")
    f1 = cfg.figure1
    inst = make_instance(cfg, preset)
    rec = RunRecord("figure1", preset, cfg.as_dict(), inst.x_true)
    problem = AdpProblem(inst.A, inst.y, SquaredL2(), f1.alpha, delta=inst.delta)
    ift = IftConfig(lr=f1.lr, outer_iters=f1.iters, inner=IstaConfig(tol=cfg.methods.inner_tol),
                    record_iterates=True)
    rep, ms = _timed(adp_ift_solve, problem, ift)
    its = rep.extras["iterates"]
    res = np.sqrt(2.0 * rep.extras["misfit_trace"])
    hit = np.flatnonzero(res <= f1.tau * inst.delta)
    k_stop = int(hit[0]) if hit.size else len(its) - 1
    _row(rec, "start", its[0], 0.0, 1.0, 0, None)
    _row(rec, "early_stopped", its[k_stop], 0.0, 1.0, k_stop, None)
    _row(rec, "limit", its[-1], 0.0, 1.0, len(its) - 1, ms)
    best = None
    for a in f1.tikhonov_grid:
        x = tikhonov_l2_solve(inst.A, inst.y, a)
        err = metrics(x, inst.x_true)["l2_error"]
        if best is None or err < best[0]:
            best = (err, a, x)
    _row(rec, "tikhonov_best", best[2], 0.0, best[1], 0, None)
    rec.traces["loss"] = rep.loss_trace
    rec.traces["residual"] = res
    rec.traces["norm"] = rep.extras["norm_trace"]
    rec.tables["summary"] = (
        ["quantity", "value"],
        [["delta", inst.delta], ["tau", f1.tau], ["stop_index", k_stop],
         ["discrepancy_reached", bool(hit.size)], ["tikhonov_alpha", best[1]]])
    return rec


def distance_table(signals):
    names = list(signals)
    rows = []
    for a in names:
        xa = signals[a]
        rows.append([a] + [xa.like(xa.samples - signals[b].samples).norm() for b in names])
    return ["method"] + names, rows


def run_method_grid(cfg, preset):
    """Ivanov ADP, IFT ADP, DIP LISTA L=inf and L=10 with shared penalty weights.

    The weights are the a-posteriori grid winner of the Ivanov form. A cell
    whose solver fails is recorded in ``failures`` and skipped.
    """
    inst = make_instance(cfg, preset)
    rec = RunRecord("grid", preset, cfg.as_dict(), inst.x_true)
    (a1, a2), table = grid_search(cfg, inst)
    rec.tables["grid_search"] = (["alpha1", "alpha2", "l2_error", "multiplier"], table)
    pen = ElasticNet(a1, a2)
    alpha = cfg.problem.alpha
    problem = AdpProblem(inst.A, inst.y, pen, alpha, delta=inst.delta)
    seed = cfg.preset_seed(preset)
    m = cfg.methods

    def attempt(method, fn, *args, **kw):
        try:
            rep, ms = _timed(fn, *args, **kw)
        except AdpLabError as exc:
            log.warning("%s on %s failed: %s", method, preset, exc)
            rec.failures.append((method, type(exc).__name__, str(exc)))
            return
        _row(rec, method, rep.final, a1, a2, rep.iterations, ms)
        rec.traces[method] = rep.loss_trace

    attempt("adp_ivanov", adp_exact_solve, inst.A, inst.y, pen, alpha)
    attempt("adp_ift", adp_ift_solve, problem,
            IftConfig(lr=m.ift_lr, outer_iters=m.iters, inner=IstaConfig(tol=m.inner_tol)))
    attempt("dip_lista_inf", dip_lista_inf_solve, problem, lr=m.lista_inf_lr, iters=m.iters,
            block_depth=m.block_depth, seed=seed)
    attempt("dip_lista_10", dip_lista_solve, problem, depth=m.depth, lr=m.lista_lr,
            iters=m.iters, seed=seed)
    rec.tables["distances"] = distance_table(rec.signals)
    return rec


def _perturbed(A, scale, seed):
    rng = np.random.default_rng(seed)
    M = A.matrix
    noise = rng.standard_normal(M.shape)
    noise *= scale * np.linalg.norm(M) / np.linalg.norm(noise)
    return A.with_matrix(M + noise)


def run_initial_value_study(cfg, preset="convolution-step"):
    """IFT ADP and DIP LISTA L=inf from ``A`` and from seeded perturbations of ``A``.

    ``B0 = A + E`` with ``||E||_F = perturbation * ||A||_F``.
    """
    kind, _ = split_preset(preset)
    if kind != "convolution":
        raise InvalidParameterError("the initial-value study runs on convolution presets")
    inst = make_instance(cfg, preset)
    rec = RunRecord("initvals", preset, cfg.as_dict(), inst.x_true)
    (a1, a2), _ = grid_search(cfg, inst)
    pen = ElasticNet(a1, a2)
    alpha = cfg.problem.alpha
    problem = AdpProblem(inst.A, inst.y, pen, alpha, delta=inst.delta)
    m = cfg.methods
    iv = cfg.initvals
    seed = cfg.preset_seed(preset)
    rep, ms = _timed(adp_exact_solve, inst.A, inst.y, pen, alpha)
    _row(rec, "adp_ivanov", rep.final, a1, a2, rep.iterations, ms)
    for s in range(iv.starts):
        B0 = inst.A if s == 0 else _perturbed(inst.A, iv.perturbation, seed * 1000 + s)
        tag = "A" if s == 0 else f"A+E{s}"
        rep, ms = _timed(adp_ift_solve, problem,
                         IftConfig(lr=m.ift_lr, outer_iters=iv.iters,
                                   inner=IstaConfig(tol=m.inner_tol)), B0)
        _row(rec, f"adp_ift[B0={tag}]", rep.final, a1, a2, rep.iterations, ms)
        rep, ms = _timed(dip_lista_inf_solve, problem, lr=m.lista_inf_lr, iters=iv.iters,
                         B0=B0, block_depth=m.block_depth, seed=seed)
        _row(rec, f"dip_lista_inf[B0={tag}]", rep.final, a1, a2, rep.iterations, ms)
    rec.tables["distances"] = distance_table(rec.signals)
    return rec


def run_all(cfg: ExperimentConfig):
    """Run every configured task on every applicable preset, serially."""
    records = []
    for task in cfg.tasks:
        for preset in cfg.presets:
            kind, _ = split_preset(preset)
            if task == "figure1" and kind == "integration":
                records.append(run_figure1(cfg, preset))
            elif task == "grid":
                records.append(run_method_grid(cfg, preset))
            elif task == "initvals" and kind == "convolution":
                records.append(run_initial_value_study(cfg, preset))
    return records


def _echo(config):
    return ["config " + json.dumps(config, sort_keys=True, default=list)]


def write_record(rec, out_dir, record_wall_time=False):
    """Write ``signals.csv``, ``plot.svg`` and every table of ``rec`` to ``out_dir/rec.name``."""
    d = Path(out_dir) / rec.name
    grid = rec.truth.grid
    sig = {"truth": rec.truth.samples}
    sig.update({k: v.samples for k, v in rec.signals.items()})
    write_signals_csv(d / "signals.csv", grid, sig)
    write_svg_plot(d / "plot.svg", grid, sig, title=f"{rec.task}: {rec.preset}")
    rows = [dict(r) for r in rec.rows]
    if record_wall_time:
        for r in rows:
            r["wall_ms"] = rec.wall_ms.get(r["method"])
    write_metrics_csv(d / "metrics.csv", rows)
    for name, (header, table) in rec.tables.items():
        write_table_csv(d / f"{name}.csv", header, table, _echo(rec.config))
    for name, trace in rec.traces.items():
        write_table_csv(d / f"trace_{name}.csv", ["k", name],
                        [[k, float(v)] for k, v in enumerate(trace)])
    if rec.failures:
        write_table_csv(d / "failures.csv", ["method", "error", "message"], rec.failures)
    return d


def execute(cfg, out_dir=None):
    """Run ``cfg`` and write all outputs; returns the records.

    ``metrics.csv`` at the top of ``out_dir`` collects every row. Wall times
    go to ``timings.csv`` and enter ``metrics.csv`` only when
    ``record_wall_time`` is set, so by default reruns are byte-identical.
    """
    out = Path(out_dir or cfg.out)
    records = run_all(cfg)
    rows, timing = [], []
    for rec in records:
        write_record(rec, out, cfg.record_wall_time)
        for r in rec.rows:
            r = dict(r)
            ms = rec.wall_ms.get(r["method"])
            if cfg.record_wall_time:
                r["wall_ms"] = ms
            rows.append(r)
            timing.append([rec.task, rec.preset, r["method"], ms])
    write_metrics_csv(out / "metrics.csv", rows)
    write_table_csv(out / "timings.csv", ["task", "preset", "method", "wall_ms"], timing)
    return records
