"""Weather and distance sweeps over the relaying protocols, with CSV output.

Random streams are keyed by purpose and distance (in millimetres), so a
sweep point's numbers do not depend on which other points are in the
sweep, on their order, or on the number of worker processes. For a given
distance the RF traces are drawn once and shared by every weather point and
protocol; only the optical trace changes with the weather.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import astuple, dataclass, fields

import numpy as np

from .allocation import (
    ConvergenceError,
    Policy,
    harmonic_steps,
    solve_lambda_from_samples,
)
from .capacity import RateTriple, sample_fso_rates, sample_rf_rates
from .channels import derive_link_budget
from .numerics import make_rng
from .simulator import BenchmarkKind, decisions_for, simulate_trace

__all__ = ["SweepRow", "run_sweep", "run_distance", "emit_csv", "read_csv", "stream_key"]

SOLVE, SIM = 0, 1
RF, FSO = 0, 1

_PROTOCOL_ORDER = {kind.value: i for i, kind in enumerate(BenchmarkKind)}


@dataclass(frozen=True)
class SweepRow:
    """One (weather, distance, protocol) result.

    Rates are per RF symbol (``c1_bar``, ``c2_bar``) or per FSO symbol
    (``c_fso_bar``). ``lambda_star`` and ``case`` are ``None`` for the
    benchmarks, whose averages and bound follow from their own schedules.
    """

    kappa: float
    c_n2: float
    d: float
    protocol: str
    lambda_star: float | None
    case: str | None
    c1_bar: float
    c2_bar: float
    c_fso_bar: float
    tau_upp_bits_per_block: float
    tau_sim_bits_per_block: float
    tau_norm_bits_per_sec: float


FIELDS = tuple(f.name for f in fields(SweepRow))
_TEXT_FIELDS = {"protocol", "case"}


def stream_key(purpose, d, link):
    """Spawn key of the random stream for ``purpose`` (solve/sim), distance and link."""
    return (purpose, int(round(d * 1000.0)), link)


def _rf_trace(params, budget, mode, seed, purpose, n):
    rng = make_rng(seed, *stream_key(purpose, params.relay_distance_m, RF))
    return sample_rf_rates(params, budget, mode, rng, n)


def _fso_trace(params, budget, seed, purpose, n):
    rng = make_rng(seed, *stream_key(purpose, params.relay_distance_m, FSO))
    return sample_fso_rates(params, budget, rng, n)


def _schedule_bound(kind, rates, N, M):
    q, c1, c2, cf = decisions_for(kind, None, rates)
    c1_bar = float(np.mean(q * c1))
    c2_bar = float(np.mean((1 - q) * c2))
    cf_bar = float(np.mean(cf))
    return c1_bar, c2_bar, cf_bar, N * min(c1_bar, c2_bar + M * cf_bar)


def run_distance(cfg, d):
    """``(row, SimResult)`` pairs for one distance, across every weather point and protocol."""
    base = cfg.base
    seed = cfg.seed
    ref = base.with_point(*cfg.weather[0], d)
    ref_budget = derive_link_budget(ref)
    N = base.symbols_per_block
    solve_rf = sim_rf = None
    if BenchmarkKind.PROPOSED in cfg.protocols:
        solve_rf = _rf_trace(ref, ref_budget, cfg.access_mode, seed, SOLVE, base.mc_samples)
    sim_rf = _rf_trace(ref, ref_budget, cfg.access_mode, seed, SIM, base.blocks)

    out = []
    for kappa, cn2 in cfg.weather:
        params = base.with_point(kappa, cn2, d)
        budget = derive_link_budget(params)
        M = budget.M
        sim_rates = RateTriple(*sim_rf, _fso_trace(params, budget, seed, SIM, base.blocks))
        for kind in cfg.protocols:
            if kind is BenchmarkKind.PROPOSED:
                samples = RateTriple(*solve_rf,
                                     _fso_trace(params, budget, seed, SOLVE, base.mc_samples))
                try:
                    res = solve_lambda_from_samples(
                        samples, M, N, step_schedule=harmonic_steps(0.5 / params.total_user_rate),
                        tol=cfg.tol, max_iters=cfg.max_iters)
                except ConvergenceError as exc:
                    raise ConvergenceError(
                        f"sweep point kappa={kappa!r} dB/m, cn2={cn2!r}, d={d!r} m: {exc}",
                        exc.residual, exc.lam, exc.iterations) from None
                avg = res.averages
                sim = simulate_trace(kind, Policy(res.lambda_star, cfg.access_mode), sim_rates, N, M)
                lam, case = res.lambda_star, res.case.value
                c1_bar, c2_bar, cf_bar = avg.c1_bar, avg.c2_bar, avg.c_fso_bar
                tau_upp = res.tau_upp_per_block
            else:
                sim = simulate_trace(kind, None, sim_rates, N, M)
                lam = case = None
                c1_bar, c2_bar, cf_bar, tau_upp = _schedule_bound(kind, sim_rates, N, M)
            row = SweepRow(
                kappa=float(kappa), c_n2=float(cn2), d=float(d), protocol=kind.value,
                lambda_star=lam, case=case, c1_bar=c1_bar, c2_bar=c2_bar, c_fso_bar=cf_bar,
                tau_upp_bits_per_block=tau_upp,
                tau_sim_bits_per_block=sim.tau_per_block,
                tau_norm_bits_per_sec=sim.tau_per_block / N * params.rf_bandwidth_hz,
            )
            out.append((row, sim))
    return out


def _sort_key(pair):
    row = pair[0]
    return (row.kappa, row.d, _PROTOCOL_ORDER[row.protocol])


def run_sweep(cfg, workers=1, with_results=False):
    """Evaluate every (weather, distance, protocol) combination of ``cfg``.

    Distances run in up to ``workers`` processes. Rows are sorted by
    (kappa, d, protocol) so the output never depends on scheduling. With
    ``with_results`` the list holds ``(row, SimResult)`` pairs, giving access
    to the simulation's standard errors and bit totals.

    Raises
    ------
    ConvergenceError
        If the multiplier iteration fails at some sweep point; the message
        names the point.
    """
    distances = list(cfg.distances)
    if workers > 1 and len(distances) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(distances))) as pool:
            parts = list(pool.map(run_distance, [cfg] * len(distances), distances))
    else:
        parts = [run_distance(cfg, d) for d in distances]
    pairs = sorted((pair for part in parts for pair in part), key=_sort_key)
    return pairs if with_results else [row for row, _ in pairs]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows, path):
    """Write ``rows`` with a header of the SweepRow field names."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FIELDS)
            for row in rows:
                writer.writerow([_cell(v) for v in astuple(row)])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def read_csv(path):
    """Parse a file written by :func:`emit_csv` back into SweepRows."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for record in reader:
            values = {}
            for name, text in zip(FIELDS, record):
                if text == "":
                    values[name] = None
                elif name in _TEXT_FIELDS:
                    values[name] = text
                else:
                    values[name] = float(text)
            rows.append(SweepRow(**values))
    return rows
