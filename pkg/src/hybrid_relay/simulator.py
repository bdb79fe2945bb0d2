"""Block-by-block simulation of the buffer-aided relay.

Within block b the relay first sends over FSO from the backlog left after
block b-1, then stores the bits decoded from the users, then sends over the
RF backhaul from what is buffered. Bit counts are real numbers; the buffer
is unbounded.
"""

from dataclasses import dataclass
from enum import Enum
import math
from typing import NamedTuple

import numpy as np

from .allocation import select_q
from .capacity import sample_rates
from .numerics import DomainError

__all__ = [
    "BenchmarkKind",
    "QueueState",
    "SimResult",
    "step_block",
    "decisions_for",
    "simulate_trace",
    "run_protocol",
    "conventional_split",
    "flow_conservation_check",
]

BATCHES = 50


class BenchmarkKind(Enum):
    PROPOSED = "proposed"
    MIXED_RF_FSO_ONLY = "mixed_rf_fso"
    CONVENTIONAL_RF = "conventional_rf"


class QueueState(NamedTuple):
    q_bits: float = 0.0
    prev_q_decision: int = 1
    prev_c2: float = 0.0


@dataclass(frozen=True)
class SimResult:
    tau_per_block: float
    delivered_rf_bits: float
    delivered_fso_bits: float
    blocks_access_active: int
    final_queue_bits: float
    arrived_bits: float
    tau_std_err: float
    blocks: int


def step_block(state, rates, q_decision, N, M):
    """Advance the buffer by one block.

    Returns
    -------
    (QueueState, float, float)
        New state, bits delivered over FSO and bits delivered over the RF
        backhaul in this block.
    """
    c1, c2, c_fso = rates
    backlog = state.q_bits - (1 - state.prev_q_decision) * N * state.prev_c2
    backlog = backlog if backlog > 0.0 else 0.0
    fso_cap = M * N * c_fso
    fso = backlog if backlog < fso_cap else fso_cap
    q_bits = backlog - fso_cap
    q_bits = (q_bits if q_bits > 0.0 else 0.0) + q_decision * N * c1
    rf_cap = (1 - q_decision) * N * c2
    rf = q_bits if q_bits < rf_cap else rf_cap
    return QueueState(q_bits, q_decision, c2), fso, rf


def conventional_split(c1_mean, c2_mean):
    """Fraction of blocks given to the access link by the static two-hop schedule."""
    total = c1_mean + c2_mean
    return 0.5 if total <= 0 else c2_mean / total


def decisions_for(kind, policy, rates):
    """Per-block access decisions and effective rates for a protocol.

    Returns ``(q, c1, c2, c_fso)`` arrays with the rates each protocol
    actually has at its disposal.
    """
    c1, c2, cf = (np.asarray(x, dtype=float) for x in rates)
    if kind is BenchmarkKind.PROPOSED:
        if policy is None:
            raise DomainError("the proposed protocol needs a policy")
        q = select_q(policy.lam, c1, c2)
        return np.atleast_1d(q), c1, c2, cf
    if kind is BenchmarkKind.MIXED_RF_FSO_ONLY:
        return np.ones(c1.size, dtype=int), c1, np.zeros_like(c2), cf
    if kind is BenchmarkKind.CONVENTIONAL_RF:
        share = conventional_split(c1.mean(), c2.mean())
        # Deficit interleaving: block b is an access block when floor((b+1) share) steps up.
        b = np.arange(c1.size)
        q = (np.floor((b + 1) * share) > np.floor(b * share)).astype(int)
        return q, c1, c2, np.zeros_like(cf)
    raise DomainError(f"unknown protocol {kind!r}")


def _batch_stderr(x, batches=BATCHES):
    if x.size < 2 * batches:
        return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    means = np.array([chunk.mean() for chunk in np.array_split(x, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


def simulate_trace(kind, policy, rates, N, M):
    """Run a protocol over a given sequence of per-block rates."""
    q, c1, c2, cf = decisions_for(kind, policy, rates)
    n = c1.size
    delivered = np.empty(n)
    fso_total = rf_total = 0.0
    state = QueueState()
    rf = 0.0
    for b, (qb, r1, r2, rf_) in enumerate(zip(q.tolist(), c1.tolist(), c2.tolist(),
                                              cf.tolist())):
        state, fso, rf = step_block(state, (r1, r2, rf_), qb, N, M)
        fso_total += fso
        rf_total += rf
        delivered[b] = fso + rf
    arrived = float(N * np.dot(q, c1))
    return SimResult(
        tau_per_block=float(delivered.mean()),
        delivered_rf_bits=rf_total,
        delivered_fso_bits=fso_total,
        blocks_access_active=int(q.sum()),
        # RF departures of the last block are only netted out at the next step.
        final_queue_bits=state.q_bits - rf,
        arrived_bits=arrived,
        tau_std_err=_batch_stderr(delivered),
        blocks=n,
    )


def run_protocol(kind, policy, params, budget, mode, rng, B=None):
    """Draw ``B`` i.i.d. blocks (default ``params.blocks``) and simulate ``kind`` on them."""
    B = params.blocks if B is None else B
    if B < 1:
        raise DomainError("B must be at least 1")
    rates = sample_rates(params, budget, mode, rng, B)
    return simulate_trace(kind, policy, rates, params.symbols_per_block, budget.M)


def _draw(source, B, rng):
    if callable(source):
        return np.asarray(source(rng, B), dtype=float)
    arr = np.asarray(source, dtype=float)
    if arr.shape != (B,):
        raise DomainError(f"expected {B} samples, got shape {arr.shape}")
    return arr


def flow_conservation_check(arrivals, demands, B, rng=None):
    """Time-averaged departures of a scalar queue versus ``min(mean a, mean d)``.

    ``arrivals`` and ``demands`` are arrays of length ``B`` or callables
    ``f(rng, B) -> array``. Departures in slot i are ``min(Q[i-1], d[i])``
    and ``Q[i] = max(Q[i-1] - d[i], 0) + a[i]``.
    """
    if B < 1:
        raise DomainError("B must be at least 1")
    a = _draw(arrivals, B, rng)
    d = _draw(demands, B, rng)
    queue = 0.0
    departed = 0.0
    for ai, di in zip(a.tolist(), d.tolist()):
        departed += queue if queue < di else di
        queue = (queue - di if queue > di else 0.0) + ai
    return departed / B, float(min(a.mean(), d.mean()))
