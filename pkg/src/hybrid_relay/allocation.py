"""Optimal RF time sharing between the access link and the RF backhaul.

The relay activates the access link in block b (``q = 1``) when
``lam * c1 >= (1 - lam) * c2`` and the RF backhaul otherwise. The scalar
``lam`` is the dual multiplier of the long-run throughput problem and is
found offline by projected gradient descent on the dual function, using a
fixed set of channel samples (common random numbers) so the iteration is
deterministic.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .capacity import AccessMode, RateTriple, sample_rates
from .numerics import DomainError

__all__ = [
    "Case",
    "ConvergenceError",
    "Policy",
    "AverageRates",
    "UpperBoundResult",
    "select_q",
    "harmonic_steps",
    "average_rates",
    "estimate_average_rates",
    "solve_lambda",
    "solve_lambda_from_samples",
    "tau_upper_bound",
    "dual_function",
    "samples_from_states",
]


class Case(Enum):
    FSO_SUFFICIENT = "fso_sufficient"
    BALANCED = "balanced"


class ConvergenceError(RuntimeError):
    """The multiplier iteration did not reach the balance tolerance."""

    def __init__(self, message, residual, lam, iterations):
        super().__init__(message)
        self.residual = residual
        self.lam = lam
        self.iterations = iterations

    def __reduce__(self):
        return type(self), (str(self), self.residual, self.lam, self.iterations)


@dataclass(frozen=True)
class Policy:
    lam: float
    access_mode: AccessMode = AccessMode.FIXED_RATE_ZF

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise DomainError(f"policy multiplier must lie in (0, 1], got {self.lam}")


@dataclass(frozen=True)
class AverageRates:
    """Long-run rates under a policy, in bits per RF (c1, c2) or FSO (c_fso) symbol."""

    c1_bar: float
    c2_bar: float
    c_fso_bar: float
    samples_used: int
    std_errs: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class UpperBoundResult:
    lambda_star: float
    tau_upp_per_block: float
    averages: AverageRates
    case: Case
    iterations: int
    residual: float = 0.0
    # Share of exact-tie blocks given to the access link (only < 1 for atoms).
    tie_fraction: float = 1.0


def select_q(lam, c1, c2):
    """1 when the access link should be active in this block, else 0.

    Works elementwise on arrays; ties go to the access link.
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"multiplier must lie in (0, 1], got {lam}")
    q = np.asarray(lam * np.asarray(c1) >= (1.0 - lam) * np.asarray(c2), dtype=int)
    return int(q) if q.ndim == 0 else q


def harmonic_steps(delta0, decay=100.0):
    """Step schedule ``delta0 / (1 + i/decay)``."""
    return lambda i: delta0 / (1.0 + i / decay)


def _decisions(lam, c1, c2):
    # Same comparison as select_q, but lam = 0 is allowed inside the projection.
    return lam * c1 >= (1.0 - lam) * c2


def _stderr(x):
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def _averages_from_q(q, samples):
    c1, c2, cf = (np.asarray(x, dtype=float) for x in samples)
    served = q * c1
    backhaul = (1.0 - q) * c2
    return AverageRates(
        c1_bar=float(served.mean()),
        c2_bar=float(backhaul.mean()),
        c_fso_bar=float(cf.mean()),
        samples_used=int(c1.size),
        std_errs=(_stderr(served), _stderr(backhaul), _stderr(cf)),
    )


def average_rates(lam, samples):
    """Sample averages of ``q*c1``, ``(1-q)*c2`` and ``c_fso`` for a fixed sample set."""
    c1, c2, _ = (np.asarray(x, dtype=float) for x in samples)
    return _averages_from_q(_decisions(lam, c1, c2).astype(float), samples)


def estimate_average_rates(lam, params, budget, mode, rng, n_samples, sampler=None):
    """Monte Carlo estimate of the long-run rates under multiplier ``lam``.

    ``sampler(rng, n) -> RateTriple`` of arrays replaces the channel model
    when given (used for synthetic test distributions).
    """
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    if sampler is None:
        samples = sample_rates(params, budget, mode, rng, n_samples)
    else:
        samples = sampler(rng, n_samples)
    return average_rates(lam, samples)


def tau_upper_bound(avg, budget, params):
    """Throughput bound in bits per block: ``N * min(inflow, outflow)``."""
    return params.symbols_per_block * min(avg.c1_bar, avg.c2_bar + budget.M * avg.c_fso_bar)


def dual_function(lam, samples, M):
    """Dual objective per RF symbol, ``E[max(lam c1, (1-lam) c2)] + (1-lam) M E[c_fso]``."""
    c1, c2, cf = (np.asarray(x, dtype=float) for x in samples)
    return float(np.mean(np.maximum(lam * c1, (1.0 - lam) * c2)) + (1.0 - lam) * M * np.mean(cf))


def _balance(avg, M):
    return avg.c1_bar - avg.c2_bar - M * avg.c_fso_bar


def _relative(g, avg, M):
    denom = avg.c2_bar + M * avg.c_fso_bar
    if denom > 0:
        return g / denom
    return 0.0 if g == 0 else math.copysign(math.inf, g)


def _isolated_jump(ratios, lo, hi):
    """The single switching ratio in ``(lo, hi]``, or None if there are several."""
    inside = ratios[(ratios > lo) & (ratios <= hi)]
    if inside.size == 0:
        return None
    r = inside.min()
    return float(r) if inside.max() == r else None


def solve_lambda_from_samples(samples, M, N, step_schedule=None, tol=1e-3, max_iters=10_000,
                              lam0=0.5):
    """Optimal multiplier and throughput bound for a fixed set of rate samples.

    Parameters
    ----------
    samples : RateTriple of arrays
        Per-block ``c1``, ``c2`` and ``c_fso`` draws (common random numbers).
    M : int
        FSO symbols per RF symbol.
    N : int
        RF symbols per block.
    step_schedule : callable, optional
        ``i -> delta_i``; defaults to ``harmonic_steps(0.5 / max(c1))``.
    tol : float
        Relative balance tolerance on ``|c1_bar - c2_bar - M c_fso_bar|``.

    Notes
    -----
    If the access load never exceeds the optical capacity on average the
    multiplier is 1 and the RF backhaul is never used. Otherwise the
    projected gradient update runs until the balance residual is within
    ``tol``. Because sample averages are step functions of ``lam``, the
    iteration also stops when the bracket around the sign change isolates a
    single switching point; the blocks tied at that point are then shared
    so the balance holds exactly.
    """
    c1, c2, cf = (np.asarray(x, dtype=float) for x in samples)
    if not (c1.shape == c2.shape == cf.shape) or c1.size == 0:
        raise DomainError("samples must be three equally sized non-empty arrays")
    inflow_all = float(c1.mean())
    if inflow_all <= M * float(cf.mean()):
        avg = _averages_from_q(np.ones_like(c1), samples)
        tau = N * min(avg.c1_bar, avg.c2_bar + M * avg.c_fso_bar)
        return UpperBoundResult(1.0, tau, avg, Case.FSO_SUFFICIENT, 0,
                                residual=_relative(_balance(avg, M), avg, M))

    if step_schedule is None:
        scale = float(c1.max()) if c1.max() > 0 else 1.0
        step_schedule = harmonic_steps(0.5 / scale)
    total = c1 + c2
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(total > 0, c2 / total, 0.0)

    lam = float(lam0)
    lo, hi = None, None
    residual = math.nan
    for i in range(max_iters):
        avg = average_rates(lam, samples)
        g = _balance(avg, M)
        residual = _relative(g, avg, M)
        if abs(residual) <= tol and lam > 0.0:
            tau = N * min(avg.c1_bar, avg.c2_bar + M * avg.c_fso_bar)
            return UpperBoundResult(lam, tau, avg, Case.BALANCED, i, residual=residual)
        if g < 0:
            lo = lam if lo is None else max(lo, lam)
        else:
            hi = lam if hi is None else min(hi, lam)
        if lo is not None and hi is not None:
            r = _isolated_jump(ratios, lo, hi)
            if r is not None and r > 0.0:
                return _split_ties(r, ratios, samples, M, N, i)
        lam = min(max(lam - step_schedule(i) * g, 0.0), 1.0)
    raise ConvergenceError(
        f"multiplier iteration stopped after {max_iters} steps with relative balance "
        f"residual {residual:.3g} (tolerance {tol:g})", residual, lam, max_iters)


def _split_ties(r, ratios, samples, M, N, iterations):
    # Left and right limits of the averages at the jump, mixed to zero the balance.
    above = _averages_from_q((ratios <= r).astype(float), samples)
    below = _averages_from_q((ratios < r).astype(float), samples)
    g_hi, g_lo = _balance(above, M), _balance(below, M)
    theta = 1.0 if g_hi == g_lo else min(max(-g_lo / (g_hi - g_lo), 0.0), 1.0)
    mix = lambda a, b: theta * a + (1.0 - theta) * b  # noqa: E731
    avg = AverageRates(
        c1_bar=mix(above.c1_bar, below.c1_bar),
        c2_bar=mix(above.c2_bar, below.c2_bar),
        c_fso_bar=above.c_fso_bar,
        samples_used=above.samples_used,
        std_errs=tuple(mix(a, b) for a, b in zip(above.std_errs, below.std_errs)),
    )
    g = _balance(avg, M)
    residual = _relative(g, avg, M)
    tau = N * min(avg.c1_bar, avg.c2_bar + M * avg.c_fso_bar)
    return UpperBoundResult(r, tau, avg, Case.BALANCED, iterations, residual=residual,
                            tie_fraction=theta)


def solve_lambda(params, budget, mode, rng, step_schedule=None, tol=1e-3, max_iters=10_000,
                 n_samples=None):
    """Draw ``n_samples`` blocks (default ``params.mc_samples``) and solve for the multiplier."""
    n = params.mc_samples if n_samples is None else n_samples
    samples = sample_rates(params, budget, mode, rng, n)
    if step_schedule is None:
        step_schedule = harmonic_steps(0.5 / params.total_user_rate)
    return solve_lambda_from_samples(samples, budget.M, params.symbols_per_block,
                                     step_schedule=step_schedule, tol=tol, max_iters=max_iters)


def samples_from_states(states, repeats=1):
    """Rate samples enumerating equiprobable discrete states ``(c1, c2, c_fso)``."""
    arr = np.repeat(np.asarray(states, dtype=float), repeats, axis=0)
    return RateTriple(arr[:, 0], arr[:, 1], arr[:, 2])
