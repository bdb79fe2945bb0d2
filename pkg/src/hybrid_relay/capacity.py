"""Per-block rates of the access link, the RF backhaul and the OOK optical backhaul.

Every rate function accepts one channel matrix or a stack of them along
leading axes and returns a float or an array to match.
"""

from enum import Enum
import math
from typing import NamedTuple

import numpy as np

from . import channels
from .numerics import (
    DomainError,
    gauss_hermite_nodes,
    gram_inverse_diag_batch,
    log2_det_hermitian_psd,
    svd_singular_values,
)

__all__ = [
    "AccessMode",
    "RateTriple",
    "zf_snrs",
    "access_rate_fixed",
    "access_rate_adaptive",
    "access_rate",
    "waterfill_level",
    "waterfill_levels",
    "waterfill_powers",
    "backhaul_capacity",
    "ook_capacity",
    "rates_for_block",
    "sample_rf_rates",
    "sample_fso_rates",
    "sample_rates",
]

LN2 = math.log(2.0)
# Above this p^2/(2 sigma^2) the OOK capacity equals 1 to double precision.
OOK_SATURATION = 700.0
# p^2/sigma^2 up to which plain Gauss-Hermite on the printed integrand is used.
OOK_HERMITE_LIMIT = 2.0
# Half-width of the kink-centred trapezoid grid; tails beyond are < 1e-17.
_TRAPEZOID_SPAN = 80.0
SAMPLE_CHUNK = 10_000


class AccessMode(Enum):
    FIXED_RATE_ZF = "fixed"
    ADAPTIVE_MAC_SUM = "adaptive"


class RateTriple(NamedTuple):
    """Access, RF-backhaul (bits per RF symbol) and FSO (bits per FSO symbol) rates."""

    c1: float
    c2: float
    c_fso: float


def zf_snrs(H1, user_power, sigma2_relay):
    """Post-detection SNR of every user under zero-forcing.

    A Gram matrix that cannot be inverted reliably yields zero SNR for all
    users of that block (outage).
    """
    diag, singular = gram_inverse_diag_batch(H1)
    power = np.asarray(user_power, dtype=float)
    with np.errstate(divide="ignore"):
        snr = power / (sigma2_relay * diag)
    snr[singular] = 0.0
    return snr


def access_rate_fixed(H1, params, budget):
    """Sum of fixed user rates whose ZF SNR clears ``2**R - 1`` (inclusive)."""
    rates = np.asarray(params.user_rate_bits, dtype=float)
    snr = zf_snrs(H1, params.user_power_w, budget.sigma2_relay)
    decoded = snr >= np.exp2(rates) - 1.0
    out = decoded.astype(float) @ rates
    return float(out) if np.ndim(out) == 0 else out


def access_rate_adaptive(H1, params, budget):
    """Sum capacity of the multiple-access channel, ``log2 det(I + H P H^H / sigma^2)``."""
    H1 = np.asarray(H1, dtype=complex)
    power = np.asarray(params.user_power_w, dtype=float)
    cov = (H1 * power) @ np.conj(np.swapaxes(H1, -1, -2)) / budget.sigma2_relay
    cov = cov + np.eye(H1.shape[-2])
    out = log2_det_hermitian_psd(cov)
    out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def access_rate(H1, params, budget, mode):
    if mode is AccessMode.FIXED_RATE_ZF:
        return access_rate_fixed(H1, params, budget)
    if mode is AccessMode.ADAPTIVE_MAC_SUM:
        return access_rate_adaptive(H1, params, budget)
    raise DomainError(f"unknown access mode {mode!r}")


def waterfill_levels(sing_vals, sigma2, power):
    """Water levels for a stack of singular-value vectors (last axis).

    Rows whose singular values are all zero get ``nan``.
    """
    sv = np.asarray(sing_vals, dtype=float)
    with np.errstate(divide="ignore"):
        floors = np.sort(sigma2 / sv**2, axis=-1)
    finite = np.isfinite(floors)
    # Candidate level when the k strongest modes are active.
    k = np.arange(1, sv.shape[-1] + 1)
    csum = np.cumsum(np.where(finite, floors, 0.0), axis=-1)
    candidates = (power + csum) / k
    active = finite & (candidates > floors)
    # Active sets are nested, so the largest feasible k is the count of feasible ones.
    n_active = active.sum(axis=-1)
    level = np.take_along_axis(candidates, np.maximum(n_active - 1, 0)[..., None], axis=-1)[..., 0]
    return np.where(n_active > 0, level, np.nan)


def waterfill_level(sing_vals, sigma2, power):
    """Water level ``mu`` with ``sum_j [mu - sigma2/chi_j**2]^+ == power``.

    Raises
    ------
    DomainError
        If every singular value is zero (no usable eigenmode).
    """
    sv = np.asarray(sing_vals, dtype=float)
    if sv.ndim != 1:
        raise DomainError("waterfill_level takes a 1-D vector of singular values")
    if not power > 0:
        raise DomainError(f"transmit power must be positive, got {power}")
    if not np.any(sv > 0):
        raise DomainError("all singular values are zero; the channel has no eigenmode")
    return float(waterfill_levels(sv, sigma2, power))


def waterfill_powers(sing_vals, sigma2, power):
    """Per-mode powers ``[mu - sigma2/chi_j**2]^+`` for a 1-D singular-value vector.

    When the noise floors dwarf ``power``, ``mu - floor`` loses most of its
    digits; the active powers are therefore rescaled to sum to ``power``.
    """
    sv = np.asarray(sing_vals, dtype=float)
    mu = waterfill_level(sv, sigma2, power)
    with np.errstate(divide="ignore"):
        floors = sigma2 / sv**2
    alloc = np.clip(mu - floors, 0.0, None)
    total = alloc.sum()
    if total > 0:
        alloc *= power / total
    else:
        # all headroom lost to rounding: the strongest mode takes everything
        alloc[np.argmin(floors)] = power
    return alloc


def backhaul_capacity(H2, params, budget):
    """Waterfilling capacity of the relay-destination MIMO link in bits per symbol."""
    sv = svd_singular_values(H2)
    level = waterfill_levels(sv, budget.sigma2_dest, params.relay_rf_power_w)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_mode = np.log2(level[..., None] * sv**2 / budget.sigma2_dest)
    per_mode = np.where(np.isnan(per_mode), 0.0, per_mode)
    out = np.clip(per_mode, 0.0, None).sum(axis=-1)
    out = np.where(np.isnan(level), 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def _ook_gap_hermite(s, order):
    # Symmetry folds the two log terms of the integrand into one.
    t, w = gauss_hermite_nodes(order)
    arg = 2.0 * t * np.sqrt(s)[..., None] - s[..., None]
    return (np.logaddexp(0.0, arg) @ w) / (math.sqrt(math.pi) * LN2)


def _ook_gap_trapezoid(s, order):
    # Substituting z = 2 t sqrt(s) - s centres the kink of log(1 + e^z) at z = 0
    # and turns the narrow feature into an O(1)-scale analytic integrand.
    h = 32.0 / order
    z = np.arange(-_TRAPEZOID_SPAN, _TRAPEZOID_SPAN + 0.5 * h, h)
    s = s[..., None]
    integrand = np.exp(-((z + s) ** 2) / (4.0 * s)) * np.logaddexp(0.0, z)
    return h * integrand.sum(axis=-1) / (2.0 * np.sqrt(s[..., 0]) * math.sqrt(math.pi) * LN2)


def ook_capacity(p, sigma2_fso, quad_order=64):
    """Capacity (bits/symbol) of the OOK optical channel with received level ``p``.

    The printed integrand is evaluated in log space. Low SNRs use
    Gauss-Hermite quadrature of order ``quad_order``; higher SNRs use a
    trapezoid rule on a grid centred at the integrand's kink with step
    ``32/quad_order``, which stays accurate where the Hermite nodes are
    too sparse. Results saturate at ``1 - eps`` beyond the overflow guard.
    """
    if not sigma2_fso > 0:
        raise DomainError(f"optical noise variance must be positive, got {sigma2_fso}")
    gauss_hermite_nodes(quad_order)  # validates the order
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0):
        raise DomainError("received optical level p must be non-negative")
    s = np.atleast_1d(p_arr**2 / (2.0 * sigma2_fso))
    out = np.empty_like(s)
    low = s <= 0.5 * OOK_HERMITE_LIMIT
    high = s > OOK_SATURATION
    mid = ~low & ~high
    if np.any(low):
        out[low] = 1.0 - _ook_gap_hermite(s[low], quad_order)
    for start in range(0, int(mid.sum()), SAMPLE_CHUNK):
        idx = np.flatnonzero(mid)[start:start + SAMPLE_CHUNK]
        out[idx] = 1.0 - _ook_gap_trapezoid(s[idx], quad_order)
    out[high] = 1.0 - np.finfo(float).eps
    out = np.clip(out, 0.0, 1.0)
    out[s == 0] = 0.0
    return float(out[0]) if p_arr.ndim == 0 else out.reshape(p_arr.shape)


def optical_level(params, g):
    """Received photocurrent level ``rho * g * P_fso`` for OOK symbol 'on'."""
    return params.responsivity * params.fso_power_w * np.asarray(g, dtype=float)


def rates_for_block(ch, params, budget, mode=AccessMode.FIXED_RATE_ZF):
    """Rate triple of one fading block (or of stacked blocks)."""
    c1 = access_rate(ch.H1, params, budget, mode)
    c2 = backhaul_capacity(ch.H2, params, budget)
    c_fso = ook_capacity(optical_level(params, ch.g), budget.sigma2_fso, params.quad_order)
    return RateTriple(c1, c2, c_fso)


def sample_rf_rates(params, budget, mode, rng, n):
    """Draw ``n`` i.i.d. blocks of both RF links and return ``(c1, c2)`` arrays."""
    c1 = np.empty(n)
    c2 = np.empty(n)
    for start in range(0, n, SAMPLE_CHUNK):
        m = min(SAMPLE_CHUNK, n - start)
        H1 = channels.sample_access_channels(params, budget, rng, m)
        H2 = channels.sample_backhaul_channels(params, budget, rng, m)
        c1[start:start + m] = access_rate(H1, params, budget, mode)
        c2[start:start + m] = backhaul_capacity(H2, params, budget)
    return c1, c2


def sample_fso_rates(params, budget, rng, n):
    """Draw ``n`` i.i.d. optical gains and return the OOK capacities."""
    g = channels.sample_fso_gains(budget, rng, n)
    return ook_capacity(optical_level(params, g), budget.sigma2_fso, params.quad_order)


def sample_rates(params, budget, mode, rng, n):
    """``n`` i.i.d. rate triples as arrays.

    The RF and optical draws come from two children spawned from ``rng``,
    so the RF trace does not depend on the optical parameters.
    """
    rf_rng, fso_rng = rng.spawn(2)
    c1, c2 = sample_rf_rates(params, budget, mode, rf_rng, n)
    return RateTriple(c1, c2, sample_fso_rates(params, budget, fso_rng, n))
