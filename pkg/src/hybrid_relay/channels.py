"""Link budgets and block-fading channel draws for the two-hop relay.

All distances are in metres, powers in watts, gains in dBi and the optical
attenuation ``kappa_db_per_m`` in dB per metre.
"""

from dataclasses import dataclass, field, fields, replace
import math

import numpy as np

from .numerics import DomainError, erf, sample_gamma_gamma, sample_rice

__all__ = [
    "SystemParams",
    "LinkBudget",
    "ChannelRealization",
    "WEATHER",
    "derive_link_budget",
    "noise_power_dbm",
    "gamma_gamma_shapes",
    "sample_block",
    "sample_access_channels",
    "sample_backhaul_channels",
    "sample_fso_gains",
]

# (kappa [dB/m], C_n^2 [m^-2/3]) for the named visibility conditions.
WEATHER = {
    "clear_air": (0.43e-3, 50e-15),
    "haze": (4.2e-3, 17e-15),
    "light_fog": (20e-3, 3e-15),
    "moderate_fog": (42.2e-3, 2e-15),
    "heavy_fog": (125e-3, 1e-15),
}


def _per_user(value, k, name):
    if np.ndim(value) == 0:
        return (float(value),) * k
    value = tuple(float(v) for v in value)
    if len(value) != k:
        raise DomainError(f"{name} needs {k} entries (one per user), got {len(value)}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Topology, RF, FSO and simulation parameters (reference-scenario defaults)."""

    # topology
    users: int = 5
    relay_antennas: int = 10
    dest_antennas: int = 10
    # access link (user -> relay); scalars are broadcast to every user
    user_distance_m: tuple = 400.0
    user_power_w: tuple = 0.2
    user_rate_bits: tuple = 8.0
    access_gains_dbi: tuple = (0.0, 8.0)
    access_rice: tuple = (0.0, 1.0)
    # RF backhaul (relay -> destination); also the FSO link distance
    relay_distance_m: float = 1000.0
    relay_rf_power_w: float = 2.0
    backhaul_gains_dbi: tuple = (10.0, 15.0)
    backhaul_rice: tuple = (4.0, 1.0)
    # common RF
    rf_wavelength_m: float = 85.7e-3
    rf_bandwidth_hz: float = 20e6
    ref_distance_m: float = 60.0
    pathloss_exponent: float = 3.5
    noise_density_dbm_per_mhz: float = -114.0
    noise_figure_db: float = 5.0
    # FSO
    fso_power_w: float = 40e-3
    fso_wavelength_m: float = 1550e-9
    fso_bandwidth_hz: float = 1e9
    responsivity: float = 0.5
    fso_noise_var: float = 1e-14
    kappa_db_per_m: float = 0.43e-3
    cn2: float = 50e-15
    divergence_rad: float = 2e-3
    aperture_radius_m: float = 0.1
    # simulation controls
    symbols_per_block: int = 10_000
    blocks: int = 100_000
    mc_samples: int = 100_000
    seed: int = 0
    quad_order: int = 64

    def __post_init__(self):
        k = self.users
        for name in ("user_distance_m", "user_power_w", "user_rate_bits"):
            object.__setattr__(self, name, _per_user(getattr(self, name), k, name))
        for name in ("access_gains_dbi", "access_rice", "backhaul_gains_dbi", "backhaul_rice"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2:
                raise DomainError(f"{name} must have two entries, got {pair}")
            object.__setattr__(self, name, pair)
        self.validate()

    def validate(self):
        for name in ("users", "relay_antennas", "dest_antennas", "symbols_per_block",
                     "blocks", "mc_samples", "quad_order"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if self.relay_antennas < self.users:
            raise DomainError(
                f"J ≥ K required (relay_antennas={self.relay_antennas}, users={self.users})")
        positive = ["relay_distance_m", "relay_rf_power_w", "rf_wavelength_m", "rf_bandwidth_hz",
                    "ref_distance_m", "fso_power_w", "fso_wavelength_m", "fso_bandwidth_hz",
                    "responsivity", "fso_noise_var", "divergence_rad", "aperture_radius_m",
                    "pathloss_exponent"]
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        for name in ("user_distance_m", "user_power_w", "user_rate_bits"):
            if any(not (math.isfinite(v) and v > 0) for v in getattr(self, name)):
                raise DomainError(f"{name} entries must be positive and finite")
        for name in ("kappa_db_per_m", "cn2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be non-negative and finite, got {value!r}")
        for name in ("access_rice", "backhaul_rice"):
            omega, psi = getattr(self, name)
            if not (omega >= 0 and psi > 0):
                raise DomainError(f"{name} needs omega >= 0 and psi > 0, got {(omega, psi)}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def total_user_rate(self):
        return float(sum(self.user_rate_bits))

    def with_point(self, kappa_db_per_m=None, cn2=None, distance_m=None):
        """Copy with a different weather point and/or relay-destination distance."""
        changes = {}
        if kappa_db_per_m is not None:
            changes["kappa_db_per_m"] = float(kappa_db_per_m)
        if cn2 is not None:
            changes["cn2"] = float(cn2)
        if distance_m is not None:
            changes["relay_distance_m"] = float(distance_m)
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class LinkBudget:
    """Deterministic gains and noise powers derived from :class:`SystemParams`."""

    h_a_access: np.ndarray
    h_a_backhaul: float
    g_a: float
    alpha: float
    beta: float
    sigma2_relay: float
    sigma2_dest: float
    M: int
    p_scale: float
    sigma2_fso: float = field(default=1e-14)


@dataclass(frozen=True)
class ChannelRealization:
    """State of one fading block: access matrix (J x K), backhaul matrix (L x J), FSO gain."""

    H1: np.ndarray
    H2: np.ndarray
    g: float


def _rf_average_gain(wavelength, gains_dbi, ref_distance, distance, exponent):
    g_lin = 10.0 ** (np.asarray(gains_dbi, dtype=float) / 10.0)
    far_field = (wavelength * np.sqrt(g_lin[0] * g_lin[1]) / (4.0 * np.pi * ref_distance)) ** 2
    return far_field * (ref_distance / np.asarray(distance, dtype=float)) ** exponent


def noise_power_dbm(noise_density_dbm_per_mhz, bandwidth_hz, noise_figure_db):
    return noise_density_dbm_per_mhz + 10.0 * math.log10(bandwidth_hz / 1e6) + noise_figure_db


def gamma_gamma_shapes(cn2, wavelength_m, distance_m, aperture_radius_m):
    """Spherical-wave Gamma-Gamma shapes (alpha, beta) with aperture averaging."""
    wavenumber = 2.0 * math.pi / wavelength_m
    rytov = 0.5 * cn2 * wavenumber ** (7.0 / 6.0) * distance_m ** (11.0 / 6.0)
    xi2 = wavenumber * aperture_radius_m**2 / distance_m
    r125 = rytov ** (6.0 / 5.0)  # theta^(12/5) from theta^2
    with np.errstate(over="ignore", divide="ignore"):
        alpha = 1.0 / math.expm1(0.49 * rytov / (1.0 + 0.18 * xi2 + 0.56 * r125) ** (7.0 / 6.0))
        beta = 1.0 / math.expm1(
            0.51 * rytov * (1.0 + 0.69 * r125) ** (-5.0 / 6.0)
            / (1.0 + 0.9 * xi2 + 0.62 * xi2 * r125) ** (5.0 / 6.0))
    return alpha, beta


def derive_link_budget(params):
    """Compute average gains, turbulence shapes, noise powers and the FSO/RF symbol ratio."""
    p = params
    h_access = _rf_average_gain(p.rf_wavelength_m, p.access_gains_dbi, p.ref_distance_m,
                                p.user_distance_m, p.pathloss_exponent)
    h_backhaul = float(_rf_average_gain(p.rf_wavelength_m, p.backhaul_gains_dbi,
                                        p.ref_distance_m, p.relay_distance_m,
                                        p.pathloss_exponent))
    d = p.relay_distance_m
    geometric = erf(math.sqrt(math.pi) * p.aperture_radius_m
                    / (math.sqrt(2.0) * p.divergence_rad * d)) ** 2
    g_a = float(geometric * 10.0 ** (-p.kappa_db_per_m * d / 10.0))
    if p.cn2 > 0:
        alpha, beta = gamma_gamma_shapes(p.cn2, p.fso_wavelength_m, d, p.aperture_radius_m)
    else:
        alpha = beta = math.inf
    for name, value in (("alpha", alpha), ("beta", beta)):
        if not value > 0 or math.isnan(value):
            raise DomainError(f"turbulence parameters give a non-positive {name} ({value})")
    if not (g_a > 0 and math.isfinite(g_a)):
        raise DomainError(f"optical attenuation drives the average FSO gain to {g_a}")
    noise_w = 10.0 ** ((noise_power_dbm(p.noise_density_dbm_per_mhz, p.rf_bandwidth_hz,
                                        p.noise_figure_db) - 30.0) / 10.0)
    M = int(round(p.fso_bandwidth_hz / p.rf_bandwidth_hz))
    if M < 1:
        raise DomainError(f"FSO bandwidth must be at least the RF bandwidth (M={M})")
    h_access = np.asarray(h_access, dtype=float)
    h_access.flags.writeable = False
    return LinkBudget(
        h_a_access=h_access,
        h_a_backhaul=h_backhaul,
        g_a=g_a,
        alpha=float(alpha),
        beta=float(beta),
        sigma2_relay=noise_w,
        sigma2_dest=noise_w,
        M=M,
        p_scale=p.responsivity * g_a * p.fso_power_w,
        sigma2_fso=p.fso_noise_var,
    )


def _fading(rng, rice, shape):
    omega, psi = rice
    magnitude = sample_rice(rng, omega, psi, shape)
    phase = rng.uniform(-np.pi, np.pi, shape)
    return magnitude * np.exp(1j * phase)


def sample_access_channels(params, budget, rng, n=None):
    """User-to-relay matrices, shape ``(n, J, K)`` (or ``(J, K)`` when ``n`` is None)."""
    shape = (params.relay_antennas, params.users) if n is None else (
        n, params.relay_antennas, params.users)
    return np.sqrt(budget.h_a_access) * _fading(rng, params.access_rice, shape)


def sample_backhaul_channels(params, budget, rng, n=None):
    """Relay-to-destination matrices, shape ``(n, L, J)`` (or ``(L, J)``)."""
    shape = (params.dest_antennas, params.relay_antennas) if n is None else (
        n, params.dest_antennas, params.relay_antennas)
    return np.sqrt(budget.h_a_backhaul) * _fading(rng, params.backhaul_rice, shape)


def sample_fso_gains(budget, rng, n=None):
    """Instantaneous optical gains ``g_a * GGamma(alpha, beta)``."""
    if math.isinf(budget.alpha) or math.isinf(budget.beta):
        # A degenerate shape contributes a constant unit factor.
        a = budget.beta if math.isinf(budget.alpha) else budget.alpha
        if math.isinf(a):
            return budget.g_a if n is None else np.full(n, budget.g_a)
        return budget.g_a * rng.gamma(a, 1.0 / a, n)
    return budget.g_a * sample_gamma_gamma(rng, budget.alpha, budget.beta, n)


def sample_block(params, budget, rng):
    """Draw one i.i.d. fading block."""
    H1 = sample_access_channels(params, budget, rng)
    H2 = sample_backhaul_channels(params, budget, rng)
    g = float(sample_fso_gains(budget, rng))
    return ChannelRealization(H1=H1, H2=H2, g=g)
