"""Golden rate triple of one seeded reference-scenario block (clear air, 1 km).

The channel draw uses the package sampler (seed 0, the ``capacity`` CLI
stream); the three rates are recomputed here with independent component
oracles: pseudo-inverse row norms for zero-forcing, bisection on the water
level for the backhaul, and a 40-digit quadrature of the printed OOK
integral. Writes ``tests/data/golden_rates.json``.
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

from hybrid_relay.channels import SystemParams, derive_link_budget, sample_block
from hybrid_relay.numerics import make_rng

mp.mp.dps = 40


def zf_rate(H1, power, sigma2, rates):
    pinv = np.linalg.pinv(H1)
    snr = power / (sigma2 * np.sum(np.abs(pinv) ** 2, axis=1))
    return float(sum(r for g, r in zip(snr, rates) if g >= 2.0**r - 1.0))


def backhaul(H2, power, sigma2):
    chi2 = np.linalg.eigvalsh(H2.conj().T @ H2)
    chi2 = chi2[chi2 > 1e-30]
    floors = sigma2 / chi2
    lo, hi = 0.0, power + floors.max()
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        if np.clip(mu - floors, 0, None).sum() > power:
            hi = mu
        else:
            lo = mu
    return float(np.sum(np.clip(np.log2(mu * chi2 / sigma2), 0, None)))


def ook(p, sigma2):
    p, sigma2 = mp.mpf(p), mp.mpf(sigma2)
    s = p**2 / (2 * sigma2)
    a = 2 * p / mp.sqrt(2 * sigma2)

    def f(t):
        return mp.exp(-t**2) * mp.log(1 + mp.exp(-s) * (mp.exp(a * t) + mp.exp(-a * t)
                                                        + mp.exp(-s)), 2)

    return float(1 - mp.quad(f, [-mp.inf, -1, 0, 1, mp.inf]) / (2 * mp.sqrt(mp.pi)))


def main():
    params = SystemParams()
    budget = derive_link_budget(params)
    block = sample_block(params, budget, make_rng(0, 2, 1_000_000))
    p = params.responsivity * params.fso_power_w * block.g
    out = {
        "seed": 0,
        "stream": [2, 1_000_000],
        "g": block.g,
        "c1": zf_rate(block.H1, np.asarray(params.user_power_w), budget.sigma2_relay,
                      params.user_rate_bits),
        "c2": backhaul(block.H2, params.relay_rf_power_w, budget.sigma2_dest),
        "c_fso": ook(p, params.fso_noise_var),
    }
    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "golden_rates.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
