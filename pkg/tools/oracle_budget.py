"""Golden link-budget values from a 50-digit scalar evaluation.

Writes ``tests/data/budget_golden.json``. Independent of the package: the
formulas are restated here in mpmath.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50


def budget(kappa=mp.mpf("0.43e-3"), cn2=mp.mpf("50e-15"), d=mp.mpf(1000)):
    lam_rf, d_ref, nu = mp.mpf("0.0857"), mp.mpf(60), mp.mpf("3.5")

    def h_a(g_dbi, dist):
        gt, gr = (mp.power(10, mp.mpf(g) / 10) for g in g_dbi)
        return (lam_rf * mp.sqrt(gt * gr) / (4 * mp.pi * d_ref)) ** 2 * (d_ref / dist) ** nu

    r, phi = mp.mpf("0.1"), mp.mpf("2e-3")
    g_a = mp.erf(mp.sqrt(mp.pi) * r / (mp.sqrt(2) * phi * d)) ** 2 * mp.power(10, -kappa * d / 10)
    k = 2 * mp.pi / mp.mpf("1550e-9")
    th2 = mp.mpf("0.5") * cn2 * k ** (mp.mpf(7) / 6) * d ** (mp.mpf(11) / 6)
    xi2 = k * r**2 / d
    th125 = th2 ** (mp.mpf(6) / 5)
    alpha = 1 / (mp.exp(mp.mpf("0.49") * th2
                        / (1 + mp.mpf("0.18") * xi2 + mp.mpf("0.56") * th125) ** (mp.mpf(7) / 6)) - 1)
    beta = 1 / (mp.exp(mp.mpf("0.51") * th2 * (1 + mp.mpf("0.69") * th125) ** (-mp.mpf(5) / 6)
                       / (1 + mp.mpf("0.9") * xi2 + mp.mpf("0.62") * xi2 * th125) ** (mp.mpf(5) / 6))
                - 1)
    noise_dbm = mp.mpf(-114) + 10 * mp.log10(20) + 5
    sigma2 = mp.power(10, (noise_dbm - 30) / 10)
    return {
        "h_a_access": h_a((0, 8), mp.mpf(400)),
        "h_a_backhaul": h_a((10, 15), d),
        "g_a": g_a,
        "alpha": alpha,
        "beta": beta,
        "noise_dbm": noise_dbm,
        "sigma2": sigma2,
        "p_scale": mp.mpf("0.5") * g_a * mp.mpf("0.04"),
    }


if __name__ == "__main__":
    out = {key: float(val) for key, val in budget().items()}
    out["point"] = {"kappa_db_per_m": 0.43e-3, "cn2": 50e-15, "d_m": 1000.0}
    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "budget_golden.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))
