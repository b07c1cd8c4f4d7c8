"""Smoke test for the kclosure extension module.

Build and install first, e.g. ``pip install ./crates/py`` or
``maturin develop -m crates/py/Cargo.toml``. Exits non-zero on failure.
"""

import cmath
import math
import sys

import kclosure as kc


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}".rstrip())
    return ok


def main():
    results = []

    kcrit = kc.k_crit(0.1)
    results.append(check("k_crit(0.1)", abs(kcrit - 12.5331) < 1e-3, f"= {kcrit:.6f}"))
    results.append(check("erfcx(2)", abs(kc.erfcx(2.0) - 0.2553956763105057) < 1e-15))
    results.append(check("erf vs math.erf", all(abs(kc.erf(x) - math.erf(x)) < 1e-15 for x in (-2.0, -0.3, 0.0, 0.7, 3.0))))
    z = complex(0.5, 1.5)
    lhs = kc.faddeeva_w(-z) + kc.faddeeva_w(z)
    results.append(check("w(-z) + w(z) = 2 exp(-z^2)", abs(lhs - 2 * cmath.exp(-z * z)) < 1e-14))

    r = kc.lambda_star(5.0, 0.1)
    results.append(check("lambda*(5, 0.1) in (-10, 0)", -10.0 < r.lambda_star < 0.0, f"= {r.lambda_star:.12f}"))
    lam_n, vec, res = kc.slow_eigenpair(5.0, 0.1, 400)
    results.append(check("truncated slow eigenvalue", abs(lam_n - r.lambda_star) < 1e-8 and res < 1e-10))
    _, res_rec = kc.eigenvector_recurrence(5.0, 0.1, r.lambda_star, 100)
    results.append(check("recurrence residual", res_rec <= 1e-8, f"= {res_rec:.2e}"))
    results.append(check("series at order 3", abs(kc.lambda_series(2.0, 0.05, 3) + 0.198) < 1e-15))
    results.append(check("CE terms", kc.ce_terms(5) == [(1, 2, "-1"), (3, 4, "1"), (5, 6, "-4")]))

    rows = kc.sweep([0.0, 1.0, 20.0], 0.1)
    results.append(check("sweep flags", [row.in_range for row in rows] == [False, True, False]))

    try:
        kc.lambda_star(20.0, 0.1)
        raised = False
    except ValueError:
        raised = True
    results.append(check("supercritical raises ValueError", raised))

    n, length = 32, 2 * math.pi
    samples = [math.exp(-((j * length / n - math.pi) ** 2) / 0.5) for j in range(n)]
    field = kc.SpectralField(length, samples)
    cfg = kc.EvolveConfig("closure_exact", 0.01, 0.01, 1.0, save_every=100)
    times, fields = kc.evolve(field, cfg)
    mass0 = sum(field.samples) / n
    mass1 = sum(fields[-1].samples) / n
    results.append(check("closure conserves mass", abs(mass1 - mass0) < 1e-14 and times[-1] == 1.0))
    _, ce1 = kc.evolve(field, kc.EvolveConfig("ce_order1", 0.01, 0.01, 1.0, save_every=100))
    diff = max(abs(a - b) for a, b in zip(fields[-1].samples, ce1[-1].samples))
    results.append(check("closure vs ce_order1 at tau = 0.01", diff < 1e-3, f"max diff {diff:.2e}"))

    wave = kc.SpectralField(length, [1.0 + 0.1 * math.cos(5 * j * length / n) for j in range(n)])
    report = kc.attraction_report(wave, 0.1, 100, 4.0, start="white", seed=7)
    rate = report[0]["fitted_rate"]
    results.append(check("attraction rate at k = 5", abs(rate + 10.0) <= 0.5, f"= {rate:.4f}"))

    failed = results.count(False)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
