"""Independent straight-line arithmetic oracles for every catalogued model.

Each oracle is a flat transcription of the published formula using only the
math module, with no shared helpers, so it stays independent of the package
implementation it checks.
"""

import math


def an_discovered_3(E, n, d):
    return 0.0878 * E * n + 72.3 * math.log10(d) - 648.7 / (E * math.log10(E))


def an_discovered_4(E, n, d):
    return 0.093 * E * n + 55.02 * math.log10(d) - 591.0 / (E * d * d) \
        - 5448.0 / (E * E)


def an_discovered_5(E, n, d):
    return 0.0116 * n * n * d - 102.4 * n / (E * math.log(E) + d * d) \
        + 9.216 * d + 19.13 * math.log(n) - 677.3 / E


def an_poly_baseline(E, n, d):
    return 1.022 * n + 10.4 * d + 30.839 - 933.633 / E


def an_bpa(E, n, d):
    return 120.0 * math.log10(E) + 55.0 * math.log10(d) \
        + 26.4 * math.log10(n) - 128.4


def an_enel(E, n, d):
    return 85.0 * math.log10(E) + 45.0 * math.log10(d) \
        + 18.0 * math.log10(n) - 71.0


def an_ireq(E, n, d):
    return 72.0 * math.log10(E) + 45.81 * math.log10(d) \
        + 22.71 * math.log10(n) - 57.6


def an_fgh(E, n, d):
    return 2.0 * E + 45.0 * math.log10(d) + 18.0 * math.log10(n) - 0.3


def an_ge(E, n, d):
    return -655.0 / E + 44.0 * math.log10(d) + 20.0 * math.log10(n) + 67.9


def an_epri(E, n, d):
    return 120.0 * math.log10(E) + 54.0 * math.log10(d) + 24.8 - 126.0


def an_pysr(E, n, d):
    return 1.58 * n * d - 2.97 * n + 55.6 - 915.0 / E


def an_dso(E, n, d):
    return -2.65 * E * d / (n * n) + 62.8 * d - 64.8 * d / math.log10(E) \
        + 0.47 * n - 17.0


def ri_discovered_3(E, n, d):
    return 45.6 * math.log10(E) - 819.5 / (d * (E - 1.0)) + 0.07 * n * d * d


def ri_discovered_4(E, n, d):
    return -117.2 * n / (n * n * d - d) - 133.5 * n / (E + n * d * d) \
        + 98.68 - 629.7 / E


def ri_discovered_5(E, n, d):
    return -45.87 * E / (n * n * n * d) + 4.499 * d + 72.88 - 522.2 / E \
        - 543.4 / (E * d)


def ri_poly_baseline(E, n, d):
    return 6.51 * d + 10.287 * math.log10(n) + 55.22 - 671.7 / E


def ri_bpa(E, n, d):
    return 120.0 * math.log10(E / 15.0) + 40.0 * math.log10(d / 4.0) + 37.02


def ri_cigre(E, n, d):
    return 3.5 * E + 6.0 * d - 40.69


def ri_epri(E, n, d):
    if n <= 8:
        return -580.0 / E + 38.0 * math.log10(d / 3.8) + 81.1
    return -580.0 / E + 38.0 * math.log10(d / 3.8) + 86.1


def ri_cispr(E, n, d):
    return 70.0 - 580.0 / E + 35.0 * math.log10(d) - 10.0 * math.log10(n)


def ri_ireq(E, n, d):
    if n < 2:
        k = 0.0
    elif n < 3:
        k = 3.7
    else:
        k = 6.0
    return -90.25 + 92.42 * math.log10(E) + 43.03 * math.log10(d) - k


def ri_pysr(E, n, d):
    return 0.51 * (d + 158.407) * math.log(math.log((n - 6.35) * E)) - 613.0


def ri_dso(E, n, d):
    return 11.1 * E / n + 18.2 * d - 68.6 * d / n + 0.99 * n - 16.1


ORACLES = {
    "an-discovered-3": an_discovered_3,
    "an-discovered-4": an_discovered_4,
    "an-discovered-5": an_discovered_5,
    "an-poly-baseline": an_poly_baseline,
    "an-bpa": an_bpa,
    "an-enel": an_enel,
    "an-ireq": an_ireq,
    "an-fgh": an_fgh,
    "an-ge": an_ge,
    "an-epri": an_epri,
    "an-pysr": an_pysr,
    "an-dso": an_dso,
    "ri-discovered-3": ri_discovered_3,
    "ri-discovered-4": ri_discovered_4,
    "ri-discovered-5": ri_discovered_5,
    "ri-poly-baseline": ri_poly_baseline,
    "ri-bpa": ri_bpa,
    "ri-cigre": ri_cigre,
    "ri-epri": ri_epri,
    "ri-cispr": ri_cispr,
    "ri-ireq": ri_ireq,
    "ri-pysr": ri_pysr,
    "ri-dso": ri_dso,
}


def sample_point(model_id, rng):
    """Random in-domain (E, n, d) for the given model."""
    E = rng.uniform(12.0, 32.0)
    d = rng.uniform(1.5, 3.5)
    if model_id == "ri-pysr":
        # needs ln((n - 6.35) * E) > 0, i.e. (n - 6.35) * E > 1
        n = rng.uniform(7.0, 16.0)
    else:
        n = rng.uniform(2.0, 16.0)
    return E, n, d
