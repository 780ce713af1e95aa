"""Acceptance harness: one test per headline criterion.

Each test prints a single ``criterion N: PASS/FAIL`` line (visible with
``pytest -s``, and implied by the per-test verdicts of ``pytest -v``),
checks the stated tolerances, and enforces the declared runtime budget.
"""

import time

import numpy as np
import pytest

from weylcount.lb_spectrum import (
    cached_mesh_spectrum,
    exact_sphere_spectrum,
)
from weylcount.semiclassical_count import (
    DampingConstants,
    build_operator,
    count_negative,
    inequality_check,
    inequality_margin,
    monotonicity_probe,
    scan,
    weyl_coefficient,
)
from weylcount.spectral_regions import (
    RegionParams,
    in_axis_neighborhood,
    in_counting_region,
    in_spectral_strip,
    real_eigenvalue_bound,
)
from weylcount.surface import AnalyticSurface, DampingField
from weylcount.surface.mesh import icosphere
from weylcount.symbol_algebra import identity_suite


def announce(number, ok, detail):
    print("criterion %d: %s (%s)" % (number, "PASS" if ok else "FAIL",
                                     detail))
    assert ok, "criterion %d failed: %s" % (number, detail)


@pytest.fixture(scope="module")
def sphere():
    return AnalyticSurface.unit_sphere()


@pytest.fixture(scope="module")
def gamma_two():
    return DampingField.constant(2.0)


@pytest.fixture(scope="module")
def tilted():
    return DampingField.affine(2.0, 0.5, (0.0, 0.0, 1.0))


@pytest.fixture(scope="module")
def big_basis():
    # resolves the stability recount for constant gamma0 = 2 up to r = 30
    return exact_sphere_spectrum(93)


@pytest.fixture(scope="module")
def variable_scan(sphere, tilted):
    """Criterion 3's scan; criterion 8 reuses it and shares the budget."""
    basis = exact_sphere_spectrum(66)
    start = time.perf_counter()
    report = scan(sphere, tilted, np.linspace(6.0, 16.0, 11), basis)
    elapsed = time.perf_counter() - start
    return report, basis, elapsed


def test_criterion_01_sphere_constant_oracle(sphere, gamma_two, big_basis):
    start = time.perf_counter()
    # exact equality against independent cluster enumeration
    frozen = {5.0: 81, 10.0: 289, 20.0: 1225}
    equal = True
    for r, expected in frozen.items():
        got = count_negative(build_operator(big_basis, gamma_two,
                                            1.0 / r)).negative
        threshold = 3.0 * r * r
        n, enumerated = 0, 0
        while n * (n + 1) < threshold:
            enumerated += 2 * n + 1
            n += 1
        equal = equal and got == expected == enumerated
    # remainder bound over a dense grid
    bound_ok = True
    for r in np.arange(3.0, 30.0 + 0.125, 0.25):
        got = count_negative(build_operator(big_basis, gamma_two,
                                            1.0 / r)).negative
        bound_ok = bound_ok and abs(got - 3.0 * r * r) <= 6.0 * r
    elapsed = time.perf_counter() - start
    announce(1, equal and bound_ok and elapsed < 1.0,
             "counts {81,289,1225}, |N-3r^2|<=6r on [3,30], %.2fs"
             % elapsed)


def test_criterion_02_weyl_coefficient(sphere, gamma_two, big_basis):
    start = time.perf_counter()
    report = scan(sphere, gamma_two, np.linspace(10.0, 30.0, 21), big_basis)
    elapsed = time.perf_counter() - start
    coeff_ok = 3.0 - 0.35 <= report.fitted_coefficient <= 3.0 + 0.35
    exponent_ok = 1.9 <= report.fitted_exponent <= 2.1
    announce(2, coeff_ok and exponent_ok and elapsed < 10.0,
             "fit %.4f in [2.65, 3.35], exponent %.3f in [1.9, 2.1], %.2fs"
             % (report.fitted_coefficient, report.fitted_exponent, elapsed))


def test_criterion_03_variable_damping(variable_scan):
    report, _, elapsed = variable_scan
    target = 37.0 / 12.0
    at_16 = report.n_scalar[-1] / 16.0 ** 2
    value_ok = abs(at_16 - target) <= 0.4
    stable_ok = report.stability_delta == 0
    announce(3, value_ok and stable_ok and elapsed < 120.0,
             "N(16)/256 = %.4f vs 37/12 = %.4f, recount delta %d, %.2fs"
             % (at_16, target, report.stability_delta, elapsed))


def test_criterion_04_regime_symmetry(sphere, variable_scan):
    report, basis, _ = variable_scan
    inverted = DampingField.affine(2.0, 0.5, (0.0, 0.0, 1.0), invert=True)
    mirrored = scan(sphere, inverted, report.r_grid, basis)
    identical = mirrored.to_csv() == report.to_csv()
    announce(4, identical, "below-one field reproduces the CountReport "
             "byte-for-byte: %s" % identical)


def test_criterion_05_mesh_consistency(sphere, gamma_two):
    start = time.perf_counter()
    fem, _ = cached_mesh_spectrum(icosphere(4), 140)
    exact = exact_sphere_spectrum(40)
    # frequency agreement through degree 10 (first 121 modes)
    fem_root = np.sqrt(fem.eigenvalues[1:121])
    exact_root = np.sqrt(exact.eigenvalues[1:121])
    worst = np.max(np.abs(fem_root - exact_root) / exact_root)
    spectrum_ok = worst < 0.02
    # identical counts up to borderline modes; a mode is borderline when
    # its dispersion value sits within the FEM-induced uncertainty band
    band = 0.05
    counts_ok = True
    detail = []
    for r in range(1, 7):
        h = 1.0 / r
        n_fem = count_negative(build_operator(fem, gamma_two, h)).negative
        n_exact = count_negative(build_operator(exact, gamma_two,
                                                h)).negative
        allowance = 0
        for basis in (fem, exact):
            mu = np.sqrt(1.0 + h * h * basis.eigenvalues) - 2.0
            allowance += int(np.sum(np.abs(mu) <= band))
        counts_ok = counts_ok and abs(n_fem - n_exact) <= allowance
        if n_fem != n_exact:
            detail.append("r=%d: %d vs %d (allowance %d)"
                          % (r, n_fem, n_exact, allowance))
    elapsed = time.perf_counter() - start
    announce(5, spectrum_ok and counts_ok and elapsed < 300.0,
             "worst frequency error %.4f < 0.02; %s; %.1fs"
             % (worst, "; ".join(detail) or "counts equal", elapsed))


def test_criterion_06_symbol_identities(sphere):
    start = time.perf_counter()
    worst = {}
    for surface in (sphere, AnalyticSurface.ellipsoid(2.0, 1.0, 1.0)):
        suite = identity_suite(surface, samples=1000, seed=42)
        for name, value in suite["residuals"].items():
            worst[name] = max(worst.get(name, 0.0), value)
    elapsed = time.perf_counter() - start
    top = max(worst.values())
    announce(6, top < 1e-8 and elapsed < 10.0,
             "%d identities on sphere + ellipsoid, worst residual %.2e, "
             "%.2fs" % (len(worst), top, elapsed))


def test_criterion_07_per_mode_inequality():
    start = time.perf_counter()
    ok = True
    details = []
    for gamma0 in (1.5, 2.0, 5.0):
        constants = DampingConstants(gamma0, gamma0)
        report = inequality_check(constants, count=10000, seed=7)
        at_one = inequality_margin(constants, 1.0, gamma0)
        ok = ok and report["violations"] == 0 \
            and report["min_margin"] >= 0.0 \
            and at_one >= 0.5 * constants.eps
        details.append("gamma0=%g: min %.3g, at s=1 %.3g >= eps/2 = %.3g"
                       % (gamma0, report["min_margin"], at_one,
                          0.5 * constants.eps))
    elapsed = time.perf_counter() - start
    announce(7, ok and elapsed < 1.0,
             "; ".join(details) + ", %.2fs" % elapsed)


def test_criterion_08_branch_monotonicity(sphere, tilted, variable_scan):
    _, basis, scan_elapsed = variable_scan
    start = time.perf_counter()
    probe = monotonicity_probe(basis, tilted, (1.0 / 16.5, 1.0 / 15.5),
                               surface=sphere, steps=7)
    elapsed = time.perf_counter() - start
    in_band = len(probe.events)
    positive = all(event.slope > 0.0 for event in probe.events)
    ok = in_band > 0 and positive and not probe.violations \
        and scan_elapsed + elapsed < 120.0
    announce(8, ok, "%d tracked in-band branches, min slope %.3g > 0, "
             "0 violations, %.2fs incl. criterion 3"
             % (in_band, probe.min_slope, scan_elapsed + elapsed))


def test_criterion_09_regions_and_bound():
    start = time.perf_counter()
    table_ok = (real_eigenvalue_bound(2.0) == 1.0
                and real_eigenvalue_bound(5.0) == 0.25
                and real_eigenvalue_bound(1.25) == 2.0)
    params = RegionParams(c0=2.0, c2=1.0, c_eps=1.0, eps=0.1, c_m=1.0, m=2)
    membership_ok = (
        in_counting_region(-3.0, params)
        and not in_counting_region(-3.0 + 0.1j, params)
        and not in_counting_region(-1.0, params)
        and in_spectral_strip(-2.0 + 1.0j, params)
        and in_axis_neighborhood(-3.0 + 0.05j, params)
        and not any(predicate(1.0 + 1.0j, params) for predicate in
                    (in_counting_region, in_spectral_strip,
                     in_axis_neighborhood)))
    elapsed = time.perf_counter() - start
    announce(9, table_ok and membership_ok and elapsed < 1.0,
             "bound table {2:1, 5:0.25, 1.25:2} exact, membership triples "
             "pass, %.2fs" % elapsed)
