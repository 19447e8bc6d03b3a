#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <random>

#include "bsg/circuit.hpp"
#include "bsg/errors.hpp"
#include "support/oracles.hpp"
#include "support/reference_device.hpp"

using namespace bsg;
using namespace bsg::testing;
using circuit::complexd;

namespace {
double rel_diff(complexd a, complexd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}

TEST_CASE("constants: R_Q and flux quantum") {
    Constants c;
    CHECK(c.resistance_quantum() == doctest::Approx(6.45e3).epsilon(0.01));
    CHECK(c.flux_quantum() == doctest::Approx(2.0678e-15).epsilon(1e-4));
}

TEST_CASE("ej_of_flux anchors and periodicity") {
    const auto dev = reference_device();
    const double h = dev.constants.planck();
    CHECK(circuit::ej_of_flux(dev.squid, 0.0) / h == doctest::Approx(27.5e9));
    CHECK(circuit::ej_of_flux(dev.squid, 0.5) / h == doctest::Approx(0.55e9));
    // Independent long-double evaluation at an arbitrary flux point.
    {
        const long double f = 0.35L;
        const long double c = cosl(M_PIl * f), s = sinl(M_PIl * f);
        const long double expect = 27.5e9L * sqrtl(c * c + 0.0004L * s * s);
        CHECK(circuit::ej_of_flux(dev.squid, 0.35) / h ==
              doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
    }
    for (double f : {0.13, 0.77, 1.42}) {
        CHECK(circuit::ej_of_flux(dev.squid, f) ==
              doctest::Approx(circuit::ej_of_flux(dev.squid, f + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("dispersion: limits, anchors, round trips") {
    const auto dev = reference_device();
    const auto& a = dev.array;

    // k -> 0: w/k -> 1/sqrt(L C_g)
    const double k_small = 1e-6;
    const double v = 1.0 / std::sqrt(a.inductance * a.ground_capacitance);
    CHECK(circuit::dispersion_omega(a, k_small) / k_small == doctest::Approx(v).epsilon(1e-6));

    // Band edge: w_p/2pi = 18 GHz within 2%
    CHECK(circuit::dispersion_omega(a, M_PI) / (2e9 * M_PI) ==
          doctest::Approx(18.0).epsilon(0.02));
    CHECK(circuit::dispersion_omega(a, M_PI) == doctest::Approx(a.plasma_omega()));

    // Long-double formula evaluation at k = pi/2.
    {
        const long double s = sinl(M_PIl / 4.0L);
        const long double d = 0.54e-9L * (144e-15L * s * s + 0.0375e-15L);
        const long double expect = s / sqrtl(d);
        CHECK(circuit::dispersion_omega(a, M_PI / 2) ==
              doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
    }

    // Monotone in k.
    double prev = 0.0;
    for (double k = 0.05; k <= M_PI; k += 0.05) {
        const double w = circuit::dispersion_omega(a, k);
        CHECK(w > prev);
        prev = w;
    }

    // Inverse round trips.
    for (double k0 : {0.1, 1.0, 3.0}) {
        const double w = circuit::dispersion_omega(a, k0);
        const complexd k = circuit::dispersion_k(a, w);
        CHECK(std::abs(k.imag()) < 1e-9);
        CHECK(k.real() == doctest::Approx(k0).epsilon(1e-9));
    }

    // Low-frequency limit of the inverse: k -> w sqrt(L C_g).
    {
        const double w = 1e7;
        const complexd k = circuit::dispersion_k(a, w);
        CHECK(k.real() == doctest::Approx(w * std::sqrt(a.inductance * a.ground_capacitance))
                              .epsilon(1e-6));
    }

    // Above the band: purely evanescent, and the dispersion relation still
    // holds under substitution of the complex k (branch-free squared form).
    {
        const double w = 1.2 * a.plasma_omega();
        const complexd k = circuit::dispersion_k(a, w);
        CHECK(k.imag() > 0.0);
        CHECK(std::abs(k.real()) < 1e-12);
        const complexd s = std::sin(0.5 * k);
        const complexd lhs = w * w * a.inductance *
                             (a.junction_capacitance * s * s + 0.25 * a.ground_capacitance);
        CHECK(std::abs(lhs - s * s) < 1e-10 * std::abs(s * s));
    }

    CHECK_THROWS_AS(circuit::dispersion_omega(a, 0.0), ValidationError);
    CHECK_THROWS_AS(circuit::dispersion_omega(a, 3.2), ValidationError);
    CHECK_THROWS_AS(circuit::dispersion_k(a, a.plasma_omega()), PoleError);
}

TEST_CASE("impedance matrix agrees with nodal analysis for small arrays") {
    auto dev = reference_device();
    std::mt19937 rng(20260810);
    std::uniform_real_distribution<double> logf(std::log(0.1e9), std::log(30e9));

    for (std::size_t n : {1u, 2u, 3u, 5u}) {
        ArrayParams a = dev.array;
        a.n_junctions = n;
        int accepted = 0;
        while (accepted < 50) {
            const double omega = 2.0 * M_PI * std::exp(logf(rng));
            circuit::TwoPortImpedance zm;
            try {
                zm = circuit::impedance_matrix(a, omega);
            } catch (const PoleError&) {
                continue; // redraw; lossless poles are measure zero
            }
            // Skip near-pole draws where both paths lose digits.
            if (std::abs(zm.z_a) > 1e9) continue;
            const auto oracle = nodal_impedance_matrix(a, omega);
            CHECK(rel_diff(zm.z_a, oracle.z_a) < 1e-8);
            CHECK(rel_diff(zm.z_ab, oracle.z_ab) < 1e-8);
            ++accepted;
        }
    }
}

TEST_CASE("impedance matrix: lossy case, reciprocity and passivity") {
    auto dev = reference_device();
    ArrayParams a = dev.array;
    a.n_junctions = 5;
    const double r = 1e-3 * a.char_impedance();
    for (double f = 0.5e9; f < 25e9; f += 0.7e9) {
        const double w = 2.0 * M_PI * f;
        const auto zm = circuit::impedance_matrix(a, w, r);
        const auto oracle = nodal_impedance_matrix(a, w, r);
        CHECK(rel_diff(zm.z_a, oracle.z_a) < 1e-8);
        CHECK(rel_diff(zm.z_ab, oracle.z_ab) < 1e-8);
        CHECK(zm.z_a.real() >= 0.0);
    }
}

TEST_CASE("impedance matrix: DC limit and N=1 ladder") {
    const auto dev = reference_device();
    const auto& a = dev.array;
    const double w = 2.0 * M_PI * 1e3; // 1 kHz
    const auto zm = circuit::impedance_matrix(a, w);
    const double c_total = a.ground_capacitance * (a.n_junctions + 1.0);
    CHECK(std::abs(zm.z_a) * w * c_total == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(zm.z_a / zm.z_ab) == doctest::Approx(1.0).epsilon(1e-3));

    ArrayParams one = a;
    one.n_junctions = 1;
    const double w1 = 2.0 * M_PI * 3e9;
    const auto z1 = circuit::impedance_matrix(one, w1);
    const auto o1 = nodal_impedance_matrix(one, w1);
    CHECK(rel_diff(z1.z_a, o1.z_a) < 1e-10);
    CHECK(rel_diff(z1.z_ab, o1.z_ab) < 1e-10);
}

TEST_CASE("impedance matrix: huge evanescent arrays stay finite") {
    const auto dev = reference_device();
    const double w = 1.5 * dev.array.plasma_omega();
    const auto zm = circuit::impedance_matrix(dev.array, w);
    CHECK(std::isfinite(zm.z_a.real()));
    CHECK(std::isfinite(zm.z_a.imag()));
    CHECK(std::abs(zm.z_ab) < 1e-30); // opposite end is exponentially decoupled
}

TEST_CASE("pole error carries the nearest resonance") {
    auto a = reference_device().array;
    a.n_junctions = 3;
    const double k_res = M_PI / 4.0; // m=1, N+1=4
    const double w_res = circuit::dispersion_omega(a, k_res);
    try {
        circuit::impedance_matrix(a, w_res);
        FAIL("expected PoleError");
    } catch (const PoleError& e) {
        CHECK(e.nearest_resonance == doctest::Approx(w_res).epsilon(1e-9));
    }
}

TEST_CASE("z_infinity: anchors and large-N limit") {
    const auto dev = reference_device();
    const auto& a = dev.array;

    // About 1.9 kOhm at 1 GHz (within 5%).
    CHECK(std::abs(circuit::z_infinity(a, ghz(1.0))) == doctest::Approx(1.9e3).epsilon(0.05));
    // Exact DC limit.
    CHECK(circuit::z_infinity(a, 1e-2).real() == doctest::Approx(a.char_impedance()).epsilon(1e-8));
    // alpha = Z_c/R_Q = 0.30 +- 0.02.
    CHECK(a.char_impedance() / dev.constants.resistance_quantum() ==
          doctest::Approx(0.30).epsilon(0.067));

    // Large-N limit: the island port folds the ground capacitor across the
    // series-first semi-infinite impedance of z_infinity.
    ArrayParams big = a;
    big.n_junctions = 100000;
    const double w = ghz(10.0);
    const double r = 1e-4 * a.char_impedance();
    const auto zm = circuit::impedance_matrix(big, w, r);
    const complexd z_series = circuit::z_infinity(a, w);
    const complexd island =
        1.0 / (complexd{0.0, -w * a.ground_capacitance} + 1.0 / z_series);
    CHECK(rel_diff(zm.z_a, island) < 0.01);

    CHECK_THROWS_AS(
        circuit::z_infinity(a, 1.0 / std::sqrt(a.inductance * a.junction_capacitance)),
        PoleError);
}

TEST_CASE("z_env: limiting feed lines and brute-force check") {
    auto dev = reference_device();
    dev.array.n_junctions = 7;
    const double w = 2.0 * M_PI * 2.3e9;
    const auto zm = circuit::impedance_matrix(dev.array, w);

    auto open_feed = dev;
    open_feed.feedline_impedance = 1e18;
    CHECK(rel_diff(circuit::z_env(open_feed, w), zm.z_a) < 1e-9);

    auto short_feed = dev;
    short_feed.feedline_impedance = 1e-15;
    CHECK(rel_diff(circuit::z_env(short_feed, w), zm.z_a - zm.z_ab * zm.z_ab / zm.z_a) < 1e-9);

    CHECK(rel_diff(circuit::z_env(dev, w), nodal_z_env(dev, w)) < 1e-8);
}

TEST_CASE("z_env of the reference device: Fabry-Perot peak spacing") {
    const auto dev = reference_device();
    // Count peaks of Re Z_env over 2-9 GHz; expect the linear-band FSR.
    const double f_lo = 2e9, f_hi = 9e9;
    const int n = 28000;
    int peaks = 0;
    double prev2 = 0.0, prev1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = f_lo + (f_hi - f_lo) * i / (n - 1.0);
        const double re = circuit::z_env(dev, 2.0 * M_PI * f).real();
        if (i >= 2 && prev1 > prev2 && prev1 > re && prev1 > 1e3) ++peaks;
        prev2 = prev1;
        prev1 = re;
    }
    const double spacing_ghz = 7.0 / peaks;
    CHECK(spacing_ghz == doctest::Approx(0.4).epsilon(0.15));
}

TEST_CASE("z_weak_linear: limits, pole, convention") {
    const auto dev = reference_device();
    const auto& sq = dev.squid;
    const double w = ghz(4.0);

    // Open inductor: pure capacitor i/(w C_J).
    const complexd zc = circuit::z_weak_linear(sq, std::numeric_limits<double>::infinity(), w);
    CHECK(zc.real() == doctest::Approx(0.0));
    CHECK(zc.imag() == doctest::Approx(1.0 / (w * sq.capacitance)).epsilon(1e-12));

    // No capacitor: pure inductor branch, -i w L.
    SquidParams bare = sq;
    bare.capacitance = 0.0;
    const double lj = 1e-8;
    const complexd zl = circuit::z_weak_linear(bare, lj, w);
    CHECK(zl.imag() == doctest::Approx(-w * lj).epsilon(1e-12));

    // Long-double oracle at the quoted working point: C_J = 14.5 fF,
    // L_J* from E_J* /h = 10 GHz, 4 GHz drive.
    {
        const Constants c;
        const double lj_star = c.reduced_flux_quantum_sq() / (10e9 * c.planck());
        const complexd z = circuit::z_weak_linear(sq, lj_star, w);
        const long double y = -static_cast<long double>(w) * 14.5e-15L +
                              1.0L / (static_cast<long double>(w) * static_cast<long double>(lj_star));
        const long double expect = 1.0L / y; // z = 1/(i y) = -i/y
        CHECK(z.imag() == doctest::Approx(static_cast<double>(-expect)).epsilon(1e-10));
        CHECK(z.real() == 0.0);
    }

    const double w_res = 1.0 / std::sqrt(1e-8 * sq.capacitance);
    CHECK_THROWS_AS(circuit::z_weak_linear(sq, 1e-8, w_res), PoleError);
    CHECK(circuit::to_engineering(complexd{1.0, 2.0}) == complexd{1.0, -2.0});
}

TEST_CASE("z_aw limits") {
    auto dev = reference_device();
    dev.array.n_junctions = 9;
    const double w = 2.0 * M_PI * 2.1e9;
    const auto zm = circuit::impedance_matrix(dev.array, w);
    const complexd inf{std::numeric_limits<double>::infinity(), 0.0};
    CHECK(rel_diff(circuit::z_aw(dev, inf, w), zm.z_a) < 1e-12);
    CHECK(rel_diff(circuit::z_aw(dev, complexd{0.0, 0.0}, w),
                   zm.z_a - zm.z_ab * zm.z_ab / zm.z_a) < 1e-12);
}

TEST_CASE("s21: decoupled and shorted boundary, passivity bound") {
    auto dev = reference_device();
    const double w = 2.0 * M_PI * 3.05e9;

    // Z_a+w -> infinity: park just off an array pole with an open weak link,
    // where Z_a (and hence Z_a+w) grows without bound.
    {
        ArrayParams small = dev.array;
        small.n_junctions = 9;
        DeviceParams d2 = dev;
        d2.array = small;
        const double w_pole = circuit::dispersion_omega(small, M_PI / 10.0);
        const complexd inf{std::numeric_limits<double>::infinity(), 0.0};
        const complexd s_open = circuit::s21(d2, inf, w_pole * (1.0 + 1e-9));
        CHECK(std::abs(s_open - 1.0) < 1e-5);
    }

    // A shorted node N: drive Z_a+w to zero by choosing z_w = -Z_a + Z_ab^2/Z_a.
    const auto zm = circuit::impedance_matrix(dev.array, w);
    const complexd z_w_short = zm.z_ab * zm.z_ab / zm.z_a - zm.z_a;
    CHECK(std::abs(circuit::s21(dev, z_w_short, w)) < 1e-9);

    // Passive linear weak link: |S21| <= 1 across the band (loss floor on).
    const Constants c;
    const double lj = c.reduced_flux_quantum_sq() / (5e9 * c.planck());
    const double r = 1e-4 * dev.array.char_impedance();
    for (double f = 2.0; f < 9.0; f += 0.03) {
        complexd s;
        try {
            s = circuit::s21(dev, circuit::z_weak_linear(dev.squid, lj, ghz(f)), ghz(f), r);
        } catch (const PoleError&) {
            continue;
        }
        CHECK(std::abs(s) <= 1.0 + 1e-9);
    }
}

TEST_CASE("fsr helpers") {
    const auto dev = reference_device();
    CHECK(circuit::fsr_linear(dev.array) == doctest::Approx(0.4133e9).epsilon(0.01));
    // fsr_at approaches the linear value at low frequency.
    CHECK(circuit::fsr_at(dev.array, ghz(0.5)) ==
          doctest::Approx(circuit::fsr_linear(dev.array)).epsilon(0.01));
    // Group velocity matches a finite difference.
    const double k = 0.7;
    const double h = 1e-6;
    const double fd = (circuit::dispersion_omega(dev.array, k + h) -
                       circuit::dispersion_omega(dev.array, k - h)) /
                      (2.0 * h);
    CHECK(circuit::dispersion_domega_dk(dev.array, k) == doctest::Approx(fd).epsilon(1e-7));
}
