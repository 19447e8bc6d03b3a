#include "bsg/scha.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <unordered_map>

#include "bsg/circuit.hpp"
#include "bsg/errors.hpp"
#include "bsg/quadrature.hpp"

namespace bsg::scha {

namespace {

/// Exact integral of 1/(a x^2 + b x + c) from x0 to infinity, valid when the
/// quadratic has no roots on [x0, inf).
double rational_tail(double a, double b, double c, double x0) {
    const double disc = 4.0 * a * c - b * b;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        return (2.0 / s) * (0.5 * M_PI - std::atan((2.0 * a * x0 + b) / s));
    }
    if (disc < 0.0) {
        const double s = std::sqrt(-disc);
        const double xp = (-b + s) / (2.0 * a);
        const double xm = (-b - s) / (2.0 * a);
        return std::log((x0 - xm) / (x0 - xp)) / s;
    }
    return 1.0 / (a * (x0 + b / (2.0 * a)));
}

double fold_half_turn(double theta) {
    theta = std::fmod(theta, M_PI);
    if (theta < 0.0) theta += M_PI;
    return theta;
}

} // namespace

double phi2_ohmic(double alpha_env, double zj_over_z, double rel_tol) {
    if (!(alpha_env > 0.0) || !(zj_over_z > 0.0)) {
        throw ValidationError("phi2_ohmic: arguments must be > 0");
    }
    const double beta = 1.0 / zj_over_z; // Z/Z_J
    const double a = beta * beta;
    const double b = 1.0 - 2.0 * beta * beta;
    const double c = beta * beta;
    const auto f = [&](double xi) { return 1.0 / (xi + beta * beta * (xi - 1.0) * (xi - 1.0)); };

    // Window wide enough that the quadratic tail formula applies cleanly; the
    // integrand's only structure is a possible resonance around xi = 1 of
    // width ~1/beta, so seed panels there.
    const double cut = std::max(100.0, 100.0 / (beta * beta));
    std::vector<double> brk{0.0};
    if (beta > 10.0) {
        for (double d : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
            const double p = 1.0 + d / beta;
            if (p > 0.0 && p < cut) brk.push_back(p);
        }
    }
    for (double x = 1.0; x < cut; x *= 10.0) brk.push_back(x);
    brk.push_back(cut);
    std::sort(brk.begin(), brk.end());

    const auto res = quadrature::integrate_segmented(f, brk, 0.0, rel_tol, 20000);
    const double tail = rational_tail(a, b, c, cut);
    const double value = alpha_env * (res.value + tail);
    const double err = alpha_env * res.error;
    if (err > 10.0 * rel_tol * std::max(value, 1e-12) + 1e-14) {
        throw AccuracyError("phi2_ohmic: quadrature did not converge", err / std::max(value, 1e-300));
    }
    return value;
}

FluctuationResult phase_fluctuations_env(const std::function<complexd(double)>& env,
                                         const SquidParams& squid, double lj_star,
                                         double omega_peak_hint,
                                         const FluctuationOptions& opts) {
    if (!(lj_star > 0.0)) throw ValidationError("phase_fluctuations: lj_star must be > 0");
    const Constants constants{};
    const double rq = constants.resistance_quantum();

    const auto integrand = [&](double omega) {
        complexd y{0.0, -omega * squid.capacitance};
        if (std::isfinite(lj_star)) y += complexd{0.0, 1.0} / (omega * lj_star);
        const complexd ze = env(omega);
        const complexd z0 = 1.0 / (y + 1.0 / ze);
        return 2.0 * z0.real() / (omega * rq);
    };

    const double omega_cut = opts.omega_cut_factor * omega_peak_hint;
    std::vector<double> brk{0.0};
    if (std::isfinite(lj_star) && squid.capacitance > 0.0) {
        const double wj = 1.0 / std::sqrt(lj_star * squid.capacitance);
        for (double s : {0.3, 0.7, 0.9, 1.0, 1.1, 1.5, 3.0}) {
            const double p = s * wj;
            if (p > 0.0 && p < omega_cut) brk.push_back(p);
        }
    }
    for (double s = 0.05; s < opts.omega_cut_factor; s += 0.05) brk.push_back(s * omega_peak_hint);
    brk.push_back(omega_cut);
    std::sort(brk.begin(), brk.end());

    const auto band = quadrature::integrate_segmented(integrand, brk, 1e-12, opts.rel_tol, 50000);

    // Smooth tail in u = 1/w, then a 1/w^2 estimate for the remainder.
    const double omega_top = opts.tail_omega_factor * omega_peak_hint;
    const auto tail_f = [&](double u) { return integrand(1.0 / u) / (u * u); };
    const auto tail = quadrature::integrate(tail_f, 1.0 / omega_top, 1.0 / omega_cut,
                                            1e-14, opts.rel_tol, 4000);
    const double remainder = std::abs(integrand(omega_top)) * omega_top;

    FluctuationResult out;
    out.phi_sq = band.value + tail.value + remainder;
    out.quadrature_error = band.error + tail.error + remainder;
    if (out.quadrature_error > 1e-4 * std::max(out.phi_sq, 1.0)) {
        throw AccuracyError("phase_fluctuations: peak refinement exhausted",
                            out.quadrature_error);
    }
    return out;
}

namespace {

/// Shared device-seeded integration core: one panel edge per array resonance
/// of either family (poles of Z_a at k = m pi/(N+1), peaks of Re Z_env near
/// k = pi(l+1/2)/(N+1/2)) so the adaptive pass starts with every Fabry-Perot
/// peak bracketed.
FluctuationResult integrate_device_fluctuations(const std::function<complexd(double)>& env,
                                                const DeviceParams& device, double lj_star,
                                                const FluctuationOptions& opts) {
    const double wp = device.array.plasma_omega();
    const std::size_t n = device.array.n_junctions;

    const auto integrand = [&](double omega) {
        complexd y{0.0, -omega * device.squid.capacitance};
        if (std::isfinite(lj_star)) y += complexd{0.0, 1.0} / (omega * lj_star);
        const complexd z0 = 1.0 / (y + 1.0 / env(omega));
        return 2.0 * z0.real() / (omega * device.constants.resistance_quantum());
    };

    std::vector<double> brk{0.0};
    brk.reserve(2 * n + 16);
    const double p_pole = static_cast<double>(n) + 1.0;
    const double p_zero = static_cast<double>(n) + 0.5;
    for (std::size_t m = 1; m <= n; ++m) {
        brk.push_back(circuit::dispersion_omega(device.array, static_cast<double>(m) * M_PI / p_pole));
        const double kz = (static_cast<double>(m) - 0.5) * M_PI / p_zero;
        if (kz < M_PI) brk.push_back(circuit::dispersion_omega(device.array, kz));
    }
    if (std::isfinite(lj_star) && device.squid.capacitance > 0.0) {
        const double wj = 1.0 / std::sqrt(lj_star * device.squid.capacitance);
        for (double s : {0.5, 0.9, 1.0, 1.1, 2.0}) {
            if (s * wj < opts.omega_cut_factor * wp) brk.push_back(s * wj);
        }
    }
    brk.push_back(opts.omega_cut_factor * wp);
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

    const auto band = quadrature::integrate_segmented(
        integrand, brk, 1e-12, opts.rel_tol, static_cast<int>(brk.size()) + 60000);

    const double omega_cut = opts.omega_cut_factor * wp;
    const double omega_top = opts.tail_omega_factor * wp;
    const auto tail_f = [&](double u) { return integrand(1.0 / u) / (u * u); };
    const auto tail = quadrature::integrate(tail_f, 1.0 / omega_top, 1.0 / omega_cut,
                                            1e-14, opts.rel_tol, 4000);
    const double remainder = std::abs(integrand(omega_top)) * omega_top;

    FluctuationResult out;
    out.phi_sq = band.value + tail.value + remainder;
    out.quadrature_error = band.error + tail.error + remainder;
    if (out.quadrature_error > 1e-4 * std::max(out.phi_sq, 1.0)) {
        throw AccuracyError("phase_fluctuations: peak refinement exhausted",
                            out.quadrature_error);
    }
    return out;
}

} // namespace

FluctuationResult phase_fluctuations(const DeviceParams& device, double lj_star,
                                     const FluctuationOptions& opts) {
    device.validate();
    const auto env = [&](double omega) -> complexd {
        try {
            return circuit::z_env(device, omega, opts.series_resistance);
        } catch (const PoleError&) {
            return circuit::z_env(device, omega * (1.0 + 1e-9), opts.series_resistance);
        }
    };
    return integrate_device_fluctuations(env, device, lj_star, opts);
}

namespace {

template <typename PhiSq>
SchaSolution fixed_point(double ej, double cj, const Constants& constants, double tol,
                         int max_iter, double mixing, PhiSq&& phi_sq_of) {
    if (!(tol > 0.0) || tol > 1e-2) throw ValidationError("scha: tol must be in (0, 1e-2]");
    const double phi0_sq = constants.reduced_flux_quantum_sq();

    SchaSolution sol;
    double e_star = ej;
    double phi_sq = 0.0;
    double eta = mixing;
    double prev_delta = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        phi_sq = phi_sq_of(e_star);
        const double target = ej * std::exp(-0.5 * phi_sq);
        const double residual = std::abs(e_star - target) / e_star;
        if (residual < tol) {
            sol.converged = true;
            break;
        }
        const double delta = target - e_star;
        if (delta * prev_delta < 0.0) eta = std::max(0.05, 0.5 * eta);
        prev_delta = delta;
        e_star = (1.0 - eta) * e_star + eta * target;
        if (!(e_star > 0.0) || !std::isfinite(e_star)) {
            sol.converged = false;
            break;
        }
    }
    sol.iterations = it;
    sol.ej_star = e_star;
    sol.phi_sq = phi_sq;
    sol.lj_star = phi0_sq / e_star;
    sol.omega_j_star = 1.0 / std::sqrt(cj * sol.lj_star);
    sol.zj_star = std::sqrt(sol.lj_star / cj);
    return sol;
}

} // namespace

SchaSolution scha_solve(const DeviceParams& device, double flux_frac, double tol,
                        int max_iter, const SolveOptions& opts) {
    device.validate();
    const double ej = circuit::ej_of_flux(device.squid, flux_frac);
    const double phi0_sq = device.constants.reduced_flux_quantum_sq();

    // Z_env does not depend on the trial E_J*, so cache it across iterations;
    // the adaptive quadrature revisits mostly the same nodes.
    struct EnvCache {
        std::unordered_map<std::uint64_t, complexd> map;
    };
    auto caches = std::make_shared<std::unordered_map<std::uint64_t, EnvCache>>();

    auto phi_at_loss = [&, caches](double e_star, double r) {
        EnvCache& cache = (*caches)[std::bit_cast<std::uint64_t>(r)];
        FluctuationOptions fo = opts.fluctuation;
        fo.series_resistance = r;
        const auto env = [&cache, &device, r](double omega) -> complexd {
            const auto key = std::bit_cast<std::uint64_t>(omega);
            if (auto it = cache.map.find(key); it != cache.map.end()) return it->second;
            complexd z;
            try {
                z = circuit::z_env(device, omega, r);
            } catch (const PoleError&) {
                z = circuit::z_env(device, omega * (1.0 + 1e-9), r);
            }
            cache.map.emplace(key, z);
            return z;
        };
        return integrate_device_fluctuations(env, device, phi0_sq / e_star, fo).phi_sq;
    };

    auto phi_sq_of = [&](double e_star) {
        if (!opts.extrapolate_loss) {
            return phi_at_loss(e_star, opts.fluctuation.series_resistance);
        }
        const double r = opts.loss_floor * device.array.char_impedance();
        const double p1 = phi_at_loss(e_star, r);
        const double p2 = phi_at_loss(e_star, 0.5 * r);
        return 2.0 * p2 - p1;
    };
    return fixed_point(ej, device.squid.capacitance, device.constants, tol, max_iter,
                       opts.mixing, phi_sq_of);
}

SchaSolution scha_solve_ohmic(double alpha, double ej, double ec, const Constants& constants,
                              double tol, int max_iter, double mixing) {
    if (!(alpha > 0.0) || alpha >= 1.0) throw ValidationError("scha_solve_ohmic: alpha in (0,1)");
    const double rq = constants.resistance_quantum();
    const double two_e = 2.0 * constants.electron_charge;
    const double cj = two_e * two_e / ec;
    return fixed_point(ej, cj, constants, tol, max_iter, mixing, [&](double e_star) {
        const double zj = (rq / (2.0 * M_PI)) * std::sqrt(ec / e_star);
        return phi2_ohmic(alpha, zj / (alpha * rq));
    });
}

double scaling_law(double ej, double ec, double alpha) {
    if (!(alpha > 0.0) || alpha >= 1.0) {
        throw ValidationError("scaling_law: alpha must be in (0, 1)");
    }
    const double g = 2.0 * M_PI * alpha;
    const double bracket = g * g * ej / (2.0 * ec);
    return ej * std::min(1.0, std::pow(bracket, alpha / (1.0 - alpha)));
}

double phase_shift_theta(const DeviceParams& device, double lj_star, double omega) {
    const double wp = device.array.plasma_omega();
    if (!(omega > 0.0) || omega >= wp) {
        throw ValidationError("phase_shift_theta: omega must be in (0, w_p)");
    }
    const auto& a = device.array;
    const double w2lc = omega * omega * a.inductance * a.junction_capacitance;
    const double q = 0.5 * omega * std::sqrt(a.ground_capacitance * a.inductance) /
                     std::sqrt(1.0 - (omega / wp) * (omega / wp));
    double bracket;
    if (std::isfinite(lj_star)) {
        const double det = 1.0 - omega * omega * lj_star * device.squid.capacitance;
        bracket = 1.0 - (2.0 * lj_star / a.inductance) * (1.0 - w2lc) / det;
    } else {
        bracket = 1.0 + 2.0 * (1.0 - w2lc) /
                            (omega * omega * a.inductance * device.squid.capacitance);
    }
    const double theta = 0.5 * M_PI - std::atan(q * bracket);
    return theta >= M_PI ? theta - M_PI : theta;
}

double relative_phase_shift(const DeviceParams& device, double flux_frac,
                            const std::vector<double>& mode_freqs_at_half, double omega,
                            double lj_star_at_flux, const PhaseShiftOptions& opts) {
    (void)flux_frac;
    const double lj_ref = opts.d_corrected_reference
                              ? opts.reference_lj
                              : std::numeric_limits<double>::infinity();
    // The mode at this flux sits at or below its half-flux partner, so the
    // matching reference mode is the first one at or above omega.
    double omega_ref = omega;
    for (double w : mode_freqs_at_half) {
        if (w >= omega * (1.0 - 1e-9)) {
            omega_ref = w;
            break;
        }
    }
    const double theta_flux = phase_shift_theta(device, lj_star_at_flux, omega);
    const double theta_ref = phase_shift_theta(device, lj_ref, omega_ref);
    return fold_half_turn(theta_flux - theta_ref);
}

} // namespace bsg::scha
