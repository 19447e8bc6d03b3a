#include "bsg/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bsg/circuit.hpp"
#include "bsg/errors.hpp"
#include "bsg/lsq.hpp"
#include "bsg/selfenergy.hpp"

namespace bsg::spectroscopy {

complexd SigmaWeakLink::sample(double omega) const {
    const double aw = std::abs(omega);
    const double pos = aw / grid.spacing();
    const std::size_t j0 = grid.zero_index();
    const std::size_t lo = std::min(j0 + static_cast<std::size_t>(pos), grid.n_points - 2);
    const double frac = pos - std::floor(pos);
    complexd v = (1.0 - frac) * sigma[lo] + frac * sigma[lo + 1];
    return v + complexd{0.0, dissipative_zero};
}

Trace synth_trace(const DeviceParams& device, const WeakLinkModel& model, double flux_frac,
                  double f_lo, double f_hi, std::size_t n_points, const SynthOptions& opts) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || n_points < 2) {
        throw ValidationError("synth_trace: bad frequency window");
    }
    Trace t;
    t.flux = flux_frac;
    t.seed = opts.seed;
    t.noise_level = opts.noise_level;
    t.freq_hz.resize(n_points);
    t.s21.resize(n_points);

    const double r = opts.loss_floor * device.array.char_impedance();
    const bool linear = std::holds_alternative<LinearWeakLink>(model);
    t.model_id = linear ? "linear-scha" : "self-energy";

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t i = 0; i < n_points; ++i) {
        const double f = f_lo + (f_hi - f_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_points - 1);
        t.freq_hz[i] = f;
        double w = 2.0 * M_PI * f;
        complexd zw;
        for (int tries = 0;; ++tries) {
            try {
                if (linear) {
                    zw = circuit::z_weak_linear(device.squid,
                                                std::get<LinearWeakLink>(model).lj_star, w);
                } else {
                    const auto& sm = std::get<SigmaWeakLink>(model);
                    zw = selfenergy::z_w_from_sigma(device.squid, device.constants,
                                                    sm.sample(w), w);
                }
                t.s21[i] = circuit::s21(device, zw, w, r);
                break;
            } catch (const PoleError&) {
                if (tries > 3) throw;
                w *= 1.0 + 1e-9;
            }
        }
        if (opts.noise_level > 0.0) {
            t.s21[i] += opts.noise_level * complexd{gauss(rng), gauss(rng)};
        }
    }
    return t;
}

std::vector<Window> find_resonances(const Trace& trace, const FindOptions& opts) {
    const std::size_t n = trace.freq_hz.size();
    if (n < 8) return {};
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(trace.s21[i]);
    std::vector<double> sorted = mag;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double baseline = sorted[n / 2];
    const double threshold = baseline - opts.prominence;

    // Contiguous runs below the threshold, one dip per run.
    struct Dip {
        std::size_t i_min;
        double depth;
        double width;
    };
    std::vector<Dip> dips;
    std::size_t i = 0;
    while (i < n) {
        if (mag[i] >= threshold) {
            ++i;
            continue;
        }
        std::size_t start = i;
        std::size_t i_min = i;
        while (i < n && mag[i] < threshold) {
            if (mag[i] < mag[i_min]) i_min = i;
            ++i;
        }
        const std::size_t end = i; // one past the run
        // Half-depth width around the minimum.
        const double half = 0.5 * (mag[i_min] + baseline);
        std::size_t lo = i_min, hi = i_min;
        while (lo > 0 && mag[lo] < half) --lo;
        while (hi + 1 < n && mag[hi] < half) ++hi;
        dips.push_back({i_min, baseline - mag[i_min],
                        std::max(trace.freq_hz[hi] - trace.freq_hz[lo],
                                 trace.freq_hz[1] - trace.freq_hz[0])});
        (void)start;
        (void)end;
    }
    if (dips.empty()) return {};

    // Observed spacing caps the window width.
    double spacing = trace.freq_hz.back() - trace.freq_hz.front();
    if (dips.size() >= 2) {
        std::vector<double> gaps;
        for (std::size_t k = 1; k < dips.size(); ++k) {
            gaps.push_back(trace.freq_hz[dips[k].i_min] - trace.freq_hz[dips[k - 1].i_min]);
        }
        std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
        spacing = gaps[gaps.size() / 2];
    }

    std::vector<Window> out;
    for (const auto& d : dips) {
        Window w;
        w.f_min = trace.freq_hz[d.i_min];
        w.depth = d.depth;
        w.width_est = d.width;
        const double half_window =
            std::min(opts.window_linewidths * d.width, opts.window_fsr_cap * spacing);
        w.f_lo = std::max(trace.freq_hz.front(), w.f_min - half_window);
        w.f_hi = std::min(trace.freq_hz.back(), w.f_min + half_window);
        out.push_back(w);
    }
    return out;
}

complexd lineshape_s21(double f, double f0, double q_i, double q_e, double x_asym,
                       double z_tl) {
    const double delta = (f - f0) / f0;
    const complexd asym = 1.0 - complexd{0.0, x_asym / z_tl};
    const complexd num = 1.0 - complexd{0.0, 2.0 * q_i * delta};
    return asym * num / (1.0 + (q_i / q_e) * asym - complexd{0.0, 2.0 * q_i * delta});
}

ResonanceFit fit_lineshape(const Trace& trace, const Window& window,
                           const std::optional<ResonanceFit>& initial,
                           const FitOptions& opts) {
    // Collect window samples.
    std::vector<double> fs;
    std::vector<complexd> data;
    for (std::size_t i = 0; i < trace.freq_hz.size(); ++i) {
        if (trace.freq_hz[i] >= window.f_lo && trace.freq_hz[i] <= window.f_hi) {
            fs.push_back(trace.freq_hz[i]);
            data.push_back(trace.s21[i]);
        }
    }
    ResonanceFit out;
    if (fs.size() < 8) return out;

    // Initial guesses from dip depth and width.
    double f0 = window.f_min;
    double qi0, qe0, x0 = 0.0;
    if (initial) {
        f0 = initial->f0;
        qi0 = initial->q_internal;
        qe0 = initial->q_external;
        x0 = initial->asymmetry;
    } else {
        const double dip = std::max(1e-3, 1.0 - window.depth); // |S21| at the dip
        const double ratio = std::max(1e-3, (1.0 - dip) / dip); // Qi/Qe
        const double q_total = f0 / std::max(window.width_est, f0 * 1e-9);
        qi0 = q_total * (1.0 + ratio);
        qe0 = qi0 / ratio;
    }

    const auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        const double f_c = p[0];
        const double qi = std::exp(p[1]);
        const double qe = std::exp(p[2]);
        const double x = p[3];
        for (std::size_t k = 0; k < fs.size(); ++k) {
            const complexd model = lineshape_s21(fs[k], f_c, qi, qe, x, opts.z_tl);
            r[2 * k] = model.real() - data[k].real();
            r[2 * k + 1] = model.imag() - data[k].imag();
        }
    };

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    lsq::Result best;
    best.rss = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < std::max(1, opts.restarts); ++attempt) {
        std::vector<double> p0{f0, std::log(qi0), std::log(qe0), x0};
        if (attempt > 0) {
            p0[0] += 0.3 * window.width_est * jitter(rng);
            p0[1] += 0.5 * jitter(rng);
            p0[2] += 0.5 * jitter(rng);
        }
        auto res = lsq::fit(residuals, 2 * fs.size(), p0);
        if (res.rss < best.rss) best = std::move(res);
    }

    out.f0 = best.params[0];
    out.q_internal = std::exp(best.params[1]);
    out.q_external = std::exp(best.params[2]);
    out.asymmetry = best.params[3];
    out.iterations = best.iterations;
    out.residual_rms = std::sqrt(best.rss / (2.0 * fs.size()));
    out.converged = best.converged && out.residual_rms < opts.residual_threshold &&
                    out.f0 > window.f_lo && out.f0 < window.f_hi;

    // Covariance back to (f0, Qi, Qe, X) from the log-parameter internals.
    out.covariance.assign(16, 0.0);
    const double scale[4] = {1.0, out.q_internal, out.q_external, 1.0};
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            out.covariance[a * 4 + b] = best.covariance[a * 4 + b] * scale[a] * scale[b];
        }
    }
    return out;
}

ModeTable fit_trace(const Trace& trace, const FindOptions& fopts, const FitOptions& opts) {
    ModeTable table;
    for (const auto& w : find_resonances(trace, fopts)) {
        const auto fit = fit_lineshape(trace, w, std::nullopt, opts);
        ModeRow row;
        row.flux = trace.flux;
        row.f = fit.f0;
        row.gamma_int = fit.gamma_int();
        row.q_internal = fit.q_internal;
        row.q_external = fit.q_external;
        row.asymmetry = fit.asymmetry;
        row.residual_rms = fit.residual_rms;
        row.fit_converged = fit.converged;
        row.flagged = !fit.converged;
        table.push_back(row);
    }
    std::sort(table.begin(), table.end(), [](auto& a, auto& b) { return a.f < b.f; });
    for (std::size_t i = 0; i < table.size(); ++i) table[i].index = static_cast<int>(i);
    return table;
}

ModeTable extract_phase_shift(const ModeTable& at_flux, const ModeTable& at_half) {
    ModeTable out = at_flux;
    for (auto& row : out) {
        // Matching reference: first half-flux mode at or above this one (the
        // Josephson boundary pulls modes down from their open-boundary
        // positions).
        std::size_t ref = at_half.size();
        for (std::size_t k = 0; k < at_half.size(); ++k) {
            if (at_half[k].f >= row.f - 1e-6 * row.f) {
                ref = k;
                break;
            }
        }
        if (ref >= at_half.size()) {
            row.flagged = true;
            continue;
        }
        // Local spacing from adjacent reference modes.
        double fsr;
        if (ref + 1 < at_half.size()) {
            fsr = at_half[ref + 1].f - at_half[ref].f;
        } else if (ref > 0) {
            fsr = at_half[ref].f - at_half[ref - 1].f;
        } else {
            row.flagged = true;
            continue;
        }
        const double shift = at_half[ref].f - row.f;
        row.fsr = fsr;
        row.delta_theta = M_PI * shift / fsr;
        row.index = at_half[ref].index;
        if (shift > 0.5 * fsr) row.flagged = true;
    }
    return out;
}

ModeTable gamma_decomposition(const ModeTable& table, const losses::DielectricModel& model) {
    ModeTable out = table;
    for (auto& row : out) {
        row.gamma_diel = losses::gamma_diel(model, 2.0 * M_PI * row.f).gamma;
        row.gamma_j = row.gamma_int - row.gamma_diel;
        if (row.gamma_j < 0.0) row.flagged = true;
    }
    return out;
}

losses::DielectricModel calibrate_dielectric(const std::vector<double>& freq_hz,
                                             const std::vector<double>& gamma_int_hz,
                                             const ArrayParams& array) {
    if (freq_hz.size() != gamma_int_hz.size() || freq_hz.size() < 2) {
        throw ValidationError("calibrate_dielectric: need at least two reference modes");
    }
    // gamma = (w/2pi) (w sqrt(LC))^2 A w^b: linear regression of log gamma on
    // log w gives slope 3+b and the amplitude from the intercept.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    const double lc_vphi = std::sqrt(array.inductance * array.junction_capacitance);
    for (std::size_t i = 0; i < freq_hz.size(); ++i) {
        if (!(gamma_int_hz[i] > 0.0)) continue;
        const double x = std::log(2.0 * M_PI * freq_hz[i]);
        const double y = std::log(gamma_int_hz[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) throw ValidationError("calibrate_dielectric: no positive reference dampings");
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    const double b = slope - 3.0;
    const double amplitude = std::exp(intercept) * 2.0 * M_PI / (lc_vphi * lc_vphi);
    return losses::DielectricModel::from_array(array, amplitude, b);
}

DispersionFit fit_dispersion(const std::vector<int>& mode_index,
                             const std::vector<double>& freq_hz, double junction_capacitance,
                             std::size_t n_junctions) {
    if (mode_index.size() != freq_hz.size() || mode_index.size() < 3) {
        throw ValidationError("fit_dispersion: need at least three modes");
    }
    const double n_eff = static_cast<double>(n_junctions) + 0.5;

    // Linear-band initialization: f ~ k/(2 pi sqrt(L Cg)).
    const double k0 = M_PI * (mode_index[0] + 0.5) / n_eff;
    const double slope0 = 2.0 * M_PI * freq_hz[0] / k0; // 1/sqrt(L Cg)
    double l0 = 0.54e-9;
    double cg0 = 1.0 / (slope0 * slope0 * l0);

    const auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        ArrayParams a;
        a.n_junctions = n_junctions;
        a.inductance = std::exp(p[0]);
        a.junction_capacitance = junction_capacitance;
        a.ground_capacitance = std::exp(p[1]);
        for (std::size_t i = 0; i < freq_hz.size(); ++i) {
            const double k = M_PI * (mode_index[i] + 0.5) / n_eff;
            const double f_model = circuit::dispersion_omega(a, k) / (2.0 * M_PI);
            r[i] = (f_model - freq_hz[i]) / freq_hz[i];
        }
    };
    auto res = lsq::fit(residuals, freq_hz.size(), {std::log(l0), std::log(cg0)});

    DispersionFit out;
    out.inductance = std::exp(res.params[0]);
    out.ground_capacitance = std::exp(res.params[1]);
    out.converged = res.converged;
    ArrayParams a;
    a.n_junctions = n_junctions;
    a.inductance = out.inductance;
    a.junction_capacitance = junction_capacitance;
    a.ground_capacitance = out.ground_capacitance;
    out.omega_p = a.plasma_omega();
    out.z_c = a.char_impedance();
    out.rel_err_l = std::sqrt(std::max(res.covariance[0], 0.0));
    out.rel_err_cg = std::sqrt(std::max(res.covariance[3], 0.0));

    // Identifiability: purely linear-band data constrains only the product
    // L*Cg, leaving the individual log-parameters with huge variance.
    const double kmax = M_PI * (mode_index.back() + 0.5) / n_eff;
    const double band_frac = circuit::dispersion_omega(a, kmax) / a.plasma_omega();
    out.degenerate = out.rel_err_l > 0.5 || out.rel_err_cg > 0.5 || band_frac < 0.3;
    return out;
}

} // namespace bsg::spectroscopy
