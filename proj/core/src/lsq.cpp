#include "bsg/lsq.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "bsg/errors.hpp"

namespace bsg::lsq {

Result fit(const std::function<void(const std::vector<double>&, std::vector<double>&)>& residual_fn,
           std::size_t n_residuals, std::vector<double> initial, const Options& opts) {
    const std::size_t p = initial.size();
    const std::size_t m = n_residuals;
    if (m < p) throw ValidationError("lsq: fewer residuals than parameters");

    std::vector<double> r(m), r_trial(m), work(m);
    Eigen::MatrixXd jac(m, p);
    Eigen::VectorXd res(m);

    auto cost = [&](const std::vector<double>& rr) {
        double c = 0.0;
        for (double v : rr) c += v * v;
        return c;
    };

    residual_fn(initial, r);
    double rss = cost(r);
    double lambda = opts.lambda0;

    Result result;
    result.params = initial;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        // Forward-difference Jacobian.
        for (std::size_t k = 0; k < p; ++k) {
            const double h = 1e-7 * std::max(std::abs(initial[k]), 1e-10);
            std::vector<double> xs = initial;
            xs[k] += h;
            residual_fn(xs, work);
            for (std::size_t i = 0; i < m; ++i) jac(i, k) = (work[i] - r[i]) / h;
        }
        for (std::size_t i = 0; i < m; ++i) res(i) = r[i];

        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;

        bool stepped = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::MatrixXd damped = jtj;
            for (std::size_t k = 0; k < p; ++k) damped(k, k) += lambda * jtj(k, k) + 1e-300;
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            std::vector<double> trial = initial;
            for (std::size_t k = 0; k < p; ++k) trial[k] += step(k);
            residual_fn(trial, r_trial);
            const double rss_trial = cost(r_trial);
            if (rss_trial < rss) {
                double rel_step = 0.0;
                for (std::size_t k = 0; k < p; ++k) {
                    rel_step = std::max(rel_step, std::abs(step(k)) /
                                                      std::max(std::abs(trial[k]), 1e-10));
                }
                const double decrease = (rss - rss_trial) / std::max(rss, 1e-300);
                initial = std::move(trial);
                r = r_trial;
                rss = rss_trial;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel_step < opts.xtol || decrease < opts.ftol) {
                    result.converged = true;
                }
                break;
            }
            lambda *= 8.0;
        }
        if (!stepped) {
            result.converged = true; // at a minimum to damping resolution
            break;
        }
        if (result.converged) break;
    }

    result.params = initial;
    result.rss = rss;
    result.iterations = it + 1;

    // Covariance from the Jacobian at the solution.
    for (std::size_t k = 0; k < p; ++k) {
        const double h = 1e-7 * std::max(std::abs(initial[k]), 1e-10);
        std::vector<double> xs = initial;
        xs[k] += h;
        residual_fn(xs, work);
        for (std::size_t i = 0; i < m; ++i) jac(i, k) = (work[i] - r[i]) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double sigma2 = m > p ? rss / static_cast<double>(m - p) : 0.0;
    Eigen::MatrixXd cov = jtj.ldlt().solve(Eigen::MatrixXd::Identity(p, p)) * sigma2;
    result.covariance.resize(p * p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < p; ++k) result.covariance[i * p + k] = cov(i, k);
    }
    return result;
}

} // namespace bsg::lsq
