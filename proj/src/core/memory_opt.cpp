#include "memory_opt.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace romforge {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGolden = 0.6180339887498949; // 1/phi
} // namespace

Eigen::MatrixXd projected_jacobian(const CoarseBasis& cb, double nu,
                                   const Eigen::VectorXd& a0) {
    if (a0.size() != cb.rank()) throw ValidationError("projected_jacobian: a0 size mismatch");
    if (!(nu > 0)) throw ValidationError("nu must be strictly positive");

    const Grid& grid = cb.grid;
    const std::int64_t n = grid.value_count();
    const int r = cb.rank();

    const Eigen::VectorXd u0 =
        Eigen::Map<const Eigen::VectorXd>(cb.mean.data(), n) + cb.modes * a0;
    PointJacobianField ju0(grid);
    fd::gradient(grid, u0.data(), ju0.data());

    Eigen::MatrixXd acted(n, r);
    std::vector<double> conv(static_cast<std::size_t>(n)), lap(static_cast<std::size_t>(n));
    const int d = grid.dims;
    for (int i = 0; i < r; ++i) {
        const double* phi = cb.modes.col(i).data();
        fd::convect(grid, u0.data(), phi, conv.data());
        fd::laplacian(grid, phi, lap.data());
        for (std::int64_t p = 0; p < grid.point_count(); ++p)
            for (int c = 0; c < d; ++c) {
                double grad_term = 0.0;
                for (int j = 0; j < d; ++j)
                    grad_term += ju0(p, c, j) * phi[p * d + j];
                acted(p * d + c, i) = -grad_term - conv[static_cast<std::size_t>(p * d + c)] +
                                      nu * lap[static_cast<std::size_t>(p * d + c)];
            }
    }
    return cb.modes.transpose() * acted;
}

double spectral_radius(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw ValidationError("spectral radius needs a square matrix");
    Eigen::EigenSolver<Eigen::MatrixXd> eig(a, /*computeEigenvectors=*/false);
    if (eig.info() != Eigen::Success) throw NumericError("eigenvalue solver failed");
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double tracking_objective_value(const Eigen::MatrixXd& rom, const Eigen::MatrixXd& reference) {
    if (rom.rows() != reference.rows() || rom.cols() != reference.cols())
        throw ValidationError("tracking objective: series shapes differ");
    double acc = 0.0;
    for (Eigen::Index m = 0; m < rom.cols(); ++m)
        acc += (rom.col(m) - reference.col(m)).squaredNorm();
    return acc;
}

std::vector<double> tiled_sample_times(const std::vector<double>& reference_times,
                                       const TrackingConfig& cfg) {
    if (reference_times.size() < 2)
        throw ValidationError("tracking needs at least 2 reference samples");
    if (cfg.n_periods < 1) throw ValidationError("n_periods must be >= 1");
    const double t0 = reference_times.front();
    const double span = reference_times.back() - t0;
    const double period =
        cfg.period > 0 ? cfg.period
                       : span * static_cast<double>(reference_times.size()) /
                             static_cast<double>(reference_times.size() - 1);
    if (!(period > span))
        throw ValidationError("tracking period must exceed the reference window");
    std::vector<double> times;
    times.reserve(reference_times.size() * static_cast<std::size_t>(cfg.n_periods));
    for (int k = 0; k < cfg.n_periods; ++k)
        for (double t : reference_times) times.push_back(t + k * period);
    return times;
}

namespace {

double run_tracking(const EapgTensorParts& parts, const MemoryLength& mem,
                    const Eigen::VectorXd& a0, const CoefficientSeries& reference,
                    const TrackingConfig& cfg) {
    const auto times = tiled_sample_times(reference.times, cfg);
    const EapgCoefficients coeffs = parts.with_memory(mem);
    IntegrationResult res;
    try {
        res = integrate(make_rhs(coeffs), a0, times, cfg.integrator);
    } catch (const NumericError&) {
        return kInf;
    }
    if (!res.completed) return kInf;

    const int m = reference.samples();
    double acc = 0.0;
    for (int k = 0; k < cfg.n_periods; ++k)
        acc += tracking_objective_value(
            res.series.coefficients.middleCols(static_cast<Eigen::Index>(k) * m, m),
            reference.coefficients);
    return acc;
}

} // namespace

std::function<double(double)> scalar_tracking_objective(const EapgTensorParts& parts,
                                                        double rho, const Eigen::VectorXd& a0,
                                                        const CoefficientSeries& reference,
                                                        const TrackingConfig& cfg) {
    return [=](double w) {
        return run_tracking(parts, MemoryLength::scalar(w, rho), a0, reference, cfg);
    };
}

std::function<double(const Eigen::MatrixXd&)> matrix_tracking_objective(
    const EapgTensorParts& parts, double rho, const Eigen::VectorXd& a0,
    const CoefficientSeries& reference, const TrackingConfig& cfg) {
    return [=](const Eigen::MatrixXd& w) {
        // Degenerate candidates (underflowed or overflowed Cholesky factors)
        // act like blow-ups so the search stays inside the feasible region.
        MemoryLength mem;
        try {
            mem = MemoryLength::matrix(w, rho);
        } catch (const Error&) {
            return kInf;
        }
        return run_tracking(parts, mem, a0, reference, cfg);
    };
}

OptimizationReport optimize_scalar_weight(const std::function<double(double)>& objective,
                                          const OptimizeOptions& options, double w0) {
    if (w0 < 0 || w0 > options.w_max)
        throw ValidationError("w0 must lie in [0, w_max]");

    OptimizationReport rep;
    rep.best_weight = w0;
    rep.best_objective = kInf;

    auto eval = [&](double w) {
        const double f = objective(w);
        ++rep.evaluations;
        if (f < rep.best_objective) {
            rep.best_objective = f;
            rep.best_weight = w;
        }
        rep.objective_trace.push_back(rep.best_objective);
        return f;
    };
    const auto stall = [&](double fa, double fb) {
        return std::abs(fa - fb) <= options.objective_tol * (1.0 + std::min(std::abs(fa),
                                                                            std::abs(fb)));
    };

    double f0 = eval(w0);

    // All-blow-up start: back off toward zero looking for any finite value.
    if (!std::isfinite(f0)) {
        double w = w0 > 0 ? w0 : 1.0;
        for (int k = 0; k < 60 && !std::isfinite(f0); ++k) {
            w *= 0.5;
            f0 = eval(w);
            if (std::isfinite(f0)) w0 = w;
        }
        if (!std::isfinite(f0)) {
            f0 = eval(0.0);
            w0 = 0.0;
        }
        rep.boundary_hit = true;
        if (!std::isfinite(f0)) {
            rep.converged = false; // nothing finite anywhere
            return rep;
        }
    }

    // Probe both sides to pick the downhill direction (and to detect a flat
    // objective, which converges immediately at w0).
    const double probe = std::max(0.25 * std::max(w0, 1.0), 1e-3);
    const double w_up = std::min(w0 + probe, options.w_max);
    const double w_dn = std::max(w0 - probe, 0.0);
    const double f_up = (w_up > w0) ? eval(w_up) : kInf;
    const double f_dn = (w_dn < w0) ? eval(w_dn) : kInf;

    if (std::isfinite(f_up) && std::isfinite(f_dn) && stall(f_up, f0) && stall(f_dn, f0)) {
        rep.best_weight = w0;
        rep.best_objective = f0;
        rep.converged = true;
        return rep;
    }

    // Downhill march with golden-ratio expansion until the objective turns
    // upward, blows up, or hits the domain edge.
    double x1 = w0, fx1 = f0;
    double x2, fx2;
    if (f_up <= f_dn) {
        x2 = w_up;
        fx2 = f_up;
    } else {
        x2 = w_dn;
        fx2 = f_dn;
    }
    if (fx2 > fx1) {
        std::swap(x1, x2);
        std::swap(fx1, fx2);
    }
    double x3 = x2 + (1.0 + kGolden) * (x2 - x1);
    for (int k = 0; k < options.max_iterations; ++k) {
        ++rep.iterations;
        x3 = std::clamp(x3, 0.0, options.w_max);
        if (x3 == x2) { // pinned against the domain edge while descending
            rep.boundary_hit = true;
            break;
        }
        const double fx3 = eval(x3);
        if (!std::isfinite(fx3)) { // descending into the blow-up region
            rep.boundary_hit = true;
            break;
        }
        if (fx3 >= fx2) break; // bracket (x1, x2, x3) established
        x1 = x2;
        fx1 = fx2;
        x2 = x3;
        fx2 = fx3;
        x3 = x2 + (1.0 + kGolden) * (x2 - x1);
    }

    // Golden-section refinement inside [lo, hi] around the incumbent x2.
    double lo = std::min(x1, x3), hi = std::max(x1, x3);
    lo = std::clamp(lo, 0.0, options.w_max);
    hi = std::clamp(hi, 0.0, options.w_max);
    double a = lo + (1.0 - kGolden) * (hi - lo);
    double b = lo + kGolden * (hi - lo);
    double fa = eval(a), fb = eval(b);
    for (int k = 0; k < options.max_iterations; ++k) {
        ++rep.iterations;
        if (hi - lo <= options.step_tol * (1.0 + std::abs(rep.best_weight)) ||
            (std::isfinite(fa) && std::isfinite(fb) && stall(fa, fb) &&
             hi - lo <= 1e-3 * (1.0 + std::abs(rep.best_weight)))) {
            rep.converged = true;
            break;
        }
        // +inf values repel the search interval like large finite ones.
        const double ca = std::isfinite(fa) ? fa : kInf;
        const double cb = std::isfinite(fb) ? fb : kInf;
        if (ca < cb) {
            hi = b;
            b = a;
            fb = fa;
            a = lo + (1.0 - kGolden) * (hi - lo);
            fa = eval(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + kGolden * (hi - lo);
            fb = eval(b);
        }
    }
    return rep;
}

namespace {

// theta <-> lower-triangular Cholesky factor with exp-mapped diagonal.
Eigen::MatrixXd factor_from_theta(const Eigen::VectorXd& theta, int r) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(r, r);
    int idx = 0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j <= i; ++j, ++idx)
            g(i, j) = (i == j) ? std::exp(theta(idx)) : theta(idx);
    return g;
}

Eigen::VectorXd theta_from_weight(const Eigen::MatrixXd& w, int r) {
    const Eigen::LLT<Eigen::MatrixXd> llt(w);
    if (llt.info() != Eigen::Success)
        throw ValidationError("matrix optimizer: start weight is not positive definite");
    const Eigen::MatrixXd g = llt.matrixL();
    Eigen::VectorXd theta(r * (r + 1) / 2);
    int idx = 0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j <= i; ++j, ++idx)
            theta(idx) = (i == j) ? std::log(g(i, j)) : g(i, j);
    return theta;
}

} // namespace

OptimizationReport optimize_matrix_weight(
    const std::function<double(const Eigen::MatrixXd&)>& objective, int r,
    const OptimizeOptions& options, const Eigen::MatrixXd& w0,
    std::vector<Eigen::MatrixXd>* accepted) {
    if (r < 1) throw ValidationError("matrix optimizer needs r >= 1");
    const Eigen::MatrixXd start = w0.size() ? w0 : Eigen::MatrixXd::Identity(r, r);
    if (start.rows() != r || start.cols() != r)
        throw ValidationError("matrix optimizer: start weight has the wrong shape");

    const int dim = r * (r + 1) / 2;
    OptimizationReport rep;
    rep.best_objective = kInf;

    auto eval = [&](const Eigen::VectorXd& theta) {
        const Eigen::MatrixXd g = factor_from_theta(theta, r);
        const Eigen::MatrixXd w = g * g.transpose();
        const double f = objective(w);
        ++rep.evaluations;
        if (f < rep.best_objective) {
            rep.best_objective = f;
            rep.best_weight_matrix = w;
            if (accepted) accepted->push_back(w);
        }
        return f;
    };

    // fminsearch-style initial simplex around theta0.
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(dim) + 1,
                                   theta_from_weight(start, r));
    for (int i = 0; i < dim; ++i) {
        double& c = x[static_cast<std::size_t>(i) + 1](i);
        c += (c != 0.0) ? 0.05 * std::abs(c) + 0.05 : 0.1;
    }
    std::vector<double> fx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        fx[i] = eval(x[i]);
        rep.objective_trace.push_back(rep.best_objective);
    }

    std::vector<std::size_t> order(x.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    };

    constexpr double alpha = 1.0, gamma = 2.0, rho_c = 0.5, sigma_s = 0.5;
    for (int it = 0; it < options.max_iterations; ++it) {
        sort_simplex();
        ++rep.iterations;

        const double f_best = fx[order.front()];
        const double f_worst = fx[order.back()];
        double diameter = 0.0;
        for (std::size_t i = 1; i < order.size(); ++i)
            diameter = std::max(diameter, (x[order[i]] - x[order[0]]).norm());
        const bool f_close = std::isfinite(f_worst) &&
                             f_worst - f_best <= options.objective_tol * (1.0 + std::abs(f_best));
        if (f_close || diameter <= options.step_tol) {
            rep.converged = true;
            rep.objective_trace.push_back(rep.best_objective);
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += x[order[i]];
        centroid /= static_cast<double>(dim);

        const std::size_t worst = order.back();
        const Eigen::VectorXd reflected = centroid + alpha * (centroid - x[worst]);
        const double f_reflected = eval(reflected);

        if (f_reflected < fx[order.front()]) {
            const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                x[worst] = expanded;
                fx[worst] = f_expanded;
            } else {
                x[worst] = reflected;
                fx[worst] = f_reflected;
            }
        } else if (f_reflected < fx[order[order.size() - 2]]) {
            x[worst] = reflected;
            fx[worst] = f_reflected;
        } else {
            const bool outside = f_reflected < fx[worst];
            const Eigen::VectorXd contracted =
                outside ? (centroid + rho_c * (reflected - centroid)).eval()
                        : (centroid + rho_c * (x[worst] - centroid)).eval();
            const double f_contracted = eval(contracted);
            if (f_contracted < (outside ? f_reflected : fx[worst])) {
                x[worst] = contracted;
                fx[worst] = f_contracted;
            } else {
                for (std::size_t i = 1; i < order.size(); ++i) {
                    x[order[i]] = x[order[0]] + sigma_s * (x[order[i]] - x[order[0]]);
                    fx[order[i]] = eval(x[order[i]]);
                }
            }
        }
        rep.objective_trace.push_back(rep.best_objective);
    }

    if (!std::isfinite(rep.best_objective)) rep.boundary_hit = true;
    return rep;
}

} // namespace romforge
