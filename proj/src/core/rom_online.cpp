#include "rom_online.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace romforge {

Eigen::VectorXd kron_pair(const Eigen::VectorXd& a) {
    const auto r = a.size();
    Eigen::VectorXd out(r * r);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < r; ++k) out(i * r + k) = a(i) * a(k);
    return out;
}

Eigen::VectorXd kron_triple(const Eigen::VectorXd& a) {
    const auto r = a.size();
    Eigen::VectorXd out(r * r * r);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            for (Eigen::Index k = 0; k < r; ++k)
                out((i * r + j) * r + k) = a(i) * a(j) * a(k);
    return out;
}

Eigen::VectorXd grom_rhs(const GromCoefficients& coeffs, const Eigen::VectorXd& a) {
    if (a.size() != coeffs.r)
        throw ValidationError("state has " + std::to_string(a.size()) +
                              " entries, coefficients expect " + std::to_string(coeffs.r));
    return coeffs.quadratic * kron_pair(a) + coeffs.linear * a + coeffs.constant;
}

Eigen::VectorXd eapg_rhs(const EapgCoefficients& coeffs, const Eigen::VectorXd& a) {
    if (a.size() != coeffs.r)
        throw ValidationError("state has " + std::to_string(a.size()) +
                              " entries, coefficients expect " + std::to_string(coeffs.r));
    return coeffs.cubic * kron_triple(a) + coeffs.quadratic * kron_pair(a) +
           coeffs.linear * a + coeffs.constant;
}

RhsFunction make_rhs(const GromCoefficients& coeffs) {
    return [coeffs](double, const Eigen::VectorXd& a) { return grom_rhs(coeffs, a); };
}

RhsFunction make_rhs(const EapgCoefficients& coeffs) {
    return [coeffs](double, const Eigen::VectorXd& a) { return eapg_rhs(coeffs, a); };
}

void IntegratorConfig::validate() const {
    if (!(dt > 0)) throw ValidationError("integrator dt must be positive");
    if (!(rel_tol > 0) || !(abs_tol > 0))
        throw ValidationError("integrator tolerances must be positive");
    if (!(blowup_factor > 0)) throw ValidationError("blow-up factor must be positive");
}

std::string IntegrationResult::report() const {
    std::ostringstream out;
    out << "steps_taken = " << steps_taken << "\n"
        << "steps_rejected = " << steps_rejected << "\n"
        << "blew_up = " << (blew_up ? 1 : 0) << "\n"
        << "step_underflow = " << (step_underflow ? 1 : 0) << "\n"
        << "completed = " << (completed ? 1 : 0) << "\n";
    if (!completed) out << "failure_time = " << failure_time << "\n";
    return out.str();
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Quartic dense-output interpolant (the classical one shipped with this
// pair); bi(theta) = theta*(BI[i][0] + theta*(BI[i][1] + ...)).
constexpr double BI[7][4] = {
    {1.0, -183.0 / 64, 37.0 / 12, -145.0 / 128},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 1500.0 / 371, -1000.0 / 159, 1000.0 / 371},
    {0.0, -125.0 / 32, 125.0 / 12, -375.0 / 64},
    {0.0, 9477.0 / 3392, -729.0 / 106, 25515.0 / 6784},
    {0.0, -11.0 / 7, 11.0 / 3, -55.0 / 28},
    {0.0, 3.0 / 2, -4.0, 5.0 / 2}};

struct DpStep {
    Eigen::VectorXd y_new;
    Eigen::VectorXd k1, k2, k3, k4, k5, k6, k7;
    double error = 0.0; // scaled; accept when <= 1
};

DpStep dp_step(const RhsFunction& rhs, double t, const Eigen::VectorXd& y, double h,
               const Eigen::VectorXd& f_at_y, double rel_tol, double abs_tol) {
    DpStep s;
    s.k1 = f_at_y;
    s.k2 = rhs(t + c2 * h, y + h * (a21 * s.k1));
    s.k3 = rhs(t + c3 * h, y + h * (a31 * s.k1 + a32 * s.k2));
    s.k4 = rhs(t + c4 * h, y + h * (a41 * s.k1 + a42 * s.k2 + a43 * s.k3));
    s.k5 = rhs(t + c5 * h, y + h * (a51 * s.k1 + a52 * s.k2 + a53 * s.k3 + a54 * s.k4));
    s.k6 = rhs(t + h, y + h * (a61 * s.k1 + a62 * s.k2 + a63 * s.k3 + a64 * s.k4 + a65 * s.k5));
    s.y_new = y + h * (b1 * s.k1 + b3 * s.k3 + b4 * s.k4 + b5 * s.k5 + b6 * s.k6);
    s.k7 = rhs(t + h, s.y_new); // FSAL

    const Eigen::VectorXd err_vec =
        h * (e1 * s.k1 + e3 * s.k3 + e4 * s.k4 + e5 * s.k5 + e6 * s.k6 + e7 * s.k7);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double scale = abs_tol + rel_tol * std::max(std::abs(y(i)), std::abs(s.y_new(i)));
        const double q = err_vec(i) / scale;
        acc += q * q;
    }
    s.error = std::sqrt(acc / static_cast<double>(y.size()));
    return s;
}

Eigen::VectorXd dp_interpolate(const Eigen::VectorXd& y, double h, const DpStep& s,
                               double theta) {
    const Eigen::VectorXd* k[7] = {&s.k1, &s.k2, &s.k3, &s.k4, &s.k5, &s.k6, &s.k7};
    Eigen::VectorXd out = y;
    for (int i = 0; i < 7; ++i) {
        const double bi =
            theta * (BI[i][0] + theta * (BI[i][1] + theta * (BI[i][2] + theta * BI[i][3])));
        if (bi != 0.0) out += (h * bi) * (*k[i]);
    }
    return out;
}

double initial_step_size(const RhsFunction& rhs, double t0, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd& f0, double rel_tol, double abs_tol,
                         double span) {
    const double d0 = y0.norm();
    const double d1 = f0.norm();
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
    h = std::min(h, span);
    // One Euler probe to bound the second derivative.
    const Eigen::VectorXd y1 = y0 + h * f0;
    const Eigen::VectorXd f1 = rhs(t0 + h, y1);
    const double d2 = (f1 - f0).norm() / h;
    const double scale = std::max(d1, d2);
    double h1 = scale > 1e-15 ? std::pow(0.01 / scale, 0.2) : std::max(1e-6, h * 1e-3);
    h1 = std::min({100 * h, h1, span});
    (void)rel_tol;
    (void)abs_tol;
    return std::max(h1, 1e-12);
}

} // namespace

IntegrationResult integrate(const RhsFunction& rhs, const Eigen::VectorXd& a0,
                            const std::vector<double>& output_times,
                            const IntegratorConfig& cfg) {
    cfg.validate();
    if (output_times.size() < 1) throw ValidationError("integrate needs output times");
    for (std::size_t i = 1; i < output_times.size(); ++i)
        if (!(output_times[i] > output_times[i - 1]))
            throw ValidationError("output times must be strictly increasing");

    const auto r = a0.size();
    const double t0 = output_times.front();
    const double t_end = output_times.back();
    const double blow_limit = cfg.blowup_factor * std::max(a0.norm(), 1.0);

    IntegrationResult res;
    res.series.times.reserve(output_times.size());
    Eigen::MatrixXd samples(r, static_cast<Eigen::Index>(output_times.size()));
    samples.col(0) = a0;
    res.series.times.push_back(t0);
    std::size_t next_out = 1;

    auto finalize = [&](bool ok, double t_fail) {
        res.completed = ok;
        if (!ok) res.failure_time = t_fail;
        res.series.coefficients = samples.leftCols(static_cast<Eigen::Index>(next_out));
        return res;
    };

    if (output_times.size() == 1) return finalize(true, 0.0);

    Eigen::VectorXd y = a0;
    double t = t0;

    if (cfg.scheme == IntegratorConfig::Scheme::ExplicitEuler) {
        // Full dt steps; remainders below dt become one shortened step, and
        // sub-ulp remainders snap to the sample time so aligned outputs see
        // exactly h = dt every step.
        const double snap_tol = cfg.dt * 1e-9;
        while (next_out < output_times.size()) {
            const double target = output_times[next_out];
            while (true) {
                const double remaining = target - t;
                if (remaining <= snap_tol) {
                    t = target;
                    break;
                }
                if (res.steps_taken >= cfg.max_steps)
                    throw NumericError("integration exceeded the step budget");
                const double h = remaining < cfg.dt ? remaining : cfg.dt;
                y += h * rhs(t, y);
                t += h;
                ++res.steps_taken;
                if (!y.allFinite() || y.norm() > blow_limit) {
                    res.blew_up = true;
                    return finalize(false, t);
                }
            }
            samples.col(static_cast<Eigen::Index>(next_out)) = y;
            res.series.times.push_back(target);
            ++next_out;
        }
        return finalize(true, 0.0);
    }

    // Dormand-Prince path.
    Eigen::VectorXd f = rhs(t, y);
    double h = cfg.adaptive
                   ? initial_step_size(rhs, t, y, f, cfg.rel_tol, cfg.abs_tol, t_end - t0)
                   : cfg.dt;

    while (next_out < output_times.size()) {
        if (res.steps_taken + res.steps_rejected >= cfg.max_steps)
            throw NumericError("integration exceeded the step budget");
        h = std::min(h, t_end - t);
        const double h_min =
            16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
        if (h < h_min || !(t + h > t)) {
            res.step_underflow = true;
            return finalize(false, t);
        }

        const DpStep step = dp_step(rhs, t, y, h, f, cfg.rel_tol, cfg.abs_tol);

        if (cfg.adaptive && (!step.y_new.allFinite() || !std::isfinite(step.error))) {
            ++res.steps_rejected;
            h *= 0.1;
            continue;
        }
        if (cfg.adaptive && step.error > 1.0) {
            ++res.steps_rejected;
            h *= std::max(0.2, 0.9 * std::pow(step.error, -0.2));
            continue;
        }

        // Emit every sample the accepted interval covers via dense output.
        const double slack =
            4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t + h), 1.0);
        while (next_out < output_times.size() && output_times[next_out] <= t + h + slack) {
            const double theta = (output_times[next_out] - t) / h;
            samples.col(static_cast<Eigen::Index>(next_out)) =
                (theta >= 1.0) ? step.y_new : dp_interpolate(y, h, step, theta);
            res.series.times.push_back(output_times[next_out]);
            ++next_out;
        }

        t += h;
        y = step.y_new;
        f = step.k7;
        ++res.steps_taken;

        if (!y.allFinite() || y.norm() > blow_limit) {
            res.blew_up = true;
            return finalize(false, t);
        }
        if (cfg.adaptive)
            h *= (step.error > 0.0)
                     ? std::min(5.0, std::max(0.2, 0.9 * std::pow(step.error, -0.2)))
                     : 5.0;
    }
    return finalize(true, 0.0);
}

Eigen::VectorXd initial_condition(const CoarseBasis& cb, const VelocityField& fluctuation0) {
    if (!(cb.grid == fluctuation0.grid()))
        throw ValidationError("initial condition: grid mismatch");
    return cb.modes.transpose() *
           Eigen::Map<const Eigen::VectorXd>(fluctuation0.data(), fluctuation0.size());
}

VelocityField reconstruct(const CoarseBasis& cb, const Eigen::VectorXd& a) {
    if (a.size() != cb.rank()) throw ValidationError("reconstruct: coefficient size mismatch");
    VelocityField out(cb.grid);
    Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) =
        Eigen::Map<const Eigen::VectorXd>(cb.mean.data(), cb.mean.size()) + cb.modes * a;
    return out;
}

std::vector<VelocityField> reconstruct_series(const CoarseBasis& cb,
                                              const CoefficientSeries& series) {
    std::vector<VelocityField> out;
    out.reserve(static_cast<std::size_t>(series.samples()));
    for (int m = 0; m < series.samples(); ++m)
        out.push_back(reconstruct(cb, series.coefficients.col(m)));
    return out;
}

} // namespace romforge
