#include "qpic/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "qpic/numerics.hpp"

namespace qpic {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double x) {
    x = std::remainder(x, 2.0 * kPi);
    return x <= -kPi ? x + 2.0 * kPi : x;
}

double model(const Eigen::Vector3d& p, int k, double theta) {
    return p[0] + p[1] * std::cos(k * theta + p[2]);
}

}  // namespace

double points_per_period(const FringeDataset& data, int k) {
    const auto n = data.points.size();
    if (n < 2) return 0.0;
    auto [lo, hi] = std::minmax_element(data.points.begin(), data.points.end(),
                                        [](const auto& a, const auto& b) { return a.angle < b.angle; });
    const double span = (hi->angle - lo->angle) * static_cast<double>(n) / static_cast<double>(n - 1);
    if (!(span > 0.0)) return 0.0;
    return static_cast<double>(n) * (2.0 * kPi / k) / span;
}

FringeFit fit_fringe(const FringeDataset& data, int k) {
    if (k != 1 && k != 2) throw ValidationError("fringe multiplier must be 1 or 2");
    const auto n = static_cast<Eigen::Index>(data.points.size());
    if (points_per_period(data, k) < 8.0 - 1e-9)
        throw ValidationError("fringe scan needs at least 8 points per period");

    Eigen::VectorXd theta(n), y(n), extra(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        theta[i] = data.points[i].angle;
        y[i] = data.points[i].value;
        extra[i] = data.points[i].extra_variance;
    }

    // Linear start: y = a + c cos(k t) + s sin(k t).
    Eigen::MatrixXd basis(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) basis.row(i) << 1.0, std::cos(k * theta[i]), std::sin(k * theta[i]);
    Eigen::VectorXd w0 = (y.array().max(1.0) + extra.array()).rsqrt();
    const Eigen::Vector3d lin =
        (w0.asDiagonal() * basis).colPivHouseholderQr().solve(Eigen::VectorXd(w0.asDiagonal() * y));
    const double b0 = std::hypot(lin[1], lin[2]);
    const double phi0 = std::atan2(-lin[2], lin[1]);

    Eigen::VectorXd sigma = w0.cwiseInverse();
    auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) r[i] = (y[i] - model(p, k, theta[i])) / sigma[i];
        return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd j(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double c = std::cos(k * theta[i] + p[2]);
            const double s = std::sin(k * theta[i] + p[2]);
            j.row(i) << -1.0 / sigma[i], -c / sigma[i], p[1] * s / sigma[i];
        }
        return j;
    };

    Eigen::Vector3d best(lin[0], b0, phi0);
    LeastSquaresResult result;
    for (int round = 0; round < 4; ++round) {
        double best_cost = std::numeric_limits<double>::infinity();
        LeastSquaresResult round_best;
        for (int start = 0; start < 4; ++start) {
            Eigen::VectorXd x0(3);
            x0 << best[0], std::max(best[1], 1e-9), best[2] + start * kPi / 2.0;
            LeastSquaresResult r = levenberg_marquardt(residuals, x0, jacobian);
            if (r.x.allFinite() && r.cost < best_cost) {
                best_cost = r.cost;
                round_best = r;
            }
        }
        if (!std::isfinite(best_cost)) break;
        result = round_best;
        best = result.x;
        // Reweight with the fitted model.
        for (Eigen::Index i = 0; i < n; ++i) sigma[i] = std::sqrt(std::max(model(best, k, theta[i]), 1.0) + extra[i]);
    }

    std::vector<double> resid(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) resid[static_cast<std::size_t>(i)] = y[i] - model(best, k, theta[i]);
    const Eigen::VectorXd rfinal = residuals(best);
    const double chi2 = rfinal.squaredNorm();
    if (!best.allFinite() || result.x.size() != 3) throw FitError("fringe fit produced non-finite parameters", chi2, resid);

    const Eigen::MatrixXd jj = jacobian(best);
    const Eigen::Matrix3d info = jj.transpose() * jj;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(info);
    if (!lu.isInvertible()) throw FitError("fringe fit covariance is singular", chi2, resid);

    FringeFit fit;
    fit.k = k;
    fit.floor = best[0];
    fit.amplitude = best[1];
    fit.phase = best[2];
    fit.covariance = lu.inverse();
    if (fit.amplitude < 0.0) {
        fit.amplitude = -fit.amplitude;
        fit.phase += kPi;
        fit.covariance(0, 1) = fit.covariance(1, 0) = -fit.covariance(0, 1);
        fit.covariance(1, 2) = fit.covariance(2, 1) = -fit.covariance(1, 2);
    }
    fit.phase = wrap_pi(fit.phase);
    fit.sigma_floor = std::sqrt(std::max(fit.covariance(0, 0), 0.0));
    fit.sigma_amplitude = std::sqrt(std::max(fit.covariance(1, 1), 0.0));
    fit.sigma_phase = std::sqrt(std::max(fit.covariance(2, 2), 0.0));
    fit.chi2 = chi2;
    fit.dof = static_cast<int>(n) - 3;
    return fit;
}

FringeFit fit_fringe_auto(const FringeDataset& data) {
    if (points_per_period(data, 2) < 8.0 - 1e-9) return fit_fringe(data, 1);
    // A pure fringe of the other frequency leaves the phase undetermined.
    std::optional<FringeFit> f1, f2;
    try {
        f1 = fit_fringe(data, 1);
    } catch (const FitError&) {
    }
    try {
        f2 = fit_fringe(data, 2);
    } catch (const FitError&) {
        if (!f1) throw;
    }
    if (!f1) return *f2;
    if (!f2) return *f1;
    return f2->chi2 < f1->chi2 ? *f2 : *f1;
}

Visibility visibility(const FringeDataset& data) {
    if (!data.fit) throw FitError("visibility needs a fitted dataset", 0.0, {});
    const FringeFit& f = *data.fit;
    const double nmax = f.floor + f.amplitude;
    if (!(nmax > 0.0)) throw FitError("fitted fringe maximum is not positive", f.chi2, {});
    Visibility v;
    v.value = 2.0 * f.amplitude / nmax;
    const double d = nmax * nmax;
    const Eigen::Vector2d g(-2.0 * f.amplitude / d, 2.0 * f.floor / d);
    v.sigma = std::sqrt(std::max(0.0, g.dot(f.covariance.topLeftCorner<2, 2>() * g)));

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : data.points) {
        lo = std::min(lo, p.value);
        hi = std::max(hi, p.value);
    }
    v.raw = hi > 0.0 ? 1.0 - lo / hi : 0.0;
    return v;
}

CorrelationCoefficient correlation_coefficient(const std::array<CountRecord, 4>& records) {
    const SettingAngles& s0 = records[0].settings;
    const std::array<std::pair<double, double>, 4> offsets = {{{0, 0}, {kPi, kPi}, {0, kPi}, {kPi, 0}}};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& r = records[i];
        if (std::abs(r.settings.theta_az) > 1e-12 || std::abs(r.settings.theta_bz) > 1e-12)
            throw ValidationError("correlation records must have theta_az = theta_bz = 0");
        if (std::abs(r.duration_s - records[0].duration_s) > 1e-12 * std::max(1.0, records[0].duration_s))
            throw ValidationError("correlation records must share one duration");
        const double da = wrap_pi(r.settings.theta_ay - s0.theta_ay - offsets[i].first);
        const double db = wrap_pi(r.settings.theta_by - s0.theta_by - offsets[i].second);
        if (std::abs(da) > 1e-9 || std::abs(db) > 1e-9)
            throw ValidationError("correlation records do not follow the (a,b), (a+pi,b+pi), (a,b+pi), (a+pi,b) pattern");
    }
    std::array<double, 4> c{}, sig{};
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        c[i] = records[i].corrected_coincidences();
        sig[i] = records[i].sigma();
        total += c[i];
    }
    if (!(total > 0.0)) throw ValidationError("correlation coefficient has zero total coincidences");
    CorrelationCoefficient out;
    out.records = records;
    out.value = (c[0] + c[1] - c[2] - c[3]) / total;
    const double dp = (1.0 - out.value) / total;
    const double dm = (1.0 + out.value) / total;
    out.sigma = std::sqrt(dp * dp * (sig[0] * sig[0] + sig[1] * sig[1]) + dm * dm * (sig[2] * sig[2] + sig[3] * sig[3]));
    return out;
}

std::string to_string(BellState s) {
    return s == BellState::phi_plus ? "phi+" : "phi-";
}

ChshResult chsh(double e11, double e12, double e21, double e22, BellState state) {
    ChshResult r;
    r.s = std::abs(e11 + e12 + e21 - e22);
    r.state = state;
    return r;
}

ChshResult chsh(const CorrelationCoefficient& c11, const CorrelationCoefficient& c12,
                const CorrelationCoefficient& c21, const CorrelationCoefficient& c22, BellState state) {
    ChshResult r = chsh(c11.value, c12.value, c21.value, c22.value, state);
    r.sigma = std::sqrt(c11.sigma * c11.sigma + c12.sigma * c12.sigma + c21.sigma * c21.sigma + c22.sigma * c22.sigma);
    r.violation_sigmas = r.sigma > 0.0 ? (r.s - 2.0) / r.sigma : (r.s > 2.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return r;
}

ChshAngles chsh_settings(BellState state) {
    if (state == BellState::phi_plus) return {kPi / 2.0, 0.0, kPi / 4.0, 3.0 * kPi / 4.0};
    return {kPi / 2.0, 0.0, 3.0 * kPi / 4.0, kPi / 4.0};
}

SFromVisibility s_from_visibility(double v, double sigma_v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("visibility must lie in [0, 1]");
    return {2.0 * std::numbers::sqrt2 * v, 2.0 * std::numbers::sqrt2 * sigma_v};
}

nlohmann::json to_json(const FringeFit& f) {
    return {{"k", f.k},
            {"floor", f.floor},
            {"amplitude", f.amplitude},
            {"phase", f.phase},
            {"sigma_floor", f.sigma_floor},
            {"sigma_amplitude", f.sigma_amplitude},
            {"sigma_phase", f.sigma_phase},
            {"chi2", f.chi2},
            {"dof", f.dof},
            {"chi2_per_dof", f.chi2_per_dof()}};
}

nlohmann::json to_json(const Visibility& v) {
    return {{"V", v.value}, {"sigma_V", v.sigma}, {"V_raw", v.raw}};
}

nlohmann::json to_json(const CorrelationCoefficient& c) {
    return {{"value", c.value},
            {"sigma", c.sigma},
            {"theta_ay", c.records[0].settings.theta_ay},
            {"theta_by", c.records[0].settings.theta_by}};
}

nlohmann::json to_json(const ChshResult& r) {
    return {{"state", to_string(r.state)},
            {"S", r.s},
            {"sigma_S", r.sigma},
            {"violation_sigmas", r.violation_sigmas},
            {"violates", r.s > 2.0}};
}

std::string fringe_points_csv(const FringeDataset& data) {
    std::string out = data.variable + ",value,model\n";
    char buf[128];
    for (const auto& p : data.points) {
        const double m = data.fit ? data.fit->floor + data.fit->amplitude * std::cos(data.fit->k * p.angle + data.fit->phase)
                                  : 0.0;
        std::snprintf(buf, sizeof buf, "%.12g,%.9g,%.9g\n", p.angle, p.value, m);
        out += buf;
    }
    return out;
}

}  // namespace qpic
