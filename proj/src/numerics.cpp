#include "qpic/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace qpic {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x) {
    const Eigen::VectorXd r0 = residuals(x);
    Eigen::MatrixXd j(r0.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        j.col(k) = (residuals(xp) - residuals(xm)) / (2.0 * h);
    }
    return j;
}

LeastSquaresResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0, const JacobianFn& jacobian,
                                       const LeastSquaresOptions& options) {
    auto jac = [&](const Eigen::VectorXd& x) { return jacobian ? jacobian(x) : numeric_jacobian(residuals, x); };

    LeastSquaresResult out;
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd r = residuals(x);
    double cost = r.squaredNorm();
    double lambda = options.initial_lambda;

    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it + 1;
        const Eigen::MatrixXd j = jac(x);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-15 * std::max(1.0, cost)) {
            out.converged = true;
            break;
        }

        bool stepped = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index k = 0; k < a.rows(); ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Eigen::VectorXd dx = a.ldlt().solve(-g);
            if (!dx.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd xn = x + dx;
            const Eigen::VectorXd rn = residuals(xn);
            const double cn = rn.squaredNorm();
            if (std::isfinite(cn) && cn <= cost) {
                const double rel = (cost - cn) / std::max(cost, 1e-300);
                x = xn;
                r = rn;
                cost = cn;
                lambda = std::max(lambda / 10.0, 1e-12);
                stepped = true;
                if (rel < options.tolerance || dx.norm() < 1e-15 * (1.0 + x.norm())) out.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No downhill step at any damping: already at a minimum.
            out.converged = true;
            break;
        }
        if (out.converged) break;
    }
    out.x = x;
    out.cost = cost;
    const Eigen::MatrixXd j = jac(x);
    out.jtj = j.transpose() * j;
    return out;
}

MinimizeResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& options) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    for (Eigen::Index k = 0; k < n; ++k) pts[k + 1][k] += options.initial_step * std::max(1.0, std::abs(x0[k]));
    std::vector<double> vals(n + 1);
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    for (Eigen::Index k = 0; k <= n; ++k) vals[k] = eval(pts[k]);

    std::vector<std::size_t> order(n + 1);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        if (vals[worst] - vals[best] < options.f_tolerance) return {pts[best], vals[best], evals};
        if (evals >= options.max_evaluations)
            throw ConvergenceError("Nelder-Mead did not converge within the evaluation budget", pts[best], vals[best],
                                   evals);

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t k : order)
            if (k != worst) centroid += pts[k];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Eigen::VectorXd xc =
            outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t k : order) {
            if (k == best) continue;
            pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
            vals[k] = eval(pts[k]);
        }
    }
}

}  // namespace qpic
