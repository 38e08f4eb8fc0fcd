#pragma once

// Small dense optimizers shared by the fitting code.

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "qpic/error.hpp"

namespace qpic {

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd best, double best_value, int evaluations)
        : Error(what), best_(std::move(best)), best_value_(best_value), evaluations_(evaluations) {}
    const Eigen::VectorXd& best() const { return best_; }
    double best_value() const { return best_value_; }
    int evaluations() const { return evaluations_; }

private:
    Eigen::VectorXd best_;
    double best_value_;
    int evaluations_;
};

// Residual vector r(x); the objective is sum r_i^2 (weights folded into r).
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Jacobian dr/dx; may be empty, in which case central differences are used.
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct LeastSquaresResult {
    Eigen::VectorXd x;
    double cost = 0.0;           // sum of squared residuals
    Eigen::MatrixXd jtj;         // J^T J at x
    int iterations = 0;
    bool converged = false;
};

struct LeastSquaresOptions {
    int max_iterations = 500;
    double tolerance = 1e-14;    // relative cost change
    double initial_lambda = 1e-3;
};

LeastSquaresResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0, const JacobianFn& jacobian = {},
                                       const LeastSquaresOptions& options = {});

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x);

struct MinimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
};

struct NelderMeadOptions {
    int max_evaluations = 100000;
    double f_tolerance = 1e-10;  // spread of the simplex values
    double initial_step = 0.1;
};

// Minimizes f. Throws ConvergenceError (carrying the best point) when the
// evaluation budget runs out before the simplex collapses.
MinimizeResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                           const NelderMeadOptions& options = {});

}  // namespace qpic
