#pragma once

#include <Eigen/Dense>

#include <functional>

namespace auglab {

// Returns f(x) and writes the gradient into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct BoxOptions {
  double grad_tol = 1e-8;
  int max_iter = 500;
};

struct BoxResult {
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  double value = 0.0;
  double pg_norm = 0.0;  // max-norm of the projected gradient
  int iterations = 0;
  bool converged = false;
};

/// Gradient components that could still move x inside [lower, upper] when ascending.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper);

/// Maximizes f over the box by projected BFGS ascent with Armijo backtracking.
/// The inverse-Hessian model is rebuilt whenever the set of pinned bounds changes.
BoxResult maximize_box(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, const BoxOptions& options = {});

}  // namespace auglab
