#include "auglab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace auglab {

namespace {

using Eigen::VectorXd;

VectorXd project(const VectorXd& x, const VectorXd& lower, const VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// A component is pinned when it sits on a bound and the gradient pushes outward.
std::vector<bool> pinned_set(const VectorXd& x, const VectorXd& g, const VectorXd& lower, const VectorXd& upper) {
  std::vector<bool> pinned(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    pinned[static_cast<std::size_t>(i)] = (x[i] <= lower[i] && g[i] <= 0.0) || (x[i] >= upper[i] && g[i] >= 0.0);
  }
  return pinned;
}

}  // namespace

VectorXd projected_gradient(const VectorXd& x, const VectorXd& g, const VectorXd& lower, const VectorXd& upper) {
  VectorXd pg = g;
  const auto pinned = pinned_set(x, g, lower, upper);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (pinned[static_cast<std::size_t>(i)]) pg[i] = 0.0;
  }
  return pg;
}

BoxResult maximize_box(const Objective& f, const VectorXd& x0, const VectorXd& lower, const VectorXd& upper,
                       const BoxOptions& options) {
  const Eigen::Index n = x0.size();
  constexpr double kArmijo = 1e-4;
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  BoxResult res;
  res.x = project(x0, lower, upper);
  res.gradient.resize(n);
  res.value = f(res.x, res.gradient);

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  auto pinned = pinned_set(res.x, res.gradient, lower, upper);
  VectorXd g_new(n);

  for (res.iterations = 0; res.iterations < options.max_iter; ++res.iterations) {
    const VectorXd pg = projected_gradient(res.x, res.gradient, lower, upper);
    res.pg_norm = pg.lpNorm<Eigen::Infinity>();
    if (res.pg_norm <= options.grad_tol) {
      res.converged = true;
      return res;
    }

    VectorXd dir = hinv * pg;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] == 0.0) dir[i] = 0.0;
    }
    if (dir.dot(pg) <= 0.0) {
      hinv.setIdentity();
      fresh = true;
      dir = pg;
    }

    // First step of a fresh model is scaled to move at most one unit.
    double t = fresh ? std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>()) : 1.0;
    const double slack = 8.0 * kEps * std::max(1.0, std::abs(res.value));
    VectorXd x_new;
    double v_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      x_new = project(res.x + t * dir, lower, upper);
      if ((x_new - res.x).lpNorm<Eigen::Infinity>() == 0.0) break;
      v_new = f(x_new, g_new);
      if (v_new >= res.value + kArmijo * res.gradient.dot(x_new - res.x) - slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (fresh) return res;  // no ascent possible from a steepest-ascent step
      hinv.setIdentity();
      fresh = true;
      continue;
    }

    const VectorXd s = x_new - res.x;
    const VectorXd y = res.gradient - g_new;  // curvature of -f
    res.x = x_new;
    res.value = v_new;
    res.gradient = g_new;

    const auto pinned_new = pinned_set(res.x, res.gradient, lower, upper);
    if (pinned_new != pinned) {
      pinned = pinned_new;
      hinv.setIdentity();
      fresh = true;
      continue;
    }
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
      fresh = false;
    }
  }
  const VectorXd pg = projected_gradient(res.x, res.gradient, lower, upper);
  res.pg_norm = pg.lpNorm<Eigen::Infinity>();
  res.converged = res.pg_norm <= options.grad_tol;
  return res;
}

}  // namespace auglab
