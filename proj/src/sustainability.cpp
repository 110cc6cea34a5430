#include "auglab/sustainability.hpp"

#include "auglab/optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace auglab {

double energy(double d, double w1, const EnergyParams& ep) {
  if (!(d >= 0.0 && w1 >= 0.0)) throw Error(ErrorCode::domain, "energy needs D >= 0 and W1 >= 0");
  return ep.base_rate * d * (1.0 + ep.transparency_rate * w1);
}

double KktResiduals::worst() const { return std::max({stationarity, primal, dual, slackness}); }

namespace {

using Eigen::VectorXd;

constexpr int kVars = kDims + 1;

struct Evaluated {
  double value;
  Vec5 grad_w;
  double grad_d;
};

Evaluated evaluate(const FirmState& fs, const ModelParams& p, const Vec5& w, double d) {
  FirmState f = fs;
  f.ai_stock = d;
  const DesignVector dv(w.cwiseMax(0.0).cwiseMin(p.w_max), p.w_max);
  return {profit(f, dv, p), profit_gradient_w(f, dv, p).gradient, profit_gradient_d(f, dv, p)};
}

VectorXd pack(const Vec5& w, double d) {
  VectorXd x(kVars);
  x.head<kDims>() = w;
  x[kDims] = d;
  return x;
}

bool lexicographically_less(const VectorXd& a, const VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

// Best of a few deterministic starts; ties go to the lexicographically smallest point.
BoxResult multistart(const Objective& f, const std::vector<VectorXd>& starts, const VectorXd& lower,
                     const VectorXd& upper, const BoxOptions& box) {
  BoxResult best;
  bool have = false;
  for (const VectorXd& x0 : starts) {
    BoxResult r = maximize_box(f, x0, lower, upper, box);
    const double tie = 1e-12 * std::max(1.0, std::abs(best.value));
    const bool better = !have || (r.converged && !best.converged) ||
                        (r.converged == best.converged &&
                         (r.value > best.value + tie ||
                          (std::abs(r.value - best.value) <= tie && lexicographically_less(r.x, best.x))));
    if (better) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

std::vector<VectorXd> joint_starts(const FirmState& fs, const ModelParams& p, const SolverOptions& opts) {
  const double d0 = fs.ai_stock;
  const OptimizationResult fixed_d = optimize_design(fs, p, opts);
  return {pack(p.w_auto, d0), pack(p.w_min, d0), pack(fixed_d.w_star.values(), d0),
          pack(p.w_auto, 2.0 * d0 + 1.0)};
}

KktResiduals kkt_at(const FirmState& fs, const ModelParams& p, const EnergyParams& ep, const Vec5& w, double d,
                    double mu, double d_max) {
  const Evaluated e = evaluate(fs, p, w, d);
  VectorXd grad(kVars);
  grad.head<kDims>() = e.grad_w;
  grad[kDims] = e.grad_d;
  grad[0] -= mu * ep.base_rate * ep.transparency_rate * d;
  grad[kDims] -= mu * ep.base_rate * (1.0 + ep.transparency_rate * w[0]);
  const VectorXd lower = VectorXd::Zero(kVars);
  VectorXd upper = VectorXd::Constant(kVars, p.w_max);
  upper[kDims] = d_max;
  KktResiduals r;
  r.stationarity = projected_gradient(pack(w, d), grad, lower, upper).lpNorm<Eigen::Infinity>();
  const double used = energy(d, w[0], ep);
  r.primal = std::max(0.0, used - ep.budget);
  r.dual = std::max(0.0, -mu);
  r.slackness = std::abs(mu * (ep.budget - used));
  return r;
}

}  // namespace

ConstrainedResult optimize_joint(const FirmState& fs, const ModelParams& p, const SolverOptions& opts,
                                 const ConstrainedOptions& copts) {
  p.validate();
  fs.validate();
  Objective f = [&](const VectorXd& x, VectorXd& grad) {
    const Evaluated e = evaluate(fs, p, x.head<kDims>(), x[kDims]);
    grad = pack(e.grad_w, e.grad_d);
    return e.value;
  };
  const VectorXd lower = VectorXd::Zero(kVars);
  VectorXd upper = VectorXd::Constant(kVars, p.w_max);
  upper[kDims] = copts.d_max;
  const BoxResult r = multistart(f, joint_starts(fs, p, opts), lower, upper, {opts.grad_tol, opts.max_iter});

  ConstrainedResult out;
  out.w_star = DesignVector(Vec5(r.x.head<kDims>()), p.w_max);
  out.d_star = r.x[kDims];
  out.profit = r.value;
  out.converged = r.converged;
  return out;
}

ConstrainedResult optimize_constrained(const FirmState& fs, const ModelParams& p, const EnergyParams& ep,
                                       const SolverOptions& opts, const ConstrainedOptions& copts) {
  ep.validate();
  ConstrainedResult out = optimize_joint(fs, p, opts, copts);
  out.energy_used = energy(out.d_star, out.w_star[0], ep);
  if (out.energy_used <= ep.budget) {
    out.kkt = kkt_at(fs, p, ep, out.w_star.values(), out.d_star, 0.0, copts.d_max);
    out.converged = out.converged && out.kkt.worst() <= std::max(opts.grad_tol, 1e-8);
    return out;
  }

  // Multiplier loop on the augmented objective  profit - (max(0, mu + rho c)^2 - mu^2) / (2 rho).
  const VectorXd lower = VectorXd::Zero(kVars);
  VectorXd upper = VectorXd::Constant(kVars, p.w_max);
  upper[kDims] = copts.d_max;
  const double rho = copts.penalty;
  double mu = 0.0;
  VectorXd x = pack(out.w_star.values(), out.d_star);
  bool outer_done = false;
  for (out.outer_iterations = 1; out.outer_iterations <= copts.max_outer; ++out.outer_iterations) {
    Objective f = [&](const VectorXd& z, VectorXd& grad) {
      const Evaluated e = evaluate(fs, p, z.head<kDims>(), z[kDims]);
      const double c = energy(z[kDims], z[0], ep) - ep.budget;
      const double m = std::max(0.0, mu + rho * c);
      grad = pack(e.grad_w, e.grad_d);
      grad[0] -= m * ep.base_rate * ep.transparency_rate * z[kDims];
      grad[kDims] -= m * ep.base_rate * (1.0 + ep.transparency_rate * z[0]);
      return e.value - (m * m - mu * mu) / (2.0 * rho);
    };
    const BoxResult r = maximize_box(f, x, lower, upper, {opts.grad_tol, opts.max_iter});
    x = r.x;
    const double c = energy(x[kDims], x[0], ep) - ep.budget;
    const double mu_next = std::max(0.0, mu + rho * c);
    const bool settled = c <= copts.outer_tol && std::abs(mu_next - mu) <= copts.outer_tol;
    mu = mu_next;
    if (settled) {
      outer_done = true;
      break;
    }
    if (!std::isfinite(mu)) break;
  }
  if (!outer_done || !std::isfinite(mu)) {
    throw Error(ErrorCode::convergence, fmt::format("energy multiplier did not settle after {} updates (mu = {})",
                                                    copts.max_outer, mu));
  }

  // Reduced problem on the active constraint: D = budget / (e0 (1 + e1 W1)).
  auto d_of = [&](double w1) { return ep.budget / (ep.base_rate * (1.0 + ep.transparency_rate * w1)); };
  Objective reduced = [&](const VectorXd& z, VectorXd& grad) {
    const Vec5 w = z;
    const double d = d_of(w[0]);
    const Evaluated e = evaluate(fs, p, w, d);
    grad = e.grad_w;
    grad[0] += e.grad_d * (-d * ep.transparency_rate / (1.0 + ep.transparency_rate * w[0]));
    return e.value;
  };
  auto binding_from = [&](const Vec5& start) {
    const BoxResult r = maximize_box(reduced, start, VectorXd::Zero(kDims), VectorXd::Constant(kDims, p.w_max),
                                     {opts.grad_tol, opts.max_iter});
    ConstrainedResult b;
    const Vec5 w = r.x;
    const double d = d_of(w[0]);
    const Evaluated e = evaluate(fs, p, w, d);
    b.w_star = DesignVector(w, p.w_max);
    b.d_star = d;
    b.shadow_price = e.grad_d / (ep.base_rate * (1.0 + ep.transparency_rate * w[0]));
    b.energy_used = energy(d, w[0], ep);
    b.binding = true;
    b.profit = e.value;
    b.kkt = kkt_at(fs, p, ep, w, d, b.shadow_price, copts.d_max);
    b.converged = r.converged && b.kkt.worst() <= std::max(opts.grad_tol, 1e-8);
    return b;
  };

  const int outer = out.outer_iterations;
  const Vec5 free_w = out.w_star.values();
  const double c_final = energy(x[kDims], x[0], ep) - ep.budget;
  if (mu == 0.0 && c_final < -copts.outer_tol) {
    // The multiplier loop settled on a local optimum strictly inside the budget (low D, where
    // AI has increasing returns). Keep it unless the active-constraint branch does better.
    ConstrainedResult inner;
    inner.w_star = DesignVector(Vec5(x.head<kDims>()), p.w_max);
    inner.d_star = x[kDims];
    inner.energy_used = energy(inner.d_star, inner.w_star[0], ep);
    inner.profit = evaluate(fs, p, inner.w_star.values(), inner.d_star).value;
    inner.kkt = kkt_at(fs, p, ep, inner.w_star.values(), inner.d_star, 0.0, copts.d_max);
    inner.converged = inner.kkt.worst() <= std::max(opts.grad_tol, 1e-8);
    inner.outer_iterations = outer;
    const ConstrainedResult b = binding_from(free_w);
    if (b.shadow_price >= 0.0 && b.converged && b.profit > inner.profit) {
      ConstrainedResult chosen = b;
      chosen.outer_iterations = outer;
      return chosen;
    }
    return inner;
  }

  ConstrainedResult b = binding_from(x.head<kDims>());
  if (b.shadow_price < 0.0) {
    throw Error(ErrorCode::inconsistency,
                fmt::format("active energy constraint has negative multiplier {}", b.shadow_price));
  }
  b.outer_iterations = outer;
  return b;
}

Frontier tradeoff_frontier(const FirmState& fs, const ModelParams& p, const EnergyParams& ep,
                           const std::vector<double>& budgets, const SolverOptions& opts,
                           const ConstrainedOptions& copts) {
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (!(budgets[i] > budgets[i - 1])) throw Error(ErrorCode::input, "frontier budgets must be strictly ascending");
  }
  Frontier fr;
  const ConstrainedResult free = optimize_joint(fs, p, opts, copts);
  fr.unconstrained_energy = energy(free.d_star, free.w_star[0], ep);
  for (double b : budgets) {
    EnergyParams e = ep;
    e.budget = b;
    fr.points.push_back({b, optimize_constrained(fs, p, e, opts, copts)});
  }
  return fr;
}

}  // namespace auglab
