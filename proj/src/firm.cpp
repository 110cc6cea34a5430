#include "auglab/firm.hpp"

#include "auglab/optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace auglab {

namespace {

double cobb_douglas(double z1, double z2, double z3, const ModelParams& p) {
  if (z1 <= 0.0 || z2 <= 0.0 || z3 <= 0.0) return 0.0;
  return std::exp(p.prod_shares[0] * std::log(z1) + p.prod_shares[1] * std::log(z2) + p.prod_shares[2] * std::log(z3));
}

}  // namespace

std::array<double, 3> labor_demand(const FirmState& fs, const DesignVector& w, const ModelParams& p) {
  if (p.labor_mode == LaborMode::fixed) return fs.labor;
  const double wage_p = p.wages[0], wage_a = p.wages[2];
  if (!(wage_p > 0.0 && wage_a > 0.0)) {
    throw Error(ErrorCode::params, "optimized labor mode needs positive wages for physical and augmentable labor");
  }
  const double price = p.output_price;
  const double t1 = p.prod_shares[0], t2 = p.prod_shares[1], t3 = p.prod_shares[2];
  const double z1 = fs.capital_k;
  const double base2 = p.robot_rate * fs.robot_capital;
  const double base3 = fs.labor[1] * fs.human_capital[1];
  const double eff2 = fs.human_capital[0];  // Z2 per physical worker
  const double eff3 = eval_phi0(fs.ai_stock, p) * eval_g(w, fs.ha(), p).value * fs.ha() * fs.ai_stock;
  const bool use_p = eff2 > 0.0, use_a = eff3 > 0.0;

  // Profit is concave in (L^P, L^A); the optimum is the best stationary point over the four faces of the orthant.
  std::array<double, 3> best{0.0, fs.labor[1], 0.0};
  double best_value = price * cobb_douglas(z1, base2, base3, p);
  auto consider = [&](double z2, double z3) {
    const double lp = use_p ? (z2 - base2) / eff2 : 0.0;
    const double la = use_a ? (z3 - base3) / eff3 : 0.0;
    if (!(lp >= 0.0 && la >= 0.0) || !std::isfinite(lp) || !std::isfinite(la)) return;
    const double value = price * cobb_douglas(z1, z2, z3, p) - wage_p * lp - wage_a * la;
    if (value > best_value) {
      best_value = value;
      best = {lp, fs.labor[1], la};
    }
  };
  const double c2 = use_p ? wage_p / eff2 : 0.0;
  const double c3 = use_a ? wage_a / eff3 : 0.0;
  if (use_p && use_a && z1 > 0.0) {
    const double log_y = (t1 * std::log(z1) + t2 * std::log(t2 * price / c2) + t3 * std::log(t3 * price / c3)) /
                         (1.0 - t2 - t3);
    const double y = std::exp(log_y);
    consider(t2 * price * y / c2, t3 * price * y / c3);
  }
  if (use_a && base2 > 0.0 && z1 > 0.0) {
    const double z3 = std::pow(t3 * price * std::pow(z1, t1) * std::pow(base2, t2) / c3, 1.0 / (1.0 - t3));
    consider(base2, z3);
  }
  if (use_p && base3 > 0.0 && z1 > 0.0) {
    const double z2 = std::pow(t2 * price * std::pow(z1, t1) * std::pow(base3, t3) / c2, 1.0 / (1.0 - t2));
    consider(z2, base3);
  }
  return best;
}

FirmOutcome evaluate_firm(const FirmState& fs, const DesignVector& w, const ModelParams& p) {
  FirmOutcome out;
  out.labor = labor_demand(fs, w, p);
  FirmState employed = fs;
  employed.labor = out.labor;
  out.output = eval_output(employed, w, p);
  out.design_cost = eval_design_cost(w, p).cost;
  double wage_bill = 0.0;
  for (std::size_t j = 0; j < 3; ++j) wage_bill += p.wages[j] * out.labor[j];
  out.profit = p.output_price * out.output.output - p.ai_unit_cost * fs.ai_stock - out.design_cost - wage_bill;
  return out;
}

double profit(const FirmState& fs, const DesignVector& w, const ModelParams& p) {
  return evaluate_firm(fs, w, p).profit;
}

namespace {

// Augmentation benefit dProfit/dW before costs, at the given employed labor.
ProfitGradient benefit_gradient(const FirmState& fs, const DesignVector& w, const ModelParams& p,
                                const std::array<double, 3>& labor) {
  ProfitGradient out;
  FirmState employed = fs;
  employed.labor = labor;
  const OutputEval y = eval_output(employed, w, p);
  if (y.degenerate) return out;
  const DesignGradient dg = grad_g(w, fs.ha(), p);
  if (dg.clipped) {
    out.clipped = true;
    return out;
  }
  const double f3 = p.prod_shares[2] * y.output / y.z3;
  const double scale = p.output_price * f3 * eval_phi0(fs.ai_stock, p) * labor[2] * fs.ha() * fs.ai_stock;
  out.gradient = scale * dg.partials;
  return out;
}

}  // namespace

ProfitGradient profit_gradient_w(const FirmState& fs, const DesignVector& w, const ModelParams& p) {
  ProfitGradient out = benefit_gradient(fs, w, p, labor_demand(fs, w, p));
  out.gradient -= eval_design_cost(w, p).gradient;
  return out;
}

double profit_gradient_d(const FirmState& fs, const DesignVector& w, const ModelParams& p) {
  const std::array<double, 3> labor = labor_demand(fs, w, p);
  FirmState employed = fs;
  employed.labor = labor;
  const OutputEval y = eval_output(employed, w, p);
  if (y.degenerate) return -p.ai_unit_cost;
  const double f3 = p.prod_shares[2] * y.output / y.z3;
  const double g = eval_g(w, fs.ha(), p).value;
  const double d = fs.ai_stock;
  const double dz3 = g * labor[2] * fs.ha() * (eval_phi0_derivative(d, p) * d + eval_phi0(d, p));
  return p.output_price * f3 * dz3 - p.ai_unit_cost;
}

double marginal_return(const DesignVector& w, int k, const FirmState& fs, const ModelParams& p) {
  if (k < 0 || k >= kDims) throw Error(ErrorCode::domain, fmt::format("design index {} outside 0..4", k));
  return benefit_gradient(fs, w, p, labor_demand(fs, w, p)).gradient[k];
}

// ---------------------------------------------------------------------------

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0, f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

bool lexicographically_less(const Vec5& a, const Vec5& b) {
  for (int k = 0; k < kDims; ++k) {
    if (a[k] != b[k]) return a[k] < b[k];
  }
  return false;
}

}  // namespace

std::vector<Vec5> multistart_points(const ModelParams& p, const Vec5& init, const SolverOptions& opts) {
  static constexpr std::uint64_t kPrimes[kDims] = {2, 3, 5, 7, 11};
  std::vector<Vec5> pts;
  auto add = [&](const Vec5& x) {
    if (static_cast<int>(pts.size()) >= opts.starts) return;
    for (const auto& q : pts) {
      if (q == x) return;
    }
    pts.push_back(x);
  };
  add(init);
  add(p.w_min);
  add(p.w_auto);
  for (std::uint64_t i = 1; static_cast<int>(pts.size()) < opts.starts; ++i) {
    Vec5 x;
    for (int k = 0; k < kDims; ++k) x[k] = p.w_max * radical_inverse(opts.seed * 1000003ULL + i, kPrimes[k]);
    add(x);
  }
  return pts;
}

OptimizationResult optimize_design(const FirmState& fs, const ModelParams& p, const DesignVector& init,
                                   const SolverOptions& opts, const DesignTerm& extra) {
  p.validate();
  fs.validate();
  const Eigen::VectorXd lower = Eigen::VectorXd::Zero(kDims);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(kDims, p.w_max);

  Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Vec5 wv = x;
    const DesignVector w(wv.cwiseMax(0.0).cwiseMin(p.w_max), p.w_max);
    Vec5 g = profit_gradient_w(fs, w, p).gradient;
    double value = profit(fs, w, p);
    if (extra) {
      Vec5 eg = Vec5::Zero();
      value += extra(w.values(), eg);
      g += eg;
    }
    grad = g;
    return value;
  };

  BoxOptions box{opts.grad_tol, opts.max_iter};
  bool have = false;
  BoxResult best;
  OptimizationResult out;
  for (const Vec5& start : multistart_points(p, init.values(), opts)) {
    BoxResult r = maximize_box(f, start, lower, upper, box);
    out.iterations += r.iterations;
    if (r.converged) ++out.starts_converged;
    bool better = !have || (r.converged && !best.converged);
    if (have && r.converged == best.converged) {
      const double tie = 1e-12 * std::max(1.0, std::abs(best.value));
      if (r.value > best.value + tie) better = true;
      else if (std::abs(r.value - best.value) <= tie && lexicographically_less(Vec5(r.x), Vec5(best.x))) better = true;
    }
    if (better) {
      best = r;
      have = true;
    }
  }

  out.w_star = DesignVector(Vec5(best.x), p.w_max);
  out.d_star = fs.ai_stock;
  out.converged = best.converged;
  out.objective = best.value;
  out.foc_residual = best.gradient;
  const FirmOutcome fo = evaluate_firm(fs, out.w_star, p);
  out.profit = fo.profit;
  if (p.labor_mode == LaborMode::optimized) out.labor_star = fo.labor;
  out.clipped = eval_g(out.w_star, fs.ha(), p).clip != Clip::none;
  for (int k = 0; k < kDims; ++k) {
    out.boundary_flags[static_cast<std::size_t>(k)] = best.x[k] <= 0.0 || best.x[k] >= p.w_max;
  }
  return out;
}

OptimizationResult optimize_design(const FirmState& fs, const ModelParams& p, const SolverOptions& opts) {
  return optimize_design(fs, p, DesignVector(p.w_auto, p.w_max), opts);
}

// ---------------------------------------------------------------------------

ThresholdResult find_theta_star(const FirmState& fs_template, const ModelParams& p, const SolverOptions& opts,
                                const ThresholdOptions& topts) {
  ThresholdResult res;
  res.tolerance = topts.tolerance;
  std::map<double, Vec5> cache;
  auto w_at = [&](double s) -> const Vec5& {
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    const OptimizationResult r = optimize_design(fs_template.with_share(s), p, opts);
    ++res.solves;
    if (!r.converged) throw Error(ErrorCode::convergence, fmt::format("design optimum did not converge at share {}", s));
    return cache.emplace(s, r.w_star.values()).first->second;
  };

  bool any_interior = false, any_never = false;
  double best = -1.0;
  for (int k = 0; k < kDims; ++k) {
    auto event = [&](double s) { return w_at(s)[k] >= p.w_auto[k]; };
    DimensionThreshold& dt = res.per_dimension[static_cast<std::size_t>(k)];
    double lo = topts.share_lo, hi = topts.share_hi;
    if (event(lo)) {
      dt = {ThresholdKind::always, 0.0, 0.0, lo};
      continue;
    }
    if (!event(hi)) {
      dt = {ThresholdKind::never, 1.0, hi, 1.0};
      any_never = true;
      continue;
    }
    while (hi - lo > topts.tolerance) {
      const double mid = 0.5 * (lo + hi);
      (event(mid) ? hi : lo) = mid;
    }
    dt = {ThresholdKind::interior, 0.5 * (lo + hi), lo, hi};
    any_interior = true;
    if (dt.share > best) {
      best = dt.share;
      res.bracket_lo = lo;
      res.bracket_hi = hi;
    }
  }
  if (any_never) {
    res.kind = ThresholdKind::never;
    res.theta_star = 1.0;
    res.bracket_lo = topts.share_hi;
    res.bracket_hi = 1.0;
  } else if (!any_interior) {
    res.kind = ThresholdKind::always;
    res.theta_star = 0.0;
    res.bracket_lo = 0.0;
    res.bracket_hi = topts.share_lo;
  } else {
    res.theta_star = best;
  }
  return res;
}

// ---------------------------------------------------------------------------

const char* to_string(StaticsTarget t) {
  switch (t) {
    case StaticsTarget::ai_stock: return "D";
    case StaticsTarget::augmentable_hc: return "HA";
    case StaticsTarget::cost_coeff: return "cost_k";
    case StaticsTarget::price: return "P";
    case StaticsTarget::wage_augmentable: return "wage_A";
  }
  return "unknown";
}

const char* to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::interior: return "interior";
    case ThresholdKind::always: return "always";
    case ThresholdKind::never: return "never";
  }
  return "unknown";
}

StaticsReport comparative_statics(const FirmState& fs, const ModelParams& p, StaticsTarget which, int cost_index,
                                  const SolverOptions& opts, double step) {
  if (which == StaticsTarget::wage_augmentable && p.labor_mode != LaborMode::optimized) {
    throw Error(ErrorCode::params, "the wage_A comparative static requires labor_mode=optimized");
  }
  if (which == StaticsTarget::cost_coeff && (cost_index < 0 || cost_index >= kDims)) {
    throw Error(ErrorCode::domain, fmt::format("cost index {} outside 0..4", cost_index));
  }
  StaticsReport rep;
  rep.target = which;
  rep.cost_index = cost_index;
  rep.step = step;

  auto perturbed = [&](double factor) {
    FirmState f = fs;
    ModelParams q = p;
    switch (which) {
      case StaticsTarget::ai_stock: f.ai_stock *= factor; break;
      case StaticsTarget::augmentable_hc: f.human_capital[2] *= factor; break;
      case StaticsTarget::cost_coeff: q.cost_coeffs[cost_index] *= factor; break;
      case StaticsTarget::price: q.output_price *= factor; break;
      case StaticsTarget::wage_augmentable: q.wages[2] *= factor; break;
    }
    return std::make_pair(f, q);
  };

  const OptimizationResult base = optimize_design(fs, p, opts);
  rep.w_base = base.w_star.values();
  auto [fs_up, p_up] = perturbed(1.0 + step);
  auto [fs_dn, p_dn] = perturbed(1.0 - step);
  const OptimizationResult up = optimize_design(fs_up, p_up, base.w_star, opts);
  const OptimizationResult dn = optimize_design(fs_dn, p_dn, base.w_star, opts);
  if (!base.converged || !up.converged || !dn.converged) {
    throw Error(ErrorCode::convergence, fmt::format("comparative statics for {}: re-optimization did not converge",
                                                    to_string(which)));
  }
  rep.delta = up.w_star.values() - dn.w_star.values();

  constexpr double kSignFloor = 1e-6;
  const int predicted = (which == StaticsTarget::cost_coeff || which == StaticsTarget::wage_augmentable) ? -1 : 1;
  rep.matches = true;
  for (int k = 0; k < kDims; ++k) {
    const auto i = static_cast<std::size_t>(k);
    rep.indeterminate[i] = base.boundary_flags[i] || up.boundary_flags[i] || dn.boundary_flags[i];
    rep.sign[i] = rep.delta[k] > kSignFloor ? 1 : (rep.delta[k] < -kSignFloor ? -1 : 0);
    rep.expected[i] = (which == StaticsTarget::cost_coeff && k != cost_index) ? 0 : predicted;
    if (rep.expected[i] != 0 && (rep.indeterminate[i] || rep.sign[i] != rep.expected[i])) rep.matches = false;
  }
  return rep;
}

}  // namespace auglab
