#include "auglab/firm.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace auglab;
using testing::random_w;
using testing::rel_err;

namespace {

double profit_by_hand(const FirmState& s, const Vec5& w, const ModelParams& p) {
  double G = 1.0, G_auto = 1.0;
  for (int k = 0; k < kDims; ++k) {
    G *= std::pow(1.0 + w[k], p.g_exponents[k]);
    G_auto *= std::pow(1.0 + p.w_auto[k], p.g_exponents[k]);
  }
  const double beta = p.g_comp_base + p.g_comp_slope * s.ha() / (1.0 + s.ha());
  const double g = std::clamp(1.0 + beta * (G - G_auto), p.g_floor, p.g_ceiling);
  const double phi = (1.0 + (p.phi0_bound - 1.0) * (1.0 - std::exp(-p.phi0_rate * s.ai_stock))) * g;
  const double z1 = s.capital_k, z2 = s.labor[0] * s.human_capital[0] + p.robot_rate * s.robot_capital;
  const double z3 = s.labor[1] * s.human_capital[1] + phi * s.labor[2] * s.ha() * s.ai_stock;
  const double y = std::pow(z1, p.prod_shares[0]) * std::pow(z2, p.prod_shares[1]) * std::pow(z3, p.prod_shares[2]);
  double cost = p.ai_unit_cost * s.ai_stock;
  for (int k = 0; k < kDims; ++k) cost += 0.5 * p.cost_coeffs[k] * w[k] * w[k];
  for (int j = 0; j < 3; ++j) cost += p.wages[j] * s.labor[j];
  return p.output_price * y - cost;
}

// Coarse global grid, then a 0.05 grid around the best coarse node.
double grid_oracle(const FirmState& fs, const ModelParams& p, double coarse, double coarse_hi, double fine_radius) {
  auto search = [&](const Vec5& lo, const Vec5& hi, double step, Vec5& best_w) {
    double best = -INFINITY;
    std::array<int, kDims> n{};
    for (int k = 0; k < kDims; ++k) n[k] = static_cast<int>(std::lround((hi[k] - lo[k]) / step)) + 1;
    std::array<int, kDims> i{};
    while (true) {
      Vec5 w;
      for (int k = 0; k < kDims; ++k) w[k] = lo[k] + step * i[k];
      const double v = profit(fs, DesignVector(w, p.w_max), p);
      if (v > best) {
        best = v;
        best_w = w;
      }
      int k = 0;
      while (k < kDims && ++i[k] == n[k]) i[k++] = 0;
      if (k == kDims) break;
    }
    return best;
  };
  Vec5 best_w;
  search(Vec5::Zero(), Vec5::Constant(coarse_hi), coarse, best_w);
  Vec5 lo, hi;
  for (int k = 0; k < kDims; ++k) {
    lo[k] = std::max(0.0, best_w[k] - fine_radius);
    hi[k] = std::min(p.w_max, best_w[k] + fine_radius);
  }
  return search(lo, hi, 0.05, best_w);
}

}  // namespace

TEST_CASE("profit matches term-by-term recomputation") {
  const ModelParams p;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int i = 0; i < 30; ++i) {
    FirmState s;
    s.capital_k = u(rng);
    s.robot_capital = u(rng);
    s.labor = {u(rng), u(rng), u(rng)};
    s.human_capital = {u(rng), u(rng), u(rng)};
    s.ai_stock = u(rng);
    const Vec5 w = random_w(rng, 0.0, 4.0);
    CHECK(rel_err(profit(s, DesignVector(w), p), profit_by_hand(s, w, p)) < 1e-12);
  }
}

TEST_CASE("profit corner cases") {
  const ModelParams p;
  FirmState s;
  s.labor = {0.0, 0.0, 0.0};
  s.ai_stock = 0.0;
  CHECK(profit(s, DesignVector(Vec5::Zero()), p) == 0.0);

  const FirmState base;
  const DesignVector w(Vec5::Constant(1.2));
  ModelParams dear = p;
  dear.ai_unit_cost *= 1.5;
  CHECK(profit(base, w, dear) < profit(base, w, p));
}

TEST_CASE("profit gradients against finite differences") {
  const ModelParams p;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uha(0.2, 5.0);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 50) {
    const Vec5 w = random_w(rng, 0.3, 3.0);
    const FirmState s = FirmState{}.with_ha(uha(rng));
    const ProfitGradient g = profit_gradient_w(s, DesignVector(w), p);
    if (g.clipped) continue;
    ++checked;
    for (int k = 0; k < kDims; ++k) {
      Vec5 up = w, dn = w;
      up[k] += h;
      dn[k] -= h;
      const double fd = (profit(s, DesignVector(up), p) - profit(s, DesignVector(dn), p)) / (2 * h);
      CHECK(std::abs(g.gradient[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      const double mr = marginal_return(DesignVector(w), k, s, p);
      CHECK(std::abs(mr - (g.gradient[k] + p.cost_coeffs[k] * w[k])) < 1e-12 * std::max(1.0, mr));
    }
    FirmState up = s, dn = s;
    up.ai_stock += h;
    dn.ai_stock -= h;
    const double fd_d = (profit(up, DesignVector(w), p) - profit(dn, DesignVector(w), p)) / (2 * h);
    CHECK(std::abs(profit_gradient_d(s, DesignVector(w), p) - fd_d) <= 1e-5 * std::max(1.0, std::abs(fd_d)));
  }

  FirmState no_aug;
  no_aug.labor[2] = 0.0;
  const Vec5 w = Vec5::Constant(1.3);
  const ProfitGradient g = profit_gradient_w(no_aug, DesignVector(w), p);
  for (int k = 0; k < kDims; ++k) CHECK(g.gradient[k] == doctest::Approx(-p.cost_coeffs[k] * w[k]).epsilon(1e-14));
}

TEST_CASE("marginal return") {
  const ModelParams p;
  const DesignVector w(Vec5::Constant(1.1));
  const FirmState s;
  for (int k = 0; k < kDims; ++k) {
    CHECK(marginal_return(w, k, s.with_ha(2.5), p) > marginal_return(w, k, s.with_ha(2.0), p));
    FirmState no_ai = s;
    no_ai.ai_stock = 0.0;
    CHECK(marginal_return(w, k, no_ai, p) == 0.0);
  }
}

TEST_CASE("optimized labor demand satisfies the wage conditions") {
  ModelParams p;
  p.labor_mode = LaborMode::optimized;
  const FirmState s;
  const DesignVector w(Vec5::Constant(1.05));
  const auto labor = labor_demand(s, w, p);
  CHECK(labor[1] == s.labor[1]);
  for (int j : {0, 2}) {
    REQUIRE(labor[j] > 0.0);
    const double h = 1e-6 * labor[j];
    FirmState up = s, dn = s;
    up.labor = labor;
    dn.labor = labor;
    up.labor[j] += h;
    dn.labor[j] -= h;
    ModelParams fixed = p;
    fixed.labor_mode = LaborMode::fixed;
    const double mp = (eval_output(up, w, fixed).output - eval_output(dn, w, fixed).output) / (2 * h);
    CHECK(std::abs(p.output_price * mp - p.wages[j]) < 1e-6);
  }
  const OptimizationResult r = optimize_design(s, p);
  CHECK(r.converged);
  REQUIRE(r.labor_star.has_value());
  CHECK_FALSE(optimize_design(s, ModelParams{}).labor_star.has_value());
}

TEST_CASE("optimizer: regimes against the grid oracle") {
  const ModelParams p;
  for (double share : {0.9, 0.1}) {
    const FirmState s = FirmState{}.with_share(share);
    const OptimizationResult r = optimize_design(s, p);
    REQUIRE(r.converged);
    for (int k = 0; k < kDims; ++k) {
      if (share > 0.5) CHECK(r.w_star[k] > p.w_auto[k]);
      else CHECK(r.w_star[k] < p.w_auto[k]);
      if (!r.boundary_flags[k]) CHECK(std::abs(r.foc_residual[k]) <= 1e-8);
    }
    const double oracle = grid_oracle(s, p, 0.25, 3.0, 0.25);
    CHECK(r.profit >= oracle - 1e-6 * std::abs(oracle));

    // human-centricity predicate at the optimum
    const DesignGradient dg = grad_g(r.w_star, s.ha(), p);
    if (!dg.clipped)
      for (int k = 0; k < kDims; ++k) CHECK(dg.partials[k] > 0.0);
  }
}

TEST_CASE("optimizer: prohibitive costs push W* to zero") {
  ModelParams p;
  p.cost_coeffs *= 1e6;
  const OptimizationResult r = optimize_design(FirmState{}, p);
  CHECK(r.converged);
  CHECK(r.w_star.values().maxCoeff() < 1e-4);
}

TEST_CASE("optimizer is bitwise deterministic") {
  const ModelParams p;
  const FirmState s = FirmState{}.with_share(0.7);
  SolverOptions o;
  o.seed = 42;
  const OptimizationResult a = optimize_design(s, p, o), b = optimize_design(s, p, o);
  for (int k = 0; k < kDims; ++k) CHECK(a.w_star[k] == b.w_star[k]);
  CHECK(a.profit == b.profit);
  CHECK(a.iterations == b.iterations);

  const auto starts = multistart_points(p, p.w_auto, o);
  CHECK(starts.size() == 8);
  CHECK(starts[0] == p.w_auto);
}

TEST_CASE("threshold against a dense share scan") {
  const ModelParams p;
  const FirmState tmpl;
  const ThresholdResult t = find_theta_star(tmpl, p);
  REQUIRE(t.kind == ThresholdKind::interior);
  CHECK(t.theta_star > 0.0);
  CHECK(t.theta_star < 1.0);
  CHECK(t.bracket_hi - t.bracket_lo <= t.tolerance);
  double mx = 0.0;
  for (const auto& d : t.per_dimension) mx = std::max(mx, d.share);
  CHECK(t.theta_star == mx);

  // first 0.01 grid share at which W* >= W^auto in every component
  double first = -1.0;
  bool seen = false;
  for (int i = 1; i < 100; ++i) {
    const double s = 0.01 * i;
    const OptimizationResult r = optimize_design(tmpl.with_share(s), p);
    bool above = true;
    for (int k = 0; k < kDims; ++k) above = above && r.w_star[k] >= p.w_auto[k];
    if (above && !seen) {
      first = s;
      seen = true;
    }
    // once human-centric, always human-centric further up
    if (seen) CHECK(above);
  }
  REQUIRE(first > 0.0);
  CHECK(t.theta_star > first - 0.01 - 1e-4);
  CHECK(t.theta_star <= first + 1e-4);
}

TEST_CASE("threshold degenerate cases") {
  const FirmState tmpl;
  ModelParams cheap;
  cheap.cost_coeffs *= 1e-6;
  const ThresholdResult low = find_theta_star(tmpl, cheap);
  CHECK(low.theta_star < 0.01);

  FirmState no_aug;
  no_aug.labor[2] = 0.0;
  const ThresholdResult never = find_theta_star(no_aug, ModelParams{});
  CHECK(never.kind == ThresholdKind::never);
}

TEST_CASE("comparative statics signs") {
  const ModelParams p;
  const FirmState s;
  for (StaticsTarget t : {StaticsTarget::ai_stock, StaticsTarget::augmentable_hc, StaticsTarget::price}) {
    const StaticsReport r = comparative_statics(s, p, t);
    CHECK_MESSAGE(r.matches, to_string(t));
    for (int k = 0; k < kDims; ++k) CHECK(r.sign[k] == 1);
  }
  for (int k = 0; k < kDims; ++k) {
    const StaticsReport r = comparative_statics(s, p, StaticsTarget::cost_coeff, k);
    CHECK(r.matches);
    CHECK(r.sign[k] == -1);
    // off-diagonal responses come only through complementarity and stay an order smaller
    for (int j = 0; j < kDims; ++j)
      if (j != k) CHECK(std::abs(r.delta[j]) < 0.25 * std::abs(r.delta[k]));
  }
  CHECK_THROWS_AS(comparative_statics(s, p, StaticsTarget::wage_augmentable), Error);

  ModelParams opt = p;
  opt.labor_mode = LaborMode::optimized;
  const StaticsReport wage = comparative_statics(s, opt, StaticsTarget::wage_augmentable);
  CHECK(wage.matches);
  for (int k = 0; k < kDims; ++k) CHECK(wage.sign[k] == -1);
}
