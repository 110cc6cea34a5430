#include "auglab/dynamics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace auglab;

namespace {

const Calibration& trap_cal() {
  static const Calibration cal = testing::trap_calibration();
  return cal;
}

// The trap model takes a few seconds to build, so every test case shares one.
const EquilibriumSet& trap() {
  static const EquilibriumSet eq = [] {
    const Calibration& c = trap_cal();
    return find_steady_states(c.firm, c.model, c.dynamics, c.solver);
  }();
  return eq;
}

PolicyContext trap_context() {
  const Calibration& c = trap_cal();
  return PolicyContext{c.firm, c.model, c.dynamics, c.solver, &trap(), 1e-3};
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace

TEST_CASE("isotonic repair") {
  const std::vector<double> fit = isotonic_fit({1, 3, 2, 4});
  REQUIRE(fit.size() == 4);
  CHECK(fit[0] == 1.0);
  CHECK(fit[1] == 2.5);
  CHECK(fit[2] == 2.5);
  CHECK(fit[3] == 4.0);
  CHECK(isotonic_fit({3, 2, 1}) == std::vector<double>{2, 2, 2});
  CHECK(isotonic_fit({1, 2, 3}) == std::vector<double>{1, 2, 3});
  CHECK(isotonic_fit({}).empty());

  const std::vector<Vec5> solved{Vec5::Constant(1), Vec5::Constant(3), Vec5::Constant(2), Vec5::Constant(4)};
  const WStarMap m({0, 1, 2, 3}, solved);
  CHECK(m.repaired_nodes() == 2);
  CHECK(m(1.5)[0] == 2.5);
  CHECK(m(0.5)[0] == 1.75);
  CHECK_THROWS_AS(m(3.5), Error);
  CHECK_THROWS_AS(m(-0.1), Error);
}

TEST_CASE("design map on the default calibration") {
  const Calibration c;
  const std::vector<double> grid = linspace(0.0, 6.0, 121);
  const WStarMap map = build_w_star_map(c.firm, c.model, grid, c.solver);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (map.repaired_nodes() == 0) CHECK(map(grid[i]) == map.solved()[i]);
    if (i > 0)
      for (int k = 0; k < kDims; ++k) CHECK(map.values()[i][k] >= map.values()[i - 1][k]);
  }
  CHECK(map.repaired_nodes() == 0);

  // per-dimension crossings of W^auto sit at the threshold shares
  const ThresholdResult t = find_theta_star(c.firm, c.model, c.solver);
  for (int k = 0; k < kDims; ++k) {
    const double s = t.per_dimension[k].share;
    const double ha = s * c.firm.hc() / (1.0 - s);
    CHECK(std::abs(map(ha)[k] - c.model.w_auto[k]) < 2e-3);
  }

  CHECK(psi(0.0, c.dynamics, map) > 0.0);
  CHECK(psi(6.0, c.dynamics, map) < 0.0);
}

TEST_CASE("trap calibration has three steady states") {
  const EquilibriumSet& eq = trap();
  REQUIRE(eq.equilibria.size() == 3);
  CHECK(eq.map_converged);
  const Stability expected[] = {Stability::stable, Stability::unstable, Stability::stable};
  for (std::size_t i = 0; i < 3; ++i) {
    const Equilibrium& e = eq.equilibria[i];
    CHECK(e.stability == expected[i]);
    CHECK((e.psi_slope < 0.0) == (e.stability == Stability::stable));
    CHECK((e.jacobian_eigen_max_real < 0.0) == (e.stability == Stability::stable));
    CHECK(std::abs(psi(e.ha, trap_cal().dynamics, eq.map)) < 1e-8);
    if (i > 0) CHECK(e.ha > eq.equilibria[i - 1].ha);
  }
  REQUIRE(eq.unstable_threshold.has_value());
  CHECK(*eq.unstable_threshold == eq.equilibria[1].ha);

  // independent sign scan on a much denser grid
  const DynamicsParams& dp = trap_cal().dynamics;
  int changes = 0;
  double prev = psi(eq.map.lo(), dp, eq.map);
  for (int i = 1; i <= 20000; ++i) {
    const double v = psi(eq.map.lo() + (eq.map.hi() - eq.map.lo()) * i / 20000.0, dp, eq.map);
    if ((v > 0) != (prev > 0)) ++changes;
    prev = v;
  }
  CHECK(changes == 3);
  // Psi(lo) > 0 > Psi(hi) forces an odd count
  CHECK(psi(eq.map.lo(), dp, eq.map) > 0.0);
  CHECK(psi(eq.map.hi(), dp, eq.map) < 0.0);
  CHECK(eq.equilibria.size() % 2 == 1);
}

TEST_CASE("strong education investment leaves one high steady state") {
  // the high state moves far out, so this uses a wider and coarser map
  const Calibration& c = trap_cal();
  const WStarMap wide = build_w_star_map(c.firm, c.model, linspace(0.0, 120.0, 1201), c.solver);
  DynamicsParams dp = c.dynamics;
  dp.edu_investment *= 3.0;
  SteadyStateOptions o;
  o.hi = 120.0;
  const EquilibriumSet eq = classify_steady_states(dp, wide, o);
  REQUIRE(eq.equilibria.size() == 1);
  CHECK(eq.equilibria[0].stability == Stability::stable);
  CHECK(eq.equilibria[0].ha > trap().equilibria[2].ha);
  CHECK_FALSE(eq.unstable_threshold.has_value());
}

TEST_CASE("trajectories") {
  const EquilibriumSet& eq = trap();
  const DynamicsParams& dp = trap_cal().dynamics;

  SUBCASE("resting at a stable equilibrium") {
    for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
      const Equilibrium& e = eq.equilibria[i];
      const Trajectory tr = integrate_trajectory(e.w, e.ha, dp, eq.map);
      double drift = 0.0;
      for (std::size_t j = 0; j < tr.t.size(); ++j)
        drift = std::max({drift, std::abs(tr.ha[j] - e.ha), (tr.w[j] - e.w).cwiseAbs().maxCoeff()});
      CHECK(drift < 1e-8);
    }
  }

  SUBCASE("long-run limits are the steady states") {
    for (double ha0 : {0.3, 2.0, 8.0}) {
      IntegrationOptions o;
      o.record_every = 1 << 30;
      const Trajectory tr = integrate_trajectory(eq.map(ha0), ha0, dp, eq.map, o);
      const auto idx = eq.nearest(tr.ha.back(), 1e-4);
      REQUIRE(idx.has_value());
      CHECK(eq.equilibria[*idx].stability == Stability::stable);
    }
  }

  SUBCASE("basin dichotomy") {
    const double hu = *eq.unstable_threshold;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> below(eq.map.lo(), hu * 0.99), above(hu * 1.01, eq.map.hi());
    IntegrationOptions o;
    o.record_every = 1 << 30;
    for (int i = 0; i < 20; ++i) {
      for (bool up : {false, true}) {
        const double ha0 = up ? above(rng) : below(rng);
        const Trajectory tr = integrate_trajectory(eq.map(ha0), ha0, dp, eq.map, o);
        const Equilibrium& target = eq.equilibria[up ? 2 : 0];
        CHECK(std::abs(tr.ha.back() - target.ha) < 1e-3);
        CHECK((tr.w.back() - target.w).cwiseAbs().maxCoeff() < 1e-3);
      }
    }
  }

  SUBCASE("step halving") {
    const double ha0 = 1.1 * *eq.unstable_threshold;
    IntegrationOptions coarse, fine;
    coarse.record_every = fine.record_every = 1 << 30;
    coarse.horizon = fine.horizon = 50.0;
    coarse.time_step = dp.time_step;
    fine.time_step = dp.time_step / 2;
    const Trajectory a = integrate_trajectory(eq.map(ha0), ha0, dp, eq.map, coarse);
    const Trajectory b = integrate_trajectory(eq.map(ha0), ha0, dp, eq.map, fine);
    CHECK(a.t.back() == b.t.back());
    CHECK(std::abs(a.ha.back() - b.ha.back()) < 1e-6);
    CHECK((a.w.back() - b.w.back()).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("oversized step is rejected") {
    IntegrationOptions o;
    o.time_step = 1.01 * max_time_step(dp);
    try {
      integrate_trajectory(eq.map(1.0), 1.0, dp, eq.map, o);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::params);
    }
  }
}

TEST_CASE("policy experiments from the trap") {
  const EquilibriumSet& eq = trap();
  const PolicyContext ctx = trap_context();
  const Equilibrium& low = eq.equilibria[0];

  for (PolicyKind k : {PolicyKind::edu_push, PolicyKind::design_subsidy, PolicyKind::regulatory_min}) {
    const PolicyOutcome o = policy_experiment(k, neutral_magnitude(k), 10.0, low.w, low.ha, ctx);
    CHECK_FALSE(o.escaped);
    CHECK(o.settled);
    CHECK(o.final_equilibrium == std::optional<std::size_t>(0));
  }

  const MinimalMagnitude mm = minimal_escape_magnitude(PolicyKind::edu_push, 10.0, low.w, low.ha, ctx, 5.0);
  REQUIRE(mm.found);
  CHECK(mm.magnitude > 1.0);
  CHECK(mm.hi - mm.lo <= 1e-3);
  CHECK(policy_experiment(PolicyKind::edu_push, mm.hi, 10.0, low.w, low.ha, ctx).escaped);
  CHECK_FALSE(policy_experiment(PolicyKind::edu_push, mm.lo, 10.0, low.w, low.ha, ctx).escaped);

  // a floor above the design at the unstable state pushes the economy over
  const Vec5 wu = eq.equilibria[1].w;
  const double level = wu.cwiseQuotient(trap_cal().model.w_auto).maxCoeff();
  CHECK(policy_experiment(PolicyKind::regulatory_min, 1.05 * level, 10.0, low.w, low.ha, ctx).escaped);
  // at exactly that level the approach to the threshold is slow but still gets there
  CHECK(policy_experiment(PolicyKind::regulatory_min, level, 50.0, low.w, low.ha, ctx).escaped);
  CHECK_FALSE(policy_experiment(PolicyKind::regulatory_min, 0.5 * level, 10.0, low.w, low.ha, ctx).escaped);

  CHECK_THROWS_AS(policy_experiment(PolicyKind::edu_push, -1.0, 10.0, low.w, low.ha, ctx), Error);
}
