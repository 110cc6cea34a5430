#include "auglab/model.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace auglab;
using testing::random_w;

TEST_CASE("technology multiplier") {
  const ModelParams p;
  CHECK(eval_phi0(0.0, p) == 1.0);
  CHECK(std::abs(eval_phi0(1e6, p) - 3.0) < 1e-9);
  const long double expected = 1.0L + 2.0L * (1.0L - std::exp(-1.0L));
  CHECK(std::abs(eval_phi0(2.0, p) - static_cast<double>(expected)) < 1e-15);
  CHECK_THROWS_AS(eval_phi0(-1e-12, p), Error);

  // bounded, increasing, concave on an increasing grid
  double prev = eval_phi0(0.0, p), prev_diff = INFINITY;
  for (int i = 1; i <= 200; ++i) {
    const double v = eval_phi0(0.05 * i, p);
    CHECK(v >= 1.0);
    CHECK(v < p.phi0_bound);
    CHECK(v - prev > 0.0);
    CHECK(v - prev < prev_diff);
    prev_diff = v - prev;
    prev = v;
  }
}

TEST_CASE("design multiplier is exactly neutral at the automation design") {
  const ModelParams p;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 100; ++i) CHECK(eval_g(DesignVector(p.w_auto), u(rng), p).value == 1.0);

  const DesignMultiplier gmin = eval_g(DesignVector(p.w_min), 2.0, p);
  CHECK(gmin.value < 1.0);
  // the floor binds at the minimal design, so the value does not move with H^A
  CHECK(gmin.clip == Clip::floor);
  CHECK(eval_g(DesignVector(p.w_min), 0.0, p).value == eval_g(DesignVector(p.w_min), 9.0, p).value);
}

TEST_CASE("design multiplier increases in every dimension") {
  const ModelParams p;
  for (int k = 0; k < kDims; ++k) {
    Vec5 w = Vec5::Constant(0.8);
    double prev = eval_g(DesignVector(w), 1.0, p).value;
    for (int i = 1; i < 100; ++i) {
      w[k] = 0.8 + 0.02 * i;
      const DesignMultiplier g = eval_g(DesignVector(w), 1.0, p);
      REQUIRE(g.clip == Clip::none);
      CHECK(g.value > prev);
      prev = g.value;
    }
  }
}

TEST_CASE("analytic gradient of g") {
  const ModelParams p;
  const DesignGradient at_auto = grad_g(DesignVector(p.w_auto), 1.0, p);
  CHECK_FALSE(at_auto.clipped);
  for (int k = 0; k < kDims; ++k) CHECK(at_auto.partials[k] > 0.0);

  const Vec5 w = Vec5::Constant(1.5);
  const DesignGradient g0 = grad_g(DesignVector(w), 0.0, p), g2 = grad_g(DesignVector(w), 2.0, p);
  for (int k = 0; k < kDims; ++k) CHECK(g2.partials[k] > g0.partials[k]);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uha(0.0, 5.0);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 50) {
    const Vec5 x = random_w(rng, 0.3, 3.0);
    const double ha = uha(rng);
    const DesignGradient g = grad_g(DesignVector(x), ha, p);
    if (g.clipped) continue;
    ++checked;
    for (int k = 0; k < kDims; ++k) {
      Vec5 up = x, dn = x;
      up[k] += h;
      dn[k] -= h;
      const double fd = (eval_g(DesignVector(up), ha, p).value - eval_g(DesignVector(dn), ha, p).value) / (2 * h);
      CHECK(testing::rel_err(g.partials[k], fd) < 1e-6);
    }
  }

  const DesignGradient clipped = grad_g(DesignVector(p.w_min), 1.0, p);
  CHECK(clipped.clipped);
  CHECK(clipped.partials.isZero());
}

TEST_CASE("production function") {
  const ModelParams p;
  FirmState fs;
  fs.ai_stock = 0.0;
  const OutputEval no_ai = eval_output(fs, DesignVector(p.w_auto), p);
  CHECK(no_ai.z3 == fs.labor[1] * fs.human_capital[1]);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int i = 0; i < 30; ++i) {
    FirmState s;
    s.capital_k = u(rng);
    s.robot_capital = u(rng);
    s.labor = {u(rng), u(rng), u(rng)};
    s.human_capital = {u(rng), u(rng), u(rng)};
    s.ai_stock = u(rng);
    const Vec5 w = random_w(rng, 0.0, 3.0);
    const OutputEval out = eval_output(s, DesignVector(w), p);

    double G = 1.0, G_auto = 1.0;
    for (int k = 0; k < kDims; ++k) {
      G *= std::pow(1.0 + w[k], p.g_exponents[k]);
      G_auto *= std::pow(2.0, p.g_exponents[k]);
    }
    const double beta = p.g_comp_base + p.g_comp_slope * s.ha() / (1.0 + s.ha());
    const double g = std::clamp(1.0 + beta * (G - G_auto), p.g_floor, p.g_ceiling);
    const double phi = (1.0 + 2.0 * (1.0 - std::exp(-0.5 * s.ai_stock))) * g;
    const double z1 = s.capital_k, z2 = s.labor[0] * s.human_capital[0] + p.robot_rate * s.robot_capital;
    const double z3 = s.labor[1] * s.human_capital[1] + phi * s.labor[2] * s.ha() * s.ai_stock;
    const double y = std::pow(z1, 0.3) * std::pow(z2, 0.2) * std::pow(z3, 0.5);
    CHECK(testing::rel_err(out.output, y) < 1e-13);

    // doubling every extensive input doubles each Z and therefore Y
    FirmState twice = s;
    twice.capital_k *= 2;
    twice.robot_capital *= 2;
    for (double& l : twice.labor) l *= 2;
    const double y2 = eval_output(twice, DesignVector(w), p).output;
    CHECK(std::abs(y2 - 2 * out.output) / y2 < 1e-12);
  }

  FirmState empty;
  empty.capital_k = 0.0;
  const OutputEval deg = eval_output(empty, DesignVector(p.w_auto), p);
  CHECK(deg.degenerate);
  CHECK(deg.output == 0.0);
}

TEST_CASE("design cost") {
  const ModelParams p;
  CHECK(eval_design_cost(DesignVector(Vec5::Zero()), p).cost == 0.0);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const Vec5 w = random_w(rng, 0.0, 4.5);
    double c = 0.0;
    for (int k = 0; k < kDims; ++k) c += 0.5 * p.cost_coeffs[k] * w[k] * w[k];
    const DesignCost dc = eval_design_cost(DesignVector(w), p);
    CHECK(testing::rel_err(dc.cost, c) < 1e-14);
    Vec5 more = w;
    more[i % kDims] += 0.1;
    CHECK(eval_design_cost(DesignVector(more), p).gradient[i % kDims] > dc.gradient[i % kDims]);
  }
}

TEST_CASE("property suite") {
  const ModelParams p;
  const PropertyReport rep = check_property_suite(p);
  CHECK(rep.all_passed());
  CHECK(rep.checks.size() == 5);
  // ten pairs per point for P4
  CHECK(rep.checks[3].evaluated == 10 * 200);

  ModelParams flat = p;
  flat.g_comp_slope = 0.0;
  const PropertyReport r2 = check_property_suite(flat);
  CHECK_FALSE(r2.checks[4].passed);
  CHECK(r2.checks[0].passed);
}

TEST_CASE("parameter invariants") {
  ModelParams p;
  p.g_exponents[2] = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = ModelParams{};
  p.g_exponents = Vec5::Constant(0.21);
  CHECK_THROWS_AS(p.validate(), Error);
  p = ModelParams{};
  p.prod_shares = {0.3, 0.2, 0.4};
  CHECK_THROWS_AS(p.validate(), Error);
  p = ModelParams{};
  p.w_min[0] = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = ModelParams{};
  p.g_floor = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_NOTHROW(ModelParams{}.validate());
  CHECK_THROWS_AS(DesignVector(Vec5::Constant(5.5)), Error);
  CHECK_THROWS_AS(DesignVector(Vec5::Constant(-0.1)), Error);
}

TEST_CASE("parameter files") {
  const Calibration def;
  const Calibration round = parse_calibration(format_calibration(def));
  CHECK(format_calibration(round) == format_calibration(def));

  // the shipped default file is the built-in calibration
  const Calibration shipped = load_calibration(testing::source_path("config/calibration-default.params"));
  CHECK(format_calibration(shipped) == format_calibration(def));

  try {
    parse_calibration("g_floor = 0.5\nmystery_knob = 3\n");
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::params);
    CHECK(std::string(e.what()).find("mystery_knob") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_calibration("g_floor = abc\n"), Error);
  CHECK_THROWS_AS(parse_calibration("g_exponents = 0.1,0.1\n"), Error);
  CHECK_THROWS_AS(load_calibration("/nonexistent/file.params"), Error);

  const Calibration c = parse_calibration("# comment\n\ndyn.beta3 = 4 # trailing\nfirm.human_capital = 1, 1, 3\n");
  CHECK(c.dynamics.beta3 == 4.0);
  CHECK(c.firm.ha() == 3.0);

  const Calibration trap = testing::trap_calibration();
  CHECK(trap.name == "trap-calibration");
  CHECK(trap.model.g_comp_slope == 2.0);
}
