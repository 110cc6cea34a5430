#include "auglab/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace auglab {

double eval_phi0(double d, const ModelParams& p) {
  if (!(d >= 0.0)) throw Error(ErrorCode::domain, fmt::format("AI stock must be nonnegative, got {}", d));
  return 1.0 + (p.phi0_bound - 1.0) * (-std::expm1(-p.phi0_rate * d));
}

double eval_phi0_derivative(double d, const ModelParams& p) {
  if (!(d >= 0.0)) throw Error(ErrorCode::domain, fmt::format("AI stock must be nonnegative, got {}", d));
  return (p.phi0_bound - 1.0) * p.phi0_rate * std::exp(-p.phi0_rate * d);
}

double design_aggregator(const Vec5& w, const ModelParams& p) {
  double log_g = 0.0;
  for (int k = 0; k < kDims; ++k) log_g += p.g_exponents[k] * std::log1p(w[k]);
  return std::exp(log_g);
}

double composition_slope(double ha, const ModelParams& p) {
  return p.g_comp_base + p.g_comp_slope * ha / (1.0 + ha);
}

double composition_slope_derivative(double ha, const ModelParams& p) {
  return p.g_comp_slope / ((1.0 + ha) * (1.0 + ha));
}

namespace {

DesignMultiplier multiplier_from(double G, double ha, const ModelParams& p) {
  DesignMultiplier out;
  out.unclipped = 1.0 + composition_slope(ha, p) * (G - design_aggregator(p.w_auto, p));
  if (out.unclipped <= p.g_floor) {
    out.value = p.g_floor;
    out.clip = Clip::floor;
  } else if (out.unclipped >= p.g_ceiling) {
    out.value = p.g_ceiling;
    out.clip = Clip::ceiling;
  } else {
    out.value = out.unclipped;
  }
  return out;
}

}  // namespace

DesignMultiplier eval_g(const DesignVector& w, double ha, const ModelParams& p) {
  return multiplier_from(design_aggregator(w.values(), p), ha, p);
}

DesignGradient grad_g(const DesignVector& w, double ha, const ModelParams& p) {
  const double G = design_aggregator(w.values(), p);
  DesignGradient out;
  if (multiplier_from(G, ha, p).clip != Clip::none) {
    out.clipped = true;
    return out;
  }
  const double beta = composition_slope(ha, p);
  for (int k = 0; k < kDims; ++k) out.partials[k] = beta * p.g_exponents[k] * G / (1.0 + w[k]);
  return out;
}

OutputEval eval_output(const FirmState& fs, const DesignVector& w, const ModelParams& p) {
  OutputEval out;
  const double phi = eval_phi0(fs.ai_stock, p) * eval_g(w, fs.ha(), p).value;
  out.phi = phi;
  out.z1 = fs.capital_k;
  out.z2 = fs.labor[0] * fs.human_capital[0] + p.robot_rate * fs.robot_capital;
  out.z3 = fs.labor[1] * fs.human_capital[1] + phi * fs.labor[2] * fs.ha() * fs.ai_stock;
  const std::array<double, 3> z{out.z1, out.z2, out.z3};
  double log_y = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (z[static_cast<std::size_t>(i)] <= 0.0) {
      out.degenerate = true;
      out.output = 0.0;
      return out;
    }
    log_y += p.prod_shares[static_cast<std::size_t>(i)] * std::log(z[static_cast<std::size_t>(i)]);
  }
  out.output = std::exp(log_y);
  return out;
}

DesignCost eval_design_cost(const DesignVector& w, const ModelParams& p) {
  DesignCost out;
  for (int k = 0; k < kDims; ++k) {
    out.cost += 0.5 * p.cost_coeffs[k] * w[k] * w[k];
    out.gradient[k] = p.cost_coeffs[k] * w[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

bool PropertyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
}

namespace {

// Second differences at h = 1e-4 carry rounding noise of order 4 eps g / h^2 ~ 2e-7;
// signs are only trusted beyond this floor.
constexpr double kNoiseFloor = 1e-6;

double g_raw(const Vec5& w, double ha, const ModelParams& p) {
  return multiplier_from(design_aggregator(w, p), ha, p).value;
}

bool stencil_unclipped(const Vec5& w, double ha, double h, const ModelParams& p) {
  auto ok = [&](const Vec5& x, double a) { return multiplier_from(design_aggregator(x, p), a, p).clip == Clip::none; };
  for (int j = 0; j < kDims; ++j) {
    for (int k = j; k < kDims; ++k) {
      for (double sj : {-h, h}) {
        for (double sk : {-h, h}) {
          Vec5 x = w;
          x[j] += sj;
          x[k] += sk;
          if (!ok(x, ha)) return false;
        }
      }
    }
    for (double sa : {-h, h}) {
      for (double sk : {-h, h}) {
        Vec5 x = w;
        x[j] += sk;
        if (!ok(x, ha + sa)) return false;
      }
    }
  }
  return true;
}

void record(PropertyCheck& c, bool ok, double value, bool lower_is_worse) {
  ++c.evaluated;
  if (!ok) ++c.violations;
  if (c.evaluated == 1) c.worst = value;
  else c.worst = lower_is_worse ? std::min(c.worst, value) : std::max(c.worst, value);
}

}  // namespace

PropertyReport check_property_suite(const ModelParams& p, const SampleRegion& region) {
  p.validate();
  PropertyReport report;
  const double h = region.step;

  std::mt19937_64 rng(region.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<Vec5, double>> points;
  const int max_draws = 50 * region.points;
  for (int draw = 0; draw < max_draws && static_cast<int>(points.size()) < region.points; ++draw) {
    Vec5 w;
    for (int k = 0; k < kDims; ++k) w[k] = region.w_lo[k] + (region.w_hi[k] - region.w_lo[k]) * unit(rng);
    const double ha = region.ha_lo + (region.ha_hi - region.ha_lo) * unit(rng);
    if (!stencil_unclipped(w, ha, h, p)) {
      ++report.rejected_points;
      report.region_shrunk = true;
      continue;
    }
    points.emplace_back(w, ha);
  }

  PropertyCheck p1{"P1_range", true, 0, 0, 0.0, ""};
  PropertyCheck p2{"P2_monotonicity", true, 0, 0, 0.0, ""};
  PropertyCheck p3{"P3_concavity", true, 0, 0, 0.0, ""};
  PropertyCheck p4{"P4_cross_dimension_complementarity", true, 0, 0, 0.0, ""};
  PropertyCheck p5{"P5_design_composition_complementarity", true, 0, 0, 0.0, ""};

  const double g_min_ref = g_raw(p.w_min, region.ha_lo, p);
  for (const auto& [w, ha] : points) {
    // P1: g in (0, ceiling], neutral design exactly 1, minimal design below 1 and constant in H^A
    const double gv = g_raw(w, ha, p);
    record(p1, gv > 0.0 && gv <= p.g_ceiling, gv, true);
    const double g_auto = eval_g(DesignVector(p.w_auto, p.w_max), ha, p).value;
    record(p1, g_auto == 1.0, g_auto, true);
    const double g_min = g_raw(p.w_min, ha, p);
    record(p1, g_min < 1.0 && std::abs(g_min - g_min_ref) <= 1e-12, g_min, false);

    for (int k = 0; k < kDims; ++k) {
      Vec5 up = w, dn = w;
      up[k] += h;
      dn[k] -= h;
      const double gp = g_raw(up, ha, p), gm = g_raw(dn, ha, p);
      const double first = (gp - gm) / (2.0 * h);
      record(p2, first > 0.0, first, true);
      const double second = (gp - 2.0 * gv + gm) / (h * h);
      record(p3, second < -kNoiseFloor, second, false);
      const double cross_ha =
          (g_raw(up, ha + h, p) - g_raw(up, ha - h, p) - g_raw(dn, ha + h, p) + g_raw(dn, ha - h, p)) / (4.0 * h * h);
      record(p5, cross_ha > kNoiseFloor, cross_ha, true);
      for (int j = k + 1; j < kDims; ++j) {
        Vec5 pp = w, pm = w, mp = w, mm = w;
        pp[k] += h; pp[j] += h;
        pm[k] += h; pm[j] -= h;
        mp[k] -= h; mp[j] += h;
        mm[k] -= h; mm[j] -= h;
        const double cross = (g_raw(pp, ha, p) - g_raw(pm, ha, p) - g_raw(mp, ha, p) + g_raw(mm, ha, p)) / (4.0 * h * h);
        record(p4, cross > kNoiseFloor, cross, true);
      }
    }
  }

  for (PropertyCheck* c : {&p1, &p2, &p3, &p4, &p5}) {
    c->passed = c->violations == 0 && c->evaluated > 0 && static_cast<int>(points.size()) == region.points;
    c->detail = fmt::format("{} of {} sampled evaluations violated", c->violations, c->evaluated);
    report.checks.push_back(*c);
  }
  return report;
}

}  // namespace auglab
