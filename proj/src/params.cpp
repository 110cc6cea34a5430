#include "auglab/params.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace auglab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::params: return "params";
    case ErrorCode::input: return "input";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::inconsistency: return "inconsistency";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

DesignVector::DesignVector(const Vec5& w, double w_max) : w_(w), w_max_(w_max) {
  for (int k = 0; k < kDims; ++k) {
    if (!(w[k] >= 0.0 && w[k] <= w_max)) {
      throw Error(ErrorCode::domain,
                  fmt::format("design component W{} = {} outside [0, {}]", k + 1, w[k], w_max));
    }
  }
}

DesignVector DesignVector::constant(double value, double w_max) {
  return DesignVector(Vec5::Constant(value), w_max);
}

const char* to_string(LaborMode mode) {
  return mode == LaborMode::fixed ? "fixed" : "optimized";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::params, what);
}

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

void ModelParams::validate() const {
  require(phi0_bound > 1.0, "phi0_bound must exceed 1");
  require(phi0_rate > 0.0, "phi0_rate must be positive");
  require(g_floor > 0.0 && g_floor < 1.0, "g_floor must lie in (0,1)");
  require(g_ceiling >= 1.0, "g_ceiling must be >= 1");
  for (int k = 0; k < kDims; ++k) {
    require(in_open_unit(g_exponents[k]), fmt::format("g_exponents[{}] must lie in (0,1)", k));
    require(cost_coeffs[k] > 0.0, fmt::format("cost_coeffs[{}] must be positive", k));
    require(w_min[k] >= 0.0 && w_min[k] < w_auto[k], fmt::format("w_min[{}] must be >= 0 and < w_auto", k));
    require(w_auto[k] <= w_max, fmt::format("w_auto[{}] must not exceed w_max", k));
  }
  require(g_exponents.sum() < 1.0, "sum of g_exponents must be < 1");
  require(g_comp_base > 0.0, "g_comp_base must be positive");
  require(g_comp_slope >= 0.0, "g_comp_slope must be nonnegative");
  require(w_max > 0.0, "w_max must be positive");
  require(ai_unit_cost >= 0.0, "ai_unit_cost must be nonnegative");
  require(output_price > 0.0, "output_price must be positive");
  double share_sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    require(in_open_unit(prod_shares[j]), fmt::format("prod_shares[{}] must lie in (0,1)", j));
    require(wages[j] >= 0.0, fmt::format("wages[{}] must be nonnegative", j));
    share_sum += prod_shares[j];
  }
  require(std::abs(share_sum - 1.0) <= 1e-12, "prod_shares must sum to 1");
  require(robot_rate >= 0.0, "robot_rate must be nonnegative");
}

FirmState FirmState::with_ha(double ha) const {
  FirmState out = *this;
  out.human_capital[2] = ha;
  return out;
}

FirmState FirmState::with_share(double share) const {
  if (!(share >= 0.0 && share < 1.0)) {
    throw Error(ErrorCode::domain, fmt::format("augmentable share {} outside [0,1)", share));
  }
  return with_ha(share * hc() / (1.0 - share));
}

void FirmState::validate() const {
  require(capital_k >= 0.0 && std::isfinite(capital_k), "capital must be finite and nonnegative");
  require(robot_capital >= 0.0 && std::isfinite(robot_capital), "robot capital must be finite and nonnegative");
  require(ai_stock >= 0.0 && std::isfinite(ai_stock), "ai_stock must be finite and nonnegative");
  for (int j = 0; j < 3; ++j) {
    require(labor[j] >= 0.0 && std::isfinite(labor[j]), "labor counts must be finite and nonnegative");
    require(human_capital[j] >= 0.0 && std::isfinite(human_capital[j]),
            "human capital must be finite and nonnegative");
  }
}

ExternalityParams ExternalityParams::none() {
  ExternalityParams xp;
  xp.mobility_rate = 0.0;
  xp.spillover_rate = 0.0;
  xp.health_cost_share = 1.0;
  return xp;
}

void ExternalityParams::validate() const {
  auto rate = [](double x) { return x >= 0.0 && x <= 1.0; };
  require(rate(mobility_rate), "ext.mobility_rate must lie in [0,1]");
  require(rate(spillover_rate), "ext.spillover_rate must lie in [0,1]");
  require(rate(health_cost_share), "ext.health_cost_share must lie in [0,1]");
  require(mobility_value >= 0.0 && skill_gain_coeff >= 0.0 && spillover_scale >= 0.0 && health_coeff >= 0.0 &&
              competitor_count >= 0.0 && total_workers >= 0.0,
          "externality coefficients must be nonnegative");
  require(skill_gain_exponent > 0.0 && skill_gain_exponent <= 1.0, "ext.skill_gain_exponent must lie in (0,1]");
}

double DynamicsParams::accumulation(const Vec5& w) const {
  return beta0 * (1.0 + beta3 * w[2] + beta4 * w[3]);
}

double DynamicsParams::depreciation(const Vec5& w) const {
  return delta0 / (1.0 + delta_slope * w.mean());
}

Vec5 DynamicsParams::accumulation_gradient(const Vec5&) const {
  Vec5 g = Vec5::Zero();
  g[2] = beta0 * beta3;
  g[3] = beta0 * beta4;
  return g;
}

Vec5 DynamicsParams::depreciation_gradient(const Vec5& w) const {
  const double denom = 1.0 + delta_slope * w.mean();
  return Vec5::Constant(-delta0 * delta_slope / (kDims * denom * denom));
}

void DynamicsParams::validate() const {
  require(adjust_speed > 0.0, "dyn.adjust_speed must be positive");
  require(edu_investment > 0.0, "dyn.edu_investment must be positive");
  require(beta0 > 0.0 && beta3 >= 0.0 && beta4 >= 0.0, "accumulation coefficients must be beta0 > 0, beta3/4 >= 0");
  require(delta0 > 0.0 && delta_slope >= 0.0, "depreciation needs delta0 > 0 and delta_slope >= 0");
  require(time_step > 0.0, "dyn.time_step must be positive");
  require(horizon > 0.0, "dyn.horizon must be positive");
  require(ha_max > 0.0, "dyn.ha_max must be positive");
}

void EnergyParams::validate() const {
  require(base_rate > 0.0, "energy.base_rate must be positive");
  require(transparency_rate >= 0.0, "energy.transparency_rate must be nonnegative");
  require(budget > 0.0, "energy.budget must be positive");
}

void Calibration::validate() const {
  model.validate();
  firm.validate();
  externality.validate();
  dynamics.validate();
  energy.validate();
  require(solver.grad_tol > 0.0 && solver.max_iter > 0 && solver.starts >= 2,
          "solver options need grad_tol > 0, max_iter > 0, starts >= 2");
}

// ---------------------------------------------------------------------------
// key=value format

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::params, fmt::format("key '{}': cannot parse '{}' as a number", key, t));
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text, std::size_t n) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.size() != n) {
    throw Error(ErrorCode::params, fmt::format("key '{}': expected {} values, got {}", key, n, out.size()));
  }
  return out;
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

template <class Vec>
std::string fmt_list(const Vec& v, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ",";
    s += fmt_num(v[static_cast<int>(i)]);
  }
  return s;
}

struct Field {
  const char* key;
  std::function<void(Calibration&, const std::string&)> set;
  std::function<std::string(const Calibration&)> get;
};

template <class Getter>
Field scalar(const char* key, Getter ref) {
  return Field{key,
               [key, ref](Calibration& c, const std::string& v) { ref(c) = parse_double(key, v); },
               [ref](const Calibration& c) { return fmt_num(ref(const_cast<Calibration&>(c))); }};
}

template <class Getter>
Field vec5(const char* key, Getter ref) {
  return Field{key,
               [key, ref](Calibration& c, const std::string& v) {
                 auto vals = parse_list(key, v, kDims);
                 for (int k = 0; k < kDims; ++k) ref(c)[k] = vals[static_cast<std::size_t>(k)];
               },
               [ref](const Calibration& c) { return fmt_list(ref(const_cast<Calibration&>(c)), kDims); }};
}

template <class Getter>
Field arr3(const char* key, Getter ref) {
  return Field{key,
               [key, ref](Calibration& c, const std::string& v) {
                 auto vals = parse_list(key, v, 3);
                 for (std::size_t j = 0; j < 3; ++j) ref(c)[j] = vals[j];
               },
               [ref](const Calibration& c) {
                 const auto& a = ref(const_cast<Calibration&>(c));
                 return fmt::format("{},{},{}", fmt_num(a[0]), fmt_num(a[1]), fmt_num(a[2]));
               }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"name", [](Calibration& c, const std::string& v) { c.name = trim(v); },
            [](const Calibration& c) { return c.name; }},
      Field{"version",
            [](Calibration& c, const std::string& v) { c.version = static_cast<int>(parse_double("version", v)); },
            [](const Calibration& c) { return std::to_string(c.version); }},
      scalar("phi0_bound", [](Calibration& c) -> double& { return c.model.phi0_bound; }),
      scalar("phi0_rate", [](Calibration& c) -> double& { return c.model.phi0_rate; }),
      scalar("g_floor", [](Calibration& c) -> double& { return c.model.g_floor; }),
      scalar("g_ceiling", [](Calibration& c) -> double& { return c.model.g_ceiling; }),
      vec5("g_exponents", [](Calibration& c) -> Vec5& { return c.model.g_exponents; }),
      scalar("g_comp_base", [](Calibration& c) -> double& { return c.model.g_comp_base; }),
      scalar("g_comp_slope", [](Calibration& c) -> double& { return c.model.g_comp_slope; }),
      vec5("w_auto", [](Calibration& c) -> Vec5& { return c.model.w_auto; }),
      vec5("w_min", [](Calibration& c) -> Vec5& { return c.model.w_min; }),
      scalar("w_max", [](Calibration& c) -> double& { return c.model.w_max; }),
      vec5("cost_coeffs", [](Calibration& c) -> Vec5& { return c.model.cost_coeffs; }),
      scalar("ai_unit_cost", [](Calibration& c) -> double& { return c.model.ai_unit_cost; }),
      scalar("output_price", [](Calibration& c) -> double& { return c.model.output_price; }),
      arr3("wages", [](Calibration& c) -> std::array<double, 3>& { return c.model.wages; }),
      arr3("prod_shares", [](Calibration& c) -> std::array<double, 3>& { return c.model.prod_shares; }),
      scalar("robot_rate", [](Calibration& c) -> double& { return c.model.robot_rate; }),
      Field{"labor_mode",
            [](Calibration& c, const std::string& v) {
              const std::string t = trim(v);
              if (t == "fixed") c.model.labor_mode = LaborMode::fixed;
              else if (t == "optimized") c.model.labor_mode = LaborMode::optimized;
              else throw Error(ErrorCode::params, fmt::format("key 'labor_mode': unknown mode '{}'", t));
            },
            [](const Calibration& c) { return std::string(to_string(c.model.labor_mode)); }},
      scalar("firm.capital", [](Calibration& c) -> double& { return c.firm.capital_k; }),
      scalar("firm.robot_capital", [](Calibration& c) -> double& { return c.firm.robot_capital; }),
      arr3("firm.labor", [](Calibration& c) -> std::array<double, 3>& { return c.firm.labor; }),
      arr3("firm.human_capital", [](Calibration& c) -> std::array<double, 3>& { return c.firm.human_capital; }),
      scalar("firm.ai_stock", [](Calibration& c) -> double& { return c.firm.ai_stock; }),
      scalar("ext.mobility_rate", [](Calibration& c) -> double& { return c.externality.mobility_rate; }),
      scalar("ext.mobility_value", [](Calibration& c) -> double& { return c.externality.mobility_value; }),
      scalar("ext.skill_gain_coeff", [](Calibration& c) -> double& { return c.externality.skill_gain_coeff; }),
      scalar("ext.skill_gain_exponent", [](Calibration& c) -> double& { return c.externality.skill_gain_exponent; }),
      scalar("ext.spillover_rate", [](Calibration& c) -> double& { return c.externality.spillover_rate; }),
      scalar("ext.competitor_count", [](Calibration& c) -> double& { return c.externality.competitor_count; }),
      scalar("ext.spillover_scale", [](Calibration& c) -> double& { return c.externality.spillover_scale; }),
      scalar("ext.health_cost_share", [](Calibration& c) -> double& { return c.externality.health_cost_share; }),
      scalar("ext.health_coeff", [](Calibration& c) -> double& { return c.externality.health_coeff; }),
      scalar("ext.total_workers", [](Calibration& c) -> double& { return c.externality.total_workers; }),
      scalar("dyn.adjust_speed", [](Calibration& c) -> double& { return c.dynamics.adjust_speed; }),
      scalar("dyn.edu_investment", [](Calibration& c) -> double& { return c.dynamics.edu_investment; }),
      scalar("dyn.beta0", [](Calibration& c) -> double& { return c.dynamics.beta0; }),
      scalar("dyn.beta3", [](Calibration& c) -> double& { return c.dynamics.beta3; }),
      scalar("dyn.beta4", [](Calibration& c) -> double& { return c.dynamics.beta4; }),
      scalar("dyn.delta0", [](Calibration& c) -> double& { return c.dynamics.delta0; }),
      scalar("dyn.delta_slope", [](Calibration& c) -> double& { return c.dynamics.delta_slope; }),
      scalar("dyn.time_step", [](Calibration& c) -> double& { return c.dynamics.time_step; }),
      scalar("dyn.horizon", [](Calibration& c) -> double& { return c.dynamics.horizon; }),
      scalar("dyn.ha_max", [](Calibration& c) -> double& { return c.dynamics.ha_max; }),
      scalar("energy.base_rate", [](Calibration& c) -> double& { return c.energy.base_rate; }),
      scalar("energy.transparency_rate", [](Calibration& c) -> double& { return c.energy.transparency_rate; }),
      scalar("energy.budget", [](Calibration& c) -> double& { return c.energy.budget; }),
      scalar("solver.grad_tol", [](Calibration& c) -> double& { return c.solver.grad_tol; }),
      Field{"solver.max_iter",
            [](Calibration& c, const std::string& v) {
              c.solver.max_iter = static_cast<int>(parse_double("solver.max_iter", v));
            },
            [](const Calibration& c) { return std::to_string(c.solver.max_iter); }},
      Field{"solver.starts",
            [](Calibration& c, const std::string& v) {
              c.solver.starts = static_cast<int>(parse_double("solver.starts", v));
            },
            [](const Calibration& c) { return std::to_string(c.solver.starts); }},
  };
  return table;
}

}  // namespace

Calibration parse_calibration(const std::string& text) {
  Calibration cal;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::params, fmt::format("line {}: expected key=value", lineno));
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) {
      throw Error(ErrorCode::params, fmt::format("unknown key '{}' (line {})", key, lineno));
    }
    it->set(cal, value);
  }
  cal.validate();
  return cal;
}

Calibration load_calibration(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open params file '{}'", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_calibration(ss.str());
}

std::string format_calibration(const Calibration& cal) {
  std::string out;
  for (const auto& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(cal));
  return out;
}

}  // namespace auglab
