// auglab: batch driver for the augmentation-economy models.
//
// Every subcommand writes its CSV (and SVG for `phase`) into --out together with
// manifest.json, which records the params hash, the seed and each artifact's hash.
// Exit codes are listed in README.md.
#include "auglab/csv.hpp"
#include "auglab/dynamics.hpp"
#include "auglab/econlab.hpp"
#include "auglab/firm.hpp"
#include "auglab/model.hpp"
#include "auglab/social.hpp"
#include "auglab/sustainability.hpp"
#include "auglab/wadi.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace auglab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitPropertyFailure = 16;

bool verbose() {
  const char* v = std::getenv("AUGLAB_VERBOSE");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

template <typename... Args>
void note(fmt::format_string<Args...> f, Args&&... args) {
  if (verbose()) fmt::print(stderr, "auglab: {}\n", fmt::format(f, std::forward<Args>(args)...));
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot read {}", p.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Globals {
  std::string params_file;
  std::uint64_t seed = 0;
  std::string out = "out";
};

// Loaded calibration plus the artifact ledger for manifest.json.
class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), g_(g) {
    if (g.params_file.empty()) {
      params_text_ = format_calibration(Calibration{});
      cal = Calibration{};
    } else {
      params_text_ = read_file(g.params_file);
      cal = parse_calibration(params_text_);
    }
    cal.solver.seed = g.seed;
    note("{}: calibration '{}' v{}, seed {}", command_, cal.name, cal.version, g.seed);
  }

  void option(const std::string& key, const std::string& value) { options_[key] = value; }
  void input(const std::string& path) { inputs_[path] = fmt::format("{:016x}", fnv1a64(read_file(path))); }

  void emit(const std::string& name, const std::string& content) {
    fs::create_directories(g_.out);
    const fs::path p = fs::path(g_.out) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::io, fmt::format("cannot write {}", p.string()));
    f << content;
    if (!f) throw Error(ErrorCode::io, fmt::format("write failed for {}", p.string()));
    artifacts_.push_back({name, content.size(), fnv1a64(content)});
    note("wrote {}", p.string());
  }

  void finish() {
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["params_file"] = g_.params_file.empty() ? "<built-in defaults>" : g_.params_file;
    m["params_hash_fnv1a64"] = fmt::format("{:016x}", fnv1a64(params_text_));
    m["calibration"] = cal.name;
    m["calibration_version"] = cal.version;
    m["seed"] = g_.seed;
    m["options"] = options_;
    m["inputs"] = inputs_;
    auto arts = nlohmann::ordered_json::array();
    for (const auto& a : artifacts_) {
      arts.push_back({{"file", a.name}, {"bytes", a.bytes}, {"fnv1a64", fmt::format("{:016x}", a.hash)}});
    }
    m["artifacts"] = arts;
    const std::string text = m.dump(2) + "\n";
    fs::create_directories(g_.out);
    std::ofstream f(fs::path(g_.out) / "manifest.json", std::ios::binary);
    if (!f) throw Error(ErrorCode::io, fmt::format("cannot write manifest in {}", g_.out));
    f << text;
  }

  Calibration cal;

 private:
  struct Artifact {
    std::string name;
    std::size_t bytes;
    std::uint64_t hash;
  };
  std::string command_;
  Globals g_;
  std::string params_text_;
  std::map<std::string, std::string> options_;
  std::map<std::string, std::string> inputs_;
  std::vector<Artifact> artifacts_;
};

std::string num(double v) { return format_number(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

std::vector<std::string> w_header(const std::string& prefix = "w") {
  std::vector<std::string> h;
  for (int k = 1; k <= kDims; ++k) h.push_back(fmt::format("{}{}", prefix, k));
  return h;
}

void append(std::vector<std::string>& row, const Vec5& w) {
  for (int k = 0; k < kDims; ++k) row.push_back(num(w[k]));
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  return out;
}

Vec5 parse_vec5(const std::string& s, const std::string& what) {
  const auto v = parse_list(s, what);
  if (v.size() != kDims) throw Error(ErrorCode::input, fmt::format("{} needs {} comma-separated values", what, kDims));
  Vec5 w;
  for (int k = 0; k < kDims; ++k) w[k] = v[static_cast<std::size_t>(k)];
  return w;
}

// Optional state overrides shared by the firm-level commands.
struct StateFlags {
  double ha = -1.0;
  double share = -1.0;
  std::string labor_mode;

  void add(CLI::App* sub) {
    sub->add_option("--ha", ha, "augmentable human capital H^A");
    sub->add_option("--share", share, "augmentable share H^A/(H^A+H^C), overrides --ha");
    sub->add_option("--labor-mode", labor_mode, "fixed or optimized");
  }

  void apply(Run& run) const {
    if (share >= 0.0) {
      run.cal.firm = run.cal.firm.with_share(share);
      run.option("share", num(share));
    } else if (ha >= 0.0) {
      run.cal.firm = run.cal.firm.with_ha(ha);
      run.option("ha", num(ha));
    }
    if (!labor_mode.empty()) {
      if (labor_mode == "fixed") run.cal.model.labor_mode = LaborMode::fixed;
      else if (labor_mode == "optimized") run.cal.model.labor_mode = LaborMode::optimized;
      else throw Error(ErrorCode::input, fmt::format("unknown labor mode '{}'", labor_mode));
      run.option("labor_mode", labor_mode);
    }
    run.cal.validate();
  }
};

// --- firm -------------------------------------------------------------------

int cmd_optimize(Run& run, bool statics) {
  const Calibration& c = run.cal;
  const OptimizationResult r = optimize_design(c.firm, c.model, c.solver);
  note("W* found, profit {:.6g}, converged {}", r.profit, r.converged);
  std::vector<std::string> h = w_header();
  for (const char* s : {"profit", "foc_residual_max", "converged", "iterations", "starts_converged", "clipped",
                        "bound_dimensions", "labor_p", "labor_c", "labor_a", "ha", "share"}) {
    h.emplace_back(s);
  }
  CsvWriter out(h);
  std::vector<std::string> row;
  append(row, r.w_star.values());
  std::string bounds;
  for (int k = 0; k < kDims; ++k) {
    if (r.boundary_flags[static_cast<std::size_t>(k)]) bounds += (bounds.empty() ? "" : ";") + std::to_string(k + 1);
  }
  const auto labor = r.labor_star.value_or(c.firm.labor);
  row.insert(row.end(), {num(r.profit), num(r.foc_residual.cwiseAbs().maxCoeff()), flag(r.converged),
                         std::to_string(r.iterations), std::to_string(r.starts_converged), flag(r.clipped), bounds,
                         num(labor[0]), num(labor[1]), num(labor[2]), num(c.firm.ha()), num(c.firm.share())});
  out.add_row(row);
  run.emit("optimize.csv", out.str());

  if (statics) {
    std::vector<std::string> sh{"target", "cost_index"};
    for (const auto& s : w_header("delta_w")) sh.push_back(s);
    for (const auto& s : w_header("expected_sign")) sh.push_back(s);
    sh.emplace_back("matches");
    CsvWriter st(sh);
    std::vector<std::pair<StaticsTarget, int>> jobs{{StaticsTarget::ai_stock, 0}, {StaticsTarget::augmentable_hc, 0},
                                                     {StaticsTarget::price, 0}};
    for (int k = 0; k < kDims; ++k) jobs.emplace_back(StaticsTarget::cost_coeff, k);
    if (c.model.labor_mode == LaborMode::optimized) jobs.emplace_back(StaticsTarget::wage_augmentable, 0);
    for (const auto& [target, k] : jobs) {
      const StaticsReport s = comparative_statics(c.firm, c.model, target, k, c.solver);
      std::vector<std::string> srow{to_string(target), target == StaticsTarget::cost_coeff ? std::to_string(k + 1) : ""};
      append(srow, s.delta);
      for (int e : s.expected) srow.push_back(std::to_string(e));
      srow.push_back(flag(s.matches));
      st.add_row(srow);
    }
    run.emit("statics.csv", st.str());
  }
  return 0;
}

int cmd_threshold(Run& run) {
  const ThresholdResult t = find_theta_star(run.cal.firm, run.cal.model, run.cal.solver);
  note("theta* = {:.6g} after {} solves", t.theta_star, t.solves);
  CsvWriter out({"dimension", "kind", "share", "bracket_lo", "bracket_hi"});
  for (int k = 0; k < kDims; ++k) {
    const DimensionThreshold& d = t.per_dimension[static_cast<std::size_t>(k)];
    out.add_row({std::to_string(k + 1), to_string(d.kind), num(d.share), num(d.lo), num(d.hi)});
  }
  out.add_row({"all", to_string(t.kind), num(t.theta_star), num(t.bracket_lo), num(t.bracket_hi)});
  run.emit("threshold.csv", out.str());
  return 0;
}

int cmd_wedge(Run& run) {
  const Calibration& c = run.cal;
  const WedgeReport w = underinvestment_wedge(c.firm, c.model, c.externality, c.solver);
  CsvWriter out({"dimension", "w_private", "w_social", "wedge", "subsidy", "indeterminate"});
  for (int k = 0; k < kDims; ++k) {
    out.add_row({std::to_string(k + 1), num(w.private_opt.w_star[k]), num(w.social_opt.w_star[k]), num(w.wedge[k]),
                 num(w.subsidy[k]), flag(w.indeterminate[static_cast<std::size_t>(k)])});
  }
  run.emit("wedge.csv", out.str());
  return 0;
}

// --- dynamics ---------------------------------------------------------------

std::string steady_state_csv(const EquilibriumSet& eq) {
  std::vector<std::string> h{"ha"};
  for (const auto& s : w_header()) h.push_back(s);
  for (const char* s : {"stability", "psi", "psi_slope", "jacobian_max_real"}) h.emplace_back(s);
  CsvWriter out(h);
  for (const Equilibrium& e : eq.equilibria) {
    std::vector<std::string> row{num(e.ha)};
    append(row, e.w);
    row.insert(row.end(), {to_string(e.stability), num(e.psi_value), num(e.psi_slope), num(e.jacobian_eigen_max_real)});
    out.add_row(row);
  }
  return out.str();
}

std::string trajectory_csv(const Trajectory& tr) {
  std::vector<std::string> h{"t"};
  for (const auto& s : w_header()) h.push_back(s);
  h.emplace_back("ha");
  CsvWriter out(h);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    std::vector<std::string> row{num(tr.t[i])};
    append(row, tr.w[i]);
    row.push_back(num(tr.ha[i]));
    out.add_row(row);
  }
  return out.str();
}

EquilibriumSet steady_states(const Run& run) {
  const Calibration& c = run.cal;
  EquilibriumSet eq = find_steady_states(c.firm, c.model, c.dynamics, c.solver);
  note("{} steady states on a {}-node map (converged {})", eq.equilibria.size(), eq.map.grid().size(),
       eq.map_converged);
  return eq;
}

int cmd_dynamics(Run& run, double ha0, const std::string& w0_text, int record_every) {
  const EquilibriumSet eq = steady_states(run);
  run.emit("steady_states.csv", steady_state_csv(eq));
  if (ha0 >= 0.0) {
    const Vec5 w0 = w0_text.empty() ? eq.map(ha0) : parse_vec5(w0_text, "--w0");
    run.option("ha0", num(ha0));
    if (!w0_text.empty()) run.option("w0", w0_text);
    run.option("record_every", std::to_string(record_every));
    IntegrationOptions io;
    io.record_every = record_every;
    run.emit("trajectory.csv", trajectory_csv(integrate_trajectory(w0, ha0, run.cal.dynamics, eq.map, io)));
  }
  return 0;
}

// Phase portrait: psi(H^A) with its zero line, equilibria and a few design-slaved paths' H^A
// marked along the axis. Stable equilibria are filled black discs, unstable ones open red circles.
std::string phase_svg(const EquilibriumSet& eq, const DynamicsParams& dp, std::vector<std::pair<double, double>>& curve) {
  const double lo = eq.map.lo(), hi = eq.map.hi();
  const int n = 400;
  curve.clear();
  double ymin = 0.0, ymax = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double h = lo + (hi - lo) * i / n;
    const double v = psi(h, dp, eq.map);
    curve.emplace_back(h, v);
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  const double pad = 0.05 * std::max(ymax - ymin, 1e-9);
  ymin -= pad;
  ymax += pad;
  const double W = 640, H = 400, L = 60, R = 20, T = 20, B = 50;
  auto sx = [&](double h) { return L + (W - L - R) * (h - lo) / (hi - lo); };
  auto sy = [&](double v) { return T + (H - T - B) * (ymax - v) / (ymax - ymin); };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n", W, H, W, H);
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                   sx(lo), sy(0.0), sx(hi), sy(0.0));
  s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", L, T, H - B);
  s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", L, H - B,
                   W - R);
  std::string pts;
  for (const auto& [h, v] : curve) pts += fmt::format("{:.2f},{:.2f} ", sx(h), sy(v));
  pts.pop_back();
  s += fmt::format("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n", pts);
  for (const Equilibrium& e : eq.equilibria) {
    const bool stable = e.stability == Stability::stable;
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                     sx(e.ha), sy(0.0), stable ? "black" : "white", stable ? "black" : "#c0392b");
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"13\">H^A</text>\n",
                   (L + W - R) / 2, H - 12);
  s += fmt::format("<text x=\"14\" y=\"{:.2f}\" font-size=\"13\" transform=\"rotate(-90 14 {:.2f})\">"
                   "net accumulation</text>\n",
                   (T + H - B) / 2, (T + H - B) / 2);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{:.3g}</text>\n", sx(lo),
                   H - B + 16, lo);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{:.3g}</text>\n", sx(hi),
                   H - B + 16, hi);
  s += "</svg>\n";
  return s;
}

int cmd_phase(Run& run) {
  const EquilibriumSet eq = steady_states(run);
  std::vector<std::pair<double, double>> curve;
  run.emit("phase.svg", phase_svg(eq, run.cal.dynamics, curve));
  CsvWriter out({"ha", "psi"});
  for (const auto& [h, v] : curve) out.add_row({num(h), num(v)});
  run.emit("psi.csv", out.str());
  run.emit("steady_states.csv", steady_state_csv(eq));
  return 0;
}

PolicyKind parse_policy(const std::string& s) {
  if (s == "edu_push") return PolicyKind::edu_push;
  if (s == "design_subsidy") return PolicyKind::design_subsidy;
  if (s == "regulatory_min") return PolicyKind::regulatory_min;
  throw Error(ErrorCode::input, fmt::format("unknown policy '{}' (edu_push, design_subsidy, regulatory_min)", s));
}

int cmd_policy(Run& run, const std::string& kind_text, double magnitude, double duration, double ha0,
               bool find_min, double upper) {
  const PolicyKind kind = parse_policy(kind_text);
  const EquilibriumSet eq = steady_states(run);
  if (eq.equilibria.empty()) throw Error(ErrorCode::convergence, "no steady state to start the policy from");
  PolicyContext ctx{run.cal.firm, run.cal.model, run.cal.dynamics, run.cal.solver, &eq, 1e-3};
  // Default start: the lowest steady state, the trap when there is one.
  const double start = ha0 >= 0.0 ? ha0 : eq.equilibria.front().ha;
  const Vec5 w0 = eq.map(start);
  run.option("kind", kind_text);
  run.option("duration", num(duration));
  run.option("ha0", num(start));

  CsvWriter out({"kind", "magnitude", "duration", "escaped", "settled", "final_equilibrium", "final_ha", "search_lo",
                 "search_hi", "evaluations"});
  if (find_min) {
    run.option("upper", num(upper));
    const MinimalMagnitude mm = minimal_escape_magnitude(kind, duration, w0, start, ctx, upper);
    out.add_row({kind_text, mm.found ? num(mm.magnitude) : "nan", num(duration), flag(mm.found), "", "", "",
                 num(mm.lo), num(mm.hi), std::to_string(mm.evaluations)});
  } else {
    run.option("magnitude", num(magnitude));
    const PolicyOutcome o = policy_experiment(kind, magnitude, duration, w0, start, ctx);
    out.add_row({kind_text, num(magnitude), num(duration), flag(o.escaped), flag(o.settled),
                 o.final_equilibrium ? std::to_string(*o.final_equilibrium) : "", num(o.final_ha), "", "", "1"});
  }
  run.emit("policy.csv", out.str());
  return 0;
}

// --- sustainability ---------------------------------------------------------

int cmd_frontier(Run& run, const std::string& budgets_text) {
  const Calibration& c = run.cal;
  std::vector<double> budgets;
  if (!budgets_text.empty()) {
    budgets = parse_list(budgets_text, "--budgets");
    run.option("budgets", budgets_text);
  } else {
    const ConstrainedResult joint = optimize_joint(c.firm, c.model, c.solver);
    const double e = energy(joint.d_star, joint.w_star[0], c.energy);
    for (int i = 1; i <= 10; ++i) budgets.push_back(e * 0.125 * i);
  }
  const Frontier f = tradeoff_frontier(c.firm, c.model, c.energy, budgets, c.solver);
  std::vector<std::string> h{"budget", "w1", "d", "profit", "mu", "binding", "energy"};
  for (int k = 2; k <= kDims; ++k) h.push_back(fmt::format("w{}", k));
  h.emplace_back("kkt_residual");
  CsvWriter out(h);
  for (const FrontierPoint& p : f.points) {
    const ConstrainedResult& r = p.result;
    std::vector<std::string> row{num(p.budget),       num(r.w_star[0]),        num(r.d_star), num(r.profit),
                                 num(r.shadow_price), flag(r.binding), num(r.energy_used)};
    for (int k = 1; k < kDims; ++k) row.push_back(num(r.w_star[k]));
    row.push_back(num(r.kkt.worst()));
    out.add_row(row);
  }
  run.emit("frontier.csv", out.str());
  return 0;
}

// --- WADI -------------------------------------------------------------------

Vec5 load_weights(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cd = t.column("dimension"), cw = t.column("weight");
  Vec5 w = Vec5::Constant(std::numeric_limits<double>::quiet_NaN());
  for (const auto& row : t.rows) {
    const int d = static_cast<int>(parse_number(row[cd], "dimension"));
    if (d < 1 || d > kDims) throw Error(ErrorCode::input, fmt::format("{}: dimension {} out of range", path, d));
    w[d - 1] = parse_number(row[cw], "weight");
  }
  if (!w.allFinite()) throw Error(ErrorCode::input, fmt::format("{}: one weight per dimension 1-5 required", path));
  return w;
}

struct WadiFlags {
  std::string responses;
  std::string catalog;
  std::string composite = "equal";
  std::string weights;
  std::string norm_pool = "global";
  std::string ha_file;
  bool lenient = false;
};

int cmd_wadi(Run& run, const WadiFlags& f) {
  run.input(f.responses);
  const ItemCatalog catalog = f.catalog.empty() ? default_catalog() : load_catalog(f.catalog, !f.lenient);
  if (!f.catalog.empty()) run.input(f.catalog);
  const WadiResponseSet rs = load_responses(f.responses);

  ScoringOptions opts;
  if (f.norm_pool == "global") opts.pool = NormPool::global;
  else if (f.norm_pool == "firm") opts.pool = NormPool::firm;
  else throw Error(ErrorCode::input, fmt::format("unknown norm pool '{}' (firm, global)", f.norm_pool));
  const CompositeMode mode = parse_composite_mode(f.composite);
  if (mode == CompositeMode::cfa) {
    if (f.weights.empty()) throw Error(ErrorCode::input, "--composite cfa needs --weights");
    opts.cfa_weights = load_weights(f.weights);
    run.input(f.weights);
  } else if (mode == CompositeMode::theory) {
    if (!f.weights.empty()) {
      opts.theory_weights = load_weights(f.weights);
      run.input(f.weights);
    } else {
      opts.theory_weights = theory_weights_from_model(run.cal.model, run.cal.model.w_auto, run.cal.firm.ha());
    }
  }
  if (!f.ha_file.empty()) {
    run.input(f.ha_file);
    const CsvTable t = read_csv(f.ha_file);
    const std::size_t cf = t.column("firm_id"), ch = t.column("ha");
    for (const auto& row : t.rows) opts.ha_by_firm[row[cf]] = parse_number(row[ch], "ha");
  }
  run.option("composite", f.composite);
  run.option("norm_pool", f.norm_pool);
  run.option("strict_catalog", flag(!f.lenient));

  const ScoringRun sr = score_firms(rs, catalog, opts);
  for (const auto& w : sr.warnings) note("warning: {}", w);
  run.emit("wadi_scores.csv", format_reports(sr.reports));
  CsvWriter warn({"warning"});
  for (const auto& w : sr.warnings) warn.add_row({w});
  run.emit("wadi_warnings.csv", warn.str());
  return 0;
}

// --- econometrics -----------------------------------------------------------

int cmd_synth(Run& run, int sectors, const std::string& spread, bool placebo, double hcq_scale) {
  PopulationOptions po;
  po.n_sectors = sectors;
  po.spread = parse_initial_spread(spread);
  po.hcq_scale = hcq_scale;
  run.option("sectors", std::to_string(sectors));
  run.option("spread", spread);
  run.option("placebo", flag(placebo));
  run.option("hcq_scale", num(hcq_scale));
  const PopulationModel model = build_population_model(run.cal, !placebo);
  const Population pop = generate_population(model, po, run.cal.solver.seed);
  for (const auto& w : pop.warnings) note("warning: {}", w);
  run.emit("sectors.csv", format_records(pop.records));
  CsvWriter warn({"warning"});
  for (const auto& w : pop.warnings) warn.add_row({w});
  run.emit("synth_warnings.csv", warn.str());
  return 0;
}

int cmd_regress(Run& run, const std::string& input) {
  run.input(input);
  const RegressionOutput r = run_interaction_spec(load_records(input));
  if (r.excluded_rows > 0) note("{} rows with tii <= 0 excluded", r.excluded_rows);
  run.emit("regression.csv", format_regression(r));
  return 0;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_crosstab(Run& run, const std::string& input, const std::string& by, const std::string& stats,
                 const std::string& correlate) {
  run.input(input);
  const auto records = load_records(input);
  run.option("by", by);
  run.option("stats", stats);
  run.emit("crosstab.csv", format_crosstab(quartile_crosstab(records, by, split_names(stats))));
  if (!correlate.empty()) {
    run.option("correlate", correlate);
    const CorrelationMatrix c = correlation_matrix(records, split_names(correlate));
    for (std::size_t i = 0; i < c.fields.size(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        if (!c.values[i][j]) note("warning: zero variance, no correlation for ({}, {})", c.fields[i], c.fields[j]);
      }
    }
    run.emit("correlations.csv", format_correlations(c));
  }
  return 0;
}

int cmd_bimodal(Run& run, const std::string& input, const std::string& field) {
  run.input(input);
  const CsvTable t = read_csv(input);
  const std::size_t col = t.column(field);
  std::vector<double> values;
  for (const auto& row : t.rows) values.push_back(parse_number(row[col], field));
  run.option("field", field);
  const BimodalityResult b = bimodality_test(values, run.cal.solver.seed);
  CsvWriter out({"field", "n", "preferred_modes", "bic_1", "bic_2", "loglik_1", "loglik_2", "weight_1", "weight_2",
                 "mean_1", "mean_2", "var_1", "var_2", "degenerate_restarts"});
  out.add_row({field, std::to_string(values.size()), std::to_string(b.preferred_modes), num(b.bic_1), num(b.bic_2),
               num(b.loglik_1), num(b.loglik_2), num(b.weights[0]), num(b.weights[1]), num(b.means[0]),
               num(b.means[1]), num(b.variances[0]), num(b.variances[1]), std::to_string(b.degenerate_restarts)});
  run.emit("bimodal.csv", out.str());
  return 0;
}

int cmd_check_properties(Run& run, int points) {
  SampleRegion region;
  region.points = points;
  region.seed = run.cal.solver.seed;
  run.option("points", std::to_string(points));
  const PropertyReport rep = check_property_suite(run.cal.model, region);
  CsvWriter out({"property", "passed", "evaluated", "violations", "worst", "detail"});
  for (const auto& c : rep.checks) {
    out.add_row({c.name, flag(c.passed), std::to_string(c.evaluated), std::to_string(c.violations), num(c.worst),
                 c.detail});
  }
  run.emit("properties.csv", out.str());
  if (rep.region_shrunk) note("{} sampled points fell in the clipped region and were redrawn", rep.rejected_points);
  return rep.all_passed() ? 0 : kExitPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auglab: augmentation-economy models, policy experiments and survey scoring"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--params", g.params_file, "parameter file (key = value)");
  app.add_option("--seed", g.seed, "seed for every stochastic step");
  app.add_option("--out", g.out, "output directory");

  StateFlags state;
  auto* optimize = app.add_subcommand("optimize", "profit-maximizing workplace design");
  state.add(optimize);
  bool statics = false;
  optimize->add_flag("--statics", statics, "also write comparative statics");

  auto* threshold = app.add_subcommand("threshold", "augmentable-share threshold theta*");
  auto* wedge = app.add_subcommand("wedge", "private versus social optimum and corrective subsidy");
  state.add(wedge);

  auto* dynamics = app.add_subcommand("dynamics", "steady states and an optional trajectory");
  double ha0 = -1.0;
  std::string w0;
  int record_every = 20;
  dynamics->add_option("--ha0", ha0, "initial H^A for a trajectory");
  dynamics->add_option("--w0", w0, "initial design w1,...,w5 (default W*(ha0))");
  dynamics->add_option("--record-every", record_every, "keep every n-th step")->check(CLI::PositiveNumber);

  auto* phase = app.add_subcommand("phase", "phase portrait of net accumulation (SVG)");

  auto* policy = app.add_subcommand("policy", "temporary intervention from the trap");
  std::string policy_kind = "edu_push";
  double magnitude = 1.0, duration = 10.0, upper = 5.0, policy_ha0 = -1.0;
  bool find_min = false;
  policy->add_option("--kind", policy_kind, "edu_push, design_subsidy or regulatory_min");
  policy->add_option("--magnitude", magnitude, "policy magnitude");
  policy->add_option("--duration", duration, "time the policy stays on");
  policy->add_option("--ha0", policy_ha0, "initial H^A (default lowest steady state)");
  policy->add_flag("--find-min", find_min, "bisect for the smallest escaping magnitude");
  policy->add_option("--upper", upper, "upper end of the magnitude search");

  auto* frontier = app.add_subcommand("frontier", "profit-energy frontier");
  std::string budgets;
  frontier->add_option("--budgets", budgets, "comma-separated energy budgets");

  auto* wadi = app.add_subcommand("wadi-score", "score WADI survey responses");
  WadiFlags wf;
  wadi->add_option("--responses", wf.responses, "response CSV")->required();
  wadi->add_option("--catalog", wf.catalog, "item catalog CSV");
  wadi->add_option("--composite", wf.composite, "equal, cfa or theory");
  wadi->add_option("--weights", wf.weights, "dimension,weight CSV");
  wadi->add_option("--norm-pool", wf.norm_pool, "firm or global");
  wadi->add_option("--ha-file", wf.ha_file, "firm_id,ha CSV for the WADI x H^A diagnostic");
  wadi->add_flag("--lenient", wf.lenient, "accept catalogs without the 8/8/7/7/6 structure");

  auto* synth = app.add_subcommand("synth", "generate a synthetic sector population");
  int sectors = 200;
  std::string spread = "mixed";
  bool placebo = false;
  double hcq_scale = 1.0;
  synth->add_option("--sectors", sectors, "number of sectors")->check(CLI::Range(2, 100000));
  synth->add_option("--spread", spread, "initial H^A: mixed, above or below the unstable threshold");
  synth->add_flag("--placebo", placebo, "switch off design-composition complementarity");
  synth->add_option("--hcq-scale", hcq_scale, "scale applied to terminal HCQ");

  std::string input;
  auto* regress = app.add_subcommand("regress", "interaction regression with HC1 errors");
  regress->add_option("--input", input, "sector CSV")->required();

  auto* crosstab = app.add_subcommand("crosstab", "quartile cross-tab and correlations");
  std::string by = "mqc", stats = "innov_share,tii,hcq", correlate;
  crosstab->add_option("--input", input, "sector CSV")->required();
  crosstab->add_option("--by", by, "field defining the quartiles");
  crosstab->add_option("--stats", stats, "comma-separated fields to average");
  crosstab->add_option("--correlate", correlate, "comma-separated fields for a correlation matrix");

  auto* bimodal = app.add_subcommand("bimodal", "one versus two Gaussian components by BIC");
  std::string field = "mqc";
  bimodal->add_option("--input", input, "CSV with the values")->required();
  bimodal->add_option("--field", field, "column to test");

  auto* props = app.add_subcommand("check-properties", "finite-difference check of the design multiplier");
  int points = 200;
  props->add_option("--points", points, "sample points")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fmt::print(stderr, "error kind=usage code={}: {}\n", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Run run(sub->get_name(), g);
    int rc = 0;
    if (sub == optimize) {
      state.apply(run);
      rc = cmd_optimize(run, statics);
    } else if (sub == threshold) {
      rc = cmd_threshold(run);
    } else if (sub == wedge) {
      state.apply(run);
      rc = cmd_wedge(run);
    } else if (sub == dynamics) {
      rc = cmd_dynamics(run, ha0, w0, record_every);
    } else if (sub == phase) {
      rc = cmd_phase(run);
    } else if (sub == policy) {
      rc = cmd_policy(run, policy_kind, magnitude, duration, policy_ha0, find_min, upper);
    } else if (sub == frontier) {
      rc = cmd_frontier(run, budgets);
    } else if (sub == wadi) {
      rc = cmd_wadi(run, wf);
    } else if (sub == synth) {
      rc = cmd_synth(run, sectors, spread, placebo, hcq_scale);
    } else if (sub == regress) {
      rc = cmd_regress(run, input);
    } else if (sub == crosstab) {
      rc = cmd_crosstab(run, input, by, stats, correlate);
    } else if (sub == bimodal) {
      rc = cmd_bimodal(run, input, field);
    } else if (sub == props) {
      rc = cmd_check_properties(run, points);
    }
    run.finish();
    if (rc == kExitPropertyFailure) {
      fmt::print(stderr, "error kind=property code={}: property suite reported violations\n", rc);
    }
    return rc;
  } catch (const Error& e) {
    fmt::print(stderr, "error kind={} code={}: {}\n", error_code_name(e.code()), static_cast<int>(e.code()), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error kind=internal code=1: {}\n", e.what());
    return 1;
  }
}
