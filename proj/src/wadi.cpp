#include "auglab/wadi.hpp"

#include "auglab/csv.hpp"
#include "auglab/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace auglab {

const char* to_string(Role r) { return r == Role::management ? "management" : "worker"; }

Role parse_role(const std::string& s) {
  if (s == "management" || s == "M") return Role::management;
  if (s == "worker" || s == "W") return Role::worker;
  throw Error(ErrorCode::input, fmt::format("unknown respondent role '{}'", s));
}

ItemCatalog::ItemCatalog(std::vector<CatalogItem> items, bool strict) : items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const CatalogItem& it = items_[i];
    if (it.dimension < 1 || it.dimension > kDims) {
      throw Error(ErrorCode::input, fmt::format("item '{}': dimension {} outside 1..5", it.id, it.dimension));
    }
    if (!index_.emplace(it.id, i).second) throw Error(ErrorCode::input, fmt::format("duplicate item '{}'", it.id));
  }
  if (strict && counts() != kCatalogStructure) {
    const auto c = counts();
    throw Error(ErrorCode::input, fmt::format("catalog has {}/{}/{}/{}/{} items per dimension, expected 8/8/7/7/6",
                                              c[0], c[1], c[2], c[3], c[4]));
  }
}

const CatalogItem* ItemCatalog::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

std::array<int, kDims> ItemCatalog::counts() const {
  std::array<int, kDims> c{};
  for (const auto& it : items_) ++c[static_cast<std::size_t>(it.dimension - 1)];
  return c;
}

bool ItemCatalog::dimension_has_dual(int dimension) const {
  return std::any_of(items_.begin(), items_.end(),
                     [&](const CatalogItem& it) { return it.dimension == dimension && it.dual_level; });
}

ItemCatalog default_catalog() {
  std::vector<CatalogItem> items;
  auto add = [&](const char* id, int dim, bool rev = false, bool bin = false, bool dual = false) {
    items.push_back(CatalogItem{id, dim, rev, bin, dual});
  };
  for (const char* id : {"W1.1", "W1.2", "W1.3", "W1.4", "W1.5", "W1.6", "W1.7"}) add(id, 1);
  add("W1.8", 1, false, true);
  for (const char* id : {"W2.1", "W2.2", "W2.3", "W2.4", "W2.5", "W2.6", "W2.8", "W2.10"}) add(id, 2, false, false, true);
  add("W3.1", 3, false, false, true);
  add("W3.2", 3, false, false, true);
  for (const char* id : {"W3.3", "W3.4", "W3.5"}) add(id, 3);
  add("W3.6", 3, false, false, true);
  add("W3.7", 3, false, true);
  add("W4.1", 4, false, false, true);
  add("W4.2", 4, false, false, true);
  for (const char* id : {"W4.3", "W4.4", "W4.5", "W4.6", "W4.8"}) add(id, 4);
  for (const char* id : {"W5.1", "W5.2", "W5.3", "W5.5"}) add(id, 5);
  add("W5.9", 5, true);
  add("W5.10", 5, true);
  return ItemCatalog(std::move(items));
}

namespace {

bool parse_flag(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no" || s.empty()) return false;
  throw Error(ErrorCode::input, fmt::format("{}: cannot read '{}' as a flag", what, s));
}

}  // namespace

ItemCatalog load_catalog(const std::filesystem::path& file, bool strict) {
  const CsvTable t = read_csv(file);
  const std::size_t c_id = t.column("item_id"), c_dim = t.column("dimension"), c_rev = t.column("reverse"),
                    c_bin = t.column("binary"), c_dual = t.column("dual_level");
  std::vector<CatalogItem> items;
  for (const auto& r : t.rows) {
    CatalogItem it;
    it.id = r[c_id];
    it.dimension = static_cast<int>(parse_number(r[c_dim], "catalog dimension"));
    it.reverse = parse_flag(r[c_rev], "catalog reverse");
    it.binary = parse_flag(r[c_bin], "catalog binary");
    it.dual_level = parse_flag(r[c_dual], "catalog dual_level");
    items.push_back(std::move(it));
  }
  return ItemCatalog(std::move(items), strict);
}

std::string format_catalog(const ItemCatalog& catalog) {
  CsvWriter w({"item_id", "dimension", "reverse", "binary", "dual_level"});
  for (const auto& it : catalog.items()) {
    w.add_row({it.id, std::to_string(it.dimension), it.reverse ? "1" : "0", it.binary ? "1" : "0",
               it.dual_level ? "1" : "0"});
  }
  return w.str();
}

namespace {

WadiResponseSet responses_from(const CsvTable& t) {
  const std::size_t c_firm = t.column("firm_id"), c_resp = t.column("respondent_id"), c_role = t.column("role"),
                    c_item = t.column("item_id"), c_val = t.column("value");
  WadiResponseSet rs;
  for (const auto& r : t.rows) {
    if (r[c_val].empty()) continue;  // skipped item
    rs.responses.push_back(
        WadiResponse{r[c_firm], r[c_resp], parse_role(r[c_role]), r[c_item], parse_number(r[c_val], "response value")});
  }
  return rs;
}

}  // namespace

WadiResponseSet load_responses(const std::filesystem::path& file) { return responses_from(read_csv(file)); }

WadiResponseSet parse_responses(const std::string& csv_text) { return responses_from(parse_csv(csv_text)); }

void validate_responses(const WadiResponseSet& rs, const ItemCatalog& catalog) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::map<std::pair<std::string, std::string>, Role> roles;
  for (const auto& r : rs.responses) {
    const CatalogItem* it = catalog.find(r.item_id);
    if (!it) throw Error(ErrorCode::input, fmt::format("item '{}' is not in the catalog", r.item_id));
    if (it->binary ? !(r.value == 0.0 || r.value == 1.0) : !(r.value >= 1.0 && r.value <= 7.0)) {
      throw Error(ErrorCode::input, fmt::format("respondent {} item {}: value {} out of range", r.respondent_id,
                                                r.item_id, r.value));
    }
    if (!seen.emplace(r.firm_id, r.respondent_id, r.item_id).second) {
      throw Error(ErrorCode::input,
                  fmt::format("respondent {} answered item {} twice", r.respondent_id, r.item_id));
    }
    auto [pos, fresh] = roles.emplace(std::make_pair(r.firm_id, r.respondent_id), r.role);
    if (!fresh && pos->second != r.role) {
      throw Error(ErrorCode::input, fmt::format("respondent {} appears with two roles", r.respondent_id));
    }
  }
}

double reverse_likert(double v) { return 8.0 - v; }

const char* to_string(NormPool p) { return p == NormPool::firm ? "firm" : "global"; }

Standardized standardize_items(const WadiResponseSet& rs, const ItemCatalog& catalog, NormPool pool) {
  validate_responses(rs, catalog);
  // Canonical order makes every sum independent of input order.
  std::vector<WadiResponse> sorted = rs.responses;
  std::sort(sorted.begin(), sorted.end(), [](const WadiResponse& a, const WadiResponse& b) {
    return std::tie(a.firm_id, a.respondent_id, a.item_id) < std::tie(b.firm_id, b.respondent_id, b.item_id);
  });

  Standardized out;
  auto pool_key = [&](const WadiResponse& r) { return pool == NormPool::firm ? r.firm_id : std::string(); };
  auto coded = [&](const WadiResponse& r, const CatalogItem& it) {
    if (!it.reverse) return r.value;
    return it.binary ? 1.0 - r.value : reverse_likert(r.value);
  };

  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  for (const auto& r : sorted) {
    const CatalogItem& it = *catalog.find(r.item_id);
    values[pool_key(r)][r.item_id].push_back(coded(r, it));
  }
  for (const auto& [key, items] : values) {
    for (const auto& [id, v] : items) {
      ItemStats s;
      s.n = static_cast<int>(v.size());
      s.mean = std::accumulate(v.begin(), v.end(), 0.0) / s.n;
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.sd = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
      out.stats[key][id] = s;
      if (s.n < 2 || s.sd <= 1e-12) {
        ++out.dropped_items;
        out.warnings.push_back(fmt::format("item {} dropped{}: {}", id, key.empty() ? "" : " in firm " + key,
                                           s.n < 2 ? "fewer than two answers" : "zero variance"));
      }
    }
  }

  for (const auto& r : sorted) {
    const CatalogItem& it = *catalog.find(r.item_id);
    ScoredEntry e{r.firm_id, r.respondent_id, r.role, r.item_id, it.dimension, it.binary, 0.0};
    const ItemStats& s = out.stats[pool_key(r)][r.item_id];
    if (s.n < 2 || s.sd <= 1e-12) continue;
    // binary items enter as -0.5/+0.5; only Likert items are standardized
    e.value = it.binary ? coded(r, it) - 0.5 : (coded(r, it) - s.mean) / s.sd;
    out.entries.push_back(std::move(e));
  }
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

DimensionScores dimension_scores(const Standardized& z, const ItemCatalog& catalog, const std::string& firm_id) {
  DimensionScores ds;
  for (int k = 1; k <= kDims; ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    std::vector<double> all, mgmt, work;
    for (const auto& e : z.entries) {
      if (e.firm_id != firm_id || e.dimension != k) continue;
      all.push_back(e.value);
      (e.role == Role::management ? mgmt : work).push_back(e.value);
    }
    if (!mgmt.empty()) ds.management[i] = mean_of(mgmt);
    if (!work.empty()) ds.worker[i] = mean_of(work);
    if (all.empty()) {
      ds.absent[i] = true;
      ds.score[i] = 0.0;
      continue;
    }
    if (catalog.dimension_has_dual(k)) {
      if (!mgmt.empty() && !work.empty()) {
        ds.blended[i] = true;
        ds.score[i] = 0.5 * *ds.management[i] + 0.5 * *ds.worker[i];
        continue;
      }
      ds.single_role[i] = true;
    }
    ds.score[i] = mean_of(all);
  }
  return ds;
}

const char* to_string(CompositeMode m) {
  switch (m) {
    case CompositeMode::equal: return "equal";
    case CompositeMode::cfa: return "cfa";
    case CompositeMode::theory: return "theory";
  }
  return "unknown";
}

CompositeMode parse_composite_mode(const std::string& s) {
  if (s == "equal") return CompositeMode::equal;
  if (s == "cfa") return CompositeMode::cfa;
  if (s == "theory") return CompositeMode::theory;
  throw Error(ErrorCode::input, fmt::format("unknown composite mode '{}'", s));
}

Vec5 normalize_weights(const Vec5& w) {
  for (int k = 0; k < kDims; ++k) {
    if (!(w[k] >= 0.0) || !std::isfinite(w[k])) {
      throw Error(ErrorCode::domain, fmt::format("composite weight {} = {} must be finite and nonnegative", k + 1, w[k]));
    }
  }
  const double s = w.sum();
  if (!(s > 0.0)) throw Error(ErrorCode::domain, "composite weights sum to zero");
  return w / s;
}

double composite(const std::array<double, kDims>& ds, CompositeMode mode, const std::optional<Vec5>& weights) {
  if (mode == CompositeMode::equal) {
    double s = 0.0;
    for (double v : ds) s += v;
    return s / kDims;
  }
  if (!weights) throw Error(ErrorCode::input, fmt::format("{} composite needs a weight vector", to_string(mode)));
  const Vec5 w = normalize_weights(*weights);
  double s = 0.0;
  for (int k = 0; k < kDims; ++k) s += w[k] * ds[static_cast<std::size_t>(k)];
  return s;
}

Vec5 theory_weights_from_model(const ModelParams& p, const Vec5& w_ref, double ha_ref) {
  const DesignGradient g = grad_g(DesignVector(w_ref, p.w_max), ha_ref, p);
  if (g.clipped) throw Error(ErrorCode::domain, "theory weights need a reference design inside the unclipped region");
  return normalize_weights(g.partials);
}

Diagnostics diagnostics(const DimensionScores& ds, std::optional<double> ha) {
  Diagnostics d;
  if (ds.management[1] && ds.worker[1]) d.authority_gap = std::abs(*ds.management[1] - *ds.worker[1]);
  const double m = composite(ds.score, CompositeMode::equal);
  double ss = 0.0;
  for (double v : ds.score) ss += (v - m) * (v - m);
  d.balance = std::sqrt(ss / kDims);
  if (ha) d.wadi_x_ha = m * *ha;
  return d;
}

ScoringRun score_firms(const WadiResponseSet& rs, const ItemCatalog& catalog, const ScoringOptions& opts) {
  const Standardized z = standardize_items(rs, catalog, opts.pool);
  ScoringRun run;
  run.warnings = z.warnings;

  std::map<std::string, std::map<std::string, std::pair<Role, int>>> respondents;
  for (const auto& r : rs.responses) {
    auto& slot = respondents[r.firm_id][r.respondent_id];
    slot.first = r.role;
    ++slot.second;
  }
  const int n_items = static_cast<int>(catalog.items().size());
  for (const auto& [firm, people] : respondents) {
    WadiReport rep;
    rep.firm_id = firm;
    for (const auto& [id, info] : people) {
      (info.first == Role::management ? rep.management_respondents : rep.worker_respondents) += 1;
      rep.missing_responses += n_items - info.second;
    }
    rep.dims = dimension_scores(z, catalog, firm);
    rep.composite_equal = composite(rep.dims.score, CompositeMode::equal);
    if (opts.cfa_weights) rep.composite_cfa = composite(rep.dims.score, CompositeMode::cfa, opts.cfa_weights);
    if (opts.theory_weights) {
      rep.composite_theory = composite(rep.dims.score, CompositeMode::theory, opts.theory_weights);
    }
    std::optional<double> ha;
    if (auto it = opts.ha_by_firm.find(firm); it != opts.ha_by_firm.end()) ha = it->second;
    rep.diag = diagnostics(rep.dims, ha);
    for (int k = 0; k < kDims; ++k) {
      const auto i = static_cast<std::size_t>(k);
      if (rep.dims.absent[i]) run.warnings.push_back(fmt::format("firm {}: dimension {} has no scorable items", firm, k + 1));
      if (rep.dims.single_role[i]) {
        run.warnings.push_back(fmt::format("firm {}: dimension {} answered by one role only", firm, k + 1));
      }
    }
    if (rep.missing_responses > 0) {
      run.warnings.push_back(fmt::format("firm {}: {} item responses missing, omitted from means", firm,
                                         rep.missing_responses));
    }
    run.reports.push_back(std::move(rep));
  }
  return run;
}

std::string format_reports(const std::vector<WadiReport>& reports) {
  CsvWriter w({"firm_id", "wadi_1", "wadi_2", "wadi_3", "wadi_4", "wadi_5", "composite_equal", "composite_cfa",
               "composite_theory", "authority_gap", "balance", "wadi_x_ha", "n_management", "n_worker",
               "missing_responses", "flags"});
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : reports) {
    std::vector<std::string> row{r.firm_id};
    std::string flags;
    for (int k = 0; k < kDims; ++k) {
      const auto i = static_cast<std::size_t>(k);
      row.push_back(format_number(r.dims.score[i]));
      if (r.dims.absent[i]) flags += fmt::format("{}absent:{}", flags.empty() ? "" : ";", k + 1);
      if (r.dims.single_role[i]) flags += fmt::format("{}single_role:{}", flags.empty() ? "" : ";", k + 1);
    }
    if (!r.diag.authority_gap) flags += fmt::format("{}gap_missing_role", flags.empty() ? "" : ";");
    row.push_back(format_number(r.composite_equal));
    row.push_back(opt(r.composite_cfa));
    row.push_back(opt(r.composite_theory));
    row.push_back(opt(r.diag.authority_gap));
    row.push_back(format_number(r.diag.balance));
    row.push_back(opt(r.diag.wadi_x_ha));
    row.push_back(std::to_string(r.management_respondents));
    row.push_back(std::to_string(r.worker_respondents));
    row.push_back(std::to_string(r.missing_responses));
    row.push_back(flags);
    w.add_row(std::move(row));
  }
  return w.str();
}

}  // namespace auglab
