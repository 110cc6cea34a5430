#pragma once

#include "auglab/params.hpp"
#include "auglab/types.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace auglab {

enum class Role { management, worker };
const char* to_string(Role r);
Role parse_role(const std::string& s);

struct CatalogItem {
  std::string id;
  int dimension = 1;  // 1..5
  bool reverse = false;
  bool binary = false;
  bool dual_level = false;  // answered by both management and workers
};

// Item counts per dimension in the published instrument.
inline constexpr std::array<int, kDims> kCatalogStructure{8, 8, 7, 7, 6};

class ItemCatalog {
 public:
  ItemCatalog() = default;
  // strict: require the 8/8/7/7/6 structure.
  explicit ItemCatalog(std::vector<CatalogItem> items, bool strict = true);

  const CatalogItem* find(const std::string& id) const;
  const std::vector<CatalogItem>& items() const { return items_; }
  std::array<int, kDims> counts() const;
  bool dimension_has_dual(int dimension) const;

 private:
  std::vector<CatalogItem> items_;
  std::map<std::string, std::size_t> index_;
};

ItemCatalog default_catalog();
ItemCatalog load_catalog(const std::filesystem::path& file, bool strict = true);
std::string format_catalog(const ItemCatalog& catalog);

struct WadiResponse {
  std::string firm_id;
  std::string respondent_id;
  Role role = Role::worker;
  std::string item_id;
  double value = 0.0;  // Likert 1..7 or binary 0/1
};

struct WadiResponseSet {
  std::vector<WadiResponse> responses;
};

WadiResponseSet load_responses(const std::filesystem::path& file);
WadiResponseSet parse_responses(const std::string& csv_text);

/// Throws Error(input) on unknown items, out-of-range values, role changes or duplicate answers.
void validate_responses(const WadiResponseSet& rs, const ItemCatalog& catalog);

/// Likert reverse map v -> 8 - v (an involution on 1..7).
double reverse_likert(double v);

enum class NormPool { firm, global };
const char* to_string(NormPool p);

struct ScoredEntry {
  std::string firm_id;
  std::string respondent_id;
  Role role = Role::worker;
  std::string item_id;
  int dimension = 1;
  bool binary = false;
  double value = 0.0;  // z-score for Likert items, v - 0.5 for binary items
};

struct ItemStats {
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
};

struct Standardized {
  std::vector<ScoredEntry> entries;
  // Keyed by pool ("" for the global pool, else firm id) then item id.
  std::map<std::string, std::map<std::string, ItemStats>> stats;
  std::vector<std::string> warnings;
  int dropped_items = 0;
};

/// Reverse-codes, then z-scores every Likert item across the chosen pool with the sample SD.
/// Binary items enter as -0.5/+0.5 without standardization. Any item with fewer than two answers or zero variance is dropped with a warning.
Standardized standardize_items(const WadiResponseSet& rs, const ItemCatalog& catalog, NormPool pool);

struct DimensionScores {
  std::array<double, kDims> score{};
  std::array<bool, kDims> absent{};       // no scorable entries; score set to 0
  std::array<bool, kDims> blended{};      // 0.5 management + 0.5 worker
  std::array<bool, kDims> single_role{};  // dual-level dimension answered by one role only
  std::array<std::optional<double>, kDims> management;
  std::array<std::optional<double>, kDims> worker;
};

DimensionScores dimension_scores(const Standardized& z, const ItemCatalog& catalog, const std::string& firm_id);

enum class CompositeMode { equal, cfa, theory };
const char* to_string(CompositeMode m);
CompositeMode parse_composite_mode(const std::string& s);

/// Rejects negative entries or a zero sum; returns weights scaled to sum 1.
Vec5 normalize_weights(const Vec5& w);

double composite(const std::array<double, kDims>& ds, CompositeMode mode, const std::optional<Vec5>& weights = {});

/// grad_g at the reference design, normalized to sum 1. Throws Error(domain) at a clipped reference.
Vec5 theory_weights_from_model(const ModelParams& p, const Vec5& w_ref, double ha_ref);

struct Diagnostics {
  std::optional<double> authority_gap;  // |W2^M - W2^W|, absent unless both roles answered dimension 2
  double balance = 0.0;                 // population SD of the dimension scores
  std::optional<double> wadi_x_ha;
};

Diagnostics diagnostics(const DimensionScores& ds, std::optional<double> ha = {});

struct WadiReport {
  std::string firm_id;
  DimensionScores dims;
  double composite_equal = 0.0;
  std::optional<double> composite_cfa;
  std::optional<double> composite_theory;
  Diagnostics diag;
  int management_respondents = 0;
  int worker_respondents = 0;
  int missing_responses = 0;  // catalog items a respondent skipped
};

struct ScoringOptions {
  NormPool pool = NormPool::global;
  std::optional<Vec5> cfa_weights;
  std::optional<Vec5> theory_weights;
  std::map<std::string, double> ha_by_firm;
};

struct ScoringRun {
  std::vector<WadiReport> reports;  // sorted by firm id
  std::vector<std::string> warnings;
};

ScoringRun score_firms(const WadiResponseSet& rs, const ItemCatalog& catalog, const ScoringOptions& opts = {});

std::string format_reports(const std::vector<WadiReport>& reports);

}  // namespace auglab
