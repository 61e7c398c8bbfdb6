#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprompt/dataset.hpp"
#include "tabprompt/error.hpp"

namespace tabprompt {

/// Sample covariance, sum((x - mean x)(y - mean y)) / (n - 1).
inline double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("covariance: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("covariance: need at least 2 observations");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += (x[i] - mx) * (y[i] - my);
  return acc / static_cast<double>(n - 1);
}

struct ImportanceReport {
  std::map<std::string, double> scores;  // signed, one per feature
  std::vector<std::string> ranking;      // descending |score|
  std::vector<std::string> top_k;
  std::size_t k = 0;

  /// Position in the ranking, or ranking.size() for unknown features.
  std::size_t rank_of(const std::string& feature) const {
    for (std::size_t i = 0; i < ranking.size(); ++i)
      if (ranking[i] == feature) return i;
    return ranking.size();
  }

  bool in_top_k(const std::string& feature) const {
    return std::find(top_k.begin(), top_k.end(), feature) != top_k.end();
  }

  friend bool operator==(const ImportanceReport&, const ImportanceReport&) = default;
};

namespace detail {

// |a| and |b| closer than this (relative) rank as tied, so results do not
// depend on summation-order rounding.
inline bool same_magnitude(double a, double b) {
  const double fa = std::fabs(a), fb = std::fabs(b);
  return std::fabs(fa - fb) <= 1e-12 * std::max({fa, fb, 1e-300});
}

}  // namespace detail

/// Ranks features by the absolute covariance between their one-hot encoded
/// columns and the 0/1 target. A categorical feature scores with its
/// strongest level. Ties keep schema order.
inline ImportanceReport rank_features(const Table& table, std::size_t k) {
  if (k == 0) throw ValidationError("rank_features: k must be positive");
  if (table.size() < 2) throw ValidationError("rank_features: need at least 2 rows");
  const auto features = table.schema().feature_indices();
  if (features.empty()) throw ValidationError("rank_features: table has only the label column");

  const auto m = one_hot_encode(table);
  std::map<std::size_t, double> best;  // schema index -> signed score
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto col = m.column(c);
    const double cov = covariance(col, m.target);
    auto [it, inserted] = best.try_emplace(m.feature_of[c], cov);
    if (!inserted && std::fabs(cov) > std::fabs(it->second) && !detail::same_magnitude(cov, it->second))
      it->second = cov;
  }

  ImportanceReport report;
  report.k = k;
  std::vector<std::pair<std::string, double>> pending;
  for (auto idx : features) {
    const auto& name = table.schema().columns[idx].name;
    const double score = best.count(idx) ? best[idx] : 0.0;  // all-missing categorical
    report.scores[name] = score;
    pending.emplace_back(name, score);
  }
  // Selection by repeated scan: the first (schema-order) feature whose
  // magnitude is not beaten by a later one wins each slot.
  while (!pending.empty()) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < pending.size(); ++i) {
      const double cur = std::fabs(pending[i].second), top = std::fabs(pending[pick].second);
      if (cur > top && !detail::same_magnitude(cur, top)) pick = i;
    }
    report.ranking.push_back(pending[pick].first);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  report.top_k.assign(report.ranking.begin(),
                      report.ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, report.ranking.size())));
  return report;
}

/// Keeps the label column plus the `keep` highest-ranked features.
inline Table drop_least_important(const Table& table, const ImportanceReport& report, std::size_t keep) {
  if (keep == 0) throw ValidationError("drop_least_important: keep must be positive");
  const auto features = table.schema().feature_names();
  if (keep > features.size())
    throw ValidationError("drop_least_important: keep=" + std::to_string(keep) + " exceeds feature count " +
                          std::to_string(features.size()));
  std::vector<std::string> survivors;
  for (const auto& name : report.ranking) {
    if (survivors.size() == keep) break;
    if (table.schema().is_feature(name)) survivors.push_back(name);
  }
  if (survivors.size() < keep)
    throw ValidationError("drop_least_important: report ranks fewer than " + std::to_string(keep) +
                          " of this table's features");
  return select_columns(table, survivors);
}

inline nlohmann::ordered_json report_to_json(const ImportanceReport& r) {
  nlohmann::ordered_json j;
  j["k"] = r.k;
  j["scores"] = nlohmann::ordered_json::object();
  for (const auto& name : r.ranking) j["scores"][name] = r.scores.at(name);
  j["ranking"] = r.ranking;
  j["top_k"] = r.top_k;
  return j;
}

inline ImportanceReport report_from_json(const nlohmann::json& j) {
  try {
    ImportanceReport r;
    r.ranking = j.at("ranking").get<std::vector<std::string>>();
    r.top_k = j.at("top_k").get<std::vector<std::string>>();
    r.k = j.value("k", r.top_k.size());
    for (const auto& [name, v] : j.at("scores").items()) r.scores[name] = v.get<double>();
    for (std::size_t i = 0; i < r.top_k.size(); ++i)
      if (i >= r.ranking.size() || r.ranking[i] != r.top_k[i])
        throw ValidationError("importance report: top_k is not a prefix of ranking");
    for (const auto& name : r.ranking)
      if (!r.scores.count(name)) throw ValidationError("importance report: no score for '" + name + "'");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid importance report: ") + e.what());
  }
}

}  // namespace tabprompt
