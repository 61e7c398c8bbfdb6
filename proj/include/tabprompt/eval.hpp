#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprompt/config.hpp"
#include "tabprompt/csv.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/fewshot.hpp"
#include "tabprompt/predict.hpp"
#include "tabprompt/serialize.hpp"

namespace tabprompt {

/// ROC AUC as the Mann-Whitney statistic, ties credited 1/2. Computed from
/// mid-ranks in O(n log n).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ValidationError("auc: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                          " labels");
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("auc: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n = labels.size(), n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: labels contain a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie block spanning ranks [i+1, j] gets (i+1+j)/2.
  double pos_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]]) pos_rank_sum += mid;
    i = j;
  }
  const double u = pos_rank_sum - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct CellResult {
  Family family = Family::text_template;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::optional<double> auc;  // absent when the cell failed
  std::size_t unmatched = 0;
  std::size_t eval_rows = 0;
  double runtime_seconds = 0;
  std::string error;

  bool ok() const { return auc.has_value(); }
};

/// One entry per configured (family, k, seed), in grid order.
struct EvalResult {
  std::vector<Family> families;
  std::vector<std::size_t> shots;
  std::vector<std::uint64_t> seeds;
  std::vector<CellResult> cells;

  bool complete() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok(); });
  }

  const CellResult* find(Family f, std::size_t k, std::uint64_t seed) const {
    for (const auto& c : cells)
      if (c.family == f && c.k == k && c.seed == seed) return &c;
    return nullptr;
  }

  /// Mean AUC over the seeds that completed.
  std::optional<double> mean_auc(Family f, std::size_t k) const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& c : cells)
      if (c.family == f && c.k == k && c.ok()) {
        sum += *c.auc;
        ++n;
      }
    if (!n) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

namespace detail {

inline std::string cell_label(const CellResult& c) {
  return std::string(family_name(c.family)) + " k=" + std::to_string(c.k) + " seed=" + std::to_string(c.seed);
}

inline void check_shot_feasibility(const ExperimentConfig& config, const Table& table) {
  const std::size_t pos = table.count_positive(), neg = table.size() - pos;
  for (auto k : config.shots) {
    if (pos < (k + 1) / 2 || neg < k / 2)
      throw ValidationError("config: " + std::to_string(k) + "-shot sampling needs " + std::to_string((k + 1) / 2) +
                            " positive and " + std::to_string(k / 2) + " negative rows; dataset has " +
                            std::to_string(pos) + " and " + std::to_string(neg));
    if (table.size() < k + config.eval_size)
      throw ValidationError("config: " + std::to_string(k) + " shots + eval_size " + std::to_string(config.eval_size) +
                            " exceed the dataset's " + std::to_string(table.size()) + " rows");
  }
}

}  // namespace detail

/// Runs every (family, k, seed) cell. Configuration and data problems throw
/// before any cell starts; failures inside a cell are recorded on the cell
/// and the grid continues. Progress goes to `log` one line per cell.
inline EvalResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  config.validate();
  const Table table = load_experiment_table(config);
  std::vector<SerializerSpec> specs;
  for (const auto& f : config.families) specs.push_back(make_spec(f, table));
  detail::check_shot_feasibility(config, table);
  Predictor predictor(config.predictor, config.verbalizer);

  EvalResult result;
  for (const auto& f : config.families) result.families.push_back(f.family);
  result.shots = config.shots;
  result.seeds = config.seeds;

  const std::size_t total = specs.size() * config.shots.size() * config.seeds.size();
  for (std::size_t fi = 0; fi < specs.size(); ++fi) {
    const auto& spec = specs[fi];
    for (auto k : config.shots) {
      for (auto seed : config.seeds) {
        CellResult cell;
        cell.family = spec.family;
        cell.k = k;
        cell.seed = seed;
        const auto start = std::chrono::steady_clock::now();
        try {
          const auto shots = sample_shots(table, k, seed, config.eval_size);
          if (k > 0 && config.emit_corpora) {
            const auto dir = config.output_dir / "corpora" /
                             (std::string(family_name(spec.family)) + "_k" + std::to_string(k) + "_s" +
                              std::to_string(seed));
            emit_jsonl(table, shots, spec, config.prompt, dir);
          }
          std::vector<Prompt> prompts;
          std::vector<int> labels;
          for (auto r : shots.eval_rows) {
            prompts.push_back(row_prompt(table, r, spec, config.prompt));
            labels.push_back(table.target(r));
          }
          const auto scores = predictor.score_all(prompts, shots.eval_rows);
          std::vector<double> probs;
          for (const auto& s : scores) {
            probs.push_back(s.positive_probability);
            cell.unmatched += s.unmatched ? 1 : 0;
          }
          cell.eval_rows = prompts.size();
          cell.auc = auc(probs, labels);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        cell.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.cells.push_back(cell);
        if (log) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "auc=%.3f", cell.auc.value_or(0.0));
          *log << "[" << result.cells.size() << "/" << total << "] " << detail::cell_label(cell) << " "
               << (cell.ok() ? std::string(buf) : "FAILED: " + cell.error) << "\n";
        }
      }
    }
  }
  return result;
}

struct ResultFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
  std::filesystem::path timings;
  std::optional<std::filesystem::path> failures;
};

inline std::string format_auc(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

/// Writes results.csv (families x shots, mean AUC over seeds, 3 decimals),
/// results.json (every raw cell), timings.json, and failures.json when any
/// cell failed. Everything except timings.json is deterministic.
inline ResultFiles emit_results_table(const EvalResult& result, const std::filesystem::path& dir) {
  if (result.cells.empty()) throw ValidationError("emit_results_table: result is empty");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + dir.string() + "': " + ec.message());

  ResultFiles files{dir / "results.csv", dir / "results.json", dir / "timings.json", std::nullopt};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write '" + p.string() + "'");
    return out;
  };

  {
    auto out = open(files.csv);
    csv::Record header{"Serialization Method"};
    for (auto k : result.shots) header.push_back(std::to_string(k));
    csv::write_record(out, header);
    for (auto f : result.families) {
      csv::Record row{std::string(family_display_name(f))};
      for (auto k : result.shots) {
        auto m = result.mean_auc(f, k);
        row.push_back(m ? format_auc(*m) : "");
      }
      csv::write_record(out, row);
    }
  }

  nlohmann::ordered_json cells = nlohmann::ordered_json::array(), timings = nlohmann::ordered_json::array(),
                         failures = nlohmann::ordered_json::array();
  for (const auto& c : result.cells) {
    nlohmann::ordered_json j;
    j["family"] = family_name(c.family);
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["auc"] = c.auc ? nlohmann::ordered_json(*c.auc) : nlohmann::ordered_json(nullptr);
    j["eval_rows"] = c.eval_rows;
    j["unmatched"] = c.unmatched;
    cells.push_back(j);
    timings.push_back({{"family", family_name(c.family)}, {"k", c.k}, {"seed", c.seed},
                       {"runtime_seconds", c.runtime_seconds}});
    if (!c.ok())
      failures.push_back({{"family", family_name(c.family)}, {"k", c.k}, {"seed", c.seed}, {"error", c.error}});
  }
  nlohmann::ordered_json doc;
  doc["shots"] = result.shots;
  doc["seeds"] = result.seeds;
  doc["cells"] = cells;
  open(files.json) << doc.dump(2) << '\n';
  open(files.timings) << timings.dump(2) << '\n';

  const auto failure_path = dir / "failures.json";
  if (!failures.empty()) {
    open(failure_path) << failures.dump(2) << '\n';
    files.failures = failure_path;
  } else {
    std::filesystem::remove(failure_path, ec);
  }
  return files;
}

}  // namespace tabprompt
