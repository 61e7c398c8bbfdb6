#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprompt/dataset.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/importance.hpp"
#include "tabprompt/predict.hpp"
#include "tabprompt/serialize.hpp"
#include "tabprompt/verbalize.hpp"

namespace tabprompt {

// Experiment configuration, one JSON document:
//
//   {
//     "dataset": "vehicle_claims.csv",          // relative to the config file
//     "schema": {...} | {"infer": true, "label_column": "...", "positive_label": "..."},
//     "keep_features": 12,                      // optional column elimination
//     "families": [{"family": "text_template"},
//                  {"family": "feature_combination", "groups": [{"template": "...", "features": [...]}]},
//                  {"family": "importance_prefix", "k": 4},
//                  {"family": "latex", "escape": true, "token_budget": 512}],
//     "shots": [0, 4, 8], "seeds": [1, 2], "eval_size": 200,
//     "predictor": {"kind": "mock", "mock_weights": {...}, "mock_bias": -1},
//     "verbalizer": {"positive_forms": ["yes"], "negative_forms": ["no"], "fallback_probability": 0.5},
//     "question": "...", "choices": ["No", "Yes"],
//     "output_dir": "out"
//   }

struct FamilyConfig {
  Family family = Family::text_template;
  std::vector<FeatureGroup> groups;
  std::size_t importance_k = 4;
  LatexOptions latex;
  std::optional<std::size_t> token_budget;
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::optional<Schema> schema;  // absent: infer from the dataset
  std::string label_column;
  std::string positive_label;
  std::optional<std::string> negative_label;
  std::optional<std::size_t> keep_features;
  std::vector<FamilyConfig> families;
  std::vector<std::size_t> shots;
  std::vector<std::uint64_t> seeds;
  std::size_t eval_size = 100;
  PredictorConfig predictor;
  Verbalizer verbalizer;
  PromptOptions prompt;
  std::filesystem::path output_dir = "out";
  bool emit_corpora = true;

  /// Checks that need no file access.
  void validate() const {
    if (dataset.empty()) throw ValidationError("config: dataset is required");
    if (!schema && (label_column.empty() || positive_label.empty()))
      throw ValidationError("config: schema inference needs label_column and positive_label");
    if (keep_features && *keep_features == 0) throw ValidationError("config: keep_features must be positive");
    if (families.empty()) throw ValidationError("config: at least one family is required");
    std::set<Family> seen;
    for (const auto& f : families) {
      if (!seen.insert(f.family).second)
        throw ValidationError("config: family '" + std::string(family_name(f.family)) + "' listed twice");
      if (uses_report(f.family) && f.importance_k == 0) throw ValidationError("config: importance k must be positive");
      if (f.family == Family::feature_combination && f.groups.empty())
        throw ValidationError("config: feature_combination requires groups");
      if (f.token_budget && *f.token_budget == 0) throw ValidationError("config: token_budget must be positive");
    }
    if (shots.empty()) throw ValidationError("config: shots list is empty");
    if (std::set<std::size_t>(shots.begin(), shots.end()).size() != shots.size())
      throw ValidationError("config: shots list has duplicates");
    if (seeds.empty()) throw ValidationError("config: seeds list is empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw ValidationError("config: seeds list has duplicates");
    if (eval_size == 0) throw ValidationError("config: eval_size must be positive");
    predictor.validate();
    verbalizer.validate();
    prompt.validate();
    if (output_dir.empty()) throw ValidationError("config: output_dir is required");
  }
};

namespace detail {

template <typename T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline FamilyConfig family_from_json(const nlohmann::json& j) {
  FamilyConfig f;
  if (j.is_string()) {
    f.family = parse_family(j.get<std::string>());
    return f;
  }
  f.family = parse_family(detail::json_get<std::string>(j, "family", ""));
  f.importance_k = detail::json_get<std::size_t>(j, "k", f.importance_k);
  f.latex.escape = detail::json_get<bool>(j, "escape", f.latex.escape);
  if (j.contains("token_budget")) f.token_budget = detail::json_get<std::size_t>(j, "token_budget", 0);
  if (j.contains("groups")) {
    for (const auto& g : j["groups"]) {
      FeatureGroup group;
      group.sentence_template = detail::json_get<std::string>(g, "template", "");
      group.features = detail::json_get<std::vector<std::string>>(g, "features", {});
      if (group.sentence_template.empty()) throw ValidationError("config: feature group without a template");
      f.groups.push_back(std::move(group));
    }
  }
  return f;
}

/// Parses a config document. Relative paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  c.dataset = resolve(detail::json_get<std::string>(j, "dataset", ""));
  if (j.contains("schema")) {
    const auto& s = j["schema"];
    if (s.value("infer", false)) {
      c.label_column = detail::json_get<std::string>(s, "label_column", "");
      c.positive_label = detail::json_get<std::string>(s, "positive_label", "");
      if (s.contains("negative_label")) c.negative_label = detail::json_get<std::string>(s, "negative_label", "");
    } else {
      c.schema = schema_from_json(s);
    }
  }
  c.label_column = detail::json_get<std::string>(j, "label_column", c.label_column);
  c.positive_label = detail::json_get<std::string>(j, "positive_label", c.positive_label);
  if (j.contains("negative_label")) c.negative_label = detail::json_get<std::string>(j, "negative_label", "");
  if (j.contains("keep_features")) c.keep_features = detail::json_get<std::size_t>(j, "keep_features", 0);
  if (j.contains("families"))
    for (const auto& f : j["families"]) c.families.push_back(family_from_json(f));
  c.shots = detail::json_get<std::vector<std::size_t>>(j, "shots", {});
  c.seeds = detail::json_get<std::vector<std::uint64_t>>(j, "seeds", {});
  c.eval_size = detail::json_get<std::size_t>(j, "eval_size", c.eval_size);
  if (!j.contains("predictor")) throw ValidationError("config: predictor is required");
  c.predictor = predictor_from_json(j["predictor"]);
  if (j.contains("verbalizer")) c.verbalizer = verbalizer_from_json(j["verbalizer"]);
  c.prompt.question = detail::json_get<std::string>(j, "question", c.prompt.question);
  if (j.contains("choices")) {
    auto ch = detail::json_get<std::vector<std::string>>(j, "choices", {});
    if (ch.size() != 2) throw ValidationError("config: choices must hold exactly two entries");
    c.prompt.choices = {ch[0], ch[1]};
  }
  c.output_dir = resolve(detail::json_get<std::string>(j, "output_dir", "out"));
  c.emit_corpora = detail::json_get<bool>(j, "emit_corpora", c.emit_corpora);
  c.validate();
  return c;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("'" + path.string() + "' is not valid JSON");
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path), path.parent_path());
}

/// Loads the configured table: inline schema or inference, then optional
/// column elimination by importance.
inline Table load_experiment_table(const ExperimentConfig& c) {
  Schema schema;
  if (c.schema) {
    schema = *c.schema;
  } else {
    schema = infer_schema(c.dataset.string(), c.label_column, c.positive_label);
    schema.negative_label = c.negative_label;
  }
  Table table = load_table(c.dataset.string(), schema);
  if (c.keep_features) {
    const auto n = table.schema().feature_indices().size();
    if (*c.keep_features > n)
      throw ValidationError("config: keep_features=" + std::to_string(*c.keep_features) + " exceeds the " +
                            std::to_string(n) + " features of the dataset");
    if (*c.keep_features < n) table = drop_least_important(table, rank_features(table, n), *c.keep_features);
  }
  return table;
}

/// Serializer spec for one configured family against a loaded table.
inline SerializerSpec make_spec(const FamilyConfig& f, const Table& table) {
  SerializerSpec spec;
  spec.family = f.family;
  spec.groups = f.groups;
  spec.latex = f.latex;
  spec.token_budget = f.token_budget;
  if (uses_report(f.family)) spec.report = rank_features(table, f.importance_k);
  spec.validate(table.schema());
  return spec;
}

}  // namespace tabprompt
