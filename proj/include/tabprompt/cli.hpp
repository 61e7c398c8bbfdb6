#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabprompt/config.hpp"
#include "tabprompt/dataset.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/eval.hpp"
#include "tabprompt/fewshot.hpp"
#include "tabprompt/importance.hpp"
#include "tabprompt/serialize.hpp"

namespace tabprompt::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kValidation = 2 };

struct RankArgs {
  std::string data;
  std::string config;
  std::string label_col;
  std::string positive;
  std::size_t k = 4;
  std::string out;
};

struct SerializeArgs {
  std::string data;
  std::string family;
  std::string config;
  std::string report;
  std::string label_col;
  std::string positive;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> eval_size;
  std::optional<std::size_t> token_budget;
  std::string out;
};

struct EvalArgs {
  std::string config;
  std::string out;
  std::vector<std::size_t> shots;
  std::vector<std::uint64_t> seeds;
};

namespace detail {

// Schema from --config when given, otherwise inferred from the data file.
inline Table load_cli_table(const std::string& data, const std::optional<ExperimentConfig>& config,
                            const std::string& label_col, const std::string& positive) {
  if (data.empty()) throw ValidationError("--data is required");
  if (!std::filesystem::exists(data)) throw ValidationError("data file '" + data + "' does not exist");
  if (config && config->schema) return load_table(data, *config->schema);
  std::string label = !label_col.empty() ? label_col : (config ? config->label_column : "");
  std::string pos = !positive.empty() ? positive : (config ? config->positive_label : "");
  if (label.empty() || pos.empty())
    throw ValidationError("schema inference needs --label-col and --positive (or a --config with a schema)");
  auto schema = infer_schema(data, label, pos);
  if (config) schema.negative_label = config->negative_label;
  return load_table(data, schema);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out << text;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace detail

/// Ranks features and writes the report JSON to --out (stdout if empty).
inline int cmd_rank(const RankArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (a.k == 0) throw ValidationError("--k must be positive");
    std::optional<ExperimentConfig> config;
    if (!a.config.empty()) config = load_config(a.config);
    const auto table = detail::load_cli_table(a.data, config, a.label_col, a.positive);
    const auto report = rank_features(table, a.k);
    const auto text = report_to_json(report).dump(2) + "\n";
    if (a.out.empty())
      out << text;
    else
      detail::write_text_file(a.out, text);
    return static_cast<int>(kOk);
  });
}

/// Samples a k-shot split and writes train.jsonl / eval.jsonl under --out.
inline int cmd_serialize(const SerializeArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (a.out.empty()) throw ValidationError("--out is required");
    if (a.family.empty()) throw ValidationError("--family is required");
    const Family family = parse_family(a.family);
    std::optional<ExperimentConfig> config;
    if (!a.config.empty()) config = load_config(a.config);

    std::string data = a.data;
    if (data.empty() && config) data = config->dataset.string();
    const auto table = detail::load_cli_table(data, config, a.label_col, a.positive);

    SerializerSpec spec;
    spec.family = family;
    if (config)
      for (const auto& f : config->families)
        if (f.family == family) {
          spec.groups = f.groups;
          spec.latex = f.latex;
          spec.token_budget = f.token_budget;
        }
    if (a.token_budget) spec.token_budget = a.token_budget;
    if (uses_report(family)) {
      if (a.report.empty()) throw ValidationError("family " + a.family + " requires --report");
      spec.report = report_from_json(read_json_file(a.report));
    }
    spec.validate(table.schema());

    PromptOptions prompt = config ? config->prompt : PromptOptions{};
    std::size_t eval_size = a.eval_size.value_or(config ? config->eval_size : 0);
    if (eval_size == 0) {
      if (table.size() <= a.shots) throw ValidationError("no rows left for evaluation");
      eval_size = table.size() - a.shots;
    }
    const auto shots = sample_shots(table, a.shots, a.seed, eval_size);
    const auto files = emit_jsonl(table, shots, spec, prompt, a.out);
    out << files.train.string() << "\n" << files.eval.string() << "\n";
    return static_cast<int>(kOk);
  });
}

/// Runs the configured grid and writes results under the output directory.
/// Exit 0 only when every cell completed.
inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (a.config.empty()) throw ValidationError("--config is required");
    auto config = load_config(a.config);
    if (!a.out.empty()) config.output_dir = a.out;
    if (!a.shots.empty()) config.shots = a.shots;
    if (!a.seeds.empty()) config.seeds = a.seeds;
    const auto result = run_experiment(config, &err);
    const auto files = emit_results_table(result, config.output_dir);
    out << files.csv.string() << "\n" << files.json.string() << "\n";
    if (!result.complete()) {
      err << "error: some grid cells failed; see " << files.failures->string() << "\n";
      return static_cast<int>(kRuntime);
    }
    return static_cast<int>(kOk);
  });
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Serialize tabular rows into LLM prompts and evaluate few-shot AUC grids.\n"
               "Flags take precedence over the corresponding --config fields."};
  app.require_subcommand(1);

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank features by absolute covariance with the label");
  rank_cmd->add_option("--data", rank.data, "CSV file")->required();
  rank_cmd->add_option("--config", rank.config, "Experiment config supplying the schema");
  rank_cmd->add_option("--label-col", rank.label_col, "Label column (schema inference)");
  rank_cmd->add_option("--positive", rank.positive, "Positive label value (schema inference)");
  rank_cmd->add_option("--k", rank.k, "Number of top features")->capture_default_str();
  rank_cmd->add_option("--out", rank.out, "Report JSON path (default: stdout)");

  SerializeArgs ser;
  auto* ser_cmd = app.add_subcommand("serialize", "Write k-shot train/eval JSONL corpora");
  ser_cmd->add_option("--data", ser.data, "CSV file (overrides config dataset)");
  ser_cmd->add_option("--family", ser.family,
                      "text_template | feature_combination | importance_prefix | importance_suffix | latex")
      ->required();
  ser_cmd->add_option("--config", ser.config, "Experiment config (schema, groups, question, eval_size)");
  ser_cmd->add_option("--report", ser.report, "Importance report JSON from `rank`");
  ser_cmd->add_option("--label-col", ser.label_col, "Label column (schema inference)");
  ser_cmd->add_option("--positive", ser.positive, "Positive label value (schema inference)");
  ser_cmd->add_option("--shots", ser.shots, "Number of training shots k")->capture_default_str();
  ser_cmd->add_option("--seed", ser.seed, "Sampling seed")->capture_default_str();
  ser_cmd->add_option("--eval-size", ser.eval_size, "Eval rows (default: config, else all remaining)");
  ser_cmd->add_option("--token-budget", ser.token_budget, "Maximum estimated prompt tokens");
  ser_cmd->add_option("--out", ser.out, "Output directory")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Run the family x shots x seeds AUC grid");
  eval_cmd->add_option("--config", ev.config, "Experiment config JSON")->required();
  eval_cmd->add_option("--out", ev.out, "Output directory (overrides output_dir)");
  eval_cmd->add_option("--shots", ev.shots, "Shot counts, comma separated (overrides shots)")->delimiter(',');
  eval_cmd->add_option("--seeds", ev.seeds, "Seeds, comma separated (overrides seeds)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  if (*rank_cmd) return cmd_rank(rank, out, err);
  if (*ser_cmd) return cmd_serialize(ser, out, err);
  return cmd_eval(ev, out, err);
}

}  // namespace tabprompt::cli
