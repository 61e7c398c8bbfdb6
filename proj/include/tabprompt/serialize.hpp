#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabprompt/dataset.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/importance.hpp"

namespace tabprompt {

enum class Family { text_template, feature_combination, importance_prefix, importance_suffix, latex };

inline constexpr std::array<Family, 5> kAllFamilies = {Family::text_template, Family::feature_combination,
                                                        Family::importance_prefix, Family::importance_suffix,
                                                        Family::latex};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::text_template: return "text_template";
    case Family::feature_combination: return "feature_combination";
    case Family::importance_prefix: return "importance_prefix";
    case Family::importance_suffix: return "importance_suffix";
    case Family::latex: return "latex";
  }
  return "?";
}

/// Row label used in the results matrix.
inline std::string_view family_display_name(Family f) {
  switch (f) {
    case Family::text_template: return "Text Template";
    case Family::feature_combination: return "Feature Combination";
    case Family::importance_prefix: return "Feature Importance (prefix)";
    case Family::importance_suffix: return "Feature Importance (suffix)";
    case Family::latex: return "LaTeX";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  for (auto f : kAllFamilies)
    if (family_name(f) == name) return f;
  throw ValidationError("unknown serialization family '" + std::string(name) + "'");
}

inline bool uses_report(Family f) { return f == Family::importance_prefix || f == Family::importance_suffix; }

/// One sentence rendering several features, e.g.
/// "The {color} {make} has a {body type} body." over {make, color, body type}.
struct FeatureGroup {
  std::string sentence_template;
  std::vector<std::string> features;
};

struct LatexOptions {
  bool escape = true;
};

struct SerializerSpec {
  Family family = Family::text_template;
  std::vector<FeatureGroup> groups;
  std::optional<ImportanceReport> report;
  std::optional<std::size_t> token_budget;
  LatexOptions latex;

  void validate(const Schema& schema) const;
};

struct PromptOptions {
  std::string question = "Is this vehicle claim anomalous? Yes or no?";
  std::array<std::string, 2> choices = {"No", "Yes"};  // (negative, positive)

  void validate() const {
    if (choices[0] == choices[1]) throw ValidationError("answer choices must be distinct");
    if (choices[0].empty() || choices[1].empty()) throw ValidationError("answer choices must be nonempty");
  }
};

struct Prompt {
  std::string serialized_row;
  std::string question;
  std::array<std::string, 2> answer_choices;

  /// Text handed to a model: the serialized row, a newline, the question.
  std::string text() const { return question.empty() ? serialized_row : serialized_row + "\n" + question; }
};

inline std::size_t estimate_tokens(std::string_view s) { return (s.size() + 3) / 4; }

inline std::string escape_latex(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    switch (c) {
      case '&': case '%': case '$': case '#': case '_': case '{': case '}':
        out.push_back('\\');
        out.push_back(c);
        break;
      case '\\': out += "\\textbackslash "; break;
      case '~': out += "\\textasciitilde "; break;
      case '^': out += "\\textasciicircum "; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace detail {

struct Placeholder {
  std::size_t begin, end;  // [begin, end) covers the braces
  std::string name;
};

inline std::vector<Placeholder> scan_placeholders(std::string_view tmpl) {
  std::vector<Placeholder> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '}') throw ValidationError("template '" + std::string(tmpl) + "': unmatched '}'");
    if (tmpl[i] != '{') continue;
    auto close = tmpl.find_first_of("{}", i + 1);
    if (close == std::string_view::npos || tmpl[close] != '}')
      throw ValidationError("template '" + std::string(tmpl) + "': unmatched '{'");
    auto name = std::string(tmpl.substr(i + 1, close - i - 1));
    if (name.empty()) throw ValidationError("template '" + std::string(tmpl) + "': empty placeholder");
    out.push_back({i, close + 1, std::move(name)});
    i = close;
  }
  return out;
}

inline void check_group(const FeatureGroup& g) {
  for (const auto& p : scan_placeholders(g.sentence_template))
    if (std::find(g.features.begin(), g.features.end(), p.name) == g.features.end())
      throw ValidationError("template '" + g.sentence_template + "' references '" + p.name +
                            "', which is not a member of its group");
}

}  // namespace detail

inline void SerializerSpec::validate(const Schema& schema) const {
  if (uses_report(family)) {
    if (!report) throw ValidationError(std::string(family_name(family)) + " requires an importance report");
    if (report->top_k.empty()) throw ValidationError("importance report has an empty top_k");
    for (const auto& name : report->top_k)
      if (!schema.is_feature(name))
        throw ValidationError("importance report names '" + name + "', which is not a feature of this table");
  }
  if (family == Family::feature_combination && groups.empty())
    throw ValidationError("feature_combination requires at least one group");
  std::vector<std::string> seen;
  for (const auto& g : groups) {
    if (g.features.empty()) throw ValidationError("feature group '" + g.sentence_template + "' has no members");
    for (const auto& f : g.features) {
      if (f == schema.label_column)
        throw ValidationError("feature group '" + g.sentence_template + "' includes the label column");
      if (!schema.is_feature(f))
        throw ValidationError("feature group member '" + f + "' is not a column of the table");
      if (std::find(seen.begin(), seen.end(), f) != seen.end())
        throw ValidationError("feature '" + f + "' appears in more than one group");
      seen.push_back(f);
    }
    detail::check_group(g);
  }
  if (token_budget && *token_budget == 0) throw ValidationError("token_budget must be positive");
}

/// A serialized row kept in pieces so a token budget can drop pieces.
/// Fragments ("make is Ford") are comma-joined into one sentence per run;
/// sentences (rendered groups) stand alone. LaTeX segments are cells.
struct SerializedRow {
  struct Segment {
    std::vector<std::string> features;
    std::string text;
    bool sentence = false;
  };
  Family family = Family::text_template;
  std::vector<Segment> segments;
  std::string suffix;  // appended after the body, never trimmed

  std::string render() const {
    if (family == Family::latex) {
      std::string out = "\\hline ";
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += " & ";
        out += segments[i].text;
      }
      return out + " \\\\";
    }
    std::string out;
    bool in_run = false;
    for (const auto& seg : segments) {
      if (seg.sentence) {
        if (in_run) out += ".";
        in_run = false;
        if (!out.empty()) out += " ";
        out += seg.text;
      } else {
        out += in_run ? ", " : (out.empty() ? "" : " ");
        out += seg.text;
        in_run = true;
      }
    }
    if (in_run) out += ".";
    if (!suffix.empty()) out += (out.empty() ? "" : " ") + suffix;
    return out;
  }
};

namespace detail {

inline std::string fragment(const std::string& column, const Cell& cell) {
  return column + " is " + cell_text(cell);
}

inline SerializedRow text_segments(const Row& row, const Schema& schema) {
  SerializedRow out;
  for (auto i : schema.feature_indices()) {
    const auto& name = schema.columns[i].name;
    out.segments.push_back({{name}, fragment(name, row[i]), false});
  }
  return out;
}

inline std::string render_group(const FeatureGroup& g, const Row& row, const Schema& schema) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& p : scan_placeholders(g.sentence_template)) {
    if (std::find(g.features.begin(), g.features.end(), p.name) == g.features.end())
      throw ValidationError("template '" + g.sentence_template + "' references '" + p.name +
                            "', which is not a member of its group");
    auto idx = schema.index_of(p.name);
    if (!idx) throw ValidationError("group feature '" + p.name + "' is not in the schema");
    out.append(g.sentence_template, pos, p.begin - pos);
    out += cell_text(row[*idx]);
    pos = p.end;
  }
  out.append(g.sentence_template, pos);
  return out;
}

}  // namespace detail

inline SerializedRow segment_text_template(const Row& row, const Schema& schema) {
  auto out = detail::text_segments(row, schema);
  out.family = Family::text_template;
  return out;
}

inline SerializedRow segment_feature_combination(const Row& row, const Schema& schema,
                                                 const std::vector<FeatureGroup>& groups) {
  struct Unit {
    std::size_t order;
    SerializedRow::Segment seg;
  };
  std::vector<Unit> units;
  std::vector<std::string> grouped;
  for (const auto& g : groups) {
    std::size_t first = schema.columns.size();
    for (const auto& f : g.features) {
      auto idx = schema.index_of(f);
      if (!idx || f == schema.label_column)
        throw ValidationError("feature group member '" + f + "' is not a feature of the table");
      first = std::min(first, *idx);
      grouped.push_back(f);
    }
    units.push_back({first, {g.features, detail::render_group(g, row, schema), true}});
  }
  for (auto i : schema.feature_indices()) {
    const auto& name = schema.columns[i].name;
    if (std::find(grouped.begin(), grouped.end(), name) != grouped.end()) continue;
    units.push_back({i, {{name}, detail::fragment(name, row[i]), false}});
  }
  std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.order < b.order; });
  SerializedRow out;
  out.family = Family::feature_combination;
  for (auto& u : units) out.segments.push_back(std::move(u.seg));
  return out;
}

namespace detail {

inline void require_report(const Schema& schema, const ImportanceReport& report) {
  if (report.top_k.empty()) throw ValidationError("importance report has an empty top_k");
  for (const auto& name : report.top_k)
    if (!schema.is_feature(name))
      throw ValidationError("importance report names '" + name + "', which is not a feature of this table");
}

}  // namespace detail

inline SerializedRow segment_importance_prefix(const Row& row, const Schema& schema, const ImportanceReport& report) {
  detail::require_report(schema, report);
  auto out = detail::text_segments(row, schema);
  out.family = Family::importance_prefix;
  for (auto& seg : out.segments)
    if (report.in_top_k(seg.features.front())) seg.text = "Critically, " + seg.text;
  return out;
}

inline SerializedRow segment_importance_suffix(const Row& row, const Schema& schema, const ImportanceReport& report) {
  detail::require_report(schema, report);
  auto out = detail::text_segments(row, schema);
  out.family = Family::importance_suffix;
  out.suffix = "The " + std::to_string(report.top_k.size()) + " most important features for the inference are: ";
  for (std::size_t i = 0; i < report.top_k.size(); ++i) {
    if (i) out.suffix += ", ";
    out.suffix += report.top_k[i];
  }
  out.suffix += ".";
  return out;
}

inline SerializedRow segment_latex(const Row& row, const Schema& schema, const LatexOptions& opts = {}) {
  SerializedRow out;
  out.family = Family::latex;
  for (auto i : schema.feature_indices()) {
    auto text = cell_text(row[i]);
    out.segments.push_back({{schema.columns[i].name}, opts.escape ? escape_latex(text) : text, false});
  }
  return out;
}

inline SerializedRow segment_row(const Row& row, const Schema& schema, const SerializerSpec& spec) {
  switch (spec.family) {
    case Family::text_template: return segment_text_template(row, schema);
    case Family::feature_combination: return segment_feature_combination(row, schema, spec.groups);
    case Family::importance_prefix:
      if (!spec.report) throw ValidationError("importance_prefix requires an importance report");
      return segment_importance_prefix(row, schema, *spec.report);
    case Family::importance_suffix:
      if (!spec.report) throw ValidationError("importance_suffix requires an importance report");
      return segment_importance_suffix(row, schema, *spec.report);
    case Family::latex: return segment_latex(row, schema, spec.latex);
  }
  throw ValidationError("unknown serialization family");
}

// "Age is 35, sex is female."
inline std::string serialize_text_template(const Row& row, const Schema& schema) {
  return segment_text_template(row, schema).render();
}

inline std::string serialize_feature_combination(const Row& row, const Schema& schema,
                                                 const std::vector<FeatureGroup>& groups) {
  return segment_feature_combination(row, schema, groups).render();
}

inline std::string serialize_importance_prefix(const Row& row, const Schema& schema, const ImportanceReport& report) {
  return segment_importance_prefix(row, schema, report).render();
}

inline std::string serialize_importance_suffix(const Row& row, const Schema& schema, const ImportanceReport& report) {
  return segment_importance_suffix(row, schema, report).render();
}

// "\hline Ford & 5000 \\"
inline std::string serialize_latex(const Row& row, const Schema& schema, const LatexOptions& opts = {}) {
  return segment_latex(row, schema, opts).render();
}

inline std::string serialize_row(const Row& row, const Schema& schema, const SerializerSpec& spec) {
  return segment_row(row, schema, spec).render();
}

/// Assembles a prompt. With a token budget, whole segments are dropped until
/// the full prompt text fits: least important first when the spec carries a
/// report, otherwise from the end.
inline Prompt build_prompt(SerializedRow row, const SerializerSpec& spec, const PromptOptions& opts) {
  opts.validate();
  if (row.segments.empty() && row.suffix.empty()) throw ValidationError("cannot build a prompt from an empty row");
  auto make = [&] { return Prompt{row.render(), opts.question, opts.choices}; };
  Prompt prompt = make();
  if (!spec.token_budget) return prompt;
  const std::size_t budget = *spec.token_budget;

  while (estimate_tokens(prompt.text()) > budget) {
    if (row.segments.size() <= 1)
      throw ValidationError("token budget " + std::to_string(budget) + " is unreachable: a single-fragment prompt needs " +
                            std::to_string(estimate_tokens(prompt.text())) + " tokens");
    std::size_t victim = row.segments.size() - 1;
    if (spec.report) {
      auto importance = [&](const SerializedRow::Segment& s) {
        std::size_t best = spec.report->ranking.size();
        for (const auto& f : s.features) best = std::min(best, spec.report->rank_of(f));
        return best;
      };
      for (std::size_t i = row.segments.size(); i-- > 0;)
        if (importance(row.segments[i]) > importance(row.segments[victim])) victim = i;
    }
    row.segments.erase(row.segments.begin() + static_cast<std::ptrdiff_t>(victim));
    prompt = make();
  }
  return prompt;
}

/// Budget check for already-rendered text; nothing can be trimmed here.
inline Prompt build_prompt(std::string serialized, const SerializerSpec& spec, const PromptOptions& opts) {
  opts.validate();
  if (serialized.empty()) throw ValidationError("cannot build a prompt from an empty row");
  Prompt p{std::move(serialized), opts.question, opts.choices};
  if (spec.token_budget && estimate_tokens(p.text()) > *spec.token_budget)
    throw ValidationError("prompt needs " + std::to_string(estimate_tokens(p.text())) + " tokens, budget is " +
                          std::to_string(*spec.token_budget));
  return p;
}

/// One JSONL corpus line: {"input": ..., "choices": [neg, pos], "label": 0|1}.
inline nlohmann::ordered_json corpus_record(const Prompt& prompt, int label) {
  nlohmann::ordered_json j;
  j["input"] = prompt.text();
  j["choices"] = {prompt.answer_choices[0], prompt.answer_choices[1]};
  j["label"] = label;
  return j;
}

}  // namespace tabprompt
