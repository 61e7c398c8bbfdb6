#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tabprompt/error.hpp"

namespace tabprompt {

struct PredictionScore {
  double positive_probability = 0.5;
  std::string raw_output;
  bool unmatched = false;  // verbalizer fell back
};

/// Manual mapping from model text to a class.
struct Verbalizer {
  std::set<std::string> positive_forms = {"yes"};
  std::set<std::string> negative_forms = {"no"};
  double fallback_probability = 0.5;

  void validate() const {
    if (positive_forms.empty() || negative_forms.empty())
      throw ValidationError("verbalizer needs at least one positive and one negative form");
    for (const auto& f : positive_forms)
      if (negative_forms.count(f)) throw ValidationError("verbalizer form '" + f + "' is both positive and negative");
    if (!(fallback_probability >= 0.0 && fallback_probability <= 1.0))
      throw ValidationError("verbalizer fallback_probability must lie in [0, 1]");
  }
};

/// trim, lowercase, then strip trailing '.', '!' and '?'
inline std::string normalize_output(std::string_view raw) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!raw.empty() && is_space(static_cast<unsigned char>(raw.front()))) raw.remove_prefix(1);
  while (!raw.empty() && is_space(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
  std::string out(raw);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?')) out.pop_back();
  return out;
}

inline PredictionScore map_output(std::string_view raw, const Verbalizer& v) {
  const auto norm = normalize_output(raw);
  if (v.positive_forms.count(norm)) return {1.0, std::string(raw), false};
  if (v.negative_forms.count(norm)) return {0.0, std::string(raw), false};
  return {v.fallback_probability, std::string(raw), true};
}

inline Verbalizer verbalizer_from_json(const nlohmann::json& j) {
  Verbalizer v;
  try {
    auto forms = [](const nlohmann::json& arr) {
      std::set<std::string> out;
      for (const auto& f : arr) out.insert(normalize_output(f.get<std::string>()));
      return out;
    };
    if (j.contains("positive_forms")) v.positive_forms = forms(j["positive_forms"]);
    if (j.contains("negative_forms")) v.negative_forms = forms(j["negative_forms"]);
    v.fallback_probability = j.value("fallback_probability", v.fallback_probability);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid verbalizer: ") + e.what());
  }
  v.validate();
  return v;
}

}  // namespace tabprompt
