#pragma once

// Expected serializations of fixtures/golden5.csv, written out by hand from
// the format rules. Shared by the unit tests and the acceptance suite.

#include <array>
#include <map>
#include <string>

#include "tabprompt/importance.hpp"
#include "tabprompt/serialize.hpp"

namespace tabprompt::testing::golden {

inline FeatureGroup body_group() {
  return {"The {color} {Make} has a {body_type} body.", {"Make", "color", "body_type"}};
}

inline ImportanceReport report() {
  ImportanceReport r;
  r.k = 2;
  r.ranking = {"issue", "price", "Make", "color", "body_type"};
  r.top_k = {"issue", "price"};
  r.scores = {{"issue", 0.4}, {"price", -0.3}, {"Make", 0.2}, {"color", 0.1}, {"body_type", 0.0}};
  return r;
}

using Expected = std::array<std::string, 5>;

inline const std::map<Family, Expected>& expected() {
  static const std::map<Family, Expected> table = {
      {Family::text_template,
       {"Make is Ford, color is red, body_type is sedan, price is 5000, issue is engine failure.",
        "Make is R&D special, color is blue, body_type is estate, price is 12500.5, issue is 50%_off.",
        R"(Make is unknown, color is silver, body_type is SUV, price is unknown, issue is C:\temp~^.)",
        "Make is Toyota, color is dark #1 {fleet}, body_type is hatchback, price is 7999, issue is $ claim.",
        "Make is BMW, color is black, body_type is unknown, price is 0.125, issue is unknown."}},
      {Family::feature_combination,
       {"The red Ford has a sedan body. price is 5000, issue is engine failure.",
        "The blue R&D special has a estate body. price is 12500.5, issue is 50%_off.",
        R"(The silver unknown has a SUV body. price is unknown, issue is C:\temp~^.)",
        "The dark #1 {fleet} Toyota has a hatchback body. price is 7999, issue is $ claim.",
        "The black BMW has a unknown body. price is 0.125, issue is unknown."}},
      {Family::importance_prefix,
       {"Make is Ford, color is red, body_type is sedan, Critically, price is 5000, Critically, issue is engine failure.",
        "Make is R&D special, color is blue, body_type is estate, Critically, price is 12500.5, Critically, issue is "
        "50%_off.",
        R"(Make is unknown, color is silver, body_type is SUV, Critically, price is unknown, Critically, issue is C:\temp~^.)",
        "Make is Toyota, color is dark #1 {fleet}, body_type is hatchback, Critically, price is 7999, Critically, issue "
        "is $ claim.",
        "Make is BMW, color is black, body_type is unknown, Critically, price is 0.125, Critically, issue is unknown."}},
      {Family::importance_suffix,
       {"Make is Ford, color is red, body_type is sedan, price is 5000, issue is engine failure. The 2 most important "
        "features for the inference are: issue, price.",
        "Make is R&D special, color is blue, body_type is estate, price is 12500.5, issue is 50%_off. The 2 most "
        "important features for the inference are: issue, price.",
        R"(Make is unknown, color is silver, body_type is SUV, price is unknown, issue is C:\temp~^. The 2 most important features for the inference are: issue, price.)",
        "Make is Toyota, color is dark #1 {fleet}, body_type is hatchback, price is 7999, issue is $ claim. The 2 most "
        "important features for the inference are: issue, price.",
        "Make is BMW, color is black, body_type is unknown, price is 0.125, issue is unknown. The 2 most important "
        "features for the inference are: issue, price."}},
      {Family::latex,
       {R"(\hline Ford & red & sedan & 5000 & engine failure \\)",
        R"(\hline R\&D special & blue & estate & 12500.5 & 50\%\_off \\)",
        R"(\hline unknown & silver & SUV & unknown & C:\textbackslash temp\textasciitilde \textasciicircum  \\)",
        R"(\hline Toyota & dark \#1 \{fleet\} & hatchback & 7999 & \$ claim \\)",
        R"(\hline BMW & black & unknown & 0.125 & unknown \\)"}},
  };
  return table;
}

inline SerializerSpec spec_for(Family f) {
  SerializerSpec spec;
  spec.family = f;
  if (f == Family::feature_combination) spec.groups = {body_group()};
  if (uses_report(f)) spec.report = report();
  return spec;
}

}  // namespace tabprompt::testing::golden
