#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabprompt/csv.hpp"
#include "tabprompt/error.hpp"

namespace tabprompt {

enum class ColumnKind { categorical, numeric };

inline std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

inline ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  throw ValidationError("unknown column kind '" + std::string(text) +
                        "' (expected categorical or numeric)");
}

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;

  friend bool operator==(const Column&, const Column&) = default;
};

/// Ordered column list plus the binary label designation. `negative_label`
/// is optional; when absent the negative class is whichever non-positive
/// value appears first in the data.
struct Schema {
  std::vector<Column> columns;
  std::string label_column;
  std::string positive_label;
  std::optional<std::string> negative_label;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t label_index() const {
    auto idx = index_of(label_column);
    if (!idx) throw ValidationError("label column '" + label_column + "' is not in the schema");
    return *idx;
  }

  /// Schema indices of every non-label column, in schema order.
  std::vector<std::size_t> feature_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name != label_column) out.push_back(i);
    return out;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (auto i : feature_indices()) out.push_back(columns[i].name);
    return out;
  }

  bool is_feature(std::string_view name) const {
    return name != label_column && index_of(name).has_value();
  }

  void validate() const {
    if (columns.empty()) throw ValidationError("schema has no columns");
    std::unordered_set<std::string> seen;
    for (const auto& c : columns) {
      if (c.name.empty()) throw ValidationError("schema contains an empty column name");
      if (!seen.insert(c.name).second)
        throw ValidationError("duplicate column name '" + c.name + "'");
    }
    if (label_column.empty()) throw ValidationError("schema has no label column");
    if (!index_of(label_column))
      throw ValidationError("label column '" + label_column + "' is not a schema column");
    if (positive_label.empty()) throw ValidationError("schema has no positive label");
    if (negative_label && *negative_label == positive_label)
      throw ValidationError("positive and negative labels must differ");
  }

  friend bool operator==(const Schema&, const Schema&) = default;
};

struct Missing {
  friend bool operator==(Missing, Missing) { return true; }
};

using Cell = std::variant<Missing, std::string, double>;
using Row = std::vector<Cell>;

inline bool is_missing(const Cell& cell) { return std::holds_alternative<Missing>(cell); }

inline bool is_missing_text(std::string_view text) { return text.empty() || text == "NA"; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

/// Strict finite-real parse: the whole (trimmed) text must be consumed.
inline std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

/// Integers print without a decimal point, everything else with up to six
/// significant digits.
inline std::string format_number(double value) {
  char buf[64];
  if (std::floor(value) == value && std::fabs(value) < 1e15) {
    if (value == 0) return "0";
    std::snprintf(buf, sizeof buf, "%.0f", value);
  } else {
    std::snprintf(buf, sizeof buf, "%.6g", value);
  }
  return buf;
}

/// Text of a cell as it appears in serializations; missing renders as
/// `missing_text`.
inline std::string cell_text(const Cell& cell, std::string_view missing_text = "unknown") {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  return std::string(missing_text);
}

inline bool cell_matches(const Cell& cell, std::string_view text) {
  if (is_missing(cell)) return false;
  if (const auto* d = std::get_if<double>(&cell)) {
    if (auto t = parse_real(text)) return *t == *d;
  }
  return cell_text(cell) == text;
}

inline Cell parse_cell(std::string_view text, ColumnKind kind) {
  if (is_missing_text(trim(text))) return Missing{};
  if (kind == ColumnKind::numeric) {
    if (auto v = parse_real(text)) return *v;
    throw ValidationError("not a finite real: '" + std::string(text) + "'");
  }
  return std::string(text);
}

/// Immutable typed table. Construction validates the row shape, numeric
/// cells and the two-class label rule, and caches the 0/1 target.
class Table {
public:
  Table(Schema schema, std::vector<Row> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
    schema_.validate();
    const auto width = schema_.columns.size();
    const auto label = schema_.label_index();
    std::optional<std::string> negative = schema_.negative_label;
    bool saw_positive = false;
    targets_.reserve(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const auto& row = rows_[r];
      if (row.size() != width)
        throw ValidationError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                              " cells, expected " + std::to_string(width));
      for (std::size_t c = 0; c < width; ++c) {
        if (schema_.columns[c].kind == ColumnKind::numeric && std::holds_alternative<std::string>(row[c]))
          throw ValidationError("row " + std::to_string(r) + ", column '" + schema_.columns[c].name +
                                "': text cell in a numeric column");
        if (const auto* d = std::get_if<double>(&row[c]); d && !std::isfinite(*d))
          throw ValidationError("row " + std::to_string(r) + ", column '" + schema_.columns[c].name +
                                "': non-finite value");
      }
      const Cell& y = row[label];
      if (is_missing(y))
        throw ValidationError("row " + std::to_string(r) + ": missing label");
      if (cell_matches(y, schema_.positive_label)) {
        saw_positive = true;
        targets_.push_back(1);
        continue;
      }
      if (!negative) negative = cell_text(y);
      if (!cell_matches(y, *negative))
        throw ValidationError("row " + std::to_string(r) + ": label '" + cell_text(y) +
                              "' is outside the two classes {" + schema_.positive_label + ", " +
                              *negative + "}");
      targets_.push_back(0);
    }
    if (!rows_.empty() && (!saw_positive || !negative))
      throw ValidationError("label column '" + schema_.label_column +
                            "' must contain exactly two classes including positive label '" +
                            schema_.positive_label + "'");
    negative_label_ = negative.value_or("");
  }

  const Schema& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row(std::size_t i) const { return rows_.at(i); }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  /// 1 for the positive class, 0 otherwise.
  int target(std::size_t i) const { return targets_.at(i); }
  const std::vector<int>& targets() const { return targets_; }
  const std::string& negative_label() const { return negative_label_; }

  std::size_t count_positive() const {
    return static_cast<std::size_t>(std::count(targets_.begin(), targets_.end(), 1));
  }

private:
  Schema schema_;
  std::vector<Row> rows_;
  std::vector<int> targets_;
  std::string negative_label_;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Load a CSV file against a schema. The header must name the same set of
/// columns; the resulting table uses the file's column order.
inline Table load_table(const std::string& path, const Schema& schema) {
  schema.validate();
  auto records = csv::parse(detail::read_file(path));
  if (records.empty()) throw ValidationError("'" + path + "' is empty");
  const auto& header = records.front();

  std::vector<std::string> extra, absent;
  std::set<std::string> header_set;
  for (const auto& name : header) {
    if (!header_set.insert(name).second)
      throw ValidationError("'" + path + "': duplicate header '" + name + "'");
    if (!schema.index_of(name)) extra.push_back(name);
  }
  for (const auto& c : schema.columns)
    if (!header_set.count(c.name)) absent.push_back(c.name);
  if (!extra.empty() || !absent.empty()) {
    std::string msg = "'" + path + "': header does not match schema;";
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
      return s;
    };
    if (!extra.empty()) msg += " not in schema: " + list(extra) + ";";
    if (!absent.empty()) msg += " missing from file: " + list(absent) + ";";
    throw ValidationError(msg);
  }

  Schema ordered = schema;
  ordered.columns.clear();
  for (const auto& name : header) ordered.columns.push_back(schema.columns[*schema.index_of(name)]);

  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      throw ValidationError("'" + path + "' row " + std::to_string(r - 1) + " (line " +
                            std::to_string(r + 1) + "): " + std::to_string(rec.size()) +
                            " fields, expected " + std::to_string(header.size()));
    Row row;
    row.reserve(rec.size());
    for (std::size_t c = 0; c < rec.size(); ++c) {
      try {
        row.push_back(parse_cell(rec[c], ordered.columns[c].kind));
      } catch (const ValidationError& e) {
        throw ValidationError("'" + path + "' row " + std::to_string(r - 1) + ", column '" +
                              ordered.columns[c].name + "': " + e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  try {
    return Table(std::move(ordered), std::move(rows));
  } catch (const ValidationError& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

/// A column is numeric iff every non-missing cell parses as a finite real.
inline Schema infer_schema(const std::string& path, const std::string& label_column,
                           const std::string& positive_label) {
  auto records = csv::parse(detail::read_file(path));
  if (records.empty()) throw ValidationError("'" + path + "' is empty");
  if (records.size() < 2) throw ValidationError("'" + path + "' has a header but no data rows");
  const auto& header = records.front();

  Schema schema;
  schema.label_column = label_column;
  schema.positive_label = positive_label;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!seen.insert(header[c]).second)
      throw ValidationError("'" + path + "': duplicate header '" + header[c] + "'");
    bool numeric = true;
    for (std::size_t r = 1; r < records.size() && numeric; ++r) {
      if (c >= records[r].size()) continue;
      const auto& text = records[r][c];
      if (!is_missing_text(trim(text)) && !parse_real(text)) numeric = false;
    }
    schema.columns.push_back({header[c], numeric ? ColumnKind::numeric : ColumnKind::categorical});
  }
  schema.validate();
  return schema;
}

/// Re-emit a table as CSV. Missing cells become empty fields; numbers use
/// format_number.
inline void write_csv(const Table& table, std::ostream& out) {
  csv::Record header;
  for (const auto& c : table.schema().columns) header.push_back(c.name);
  csv::write_record(out, header);
  for (const auto& row : table.rows()) {
    csv::Record rec;
    for (const auto& cell : row) rec.push_back(cell_text(cell, ""));
    csv::write_record(out, rec);
  }
}

/// Keep only the named columns (in their existing order). The label column
/// is always kept.
inline Table select_columns(const Table& table, const std::vector<std::string>& keep) {
  const auto& schema = table.schema();
  std::vector<std::size_t> idx;
  Schema out = schema;
  out.columns.clear();
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    const auto& name = schema.columns[i].name;
    if (name == schema.label_column || std::find(keep.begin(), keep.end(), name) != keep.end()) {
      idx.push_back(i);
      out.columns.push_back(schema.columns[i]);
    }
  }
  std::vector<Row> rows;
  rows.reserve(table.size());
  for (const auto& row : table.rows()) {
    Row r;
    for (auto i : idx) r.push_back(row[i]);
    rows.push_back(std::move(r));
  }
  return Table(std::move(out), std::move(rows));
}

// One-hot view of a table's features. Categorical features expand into one
// 0/1 column per observed level ("feature=level", levels sorted); numeric
// features pass through, with missing cells imputed by the column mean.
struct EncodedMatrix {
  std::vector<std::string> column_names;
  std::vector<std::size_t> feature_of;  // schema column index per encoded column
  std::size_t rows = 0;
  std::vector<double> values;  // row-major, rows x column_names.size()
  std::vector<double> target;

  std::size_t cols() const { return column_names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
  }
};

inline EncodedMatrix one_hot_encode(const Table& table) {
  if (table.empty()) throw ValidationError("cannot encode an empty table");
  const auto& schema = table.schema();
  EncodedMatrix m;
  m.rows = table.size();

  struct Block {
    std::size_t source;
    std::size_t first;
    std::vector<std::string> levels;  // empty for numeric
    double fill = 0;
  };
  std::vector<Block> blocks;
  for (auto c : schema.feature_indices()) {
    Block b{c, m.column_names.size(), {}, 0};
    const auto& col = schema.columns[c];
    if (col.kind == ColumnKind::categorical) {
      std::set<std::string> levels;
      for (const auto& row : table.rows())
        if (!is_missing(row[c])) levels.insert(cell_text(row[c]));
      b.levels.assign(levels.begin(), levels.end());
      for (const auto& level : b.levels) {
        m.column_names.push_back(col.name + "=" + level);
        m.feature_of.push_back(c);
      }
    } else {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& row : table.rows())
        if (const auto* d = std::get_if<double>(&row[c])) {
          sum += *d;
          ++n;
        }
      b.fill = n ? sum / static_cast<double>(n) : 0.0;
      m.column_names.push_back(col.name);
      m.feature_of.push_back(c);
    }
    blocks.push_back(std::move(b));
  }

  m.values.assign(m.rows * m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto& row = table.row(r);
    for (const auto& b : blocks) {
      const Cell& cell = row[b.source];
      if (schema.columns[b.source].kind == ColumnKind::numeric) {
        const auto* d = std::get_if<double>(&cell);
        m.values[r * m.cols() + b.first] = d ? *d : b.fill;
      } else if (!is_missing(cell)) {
        auto text = cell_text(cell);
        auto it = std::lower_bound(b.levels.begin(), b.levels.end(), text);
        m.values[r * m.cols() + b.first + static_cast<std::size_t>(it - b.levels.begin())] = 1.0;
      }
    }
    m.target.push_back(static_cast<double>(table.target(r)));
  }
  return m;
}

// JSON form of a schema:
//   {"columns": [{"name": "...", "kind": "categorical"}, ...],
//    "label_column": "...", "positive_label": "...", "negative_label": "..."}
inline nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json j;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : schema.columns)
    j["columns"].push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
  j["label_column"] = schema.label_column;
  j["positive_label"] = schema.positive_label;
  if (schema.negative_label) j["negative_label"] = *schema.negative_label;
  return j;
}

inline Schema schema_from_json(const nlohmann::json& j) {
  try {
    Schema s;
    for (const auto& c : j.at("columns"))
      s.columns.push_back({c.at("name").get<std::string>(),
                           parse_column_kind(c.value("kind", std::string("categorical")))});
    s.label_column = j.at("label_column").get<std::string>();
    s.positive_label = j.at("positive_label").get<std::string>();
    if (j.contains("negative_label")) s.negative_label = j["negative_label"].get<std::string>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid schema: ") + e.what());
  }
}

}  // namespace tabprompt
