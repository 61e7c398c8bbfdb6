#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tabprompt/dataset.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/serialize.hpp"

namespace tabprompt {

/// Seeded generator used for every sampling decision. std::mt19937_64's
/// output sequence is fixed by the standard; the bounded draw and shuffle
/// below are spelled out so selections do not depend on the standard
/// library's distribution implementations.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

private:
  std::mt19937_64 engine_;
};

struct ShotSet {
  std::size_t k = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> eval_rows;
  std::uint64_t seed = 0;

  friend bool operator==(const ShotSet&, const ShotSet&) = default;
};

/// Class-stratified k-shot draw. Even k gives k/2 rows per class; for odd k
/// the positive class takes the extra row. Eval rows come from the rest,
/// stratified to its class ratio with at least one row of each class when
/// both are available.
inline ShotSet sample_shots(const Table& table, std::size_t k, std::uint64_t seed, std::size_t eval_size) {
  if (eval_size == 0) throw ValidationError("eval_size must be positive");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < table.size(); ++i) (table.target(i) ? pos : neg).push_back(i);

  const std::size_t k_pos = (k + 1) / 2, k_neg = k / 2;
  if (pos.size() < k_pos)
    throw ValidationError(std::to_string(k) + "-shot sample needs " + std::to_string(k_pos) + " rows of class '" +
                          table.schema().positive_label + "', table has " + std::to_string(pos.size()));
  if (neg.size() < k_neg)
    throw ValidationError(std::to_string(k) + "-shot sample needs " + std::to_string(k_neg) + " rows of class '" +
                          table.negative_label() + "', table has " + std::to_string(neg.size()));
  if (table.size() < k + eval_size)
    throw ValidationError("eval_size " + std::to_string(eval_size) + " exhausts the " +
                          std::to_string(table.size() - k) + " rows left after a " + std::to_string(k) + "-shot draw");

  SeededRng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  ShotSet s;
  s.k = k;
  s.seed = seed;
  s.train_rows.insert(s.train_rows.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k_pos));
  s.train_rows.insert(s.train_rows.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(k_neg));
  rng.shuffle(s.train_rows);

  const std::size_t rest_pos = pos.size() - k_pos, rest_neg = neg.size() - k_neg;
  const std::size_t rest = rest_pos + rest_neg;
  // round(eval_size * rest_pos / rest) in integers
  std::size_t e_pos = (2 * eval_size * rest_pos + rest) / (2 * rest);
  if (eval_size >= 2 && rest_pos > 0 && rest_neg > 0) e_pos = std::clamp<std::size_t>(e_pos, 1, eval_size - 1);
  e_pos = std::min(e_pos, rest_pos);
  std::size_t e_neg = eval_size - e_pos;
  if (e_neg > rest_neg) {
    e_pos += e_neg - rest_neg;
    e_neg = rest_neg;
  }
  s.eval_rows.insert(s.eval_rows.end(), pos.begin() + static_cast<std::ptrdiff_t>(k_pos),
                     pos.begin() + static_cast<std::ptrdiff_t>(k_pos + e_pos));
  s.eval_rows.insert(s.eval_rows.end(), neg.begin() + static_cast<std::ptrdiff_t>(k_neg),
                     neg.begin() + static_cast<std::ptrdiff_t>(k_neg + e_neg));
  std::sort(s.eval_rows.begin(), s.eval_rows.end());
  return s;
}

struct CorpusFiles {
  std::filesystem::path train;
  std::filesystem::path eval;
};

/// Prompt for one table row under a serializer spec.
inline Prompt row_prompt(const Table& table, std::size_t row, const SerializerSpec& spec, const PromptOptions& opts) {
  return build_prompt(segment_row(table.row(row), table.schema(), spec), spec, opts);
}

namespace detail {

inline void write_corpus(const std::filesystem::path& path, const Table& table, const std::vector<std::size_t>& rows,
                         const SerializerSpec& spec, const PromptOptions& opts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  for (auto r : rows) out << corpus_record(row_prompt(table, r, spec, opts), table.target(r)).dump() << '\n';
  if (!out) throw RuntimeFailure("write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Writes train.jsonl and eval.jsonl into `dir` (created if needed).
inline CorpusFiles emit_jsonl(const Table& table, const ShotSet& shots, const SerializerSpec& spec,
                              const PromptOptions& opts, const std::filesystem::path& dir) {
  spec.validate(table.schema());
  for (const auto* rows : {&shots.train_rows, &shots.eval_rows})
    for (auto r : *rows)
      if (r >= table.size()) throw ValidationError("shot set row " + std::to_string(r) + " is out of range");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + dir.string() + "': " + ec.message());
  CorpusFiles files{dir / "train.jsonl", dir / "eval.jsonl"};
  detail::write_corpus(files.train, table, shots.train_rows, spec, opts);
  detail::write_corpus(files.eval, table, shots.eval_rows, spec, opts);
  return files;
}

}  // namespace tabprompt
