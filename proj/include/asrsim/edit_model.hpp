#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asrsim/cn_ingest.hpp"

namespace asrsim {

/// Placeholder letter for a deleted (or, on the other side, inserted) letter.
inline constexpr char kDeletionSymbol = '*';
/// Context letter for insertions before the first letter of a word.
inline constexpr char kWordBegin = '^';

struct WordPair {
  std::string source;
  std::string target;
  /// Multiplicity applied to every count this pair contributes.
  std::uint64_t weight = 1;

  friend bool operator==(const WordPair&, const WordPair&) = default;
};

/// Both directed orderings of every pair of distinct words sharing a slot.
/// Words are lowercased; reserved tokens and words with non-letters are
/// dropped before pairing.
std::vector<WordPair> extract_confusion_pairs(const ConfusionNetwork& cn);

struct LetterColumn {
  char src;
  char tgt;
  friend bool operator==(const LetterColumn&, const LetterColumn&) = default;
};

struct LetterAlignment {
  std::vector<LetterColumn> columns;
  std::size_t cost = 0;

  /// The aligned word on either side, with kDeletionSymbol dropped.
  std::string source() const;
  std::string target() const;
};

/// Minimal unit-cost letter alignment. Ties resolve right to left preferring
/// match, substitution, deletion of a source letter, insertion.
LetterAlignment align_letters(std::string_view source, std::string_view target);

struct RewriteContext {
  char letter;
  int bin;
  friend auto operator<=>(const RewriteContext&, const RewriteContext&) = default;
};

using SymbolCounts = std::map<char, std::uint64_t>;
using CountTable = std::map<RewriteContext, SymbolCounts>;

struct SamplingConstants {
  int min_edits = 1;
  int max_edits = 3;
  double p_replacement = 0.9;
  double p_insertion = 0.1;
  friend bool operator==(const SamplingConstants&, const SamplingConstants&) = default;
};

/// Where a sampling distribution came from.
enum class Backoff { kContext, kLetter, kUniform };

struct WeightedSymbols {
  std::vector<std::pair<char, std::uint64_t>> weights;  // sorted by symbol
  std::uint64_t total = 0;
  Backoff source = Backoff::kContext;
};

/// Letter rewrite channel: counts of how a source letter at a (capped)
/// position turns into another letter, `*`, or gets a letter inserted after
/// it. Probabilities are always derived from the integer counts.
struct RewriteModel {
  static constexpr int kDefaultPositionCap = 16;

  int position_cap = kDefaultPositionCap;
  std::set<char> alphabet;
  /// (s, bin) -> t -> count, with t != s. t may be kDeletionSymbol.
  CountTable replace_counts;
  /// (s_prev, bin) -> inserted letter -> count. s_prev may be kWordBegin.
  CountTable insert_counts;
  /// (s, bin) -> number of columns where s aligned to itself.
  std::map<RewriteContext, std::uint64_t> identity_counts;
  SamplingConstants constants;

  int bin(std::size_t position) const;
  bool empty() const { return alphabet.empty(); }

  /// Pr(t | s, bin) for an observed context; empty when the context has no
  /// non-identity counts.
  std::vector<std::pair<char, double>> replacement_distribution(RewriteContext ctx) const;
  std::vector<std::pair<char, double>> insertion_distribution(RewriteContext ctx) const;

  /// Replacement weights for letter `s` at `position`, backing off from the
  /// exact context to all positions of `s`, then to uniform over
  /// alphabet plus `*` (never s itself).
  WeightedSymbols replacement_weights(char s, std::size_t position) const;
  /// Insertion weights after letter `s` at `position`, same backoff chain
  /// ending in uniform over the alphabet.
  WeightedSymbols insertion_weights(char s, std::size_t position) const;

  /// Adds every count of `other`. Both models must share position_cap.
  void merge(const RewriteModel& other);

  friend bool operator==(const RewriteModel&, const RewriteModel&) = default;
};

/// Accumulates pair statistics; shards can be estimated separately and merged.
class ModelEstimator {
 public:
  explicit ModelEstimator(int position_cap = RewriteModel::kDefaultPositionCap);

  /// Returns false when the pair is unusable (non-letters, identical words).
  bool add(const WordPair& pair);
  void merge(const ModelEstimator& other);

  std::size_t pairs_used() const { return pairs_used_; }
  std::size_t pairs_skipped() const { return pairs_skipped_; }
  const RewriteModel& model() const { return model_; }

 private:
  RewriteModel model_;
  std::size_t pairs_used_ = 0;
  std::size_t pairs_skipped_ = 0;
};

/// Throws DataError when `pairs` is empty or yields no usable pair.
RewriteModel estimate_model(std::span<const WordPair> pairs,
                            int position_cap = RewriteModel::kDefaultPositionCap);

inline constexpr int kModelFormatVersion = 1;

void save_model(const RewriteModel& model, std::ostream& out);
RewriteModel load_model(std::istream& in);
std::string save_model_to_string(const RewriteModel& model);
RewriteModel load_model_from_string(std::string_view text);

}  // namespace asrsim
