#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asrsim/error.hpp"
#include "asrsim/random.hpp"

namespace asrsim {

struct EntryRef {
  std::string domain;
  std::string entity_id;
  std::string doc_id;
  friend auto operator<=>(const EntryRef&, const EntryRef&) = default;
};

struct KnowledgeEntry {
  std::string domain;
  std::string entity_id;
  std::string doc_id;
  std::string title;
  std::string body;

  EntryRef ref() const { return {domain, entity_id, doc_id}; }
};

/// Cluster 0 is the non-knowledge class and never holds knowledge entries
/// produced by clustering.
inline constexpr int kNonKnowledgeCluster = 0;

struct KnowledgeCluster {
  int cluster_id = 0;
  std::string key;
  std::set<EntryRef> members;
  friend bool operator==(const KnowledgeCluster&, const KnowledgeCluster&) = default;
};

using StopwordSet = std::set<std::string, std::less<>>;

/// English function words, in normalized form (lowercase, no apostrophes).
const StopwordSet& default_stopwords();
StopwordSet make_stopwords(std::span<const std::string> words);

/// Lowercases, strips punctuation, drops stopwords, strips a plural `s` from
/// tokens of four or more letters (not `ss`), dedupes and sorts.
std::vector<std::string> normalize_tokens(std::string_view text, const StopwordSet& stopwords);
std::string normalize_title(std::string_view title,
                            const StopwordSet& stopwords = default_stopwords());

/// Groups entries by normalized title. Entries whose key is empty each get a
/// singleton cluster. The result starts with the empty cluster 0, followed by
/// ids 1..N in key order.
std::vector<KnowledgeCluster> initial_clusters(std::span<const KnowledgeEntry> entries,
                                               const StopwordSet& stopwords = default_stopwords());

/// Empty string when `clusters` partition `entries`, else a description of
/// the first violation.
std::string partition_error(std::span<const KnowledgeCluster> clusters,
                            std::span<const KnowledgeEntry> entries);

enum class PairLabel { kPositive, kNegative };

struct PairExample {
  std::string title;
  std::string body;
  PairLabel label;
  friend bool operator==(const PairExample&, const PairExample&) = default;
};

struct PairDataset {
  std::vector<PairExample> examples;
  /// Entries that had no other title in their entity to swap in.
  std::size_t entries_without_negative = 0;
};

/// Positives: every entry's own title-body pair, then (title_a, body_b) for
/// every ordered pair of distinct members of each cluster. Negatives: each
/// body with a title drawn uniformly from the other distinct titles of the
/// same entity that sit outside the entry's cluster.
PairDataset generate_pair_dataset(std::span<const KnowledgeEntry> entries,
                                  std::span<const KnowledgeCluster> clusters, Rng& rng);

/// Scores a (title, body) pair in [0, 1].
using PairJudge = std::function<double(std::string_view title, std::string_view body)>;

double token_jaccard(std::string_view a, std::string_view b, const StopwordSet& stopwords);
PairJudge jaccard_judge(StopwordSet stopwords = default_stopwords());
PairJudge constant_judge(double score);

struct MergeOptions {
  double positive_threshold = 0.5;
  /// A cluster pair is a candidate when strictly more than this fraction of
  /// its cross judgments reach positive_threshold.
  double majority_fraction = 0.5;
  /// Also treat cluster pairs whose members share a body key (of at least
  /// min_body_tokens normalized tokens) as candidates.
  bool body_proposals = false;
  std::size_t min_body_tokens = 3;
  StopwordSet stopwords = default_stopwords();
};

struct MergeRound {
  int round = 0;
  std::size_t clusters_before = 0;
  std::size_t clusters_after = 0;
  /// (surviving id, absorbed id)
  std::vector<std::pair<int, int>> merges;
};

struct MergeResult {
  std::vector<KnowledgeCluster> clusters;
  std::vector<MergeRound> rounds;
};

/// Thrown when the judge fails; carries the clustering after the last
/// completed round.
class MergeAborted : public DataError {
 public:
  MergeAborted(const std::string& what, MergeResult partial)
      : DataError(what), partial_(std::move(partial)) {}
  const MergeResult& partial() const { return partial_; }

 private:
  MergeResult partial_;
};

using RoundObserver =
    std::function<void(const MergeRound&, std::span<const KnowledgeCluster>)>;

/// Iterative greedy merging. Each round judges every cross title-body pair of
/// every cluster pair, then merges candidates by descending positive fraction
/// (ties to the lowest ids), each cluster at most once. The merged cluster
/// keeps the lower id and its key. Stops after a round without merges or when
/// fewer than two clusters remain. Cluster 0 is passed through untouched.
MergeResult merge_clusters(std::span<const KnowledgeCluster> clusters,
                           std::span<const KnowledgeEntry> entries, const PairJudge& judge,
                           const MergeOptions& options = {},
                           const RoundObserver& observer = {});

struct ClusterOverride {
  EntryRef ref;
  int cluster_id;
};

/// Moves each referenced entry to its forced cluster (created if missing) and
/// drops clusters left empty, except cluster 0.
std::vector<KnowledgeCluster> apply_overrides(std::span<const KnowledgeCluster> clusters,
                                              std::span<const ClusterOverride> overrides);

/// Reassigns ids 1..N in current id order, keeping cluster 0.
std::vector<KnowledgeCluster> renumber_clusters(std::span<const KnowledgeCluster> clusters);

/// domain -> entity_id -> {name, docs: doc_id -> {title, body}}, in file order.
std::vector<KnowledgeEntry> parse_knowledge_base(std::string_view json_text);
std::string clusters_to_json(std::span<const KnowledgeCluster> clusters);
std::vector<KnowledgeCluster> clusters_from_json(std::string_view json_text);
/// [{doc_ref: [domain, entity_id, doc_id], forced_cluster_id}]
std::vector<ClusterOverride> parse_overrides(std::string_view json_text);
std::string pair_to_json(const PairExample& pair);

}  // namespace asrsim
