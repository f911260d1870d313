#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asrsim/edit_model.hpp"
#include "asrsim/random.hpp"

namespace asrsim {

enum class EditKind { kReplacement, kInsertion, kDeletion };

/// One applied edit. For replacements and deletions `position` is the index
/// of the rewritten letter; for insertions it is the index the new letter
/// lands at, and `from` is kDeletionSymbol.
struct Edit {
  EditKind kind;
  std::size_t position;
  char from;
  char to;
  friend bool operator==(const Edit&, const Edit&) = default;
};

struct EditTrace {
  int requested_edits = 0;
  /// Set when the word ran out of letters before all edits were applied.
  bool early_stopped = false;
  std::vector<Edit> edits;
};

struct CorruptedWord {
  std::string noisy;
  EditTrace trace;
};

/// Draws an erroneous version of `word`: an edit count uniform over the
/// model's range, then per edit a position uniform over the current word, a
/// replacement (t ~ Pr(t|s,i), `*` deletes) or an insertion after position i
/// (t ~ Pr_*(t|s,i)). Throws DataError on an empty word, a word with
/// non-letters, or an empty model.
CorruptedWord corrupt_word(std::string_view word, const RewriteModel& model, Rng& rng);

/// Replays a trace on the clean word.
std::string apply_trace(std::string_view clean, const EditTrace& trace);

/// Exact probability that corrupt_word(clean) returns `variant`.
double variant_probability(std::string_view clean, std::string_view variant,
                           const RewriteModel& model);

struct Correction {
  std::size_t token_index;
  std::string clean;
  std::string noisy;
  friend bool operator==(const Correction&, const Correction&) = default;
};

struct CorruptionRecord {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  std::vector<std::string> clean_tokens;
  std::vector<std::string> noisy_tokens;
  /// Sorted by token_index.
  std::vector<Correction> corrections;
  friend bool operator==(const CorruptionRecord&, const CorruptionRecord&) = default;
};

/// At least two characters, all letters.
bool is_eligible_token(std::string_view token);

/// Corrupts up to `max_corrupted_words` distinct eligible tokens chosen
/// uniformly without replacement. A corruption that comes out empty or equal
/// to the clean token is redrawn a bounded number of times; if every draw
/// fails the token is left clean.
CorruptionRecord corrupt_utterance(std::span<const std::string> tokens,
                                   const RewriteModel& model, Rng& rng,
                                   std::size_t max_corrupted_words = 2);

enum class Speaker { kUser, kSystem };

struct Turn {
  Speaker speaker;
  std::string text;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Turn> turns;
};

struct CorruptionPolicy {
  bool user_turns_only = true;
  bool last_user_turn_only = true;
  std::size_t max_corrupted_words = 2;
};

/// One record per selected turn, in input order. Each record draws from its
/// own stream seeded by derive_seed(master_seed, dialogue_id, turn_index), so
/// the output does not depend on `threads`.
std::vector<CorruptionRecord> corrupt_dataset(std::span<const Dialogue> dialogues,
                                              const RewriteModel& model,
                                              std::uint64_t master_seed,
                                              const CorruptionPolicy& policy = {},
                                              unsigned threads = 1);

/// Line-delimited dialogues: {"dialogue_id": ..., "turns": [{"speaker": "U"|"S",
/// "text": ...}]}. Blank lines are skipped; errors name the line.
std::vector<Dialogue> parse_dialogues(std::string_view text);
Dialogue parse_dialogue(std::string_view json_line);

/// One JSON object, no trailing newline.
std::string record_to_json(const CorruptionRecord& record);
CorruptionRecord record_from_json(std::string_view json_line);

}  // namespace asrsim
