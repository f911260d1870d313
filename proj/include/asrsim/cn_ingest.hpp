#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asrsim {

// Reserved tokens of the sausage format.
inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kEpsilon = "*DELETE*";

struct Hypothesis {
  int rank = 0;
  std::optional<double> score;
  std::vector<std::string> tokens;
};

struct NBestList {
  std::string utterance_id;
  std::vector<Hypothesis> hypotheses;
};

enum class TokenKind { kWord, kEpsilon, kBoundary };

TokenKind classify_token(std::string_view word);

struct Alternative {
  std::string word;
  std::optional<double> posterior;
  TokenKind kind = TokenKind::kWord;

  bool reserved() const { return kind != TokenKind::kWord; }
  friend bool operator==(const Alternative&, const Alternative&) = default;
};

/// One time slot of a confusion network. Words are unique within a slot.
struct ConfusionSlot {
  std::vector<Alternative> alternatives;

  const Alternative* find(std::string_view word) const;
  friend bool operator==(const ConfusionSlot&, const ConfusionSlot&) = default;
};

struct ConfusionNetwork {
  std::string utterance_id;
  std::vector<ConfusionSlot> slots;

  friend bool operator==(const ConfusionNetwork&, const ConfusionNetwork&) = default;
};

/// Parses `<utt_id> <rank> <score|-> <word>...` lines. Blank lines are
/// skipped; records of one utterance must be contiguous.
std::vector<NBestList> parse_nbest_lists(std::string_view text);

/// As parse_nbest_lists, but the text must hold exactly one utterance.
NBestList parse_nbest(std::string_view text);

/// Parses sausage text: optional `name <id>` header followed by
/// `align <k> <word> <posterior> ...` lines. A new `name` line starts a new
/// network. SRILM bookkeeping lines (`numaligns`, `posterior`, `info`) are
/// accepted and ignored.
std::vector<ConfusionNetwork> parse_confusion_networks(std::string_view text);

/// As parse_confusion_networks, but the text must hold exactly one network.
ConfusionNetwork parse_confusion_network(std::string_view text);

/// Writes the sausage form read by parse_confusion_network. Alternatives with
/// no posterior are written with posterior 0.
std::string to_sausage(const ConfusionNetwork& cn);

/// Pivot alignment: every hypothesis is edit-aligned to the rank-1 hypothesis.
/// Substitutions share the pivot's slot, insertions open slots that carry
/// kEpsilon for hypotheses without a word there, and posteriors are the
/// fraction of hypotheses voting for each alternative. Scores are ignored.
ConfusionNetwork align_nbest_to_cn(const NBestList& nbest);

}  // namespace asrsim
