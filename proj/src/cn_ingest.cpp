#include "asrsim/cn_ingest.hpp"

#include <algorithm>
#include <cstddef>
#include <span>

#include "asrsim/edit_distance.hpp"
#include "asrsim/error.hpp"
#include "asrsim/text.hpp"

namespace asrsim {

TokenKind classify_token(std::string_view word) {
  if (word == kEpsilon) return TokenKind::kEpsilon;
  if (word == kSentenceStart || word == kSentenceEnd) return TokenKind::kBoundary;
  return TokenKind::kWord;
}

const Alternative* ConfusionSlot::find(std::string_view word) const {
  auto it = std::find_if(alternatives.begin(), alternatives.end(),
                         [&](const Alternative& a) { return a.word == word; });
  return it == alternatives.end() ? nullptr : &*it;
}

std::vector<NBestList> parse_nbest_lists(std::string_view text) {
  std::vector<NBestList> lists;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    const auto fields = split_whitespace(lines[n]);
    if (fields.empty()) continue;
    if (fields.size() < 3) {
      throw ParseError("expected '<utt_id> <rank> <score|-> <word>...'", line_no);
    }
    const auto rank = parse_int(fields[1]);
    if (!rank || *rank < 1) {
      throw ParseError("invalid rank '" + std::string(fields[1]) + "'", line_no);
    }
    Hypothesis hyp;
    hyp.rank = static_cast<int>(*rank);
    if (fields[2] != "-") {
      hyp.score = parse_double(fields[2]);
      if (!hyp.score) {
        throw ParseError("invalid score '" + std::string(fields[2]) + "'", line_no);
      }
    }
    for (std::size_t i = 3; i < fields.size(); ++i) hyp.tokens.emplace_back(fields[i]);

    if (lists.empty() || lists.back().utterance_id != fields[0]) {
      for (const auto& l : lists) {
        if (l.utterance_id == fields[0]) {
          throw ParseError("records for utterance '" + l.utterance_id +
                               "' are not contiguous",
                           line_no);
        }
      }
      if (hyp.rank != 1) throw ParseError("first rank of an utterance must be 1", line_no);
      lists.push_back({std::string(fields[0]), {}});
    } else if (hyp.rank <= lists.back().hypotheses.back().rank) {
      throw ParseError("ranks must be strictly increasing", line_no);
    }
    lists.back().hypotheses.push_back(std::move(hyp));
  }
  if (lists.empty()) throw ParseError("empty N-best input");
  return lists;
}

NBestList parse_nbest(std::string_view text) {
  auto lists = parse_nbest_lists(text);
  if (lists.size() != 1) {
    throw ParseError("expected one utterance, found " + std::to_string(lists.size()));
  }
  return std::move(lists.front());
}

namespace {

ConfusionSlot parse_align_fields(std::span<const std::string_view> fields,
                                 std::size_t line_no) {
  if (fields.empty() || fields.size() % 2 != 0) {
    throw ParseError("align line needs <word> <posterior> pairs", line_no);
  }
  ConfusionSlot slot;
  double mass = 0.0;
  for (std::size_t i = 0; i < fields.size(); i += 2) {
    const auto word = fields[i];
    const auto p = parse_double(fields[i + 1]);
    if (!p) {
      throw ParseError("invalid posterior '" + std::string(fields[i + 1]) + "'", line_no);
    }
    if (!(*p >= 0.0 && *p <= 1.0)) {
      throw ParseError("posterior " + std::string(fields[i + 1]) + " outside [0,1]",
                       line_no);
    }
    if (slot.find(word) != nullptr) {
      throw ParseError("duplicate word '" + std::string(word) + "' in slot", line_no);
    }
    mass += *p;
    slot.alternatives.push_back({std::string(word), *p, classify_token(word)});
  }
  if (mass > 1.0 + 1e-6) {
    throw ParseError("slot posteriors sum to " + format_double(mass), line_no);
  }
  return slot;
}

}  // namespace

std::vector<ConfusionNetwork> parse_confusion_networks(std::string_view text) {
  std::vector<ConfusionNetwork> nets;
  bool open = false;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    const auto fields = split_whitespace(lines[n]);
    if (fields.empty()) continue;
    const auto keyword = fields[0];
    if (keyword == "name") {
      if (fields.size() != 2) throw ParseError("expected 'name <utt_id>'", line_no);
      nets.push_back({std::string(fields[1]), {}});
      open = true;
    } else if (keyword == "align") {
      if (fields.size() < 2) throw ParseError("align line missing index", line_no);
      if (!open) {
        nets.push_back({});
        open = true;
      }
      auto& cn = nets.back();
      const auto k = parse_int(fields[1]);
      if (!k || *k != static_cast<long long>(cn.slots.size())) {
        throw ParseError("expected align index " + std::to_string(cn.slots.size()) +
                             ", got '" + std::string(fields[1]) + "'",
                         line_no);
      }
      cn.slots.push_back(
          parse_align_fields(std::span(fields).subspan(2), line_no));
    } else if (keyword == "numaligns" || keyword == "posterior" || keyword == "info") {
      continue;
    } else {
      throw ParseError("unknown sausage keyword '" + std::string(keyword) + "'", line_no);
    }
  }
  if (nets.empty()) throw ParseError("no confusion network found");
  return nets;
}

ConfusionNetwork parse_confusion_network(std::string_view text) {
  auto nets = parse_confusion_networks(text);
  if (nets.size() != 1) {
    throw ParseError("expected one confusion network, found " +
                     std::to_string(nets.size()));
  }
  return std::move(nets.front());
}

std::string to_sausage(const ConfusionNetwork& cn) {
  std::string out;
  if (!cn.utterance_id.empty()) out += "name " + cn.utterance_id + "\n";
  for (std::size_t k = 0; k < cn.slots.size(); ++k) {
    out += "align " + std::to_string(k);
    for (const auto& alt : cn.slots[k].alternatives) {
      out += ' ';
      out += alt.word;
      out += ' ';
      out += format_double(alt.posterior.value_or(0.0));
    }
    out += '\n';
  }
  return out;
}

ConfusionNetwork align_nbest_to_cn(const NBestList& nbest) {
  if (nbest.hypotheses.empty()) throw DataError("N-best list has no hypotheses");

  const auto& pivot = nbest.hypotheses.front().tokens;
  const std::size_t n = pivot.size();
  const std::string eps(kEpsilon);

  // Per hypothesis: word at each pivot position, and words inserted in each
  // gap (gap g sits before pivot token g, gap n after the last one).
  struct Projection {
    std::vector<std::string> at_pivot;
    std::vector<std::vector<std::string>> gaps;
  };
  std::vector<Projection> projections;
  projections.reserve(nbest.hypotheses.size());
  std::vector<std::size_t> gap_width(n + 1, 0);

  for (const auto& hyp : nbest.hypotheses) {
    Projection proj{std::vector<std::string>(n, eps),
                    std::vector<std::vector<std::string>>(n + 1)};
    std::size_t next_pivot = 0;
    for (const auto& step : edit_script(std::span<const std::string>(pivot),
                                        std::span<const std::string>(hyp.tokens))) {
      switch (step.op) {
        case EditOp::kMatch:
        case EditOp::kSubstitute:
          proj.at_pivot[step.src] = hyp.tokens[step.tgt];
          next_pivot = step.src + 1;
          break;
        case EditOp::kDelete:
          next_pivot = step.src + 1;
          break;
        case EditOp::kInsert:
          proj.gaps[next_pivot].push_back(hyp.tokens[step.tgt]);
          break;
      }
    }
    for (std::size_t g = 0; g <= n; ++g) {
      gap_width[g] = std::max(gap_width[g], proj.gaps[g].size());
    }
    projections.push_back(std::move(proj));
  }

  const double total = static_cast<double>(nbest.hypotheses.size());
  ConfusionNetwork cn{nbest.utterance_id, {}};
  auto emit_slot = [&](auto&& word_of) {
    ConfusionSlot slot;
    std::vector<std::size_t> votes;
    for (const auto& proj : projections) {
      const std::string& w = word_of(proj);
      auto it = std::find_if(slot.alternatives.begin(), slot.alternatives.end(),
                             [&](const Alternative& a) { return a.word == w; });
      if (it == slot.alternatives.end()) {
        slot.alternatives.push_back({w, std::nullopt, classify_token(w)});
        votes.push_back(1);
      } else {
        ++votes[static_cast<std::size_t>(it - slot.alternatives.begin())];
      }
    }
    for (std::size_t a = 0; a < votes.size(); ++a) {
      slot.alternatives[a].posterior = static_cast<double>(votes[a]) / total;
    }
    cn.slots.push_back(std::move(slot));
  };

  for (std::size_t g = 0; g <= n; ++g) {
    for (std::size_t k = 0; k < gap_width[g]; ++k) {
      emit_slot([&](const Projection& p) -> const std::string& {
        return k < p.gaps[g].size() ? p.gaps[g][k] : eps;
      });
    }
    if (g < n) {
      emit_slot([&](const Projection& p) -> const std::string& { return p.at_pivot[g]; });
    }
  }
  return cn;
}

}  // namespace asrsim
