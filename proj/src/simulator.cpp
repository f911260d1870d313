#include "asrsim/simulator.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <thread>
#include <utility>

#include <json.hpp>

#include "asrsim/edit_distance.hpp"
#include "asrsim/error.hpp"
#include "asrsim/text.hpp"

namespace asrsim {

namespace {

char draw(const WeightedSymbols& w, Rng& rng) {
  std::uint64_t r = rng.uniform_index(w.total);
  for (const auto& [symbol, weight] : w.weights) {
    if (r < weight) return symbol;
    r -= weight;
  }
  return w.weights.back().first;  // unreachable
}

void check_word(std::string_view word, const RewriteModel& model) {
  if (word.empty()) throw DataError("cannot corrupt an empty word");
  if (!is_letter_word(word)) {
    throw DataError("cannot corrupt '" + std::string(word) + "': letters only");
  }
  if (model.empty()) throw DataError("rewrite model is empty");
}

constexpr int kMaxRedraws = 16;

}  // namespace

CorruptedWord corrupt_word(std::string_view word, const RewriteModel& model, Rng& rng) {
  check_word(word, model);
  const auto& k = model.constants;
  CorruptedWord out{std::string(word), {}};
  auto& trace = out.trace;
  trace.requested_edits =
      k.min_edits + static_cast<int>(rng.uniform_index(k.max_edits - k.min_edits + 1));

  std::string& w = out.noisy;
  for (int e = 0; e < trace.requested_edits; ++e) {
    if (w.empty()) {
      trace.early_stopped = true;
      break;
    }
    const std::size_t i = rng.uniform_index(w.size());
    const char s = w[i];
    if (rng.uniform01() < k.p_replacement) {
      const char t = draw(model.replacement_weights(s, i), rng);
      if (t == kDeletionSymbol) {
        w.erase(i, 1);
        trace.edits.push_back({EditKind::kDeletion, i, s, t});
      } else {
        w[i] = t;
        trace.edits.push_back({EditKind::kReplacement, i, s, t});
      }
    } else {
      const char t = draw(model.insertion_weights(s, i), rng);
      w.insert(i + 1, 1, t);
      trace.edits.push_back({EditKind::kInsertion, i + 1, kDeletionSymbol, t});
    }
  }
  return out;
}

std::string apply_trace(std::string_view clean, const EditTrace& trace) {
  std::string w(clean);
  for (const auto& e : trace.edits) {
    if (e.position > w.size() || (e.kind != EditKind::kInsertion && e.position == w.size())) {
      throw DataError("edit position out of range");
    }
    switch (e.kind) {
      case EditKind::kReplacement:
        w[e.position] = e.to;
        break;
      case EditKind::kDeletion:
        w.erase(e.position, 1);
        break;
      case EditKind::kInsertion:
        w.insert(e.position, 1, e.to);
        break;
    }
  }
  return w;
}

namespace {

class VariantProbability {
 public:
  VariantProbability(const RewriteModel& model, std::string_view target)
      : model_(model), target_(target) {}

  // Probability that `remaining` more edits turn `word` into the target.
  double operator()(const std::string& word, int remaining) {
    if (remaining == 0 || word.empty()) return word == target_ ? 1.0 : 0.0;
    // Each edit moves the edit distance by at most one.
    if (edit_distance(word, target_) > static_cast<std::size_t>(remaining)) return 0.0;
    const auto key = std::make_pair(word, remaining);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const double p_rep = model_.constants.p_replacement;
    const double per_position = 1.0 / static_cast<double>(word.size());
    double total = 0.0;
    for (std::size_t i = 0; i < word.size(); ++i) {
      if (p_rep > 0.0) {
        const auto w = model_.replacement_weights(word[i], i);
        for (const auto& [t, weight] : w.weights) {
          std::string next = word;
          if (t == kDeletionSymbol) {
            next.erase(i, 1);
          } else {
            next[i] = t;
          }
          total += per_position * p_rep * static_cast<double>(weight) /
                   static_cast<double>(w.total) * (*this)(next, remaining - 1);
        }
      }
      if (p_rep < 1.0) {
        const auto w = model_.insertion_weights(word[i], i);
        for (const auto& [t, weight] : w.weights) {
          std::string next = word;
          next.insert(i + 1, 1, t);
          total += per_position * (1.0 - p_rep) * static_cast<double>(weight) /
                   static_cast<double>(w.total) * (*this)(next, remaining - 1);
        }
      }
    }
    memo_.emplace(key, total);
    return total;
  }

 private:
  const RewriteModel& model_;
  std::string target_;
  std::map<std::pair<std::string, int>, double> memo_;
};

}  // namespace

double variant_probability(std::string_view clean, std::string_view variant,
                           const RewriteModel& model) {
  check_word(clean, model);
  const auto& k = model.constants;
  VariantProbability prob(model, variant);
  const double per_count = 1.0 / static_cast<double>(k.max_edits - k.min_edits + 1);
  double total = 0.0;
  for (int n = k.min_edits; n <= k.max_edits; ++n) {
    total += per_count * prob(std::string(clean), n);
  }
  return total;
}

bool is_eligible_token(std::string_view token) {
  return token.size() >= 2 && is_letter_word(token);
}

CorruptionRecord corrupt_utterance(std::span<const std::string> tokens,
                                   const RewriteModel& model, Rng& rng,
                                   std::size_t max_corrupted_words) {
  if (tokens.empty()) throw DataError("cannot corrupt an empty utterance");
  CorruptionRecord rec;
  rec.clean_tokens.assign(tokens.begin(), tokens.end());
  rec.noisy_tokens = rec.clean_tokens;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_eligible_token(tokens[i])) eligible.push_back(i);
  }
  // Partial Fisher-Yates: the first `picks` entries become the chosen positions.
  const std::size_t picks = std::min(max_corrupted_words, eligible.size());
  for (std::size_t n = 0; n < picks; ++n) {
    const std::size_t j = n + rng.uniform_index(eligible.size() - n);
    std::swap(eligible[n], eligible[j]);
  }
  std::vector<std::size_t> chosen(eligible.begin(), eligible.begin() + picks);
  std::sort(chosen.begin(), chosen.end());

  for (std::size_t idx : chosen) {
    const std::string& clean = tokens[idx];
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      auto result = corrupt_word(clean, model, rng);
      if (!result.noisy.empty() && result.noisy != clean) {
        rec.noisy_tokens[idx] = result.noisy;
        rec.corrections.push_back({idx, clean, std::move(result.noisy)});
        break;
      }
    }
  }
  return rec;
}

std::vector<CorruptionRecord> corrupt_dataset(std::span<const Dialogue> dialogues,
                                              const RewriteModel& model,
                                              std::uint64_t master_seed,
                                              const CorruptionPolicy& policy,
                                              unsigned threads) {
  if (model.empty()) throw DataError("rewrite model is empty");
  struct Task {
    const Dialogue* dialogue;
    std::size_t turn;
  };
  std::vector<Task> tasks;
  std::set<std::string_view> seen;
  for (const auto& d : dialogues) {
    if (!seen.insert(d.dialogue_id).second) {
      throw DataError("duplicate dialogue_id '" + d.dialogue_id + "'");
    }
    std::vector<std::size_t> picked;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      if (!policy.user_turns_only || d.turns[t].speaker == Speaker::kUser) picked.push_back(t);
    }
    if (policy.last_user_turn_only && picked.size() > 1) picked.erase(picked.begin(), picked.end() - 1);
    for (std::size_t t : picked) tasks.push_back({&d, t});
  }

  std::vector<CorruptionRecord> records(tasks.size());
  auto run = [&](std::size_t first, std::size_t stride) {
    for (std::size_t n = first; n < tasks.size(); n += stride) {
      const auto& [d, t] = tasks[n];
      Rng rng(derive_seed(master_seed, d->dialogue_id, t));
      std::vector<std::string> tokens;
      for (auto tok : split_whitespace(d->turns[t].text)) tokens.emplace_back(tok);
      auto rec = corrupt_utterance(tokens, model, rng, policy.max_corrupted_words);
      rec.dialogue_id = d->dialogue_id;
      rec.turn_index = t;
      records[n] = std::move(rec);
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  if (threads <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(w, threads);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// JSON lines

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

}  // namespace

Dialogue parse_dialogue(std::string_view json_line) {
  json j;
  try {
    j = json::parse(json_line.begin(), json_line.end());
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  try {
    Dialogue d;
    d.dialogue_id = j.at("dialogue_id").get<std::string>();
    if (d.dialogue_id.empty()) throw DataError("empty dialogue_id");
    for (const auto& turn : j.at("turns")) {
      const auto speaker = turn.at("speaker").get<std::string>();
      Turn t;
      if (speaker == "U") {
        t.speaker = Speaker::kUser;
      } else if (speaker == "S") {
        t.speaker = Speaker::kSystem;
      } else {
        throw DataError("speaker must be \"U\" or \"S\", got \"" + speaker + "\"");
      }
      t.text = turn.at("text").get<std::string>();
      if (split_whitespace(t.text).empty()) throw DataError("turn text is empty");
      d.turns.push_back(std::move(t));
    }
    return d;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed dialogue: ") + e.what());
  }
}

std::vector<Dialogue> parse_dialogues(std::string_view text) {
  std::vector<Dialogue> out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (split_whitespace(lines[n]).empty()) continue;
    try {
      out.push_back(parse_dialogue(lines[n]));
    } catch (const DataError& e) {
      throw ParseError(e.what(), n + 1);
    }
  }
  return out;
}

std::string record_to_json(const CorruptionRecord& record) {
  ordered_json corrections = ordered_json::array();
  for (const auto& c : record.corrections) {
    ordered_json o;
    o["token_index"] = c.token_index;
    o["clean"] = c.clean;
    o["noisy"] = c.noisy;
    corrections.push_back(std::move(o));
  }
  ordered_json j;
  j["dialogue_id"] = record.dialogue_id;
  j["turn_index"] = record.turn_index;
  j["clean_tokens"] = record.clean_tokens;
  j["noisy_tokens"] = record.noisy_tokens;
  j["corrections"] = std::move(corrections);
  return j.dump();
}

CorruptionRecord record_from_json(std::string_view json_line) {
  try {
    const auto j = json::parse(json_line.begin(), json_line.end());
    CorruptionRecord r;
    r.dialogue_id = j.at("dialogue_id").get<std::string>();
    r.turn_index = j.at("turn_index").get<std::size_t>();
    r.clean_tokens = j.at("clean_tokens").get<std::vector<std::string>>();
    r.noisy_tokens = j.at("noisy_tokens").get<std::vector<std::string>>();
    for (const auto& c : j.at("corrections")) {
      r.corrections.push_back({c.at("token_index").get<std::size_t>(),
                               c.at("clean").get<std::string>(),
                               c.at("noisy").get<std::string>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed corruption record: ") + e.what());
  }
}

}  // namespace asrsim
