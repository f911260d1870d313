#include "asrsim/simulator.hpp"

#include <gtest/gtest.h>

#include <map>

#include "asrsim/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace asrsim {
namespace {

const RewriteModel& model() {
  static const RewriteModel m = testing::vocab_model();
  return m;
}

RewriteModel toy_model() {
  // Pr(c | b, 1) = 1 and nothing else.
  RewriteModel m;
  m.alphabet = {'a', 'b', 'c'};
  m.replace_counts[{'b', 1}]['c'] = 1;
  return m;
}

TEST(CorruptWord, StaysWithinThreeEditsAndReplays) {
  Rng rng(1);
  for (const char* w : {"wifi", "alcohols", "alimentum", "deliver", "hello", "Groups"}) {
    for (int n = 0; n < 500; ++n) {
      const auto r = corrupt_word(w, model(), rng);
      EXPECT_LE(testing::levenshtein_oracle(w, r.noisy), 3);
      EXPECT_GE(r.trace.requested_edits, 1);
      EXPECT_LE(r.trace.requested_edits, 3);
      EXPECT_EQ(static_cast<int>(r.trace.edits.size()), r.trace.requested_edits);
      EXPECT_FALSE(r.trace.early_stopped);
      EXPECT_EQ(apply_trace(w, r.trace), r.noisy);
    }
  }
}

TEST(CorruptWord, DeterministicUnderSeed) {
  Rng a(42), b(42);
  for (int n = 0; n < 100; ++n) {
    EXPECT_EQ(corrupt_word("alcohols", model(), a).noisy,
              corrupt_word("alcohols", model(), b).noisy);
  }
}

TEST(CorruptWord, Errors) {
  Rng rng(0);
  EXPECT_THROW(corrupt_word("", model(), rng), DataError);
  EXPECT_THROW(corrupt_word("wi-fi", model(), rng), DataError);
  EXPECT_THROW(corrupt_word("wifi", RewriteModel{}, rng), DataError);
}

TEST(CorruptWord, DeletionOnlyModelEmptiesTheWord) {
  RewriteModel m;
  m.alphabet = {'a'};
  m.replace_counts[{'a', 0}]['*'] = 1;
  int deletions = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto r = corrupt_word("a", m, rng);
    ASSERT_FALSE(r.trace.edits.empty());
    if (r.trace.edits[0].kind != EditKind::kDeletion) {
      // The 10% insertion branch has only 'a' to insert.
      EXPECT_EQ(r.trace.edits[0], (Edit{EditKind::kInsertion, 1, '*', 'a'}));
      continue;
    }
    ++deletions;
    EXPECT_EQ(r.noisy, "");
    ASSERT_EQ(r.trace.edits.size(), 1u);
    EXPECT_EQ(r.trace.edits[0], (Edit{EditKind::kDeletion, 0, 'a', '*'}));
    EXPECT_EQ(r.trace.early_stopped, r.trace.requested_edits > 1);
  }
  EXPECT_GT(deletions, 0);
}

TEST(CorruptWord, ToyModelReplacementAtPositionOne) {
  const auto m = toy_model();
  // Oracle: the replacements possible at position 1 of "ab".
  std::set<std::string> at_one;
  for (const auto& [t, w] : m.replacement_weights('b', 1).weights) {
    std::string next = "ab";
    next[1] = t;
    at_one.insert(next);
  }
  ASSERT_EQ(at_one, std::set<std::string>{"ac"});

  const auto one_edit = testing::one_edit_outcomes("ab", m);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng(seed);
    const auto r = corrupt_word("ab", m, rng);
    if (r.trace.requested_edits != 1) continue;
    EXPECT_TRUE(one_edit.contains(r.noisy)) << r.noisy;
    const auto& e = r.trace.edits[0];
    if (e.kind == EditKind::kReplacement && e.position == 1) {
      EXPECT_EQ(r.noisy, "ac");
      ++hits;
    }
  }
  EXPECT_GT(hits, 0);
}

TEST(VariantProbability, SumsToOneOverReachableSet) {
  const auto m = toy_model();
  const auto reachable = testing::reachable_outcomes("ab", m, 3);
  double total = 0;
  for (const auto& v : reachable) {
    const double p = variant_probability("ab", v, m);
    EXPECT_GT(p, 0.0) << v;
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_EQ(variant_probability("ab", "zzzzzz", m), 0.0);
}

TEST(VariantProbability, AgreesWithSampling) {
  const auto& m = model();
  std::map<std::string, int> freq;
  Rng rng(99);
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++freq[corrupt_word("wifi", m, rng).noisy];
  int checked = 0;
  for (const auto& [v, count] : freq) {
    if (count < 200) continue;
    const double p = variant_probability("wifi", v, m);
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(count) / n, p, 5 * sigma) << v;
    ++checked;
  }
  EXPECT_GT(checked, 3);
}

TEST(ApplyTrace, RejectsOutOfRangeEdits) {
  EditTrace t;
  t.edits.push_back({EditKind::kReplacement, 4, 'x', 'y'});
  EXPECT_THROW(apply_trace("abc", t), DataError);
}

TEST(CorruptUtterance, TwoOfFourTokens) {
  const std::vector<std::string> tokens = {"do", "they", "deliver", "food"};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto r = corrupt_utterance(tokens, model(), rng);
    ASSERT_EQ(r.corrections.size(), 2u);
    EXPECT_LT(r.corrections[0].token_index, r.corrections[1].token_index);
    EXPECT_EQ(r.noisy_tokens.size(), tokens.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) changed += tokens[i] != r.noisy_tokens[i];
    EXPECT_EQ(changed, 2u);
    for (const auto& c : r.corrections) {
      EXPECT_EQ(c.clean, tokens[c.token_index]);
      EXPECT_EQ(c.noisy, r.noisy_tokens[c.token_index]);
    }
  }
}

TEST(CorruptUtterance, EligibilityFilter) {
  Rng rng(0);
  const std::vector<std::string> none = {"a", "!"};
  const auto r = corrupt_utterance(none, model(), rng);
  EXPECT_EQ(r.noisy_tokens, none);
  EXPECT_TRUE(r.corrections.empty());

  const std::vector<std::string> one = {"hello", "5", "£5"};
  const auto s = corrupt_utterance(one, model(), rng);
  ASSERT_EQ(s.corrections.size(), 1u);
  EXPECT_EQ(s.corrections[0].token_index, 0u);

  EXPECT_TRUE(corrupt_utterance(std::vector<std::string>{"hello", "there"}, model(), rng, 0)
                  .corrections.empty());
  EXPECT_THROW(corrupt_utterance(std::vector<std::string>{}, model(), rng), DataError);
  EXPECT_FALSE(is_eligible_token("I"));
  EXPECT_TRUE(is_eligible_token("OK"));
  EXPECT_FALSE(is_eligible_token("that's"));
}

TEST(CorruptUtterance, PositionsCoverAllEligibleTokens) {
  const std::vector<std::string> tokens = {"is", "there", "free", "wifi", "at", "acorn"};
  std::map<std::size_t, int> hits;
  for (std::uint64_t seed = 0; seed < 600; ++seed) {
    Rng rng(seed);
    for (const auto& c : corrupt_utterance(tokens, model(), rng).corrections) ++hits[c.token_index];
  }
  EXPECT_EQ(hits.size(), tokens.size());
  for (const auto& [i, n] : hits) EXPECT_GT(n, 100) << i;
}

Dialogue dialogue(std::string id, std::vector<std::pair<Speaker, std::string>> turns) {
  Dialogue d{std::move(id), {}};
  for (auto& [s, t] : turns) d.turns.push_back({s, t});
  return d;
}

TEST(CorruptDataset, PolicyProjection) {
  const std::vector<Dialogue> ds = {dialogue(
      "d1", {{Speaker::kSystem, "hello there"},
             {Speaker::kUser, "do they deliver food"},
             {Speaker::kSystem, "yes they do"},
             {Speaker::kUser, "does it have free wifi"}})};
  auto recs = corrupt_dataset(ds, model(), 42);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].turn_index, 3u);
  EXPECT_EQ(recs[0].dialogue_id, "d1");

  CorruptionPolicy all;
  all.last_user_turn_only = false;
  recs = corrupt_dataset(ds, model(), 42, all);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].turn_index, 1u);
  EXPECT_EQ(recs[1].turn_index, 3u);

  CorruptionPolicy everything{false, false, 2};
  EXPECT_EQ(corrupt_dataset(ds, model(), 42, everything).size(), 4u);
}

TEST(CorruptDataset, DeterministicAcrossRunsAndThreads) {
  std::vector<Dialogue> ds;
  for (int i = 0; i < 40; ++i) {
    ds.push_back(dialogue("d" + std::to_string(i),
                          {{Speaker::kUser, "is there free wifi at the alimentum"},
                           {Speaker::kSystem, "yes"},
                           {Speaker::kUser, "do they serve alcohols for large groups"}}));
  }
  CorruptionPolicy all;
  all.last_user_turn_only = false;
  const auto a = corrupt_dataset(ds, model(), 42, all, 1);
  EXPECT_EQ(a, corrupt_dataset(ds, model(), 42, all, 1));
  EXPECT_EQ(a, corrupt_dataset(ds, model(), 42, all, 4));
  EXPECT_NE(a, corrupt_dataset(ds, model(), 43, all, 1));

  // A record depends only on its own (seed, dialogue, turn), not its neighbours.
  std::vector<Dialogue> reversed(ds.rbegin(), ds.rend());
  auto b = corrupt_dataset(reversed, model(), 42, all, 3);
  std::reverse(b.begin(), b.end());
  for (std::size_t i = 0; i < b.size(); i += 2) std::swap(b[i], b[i + 1]);
  EXPECT_EQ(a, b);
}

TEST(CorruptDataset, DuplicateIdRejected) {
  const std::vector<Dialogue> ds = {dialogue("x", {{Speaker::kUser, "hello"}}),
                                    dialogue("x", {{Speaker::kUser, "again"}})};
  EXPECT_THROW(corrupt_dataset(ds, model(), 1), DataError);
}

TEST(DatasetJson, ParseAndErrors) {
  const auto ds = parse_dialogues(
      "{\"dialogue_id\":\"a\",\"turns\":[{\"speaker\":\"U\",\"text\":\"hi there\"}]}\n\n"
      "{\"dialogue_id\":\"b\",\"turns\":[{\"speaker\":\"S\",\"text\":\"ok\"}]}\n");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[1].turns[0].speaker, Speaker::kSystem);

  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_dialogues(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string good = "{\"dialogue_id\":\"a\",\"turns\":[]}\n";
  EXPECT_EQ(line_of(good + "{not json}\n"), 2u);
  EXPECT_EQ(line_of(good + good + "{\"dialogue_id\":\"a\"}\n"), 3u);
  EXPECT_EQ(line_of("{\"dialogue_id\":\"a\",\"turns\":[{\"speaker\":\"X\",\"text\":\"t\"}]}"), 1u);
  EXPECT_EQ(line_of("{\"dialogue_id\":\"a\",\"turns\":[{\"speaker\":\"U\",\"text\":\"  \"}]}"), 1u);
}

TEST(DatasetJson, RecordFieldsAndRoundTrip) {
  CorruptionRecord r{"d7", 3, {"do", "they", "deliver"}, {"do", "they", "delver"},
                     {{2, "deliver", "delver"}}};
  const auto text = record_to_json(r);
  EXPECT_EQ(text,
            "{\"dialogue_id\":\"d7\",\"turn_index\":3,\"clean_tokens\":[\"do\",\"they\","
            "\"deliver\"],\"noisy_tokens\":[\"do\",\"they\",\"delver\"],\"corrections\":"
            "[{\"token_index\":2,\"clean\":\"deliver\",\"noisy\":\"delver\"}]}");
  EXPECT_EQ(record_from_json(text), r);
}

}  // namespace
}  // namespace asrsim
