#include "asrsim/kb_cluster.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <optional>

#include <json.hpp>

#include "asrsim/text.hpp"

namespace asrsim {

namespace {

// NLTK's English list with apostrophes removed.
constexpr std::string_view kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "youre",
    "youve", "youll", "youd", "your", "yours", "yourself", "yourselves", "he", "him",
    "his", "himself", "she", "shes", "her", "hers", "herself", "it", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom",
    "this", "that", "thatll", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a",
    "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at",
    "by", "for", "with", "about", "against", "between", "into", "through", "during",
    "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on",
    "off", "over", "under", "again", "further", "then", "once", "here", "there", "when",
    "where", "why", "how", "all", "any", "both", "each", "few", "more", "most", "other",
    "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
    "very", "s", "t", "can", "will", "just", "don", "dont", "should", "shouldve", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "arent", "couldn", "couldnt",
    "didn", "didnt", "doesn", "doesnt", "hadn", "hadnt", "hasn", "hasnt", "haven",
    "havent", "isn", "isnt", "ma", "mightn", "mightnt", "mustn", "mustnt", "needn",
    "neednt", "shan", "shant", "shouldn", "shouldnt", "wasn", "wasnt", "weren", "werent",
    "won", "wont", "wouldn", "wouldnt"};

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
         static_cast<unsigned char>(c) >= 0x80;
}

// Lowercase; apostrophes vanish, other punctuation separates tokens.
std::string clean_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    c = to_lower_ascii(c);
    if (c == '\'') continue;
    out += is_word_char(c) ? c : ' ';
  }
  return out;
}

std::string strip_plural(std::string_view token) {
  if (token.size() >= 4 && token.back() == 's' && token[token.size() - 2] != 's') {
    token.remove_suffix(1);
  }
  return std::string(token);
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

const StopwordSet& default_stopwords() {
  static const StopwordSet words(std::begin(kStopwords), std::end(kStopwords));
  return words;
}

StopwordSet make_stopwords(std::span<const std::string> words) {
  StopwordSet out;
  for (const auto& w : words) {
    for (auto tok : split_whitespace(clean_text(w))) out.emplace(tok);
  }
  return out;
}

std::vector<std::string> normalize_tokens(std::string_view text, const StopwordSet& stopwords) {
  std::vector<std::string> tokens;
  const auto cleaned = clean_text(text);
  for (auto raw : split_whitespace(cleaned)) {
    if (stopwords.contains(raw)) continue;
    auto stem = strip_plural(raw);
    if (stopwords.contains(stem)) continue;
    tokens.push_back(std::move(stem));
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

std::string normalize_title(std::string_view title, const StopwordSet& stopwords) {
  return join(normalize_tokens(title, stopwords));
}

std::vector<KnowledgeCluster> initial_clusters(std::span<const KnowledgeEntry> entries,
                                               const StopwordSet& stopwords) {
  std::map<std::string, std::set<EntryRef>> by_key;
  std::set<EntryRef> keyless;
  for (const auto& e : entries) {
    auto key = normalize_title(e.title, stopwords);
    if (key.empty()) {
      keyless.insert(e.ref());
    } else {
      by_key[std::move(key)].insert(e.ref());
    }
  }
  std::vector<KnowledgeCluster> out;
  out.push_back({kNonKnowledgeCluster, "", {}});
  int next_id = 1;
  // Keyless singletons sort first, matching their empty key.
  for (const auto& ref : keyless) out.push_back({next_id++, "", {ref}});
  for (auto& [key, members] : by_key) out.push_back({next_id++, key, std::move(members)});
  return out;
}

std::string partition_error(std::span<const KnowledgeCluster> clusters,
                            std::span<const KnowledgeEntry> entries) {
  std::set<EntryRef> expected;
  for (const auto& e : entries) expected.insert(e.ref());
  std::set<EntryRef> seen;
  std::set<int> ids;
  for (const auto& c : clusters) {
    if (!ids.insert(c.cluster_id).second) {
      return "duplicate cluster id " + std::to_string(c.cluster_id);
    }
    for (const auto& ref : c.members) {
      if (!expected.contains(ref)) return "unknown entry " + ref.domain + "/" + ref.entity_id + "/" + ref.doc_id;
      if (!seen.insert(ref).second) {
        return "entry " + ref.domain + "/" + ref.entity_id + "/" + ref.doc_id +
               " is in more than one cluster";
      }
    }
  }
  if (seen.size() != expected.size()) {
    return std::to_string(expected.size() - seen.size()) + " entries are not clustered";
  }
  return "";
}

PairDataset generate_pair_dataset(std::span<const KnowledgeEntry> entries,
                                  std::span<const KnowledgeCluster> clusters, Rng& rng) {
  std::map<EntryRef, const KnowledgeEntry*> by_ref;
  for (const auto& e : entries) by_ref[e.ref()] = &e;
  std::map<EntryRef, int> cluster_of;
  for (const auto& c : clusters) {
    for (const auto& ref : c.members) cluster_of[ref] = c.cluster_id;
  }
  auto cluster_id = [&](const EntryRef& ref) -> std::optional<int> {
    auto it = cluster_of.find(ref);
    return it == cluster_of.end() ? std::nullopt : std::optional<int>(it->second);
  };

  PairDataset out;
  for (const auto& e : entries) {
    out.examples.push_back({e.title, e.body, PairLabel::kPositive});
  }
  for (const auto& c : clusters) {
    for (const auto& a : c.members) {
      for (const auto& b : c.members) {
        if (a == b) continue;
        const auto ea = by_ref.find(a);
        const auto eb = by_ref.find(b);
        if (ea == by_ref.end() || eb == by_ref.end()) {
          throw DataError("cluster " + std::to_string(c.cluster_id) +
                          " references an unknown entry");
        }
        out.examples.push_back({ea->second->title, eb->second->body, PairLabel::kPositive});
      }
    }
  }

  std::map<std::pair<std::string, std::string>, std::vector<const KnowledgeEntry*>> by_entity;
  for (const auto& e : entries) by_entity[{e.domain, e.entity_id}].push_back(&e);
  for (const auto& e : entries) {
    const auto own_cluster = cluster_id(e.ref());
    std::set<std::string> titles;
    for (const auto* other : by_entity[{e.domain, e.entity_id}]) {
      if (other->title == e.title) continue;
      if (own_cluster && cluster_id(other->ref()) == own_cluster) continue;
      titles.insert(other->title);
    }
    if (titles.empty()) {
      ++out.entries_without_negative;
      continue;
    }
    auto it = titles.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_index(titles.size())));
    out.examples.push_back({*it, e.body, PairLabel::kNegative});
  }
  return out;
}

double token_jaccard(std::string_view a, std::string_view b, const StopwordSet& stopwords) {
  const auto ta = normalize_tokens(a, stopwords);
  const auto tb = normalize_tokens(b, stopwords);
  if (ta.empty() && tb.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  const std::size_t uni = ta.size() + tb.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

PairJudge jaccard_judge(StopwordSet stopwords) {
  return [stopwords = std::move(stopwords)](std::string_view title, std::string_view body) {
    return token_jaccard(title, body, stopwords);
  };
}

PairJudge constant_judge(double score) {
  return [score](std::string_view, std::string_view) { return score; };
}

namespace {

struct WorkingCluster {
  KnowledgeCluster cluster;
  std::vector<std::size_t> entry_indices;
};

std::vector<KnowledgeCluster> snapshot(const std::optional<KnowledgeCluster>& zero,
                                       const std::vector<WorkingCluster>& work) {
  std::vector<KnowledgeCluster> out;
  if (zero) out.push_back(*zero);
  for (const auto& w : work) out.push_back(w.cluster);
  return out;
}

}  // namespace

MergeResult merge_clusters(std::span<const KnowledgeCluster> clusters,
                           std::span<const KnowledgeEntry> entries, const PairJudge& judge,
                           const MergeOptions& options, const RoundObserver& observer) {
  if (!(options.majority_fraction > 0.0 && options.majority_fraction <= 1.0)) {
    throw DataError("majority_fraction must be in (0, 1]");
  }
  std::map<EntryRef, std::size_t> index_of;
  for (std::size_t i = 0; i < entries.size(); ++i) index_of[entries[i].ref()] = i;

  std::optional<KnowledgeCluster> zero;
  std::vector<WorkingCluster> work;
  for (const auto& c : clusters) {
    if (c.cluster_id == kNonKnowledgeCluster) {
      zero = c;
      continue;
    }
    WorkingCluster w{c, {}};
    for (const auto& ref : c.members) {
      auto it = index_of.find(ref);
      if (it == index_of.end()) {
        throw DataError("cluster " + std::to_string(c.cluster_id) + " references an unknown entry");
      }
      w.entry_indices.push_back(it->second);
    }
    work.push_back(std::move(w));
  }
  std::sort(work.begin(), work.end(), [](const auto& a, const auto& b) {
    return a.cluster.cluster_id < b.cluster.cluster_id;
  });

  std::vector<std::string> body_keys;
  if (options.body_proposals) {
    for (const auto& e : entries) {
      const auto tokens = normalize_tokens(e.body, options.stopwords);
      body_keys.push_back(tokens.size() >= options.min_body_tokens ? join(tokens) : "");
    }
  }

  // Judgments depend only on the (title entry, body entry) pair, so they are
  // cached across rounds.
  std::map<std::pair<std::size_t, std::size_t>, bool> positive;
  MergeResult result;
  auto is_positive = [&](std::size_t title_entry, std::size_t body_entry) {
    const auto key = std::make_pair(title_entry, body_entry);
    if (auto it = positive.find(key); it != positive.end()) return it->second;
    double score = 0.0;
    try {
      score = judge(entries[title_entry].title, entries[body_entry].body);
    } catch (const std::exception& e) {
      throw MergeAborted(std::string("pair judge failed: ") + e.what(),
                         {snapshot(zero, work), result.rounds});
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw MergeAborted("pair judge returned " + format_double(score) + " outside [0,1]",
                         {snapshot(zero, work), result.rounds});
    }
    const bool pos = score >= options.positive_threshold;
    positive.emplace(key, pos);
    return pos;
  };

  while (work.size() >= 2) {
    MergeRound round;
    round.round = static_cast<int>(result.rounds.size()) + 1;
    round.clusters_before = work.size();

    struct Candidate {
      double fraction;
      std::size_t a;
      std::size_t b;
    };
    std::vector<Candidate> candidates;
    for (std::size_t a = 0; a < work.size(); ++a) {
      for (std::size_t b = a + 1; b < work.size(); ++b) {
        std::size_t hits = 0;
        std::size_t total = 0;
        for (std::size_t x : work[a].entry_indices) {
          for (std::size_t y : work[b].entry_indices) {
            hits += is_positive(x, y) ? 1 : 0;
            hits += is_positive(y, x) ? 1 : 0;
            total += 2;
          }
        }
        const double fraction =
            total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
        bool candidate = total > 0 && fraction > options.majority_fraction;
        if (!candidate && options.body_proposals) {
          for (std::size_t x : work[a].entry_indices) {
            for (std::size_t y : work[b].entry_indices) {
              if (!body_keys[x].empty() && body_keys[x] == body_keys[y]) candidate = true;
            }
          }
        }
        if (candidate) candidates.push_back({fraction, a, b});
      }
    }
    // work is sorted by id, so index order is id order.
    std::sort(candidates.begin(), candidates.end(), [](const auto& l, const auto& r) {
      if (l.fraction != r.fraction) return l.fraction > r.fraction;
      if (l.a != r.a) return l.a < r.a;
      return l.b < r.b;
    });

    std::vector<bool> used(work.size(), false);
    std::vector<bool> absorbed(work.size(), false);
    for (const auto& c : candidates) {
      if (used[c.a] || used[c.b]) continue;
      used[c.a] = used[c.b] = true;
      absorbed[c.b] = true;
      auto& keep = work[c.a];
      auto& gone = work[c.b];
      keep.cluster.members.insert(gone.cluster.members.begin(), gone.cluster.members.end());
      keep.entry_indices.insert(keep.entry_indices.end(), gone.entry_indices.begin(),
                                gone.entry_indices.end());
      round.merges.emplace_back(keep.cluster.cluster_id, gone.cluster.cluster_id);
    }
    std::vector<WorkingCluster> next;
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (!absorbed[i]) next.push_back(std::move(work[i]));
    }
    work = std::move(next);
    round.clusters_after = work.size();
    result.rounds.push_back(round);
    if (observer) {
      const auto snap = snapshot(zero, work);
      observer(round, snap);
    }
    if (round.merges.empty()) break;
  }
  result.clusters = snapshot(zero, work);
  return result;
}

std::vector<KnowledgeCluster> apply_overrides(std::span<const KnowledgeCluster> clusters,
                                              std::span<const ClusterOverride> overrides) {
  std::map<int, KnowledgeCluster> by_id;
  std::map<EntryRef, int> where;
  for (const auto& c : clusters) {
    by_id[c.cluster_id] = c;
    for (const auto& ref : c.members) where[ref] = c.cluster_id;
  }
  for (const auto& o : overrides) {
    auto it = where.find(o.ref);
    if (it == where.end()) {
      throw DataError("override references unknown entry " + o.ref.domain + "/" +
                      o.ref.entity_id + "/" + o.ref.doc_id);
    }
    if (o.cluster_id < 0) throw DataError("override cluster id must be >= 0");
    by_id[it->second].members.erase(o.ref);
    auto& target = by_id[o.cluster_id];
    target.cluster_id = o.cluster_id;
    target.members.insert(o.ref);
    it->second = o.cluster_id;
  }
  std::vector<KnowledgeCluster> out;
  for (auto& [id, c] : by_id) {
    if (c.members.empty() && id != kNonKnowledgeCluster) continue;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<KnowledgeCluster> renumber_clusters(std::span<const KnowledgeCluster> clusters) {
  std::vector<KnowledgeCluster> out(clusters.begin(), clusters.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  int next = 1;
  for (auto& c : out) {
    if (c.cluster_id != kNonKnowledgeCluster) c.cluster_id = next++;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class J>
J parse_json(std::string_view text, const char* what) {
  try {
    return J::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw DataError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

EntryRef ref_from_json(const json& j) {
  if (j.is_array()) {
    if (j.size() != 3) throw DataError("entry reference needs [domain, entity_id, doc_id]");
    return {j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
  }
  return {j.at("domain").get<std::string>(), j.at("entity_id").get<std::string>(),
          j.at("doc_id").get<std::string>()};
}

}  // namespace

std::vector<KnowledgeEntry> parse_knowledge_base(std::string_view json_text) {
  const auto j = parse_json<ordered_json>(json_text, "knowledge base");
  std::vector<KnowledgeEntry> out;
  try {
    if (!j.is_object()) throw DataError("knowledge base must be an object keyed by domain");
    for (const auto& [domain, entities] : j.items()) {
      for (const auto& [entity_id, entity] : entities.items()) {
        for (const auto& [doc_id, doc] : entity.at("docs").items()) {
          KnowledgeEntry e{domain, entity_id, doc_id, doc.at("title").get<std::string>(),
                           doc.value("body", std::string())};
          if (split_whitespace(e.title).empty()) {
            throw DataError("empty title for " + domain + "/" + entity_id + "/" + doc_id);
          }
          out.push_back(std::move(e));
        }
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed knowledge base: ") + e.what());
  }
  return out;
}

std::string clusters_to_json(std::span<const KnowledgeCluster> clusters) {
  ordered_json out = ordered_json::array();
  for (const auto& c : clusters) {
    ordered_json members = ordered_json::array();
    for (const auto& r : c.members) members.push_back({r.domain, r.entity_id, r.doc_id});
    ordered_json o;
    o["cluster_id"] = c.cluster_id;
    o["key"] = c.key;
    o["members"] = std::move(members);
    out.push_back(std::move(o));
  }
  return out.dump(1) + "\n";
}

std::vector<KnowledgeCluster> clusters_from_json(std::string_view json_text) {
  const auto j = parse_json<json>(json_text, "clusters file");
  std::vector<KnowledgeCluster> out;
  try {
    for (const auto& c : j) {
      KnowledgeCluster k{c.at("cluster_id").get<int>(), c.at("key").get<std::string>(), {}};
      for (const auto& m : c.at("members")) k.members.insert(ref_from_json(m));
      out.push_back(std::move(k));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed clusters file: ") + e.what());
  }
  return out;
}

std::vector<ClusterOverride> parse_overrides(std::string_view json_text) {
  const auto j = parse_json<json>(json_text, "override file");
  std::vector<ClusterOverride> out;
  try {
    for (const auto& o : j) {
      out.push_back({ref_from_json(o.at("doc_ref")), o.at("forced_cluster_id").get<int>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed override file: ") + e.what());
  }
  return out;
}

std::string pair_to_json(const PairExample& pair) {
  ordered_json o;
  o["title"] = pair.title;
  o["body"] = pair.body;
  o["label"] = pair.label == PairLabel::kPositive ? "positive" : "negative";
  return o.dump();
}

}  // namespace asrsim
