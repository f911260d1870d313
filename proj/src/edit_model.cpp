#include "asrsim/edit_model.hpp"

#include <algorithm>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "asrsim/edit_distance.hpp"
#include "asrsim/error.hpp"
#include "asrsim/text.hpp"

namespace asrsim {

std::vector<WordPair> extract_confusion_pairs(const ConfusionNetwork& cn) {
  std::vector<WordPair> pairs;
  for (const auto& slot : cn.slots) {
    std::vector<std::string> words;
    for (const auto& alt : slot.alternatives) {
      if (alt.reserved() || !is_letter_word(alt.word)) continue;
      auto w = to_lower_ascii(alt.word);
      if (std::find(words.begin(), words.end(), w) == words.end()) {
        words.push_back(std::move(w));
      }
    }
    for (const auto& a : words) {
      for (const auto& b : words) {
        if (a != b) pairs.push_back({a, b});
      }
    }
  }
  return pairs;
}

std::string LetterAlignment::source() const {
  std::string s;
  for (const auto& c : columns) {
    if (c.src != kDeletionSymbol) s += c.src;
  }
  return s;
}

std::string LetterAlignment::target() const {
  std::string s;
  for (const auto& c : columns) {
    if (c.tgt != kDeletionSymbol) s += c.tgt;
  }
  return s;
}

LetterAlignment align_letters(std::string_view source, std::string_view target) {
  if (source.empty() || target.empty()) {
    throw DataError("align_letters: words must be nonempty");
  }
  LetterAlignment out;
  thread_local std::vector<EditStep> script;
  edit_script_into(std::span<const char>(source.data(), source.size()),
                   std::span<const char>(target.data(), target.size()), script);
  out.columns.reserve(script.size());
  for (const auto& step : script) {
    switch (step.op) {
      case EditOp::kMatch:
        out.columns.push_back({source[step.src], target[step.tgt]});
        break;
      case EditOp::kSubstitute:
        out.columns.push_back({source[step.src], target[step.tgt]});
        ++out.cost;
        break;
      case EditOp::kDelete:
        out.columns.push_back({source[step.src], kDeletionSymbol});
        ++out.cost;
        break;
      case EditOp::kInsert:
        out.columns.push_back({kDeletionSymbol, target[step.tgt]});
        ++out.cost;
        break;
    }
  }
  return out;
}

int RewriteModel::bin(std::size_t position) const {
  return static_cast<int>(std::min<std::size_t>(position, position_cap - 1));
}

namespace {

std::vector<std::pair<char, double>> normalize(const SymbolCounts& counts) {
  std::uint64_t total = 0;
  for (const auto& [t, c] : counts) total += c;
  std::vector<std::pair<char, double>> dist;
  if (total == 0) return dist;
  for (const auto& [t, c] : counts) {
    if (c > 0) dist.emplace_back(t, static_cast<double>(c) / static_cast<double>(total));
  }
  return dist;
}

WeightedSymbols from_counts(const SymbolCounts& counts, Backoff source) {
  WeightedSymbols w;
  w.source = source;
  for (const auto& [t, c] : counts) {
    if (c == 0) continue;
    w.weights.emplace_back(t, c);
    w.total += c;
  }
  return w;
}

// Context lookup first, then pooled over every bin of the same letter.
WeightedSymbols lookup(const CountTable& table, char s, int bin) {
  if (auto it = table.find({s, bin}); it != table.end()) {
    auto w = from_counts(it->second, Backoff::kContext);
    if (w.total > 0) return w;
  }
  SymbolCounts pooled;
  for (auto it = table.lower_bound({s, 0}); it != table.end() && it->first.letter == s;
       ++it) {
    for (const auto& [t, c] : it->second) pooled[t] += c;
  }
  return from_counts(pooled, Backoff::kLetter);
}

}  // namespace

std::vector<std::pair<char, double>> RewriteModel::replacement_distribution(
    RewriteContext ctx) const {
  auto it = replace_counts.find(ctx);
  return it == replace_counts.end() ? std::vector<std::pair<char, double>>{}
                                    : normalize(it->second);
}

std::vector<std::pair<char, double>> RewriteModel::insertion_distribution(
    RewriteContext ctx) const {
  auto it = insert_counts.find(ctx);
  return it == insert_counts.end() ? std::vector<std::pair<char, double>>{}
                                   : normalize(it->second);
}

WeightedSymbols RewriteModel::replacement_weights(char s, std::size_t position) const {
  s = to_lower_ascii(s);
  auto w = lookup(replace_counts, s, bin(position));
  if (w.total > 0) return w;
  w = {};
  w.source = Backoff::kUniform;
  // kDeletionSymbol sorts before every letter.
  w.weights.emplace_back(kDeletionSymbol, 1);
  for (char t : alphabet) {
    if (t != s) w.weights.emplace_back(t, 1);
  }
  w.total = w.weights.size();
  return w;
}

WeightedSymbols RewriteModel::insertion_weights(char s, std::size_t position) const {
  s = to_lower_ascii(s);
  auto w = lookup(insert_counts, s, bin(position));
  if (w.total > 0) return w;
  w = {};
  w.source = Backoff::kUniform;
  for (char t : alphabet) w.weights.emplace_back(t, 1);
  w.total = w.weights.size();
  return w;
}

void RewriteModel::merge(const RewriteModel& other) {
  if (other.position_cap != position_cap) {
    throw DataError("cannot merge models with different position caps");
  }
  alphabet.insert(other.alphabet.begin(), other.alphabet.end());
  for (const auto& [ctx, counts] : other.replace_counts) {
    for (const auto& [t, c] : counts) replace_counts[ctx][t] += c;
  }
  for (const auto& [ctx, counts] : other.insert_counts) {
    for (const auto& [t, c] : counts) insert_counts[ctx][t] += c;
  }
  for (const auto& [ctx, c] : other.identity_counts) identity_counts[ctx] += c;
}

ModelEstimator::ModelEstimator(int position_cap) {
  if (position_cap < 1) throw DataError("position_cap must be >= 1");
  model_.position_cap = position_cap;
}

bool ModelEstimator::add(const WordPair& pair) {
  const auto source = to_lower_ascii(pair.source);
  const auto target = to_lower_ascii(pair.target);
  if (!is_letter_word(source) || !is_letter_word(target) || source == target ||
      pair.weight == 0) {
    ++pairs_skipped_;
    return false;
  }
  ++pairs_used_;
  const std::uint64_t w = pair.weight;
  RewriteModel& m = model_;
  m.alphabet.insert(source.begin(), source.end());
  m.alphabet.insert(target.begin(), target.end());

  std::size_t pos = 0;
  RewriteContext prev{kWordBegin, 0};
  for (const auto& col : align_letters(source, target).columns) {
    if (col.src == kDeletionSymbol) {
      m.insert_counts[prev][col.tgt] += w;
      continue;
    }
    const RewriteContext ctx{col.src, m.bin(pos)};
    if (col.src == col.tgt) {
      m.identity_counts[ctx] += w;
    } else {
      m.replace_counts[ctx][col.tgt] += w;
    }
    prev = ctx;
    ++pos;
  }
  return true;
}

void ModelEstimator::merge(const ModelEstimator& other) {
  model_.merge(other.model_);
  pairs_used_ += other.pairs_used_;
  pairs_skipped_ += other.pairs_skipped_;
}

RewriteModel estimate_model(std::span<const WordPair> pairs, int position_cap) {
  if (pairs.empty()) throw DataError("estimate_model: no word pairs given");
  ModelEstimator est(position_cap);
  for (const auto& p : pairs) est.add(p);
  if (est.pairs_used() == 0) {
    throw DataError("estimate_model: none of the " + std::to_string(pairs.size()) +
                    " word pairs is usable (letters only, distinct words)");
  }
  return est.model();
}

// ---------------------------------------------------------------------------
// Model file

namespace {

using nlohmann::json;

constexpr std::string_view kFormatName = "asrsim-rewrite-model";

json table_to_json(const CountTable& table) {
  json rows = json::array();
  for (const auto& [ctx, counts] : table) {
    json c = json::object();
    for (const auto& [t, n] : counts) c[std::string(1, t)] = n;
    rows.push_back({{"letter", std::string(1, ctx.letter)}, {"bin", ctx.bin}, {"counts", c}});
  }
  return rows;
}

char symbol_from_json(const json& j, const char* what) {
  const auto& s = j.get_ref<const std::string&>();
  if (s.size() != 1) throw DataError(std::string("model file: invalid ") + what + " '" + s + "'");
  return s[0];
}

bool is_model_letter(char c) { return c >= 'a' && c <= 'z'; }

CountTable table_from_json(const json& rows, const RewriteModel& m, bool insertion) {
  CountTable table;
  for (const auto& row : rows) {
    const char s = symbol_from_json(row.at("letter"), "context letter");
    const int bin = row.at("bin").get<int>();
    if (!(is_model_letter(s) || (insertion && s == kWordBegin))) {
      throw DataError(std::string("model file: invalid context letter '") + s + "'");
    }
    if (bin < 0 || bin >= m.position_cap) {
      throw DataError("model file: bin " + std::to_string(bin) + " outside position cap");
    }
    auto& counts = table[{s, bin}];
    for (const auto& [key, value] : row.at("counts").items()) {
      if (key.size() != 1) throw DataError("model file: invalid symbol '" + key + "'");
      const char t = key[0];
      const bool ok = insertion ? is_model_letter(t)
                                : (t != s && (is_model_letter(t) || t == kDeletionSymbol));
      if (!ok) throw DataError("model file: invalid rewrite " + std::string(1, s) + "->" + key);
      counts[t] = value.get<std::uint64_t>();
    }
  }
  return table;
}

}  // namespace

void save_model(const RewriteModel& model, std::ostream& out) {
  if (model.alphabet.empty()) throw DataError("refusing to save a model with an empty alphabet");
  json ident = json::array();
  for (const auto& [ctx, n] : model.identity_counts) {
    ident.push_back({{"letter", std::string(1, ctx.letter)}, {"bin", ctx.bin}, {"count", n}});
  }
  const auto& k = model.constants;
  json j = {
      {"format", kFormatName},
      {"version", kModelFormatVersion},
      {"alphabet", std::string(model.alphabet.begin(), model.alphabet.end())},
      {"position_cap", model.position_cap},
      {"constants",
       {{"edit_count_range", {k.min_edits, k.max_edits}},
        {"p_replacement", k.p_replacement},
        {"p_insertion", k.p_insertion}}},
      {"replace_counts", table_to_json(model.replace_counts)},
      {"insert_counts", table_to_json(model.insert_counts)},
      {"identity_counts", ident},
  };
  out << j.dump(1) << '\n';
  if (!out) throw DataError("failed to write model");
}

RewriteModel load_model_from_string(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kFormatName) {
      throw DataError("not an asrsim rewrite model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model file version " + std::to_string(version) +
                      " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    RewriteModel m;
    m.position_cap = j.at("position_cap").get<int>();
    if (m.position_cap < 1) throw DataError("model file: position_cap must be >= 1");
    for (char c : j.at("alphabet").get<std::string>()) {
      if (!is_model_letter(c)) throw DataError(std::string("model file: bad alphabet letter '") + c + "'");
      m.alphabet.insert(c);
    }
    if (m.alphabet.empty()) throw DataError("model file: empty alphabet");
    const auto& k = j.at("constants");
    const auto range = k.at("edit_count_range").get<std::vector<int>>();
    if (range.size() != 2 || range[0] < 1 || range[1] < range[0]) {
      throw DataError("model file: invalid edit_count_range");
    }
    m.constants.min_edits = range[0];
    m.constants.max_edits = range[1];
    m.constants.p_replacement = k.at("p_replacement").get<double>();
    m.constants.p_insertion = k.at("p_insertion").get<double>();
    if (!(m.constants.p_replacement >= 0.0 && m.constants.p_replacement <= 1.0)) {
      throw DataError("model file: p_replacement outside [0,1]");
    }
    m.replace_counts = table_from_json(j.at("replace_counts"), m, false);
    m.insert_counts = table_from_json(j.at("insert_counts"), m, true);
    for (const auto& row : j.at("identity_counts")) {
      const char s = symbol_from_json(row.at("letter"), "identity letter");
      const int bin = row.at("bin").get<int>();
      if (!is_model_letter(s) || bin < 0 || bin >= m.position_cap) {
        throw DataError("model file: invalid identity context");
      }
      m.identity_counts[{s, bin}] = row.at("count").get<std::uint64_t>();
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupted model file: ") + e.what());
  }
}

RewriteModel load_model(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_model_from_string(text);
}

std::string save_model_to_string(const RewriteModel& model) {
  std::ostringstream out;
  save_model(model, out);
  return out.str();
}

}  // namespace asrsim
