#include "asrsim/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "asrsim/cn_ingest.hpp"
#include "asrsim/edit_model.hpp"
#include "asrsim/error.hpp"
#include "asrsim/kb_cluster.hpp"
#include "asrsim/random.hpp"
#include "asrsim/simulator.hpp"
#include "asrsim/text.hpp"

namespace fs = std::filesystem;

namespace asrsim::cli {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

namespace {

void check_output_path(const std::string& path) {
  const fs::path p(path);
  const auto dir = p.parent_path();
  if (!dir.empty() && !fs::is_directory(dir)) {
    throw UsageError("output directory does not exist: " + dir.string());
  }
  if (fs::is_directory(p)) throw UsageError("output path is a directory: " + path);
}

RewriteModel load_model_file(const std::string& path) {
  const auto text = read_file(path);
  try {
    return load_model_from_string(text);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// build

struct BuildArgs {
  std::vector<std::string> inputs;
  std::string output;
  int position_cap = RewriteModel::kDefaultPositionCap;
  std::string format = "auto";
};

bool looks_like_sausage(std::string_view text) {
  for (auto line : split_lines(text)) {
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    return fields[0] == "align" || fields[0] == "name" || fields[0] == "numaligns";
  }
  return false;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file()) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  if (files.empty()) throw DataError("no input files found");
  return files;
}

int cmd_build(const BuildArgs& a, std::ostream& out) {
  check_output_path(a.output);
  if (a.position_cap < 1) throw UsageError("--position-cap must be >= 1");
  const auto files = expand_inputs(a.inputs);

  ModelEstimator est(a.position_cap);
  std::size_t networks = 0;
  std::size_t pairs = 0;
  for (const auto& file : files) {
    const auto text = read_file(file);
    const bool sausage = a.format == "sausage" || (a.format == "auto" && looks_like_sausage(text));
    std::vector<ConfusionNetwork> cns;
    try {
      if (sausage) {
        cns = parse_confusion_networks(text);
      } else {
        for (const auto& nb : parse_nbest_lists(text)) cns.push_back(align_nbest_to_cn(nb));
      }
    } catch (const DataError& e) {
      throw DataError(file.string() + ": " + e.what());
    }
    networks += cns.size();
    for (const auto& cn : cns) {
      for (const auto& p : extract_confusion_pairs(cn)) {
        ++pairs;
        est.add(p);
      }
    }
  }
  if (est.pairs_used() == 0) {
    throw DataError(
        "no usable confusion pairs: every slot has fewer than two distinct letter-only "
        "words. N-best inputs need at least two differing hypotheses per utterance; "
        "sausage inputs need slots with competing alternatives.");
  }
  const auto& m = est.model();
  write_file_atomic(a.output, save_model_to_string(m));
  out << "files: " << files.size() << "\n"
      << "confusion networks: " << networks << "\n"
      << "pairs seen: " << pairs << " (used " << est.pairs_used() << ")\n"
      << "alphabet size: " << m.alphabet.size() << "\n"
      << "replacement contexts: " << m.replace_counts.size() << "\n"
      << "insertion contexts: " << m.insert_counts.size() << "\n"
      << "wrote " << a.output << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string model;
  std::string word;
  int n = 10;
  unsigned long long seed = kDefaultSeed;
  bool verbose = false;
};

std::string describe(const Edit& e) {
  switch (e.kind) {
    case EditKind::kReplacement:
      return std::string("replace@") + std::to_string(e.position) + " " + e.from + "->" + e.to;
    case EditKind::kDeletion:
      return std::string("delete@") + std::to_string(e.position) + " " + e.from;
    case EditKind::kInsertion:
      return std::string("insert@") + std::to_string(e.position) + " " + e.to;
  }
  return {};
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.n < 0) throw UsageError("-n must be >= 0");
  if (!is_eligible_token(a.word)) {
    throw UsageError("'" + a.word + "' is not eligible: need at least two letters, letters only");
  }
  const auto model = load_model_file(a.model);
  Rng rng(a.seed);
  for (int i = 0; i < a.n; ++i) {
    const auto r = corrupt_word(a.word, model, rng);
    out << r.noisy;
    if (a.verbose) {
      out << "\t" << r.trace.requested_edits << " edits";
      if (r.trace.early_stopped) out << " (stopped early)";
      for (const auto& e : r.trace.edits) out << "; " << describe(e);
    }
    out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// corrupt

struct CorruptArgs {
  std::string model;
  std::string input;
  std::string output;
  unsigned long long seed = kDefaultSeed;
  std::size_t max_words = 2;
  bool all_user_turns = false;
  bool last_turn_only = false;
  unsigned threads = 1;
};

int cmd_corrupt(const CorruptArgs& a, std::ostream& out) {
  check_output_path(a.output);
  if (a.all_user_turns && a.last_turn_only) {
    throw UsageError("--last-turn-only and --all-user-turns are exclusive");
  }
  const auto model = load_model_file(a.model);
  const auto text = read_file(a.input);
  std::vector<Dialogue> dialogues;
  try {
    dialogues = parse_dialogues(text);
  } catch (const DataError& e) {
    throw DataError(a.input + ": " + e.what());
  }
  CorruptionPolicy policy;
  policy.last_user_turn_only = !a.all_user_turns;
  policy.max_corrupted_words = a.max_words;
  const auto records = corrupt_dataset(dialogues, model, a.seed, policy, a.threads);

  std::string body;
  std::size_t corrupted = 0;
  for (const auto& r : records) {
    body += record_to_json(r);
    body += '\n';
    corrupted += r.corrections.size();
  }
  write_file_atomic(a.output, body);
  out << "dialogues: " << dialogues.size() << "\n"
      << "records: " << records.size() << "\n"
      << "corrupted tokens: " << corrupted << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
  std::string kb;
  std::string clusters;
  std::string output;
  std::string stopwords;
  std::string overrides;
  std::string oracle = "jaccard";
  unsigned long long seed = kDefaultSeed;
  double threshold = 0.5;
  double majority = 0.5;
  bool body_proposals = false;
};

StopwordSet load_stopwords(const ClusterArgs& a) {
  if (a.stopwords.empty()) return default_stopwords();
  std::vector<std::string> words;
  for (auto w : split_whitespace(read_file(a.stopwords))) words.emplace_back(w);
  return make_stopwords(words);
}

std::vector<KnowledgeCluster> load_or_init_clusters(const ClusterArgs& a,
                                                    std::span<const KnowledgeEntry> entries,
                                                    const StopwordSet& stopwords) {
  if (a.clusters.empty()) return initial_clusters(entries, stopwords);
  auto clusters = clusters_from_json(read_file(a.clusters));
  if (auto err = partition_error(clusters, entries); !err.empty()) {
    throw DataError(a.clusters + ": clusters do not partition the knowledge base: " + err);
  }
  return clusters;
}

PairJudge make_judge(const std::string& name, const StopwordSet& stopwords) {
  if (name == "jaccard") return jaccard_judge(stopwords);
  constexpr std::string_view prefix = "constant:";
  if (name.rfind(prefix, 0) == 0) {
    const auto v = parse_double(std::string_view(name).substr(prefix.size()));
    if (!v || *v < 0.0 || *v > 1.0) throw UsageError("constant oracle needs a score in [0,1]");
    return constant_judge(*v);
  }
  throw UsageError("unknown oracle '" + name + "' (jaccard | constant:<score>)");
}

int cmd_cluster_init(const ClusterArgs& a, std::ostream& out) {
  check_output_path(a.output);
  const auto stopwords = load_stopwords(a);
  const auto entries = parse_knowledge_base(read_file(a.kb));
  const auto clusters = initial_clusters(entries, stopwords);
  write_file_atomic(a.output, clusters_to_json(clusters));
  out << "entries: " << entries.size() << "\n"
      << "clusters: " << clusters.size() - 1 << " (plus non-knowledge cluster 0)\n";
  return kExitOk;
}

int cmd_cluster_pairs(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  check_output_path(a.output);
  const auto stopwords = load_stopwords(a);
  const auto entries = parse_knowledge_base(read_file(a.kb));
  const auto clusters = load_or_init_clusters(a, entries, stopwords);
  Rng rng(a.seed);
  const auto data = generate_pair_dataset(entries, clusters, rng);
  std::string body;
  std::size_t pos = 0;
  for (const auto& p : data.examples) {
    body += pair_to_json(p);
    body += '\n';
    pos += p.label == PairLabel::kPositive ? 1 : 0;
  }
  write_file_atomic(a.output, body);
  if (data.entries_without_negative > 0) {
    err << "warning: " << data.entries_without_negative
        << " entries have no other title in their entity outside their cluster; no "
           "negative pair emitted for them\n";
  }
  out << "positives: " << pos << "\n"
      << "negatives: " << data.examples.size() - pos << "\n";
  return kExitOk;
}

int cmd_cluster_merge(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  check_output_path(a.output);
  const auto stopwords = load_stopwords(a);
  const auto judge = make_judge(a.oracle, stopwords);
  const auto entries = parse_knowledge_base(read_file(a.kb));
  const auto clusters = load_or_init_clusters(a, entries, stopwords);
  std::vector<ClusterOverride> overrides;
  if (!a.overrides.empty()) overrides = parse_overrides(read_file(a.overrides));

  MergeOptions opts;
  opts.positive_threshold = a.threshold;
  opts.majority_fraction = a.majority;
  opts.body_proposals = a.body_proposals;
  opts.stopwords = stopwords;
  auto report = [&](const MergeRound& r, std::span<const KnowledgeCluster>) {
    out << "round " << r.round << ": " << r.clusters_before << " -> " << r.clusters_after
        << " clusters\n";
  };
  MergeResult result;
  try {
    result = merge_clusters(clusters, entries, judge, opts, report);
  } catch (const MergeAborted& e) {
    err << "merge aborted after " << e.partial().rounds.size() << " completed rounds ("
        << e.partial().clusters.size() - 1 << " clusters)\n";
    throw;
  }
  auto final_clusters = renumber_clusters(apply_overrides(result.clusters, overrides));
  write_file_atomic(a.output, clusters_to_json(final_clusters));
  out << "rounds: " << result.rounds.size() << "\n"
      << "clusters: " << final_clusters.size() - 1 << " (plus non-knowledge cluster 0)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string model;
  int top_k = 5;
};

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void top_rewrites(std::ostream& out, const CountTable& table, int top_k) {
  std::map<char, SymbolCounts> pooled;
  for (const auto& [ctx, counts] : table) {
    for (const auto& [t, c] : counts) pooled[ctx.letter][t] += c;
  }
  for (const auto& [s, counts] : pooled) {
    std::vector<std::pair<char, std::uint64_t>> sorted(counts.begin(), counts.end());
    std::uint64_t total = 0;
    for (const auto& [t, c] : sorted) total += c;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& l, const auto& r) { return l.second > r.second; });
    out << "  " << s << ":";
    for (int i = 0; i < top_k && i < static_cast<int>(sorted.size()); ++i) {
      out << " " << sorted[i].first << " "
          << fixed6(static_cast<double>(sorted[i].second) / static_cast<double>(total));
    }
    out << "\n";
  }
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  if (a.top_k < 1) throw UsageError("--top-k must be >= 1");
  const auto m = load_model_file(a.model);
  if (m.replace_counts.empty() && m.insert_counts.empty()) {
    throw DataError(a.model + ": model has no rewrite counts");
  }
  std::uint64_t replace_total = 0;
  std::uint64_t deletions = 0;
  for (const auto& [ctx, counts] : m.replace_counts) {
    for (const auto& [t, c] : counts) {
      replace_total += c;
      if (t == kDeletionSymbol) deletions += c;
    }
  }
  std::uint64_t insert_total = 0;
  for (const auto& [ctx, counts] : m.insert_counts) {
    for (const auto& [t, c] : counts) insert_total += c;
  }
  const auto& k = m.constants;
  out << "alphabet: " << std::string(m.alphabet.begin(), m.alphabet.end()) << " ("
      << m.alphabet.size() << " letters)\n"
      << "position_cap: " << m.position_cap << "\n"
      << "edit counts: " << k.min_edits << "-" << k.max_edits
      << ", p_replacement " << fixed6(k.p_replacement) << ", p_insertion "
      << fixed6(k.p_insertion) << "\n"
      << "replacement contexts: " << m.replace_counts.size() << " (" << replace_total
      << " observations)\n"
      << "insertion contexts: " << m.insert_counts.size() << " (" << insert_total
      << " observations)\n"
      << "deletion mass: "
      << fixed6(replace_total == 0 ? 0.0
                                   : static_cast<double>(deletions) /
                                         static_cast<double>(replace_total))
      << "\n";
  out << "top rewrites per letter:\n";
  top_rewrites(out, m.replace_counts, a.top_k);
  out << "top insertions per context letter:\n";
  top_rewrites(out, m.insert_counts, a.top_k);
  out << "deletion contexts:\n";
  for (const auto& [ctx, counts] : m.replace_counts) {
    for (const auto& [t, p] : m.replacement_distribution(ctx)) {
      if (t == kDeletionSymbol) {
        out << "  Pr(*|" << ctx.letter << "," << ctx.bin << ") = " << fixed6(p) << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learn an ASR error channel from confusion networks and corrupt text with it",
               "asrsim"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Estimate a rewrite model from N-best or sausage files");
  b->add_option("inputs", build.inputs, "Input files or directories")
      ->required()
      ->check(CLI::ExistingPath);
  b->add_option("-o,--output", build.output, "Model file to write")->required();
  b->add_option("--position-cap", build.position_cap, "Positions at or past cap-1 share a bin")
      ->capture_default_str();
  b->add_option("--format", build.format, "Input format")
      ->check(CLI::IsMember({"auto", "nbest", "sausage"}))
      ->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Sample erroneous variants of one word");
  s->add_option("-m,--model", sim.model, "Model file")->required()->check(CLI::ExistingFile);
  s->add_option("word", sim.word, "Clean word")->required();
  s->add_option("-n", sim.n, "Number of variants")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_flag("--verbose", sim.verbose, "Print the edit trace of each variant");

  CorruptArgs cor;
  auto* c = app.add_subcommand("corrupt", "Corrupt user turns of a dialogue corpus");
  c->add_option("-m,--model", cor.model, "Model file")->required()->check(CLI::ExistingFile);
  c->add_option("-i,--input", cor.input, "Dialogues, one JSON object per line")
      ->required()
      ->check(CLI::ExistingFile);
  c->add_option("-o,--output", cor.output, "Corruption records to write")->required();
  c->add_option("--seed", cor.seed, "Master seed")->capture_default_str();
  c->add_option("--max-words", cor.max_words, "Tokens corrupted per utterance")
      ->capture_default_str();
  c->add_flag("--last-turn-only", cor.last_turn_only, "Corrupt only the last user turn (default)");
  c->add_flag("--all-user-turns", cor.all_user_turns, "Corrupt every user turn");
  c->add_option("--threads", cor.threads, "Worker threads")->capture_default_str();

  ClusterArgs clu;
  auto* cl = app.add_subcommand("cluster", "Unsupervised knowledge title clustering");
  cl->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--kb", clu.kb, "Knowledge base JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", clu.output, "Output file")->required();
    sub->add_option("--stopwords", clu.stopwords, "Whitespace-separated stopword file")
        ->check(CLI::ExistingFile);
  };
  auto* ci = cl->add_subcommand("init", "Group titles by normalized key");
  add_common(ci);
  auto* cp = cl->add_subcommand("pairs", "Emit positive/negative title-body pairs");
  add_common(cp);
  cp->add_option("--clusters", clu.clusters, "Clusters file (default: initial clusters)")
      ->check(CLI::ExistingFile);
  cp->add_option("--seed", clu.seed, "Random seed")->capture_default_str();
  auto* cm = cl->add_subcommand("merge", "Iteratively merge clusters using a pair judge");
  add_common(cm);
  cm->add_option("--clusters", clu.clusters, "Clusters file (default: initial clusters)")
      ->check(CLI::ExistingFile);
  cm->add_option("--threshold", clu.threshold, "Score counted as positive")
      ->capture_default_str();
  cm->add_option("--majority", clu.majority, "Positive fraction a pair must exceed")
      ->capture_default_str();
  cm->add_option("--oracle", clu.oracle, "jaccard | constant:<score>")->capture_default_str();
  cm->add_flag("--body-proposals", clu.body_proposals,
               "Also merge clusters sharing a meaningful body");
  cm->add_option("--overrides", clu.overrides, "Manual cluster assignments applied last")
      ->check(CLI::ExistingFile);

  StatsArgs st;
  auto* sa = app.add_subcommand("stats", "Summarize a rewrite model");
  sa->add_option("-m,--model", st.model, "Model file")->required()->check(CLI::ExistingFile);
  sa->add_option("--top-k", st.top_k, "Rewrites listed per letter")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (b->parsed()) return cmd_build(build, out);
    if (s->parsed()) return cmd_simulate(sim, out);
    if (c->parsed()) return cmd_corrupt(cor, out);
    if (ci->parsed()) return cmd_cluster_init(clu, out);
    if (cp->parsed()) return cmd_cluster_pairs(clu, out, err);
    if (cm->parsed()) return cmd_cluster_merge(clu, out, err);
    if (sa->parsed()) return cmd_stats(st, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace asrsim::cli
