#pragma once

// Test-only reference implementations. None of these call into the library's
// alignment or sampling code paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asrsim/edit_model.hpp"

namespace asrsim::testing {

/// Textbook two-row Wagner-Fischer.
inline int levenshtein_oracle(std::string_view a, std::string_view b) {
  thread_local std::vector<int> prev, cur;
  prev.resize(b.size() + 1);
  cur.resize(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int best = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      best = std::min(best, prev[j] + 1);
      best = std::min(best, cur[j - 1] + 1);
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

using Columns = std::vector<LetterColumn>;

/// Calls `fn` with every alignment of a and b (no (*,*) column).
inline void enumerate_alignments(std::string_view a, std::string_view b,
                                 const std::function<void(const Columns&)>& fn,
                                 Columns& prefix) {
  if (a.empty() && b.empty()) {
    fn(prefix);
    return;
  }
  if (!a.empty() && !b.empty()) {
    prefix.push_back({a[0], b[0]});
    enumerate_alignments(a.substr(1), b.substr(1), fn, prefix);
    prefix.pop_back();
  }
  if (!a.empty()) {
    prefix.push_back({a[0], '*'});
    enumerate_alignments(a.substr(1), b, fn, prefix);
    prefix.pop_back();
  }
  if (!b.empty()) {
    prefix.push_back({'*', b[0]});
    enumerate_alignments(a, b.substr(1), fn, prefix);
    prefix.pop_back();
  }
}

inline int column_cost(const Columns& cols) {
  return static_cast<int>(std::count_if(cols.begin(), cols.end(),
                                        [](const LetterColumn& c) { return c.src != c.tgt; }));
}

/// Minimum cost and the set of all minimum-cost alignments.
inline std::pair<int, std::vector<Columns>> brute_force_alignments(std::string_view a,
                                                                   std::string_view b) {
  int best = 1 << 30;
  std::vector<Columns> argmin;
  Columns prefix;
  enumerate_alignments(a, b, [&](const Columns& cols) {
    const int cost = column_cost(cols);
    if (cost < best) {
      best = cost;
      argmin.clear();
    }
    if (cost == best) argmin.push_back(cols);
  }, prefix);
  return {best, argmin};
}

/// Every word of length 1..max_len over `alphabet`.
inline std::vector<std::string> all_words(std::string_view alphabet, std::size_t max_len) {
  std::vector<std::string> out;
  std::vector<std::string> frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& w : frontier) {
      for (char c : alphabet) next.push_back(w + c);
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

/// Pearson statistic against a uniform expectation.
inline double chi_square_uniform(std::span<const std::size_t> counts) {
  double n = 0;
  for (auto c : counts) n += static_cast<double>(c);
  const double expected = n / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

/// Upper 1% point of chi-square with 2 degrees of freedom: the df=2 survival
/// function is exp(-x/2), so x = -2 ln(0.01).
inline double chi_square_df2_critical(double alpha) { return -2.0 * std::log(alpha); }

/// Every word one sampled edit can produce: the outcomes with nonzero weight
/// in the model's replacement and insertion tables for each position.
inline std::set<std::string> one_edit_outcomes(const std::string& word, const RewriteModel& m) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (m.constants.p_replacement > 0) {
      for (const auto& [t, w] : m.replacement_weights(word[i], i).weights) {
        if (w == 0) continue;
        std::string next = word;
        if (t == '*') {
          next.erase(i, 1);
        } else {
          next[i] = t;
        }
        out.insert(next);
      }
    }
    if (m.constants.p_replacement < 1) {
      for (const auto& [t, w] : m.insertion_weights(word[i], i).weights) {
        if (w == 0) continue;
        std::string next = word;
        next.insert(i + 1, 1, t);
        out.insert(next);
      }
    }
  }
  return out;
}

/// Union of outcomes over 1..max_edits sequential edits.
inline std::set<std::string> reachable_outcomes(const std::string& word, const RewriteModel& m,
                                                int max_edits) {
  std::set<std::string> all;
  std::set<std::string> frontier{word};
  for (int k = 1; k <= max_edits; ++k) {
    std::set<std::string> next;
    for (const auto& w : frontier) {
      if (w.empty()) {
        next.insert(w);
        continue;
      }
      auto step = one_edit_outcomes(w, m);
      next.insert(step.begin(), step.end());
    }
    all.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  return all;
}

}  // namespace asrsim::testing
