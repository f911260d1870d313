#pragma once

// Unit-cost Levenshtein alignment over arbitrary sequences, shared by the
// word-level N-best pivot alignment and the letter-level pair alignment.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace asrsim {

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

/// One column of an alignment. `src` is meaningful unless op == kInsert,
/// `tgt` unless op == kDelete.
struct EditStep {
  EditOp op;
  std::size_t src;
  std::size_t tgt;

  friend bool operator==(const EditStep&, const EditStep&) = default;
};

namespace detail {

// Fills `d` with the full DP table. The buffer is reused by callers on hot
// paths, so it is resized rather than reallocated.
template <class T, class Eq>
void edit_table(std::span<const T> src, std::span<const T> tgt, Eq& eq,
                std::vector<std::size_t>& d) {
  const std::size_t cols = tgt.size() + 1;
  d.resize((src.size() + 1) * cols);
  for (std::size_t j = 0; j < cols; ++j) d[j] = j;
  for (std::size_t i = 1; i <= src.size(); ++i) {
    const std::size_t* prev = d.data() + (i - 1) * cols;
    std::size_t* cur = d.data() + i * cols;
    cur[0] = i;
    const T& s = src[i - 1];
    for (std::size_t j = 1; j < cols; ++j) {
      const std::size_t diag = prev[j - 1] + (eq(s, tgt[j - 1]) ? 0 : 1);
      cur[j] = std::min(diag, std::min(prev[j], cur[j - 1]) + 1);
    }
  }
}

}  // namespace detail

/// Same as edit_script, but fills `steps` so hot loops can reuse its storage.
template <class T, class Eq = std::equal_to<>>
void edit_script_into(std::span<const T> src, std::span<const T> tgt,
                      std::vector<EditStep>& steps, Eq eq = {}) {
  thread_local std::vector<std::size_t> d;
  detail::edit_table(src, tgt, eq, d);
  const std::size_t cols = tgt.size() + 1;
  auto at = [&](std::size_t i, std::size_t j) { return d[i * cols + j]; };

  steps.clear();
  std::size_t i = src.size();
  std::size_t j = tgt.size();
  while (i > 0 || j > 0) {
    const std::size_t here = at(i, j);
    if (i > 0 && j > 0) {
      const bool same = eq(src[i - 1], tgt[j - 1]);
      if (same && at(i - 1, j - 1) == here) {
        steps.push_back({EditOp::kMatch, i - 1, j - 1});
        --i, --j;
        continue;
      }
      if (!same && at(i - 1, j - 1) + 1 == here) {
        steps.push_back({EditOp::kSubstitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i - 1, j) + 1 == here) {
      steps.push_back({EditOp::kDelete, i - 1, 0});
      --i;
    } else {
      steps.push_back({EditOp::kInsert, 0, j - 1});
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());
}

/// Minimal unit-cost edit script turning `src` into `tgt`, in forward order.
/// Traceback runs right to left and prefers match, then substitution, then
/// deletion of a source element, then insertion of a target element.
template <class T, class Eq = std::equal_to<>>
std::vector<EditStep> edit_script(std::span<const T> src, std::span<const T> tgt,
                                  Eq eq = {}) {
  std::vector<EditStep> steps;
  edit_script_into(src, tgt, steps, eq);
  return steps;
}

template <class T, class Eq = std::equal_to<>>
std::size_t edit_distance(std::span<const T> src, std::span<const T> tgt, Eq eq = {}) {
  thread_local std::vector<std::size_t> d;
  detail::edit_table(src, tgt, eq, d);
  return d.back();
}

}  // namespace asrsim

namespace asrsim {

inline std::size_t edit_distance(std::string_view src, std::string_view tgt) {
  return edit_distance(std::span<const char>(src.data(), src.size()),
                       std::span<const char>(tgt.data(), tgt.size()));
}

}  // namespace asrsim
