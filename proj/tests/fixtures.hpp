#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrsim/cn_ingest.hpp"
#include "asrsim/edit_model.hpp"

namespace asrsim::testing {

inline std::string data_path(const std::string& name) {
  return std::string(ASRSIM_TEST_DATA) + "/" + name;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Model estimated from the synthetic sausage corpus over the sample vocabulary.
inline RewriteModel vocab_model() {
  std::vector<WordPair> pairs;
  for (const auto& cn : parse_confusion_networks(read_text(data_path("vocab.sausage")))) {
    auto p = extract_confusion_pairs(cn);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  return estimate_model(pairs);
}

}  // namespace asrsim::testing
