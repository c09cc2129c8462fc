#pragma once

#include "qoie/blocks.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace qoie::model {

// Training and architecture settings. Defaults are the desk-scale setting;
// full_scale() returns the published setting (512 wide, 8 heads, 2/4/6
// layers, 37000 subwords).
struct ModelConfig {
  int d_model = 64;
  int heads = 4;
  int d_ff = 0;  // 0 means 4 * d_model
  int n_e = 2;
  int n_t = 2;
  int n_c = 2;
  double lambda = 3.0;
  double lr = 1e-3;
  int batch_size = 16;
  int steps = 2000;
  std::uint64_t seed = 1;
  bool use_question = true;
  bool semantic_tags = true;
  int max_decode_len = 64;
  int k_args = 4;
  int vocab_size = 2000;
  double ln_eps = 1e-5;
  double dropout = 0.0;

  static ModelConfig full_scale();

  int ffn_width() const { return d_ff > 0 ? d_ff : 4 * d_model; }
  blocks::BlockConfig block() const;
  // Throws std::invalid_argument naming the offending key.
  void validate() const;

  // Flat "key = value" text; '#' starts a comment. Unknown keys throw.
  void apply(const std::string& key, const std::string& value);
  static ModelConfig parse(const std::string& text);
  static ModelConfig load(const std::filesystem::path& path);
  std::string to_text() const;
  std::map<std::string, std::string> to_map() const;
};

}  // namespace qoie::model
