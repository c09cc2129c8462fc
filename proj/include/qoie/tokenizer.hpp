#pragma once

#include "qoie/tagscheme.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qoie::tokenizer {

using tagscheme::Words;

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kSplit = 3;
inline constexpr int kUnk = 4;
inline constexpr int kSpecialCount = 5;

inline constexpr const char* kEndOfWord = "</w>";
inline constexpr const char* kSplitWord = "<split>";
inline constexpr const char* kUnkWord = "<unk>";
inline constexpr const char* kBpeMagic = "QOIE-BPE v1";

struct SubwordSequence {
  std::vector<int> ids;
  // word_of[i] is the index of the source word of ids[i]; non-decreasing.
  std::vector<int> word_of;
};

// Byte-pair encoding with an end-of-word suffix on the final symbol of each
// word. Ids: the five specials, then the base alphabet in sorted order, then
// one id per newly created merge symbol in learning order.
class BpeModel {
 public:
  BpeModel() : BpeModel({}, {}) {}

  // Greedy merging of the most frequent adjacent pair (ties: smallest pair
  // lexicographically) until `target_vocab_size` symbols exist or no pair
  // occurs twice. Throws std::invalid_argument for an empty corpus or a
  // target below specials + base alphabet.
  static BpeModel learn(const std::vector<Words>& corpus, int target_vocab_size);

  // Applies merges in priority order. The literal word "<split>" maps to the
  // SPLIT special; characters outside the alphabet map to UNK.
  SubwordSequence encode(const Words& words) const;

  // Concatenates subwords, closing a word at each end-of-word marker. SPLIT
  // becomes the word "<split>", UNK the text "<unk>"; PAD/BOS/EOS are
  // dropped. Throws std::out_of_range for an unknown id.
  Words decode(std::span<const int> ids) const;

  int vocab_size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(int id) const;
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }

  // Text file: magic line, one "#alphabet" line listing base symbols, then one
  // merge per line as "left right".
  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

 private:
  BpeModel(std::vector<std::string> alphabet, std::vector<std::pair<std::string, std::string>> merges);

  std::vector<int> encode_word(const std::string& word) const;

  std::vector<std::string> alphabet_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> symbol_ids_;
  std::map<std::pair<std::string, std::string>, int> merge_rank_;
};

// Splits a word into UTF-8 code points, suffixing the last with "</w>".
std::vector<std::string> initial_symbols(const std::string& word);

// Each subword inherits its word's role; B/I are re-derived over subwords.
// Throws std::invalid_argument when word_tags does not cover every source word.
std::vector<tagscheme::SemanticTag> project_tags(const std::vector<tagscheme::SemanticTag>& word_tags,
                                                 const SubwordSequence& sub);

}  // namespace qoie::tokenizer
