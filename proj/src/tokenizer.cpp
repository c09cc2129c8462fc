#include "qoie/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qoie::tokenizer {

namespace {

const char* const kSpecialText[kSpecialCount] = {"<pad>", "<bos>", "<eos>", kSplitWord, kUnkWord};

constexpr const char* kAlphabetTag = "#alphabet";

bool ends_with_marker(const std::string& s) {
  const std::string marker = kEndOfWord;
  return s.size() >= marker.size() && s.compare(s.size() - marker.size(), marker.size(), marker) == 0;
}

using Pair = std::pair<std::string, std::string>;

// Replaces every non-overlapping occurrence of `pair`, scanning left to right.
void apply_merge(std::vector<std::string>& symbols, const Pair& pair) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(pair.first + pair.second);
      ++i;
    } else {
      out.push_back(symbols[i]);
    }
  }
  symbols = std::move(out);
}

}  // namespace

std::vector<std::string> initial_symbols(const std::string& word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    len = std::min(len, word.size() - i);
    out.push_back(word.substr(i, len));
    i += len;
  }
  if (!out.empty()) out.back() += kEndOfWord;
  return out;
}

BpeModel::BpeModel(std::vector<std::string> alphabet, std::vector<Pair> merges)
    : alphabet_(std::move(alphabet)), merges_(std::move(merges)) {
  std::sort(alphabet_.begin(), alphabet_.end());
  alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
  auto intern = [this](const std::string& s) {
    if (symbol_ids_.emplace(s, static_cast<int>(symbols_.size())).second) symbols_.push_back(s);
  };
  for (const char* s : kSpecialText) intern(s);
  for (const auto& s : alphabet_) intern(s);
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    merge_rank_.emplace(merges_[r], static_cast<int>(r));
    intern(merges_[r].first + merges_[r].second);
  }
}

BpeModel BpeModel::learn(const std::vector<Words>& corpus, int target_vocab_size) {
  std::map<std::string, long long> word_counts;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) {
      if (!w.empty() && w != kSplitWord) ++word_counts[w];
    }
  }
  if (word_counts.empty()) throw std::invalid_argument("bpe_learn: corpus is empty");

  std::vector<std::vector<std::string>> words;
  std::vector<long long> counts;
  std::set<std::string> alphabet;
  for (const auto& [w, c] : word_counts) {
    words.push_back(initial_symbols(w));
    counts.push_back(c);
    alphabet.insert(words.back().begin(), words.back().end());
  }
  const int base = kSpecialCount + static_cast<int>(alphabet.size());
  if (target_vocab_size < base) {
    throw std::invalid_argument("bpe_learn: target vocabulary " + std::to_string(target_vocab_size) +
                                " is below the " + std::to_string(base) +
                                " specials and base symbols");
  }

  std::set<std::string> known(alphabet.begin(), alphabet.end());
  std::vector<Pair> merges;
  int vocab = base;
  while (vocab < target_vocab_size) {
    std::map<Pair, long long> pair_counts;
    for (std::size_t i = 0; i < words.size(); ++i) {
      for (std::size_t j = 0; j + 1 < words[i].size(); ++j) {
        pair_counts[{words[i][j], words[i][j + 1]}] += counts[i];
      }
    }
    const Pair* best = nullptr;
    long long best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < 2) break;
    const Pair chosen = *best;
    merges.push_back(chosen);
    for (auto& w : words) apply_merge(w, chosen);
    if (known.insert(chosen.first + chosen.second).second) ++vocab;
  }
  return BpeModel(std::vector<std::string>(alphabet.begin(), alphabet.end()), std::move(merges));
}

std::vector<int> BpeModel::encode_word(const std::string& word) const {
  std::vector<std::string> symbols = initial_symbols(word);
  for (;;) {
    int best_rank = -1;
    for (std::size_t j = 0; j + 1 < symbols.size(); ++j) {
      auto it = merge_rank_.find({symbols[j], symbols[j + 1]});
      if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) best_rank = it->second;
    }
    if (best_rank < 0) break;
    apply_merge(symbols, merges_[static_cast<std::size_t>(best_rank)]);
  }
  std::vector<int> ids;
  ids.reserve(symbols.size());
  for (const auto& s : symbols) {
    auto it = symbol_ids_.find(s);
    ids.push_back(it == symbol_ids_.end() || it->second < kSpecialCount ? kUnk : it->second);
  }
  return ids;
}

SubwordSequence BpeModel::encode(const Words& words) const {
  SubwordSequence out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::vector<int> ids =
        words[w] == kSplitWord ? std::vector<int>{kSplit} : encode_word(words[w]);
    for (int id : ids) {
      out.ids.push_back(id);
      out.word_of.push_back(static_cast<int>(w));
    }
  }
  return out;
}

Words BpeModel::decode(std::span<const int> ids) const {
  Words out;
  std::string current;
  bool open = false;
  auto flush = [&]() {
    if (open) out.push_back(current);
    current.clear();
    open = false;
  };
  for (int id : ids) {
    if (id < 0 || id >= vocab_size()) {
      throw std::out_of_range("bpe_decode: unknown subword id " + std::to_string(id));
    }
    if (id == kPad || id == kBos || id == kEos) continue;
    if (id == kSplit) {
      flush();
      out.emplace_back(kSplitWord);
      continue;
    }
    if (id == kUnk) {
      current += kUnkWord;
      open = true;
      continue;
    }
    const std::string& s = symbols_[static_cast<std::size_t>(id)];
    if (ends_with_marker(s)) {
      current += s.substr(0, s.size() - std::string(kEndOfWord).size());
      open = true;
      flush();
    } else {
      current += s;
      open = true;
    }
  }
  flush();
  return out;
}

const std::string& BpeModel::symbol(int id) const {
  if (id < 0 || id >= vocab_size()) throw std::out_of_range("unknown subword id " + std::to_string(id));
  return symbols_[static_cast<std::size_t>(id)];
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write BPE model: " + path.string());
  out << kBpeMagic << '\n' << kAlphabetTag;
  for (const auto& s : alphabet_) out << ' ' << s;
  out << '\n';
  for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
  if (!out) throw std::runtime_error("failed writing BPE model: " + path.string());
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open BPE model: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kBpeMagic) {
    throw std::runtime_error("not a BPE model (bad header): " + path.string());
  }
  std::vector<std::string> alphabet;
  std::vector<Pair> merges;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line.rfind(kAlphabetTag, 0) == 0) {
      std::string tag, sym;
      fields >> tag;
      while (fields >> sym) alphabet.push_back(sym);
      continue;
    }
    Pair p;
    std::string extra;
    if (!(fields >> p.first >> p.second) || (fields >> extra)) {
      throw std::runtime_error("malformed merge on line " + std::to_string(line_no) + " of " +
                               path.string());
    }
    merges.push_back(std::move(p));
  }
  // Base symbols that only ever appear inside merges.
  std::set<std::string> composite;
  for (const auto& [l, r] : merges) composite.insert(l + r);
  for (const auto& [l, r] : merges) {
    if (!composite.contains(l)) alphabet.push_back(l);
    if (!composite.contains(r)) alphabet.push_back(r);
  }
  return BpeModel(std::move(alphabet), std::move(merges));
}

std::vector<tagscheme::SemanticTag> project_tags(const std::vector<tagscheme::SemanticTag>& word_tags,
                                                 const SubwordSequence& sub) {
  const int words = sub.word_of.empty() ? 0 : sub.word_of.back() + 1;
  if (static_cast<int>(word_tags.size()) != words) {
    throw std::invalid_argument("project_tags: " + std::to_string(word_tags.size()) + " tags for " +
                                std::to_string(words) + " words");
  }
  std::vector<tagscheme::SemanticTag> out;
  out.reserve(sub.word_of.size());
  for (int w : sub.word_of) out.push_back(word_tags[static_cast<std::size_t>(w)]);
  return tagscheme::rederive_boundaries(out);
}

}  // namespace qoie::tokenizer
