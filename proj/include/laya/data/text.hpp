#pragma once

// Whitespace/punctuation tokenizer with a frequency-ranked vocabulary.
// Id 0 is padding, id 1 is the unknown token.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "laya/data/dataset.hpp"

namespace laya::data {

constexpr std::int32_t kPadId = 0;
constexpr std::int32_t kUnknownId = 1;

// Lowercases ASCII letters and splits on runs of non-alphanumeric bytes.
// Bytes >= 0x80 are kept as word characters so UTF-8 words survive intact.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  Vocabulary();

  // Top (vocab_size - 2) tokens by frequency over `texts`, ties broken
  // lexicographically.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t vocab_size);

  std::int32_t id(const std::string& token) const;
  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }

  // "token<TAB>id" lines in id order; special tokens are written as <pad>
  // and <unk>.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

struct TextCorpus {
  std::vector<std::string> texts;
  std::vector<int> labels;
};

// Encodes each text to exactly seq_len ids (truncated or padded with 0).
Dataset encode_corpus(const TextCorpus& corpus, const Vocabulary& vocab, std::size_t seq_len,
                      std::size_t num_classes, std::string split);

// Builds the vocabulary from the training corpus and encodes both splits.
struct TextData {
  Vocabulary vocab;
  DatasetPair splits;
};
TextData tokenize_corpus(const TextCorpus& train, const TextCorpus& test, std::size_t vocab_size,
                         std::size_t seq_len, std::size_t num_classes = 2);

// Reads "label<TAB>text" lines.
TextCorpus read_corpus_tsv(const std::string& path);
void write_corpus_tsv(const std::string& path, const TextCorpus& corpus);

// Synthetic two-class review-like corpus: each text mixes neutral filler
// words with a few sentiment-bearing words whose polarity agrees with the
// label with probability `agreement`.
TextCorpus generate_synthetic_corpus(std::size_t n, std::uint64_t seed, double agreement = 0.8);

}  // namespace laya::data
