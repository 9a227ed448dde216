#include "laya/data/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "laya/error.hpp"
#include "laya/io/binary.hpp"
#include "laya/random.hpp"

namespace laya::data {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch) || ch >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary() {
  push("<pad>");
  push("<unk>");
}

void Vocabulary::push(std::string token) {
  ids_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t vocab_size) {
  if (texts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (vocab_size < 2) throw ParameterError("vocab_size must be at least 2");
  std::map<std::string, std::size_t> freq;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (std::size_t i = 0; i < ranked.size() && v.size() < vocab_size; ++i) v.push(ranked[i].first);
  return v;
}

std::int32_t Vocabulary::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() || it->second < 2 ? kUnknownId : it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << i << '\n';
  io::write_text(path, os.str());
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::istringstream in(io::read_text(path));
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw FormatError(path + ":" + std::to_string(lineno) + ": missing tab");
    const std::string id_text = line.substr(tab + 1);
    if (id_text != std::to_string(v.tokens_.size())) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected id " + std::to_string(v.tokens_.size()));
    }
    v.push(line.substr(0, tab));
  }
  if (v.size() < 2) throw FormatError(path + ": vocabulary lacks the padding and unknown entries");
  return v;
}

Dataset encode_corpus(const TextCorpus& corpus, const Vocabulary& vocab, std::size_t seq_len,
                      std::size_t num_classes, std::string split) {
  if (corpus.texts.empty()) throw DataError("empty corpus");
  if (corpus.texts.size() != corpus.labels.size()) throw DataError("corpus texts and labels differ in count");
  Dataset ds;
  ds.name = "text";
  ds.split = std::move(split);
  ds.sample_shape = {seq_len};
  ds.num_classes = num_classes;
  ds.labels = corpus.labels;
  ds.tokens.assign(corpus.texts.size() * seq_len, kPadId);
  for (std::size_t i = 0; i < corpus.texts.size(); ++i) {
    const auto toks = tokenize(corpus.texts[i]);
    for (std::size_t t = 0; t < std::min(seq_len, toks.size()); ++t) ds.tokens[i * seq_len + t] = vocab.id(toks[t]);
    // an empty text would pool over nothing; give it one unknown token
    if (toks.empty()) ds.tokens[i * seq_len] = kUnknownId;
  }
  ds.validate();
  return ds;
}

TextData tokenize_corpus(const TextCorpus& train, const TextCorpus& test, std::size_t vocab_size,
                         std::size_t seq_len, std::size_t num_classes) {
  TextData out{Vocabulary::build(train.texts, vocab_size), {}};
  out.splits.train = encode_corpus(train, out.vocab, seq_len, num_classes, "train");
  out.splits.test = encode_corpus(test, out.vocab, seq_len, num_classes, "test");
  return out;
}

TextCorpus read_corpus_tsv(const std::string& path) {
  std::istringstream in(io::read_text(path));
  TextCorpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    try {
      if (tab == std::string::npos) throw std::invalid_argument("tab");
      corpus.labels.push_back(std::stoi(line.substr(0, tab)));
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'label<TAB>text'");
    }
    corpus.texts.push_back(line.substr(tab + 1));
  }
  return corpus;
}

void write_corpus_tsv(const std::string& path, const TextCorpus& corpus) {
  std::ostringstream os;
  for (std::size_t i = 0; i < corpus.texts.size(); ++i) os << corpus.labels[i] << '\t' << corpus.texts[i] << '\n';
  io::write_text(path, os.str());
}

namespace {

std::string pseudo_word(Rng& rng, const char* prefix) {
  static const char* syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pu", "da", "fi"};
  std::string w = prefix;
  const std::size_t n = 2 + rng.below(2);
  for (std::size_t i = 0; i < n; ++i) w += syllables[rng.below(12)];
  return w;
}

}  // namespace

TextCorpus generate_synthetic_corpus(std::size_t n, std::uint64_t seed, double agreement) {
  Rng rng(seed, Stream::data);
  std::vector<std::string> filler, positive, negative;
  for (int i = 0; i < 400; ++i) filler.push_back(pseudo_word(rng, ""));
  for (int i = 0; i < 40; ++i) positive.push_back(pseudo_word(rng, "p"));
  for (int i = 0; i < 40; ++i) negative.push_back(pseudo_word(rng, "n"));

  TextCorpus corpus;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const std::size_t length = 20 + rng.below(60);
    const std::size_t cues = 3 + rng.below(5);
    std::vector<std::string> words;
    for (std::size_t k = 0; k < length; ++k) words.push_back(filler[rng.below(filler.size())]);
    for (std::size_t k = 0; k < cues; ++k) {
      const bool agrees = rng.uniform() < agreement;
      const auto& pool = (label == 1) == agrees ? positive : negative;
      words[rng.below(words.size())] = pool[rng.below(pool.size())];
    }
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    corpus.texts.push_back(std::move(text));
    corpus.labels.push_back(label);
  }
  return corpus;
}

}  // namespace laya::data
