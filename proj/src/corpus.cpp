#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace maskgan {

namespace {

const char* kSpecialNames[kNumSpecials] = {"<pad>", "<m>", "<eos>", "<unk>"};

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream iss(line);
  std::vector<std::string> out;
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> content_tokens) {
  tokens_.assign(kSpecialNames, kSpecialNames + kNumSpecials);
  for (auto& t : content_tokens) tokens_.push_back(std::move(t));
  if (size() < kNumSpecials + 1)
    throw std::invalid_argument("vocab: needs at least one content token");
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw std::invalid_argument("vocab: duplicate token '" + tokens_[i] +
                                  "'");
  }
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vocab: cannot write " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab: cannot read " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) tokens.push_back(line);
  if (tokens.size() < static_cast<size_t>(kNumSpecials + 1))
    throw std::runtime_error("vocab: file too small: " + path);
  for (int i = 0; i < kNumSpecials; ++i)
    if (tokens[i] != kSpecialNames[i])
      throw std::runtime_error("vocab: bad special token at line " +
                               std::to_string(i));
  return Vocab({tokens.begin() + kNumSpecials, tokens.end()});
}

Vocab build_vocab(const std::string& corpus_text, int max_size) {
  if (max_size < kNumSpecials + 1)
    throw std::invalid_argument("build_vocab: max_size must be >= 5");
  std::map<std::string, long> freq;  // ordered map gives the lexicographic tie-break
  std::istringstream iss(corpus_text);
  std::string line;
  long total = 0;
  while (std::getline(iss, line))
    for (auto& tok : split_ws(line)) {
      ++freq[tok];
      ++total;
    }
  if (total == 0) throw std::invalid_argument("build_vocab: empty corpus");
  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> content;
  for (const auto& [tok, n] : ranked) {
    if (static_cast<int>(content.size()) + kNumSpecials >= max_size) break;
    content.push_back(tok);
  }
  return Vocab(std::move(content));
}

Vocab build_vocab_file(const std::string& path, int max_size) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("build_vocab: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return build_vocab(ss.str(), max_size);
}

TokenSeq encode(const std::string& line, const Vocab& vocab, int max_len) {
  if (max_len < 1) throw std::invalid_argument("encode: max_len must be >= 1");
  TokenSeq ids;
  for (const auto& tok : split_ws(line)) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(vocab.id(tok));
  }
  return ids;
}

std::string decode(const TokenSeq& seq, const Vocab& vocab) {
  std::string out;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(seq[i]);
  }
  return out;
}

std::vector<TokenSeq> load_corpus(const std::string& path, const Vocab& vocab,
                                  int max_len) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot read " + path);
  std::vector<TokenSeq> out;
  std::string line;
  while (std::getline(in, line)) {
    TokenSeq seq = encode(line, vocab, max_len);
    if (!seq.empty()) out.push_back(std::move(seq));
  }
  return out;
}

std::vector<std::string> synthetic_token_names(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    std::string name(1, static_cast<char>('a' + i % 26));
    if (i >= 26) name += std::to_string(i / 26);
    names.push_back(std::move(name));
  }
  return names;
}

std::vector<TokenSeq> gen_alphabet_task(const SyntheticTaskSpec& spec,
                                        int n_sequences, uint64_t rng_seed) {
  if (spec.kind != SyntheticTaskSpec::Kind::kAlphabetOrder)
    throw std::invalid_argument("gen_alphabet_task: wrong task kind");
  if (spec.seq_len < 1 || spec.seq_len > spec.vocab_size)
    throw std::invalid_argument(
        "gen_alphabet_task: length exceeds content vocab");
  Rng rng(rng_seed);
  std::vector<TokenSeq> out;
  int max_offset = spec.vocab_size - spec.seq_len;
  for (int i = 0; i < n_sequences; ++i) {
    int off = max_offset == 0 ? 0 : rng.uniform_int(max_offset + 1);
    TokenSeq seq(spec.seq_len);
    for (int t = 0; t < spec.seq_len; ++t) seq[t] = kNumSpecials + off + t;
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<TokenSeq> gen_markov_corpus(const SyntheticTaskSpec& spec,
                                        int n_sequences, uint64_t rng_seed) {
  if (spec.kind != SyntheticTaskSpec::Kind::kMarkovChain)
    throw std::invalid_argument("gen_markov_corpus: wrong task kind");
  int n = spec.vocab_size;
  auto check_dist = [n](const std::vector<double>& row) {
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("gen_markov_corpus: bad row size");
    double s = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("gen_markov_corpus: p < 0");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("gen_markov_corpus: row does not sum to 1");
  };
  if (static_cast<int>(spec.transition.size()) != n)
    throw std::invalid_argument("gen_markov_corpus: bad transition size");
  for (const auto& row : spec.transition) check_dist(row);
  check_dist(spec.initial);

  Rng rng(rng_seed);
  std::vector<TokenSeq> out;
  for (int i = 0; i < n_sequences; ++i) {
    TokenSeq seq(spec.seq_len);
    int state = rng.categorical(spec.initial);
    for (int t = 0; t < spec.seq_len; ++t) {
      seq[t] = kNumSpecials + state;
      if (t + 1 < spec.seq_len) state = rng.categorical(spec.transition[state]);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<Batch> batch_iter(const std::vector<TokenSeq>& data,
                              int batch_size, uint64_t rng_seed) {
  if (batch_size < 1)
    throw std::invalid_argument("batch_iter: batch_size must be >= 1");
  std::vector<size_t> perm(data.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(rng_seed);
  rng.shuffle(perm);
  std::vector<Batch> batches;
  for (size_t start = 0; start < perm.size(); start += batch_size) {
    Batch b;
    size_t end = std::min(perm.size(), start + batch_size);
    for (size_t i = start; i < end; ++i) {
      const TokenSeq& s = data[perm[i]];
      b.rows.push_back(s);
      b.valid_len.push_back(static_cast<int>(s.size()));
      b.max_len = std::max(b.max_len, static_cast<int>(s.size()));
    }
    for (auto& row : b.rows) row.resize(b.max_len, kPadId);
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace maskgan
