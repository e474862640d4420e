#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rng.hpp"

namespace maskgan {

using TokenSeq = std::vector<int>;

// Reserved ids. The mask placeholder renders as "<m>".
enum SpecialId : int { kPadId = 0, kMaskId = 1, kEosId = 2, kUnkId = 3 };
inline constexpr int kNumSpecials = 4;

// Bijective token<->id map. Ids 0..3 are pad, mask, eos, unk in that order;
// content tokens follow, ranked by descending corpus frequency with
// lexicographic tie-break.
class Vocab {
 public:
  // Tokens must not include the specials; they are prepended here.
  explicit Vocab(std::vector<std::string> content_tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  // Unknown tokens map to kUnkId.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const;

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Frequency-ranked vocab from one-sequence-per-line text. max_size counts the
// four specials. Throws on empty corpus or max_size < 5.
Vocab build_vocab(const std::string& corpus_text, int max_size);
Vocab build_vocab_file(const std::string& path, int max_size);

// Whitespace tokenize, map to ids (unknown -> unk), truncate to max_len.
TokenSeq encode(const std::string& line, const Vocab& vocab, int max_len);
std::string decode(const TokenSeq& seq, const Vocab& vocab);

std::vector<TokenSeq> load_corpus(const std::string& path, const Vocab& vocab,
                                  int max_len);

struct SyntheticTaskSpec {
  enum class Kind { kAlphabetOrder, kMarkovChain };
  Kind kind = Kind::kAlphabetOrder;
  int vocab_size = 0;   // content tokens only
  int seq_len = 0;
  // markov-chain only; dimensions vocab_size x vocab_size and vocab_size.
  std::vector<std::vector<double>> transition;
  std::vector<double> initial;
};

// Consecutive ascending runs of alphabet tokens at random start offsets.
// Sequences are ids into a vocab whose content tokens are a, b, c, ...
std::vector<TokenSeq> gen_alphabet_task(const SyntheticTaskSpec& spec,
                                        int n_sequences, uint64_t rng_seed);

// Content-token names for the alphabet/markov vocabularies: a, b, ..., z,
// then a1, b1, ... for larger sizes.
std::vector<std::string> synthetic_token_names(int n);

// I.i.d. sequences from the chain; ids offset by kNumSpecials.
// Throws if the transition matrix is not row-stochastic (1e-9 tolerance).
std::vector<TokenSeq> gen_markov_corpus(const SyntheticTaskSpec& spec,
                                        int n_sequences, uint64_t rng_seed);

struct Batch {
  std::vector<TokenSeq> rows;    // padded to the same length with kPadId
  std::vector<int> valid_len;    // original lengths
  int max_len = 0;
  int size() const { return static_cast<int>(rows.size()); }
};

// One epoch of shuffled, padded batches. Every sequence appears exactly once.
std::vector<Batch> batch_iter(const std::vector<TokenSeq>& data,
                              int batch_size, uint64_t rng_seed);

}  // namespace maskgan
