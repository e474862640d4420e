#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "masking.hpp"
#include "tensor.hpp"

namespace maskgan {

struct ModelDims {
  int vocab = 0;
  int embed = 64;
  int hidden = 64;  // must equal embed (tied softmax projects h onto E^T)
  int layers = 2;
};

struct LstmLayer {
  Tensor wx;  // [in, 4H], gate order i,f,g,o
  Tensor wh;  // [H, 4H]
  Tensor b;   // [1, 4H]
};

struct LstmState {
  std::vector<Tensor> h, c;  // per layer, [B, H]
};

class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(int input_dim, int hidden, int layers, Rng& rng);

  LstmState initial_state(int batch) const;
  // One time step; inter-layer dropout when training. Returns top-layer h.
  Tensor step(const Tensor& x, LstmState& state, double drop_p, Rng* rng,
              bool training) const;

  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  std::vector<LstmLayer>& layers() { return layers_; }
  const std::vector<LstmLayer>& layers() const { return layers_; }
  void named_params(const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out) const;

 private:
  int input_dim_ = 0, hidden_ = 0;
  std::vector<LstmLayer> layers_;
};

enum class ModelRole { kGenerator, kDiscriminator };

// Seq2seq with Luong-style multiplicative attention. The generator projects
// decoder features back through the (tied) embedding table to vocab logits.
// The discriminator has the same trunk but scalar real/fake and critic value
// heads. The critic shares the whole trunk with the discriminator.
struct Seq2SeqModel {
  ModelDims dims;
  ModelRole role = ModelRole::kGenerator;
  Tensor embedding;  // [V,E]; doubles as the output softmax matrix
  Tensor out_bias;   // [1,V] (generator only)
  LstmStack encoder;
  LstmStack decoder;
  Tensor attn_w;          // [H,H] multiplicative scoring
  Tensor proj_w, proj_b;  // [2H,E], [1,E]: h-tilde = tanh([h; ctx] W + b)
  Tensor d_w, d_b;        // [E,1], [1,1] discriminator head
  Tensor c_w, c_b;        // [E,1], [1,1] critic head

  static Seq2SeqModel create(const ModelDims& dims, ModelRole role, Rng& rng);
  // Discriminator variant reusing the generator's embedding storage.
  static Seq2SeqModel create_shared_embedding(const ModelDims& dims,
                                              const Tensor& embedding,
                                              Rng& rng);

  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> params() const;
  // Everything except the embedding (used by the parameter-isolation tests).
  std::vector<Tensor> trunk_params() const;
};

// After LM pretraining the decoder weights seed the encoder.
void copy_decoder_weights_to_encoder(Seq2SeqModel& model);

struct MaskedBatch {
  Batch batch;                    // original ids, padded
  std::vector<Mask> masks;        // per row, over the padded length
  std::vector<TokenSeq> masked;   // mask id substituted
};

enum class MaskRegime { kContiguous, kBernoulli };

// Per-row masks over the valid prefix; padded positions keep bit 1.
MaskedBatch make_masked_batch(const Batch& batch, double rate,
                              MaskRegime regime, Rng& rng);
MaskedBatch masked_batch_from(const Batch& batch,
                              const std::vector<Mask>& masks);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
  // Token ids excluded when sampling/argmaxing a fill (e.g. pad). The choice
  // distribution is renormalized over the remaining ids.
  std::vector<int> ban_sample_ids;
};

// Encoder pass over the masked context: one top-layer state per position.
std::vector<Tensor> encode_context(const Seq2SeqModel& model,
                                   const MaskedBatch& input,
                                   const ForwardOptions& opt = {});

struct DecoderState {
  LstmState lstm;
};

// One decode step: embeds prev_ids, advances the stack, attends over the
// encoder states and returns the projected feature vector h-tilde [B,E].
// attn_out, when given, receives the attention weights [B,S].
Tensor decoder_features(const Seq2SeqModel& model,
                        const std::vector<int>& prev_ids, DecoderState& state,
                        const std::vector<Tensor>& enc_states,
                        const std::vector<int>& enc_valid_len,
                        const ForwardOptions& opt = {},
                        Tensor* attn_out = nullptr);

Tensor vocab_logits(const Seq2SeqModel& model, const Tensor& features);
// Sigmoid score clamped to [1e-7, 1-1e-7] so log-rewards stay finite.
Tensor disc_score_head(const Seq2SeqModel& model, const Tensor& features);
Tensor critic_value_head(const Seq2SeqModel& model, const Tensor& features);

// Language-model path (no encoder/attention): logits = h E^T + bias.
Tensor lm_step(const Seq2SeqModel& model, const std::vector<int>& prev_ids,
               LstmState& state, const ForwardOptions& opt = {});

enum class FillMode { kSample, kGreedy, kTeacher };

struct RolloutBatch {
  MaskedBatch input;
  std::vector<TokenSeq> composite;      // x-tilde: fills merged with real tokens
  std::vector<Tensor> step_logps;       // per step [B,1], graph-recorded
  // scope[b][t] = 1 where the generator acted (masked and within valid length)
  std::vector<std::vector<double>> scope;
  std::vector<std::vector<double>> rewards, returns, baselines, advantages;
  // full per-step distributions [t][b][v], populated on request only
  std::vector<std::vector<std::vector<double>>> dists;
  int batch() const { return static_cast<int>(composite.size()); }
  int steps() const { return static_cast<int>(step_logps.size()); }
};

// Auto-regressive in-filling. Real tokens are fed through unchanged; masked
// positions are sampled / argmaxed / teacher-forced. Log-probs of the chosen
// token are recorded at every step; scope marks where they count.
RolloutBatch generator_fill(const Seq2SeqModel& model, const MaskedBatch& input,
                            FillMode mode, Rng& rng,
                            const std::vector<TokenSeq>* teacher = nullptr,
                            const ForwardOptions& opt = {},
                            bool record_dists = false);

struct DiscOutput {
  std::vector<Tensor> scores;  // per position [B,1], in (0,1)
  std::vector<Tensor> values;  // per position [B,1]; b_t from the t-1 prefix
};

// Rate-1 masked generation: every position sampled, equivalent to running
// the model as a language model.
std::vector<TokenSeq> sample_unconditional(const Seq2SeqModel& model, int n,
                                           int len, Rng& rng,
                                           int batch_size = 64);

// Scores every position of the composite given the true masked context. The
// critic value for position t is read before x-tilde_t is consumed, so the
// baseline never depends on the action taken at t.
DiscOutput discriminator_forward(const Seq2SeqModel& model,
                                 const std::vector<TokenSeq>& composite,
                                 const MaskedBatch& context,
                                 const ForwardOptions& opt = {});

}  // namespace maskgan
