#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maskgan {

namespace {

Tensor row_sum(const Tensor& x) {
  return matmul(x, Tensor::constant(x.cols(), 1, 1.0));
}

std::vector<int> column_of(const std::vector<TokenSeq>& rows, int t) {
  std::vector<int> ids(rows.size());
  for (size_t b = 0; b < rows.size(); ++b) ids[b] = rows[b][t];
  return ids;
}

int argmax_row(std::span<const double> vals, int cols, int row) {
  const double* v = vals.data() + static_cast<size_t>(row) * cols;
  return static_cast<int>(std::max_element(v, v + cols) - v);
}

}  // namespace

LstmStack::LstmStack(int input_dim, int hidden, int layers, Rng& rng)
    : input_dim_(input_dim), hidden_(hidden) {
  if (layers < 1) throw std::invalid_argument("lstm: layers must be >= 1");
  for (int l = 0; l < layers; ++l) {
    int in = l == 0 ? input_dim : hidden;
    LstmLayer layer;
    layer.wx = Tensor::param(in, 4 * hidden, in, rng);
    layer.wh = Tensor::param(hidden, 4 * hidden, hidden, rng);
    layer.b = Tensor::zeros(1, 4 * hidden, true);
    layers_.push_back(std::move(layer));
  }
}

LstmState LstmStack::initial_state(int batch) const {
  LstmState s;
  for (size_t l = 0; l < layers_.size(); ++l) {
    s.h.push_back(Tensor::zeros(batch, hidden_));
    s.c.push_back(Tensor::zeros(batch, hidden_));
  }
  return s;
}

Tensor LstmStack::step(const Tensor& x, LstmState& state, double drop_p,
                       Rng* rng, bool training) const {
  Tensor input = x;
  int hd = hidden_;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const LstmLayer& layer = layers_[l];
    Tensor z = add_bias(
        add(matmul(input, layer.wx), matmul(state.h[l], layer.wh)), layer.b);
    Tensor i = sigmoid(slice_cols(z, 0, hd));
    Tensor f = sigmoid(slice_cols(z, hd, 2 * hd));
    Tensor g = tanh_t(slice_cols(z, 2 * hd, 3 * hd));
    Tensor o = sigmoid(slice_cols(z, 3 * hd, 4 * hd));
    state.c[l] = add(mul(f, state.c[l]), mul(i, g));
    state.h[l] = mul(o, tanh_t(state.c[l]));
    input = state.h[l];
    if (training && drop_p > 0.0 && rng && l + 1 < layers_.size())
      input = dropout(input, drop_p, *rng, true);
  }
  return input;
}

void LstmStack::named_params(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor>>& out) const {
  for (size_t l = 0; l < layers_.size(); ++l) {
    std::string base = prefix + ".l" + std::to_string(l);
    out.emplace_back(base + ".wx", layers_[l].wx);
    out.emplace_back(base + ".wh", layers_[l].wh);
    out.emplace_back(base + ".b", layers_[l].b);
  }
}

Seq2SeqModel Seq2SeqModel::create(const ModelDims& dims, ModelRole role,
                                  Rng& rng) {
  if (dims.hidden != dims.embed)
    throw std::invalid_argument(
        "model: hidden dim must equal embedding dim (tied softmax)");
  // Pad and mask ids must be embeddable; tiny synthetic vocabularies (for
  // the enumeration oracles) are allowed to overlap the remaining specials.
  if (dims.vocab <= kMaskId)
    throw std::invalid_argument("model: vocab too small");
  Seq2SeqModel m;
  m.dims = dims;
  m.role = role;
  m.embedding = Tensor::param(dims.vocab, dims.embed, dims.embed, rng);
  m.out_bias = Tensor::zeros(1, dims.vocab, true);
  m.encoder = LstmStack(dims.embed, dims.hidden, dims.layers, rng);
  m.decoder = LstmStack(dims.embed, dims.hidden, dims.layers, rng);
  m.attn_w = Tensor::param(dims.hidden, dims.hidden, dims.hidden, rng);
  m.proj_w = Tensor::param(2 * dims.hidden, dims.embed, 2 * dims.hidden, rng);
  m.proj_b = Tensor::zeros(1, dims.embed, true);
  m.d_w = Tensor::param(dims.embed, 1, dims.embed, rng);
  m.d_b = Tensor::zeros(1, 1, true);
  m.c_w = Tensor::param(dims.embed, 1, dims.embed, rng);
  m.c_b = Tensor::zeros(1, 1, true);
  return m;
}

Seq2SeqModel Seq2SeqModel::create_shared_embedding(const ModelDims& dims,
                                                   const Tensor& embedding,
                                                   Rng& rng) {
  Seq2SeqModel m = create(dims, ModelRole::kDiscriminator, rng);
  m.embedding = embedding;
  return m;
}

std::vector<std::pair<std::string, Tensor>> Seq2SeqModel::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embedding", embedding);
  if (role == ModelRole::kGenerator) out.emplace_back("out_bias", out_bias);
  encoder.named_params("enc", out);
  decoder.named_params("dec", out);
  out.emplace_back("attn_w", attn_w);
  out.emplace_back("proj_w", proj_w);
  out.emplace_back("proj_b", proj_b);
  if (role == ModelRole::kDiscriminator) {
    out.emplace_back("d_w", d_w);
    out.emplace_back("d_b", d_b);
    out.emplace_back("c_w", c_w);
    out.emplace_back("c_b", c_b);
  }
  return out;
}

std::vector<Tensor> Seq2SeqModel::params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<Tensor> Seq2SeqModel::trunk_params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params())
    if (name != "embedding") out.push_back(t);
  return out;
}

void copy_decoder_weights_to_encoder(Seq2SeqModel& model) {
  for (int l = 0; l < model.decoder.num_layers(); ++l) {
    const auto& src = model.decoder.layers()[l];
    auto& dst = model.encoder.layers()[l];
    std::copy(src.wx.values().begin(), src.wx.values().end(),
              dst.wx.values().begin());
    std::copy(src.wh.values().begin(), src.wh.values().end(),
              dst.wh.values().begin());
    std::copy(src.b.values().begin(), src.b.values().end(),
              dst.b.values().begin());
  }
}

MaskedBatch make_masked_batch(const Batch& batch, double rate,
                              MaskRegime regime, Rng& rng) {
  std::vector<Mask> masks;
  for (int b = 0; b < batch.size(); ++b) {
    int valid = batch.valid_len[b];
    Mask m = regime == MaskRegime::kContiguous
                 ? contiguous_mask(valid, rate, rng.raw())
                 : bernoulli_mask(valid, rate, rng.raw());
    m.bits.resize(batch.max_len, 1);  // padding is never masked
    masks.push_back(std::move(m));
  }
  return masked_batch_from(batch, masks);
}

MaskedBatch masked_batch_from(const Batch& batch,
                              const std::vector<Mask>& masks) {
  if (masks.size() != static_cast<size_t>(batch.size()))
    throw std::invalid_argument("masked_batch: one mask per row required");
  MaskedBatch out;
  out.batch = batch;
  out.masks = masks;
  for (int b = 0; b < batch.size(); ++b) {
    MaskedSeq ms = apply_mask(batch.rows[b], masks[b]);
    out.masked.push_back(std::move(ms.masked));
  }
  return out;
}

std::vector<Tensor> encode_context(const Seq2SeqModel& model,
                                   const MaskedBatch& input,
                                   const ForwardOptions& opt) {
  LstmState state = model.encoder.initial_state(input.batch.size());
  std::vector<Tensor> states;
  for (int t = 0; t < input.batch.max_len; ++t) {
    Tensor x = embedding_lookup(model.embedding, column_of(input.masked, t));
    states.push_back(model.encoder.step(x, state, opt.dropout, opt.rng,
                                        opt.training));
  }
  return states;
}

Tensor decoder_features(const Seq2SeqModel& model,
                        const std::vector<int>& prev_ids, DecoderState& state,
                        const std::vector<Tensor>& enc_states,
                        const std::vector<int>& enc_valid_len,
                        const ForwardOptions& opt, Tensor* attn_out) {
  Tensor x = embedding_lookup(model.embedding, prev_ids);
  Tensor h =
      model.decoder.step(x, state.lstm, opt.dropout, opt.rng, opt.training);
  Tensor q = matmul(h, model.attn_w);
  int batch = h.rows();
  std::vector<Tensor> score_cols;
  for (size_t s = 0; s < enc_states.size(); ++s) {
    Tensor score = row_sum(mul(q, enc_states[s]));
    // Keep attention off padded positions.
    Tensor penalty = Tensor::zeros(batch, 1);
    bool any = false;
    for (int b = 0; b < batch; ++b)
      if (static_cast<int>(s) >= enc_valid_len[b]) {
        penalty.at(b, 0) = -1e9;
        any = true;
      }
    score_cols.push_back(any ? add(score, penalty) : score);
  }
  Tensor alpha = softmax_rows(concat_cols(score_cols));
  if (attn_out) *attn_out = alpha;
  Tensor ctx;
  for (size_t s = 0; s < enc_states.size(); ++s) {
    Tensor term = scale_rows(enc_states[s],
                             slice_cols(alpha, static_cast<int>(s),
                                        static_cast<int>(s) + 1));
    ctx = s == 0 ? term : add(ctx, term);
  }
  return tanh_t(
      add_bias(matmul(concat_cols({h, ctx}), model.proj_w), model.proj_b));
}

Tensor vocab_logits(const Seq2SeqModel& model, const Tensor& features) {
  return add_bias(matmul_nt(features, model.embedding), model.out_bias);
}

Tensor disc_score_head(const Seq2SeqModel& model, const Tensor& features) {
  return clamp(sigmoid(add_bias(matmul(features, model.d_w), model.d_b)),
               1e-7, 1.0 - 1e-7);
}

Tensor critic_value_head(const Seq2SeqModel& model, const Tensor& features) {
  return add_bias(matmul(features, model.c_w), model.c_b);
}

Tensor lm_step(const Seq2SeqModel& model, const std::vector<int>& prev_ids,
               LstmState& state, const ForwardOptions& opt) {
  Tensor x = embedding_lookup(model.embedding, prev_ids);
  Tensor h = model.decoder.step(x, state, opt.dropout, opt.rng, opt.training);
  return add_bias(matmul_nt(h, model.embedding), model.out_bias);
}

RolloutBatch generator_fill(const Seq2SeqModel& model, const MaskedBatch& input,
                            FillMode mode, Rng& rng,
                            const std::vector<TokenSeq>* teacher,
                            const ForwardOptions& opt, bool record_dists) {
  int B = input.batch.size();
  int T = input.batch.max_len;
  if (mode == FillMode::kTeacher) {
    if (!teacher || static_cast<int>(teacher->size()) != B)
      throw std::invalid_argument("generator_fill: teacher rows required");
    for (const auto& row : *teacher)
      if (static_cast<int>(row.size()) != T)
        throw std::invalid_argument("generator_fill: teacher length mismatch");
  }
  RolloutBatch out;
  out.input = input;
  out.composite = input.batch.rows;  // real tokens everywhere to start
  out.scope.assign(B, std::vector<double>(T, 0.0));

  std::vector<Tensor> enc = encode_context(model, input, opt);
  DecoderState state{model.decoder.initial_state(B)};
  std::vector<int> prev(B, kPadId);  // start-of-decode token
  for (int t = 0; t < T; ++t) {
    Tensor feat = decoder_features(model, prev, state, enc,
                                   input.batch.valid_len, opt);
    Tensor logp = log_softmax_rows(vocab_logits(model, feat));
    if (record_dists) {
      int V = model.dims.vocab;
      std::vector<std::vector<double>> dist(B, std::vector<double>(V));
      for (int b = 0; b < B; ++b)
        for (int v = 0; v < V; ++v) dist[b][v] = std::exp(logp.at(b, v));
      out.dists.push_back(std::move(dist));
    }
    std::vector<int> chosen(B);
    for (int b = 0; b < B; ++b) {
      bool in_scope = t < input.batch.valid_len[b] && input.masks[b].bits[t] == 0;
      if (!in_scope) {
        chosen[b] = input.batch.rows[b][t];
      } else if (mode == FillMode::kTeacher) {
        chosen[b] = (*teacher)[b][t];
      } else {
        int V = model.dims.vocab;
        std::vector<bool> banned(V, false);
        for (int id : opt.ban_sample_ids)
          if (id >= 0 && id < V) banned[id] = true;
        if (mode == FillMode::kGreedy) {
          int best = -1;
          for (int v = 0; v < V; ++v) {
            if (banned[v]) continue;
            if (best < 0 || logp.at(b, v) > logp.at(b, best)) best = v;
          }
          chosen[b] = best;
        } else {
          std::vector<double> probs(V);
          double total = 0.0;
          for (int v = 0; v < V; ++v) {
            probs[v] = banned[v] ? 0.0 : std::exp(logp.at(b, v));
            total += probs[v];
          }
          for (auto& p : probs) p /= total;
          chosen[b] = rng.categorical(probs);
        }
      }
      if (in_scope) {
        out.scope[b][t] = 1.0;
        out.composite[b][t] = chosen[b];
      }
    }
    out.step_logps.push_back(gather_cols(logp, chosen));
    prev = chosen;
  }
  return out;
}

std::vector<TokenSeq> sample_unconditional(const Seq2SeqModel& model, int n,
                                           int len, Rng& rng,
                                           int batch_size) {
  std::vector<TokenSeq> out;
  while (static_cast<int>(out.size()) < n) {
    int b = std::min(batch_size, n - static_cast<int>(out.size()));
    Batch batch;
    batch.rows.assign(b, TokenSeq(len, kPadId));
    batch.valid_len.assign(b, len);
    batch.max_len = len;
    std::vector<Mask> masks(b, Mask{std::vector<uint8_t>(len, 0)});
    MaskedBatch mb = masked_batch_from(batch, masks);
    // Samples are scored by the frozen LM and the n-gram metrics downstream,
    // so the non-content placeholders are excluded.
    ForwardOptions opt;
    opt.ban_sample_ids = {kPadId, kMaskId};
    RolloutBatch ro = generator_fill(model, mb, FillMode::kSample, rng,
                                     nullptr, opt);
    for (auto& row : ro.composite) out.push_back(std::move(row));
  }
  return out;
}

DiscOutput discriminator_forward(const Seq2SeqModel& model,
                                 const std::vector<TokenSeq>& composite,
                                 const MaskedBatch& context,
                                 const ForwardOptions& opt) {
  int B = context.batch.size();
  int T = context.batch.max_len;
  if (static_cast<int>(composite.size()) != B)
    throw std::invalid_argument("discriminator: batch size mismatch");
  for (const auto& row : composite)
    if (static_cast<int>(row.size()) != T)
      throw std::invalid_argument("discriminator: length mismatch");
  std::vector<Tensor> enc = encode_context(model, context, opt);
  DecoderState state{model.decoder.initial_state(B)};
  DiscOutput out;
  Tensor feat = decoder_features(model, std::vector<int>(B, kPadId), state,
                                 enc, context.batch.valid_len, opt);
  for (int t = 0; t < T; ++t) {
    out.values.push_back(critic_value_head(model, feat));
    feat = decoder_features(model, column_of(composite, t), state, enc,
                            context.batch.valid_len, opt);
    out.scores.push_back(disc_score_head(model, feat));
  }
  return out;
}

}  // namespace maskgan
