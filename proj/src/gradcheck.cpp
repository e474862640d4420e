#include "gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "models.hpp"
#include "training.hpp"

namespace maskgan {

namespace {

Tensor rand_tensor(int rows, int cols, Rng& rng, double lo = -1.0,
                   double hi = 1.0, bool requires_grad = true) {
  Tensor t = Tensor::zeros(rows, cols, requires_grad);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Project the op output to a scalar with fixed random weights so every
// output element contributes a distinct gradient.
Tensor weighted(const Tensor& out, const Tensor& w) {
  return sum(mul(out, w));
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng rng(seed);
  auto check = [&](const std::string& name, const std::function<Tensor()>& f,
                   std::vector<Tensor> params) {
    results.push_back({name, grad_check(f, std::move(params))});
  };

  {
    Tensor a = rand_tensor(3, 4, rng), b = rand_tensor(4, 5, rng);
    Tensor w = rand_tensor(3, 5, rng, -1, 1, false);
    check("matmul", [&] { return weighted(matmul(a, b), w); }, {a, b});
  }
  {
    Tensor a = rand_tensor(3, 4, rng), b = rand_tensor(5, 4, rng);
    Tensor w = rand_tensor(3, 5, rng, -1, 1, false);
    check("matmul_nt", [&] { return weighted(matmul_nt(a, b), w); }, {a, b});
  }
  {
    Tensor a = rand_tensor(4, 3, rng), b = rand_tensor(4, 3, rng);
    Tensor w = rand_tensor(4, 3, rng, -1, 1, false);
    check("add", [&] { return weighted(add(a, b), w); }, {a, b});
    check("sub", [&] { return weighted(sub(a, b), w); }, {a, b});
    check("mul", [&] { return weighted(mul(a, b), w); }, {a, b});
  }
  {
    Tensor a = rand_tensor(4, 3, rng);
    Tensor w = rand_tensor(4, 3, rng, -1, 1, false);
    check("scale", [&] { return weighted(scale(a, -1.7), w); }, {a});
    check("add_scalar", [&] { return weighted(add_scalar(a, 0.3), w); }, {a});
    check("sigmoid", [&] { return weighted(sigmoid(a), w); }, {a});
    check("tanh", [&] { return weighted(tanh_t(a), w); }, {a});
    check("exp", [&] { return weighted(exp_t(a), w); }, {a});
    check("softmax_rows", [&] { return weighted(softmax_rows(a), w); }, {a});
    check("log_softmax_rows",
          [&] { return weighted(log_softmax_rows(a), w); }, {a});
    check("sum", [&] { return sum(a); }, {a});
    check("mean", [&] { return mean(a); }, {a});
  }
  {
    // keep values away from the relu kink and clamp edges
    Tensor a = rand_tensor(4, 3, rng, 0.1, 2.0);
    Tensor w = rand_tensor(4, 3, rng, -1, 1, false);
    check("relu", [&] { return weighted(relu(a), w); }, {a});
    check("log", [&] { return weighted(log_t(a), w); }, {a});
    check("clamp", [&] { return weighted(clamp(a, 0.5, 1.5), w); }, {a});
  }
  {
    Tensor a = rand_tensor(4, 6, rng);
    Tensor bias = rand_tensor(1, 6, rng);
    Tensor col = rand_tensor(4, 1, rng);
    Tensor w = rand_tensor(4, 6, rng, -1, 1, false);
    Tensor w2 = rand_tensor(4, 3, rng, -1, 1, false);
    check("add_bias", [&] { return weighted(add_bias(a, bias), w); },
          {a, bias});
    check("scale_rows", [&] { return weighted(scale_rows(a, col), w); },
          {a, col});
    check("slice_cols",
          [&] { return weighted(slice_cols(a, 2, 5), w2); }, {a});
  }
  {
    Tensor a = rand_tensor(4, 2, rng), b = rand_tensor(4, 3, rng);
    Tensor w = rand_tensor(4, 5, rng, -1, 1, false);
    check("concat_cols", [&] { return weighted(concat_cols({a, b}), w); },
          {a, b});
  }
  {
    Tensor table = rand_tensor(6, 3, rng);
    std::vector<int> ids{1, 4, 4, 0};
    Tensor w = rand_tensor(4, 3, rng, -1, 1, false);
    check("embedding_lookup",
          [&] { return weighted(embedding_lookup(table, ids), w); }, {table});
  }
  {
    Tensor a = rand_tensor(5, 4, rng);
    Tensor w = rand_tensor(5, 4, rng, -1, 1, false);
    check("dropout",
          [&] {
            Rng drop_rng(99);  // same mask on every evaluation
            return weighted(dropout(a, 0.4, drop_rng, true), w);
          },
          {a});
  }
  {
    Tensor a = rand_tensor(4, 5, rng);
    std::vector<int> idx{2, 0, 4, 1};
    Tensor w = rand_tensor(4, 1, rng, -1, 1, false);
    check("gather_cols", [&] { return weighted(gather_cols(a, idx), w); },
          {a});
  }

  // Composed losses over the full models.
  ModelDims dims{7, 6, 6, 2};
  Rng model_rng(seed + 1);
  Seq2SeqModel gen = Seq2SeqModel::create(dims, ModelRole::kGenerator,
                                          model_rng);
  Seq2SeqModel disc = Seq2SeqModel::create(dims, ModelRole::kDiscriminator,
                                           model_rng);
  Batch batch;
  batch.rows = {{4, 5, 6}, {6, 4, 5}};
  batch.valid_len = {3, 3};
  batch.max_len = 3;
  std::vector<Mask> masks{Mask::from_string("101"), Mask::from_string("010")};
  MaskedBatch mb = masked_batch_from(batch, masks);
  Rng fill_rng(3);

  check("generator_ce_loss",
        [&] {
          RolloutBatch ro = generator_fill(gen, mb, FillMode::kTeacher,
                                           fill_rng, &batch.rows);
          Tensor total;
          long count = 0;
          for (int t = 0; t < ro.steps(); ++t) {
            std::vector<double> w(ro.batch());
            for (int b = 0; b < ro.batch(); ++b) {
              w[b] = ro.scope[b][t];
              if (w[b] > 0) ++count;
            }
            Tensor term = sum(scale_rows(
                ro.step_logps[t],
                Tensor::from(ro.batch(), 1, w)));
            total = t == 0 ? term : add(total, term);
          }
          return scale(total, -1.0 / static_cast<double>(count));
        },
        gen.params());

  std::vector<TokenSeq> fake_rows = {{4, 6, 6}, {5, 5, 5}};
  RolloutBatch fake;
  fake.input = mb;
  fake.composite = fake_rows;
  // scope is the complement of the mask bits
  fake.scope = {{0, 1, 0}, {1, 0, 1}};
  fake.returns = {{0.0, -0.4, 0.0}, {-0.8, 0.0, -0.2}};

  check("discriminator_bce_loss",
        [&] { return discriminator_loss_tensor(disc, mb, fake); },
        disc.params());

  check("critic_mse_loss", [&] { return critic_loss_tensor(disc, fake); },
        disc.params());

  return results;
}

double gradcheck_worst(const std::vector<GradCheckResult>& results) {
  double worst = 0.0;
  for (const auto& r : results) worst = std::max(worst, r.max_rel_err);
  return worst;
}

std::string gradcheck_report(const std::vector<GradCheckResult>& results) {
  std::ostringstream out;
  for (const auto& r : results)
    out << (r.max_rel_err < 1e-4 ? "PASS " : "FAIL ") << r.name
        << "  max_rel_err=" << r.max_rel_err << '\n';
  out << "worst: " << gradcheck_worst(results) << '\n';
  return out.str();
}

}  // namespace maskgan
