#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracle.hpp"
#include "training.hpp"

using namespace maskgan;

namespace {

MaskedBatch one_row(const TokenSeq& row, const std::string& mask_bits) {
  Batch b;
  b.rows = {row};
  b.valid_len = {static_cast<int>(row.size())};
  b.max_len = static_cast<int>(row.size());
  return masked_batch_from(b, {Mask::from_string(mask_bits)});
}

std::vector<double> snapshot(const std::vector<Tensor>& params) {
  std::vector<double> out;
  for (const auto& p : params)
    out.insert(out.end(), p.values().begin(), p.values().end());
  return out;
}

}  // namespace

TEST_CASE("discounted returns: worked example and edge gammas") {
  auto r = discounted_returns({0.0, -1.0, 2.0}, 0.5);
  CHECK(r[0] == doctest::Approx(0.0));
  CHECK(r[1] == doctest::Approx(0.0));
  CHECK(r[2] == doctest::Approx(2.0));

  auto undiscounted = discounted_returns({1.0, 2.0, 3.0}, 1.0);
  CHECK(undiscounted[0] == doctest::Approx(6.0));
  auto myopic = discounted_returns({1.0, 2.0, 3.0}, 0.0);
  CHECK(myopic[0] == doctest::Approx(1.0));
  CHECK_THROWS(discounted_returns({1.0}, 1.5));
}

TEST_CASE("discounted returns satisfy the recursion against the oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    int T = 1 + rng.uniform_int(12);
    double gamma = rng.uniform();
    std::vector<double> rewards(T);
    for (auto& r : rewards) r = rng.uniform(-2, 2);
    auto fast = discounted_returns(rewards, gamma);
    auto exact = oracle::exact_returns(rewards, gamma);
    for (int t = 0; t < T; ++t) {
      CHECK(std::abs(fast[t] - exact[t]) <= 1e-12);
      double next = t + 1 < T ? fast[t + 1] : 0.0;
      CHECK(fast[t] == doctest::Approx(rewards[t] + gamma * next));
    }
  }
}

TEST_CASE("rewards are log D at in-scope positions only") {
  std::vector<std::vector<double>> scores = {{0.5, 0.25, 0.8}};
  std::vector<Mask> masks = {Mask::from_string("010")};
  std::vector<int> valid{3};

  auto masked_only =
      compute_rewards(scores, masks, RewardScope::kMaskedOnly, valid);
  CHECK(masked_only[0][0] == doctest::Approx(std::log(0.5)));
  CHECK(masked_only[0][1] == 0.0);  // unmasked
  CHECK(masked_only[0][2] == doctest::Approx(std::log(0.8)));

  auto all = compute_rewards(scores, masks, RewardScope::kAllPositions, valid);
  CHECK(all[0][1] == doctest::Approx(std::log(0.25)));

  std::vector<int> short_valid{2};
  auto trunc =
      compute_rewards(scores, masks, RewardScope::kAllPositions, short_valid);
  CHECK(trunc[0][2] == 0.0);

  std::vector<std::vector<double>> bad = {{1.0, 0.5, 0.5}};
  CHECK_THROWS(compute_rewards(bad, masks, RewardScope::kAllPositions, valid));
}

TEST_CASE("discriminator loss is log 2 for an uninformative scorer") {
  Rng rng(41);
  ModelDims dims{7, 6, 6, 1};
  Seq2SeqModel disc =
      Seq2SeqModel::create(dims, ModelRole::kDiscriminator, rng);
  // zero head weights: sigmoid(0) = 0.5 everywhere
  for (auto& v : disc.d_w.values()) v = 0.0;
  for (auto& v : disc.d_b.values()) v = 0.0;

  MaskedBatch real = one_row({4, 5, 6}, "111");
  RolloutBatch fake;
  fake.input = one_row({4, 5, 6}, "010");
  fake.composite = {{6, 5, 4}};
  fake.scope = {{1, 0, 1}};
  Tensor loss = discriminator_loss_tensor(disc, real, fake);
  CHECK(loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("exact policy gradient is invariant to the baseline") {
  Rng rng(43);
  ModelDims dims{3, 4, 4, 1};
  Seq2SeqModel policy = Seq2SeqModel::create(dims, ModelRole::kGenerator, rng);

  oracle::EnumerableEnv env;
  env.vocab = 3;
  env.horizon = 2;
  env.base = {1, 2};
  env.mask = Mask::from_string("00");
  env.reward.resize(9);
  Rng reward_rng(44);
  for (auto& row : env.reward)
    row = {reward_rng.uniform(-1, 1), reward_rng.uniform(-1, 1)};

  std::vector<double> baseline{0.7, -0.4};
  auto g0 = oracle::exact_policy_gradient(policy, env, 0.9, nullptr);
  auto g1 = oracle::exact_policy_gradient(policy, env, 0.9, &baseline);
  REQUIRE(g0.size() == g1.size());
  for (size_t i = 0; i < g0.size(); ++i)
    CHECK(std::abs(g0[i] - g1[i]) <= 1e-10);
}

TEST_CASE("fill probabilities enumerate to one") {
  Rng rng(45);
  ModelDims dims{3, 4, 4, 1};
  Seq2SeqModel policy = Seq2SeqModel::create(dims, ModelRole::kGenerator, rng);
  oracle::EnumerableEnv env;
  env.vocab = 3;
  env.horizon = 2;
  env.base = {0, 2};
  env.mask = Mask::from_string("01");
  env.reward.assign(3, {0.0, 0.0});
  auto probs = oracle::enumerate_fill_probs(policy, env);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("updates touch only their own parameters") {
  Rng rng(47);
  ModelDims dims{7, 6, 6, 1};
  Seq2SeqModel gen = Seq2SeqModel::create(dims, ModelRole::kGenerator, rng);
  Seq2SeqModel disc =
      Seq2SeqModel::create(dims, ModelRole::kDiscriminator, rng);

  MaskedBatch mb = one_row({4, 5, 6, 4}, "0101");
  Rng fill_rng(48);
  RolloutBatch ro = generator_fill(gen, mb, FillMode::kSample, fill_rng);
  ro.returns = {{0.5, 0.0, -0.5, 0.0}};
  ro.advantages = {{0.5, 0.0, -0.5, 0.0}};

  Adam g_opt(gen.params(), AdamConfig{});
  auto disc_before = snapshot(disc.params());
  auto gen_before = snapshot(gen.params());
  generator_pg_step(gen, ro, g_opt);
  CHECK(snapshot(disc.params()) == disc_before);
  CHECK(snapshot(gen.params()) != gen_before);

  Adam d_opt(disc.params(), AdamConfig{});
  gen_before = snapshot(gen.params());
  discriminator_step(disc, mb, ro, d_opt);
  CHECK(snapshot(gen.params()) == gen_before);

  // the critic update leaves the discriminator scoring head alone
  Adam c_opt(disc.params(), AdamConfig{});  // superset; loss isolates the head
  auto d_head_before = snapshot({disc.d_w, disc.d_b});
  Tensor closs = critic_loss_tensor(disc, ro);
  REQUIRE(closs.defined());
  for (auto& p : disc.params()) p.zero_grad();
  backward(closs);
  double d_head_grad = 0.0;
  for (double g : disc.d_w.grads()) d_head_grad += std::abs(g);
  CHECK(d_head_grad == 0.0);
  CHECK(snapshot({disc.d_w, disc.d_b}) == d_head_before);
}

TEST_CASE("a shared embedding is the one crossover between G and D") {
  Rng rng(49);
  ModelDims dims{7, 6, 6, 1};
  Seq2SeqModel gen = Seq2SeqModel::create(dims, ModelRole::kGenerator, rng);
  Seq2SeqModel disc =
      Seq2SeqModel::create_shared_embedding(dims, gen.embedding, rng);
  MaskedBatch mb = one_row({4, 5, 6, 4}, "0101");
  Rng fill_rng(50);
  RolloutBatch ro = generator_fill(gen, mb, FillMode::kSample, fill_rng);

  Adam d_opt(disc.params(), AdamConfig{});
  auto gen_trunk_before = snapshot(gen.trunk_params());
  auto embedding_before = snapshot({gen.embedding});
  discriminator_step(disc, mb, ro, d_opt);
  CHECK(snapshot(gen.trunk_params()) == gen_trunk_before);
  CHECK(snapshot({gen.embedding}) != embedding_before);  // shared storage
}

TEST_CASE("curriculum advances on plateau and clamps at the corpus length") {
  CurriculumState cur;
  cur.current_len = 4;
  cur.max_len = 5;
  cur.window_size = 3;
  cur.threshold = 0.01;

  // improving: never advances
  CHECK_FALSE(curriculum_advance(cur, 10.0));
  CHECK_FALSE(curriculum_advance(cur, 9.0));
  CHECK_FALSE(curriculum_advance(cur, 8.0));
  CHECK(cur.current_len == 4);

  // plateau: advances once, then clamps
  CurriculumState flat;
  flat.current_len = 4;
  flat.max_len = 5;
  flat.window_size = 3;
  flat.threshold = 0.01;
  CHECK_FALSE(curriculum_advance(flat, 5.0));
  CHECK_FALSE(curriculum_advance(flat, 5.0));
  CHECK(curriculum_advance(flat, 5.0));
  CHECK(flat.current_len == 5);
  CHECK(flat.increments == 1);
  for (int i = 0; i < 6; ++i) curriculum_advance(flat, 5.0);
  CHECK(flat.current_len == 5);  // never exceeds max_len
}

TEST_CASE("full-vocab rewards equal the hand-computed mixture (V = 2)") {
  Rng rng(51);
  ModelDims dims{2, 4, 4, 1};
  Seq2SeqModel disc =
      Seq2SeqModel::create(dims, ModelRole::kDiscriminator, rng);
  TokenSeq original{0, 1};
  Mask mask = Mask::from_string("10");
  MaskedSeq ctx = apply_mask(original, mask);
  TokenSeq composite{0, 1};
  std::vector<std::vector<double>> gen_dist = {{0.5, 0.5}, {0.3, 0.7}};
  std::vector<double> scope{0.0, 1.0};

  auto rewards = full_vocab_rewards(disc, composite, ctx, gen_dist, scope);
  CHECK(rewards[0] == 0.0);  // out of scope

  // recompute the mixture directly
  Batch b;
  b.rows = {original};
  b.valid_len = {2};
  b.max_len = 2;
  MaskedBatch mb = masked_batch_from(b, {mask});
  double expected = 0.0;
  for (int v = 0; v < 2; ++v) {
    TokenSeq variant = composite;
    variant[1] = v;
    DiscOutput out = discriminator_forward(disc, {variant}, mb);
    expected += gen_dist[1][v] * std::log(out.scores[1].at(0, 0));
  }
  CHECK(rewards[1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("full-vocab rewards refuse oversized vocabularies") {
  Rng rng(52);
  ModelDims dims{65, 4, 4, 1};
  Seq2SeqModel disc =
      Seq2SeqModel::create(dims, ModelRole::kDiscriminator, rng);
  MaskedSeq ctx = apply_mask({4, 5}, Mask::from_string("10"));
  CHECK_THROWS(full_vocab_rewards(disc, {4, 5}, ctx,
                                  {{0.0}, {0.0}}, {0.0, 1.0}));
}

TEST_CASE("failure monitors warn without aborting") {
  std::vector<TokenSeq> degenerate(50, TokenSeq{4, 5, 6, 4, 5, 6});
  auto warn = check_mode_collapse(degenerate);
  REQUIRE(warn.has_value());
  CHECK(warn->find("mode collapse") != std::string::npos);

  std::vector<TokenSeq> diverse;
  Rng rng(53);
  for (int i = 0; i < 50; ++i) {
    TokenSeq s(6);
    for (auto& t : s) t = 4 + rng.uniform_int(20);
    diverse.push_back(s);
  }
  CHECK_FALSE(check_mode_collapse(diverse).has_value());

  CHECK(check_divergence(10.0, 50.0).has_value());
  CHECK_FALSE(check_divergence(10.0, 20.0).has_value());
}

TEST_CASE("gan loop: 3 discriminator updates per generator+critic update") {
  Rng rng(54);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 24; ++i) {
    TokenSeq s(4 + rng.uniform_int(3));
    for (auto& t : s) t = 4 + rng.uniform_int(3);
    corpus.push_back(s);
  }
  std::vector<TokenSeq> val(corpus.begin(), corpus.begin() + 4);
  std::vector<TokenSeq> train(corpus.begin() + 4, corpus.end());

  Config cfg;
  cfg.embed = cfg.hidden = 6;
  cfg.layers = 1;
  cfg.batch_size = 4;
  cfg.d_pretrain_steps = 2;
  cfg.gan_iters = 3;
  cfg.d_steps_per_g = 3;
  cfg.dropout = 0.0;

  Rng model_rng(55);
  ModelDims dims = cfg.model_dims(7);
  Seq2SeqModel gen = Seq2SeqModel::create(dims, ModelRole::kGenerator,
                                          model_rng);
  Seq2SeqModel disc =
      Seq2SeqModel::create_shared_embedding(dims, gen.embedding, model_rng);

  int rows_seen = 0;
  GanResult result = gan_train_loop(
      gen, disc, train, val, cfg, nullptr, "",
      [&rows_seen](const IterMetrics&) { ++rows_seen; });

  CHECK(result.counters.d_updates ==
        cfg.d_pretrain_steps + cfg.gan_iters * cfg.d_steps_per_g);
  CHECK(result.counters.g_updates == cfg.gan_iters);
  CHECK(result.counters.critic_updates == cfg.gan_iters);
  CHECK(rows_seen == cfg.gan_iters);
  CHECK(result.history.size() == static_cast<size_t>(cfg.gan_iters));
  CHECK(result.start_val_ppl > 0.0);

  // csv row has the seven documented fields
  CHECK(IterMetrics::csv_header() ==
        "iter,d_loss,g_surrogate,mean_reward,mean_advantage,critic_mse,"
        "sample_ppl");
  std::string row = result.history[0].to_csv_row();
  CHECK(std::count(row.begin(), row.end(), ',') == 6);
}
