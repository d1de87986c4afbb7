#include <cmath>
#include <numeric>

#include "c2sw/error.hpp"
#include "c2sw/training.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/toy.hpp"

using namespace c2sw;

namespace {

struct ToyTask {
  Vocabulary vocab = toy::vocabulary(50, 1);
  EmbeddingTable table = toy::table(50, 16, 101);
  CharAlphabet alphabet = CharAlphabet::from_vocabulary(vocab);

  Char2Subword model(std::uint64_t seed = 1) const {
    return Char2Subword::initialize(toy::small_config(), alphabet, seed);
  }
};

TrainConfig quick_config(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = 4;
  c.batch_size = 8;
  c.adam.step = 3e-3;
  return c;
}

std::vector<CharSequence> sequences_for(const ToyTask& task, std::span<const TokenId> ids) {
  std::vector<CharSequence> seqs;
  for (TokenId id : ids) seqs.push_back(char_sequence(task.vocab.token(id), false, task.alphabet));
  return seqs;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("Adam first step moves each parameter by about the step size") {
    const ToyTask task;
    const Char2Subword m = task.model();
    Char2SubwordParams params = m.params();
    ParamGrads g = zero_params(m.config(), m.alphabet().size());
    g.w_e(0, 0) = 0.5;
    g.w_e(1, 0) = -2e-3;
    g.b_e(0, 3) = 7.0;
    AdamConfig cfg;
    cfg.step = 0.01;
    Adam adam(cfg, params);
    adam.update(params, g);
    CHECK(adam.steps() == 1);
    // First bias-corrected step is step * g / (|g| + eps).
    auto expected = [&](double before, double grad) {
      return before - cfg.step * grad / (std::abs(grad) + cfg.eps);
    };
    CHECK(params.w_e(0, 0) == doctest::Approx(expected(m.params().w_e(0, 0), 0.5)).epsilon(1e-14));
    CHECK(params.w_e(1, 0) == doctest::Approx(expected(m.params().w_e(1, 0), -2e-3)).epsilon(1e-14));
    CHECK(params.b_e(0, 3) == doctest::Approx(expected(0.0, 7.0)).epsilon(1e-14));
    CHECK(params.w_e(2, 2) == m.params().w_e(2, 2));

    // Second step with the same gradient: m_hat = g, v_hat = g^2 again.
    adam.update(params, g);
    CHECK(params.b_e(0, 3) == doctest::Approx(2.0 * expected(0.0, 7.0)).epsilon(1e-12));
  }

  TEST_CASE("clip_gradient_norm") {
    const ToyTask task;
    ParamGrads g = zero_params(toy::small_config(), task.alphabet.size());
    g.w_e(0, 0) = 3.0;
    g.b_e(0, 0) = 4.0;
    ParamGrads same = g;
    clip_gradient_norm(same, 10.0);
    CHECK(same == g);
    clip_gradient_norm(g, 1.0);
    CHECK(g.w_e(0, 0) == doctest::Approx(0.6));
    CHECK(g.b_e(0, 0) == doctest::Approx(0.8));
  }

  TEST_CASE("zero epochs returns the parameters unchanged") {
    const ToyTask task;
    const Char2Subword m = task.model();
    const SimulationResult r = train_simulation(m, task.vocab, task.table, quick_config(0));
    CHECK(r.log.empty());
    CHECK(r.model.params() == m.params());
  }

  TEST_CASE("training is deterministic and never writes the table") {
    const ToyTask task;
    const auto before = task.table.checksum();
    TrainConfig c = quick_config(3);
    c.noise = toy::full_noise(0.5);
    const CharAlphabet alphabet =
        CharAlphabet::from_vocabulary(task.vocab, noise_characters(U"", c.noise));
    const Char2Subword m = Char2Subword::initialize(toy::small_config(), alphabet, 1);
    const SimulationResult a = train_simulation(m, task.vocab, task.table, c);
    const SimulationResult b = train_simulation(m, task.vocab, task.table, c);
    CHECK(metrics_to_jsonl(a.log, false) == metrics_to_jsonl(b.log, false));
    CHECK(a.model.params() == b.model.params());
    c.seed = 5;
    const SimulationResult other = train_simulation(m, task.vocab, task.table, c);
    CHECK(!(other.model.params() == a.model.params()));
    CHECK(task.table.checksum() == before);
  }

  TEST_CASE("loss at epoch 50 is below epoch 1 with default hyperparameters") {
    const ToyTask task;
    TrainConfig c;
    c.epochs = 50;
    c.evaluate_each_epoch = false;
    const SimulationResult r = train_simulation(task.model(), task.vocab, task.table, c);
    REQUIRE(r.log.size() == 50);
    MESSAGE("epoch 1 " << r.log.front().loss.total << ", epoch 50 " << r.log.back().loss.total);
    CHECK(r.log.back().loss.total < r.log.front().loss.total);
  }

  TEST_CASE("gradient accumulation matches one large batch") {
    const ToyTask task;
    TrainConfig big = quick_config(2);
    big.batch_size = 16;
    TrainConfig split = big;
    split.batch_size = 4;
    split.accumulation = 4;
    const auto a = train_simulation(task.model(), task.vocab, task.table, big);
    const auto b = train_simulation(task.model(), task.vocab, task.table, split);
    CHECK(a.model.params() == b.model.params());
  }

  TEST_CASE("train_simulation errors") {
    const ToyTask task;
    TrainConfig c = quick_config(1);
    CHECK_THROWS_AS(train_simulation(task.model(), task.vocab, toy::table(50, 12, 1), c), Error);
    CHECK_THROWS_AS(train_simulation(task.model(), task.vocab, toy::table(49, 16, 1), c), Error);
    c.batch_size = 0;
    CHECK_THROWS_AS(train_simulation(task.model(), task.vocab, task.table, c), Error);
    c = quick_config(1);
    c.adam.step = 0.0;
    CHECK_THROWS_AS(train_simulation(task.model(), task.vocab, task.table, c), Error);

    // Rows near the double range overflow the squared distance.
    Matrix huge = toy::gaussian_matrix(50, 16, 3);
    for (double& x : huge.data()) x *= 1e200;
    try {
      train_simulation(task.model(), task.vocab, EmbeddingTable(huge), quick_config(1));
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
  }

  TEST_CASE("metrics_to_jsonl") {
    EpochMetrics m;
    m.epoch = 3;
    m.loss = {0.25, 1.5, 0.5, 0.125, 2.375};
    m.accuracy = 0.5;
    m.prec_at_1 = 0.75;
    m.prec_at_k = 0.625;
    m.eval_k = 15;
    m.wall_time_s = 1.25;
    const std::vector<EpochMetrics> log{m};
    const std::string line = metrics_to_jsonl(log, false);
    CHECK(line.back() == '\n');
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec["epoch"] == 3);
    CHECK(rec["loss"] == 2.375);
    CHECK(rec["loss_nbr"] == 0.125);
    CHECK(rec["prec@15"] == 0.625);
    CHECK(!rec.contains("wall_time_s"));
    CHECK(nlohmann::json::parse(metrics_to_jsonl(log, true))["wall_time_s"] == 1.25);
  }

  TEST_CASE("masking plan contract") {
    const ToyTask task;
    const std::vector<TokenId> ids = task.vocab.regular_ids();
    const auto seqs = sequences_for(task, ids);
    Rng rng(3);
    MaskingConfig none;
    none.select_prob = 0.0;
    CHECK(make_masking_plan(ids, seqs, task.alphabet, rng, none).tokens.empty());

    MaskingConfig keep_all{1.0, 0.0, 0.0};
    const MaskingPlan kept = make_masking_plan(ids, seqs, task.alphabet, rng, keep_all);
    REQUIRE(kept.tokens.size() == ids.size());
    for (const auto& t : kept.tokens) {
      CHECK(t.masked_chars == seqs[t.position].chars);
      CHECK(t.target == ids[t.position]);
    }

    MaskingConfig all{1.0, 0.8, 0.1};
    const MaskingPlan plan = make_masking_plan(ids, seqs, task.alphabet, rng, all);
    for (const auto& t : plan.tokens) {
      REQUIRE(t.actions.size() == seqs[t.position].chars.size());
      for (std::size_t c = 0; c < t.actions.size(); ++c) {
        const int original = seqs[t.position].chars[c];
        const int now = t.masked_chars[c];
        switch (t.actions[c]) {
          case CharAction::kMask: CHECK(now == CharAlphabet::kMaskChar); break;
          case CharAction::kKeep: CHECK(now == original); break;
          case CharAction::kRandomize:
            CHECK(now != original);
            CHECK(now >= CharAlphabet::kFirstOrdinary);
            CHECK(now < static_cast<int>(task.alphabet.size()));
            break;
        }
      }
    }
    CHECK_THROWS_AS(make_masking_plan(ids, std::span(seqs).first(3), task.alphabet, rng), Error);
    CHECK_THROWS_AS(make_masking_plan(ids, seqs, task.alphabet, rng, {0.15, 0.8, 0.3}), Error);
  }

  TEST_CASE("masking statistics over 100,000 tokens") {
    const ToyTask task;
    const std::vector<TokenId> regular = task.vocab.regular_ids();
    Rng pick(8);
    std::vector<TokenId> ids(100000);
    for (auto& id : ids) id = regular[pick() % regular.size()];
    const auto seqs = sequences_for(task, ids);
    Rng rng(12);
    const MaskingPlan plan = make_masking_plan(ids, seqs, task.alphabet, rng);
    std::array<std::size_t, 3> actions{};
    for (const auto& t : plan.tokens) {
      for (CharAction a : t.actions) actions[static_cast<int>(a)]++;
    }
    const double total = static_cast<double>(actions[0] + actions[1] + actions[2]);
    const double selected = static_cast<double>(plan.tokens.size()) / ids.size();
    MESSAGE("selected " << selected << ", mask " << actions[0] / total << ", random "
                        << actions[1] / total << ", keep " << actions[2] / total);
    CHECK(std::abs(selected - 0.15) <= 0.005);
    CHECK(std::abs(actions[0] / total - 0.8) <= 0.01);
    CHECK(std::abs(actions[1] / total - 0.1) <= 0.01);
    CHECK(std::abs(actions[2] / total - 0.1) <= 0.01);
  }

  TEST_CASE("plans are resampled on every call") {
    const ToyTask task;
    const std::vector<TokenId> regular = task.vocab.regular_ids();
    std::vector<TokenId> ids(1000);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = regular[i % regular.size()];
    const auto seqs = sequences_for(task, ids);
    Rng rng(1);
    const MaskingPlan first = make_masking_plan(ids, seqs, task.alphabet, rng);
    const MaskingPlan second = make_masking_plan(ids, seqs, task.alphabet, rng);
    auto positions = [](const MaskingPlan& p) {
      std::vector<std::size_t> out;
      for (const auto& t : p.tokens) out.push_back(t.position);
      return out;
    };
    CHECK(positions(first) != positions(second));
  }

  TEST_CASE("mlm_step") {
    const ToyTask task;
    const Char2Subword m = task.model();
    const MlmStep empty = mlm_step(m.config(), m.params(), {}, {}, task.table);
    CHECK(empty.loss == 0.0);
    CHECK(empty.grads == zero_params(m.config(), m.alphabet().size()));

    const std::vector<TokenId> ids = task.vocab.regular_ids();
    const auto seqs = sequences_for(task, ids);
    Rng rng(2);
    const MaskingPlan plan = make_masking_plan(ids, seqs, task.alphabet, rng, {1.0, 0.8, 0.1});
    std::vector<std::vector<int>> masked;
    std::vector<TokenId> targets;
    for (const auto& t : plan.tokens) {
      masked.push_back(t.masked_chars);
      targets.push_back(t.target);
    }
    // Logits are only near-uniform when rows are small next to the unit-gain
    // output (norm sqrt(d)); word embedding tables have entries around 0.05.
    Matrix small = toy::gaussian_matrix(50, 16, 101, 0.05);
    const EmbeddingTable realistic(small);
    const MlmStep step = mlm_step(m.config(), m.params(), masked, targets, realistic);
    MESSAGE("loss at init " << step.loss << ", ln 50 = " << std::log(50.0));
    CHECK(std::abs(step.loss - std::log(50.0)) <= 0.5);
    CHECK_THROWS_AS(mlm_step(m.config(), m.params(), masked, std::span(targets).first(2), task.table),
                    Error);
  }

  TEST_CASE("mlm_step gradient matches finite differences") {
    const ToyTask task;
    const Char2Subword m = task.model(7);
    const std::vector<TokenId> ids = task.vocab.regular_ids();
    const auto seqs = sequences_for(task, ids);
    Rng rng(5);
    const MaskingPlan plan = make_masking_plan(std::span(ids).first(12), std::span(seqs).first(12),
                                               task.alphabet, rng, {1.0, 0.5, 0.25});
    std::vector<std::vector<int>> masked;
    std::vector<TokenId> targets;
    for (const auto& t : plan.tokens) {
      masked.push_back(t.masked_chars);
      targets.push_back(t.target);
    }
    const MlmStep step = mlm_step(m.config(), m.params(), masked, targets, task.table);
    const Vector theta = m.params().flatten();
    Char2SubwordParams probe = m.params();
    auto f = [&](std::span<const double> x) {
      probe.assign(x);
      return mlm_step(m.config(), probe, masked, targets, task.table).loss;
    };
    const double err = max_relative_error(step.grads.flatten(), finite_diff_gradient(f, theta, 1e-5));
    MESSAGE("max relative error " << err);
    CHECK(err < 1e-4);
  }

  TEST_CASE("pretrain_mlm") {
    const ToyTask task;
    const auto before = task.table.checksum();
    const std::vector<std::string> sentences = {task.vocab.token(7) + " " + task.vocab.token(9) +
                                                " " + task.vocab.token(12)};
    const Corpus corpus = corpus_to_ids(sentences, task.vocab);
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0] == std::vector<TokenId>{7, 9, 12});

    // Every token selected and kept: a fixed objective, so the loss should fall.
    PretrainConfig c;
    c.epochs = 60;
    c.masking = {1.0, 0.0, 0.0};
    c.adam.step = 1e-3;
    const PretrainResult r = pretrain_mlm(task.model(), corpus, task.vocab, task.table, c);
    REQUIRE(r.epoch_losses.size() == 60);
    for (std::size_t i = 1; i < r.epoch_losses.size(); ++i) {
      CAPTURE(i);
      CHECK(r.epoch_losses[i] <= r.epoch_losses[i - 1] + 1e-6);
    }
    CHECK(r.epoch_losses.back() < r.epoch_losses.front());
    CHECK(task.table.checksum() == before);

    PretrainConfig dyn;
    dyn.epochs = 3;
    dyn.seed = 9;
    const Corpus many = corpus_to_ids(std::vector<std::string>(20, sentences[0]), task.vocab);
    const PretrainResult x = pretrain_mlm(task.model(), many, task.vocab, task.table, dyn);
    const PretrainResult y = pretrain_mlm(task.model(), many, task.vocab, task.table, dyn);
    CHECK(x.epoch_losses == y.epoch_losses);
    CHECK(x.model.params() == y.model.params());
    CHECK_THROWS_AS(pretrain_mlm(task.model(), {}, task.vocab, task.table, dyn), Error);
    CHECK(corpus_to_ids(std::vector<std::string>{"", "   "}, task.vocab).empty());
  }
}
