#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "data.hpp"
#include "error.hpp"
#include "infer.hpp"
#include "optim.hpp"
#include "rng.hpp"

using namespace ftsqa;

TEST_CASE("average_pool") {
  std::vector<Tensor> one = {Tensor::of({1, -2})};
  Tensor p = average_pool(one);
  CHECK(p.v[0] == 1.0);
  CHECK(p.v[1] == -2.0);

  std::vector<Tensor> constant(4, Tensor::of({0.5, 0.25}));
  p = average_pool(constant);
  CHECK(p.v[0] == 0.5);
  CHECK(p.v[1] == 0.25);

  std::vector<Tensor> two = {Tensor::of({1, 2}), Tensor::of({3, 4})};
  p = average_pool(two);
  CHECK(p.v[0] == 2.0);
  CHECK(p.v[1] == 3.0);

  CHECK_THROWS_AS(average_pool(std::vector<Tensor>{}), Error);
}

TEST_CASE("average_pool is permutation invariant") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tensor> xs;
    const std::size_t T = 2 + rng.below(6);
    for (std::size_t t = 0; t < T; ++t) {
      Tensor x = Tensor::vec(3);
      for (double& q : x.v) q = rng.uniform(-1, 1);
      xs.push_back(std::move(x));
    }
    Tensor base = average_pool(xs);
    std::vector<Tensor> rev(xs.rbegin(), xs.rend());
    Tensor swapped = average_pool(rev);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::fabs(base.v[i] - swapped.v[i]) < 1e-15);
    }
  }
}

TEST_CASE("predict_inner_product") {
  SUBCASE("exact match wins among orthonormal answers") {
    std::vector<std::pair<int, Tensor>> answers = {
        {0, Tensor::of({1, 0, 0})}, {1, Tensor::of({0, 1, 0})}, {2, Tensor::of({0, 0, 1})}};
    CHECK(predict_inner_product(Tensor::of({0, 1, 0}), answers) == 1);
  }
  SUBCASE("ties break to the smallest id") {
    std::vector<std::pair<int, Tensor>> answers = {
        {3, Tensor::of({1, 1})}, {1, Tensor::of({1, 1})}, {2, Tensor::of({1, 1})}};
    CHECK(predict_inner_product(Tensor::of({0.5, 0.5}), answers) == 1);
  }
  SUBCASE("hand-computed scores") {
    std::vector<std::pair<int, Tensor>> answers = {{0, Tensor::of({0.9, 0})},
                                                   {1, Tensor::of({0.5, 2})}};
    CHECK(predict_inner_product(Tensor::of({1, 0}), answers) == 0);
  }
  SUBCASE("positive scaling of the query never changes the argmax") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::pair<int, Tensor>> answers;
      const int C = 2 + static_cast<int>(rng.below(5));
      for (int c = 0; c < C; ++c) {
        Tensor a = Tensor::vec(4);
        for (double& q : a.v) q = rng.uniform(-1, 1);
        answers.emplace_back(c, std::move(a));
      }
      Tensor q = Tensor::vec(4);
      for (double& x : q.v) x = rng.uniform(-1, 1);
      const int base = predict_inner_product(q, answers);
      Tensor scaled = q;
      const double alpha = rng.uniform(0.01, 10.0);
      for (double& x : scaled.v) x *= alpha;
      CHECK(predict_inner_product(scaled, answers) == base);
    }
  }
}

TEST_CASE("top_k_inner_product ranks by score then id") {
  std::vector<std::pair<int, Tensor>> answers = {{0, Tensor::of({1})},
                                                 {1, Tensor::of({3})},
                                                 {2, Tensor::of({2})},
                                                 {3, Tensor::of({3})}};
  std::vector<int> top = top_k_inner_product(Tensor::of({1}), answers, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == 1); // score 3, smaller id first
  CHECK(top[1] == 3);
  CHECK(top[2] == 2);
}

TEST_CASE("train_lr") {
  SUBCASE("symmetric two-class points separate at the origin") {
    std::vector<std::pair<Tensor, int>> examples = {{Tensor::of({1, 0}), 0},
                                                    {Tensor::of({-1, 0}), 1}};
    LRModel m = train_lr(examples, 2, LRConfig{});
    CHECK(predict_lr(m, Tensor::of({1, 0})) == 0);
    CHECK(predict_lr(m, Tensor::of({-1, 0})) == 1);
    CHECK(predict_lr(m, Tensor::of({0.2, 0})) == 0);
    CHECK(predict_lr(m, Tensor::of({-0.2, 0})) == 1);
  }
  SUBCASE("stronger regularization shrinks the weights") {
    Rng rng(10);
    std::vector<std::pair<Tensor, int>> examples;
    for (int i = 0; i < 40; ++i) {
      const int label = static_cast<int>(rng.below(2));
      Tensor x = Tensor::of({rng.uniform(-0.3, 0.3) + (label ? 1.0 : -1.0),
                             rng.uniform(-0.3, 0.3)});
      examples.emplace_back(std::move(x), label);
    }
    double prev_norm = 1e300;
    for (double l2 : {0.001, 0.01, 0.1}) {
      LRConfig cfg;
      cfg.l2 = l2;
      LRModel m = train_lr(examples, 2, cfg);
      const double n = norm2(m.W);
      CHECK(n < prev_norm);
      prev_norm = n;
    }
  }
  SUBCASE("three gaussian blobs reach 95% train accuracy") {
    Rng rng(11);
    std::vector<std::pair<Tensor, int>> examples;
    const double centers[3][2] = {{2, 0}, {-1, 2}, {-1, -2}};
    for (int i = 0; i < 150; ++i) {
      const int label = i % 3;
      // sum of uniforms as a light-tailed noise stand-in
      auto noise = [&]() {
        return (rng.uniform(-1, 1) + rng.uniform(-1, 1) + rng.uniform(-1, 1)) * 0.25;
      };
      Tensor x = Tensor::of({centers[label][0] + noise(), centers[label][1] + noise()});
      examples.emplace_back(std::move(x), label);
    }
    LRModel m = train_lr(examples, 3, LRConfig{});
    int correct = 0;
    for (const auto& [x, y] : examples) correct += predict_lr(m, x) == y;
    CHECK(static_cast<double>(correct) / examples.size() >= 0.95);
  }
  SUBCASE("degenerate single-label input still trains, with a warning") {
    std::vector<std::pair<Tensor, int>> examples = {{Tensor::of({1, 0}), 0},
                                                    {Tensor::of({0.5, 0}), 0}};
    LRModel m = train_lr(examples, 2, LRConfig{});
    CHECK(predict_lr(m, Tensor::of({1, 0})) == 0);
  }
}

TEST_CASE("predict_lr") {
  SUBCASE("zero model ties to class 0") {
    LRModel m;
    m.W = Tensor::mat(3, 2);
    m.b = Tensor::vec(3);
    CHECK(predict_lr(m, Tensor::of({0.4, -0.7})) == 0);
  }
  SUBCASE("dominant bias wins") {
    LRModel m;
    m.W = Tensor::mat(3, 2);
    m.b = Tensor::of({0, 0, 10});
    CHECK(predict_lr(m, Tensor::of({0.4, -0.7})) == 2);
  }
  SUBCASE("hand-computed logits") {
    LRModel m;
    m.W = Tensor::mat(3, 2);
    m.W.at(0, 0) = 1;
    m.W.at(1, 1) = 1;
    m.W.at(2, 0) = -1;
    m.W.at(2, 1) = 2;
    m.b = Tensor::of({0.1, 0, -0.1});
    // logits for (0.3, 0.9): (0.4, 0.9, 1.4)
    CHECK(predict_lr(m, Tensor::of({0.3, 0.9})) == 2);
    std::vector<int> top = top_k_lr(m, Tensor::of({0.3, 0.9}), 5);
    CHECK(top == std::vector<int>{2, 1, 0});
  }
  SUBCASE("dimension mismatch") {
    LRModel m;
    m.W = Tensor::mat(2, 3);
    m.b = Tensor::vec(2);
    CHECK_THROWS_AS(predict_lr(m, Tensor::of({1, 2})), Error);
  }
}

namespace {

struct EvalFixture {
  Dataset data;
  Vocabulary vocab;
  ModelParams model;
};

EvalFixture make_eval_fixture(std::uint64_t seed, bool zero_model = false) {
  EvalFixture fx;
  fx.data = generate_synthetic(4, 3, 2, 2, seed);
  fx.vocab = build_vocabulary(fx.data, UnkPolicy::trainable);
  encode(fx.data, fx.vocab);
  fx.model = ModelParams::zeros(Variant::fts_brnn, OutputMode::affine, 5, 5,
                                static_cast<std::size_t>(fx.vocab.size()));
  if (!zero_model) {
    Rng rng(seed);
    initialize_model(fx.model, fx.vocab, nullptr, rng);
  }
  return fx;
}

} // namespace

TEST_CASE("evaluate") {
  SUBCASE("all-zero model ties every score, scoring 1/C on a balanced set") {
    EvalFixture fx = make_eval_fixture(3, /*zero_model=*/true);
    const double acc = evaluate(fx.model, fx.data, EvalMethod::inner_product, nullptr, 0,
                                fx.vocab.pad_id);
    CHECK(acc == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("deterministic and dataset-order invariant") {
    EvalFixture fx = make_eval_fixture(4);
    const double base = evaluate(fx.model, fx.data, EvalMethod::inner_product, nullptr, 0,
                                 fx.vocab.pad_id);
    Dataset shuffled = fx.data;
    std::reverse(shuffled.questions.begin(), shuffled.questions.end());
    const double perm = evaluate(fx.model, shuffled, EvalMethod::inner_product, nullptr, 0,
                                 fx.vocab.pad_id);
    CHECK(base == perm);
  }
  SUBCASE("a model trained to zero full-time loss evaluates to 1.0") {
    EvalFixture fx = make_eval_fixture(5);
    fx.model.train_embeddings = true;
    HyperParams hp;
    hp.learning_rate = 0.05;
    hp.dropout_rate = 0.0;
    hp.batch_size = 12;
    hp.seed = 5;
    hp.train_embeddings = true;
    Trainer trainer(std::move(fx.model), fx.vocab, LossKind::full_time, LossConfig{}, hp, 0);
    double loss = 1e9;
    for (int epoch = 0; epoch < 400 && loss > 0.0; ++epoch) {
      loss = trainer.train_epoch(fx.data).mean_loss;
    }
    REQUIRE(loss == 0.0); // zero hinge loss implies every step beats every wrong answer
    const double acc = evaluate(trainer.model(), fx.data, EvalMethod::inner_product, nullptr, 0,
                                fx.vocab.pad_id);
    CHECK(acc == 1.0);
  }
  SUBCASE("empty dataset and missing lr model are errors") {
    EvalFixture fx = make_eval_fixture(6);
    Dataset empty;
    empty.answer_set = fx.data.answer_set;
    CHECK_THROWS_AS(
        evaluate(fx.model, empty, EvalMethod::inner_product, nullptr, 0, fx.vocab.pad_id), Error);
    CHECK_THROWS_AS(evaluate(fx.model, fx.data, EvalMethod::lr, nullptr, 0, fx.vocab.pad_id),
                    Error);
  }
}

TEST_CASE("answer representations match the variant rule") {
  SUBCASE("fts-brnn uses the final RNN state") {
    EvalFixture fx = make_eval_fixture(7);
    auto reps = answer_representations(fx.model, fx.data.answer_set, 0, fx.vocab.pad_id);
    REQUIRE(reps.size() == 4);
    for (const auto& [id, rep] : reps) {
      const Answer& a = fx.data.answer_set.answers[id];
      AnswerTrace trace = encode_answer(fx.model, a.token_ids);
      for (std::size_t i = 0; i < rep.v.size(); ++i) CHECK(rep.v[i] == trace.final_state.v[i]);
    }
  }
  SUBCASE("fts-brnn-s pools the shared-encoder outputs") {
    Dataset d = generate_synthetic(3, 2, 2, 2, 8);
    Vocabulary vocab = build_vocabulary(d, UnkPolicy::trainable);
    encode(d, vocab);
    ModelParams m = ModelParams::zeros(Variant::fts_brnn_s, OutputMode::concat, 4, 4,
                                       static_cast<std::size_t>(vocab.size()));
    Rng rng(8);
    m.train_embeddings = true;
    m.for_each_trainable([&](const std::string&, Tensor& t) {
      for (double& x : t.v) x = rng.uniform(-0.5, 0.5);
    });
    const std::size_t T = 5;
    auto reps = answer_representations(m, d.answer_set, T, vocab.pad_id);
    for (const auto& [id, rep] : reps) {
      CHECK(rep.rows == 8); // 2d in concat mode
      QuestionTrace trace =
          encode_answer_shared(m, d.answer_set.answers[id].token_ids, T, vocab.pad_id);
      Tensor pooled = average_pool(trace.outputs);
      for (std::size_t i = 0; i < rep.v.size(); ++i) CHECK(rep.v[i] == pooled.v[i]);
    }
  }
}
