#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "loss.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace ftsqa;

TEST_CASE("full_time_loss boundary and trivial values") {
  LossConfig cfg;

  SUBCASE("hinge exactly at zero gives zero value and zero grads") {
    // o=(1,0), correct=(1,0), wrong=(0,0): arg = 1 - 1 + 0 = 0
    std::vector<Tensor> outputs = {Tensor::of({1, 0})};
    std::vector<std::pair<int, Tensor>> wrong = {{1, Tensor::of({0, 0})}};
    LossResult res = full_time_loss(outputs, Tensor::of({1, 0}), wrong, cfg);
    CHECK(res.value == 0.0);
    for (double x : res.grad_outputs[0].v) CHECK(x == 0.0);
    for (double x : res.grad_correct.v) CHECK(x == 0.0);
    for (double x : res.grad_wrong.at(1).v) CHECK(x == 0.0);
  }

  SUBCASE("all-zero outputs give margin * T * |wrong|") {
    std::vector<Tensor> outputs(3, Tensor::of({0, 0}));
    std::vector<std::pair<int, Tensor>> wrong = {{1, Tensor::of({1, 2})},
                                                 {2, Tensor::of({-1, 0})}};
    LossResult res = full_time_loss(outputs, Tensor::of({5, 5}), wrong, cfg);
    CHECK(res.value == doctest::Approx(1.0 * 3 * 2).epsilon(1e-15));
  }

  SUBCASE("frozen hand fixture") {
    std::vector<Tensor> outputs = {Tensor::of({0.5, -0.2}), Tensor::of({-0.1, 0.4})};
    Tensor correct = Tensor::of({0.3, 0.1});
    std::vector<std::pair<int, Tensor>> wrong = {{1, Tensor::of({-0.2, 0.6})},
                                                 {2, Tensor::of({0.8, -0.5})}};
    CHECK(full_time_loss(outputs, correct, wrong, cfg).value ==
          doctest::Approx(3.98).epsilon(1e-14));
    CHECK(pooling_loss(outputs, correct, wrong, cfg).value ==
          doctest::Approx(1.99).epsilon(1e-14));
  }

  SUBCASE("empty wrong set is loss 0") {
    std::vector<Tensor> outputs = {Tensor::of({1, 1})};
    LossResult res = full_time_loss(outputs, Tensor::of({1, 0}), {}, cfg);
    CHECK(res.value == 0.0);
  }

  SUBCASE("dimension mismatch") {
    std::vector<Tensor> outputs = {Tensor::of({1, 1})};
    std::vector<std::pair<int, Tensor>> wrong = {{1, Tensor::of({1})}};
    CHECK_THROWS_AS(full_time_loss(outputs, Tensor::of({1, 0}), wrong, cfg), Error);
  }
}

TEST_CASE("pooling_loss trivial values") {
  LossConfig cfg;

  SUBCASE("T=1 equals full_time exactly") {
    Rng rng(2024);
    for (int i = 0; i < 50; ++i) {
      oracles::LossInstance inst = oracles::random_loss_instance(rng, 1);
      const double pool = pooling_loss(inst.outputs, inst.correct, inst.wrong, cfg).value;
      const double full = full_time_loss(inst.outputs, inst.correct, inst.wrong, cfg).value;
      CHECK(pool == full);
    }
  }

  SUBCASE("constant outputs: pooled loss equals full-time / T") {
    Tensor c = Tensor::of({0.2, -0.7, 0.4});
    std::vector<Tensor> outputs(4, c);
    std::vector<std::pair<int, Tensor>> wrong = {{1, Tensor::of({1, 0, 0})},
                                                 {2, Tensor::of({0, 1, 0})}};
    Tensor correct = Tensor::of({0, 0, 1});
    const double pool = pooling_loss(outputs, correct, wrong, cfg).value;
    const double full = full_time_loss(outputs, correct, wrong, cfg).value;
    CHECK(pool == doctest::Approx(full / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("losses match the naive loop oracles") {
  LossConfig cfg;
  Rng rng(31337);
  for (int i = 0; i < 100; ++i) {
    oracles::LossInstance inst = oracles::random_loss_instance(rng);
    CHECK(std::fabs(full_time_loss(inst.outputs, inst.correct, inst.wrong, cfg).value -
                    oracles::naive_full_time_loss(inst.outputs, inst.correct, inst.wrong, 1.0)) <
          1e-12);
    CHECK(std::fabs(pooling_loss(inst.outputs, inst.correct, inst.wrong, cfg).value -
                    oracles::naive_pooling_loss(inst.outputs, inst.correct, inst.wrong, 1.0)) <
          1e-12);
  }
  for (int i = 0; i < 100; ++i) {
    oracles::SharedLossInstance inst = oracles::random_shared_instance(rng);
    CHECK(std::fabs(full_time_loss_shared(inst.outputs, inst.correct, inst.wrong, cfg).value -
                    oracles::naive_shared_loss(inst.outputs, inst.correct, inst.wrong, 1.0)) <
          1e-12);
  }
}

TEST_CASE("full_time_loss_shared") {
  LossConfig cfg;

  SUBCASE("T=1 reduces to full_time_loss with single vectors") {
    Rng rng(55);
    for (int i = 0; i < 30; ++i) {
      const std::size_t d = 1 + rng.below(4);
      std::vector<Tensor> o = {oracles::random_vec(d, rng)};
      std::vector<Tensor> c = {oracles::random_vec(d, rng)};
      std::vector<std::pair<int, std::vector<Tensor>>> w = {
          {1, {oracles::random_vec(d, rng)}}, {2, {oracles::random_vec(d, rng)}}};
      std::vector<std::pair<int, Tensor>> w_flat = {{1, w[0].second[0]}, {2, w[1].second[0]}};
      CHECK(full_time_loss_shared(o, c, w, cfg).value ==
            full_time_loss(o, c[0], w_flat, cfg).value);
    }
  }

  SUBCASE("indistinguishable answers give margin * T * |wrong|") {
    std::vector<Tensor> outputs(5, Tensor::of({0.3, 0.4}));
    std::vector<Tensor> correct(5, Tensor::of({0.1, -0.9}));
    std::vector<std::pair<int, std::vector<Tensor>>> wrong = {{1, correct}, {2, correct}};
    CHECK(full_time_loss_shared(outputs, correct, wrong, cfg).value ==
          doctest::Approx(1.0 * 5 * 2).epsilon(1e-15));
  }

  SUBCASE("length mismatch is an error") {
    std::vector<Tensor> outputs(3, Tensor::of({1, 0}));
    std::vector<Tensor> correct(2, Tensor::of({1, 0}));
    CHECK_THROWS_AS(full_time_loss_shared(outputs, correct, {}, cfg), Error);
  }
}

TEST_CASE("loss properties") {
  LossConfig cfg;
  Rng rng(777);

  SUBCASE("non-negative; zero iff every hinge argument <= 0") {
    for (int i = 0; i < 100; ++i) {
      oracles::LossInstance inst = oracles::random_loss_instance(rng);
      LossResult res = full_time_loss(inst.outputs, inst.correct, inst.wrong, cfg);
      CHECK(res.value >= 0.0);
      bool any_active = false;
      for (const Tensor& o : inst.outputs) {
        for (const auto& [id, w] : inst.wrong) {
          if (1.0 - dot(o, inst.correct) + dot(o, w) > 0) any_active = true;
        }
      }
      CHECK((res.value == 0.0) == !any_active);
    }
  }

  SUBCASE("wrong-answer permutation leaves value and per-answer grads unchanged") {
    for (int i = 0; i < 50; ++i) {
      oracles::LossInstance inst = oracles::random_loss_instance(rng);
      LossResult base = full_time_loss(inst.outputs, inst.correct, inst.wrong, cfg);
      std::vector<std::pair<int, Tensor>> shuffled = inst.wrong;
      std::reverse(shuffled.begin(), shuffled.end());
      LossResult perm = full_time_loss(inst.outputs, inst.correct, shuffled, cfg);
      CHECK(std::fabs(base.value - perm.value) < 1e-12);
      for (const auto& [id, g] : base.grad_wrong) {
        const Tensor& other = perm.grad_wrong.at(id);
        for (std::size_t k = 0; k < g.v.size(); ++k) CHECK(g.v[k] == other.v[k]);
      }
    }
  }

  SUBCASE("raising the correct score never increases the loss") {
    // realize the bump with T=1: moving A_c along o raises o·A_c and
    // touches nothing else
    for (int i = 0; i < 100; ++i) {
      oracles::LossInstance inst = oracles::random_loss_instance(rng, 1);
      const Tensor& o = inst.outputs[0];
      if (dot(o, o) == 0.0) continue;
      const double before = full_time_loss(inst.outputs, inst.correct, inst.wrong, cfg).value;
      Tensor raised = inst.correct;
      axpy(rng.uniform(0.0, 2.0), o, raised);
      const double after = full_time_loss(inst.outputs, raised, inst.wrong, cfg).value;
      CHECK(after <= before + 1e-12);
    }
  }

  SUBCASE("gradients match central differences away from kinks") {
    int checked = 0;
    for (int i = 0; checked < 25 && i < 200; ++i) {
      oracles::LossInstance inst = oracles::random_loss_instance(rng, 4, 3, 4);
      // kink exclusion
      double gap = 1e300;
      for (const Tensor& o : inst.outputs) {
        for (const auto& [id, w] : inst.wrong) {
          gap = std::min(gap, std::fabs(1.0 - dot(o, inst.correct) + dot(o, w)));
        }
      }
      if (gap < 1e-4) continue;
      ++checked;
      LossResult res = full_time_loss(inst.outputs, inst.correct, inst.wrong, cfg);
      auto f_correct = [&](const Tensor& c) {
        return oracles::naive_full_time_loss(inst.outputs, c, inst.wrong, 1.0);
      };
      Tensor numeric = numerical_gradient(f_correct, inst.correct, 1e-6);
      for (std::size_t k = 0; k < numeric.v.size(); ++k) {
        const double denom =
            std::max(1e-8, std::fabs(res.grad_correct.v[k]) + std::fabs(numeric.v[k]));
        CHECK(std::fabs(res.grad_correct.v[k] - numeric.v[k]) / denom < 1e-6);
      }
      auto f_out0 = [&](const Tensor& o) {
        std::vector<Tensor> outs = inst.outputs;
        outs[0] = o;
        return oracles::naive_full_time_loss(outs, inst.correct, inst.wrong, 1.0);
      };
      numeric = numerical_gradient(f_out0, inst.outputs[0], 1e-6);
      for (std::size_t k = 0; k < numeric.v.size(); ++k) {
        const double denom =
            std::max(1e-8, std::fabs(res.grad_outputs[0].v[k]) + std::fabs(numeric.v[k]));
        CHECK(std::fabs(res.grad_outputs[0].v[k] - numeric.v[k]) / denom < 1e-6);
      }
    }
    CHECK(checked >= 10);
  }
}
