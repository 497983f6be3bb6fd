#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"

#include "gdro/error.hpp"
#include "gdro/metrics.hpp"
#include "gdro/trainer.hpp"
#include "support.hpp"

using namespace gdro;

TEST_SUITE("trainer") {

TEST_CASE("method names round trip and classify correctly") {
  for (const std::string name : {"ours", "gdro", "dro", "erm"}) {
    CHECK(to_string(method_from_string(name)) == name);
  }
  CHECK_THROWS_AS(method_from_string("sgd"), Error);

  CHECK(method_uses_groups(Method::kOurs));
  CHECK(method_uses_groups(Method::kGdro));
  CHECK_FALSE(method_uses_groups(Method::kDro));
  CHECK_FALSE(method_uses_groups(Method::kErm));
  CHECK(method_uses_perturbation(Method::kOurs));
  CHECK(method_uses_perturbation(Method::kDro));
  CHECK_FALSE(method_uses_perturbation(Method::kGdro));
  CHECK_FALSE(method_uses_perturbation(Method::kErm));
}

TEST_CASE("simplex validation") {
  CHECK_NOTHROW(validate_simplex({0.25, 0.75}));
  CHECK_THROWS_AS(validate_simplex({0.5, 0.4}), Error);
  CHECK_THROWS_AS(validate_simplex({1.5, -0.5}), Error);
  CHECK_THROWS_AS(validate_simplex({}), Error);
}

TEST_CASE("mirror ascent matches the closed-form two-group example") {
  // q = (1/2, 1/2), losses (1, 0), eta = 1: q' = (e, 1) / (e + 1).
  const GroupWeights q = {0.5, 0.5};
  const std::vector<double> losses = {1.0, 0.0};
  const GroupWeights next = mirror_ascent_step(q, losses, 1.0);
  CHECK(next[0] == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(next[1] == doctest::Approx(0.2689414213699951).epsilon(1e-14));
}

TEST_CASE("mirror ascent is shift invariant and preserves the simplex") {
  const GroupWeights q = {0.2, 0.3, 0.5};
  const std::vector<double> losses = {2.0, -1.0, 0.25};
  const GroupWeights a = mirror_ascent_step(q, losses, 0.7);
  std::vector<double> shifted = losses;
  for (double& l : shifted) l += 1000.0;
  const GroupWeights b = mirror_ascent_step(q, shifted, 0.7);

  double sum = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    CHECK(a[g] > 0.0);
    CHECK(std::abs(a[g] - b[g]) <= 1e-12);
    sum += a[g];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("mirror ascent rejects non-finite losses naming the group") {
  const GroupWeights q = {0.5, 0.5};
  try {
    mirror_ascent_step(q, std::vector<double>{1.0, HUGE_VAL}, 0.1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumericDivergence);
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("descent step applies the weighted gradient sum") {
  ModelParams p;
  p.kind = ModelKind::kLinear;
  p.d_in = 1;
  p.values = {1.0, 2.0};
  const std::vector<std::vector<double>> grads = {{1.0, 0.0}, {0.0, 4.0}};
  const ModelParams next = descent_step(p, {0.25, 0.75}, grads, 0.1);
  CHECK(next.values[0] == doctest::Approx(1.0 - 0.1 * 0.25).epsilon(1e-15));
  CHECK(next.values[1] == doctest::Approx(2.0 - 0.1 * 3.0).epsilon(1e-15));
}

TEST_CASE("duality gap is max minus weighted mean and nonnegative") {
  const std::vector<double> losses = {1.0, 3.0};
  CHECK(duality_gap(losses, {0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(duality_gap(losses, {0.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(duality_gap(losses, {1.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("initial weights follow the group proportions") {
  const GroupedDataset toy = testsupport::two_group_toy(10);
  TrainConfig cfg;
  cfg.t_outer = 0;
  cfg.method = Method::kGdro;

  const TrainResult grouped = train(toy, cfg);
  CHECK(grouped.history.initial_weights == GroupWeights{0.5, 0.5});
  CHECK(grouped.history.records.empty());
  CHECK(grouped.params.values == init_params(cfg.seed, toy.d_in).values);

  cfg.method = Method::kErm;
  const TrainResult pooled = train(toy, cfg);
  CHECK(pooled.history.initial_weights == GroupWeights{1.0});
}

TEST_CASE("pooled methods keep the single weight at one") {
  const GroupedDataset toy = testsupport::two_group_toy(8);
  TrainConfig cfg;
  cfg.method = Method::kErm;
  cfg.t_outer = 5;
  const TrainResult result = train(toy, cfg);
  REQUIRE(result.history.records.size() == 5);
  for (const auto& rec : result.history.records) {
    REQUIRE(rec.weights.size() == 1);
    CHECK(rec.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rec.duality_gap == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("ours with zero inner iterations reproduces gdro bit for bit") {
  const GroupedDataset toy = testsupport::two_group_toy(10);
  TrainConfig ours;
  ours.method = Method::kOurs;
  ours.t_outer = 12;
  ours.robust = RobustConfig{0.5, 0.05, 0};  // t_rob = 0 disables the ascent

  TrainConfig gdro = ours;
  gdro.method = Method::kGdro;

  const TrainResult a = train(toy, ours);
  const TrainResult b = train(toy, gdro);
  CHECK(a.params.values == b.params.values);
  for (std::size_t t = 0; t < a.history.records.size(); ++t) {
    CHECK(a.history.records[t].group_losses == b.history.records[t].group_losses);
    CHECK(a.history.records[t].weights == b.history.records[t].weights);
  }
}

TEST_CASE("training is deterministic in the seed") {
  const GroupedDataset toy = testsupport::two_group_toy(10);
  TrainConfig cfg;
  cfg.method = Method::kOurs;
  cfg.t_outer = 6;
  cfg.robust = RobustConfig{1.0, 0.05, 5};

  const TrainResult a = train(toy, cfg);
  const TrainResult b = train(toy, cfg);
  CHECK(a.params.values == b.params.values);

  cfg.seed = 43;
  const TrainResult c = train(toy, cfg);
  CHECK(a.params.values != c.params.values);
}

TEST_CASE("history follows the documented conventions") {
  const GroupedDataset toy = testsupport::two_group_toy(10);
  TrainConfig cfg;
  cfg.method = Method::kGdro;
  cfg.t_outer = 20;
  const TrainResult result = train(toy, cfg);

  REQUIRE(result.history.records.size() == 20);
  for (const auto& rec : result.history.records) {
    REQUIRE(rec.group_losses.size() == 2);
    REQUIRE(rec.weights.size() == 2);
    CHECK(rec.duality_gap >= -1e-12);
    CHECK(rec.grad_norm >= 0.0);
    CHECK_NOTHROW(validate_simplex(rec.weights, 1e-9));
  }

  // First-iteration losses are evaluated at the untouched initialization.
  const ModelParams init = init_params(cfg.seed, toy.d_in);
  double loss0 = 0.0;
  for (int i : toy.group_index[0]) {
    loss0 += loss(init, toy.row(i), toy.y[i]);
  }
  loss0 /= static_cast<double>(toy.group_index[0].size());
  CHECK(result.history.records[0].group_losses[0] ==
        doctest::Approx(loss0).epsilon(1e-12));
}

TEST_CASE("gdro shifts weight toward the harder group and reduces its loss") {
  const GroupedDataset toy = testsupport::two_group_toy(15);
  TrainConfig cfg;
  cfg.method = Method::kGdro;
  cfg.t_outer = 150;
  cfg.eta_theta = 0.3;
  const TrainResult result = train(toy, cfg);

  // Group 1 has the smaller margin, so its loss stays higher and the mirror
  // ascent must push its weight above the uniform 1/2.
  const auto& last = result.history.records.back();
  CHECK(last.weights[1] > 0.5);

  const auto& first = result.history.records.front();
  CHECK(last.group_losses[1] < first.group_losses[1]);

  const MetricsReport metrics = evaluate(result.params, toy);
  CHECK(metrics.worst_acc > 0.8);
}

TEST_CASE("an empty declared group is an error naming the group") {
  GroupedDataset data = testsupport::two_group_toy(5);
  data.group_count = 3;  // declare a third group nobody belongs to
  data.rebuild_group_index();
  TrainConfig cfg;
  cfg.method = Method::kGdro;
  cfg.t_outer = 1;
  try {
    train(data, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyGroup);
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }

  // Pooled methods ignore groups entirely, so the same data trains fine.
  cfg.method = Method::kErm;
  CHECK_NOTHROW(train(data, cfg));
}

TEST_CASE("training an empty dataset is rejected") {
  GroupedDataset empty;
  empty.d_in = 2;
  empty.group_count = 1;
  empty.rebuild_group_index();
  TrainConfig cfg;
  cfg.method = Method::kErm;
  CHECK_THROWS_AS(train(empty, cfg), Error);
}

}  // TEST_SUITE("trainer")
