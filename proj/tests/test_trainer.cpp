#include <doctest.h>

#include "relucode/errors.hpp"
#include "relucode/files.hpp"
#include "relucode/tessellation.hpp"
#include "relucode/trainer.hpp"
#include "test_support.hpp"

using namespace relucode;
using relucode::testing::vec;

namespace {

TrainConfig small_config(const std::string& dir) {
  TrainConfig c;
  c.dataset.size = 200;
  c.epochs = 3;
  c.checkpoint_dir = relucode::testing::scratch_dir(dir);
  return c;
}

Eigen::VectorXd point_away_from_kinks(const Classifier& model, Rng& rng) {
  for (;;) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(model.input_dim));
    for (auto& v : x) v = rng.uniform(-2, 2);
    if (min_abs_preactivation(model, x) >= 1e-4) return x;
  }
}

}  // namespace

TEST_CASE("synthetic datasets") {
  const auto moons = make_two_moons(400, 0.1, 3);
  CHECK(moons.size() == 400);
  CHECK(moons.dim() == 2);
  CHECK(std::count(moons.labels.begin(), moons.labels.end(), 0) == 200);
  CHECK(make_two_moons(400, 0.1, 3).points == moons.points);
  CHECK(make_two_moons(400, 0.1, 4).points != moons.points);

  const auto blobs = make_gaussian_blobs(300, 4, 0.5, 9);
  CHECK(blobs.size() == 300);
  CHECK(*std::max_element(blobs.labels.begin(), blobs.labels.end()) == 3);
  SyntheticSpec spec;
  spec.kind = DatasetKind::gaussian_blobs;
  spec.centers = 5;
  CHECK(class_count(spec) == 5);
}

TEST_CASE("classifier initialization") {
  Rng rng(5);
  const auto model = init_classifier(2, {16, 16}, 2, rng);
  CHECK(model.parameter_count() == (2 * 16 + 16) + (16 * 16 + 16) + (16 * 2 + 2));
  const double bound = std::sqrt(6.0 / (2 + 16));
  CHECK(model.hidden[0].weights.cwiseAbs().maxCoeff() <= bound);
  CHECK(model.hidden[0].bias.isZero());
  CHECK(model.head.bias.isZero());
  CHECK(model.hidden_network().total_neurons() == 32);
}

TEST_CASE("backprop matches central differences") {
  Rng rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 2 + trial % 3;
    auto model = init_classifier(2 + trial % 2, {6, 5}, classes, rng);
    for (auto& l : model.hidden) {
      for (auto& b : l.bias) b = rng.normal() * 0.5;
    }
    const auto x = point_away_from_kinks(model, rng);
    const int label = static_cast<int>(rng.below(classes));
    CHECK(gradient_check(model, x, label, 1e-5, Loss::softmax_cross_entropy, 50,
                         static_cast<std::uint64_t>(trial)) < 1e-5);
    CHECK(gradient_check(model, x, label, 1e-5, Loss::squared_error, 50,
                         static_cast<std::uint64_t>(trial)) < 1e-5);
  }
}

TEST_CASE("squared loss on a head-only model is exact") {
  // No hidden layers: the loss is quadratic, so central differences are exact
  // up to rounding.
  Rng rng(89);
  auto model = init_classifier(3, {}, 2, rng);
  model.head.bias = vec({0.3, -0.2});
  const auto x = vec({0.5, -1.0, 2.0});
  CHECK(gradient_check(model, x, 1, 1e-3, Loss::squared_error, 1000) < 1e-9);

  auto grad = Gradients::zeros_like(model);
  accumulate_gradients(model, x, 1, Loss::squared_error, grad);
  const Eigen::VectorXd residual = model.scores(x) - vec({0, 1});
  const Eigen::MatrixXd expect = residual * x.transpose();
  CHECK((grad.head.weights - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((grad.head.bias - residual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient check rejects a non-positive step") {
  Rng rng(97);
  const auto model = init_classifier(2, {4}, 2, rng);
  CHECK_THROWS_AS(gradient_check(model, vec({1, 1}), 0, 0.0), PreconditionError);
  CHECK_THROWS_AS(gradient_check(model, vec({1, 1}), 0, -1e-5), PreconditionError);
}

TEST_CASE("one epoch writes one checkpoint and one metrics row") {
  auto cfg = small_config("train_one");
  cfg.epochs = 1;
  const auto result = train(cfg);
  REQUIRE(result.checkpoints.size() == 1);
  CHECK(result.checkpoints[0].filename() == "epoch_0001.rcw");
  CHECK(std::filesystem::exists(head_path(result.checkpoints[0])));
  CHECK(result.metrics.size() == 1);
  const auto csv = read_file(cfg.checkpoint_dir / "metrics.csv");
  CHECK(csv.rfind("epoch,train_loss,train_accuracy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  const auto net = load_network(result.checkpoints[0]);
  CHECK(net == result.model.hidden_network());
  CHECK(load_head(head_path(result.checkpoints[0])) == result.model.head);
}

TEST_CASE("training is deterministic given the seed") {
  auto a = small_config("train_det_a");
  auto b = small_config("train_det_b");
  train(a);
  train(b);
  for (const char* f : {"epoch_0001.rcw", "epoch_0003.rcw", "epoch_0003.rcw.head", "metrics.csv"}) {
    CHECK(read_file(a.checkpoint_dir / f) == read_file(b.checkpoint_dir / f));
  }
  auto c = small_config("train_det_c");
  c.seed = 1;
  train(c);
  CHECK(read_file(a.checkpoint_dir / "epoch_0003.rcw") != read_file(c.checkpoint_dir / "epoch_0003.rcw"));
}

TEST_CASE("two moons is fit by the default configuration") {
  TrainConfig cfg;
  cfg.checkpoint_dir = relucode::testing::scratch_dir("train_moons");
  REQUIRE(cfg.epochs == 30);
  REQUIRE(cfg.learning_rate == 0.01);
  const auto result = train(cfg);
  CHECK(result.metrics.back().accuracy >= 0.95);

  const auto data = make_dataset(cfg.dataset);
  const auto series = census_series(result.checkpoints, data);
  CHECK(series.size() == 30);
  for (const auto& c : series) {
    CHECK(c.distinct_codes() >= 1);
    CHECK(c.distinct_codes() <= data.size());
  }
}

TEST_CASE("divergence names the epoch") {
  auto cfg = small_config("train_diverge");
  cfg.learning_rate = 1e300;
  try {
    train(cfg);
    FAIL("expected divergence");
  } catch (const TrainingDivergedError& e) {
    CHECK(e.epoch() == 1);
  }
}

TEST_CASE("train config JSON") {
  const auto cfg = TrainConfig::from_json(
      R"({"architecture": [8, 4], "dataset": {"kind": "gaussian_blobs", "size": 100, "centers": 4},
          "learning_rate": 0.05, "epochs": 2, "batch_size": 16, "seed": 3, "checkpoint_dir": "out"})");
  CHECK(cfg.architecture == std::vector<std::size_t>{8, 4});
  CHECK(cfg.dataset.kind == DatasetKind::gaussian_blobs);
  CHECK(cfg.dataset.centers == 4);
  CHECK(cfg.batch_size == 16);
  CHECK(TrainConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  CHECK_THROWS_AS(TrainConfig::from_json(R"({"learning_rate": 0})"), ValidationError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"epochs": 0})"), ValidationError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"batch_size": 0})"), ValidationError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"dataset": {"kind": "spirals"}})"), ValidationError);
  CHECK_THROWS_AS(TrainConfig::from_json("{"), ParseError);
}
