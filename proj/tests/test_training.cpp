// Copyright 2026 The DeepJSCC Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "djscc/training.hpp"
#include "test_util.hpp"

using namespace djscc;
using djscc::testing::random_image;
using djscc::testing::random_images;

namespace {

CodecConfig tiny_config(int layers = 1, Conditioning cond = Conditioning::kNone, ImageShape shape = {8, 8, 3}) {
  return CodecConfig::make(shape, shape.height * shape.width / 4, layers, cond, {4, 6, 6, 6});
}

// Quadratic toy: x_hat = W x, loss = mean (x_hat - x)^2. Central differences
// are exact for quadratics up to roundoff.
class LinearObjective : public DifferentiableObjective {
 public:
  LinearObjective(int n, std::uint64_t seed) : x_(Eigen::MatrixXd::Random(n, 5)), n_(n) { (void)seed; }
  double value(const Eigen::VectorXd& theta) override {
    const Eigen::MatrixXd w = theta.reshaped(n_, n_);
    return (w * x_ - x_).squaredNorm() / static_cast<double>(x_.size());
  }
  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& gradient) override {
    const Eigen::MatrixXd w = theta.reshaped(n_, n_);
    const Eigen::MatrixXd r = w * x_ - x_;
    gradient = (2.0 / static_cast<double>(x_.size()) * r * x_.transpose()).reshaped();
    return r.squaredNorm() / static_cast<double>(x_.size());
  }

 private:
  Eigen::MatrixXd x_;
  int n_;
};

DatasetSplit small_split(std::size_t train, std::size_t val, std::uint64_t seed) {
  DatasetSplit s;
  // Validation needs sides of at least 11 pixels for MS-SSIM.
  s.train = random_images(train, seed, {16, 16, 3});
  s.validation = random_images(val, seed + 1, {16, 16, 3});
  for (auto& v : s.validation) v.id = "val_" + v.id;
  return s;
}

}  // namespace

TEST_CASE("training SNR sampling") {
  auto rng = make_stream(1, Stream::kTrainSnr);
  for (int i = 0; i < 100; ++i) CHECK(sample_training_snr(7.0, 7.0, rng) == 7.0);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double s = sample_training_snr(0.0, 20.0, rng);
    REQUIRE(s >= 0.0);
    REQUIRE(s <= 20.0);
    sum += s;
  }
  CHECK(std::abs(sum / 1e5 - 10.0) < 0.1);
  try {
    sample_training_snr(5.0, 1.0, rng);
    FAIL("expected BadRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadRange);
  }
}

TEST_CASE("layer count sampling is uniform") {
  auto rng = make_stream(2, Stream::kTrainLayers);
  for (int i = 0; i < 100; ++i) CHECK(sample_layer_count(1, rng) == 1);
  constexpr int kDraws = 100000;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < kDraws; ++i) {
    const int l = sample_layer_count(5, rng);
    REQUIRE(l >= 1);
    REQUIRE(l <= 5);
    ++counts[l];
  }
  const double se = std::sqrt(0.2 * 0.8 / kDraws);
  double chi2 = 0;
  for (int l = 1; l <= 5; ++l) {
    const double f = counts[l] / static_cast<double>(kDraws);
    CHECK(std::abs(f - 0.2) < 3 * se);
    chi2 += std::pow(counts[l] - kDraws / 5.0, 2) / (kDraws / 5.0);
  }
  const boost::math::chi_squared dist(4);
  CHECK(chi2 < boost::math::quantile(dist, 0.999));
}

TEST_CASE("adam with zero learning rate is a bitwise no-op") {
  auto model = init_model<float>(tiny_config(), 3);
  const auto before = model.tensors;
  auto adam = AdamState<float>::for_params(model.tensors);
  Pipeline<float> pipeline(model.config);
  const auto x = random_image(1, {8, 8, 3});
  const auto r = train_step({&x}, model, adam, pipeline, 10.0, 1, 5, 0.0);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss > 0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(std::memcmp(before[i].data(), model.tensors[i].data(), sizeof(float) * before[i].size()) == 0);
  }
}

TEST_CASE("train_step is deterministic") {
  const auto x = random_images(4, 2, {8, 8, 3});
  std::vector<const ImageTensor*> batch;
  for (const auto& img : x) batch.push_back(&img);
  auto run = [&] {
    auto model = init_model<float>(tiny_config(2, Conditioning::kSnr), 4);
    auto adam = AdamState<float>::for_params(model.tensors);
    Pipeline<float> pipeline(model.config);
    const auto r1 = train_step(batch, model, adam, pipeline, 5.0, 1, 77, 1e-3);
    const auto r2 = train_step(batch, model, adam, pipeline, 15.0, 2, 78, 1e-3);
    return std::make_pair(model.tensors.flatten(), r1.loss + r2.loss);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.second == b.second);
  CHECK((a.first.array() == b.first.array()).all());
}

TEST_CASE("overfitting one constant image drops the loss by 10x") {
  auto model = init_model<float>(tiny_config(), 6);
  auto adam = AdamState<float>::for_params(model.tensors);
  Pipeline<float> pipeline(model.config);
  const auto x = synth_fixture(FixtureKind::kConstant, 0, {8, 8, 3});
  double first = 0, last = 0;
  for (int step = 1; step <= 500; ++step) {
    const auto r = train_step({&x}, model, adam, pipeline, kNoiseFreeSnrDb, 1, step, 1e-3);
    if (step == 1) first = r.loss;
    last = r.loss;
  }
  CHECK(first / last >= 10.0);
}

TEST_CASE("diverged loss is reported") {
  auto model = init_model<float>(tiny_config(), 6);
  auto adam = AdamState<float>::for_params(model.tensors);
  Pipeline<float> pipeline(model.config);
  const auto x = random_image(2, {8, 8, 3});
  // Infinite decoder bias gives a NaN output with a finite encoder.
  auto& bias = model.tensors[model.tensors.index_of("dec4.conv.bias")];
  bias(0, 0) = std::numeric_limits<float>::infinity();
  bias(1, 0) = -std::numeric_limits<float>::infinity();
  model.tensors[model.tensors.index_of("dec4.conv.weight")].setConstant(std::numeric_limits<float>::infinity());
  try {
    train_step({&x}, model, adam, pipeline, 10.0, 1, 1, 1e-3);
    FAIL("expected DivergedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDivergedLoss);
  }
}

TEST_CASE("gradient check: linear toy model") {
  LinearObjective f(6, 1);
  Eigen::VectorXd theta = Eigen::VectorXd::Random(36);
  const auto r = finite_diff_gradcheck(f, theta, 20, 1e-4, 3);
  CHECK(r.probes.size() == 20);
  CHECK(r.max_relative_error < 1e-8);
}

TEST_CASE("gradient check: full small codec in double precision") {
  for (auto cond : {Conditioning::kNone, Conditioning::kSnr}) {
    for (int layers : {1, 2}) {
      CAPTURE(layers);
      const auto model = init_model<double>(tiny_config(layers, cond), 11);
      CodecObjective f(model, random_images(2, 9, {8, 8, 3}), 10.0, layers, 123);
      const auto theta = f.initial();
      const auto r = finite_diff_gradcheck(f, theta, 32, 1e-4, 5);
      CHECK(r.max_relative_error < 1e-3);
      const auto half = finite_diff_gradcheck(f, theta, 32, 5e-5, 5);
      CHECK(half.max_relative_error <= 4.0 * std::max(r.max_relative_error, 1e-9));
    }
  }
}

TEST_CASE("gradient check with a partial layer prefix") {
  const auto model = init_model<double>(tiny_config(2), 12);
  CodecObjective f(model, random_images(2, 10, {8, 8, 3}), 5.0, 1, 321);
  const auto r = finite_diff_gradcheck(f, f.initial(), 32, 1e-4, 6);
  CHECK(r.max_relative_error < 1e-3);
}

TEST_CASE("train writes a loadable checkpoint and deterministic logs") {
  djscc::testing::TempDir dir("train");
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  tc.snr_low_db = 0;
  tc.snr_high_db = 20;
  tc.seed = 8;
  tc.probe_snr_db = {5.0};
  tc.checkpoint_path = dir / "a.djc";
  tc.log_path = dir / "a.csv";
  const auto split = small_split(10, 3, 1);
  const auto r = train(tc, tiny_config(2, Conditioning::kSnr, {16, 16, 3}), split);
  CHECK(r.steps.size() == 3);  // ceil(10 / 4)
  const auto loaded = load_checkpoint(dir / "a.djc");
  REQUIRE(loaded.tensors.size() == r.best.tensors.size());
  for (std::size_t i = 0; i < loaded.tensors.size(); ++i) CHECK((loaded.tensors[i].array() == r.best.tensors[i].array()).all());
  CHECK(loaded.metadata.snr_train_high_db == 20.0);

  save_checkpoint(dir / "b.djc", loaded);
  CHECK(djscc::testing::slurp(dir / "a.djc") == djscc::testing::slurp(dir / "b.djc"));

  tc.checkpoint_path = dir / "c.djc";
  tc.log_path = dir / "c.csv";
  train(tc, tiny_config(2, Conditioning::kSnr, {16, 16, 3}), split);
  CHECK(djscc::testing::slurp(dir / "a.csv") == djscc::testing::slurp(dir / "c.csv"));
  CHECK(djscc::testing::slurp(dir / "a.csv.val.csv") == djscc::testing::slurp(dir / "c.csv.val.csv"));
  CHECK(djscc::testing::slurp(dir / "a.djc") == djscc::testing::slurp(dir / "c.djc"));

  std::ifstream log(dir / "a.csv");
  std::string header;
  std::getline(log, header);
  CHECK(header == "epoch,step,loss,probe_snr_db,val_psnr_db,val_msssim,wallclock_s");
  int rows = 0;
  for (std::string line; std::getline(log, line);) {
    ++rows;
    std::stringstream ss(line);
    std::string epoch, step, loss;
    std::getline(ss, epoch, ',');
    std::getline(ss, step, ',');
    std::getline(ss, loss, ',');
    CHECK(std::isfinite(std::stod(loss)));
  }
  CHECK(rows == 3);
}

TEST_CASE("log row count is epochs x steps per epoch") {
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 5;
  tc.probe_snr_db = {10.0};
  tc.snr_low_db = tc.snr_high_db = 10.0;
  tc.randomize_layers = false;
  const auto r = train(tc, tiny_config(1, Conditioning::kNone, {16, 16, 3}), small_split(12, 2, 3));
  CHECK(r.steps.size() == 3 * 3);
  CHECK(r.validation.size() == 3);
  for (const auto& row : r.steps) CHECK(*row.probe_snr_db == 10.0);
  CHECK(r.best.metadata.snr_train_low_db == 10.0);
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = {};
  tc.learning_rate = 0;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = {};
  tc.snr_low_db = 5;
  tc.snr_high_db = 1;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = {};
  tc.loss = "l1";
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = {};
  CHECK_NOTHROW(tc.validate());
}
