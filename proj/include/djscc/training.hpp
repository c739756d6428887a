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

#ifndef DJSCC_TRAINING_HPP_
#define DJSCC_TRAINING_HPP_

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "djscc/codec.hpp"
#include "djscc/image.hpp"
#include "djscc/pipeline.hpp"

namespace djscc {

struct TrainConfig {
  double snr_low_db = 0.0;
  double snr_high_db = 20.0;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::string loss = "mse";
  std::uint64_t seed = 1;
  // Random prefix length per batch; off means l = L always.
  bool randomize_layers = true;
  std::vector<double> probe_snr_db = {0.0, 10.0, 20.0};
  std::size_t val_limit = 0;  // 0 = whole validation split
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<std::filesystem::path> log_path;
  bool record_wallclock = false;
  // Written as '# '-prefixed lines ahead of the CSV header of each log.
  std::string log_preamble;

  void validate() const;
};

double sample_training_snr(double low_db, double high_db, std::mt19937_64& rng);
int sample_layer_count(int layers, std::mt19937_64& rng);

// Adaptive-moment optimizer (beta1 0.9, beta2 0.999, eps 1e-8).
template <typename Scalar>
struct AdamState {
  ParameterSet<Scalar> m;
  ParameterSet<Scalar> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const ParameterSet<Scalar>& params) { return {params.zeros_like(), params.zeros_like()}; }
};

template <typename Scalar>
void adam_update(ParameterSet<Scalar>& params, const ParameterSet<Scalar>& grads, AdamState<Scalar>& state,
                 double learning_rate) {
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto step = static_cast<Scalar>(learning_rate / c1);
  const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
  const auto eps = static_cast<Scalar>(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = grads[i].array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[i].array() -= step * m / ((v * inv_c2).sqrt() + eps);
  }
}

struct StepResult {
  double loss = 0.0;
  double max_power_error = 0.0;
};

// One optimizer update. Throws DivergedLoss on a non-finite loss and
// NonFiniteActivation (from the pipeline) on a divergent encoder.
StepResult train_step(const std::vector<const ImageTensor*>& batch, ModelParams<float>& params,
                      AdamState<float>& opt_state, Pipeline<float>& pipeline, double snr_db, int l,
                      std::uint64_t noise_seed, double learning_rate, const ChannelHook<float>& hook = {});

struct LogRow {
  int epoch = 0;
  std::uint64_t step = 0;
  std::optional<double> loss;
  std::optional<double> probe_snr_db;
  std::optional<double> val_psnr_db;
  std::optional<double> val_msssim;
  std::optional<double> wallclock_s;
};

inline constexpr const char* kLogHeader = "epoch,step,loss,probe_snr_db,val_psnr_db,val_msssim,wallclock_s";

void write_log_csv(std::ostream& out, const std::vector<LogRow>& rows, const std::string& preamble = {});

struct TrainResult {
  ModelParams<float> best;       // best mean validation PSNR over the probe grid
  ModelParams<float> last;
  std::vector<LogRow> steps;     // one row per optimizer step
  std::vector<LogRow> validation;  // one row per (epoch, probe SNR)
  double best_val_psnr_db = 0.0;
};

// Full training run. Writes checkpoint/log files when the paths are set; a
// validation log goes next to the step log with suffix ".val.csv".
TrainResult train(const TrainConfig& config, const CodecConfig& codec, const DatasetSplit& data,
                  const ChannelHook<float>& hook = {});

// ---------------------------------------------------------------------------
// Gradient checking.

class DifferentiableObjective {
 public:
  virtual ~DifferentiableObjective() = default;
  virtual double value(const Eigen::VectorXd& theta) = 0;
  virtual double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& gradient) = 0;
};

// MSE of the full pipeline with noise fixed by noise_seed.
class CodecObjective : public DifferentiableObjective {
 public:
  CodecObjective(ModelParams<double> model, std::vector<ImageTensor> batch, double snr_db, int l,
                 std::uint64_t noise_seed);
  Eigen::VectorXd initial() const { return model_.tensors.flatten(); }
  double value(const Eigen::VectorXd& theta) override;
  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& gradient) override;

 private:
  ModelParams<double> model_;
  std::vector<ImageTensor> batch_;
  double snr_db_;
  int l_;
  std::uint64_t noise_seed_;
  Pipeline<double> pipeline_;
};

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::vector<Eigen::Index> probes;
  std::vector<double> finite_difference;
  std::vector<double> backprop;
};

// Central differences with h = step * max(1, |theta_i|) on probe_count
// distinct random coordinates; relative error |fd - bp| / max(|fd|, |bp|, 1e-8).
GradcheckResult finite_diff_gradcheck(DifferentiableObjective& objective, const Eigen::VectorXd& theta,
                                      int probe_count, double step, std::uint64_t probe_seed);

}  // namespace djscc

#endif  // DJSCC_TRAINING_HPP_
