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

#include "djscc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace djscc {

void TrainConfig::validate() const {
  if (!(snr_low_db <= snr_high_db)) throw Error(ErrorCode::kBadRange, "train SNR range low > high");
  if (epochs < 1) throw Error(ErrorCode::kBadConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kBadConfig, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kBadConfig, "learning_rate must be > 0");
  if (loss != "mse") throw Error(ErrorCode::kBadConfig, "only the mse loss is supported");
  if (probe_snr_db.empty()) throw Error(ErrorCode::kBadConfig, "probe SNR grid is empty");
}

double sample_training_snr(double low_db, double high_db, std::mt19937_64& rng) {
  if (!(low_db <= high_db)) throw Error(ErrorCode::kBadRange, "low > high");
  if (low_db == high_db) return low_db;
  return std::uniform_real_distribution<double>(low_db, high_db)(rng);
}

int sample_layer_count(int layers, std::mt19937_64& rng) {
  if (layers < 1) throw Error(ErrorCode::kLayerOutOfRange, "L must be >= 1");
  return std::uniform_int_distribution<int>(1, layers)(rng);
}

StepResult train_step(const std::vector<const ImageTensor*>& batch, ModelParams<float>& params,
                      AdamState<float>& opt_state, Pipeline<float>& pipeline, double snr_db, int l,
                      std::uint64_t noise_seed, double learning_rate, const ChannelHook<float>& hook) {
  ParameterSet<float> grads = params.tensors.zeros_like();
  const auto pass = pipeline.run(params.tensors, batch, snr_db, l, noise_seed, &grads, hook);
  if (!std::isfinite(pass.loss)) {
    throw Error(ErrorCode::kDivergedLoss, "loss became " + std::to_string(pass.loss) + " at SNR " +
                                              std::to_string(snr_db) + " dB, l=" + std::to_string(l));
  }
  // Secure pipelines quantize the symbols, so only check the plain channel.
  if (!hook && pass.max_power_error > 1e-5) {
    throw Error(ErrorCode::kNonFiniteActivation, "transmitted block violates the power constraint");
  }
  adam_update(params.tensors, grads, opt_state, learning_rate);
  return {pass.loss, pass.max_power_error};
}

namespace {

void put_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_db(*v);
}

}  // namespace

void write_log_csv(std::ostream& out, const std::vector<LogRow>& rows, const std::string& preamble) {
  std::istringstream lines(preamble);
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << kLogHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.step << ',';
    put_optional(out, r.loss);
    out << ',';
    put_optional(out, r.probe_snr_db);
    out << ',';
    put_optional(out, r.val_psnr_db);
    out << ',';
    put_optional(out, r.val_msssim);
    out << ',';
    put_optional(out, r.wallclock_s);
    out << '\n';
  }
}

TrainResult train(const TrainConfig& config, const CodecConfig& codec, const DatasetSplit& data,
                  const ChannelHook<float>& hook) {
  config.validate();
  codec.validate();
  if (data.train.empty()) throw Error(ErrorCode::kEmptyDataset, "empty training split");
  std::vector<ImageTensor> val = data.validation;
  if (config.val_limit > 0 && val.size() > config.val_limit) val.resize(config.val_limit);

  TrainResult result;
  ModelParams<float> model = init_model<float>(codec, config.seed);
  model.metadata.snr_train_low_db = config.snr_low_db;
  model.metadata.snr_train_high_db = config.snr_high_db;
  AdamState<float> adam = AdamState<float>::for_params(model.tensors);
  Pipeline<float> pipeline(codec);

  auto snr_rng = make_stream(config.seed, Stream::kTrainSnr);
  auto layer_rng = make_stream(config.seed, Stream::kTrainLayers);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&]() -> std::optional<double> {
    if (!config.record_wallclock) return std::nullopt;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<std::size_t> order(data.train.size());
  std::uint64_t step = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto order_rng = make_stream(config.seed, Stream::kTrainOrder, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[order_rng() % (i + 1)]);

    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      std::vector<const ImageTensor*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) batch.push_back(&data.train[order[i]]);
      const double snr = sample_training_snr(config.snr_low_db, config.snr_high_db, snr_rng);
      const int l = config.randomize_layers ? sample_layer_count(codec.layers, layer_rng) : codec.layers;
      ++step;
      const auto r = train_step(batch, model, adam, pipeline, snr, l, mix_seed(config.seed * 1000003ULL + step),
                                config.learning_rate, hook);
      result.steps.push_back({epoch, step, r.loss, snr, std::nullopt, std::nullopt, elapsed()});
    }
    model.metadata.epochs_completed = static_cast<std::uint32_t>(epoch);

    if (!val.empty()) {
      double total = 0.0;
      for (double probe : config.probe_snr_db) {
        EvalOptions eval;
        eval.seed = config.seed + 0x5eed;
        const QualityReport q = evaluate_model(model, val, probe, codec.layers, eval);
        result.validation.push_back({epoch, step, std::nullopt, probe, q.psnr_db, q.ms_ssim, elapsed()});
        total += q.psnr_db;
      }
      const double score = total / static_cast<double>(config.probe_snr_db.size());
      if (score > best) {
        best = score;
        result.best = model;
        if (config.checkpoint_path) save_checkpoint(*config.checkpoint_path, model);
      }
    }
  }
  if (val.empty()) {
    result.best = model;
    if (config.checkpoint_path) save_checkpoint(*config.checkpoint_path, model);
  }
  result.best_val_psnr_db = best;
  result.last = std::move(model);

  if (config.log_path) {
    std::ofstream log(*config.log_path);
    std::ofstream val_log(config.log_path->string() + ".val.csv");
    if (!log || !val_log) throw Error(ErrorCode::kDiskWriteFailure, config.log_path->string());
    write_log_csv(log, result.steps, config.log_preamble);
    write_log_csv(val_log, result.validation, config.log_preamble);
    if (!log || !val_log) throw Error(ErrorCode::kDiskWriteFailure, config.log_path->string());
  }
  return result;
}

CodecObjective::CodecObjective(ModelParams<double> model, std::vector<ImageTensor> batch, double snr_db, int l,
                               std::uint64_t noise_seed)
    : model_(std::move(model)), batch_(std::move(batch)), snr_db_(snr_db), l_(l), noise_seed_(noise_seed),
      pipeline_(model_.config) {}

double CodecObjective::value(const Eigen::VectorXd& theta) {
  model_.tensors.unflatten(theta);
  std::vector<const ImageTensor*> batch;
  for (const auto& x : batch_) batch.push_back(&x);
  return pipeline_.run(model_.tensors, batch, snr_db_, l_, noise_seed_, nullptr).loss;
}

double CodecObjective::value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& gradient) {
  model_.tensors.unflatten(theta);
  std::vector<const ImageTensor*> batch;
  for (const auto& x : batch_) batch.push_back(&x);
  ParameterSet<double> grads = model_.tensors.zeros_like();
  const double loss = pipeline_.run(model_.tensors, batch, snr_db_, l_, noise_seed_, &grads).loss;
  gradient = grads.flatten();
  return loss;
}

GradcheckResult finite_diff_gradcheck(DifferentiableObjective& objective, const Eigen::VectorXd& theta,
                                      int probe_count, double step, std::uint64_t probe_seed) {
  if (probe_count < 1) throw Error(ErrorCode::kBadParams, "probe_count must be >= 1");
  Eigen::VectorXd gradient;
  objective.value_and_gradient(theta, gradient);

  std::vector<Eigen::Index> all(static_cast<std::size_t>(theta.size()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  auto rng = make_stream(probe_seed, Stream::kGradcheck);
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(probe_count), all.size());
  // Partial Fisher-Yates: the first `count` entries are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng() % (all.size() - i)]);

  GradcheckResult result;
  Eigen::VectorXd probe = theta;
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::Index idx = all[i];
    const double h = step * std::max(1.0, std::abs(theta[idx]));
    probe[idx] = theta[idx] + h;
    const double up = objective.value(probe);
    probe[idx] = theta[idx] - h;
    const double down = objective.value(probe);
    probe[idx] = theta[idx];
    const double fd = (up - down) / (2.0 * h);
    const double bp = gradient[idx];
    const double rel = std::abs(fd - bp) / std::max({std::abs(fd), std::abs(bp), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, rel);
    result.probes.push_back(idx);
    result.finite_difference.push_back(fd);
    result.backprop.push_back(bp);
  }
  return result;
}

}  // namespace djscc
