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

#ifndef DJSCC_EXPERIMENT_HPP_
#define DJSCC_EXPERIMENT_HPP_

// Sweep results: one row per (scheme, model, SNR, l) cell, written as CSV
// with a '#'-prefixed provenance header, and SVG plots derived from it.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "djscc/baseline.hpp"
#include "djscc/codec.hpp"
#include "djscc/pipeline.hpp"

namespace djscc {

// classical@<snr>, adaptive, layered, baseline or secure.
bool is_valid_scheme_tag(const std::string& tag);
// Derived from a checkpoint: AF conditioning -> adaptive, L > 1 -> layered,
// otherwise classical@<training SNR>.
std::string scheme_tag(const ModelParams<float>& model);

struct ExperimentRow {
  std::string scheme;
  std::string model;
  double snr_test_db = 0.0;
  int l = 1;
  double psnr_db = 0.0;
  double ms_ssim = 0.0;
};

struct ExperimentResult {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string name;
  std::string version;
  std::string config_snapshot;  // "key = value" lines
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<ExperimentRow> rows;

  void validate() const;
};

void write_experiment_csv(std::ostream& out, const ExperimentResult& result);
void save_experiment_csv(const std::filesystem::path& path, const ExperimentResult& result);
ExperimentResult read_experiment_csv(std::istream& in);
ExperimentResult load_experiment_csv(const std::filesystem::path& path);

struct NamedModel {
  std::string name;
  ModelParams<float> params;
};

// Rows in grid order: model, then SNR, then l. Cells with l above a model's
// layer count are skipped.
std::vector<ExperimentRow> sweep_models(const std::vector<NamedModel>& models, const std::vector<ImageTensor>& images,
                                        const std::vector<double>& snr_grid_db, const std::vector<int>& layer_grid,
                                        const EvalOptions& options);

std::vector<ExperimentRow> sweep_baseline(const std::vector<ImageTensor>& images, const std::vector<double>& snr_grid_db,
                                          const SeparationConfig& config);

// PSNR against test SNR (one line per scheme/model at its largest l) and
// PSNR against l (one line per model and SNR). Return false if the result
// has nothing to draw on that axis.
bool plot_psnr_vs_snr(const ExperimentResult& result, const std::filesystem::path& path);
bool plot_psnr_vs_layers(const ExperimentResult& result, const std::filesystem::path& path);

}  // namespace djscc

#endif  // DJSCC_EXPERIMENT_HPP_
