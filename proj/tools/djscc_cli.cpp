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

// djscc: train, sweep, table, decide, keygen, secure-demo, plot.
//
// Exit codes: 0 success, 1 acceptance threshold not met (or training
// diverged), 2 usage error, 3 I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "djscc/adaptation.hpp"
#include "djscc/baseline.hpp"
#include "djscc/common.hpp"
#include "djscc/config.hpp"
#include "djscc/encryption.hpp"
#include "djscc/experiment.hpp"
#include "djscc/training.hpp"

namespace fs = std::filesystem;
using namespace djscc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitThreshold = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Config load_config(const Globals& g, bool required) {
  if (g.config_path.empty()) {
    if (required) throw UsageError("--config is required");
    return {};
  }
  if (!fs::exists(g.config_path)) throw UsageError("config file not found: " + g.config_path);
  return Config::load(g.config_path);
}

fs::path out_dir(const Globals& g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kDiskWriteFailure, "cannot create " + dir.string());
  return dir;
}

std::uint64_t eval_seed(const Globals& g, const Config& c) {
  return g.seed ? *g.seed : static_cast<std::uint64_t>(c.get_int("channel.seed", 1));
}

std::string snapshot_with(Config c, const std::vector<std::pair<std::string, std::string>>& extra) {
  for (const auto& [k, v] : extra) c.set(k, v);
  return c.snapshot();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::vector<ImageTensor> eval_images(const Config& c, const std::string& which, std::size_t limit) {
  DatasetSplit split = load_split(data_config(c));
  std::vector<ImageTensor> images = which == "val" ? std::move(split.validation) : std::move(split.test);
  if (images.empty()) throw Error(ErrorCode::kEmptyDataset, which + " split is empty");
  if (limit > 0 && images.size() > limit) images.resize(limit);
  return images;
}

// -- train ----------------------------------------------------------------

int cmd_train(const Globals& g) {
  const Config c = load_config(g, true);
  TrainConfig tc = train_config(c);
  if (g.seed) tc.seed = *g.seed;
  const fs::path dir = out_dir(g);
  if (!tc.checkpoint_path) tc.checkpoint_path = dir / "model.djc";
  if (!tc.log_path) tc.log_path = dir / "train_log.csv";
  tc.log_preamble = "version = " + std::string(version_string()) + "\n" +
                    snapshot_with(c, {{"train.seed", std::to_string(tc.seed)}});
  const CodecConfig codec = codec_config(c);
  const DatasetSplit split = load_split(data_config(c));
  std::cerr << "train: " << split.train.size() << " train / " << split.validation.size() << " val images, k="
            << codec.k << " L=" << codec.layers << " rho=" << codec.rho() << "\n";
  const TrainResult r = train(tc, codec, split);
  std::cout << "steps " << r.steps.size() << "\n";
  std::cout << "best_val_psnr_db " << format_db(r.best_val_psnr_db) << "\n";
  std::cout << "checkpoint " << tc.checkpoint_path->string() << "\n";
  std::cout << "log " << tc.log_path->string() << "\n";
  return kExitOk;
}

// -- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::vector<std::string> checkpoints;
  std::string snr_grid = "0:20:1";
  std::string layers;
  std::string name = "sweep";
  std::string split = "test";
  std::size_t limit = 0;
  std::optional<double> baseline_design_snr;
};

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  const Config c = load_config(g, false);
  if (a.checkpoints.empty() && !a.baseline_design_snr) throw UsageError("nothing to sweep: give --checkpoint or --baseline");
  std::vector<NamedModel> models;
  int max_layers = 1;
  for (const auto& path : a.checkpoints) {
    models.push_back({fs::path(path).stem().string(), load_checkpoint(path)});
    max_layers = std::max(max_layers, models.back().params.config.layers);
  }
  const std::vector<double> snr = parse_grid(a.snr_grid);
  std::vector<int> layers = a.layers.empty() ? std::vector<int>{} : parse_ints(a.layers);
  if (layers.empty()) {
    for (int l = 1; l <= max_layers; ++l) layers.push_back(l);
  }
  const auto images = eval_images(c, a.split, a.limit);

  ExperimentResult result;
  result.name = a.name;
  result.version = version_string();
  const std::uint64_t seed = eval_seed(g, c);
  result.seeds = {{"eval", seed}, {"data", static_cast<std::uint64_t>(c.get_int("data.seed", 1))}};
  std::vector<std::string> names;
  for (const auto& m : models) names.push_back(m.name);
  result.config_snapshot = snapshot_with(c, {{"sweep.models", join(names)},
                                             {"sweep.snr_grid", a.snr_grid},
                                             {"sweep.layers", a.layers},
                                             {"sweep.split", a.split},
                                             {"sweep.limit", std::to_string(a.limit)}});
  EvalOptions eval;
  eval.seed = seed;
  eval.model = channel_config(c).model;
  result.rows = sweep_models(models, images, snr, layers, eval);
  if (a.baseline_design_snr) {
    DatasetSplit split = load_split(data_config(c));
    SeparationConfig sc;
    sc.design_snr_db = *a.baseline_design_snr;
    sc.k = models.empty() ? static_cast<int>(c.get_int("codec.k", 256)) : models.front().params.config.k;
    sc.outage_image = mean_image(split.train);
    auto rows = sweep_baseline(images, snr, sc);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  const fs::path dir = out_dir(g);
  save_experiment_csv(dir / (a.name + ".csv"), result);
  std::cout << "rows " << result.rows.size() << "\n";
  std::cout << "csv " << (dir / (a.name + ".csv")).string() << "\n";
  if (plot_psnr_vs_snr(result, dir / (a.name + "_psnr_vs_snr.svg"))) {
    std::cout << "plot " << (dir / (a.name + "_psnr_vs_snr.svg")).string() << "\n";
  }
  if (plot_psnr_vs_layers(result, dir / (a.name + "_psnr_vs_layers.svg"))) {
    std::cout << "plot " << (dir / (a.name + "_psnr_vs_layers.svg")).string() << "\n";
  }
  return kExitOk;
}

// -- table / decide -------------------------------------------------------

struct TableArgs {
  std::string checkpoint;
  std::string snr_grid;
  std::string metric = "psnr";
  std::size_t limit = 0;
};

int cmd_table(const Globals& g, const TableArgs& a) {
  const Config c = load_config(g, false);
  const ModelParams<float> model = load_checkpoint(a.checkpoint);
  std::string grid_text = a.snr_grid;
  if (grid_text.empty()) {
    std::ostringstream s;
    s << model.config.snr_low_db << ':' << model.config.snr_high_db << ":1";
    grid_text = s.str();
  }
  TableOptions opt;
  opt.metric = parse_quality_metric(a.metric);
  opt.channel = channel_config(c).model;
  opt.seed = eval_seed(g, c);
  const auto images = eval_images(c, "val", a.limit);
  const TableBuild build = build_rate_quality_table(model, images, parse_grid(grid_text), opt);
  for (const auto& w : build.warnings) {
    std::cerr << "warning: quality drops by " << w.drop << " from l=" << w.l - 1 << " to l=" << w.l << " at "
              << format_db(build.table.snr_grid_db[w.bin]) << " dB\n";
  }
  const fs::path path = out_dir(g) / "table.json";
  save_table(path, build.table,
             snapshot_with(c, {{"table.checkpoint", fs::path(a.checkpoint).stem().string()},
                               {"table.snr_grid", grid_text},
                               {"table.metric", a.metric},
                               {"table.limit", std::to_string(a.limit)},
                               {"table.seed", std::to_string(opt.seed)}}));
  std::cout << "table " << path.string() << "\n";
  std::cout << "monotonicity_warnings " << build.warnings.size() << "\n";
  return kExitOk;
}

int cmd_decide(const std::string& table_path, double snr_db, const std::string& rtp_text) {
  const RateQualityTable table = load_table(table_path);
  const BandwidthDecision d = decide_bandwidth(table, ChannelState::awgn(snr_db), RtpSpec::parse(rtp_text));
  std::cout << "l=" << d.l << (d.achievable ? " achievable" : " not achievable") << "\n";
  std::cout << "bin_snr_db " << format_db(table.snr_grid_db[d.bin]) << "\n";
  std::cout << "expected_quality " << format_db(d.expected_quality) << "\n";
  return kExitOk;
}

// -- keygen / secure-demo -------------------------------------------------

LweParams lwe_params(const Config& c) {
  LweParams p;
  p.dim = static_cast<int>(c.get_int("lwe.dim", p.dim));
  p.q = c.get_int("lwe.q", p.q);
  p.p = c.get_int("lwe.p", p.p);
  p.error_sigma = c.get_double("lwe.sigma", p.error_sigma);
  p.pack = static_cast<int>(c.get_int("lwe.pack", p.pack));
  p.validate();
  return p;
}

int cmd_keygen(const Globals& g) {
  const Config c = load_config(g, false);
  const LweParams p = lwe_params(c);
  const std::uint64_t seed = g.seed ? *g.seed : static_cast<std::uint64_t>(c.get_int("lwe.seed", 1));
  const KeyPair keys = keygen(p, seed);
  const fs::path dir = out_dir(g);
  save_public_key(dir / "public.djk", keys.pk);
  save_secret_key(dir / "secret.djk", keys.sk);
  std::cout << "public " << (dir / "public.djk").string() << "\n";
  std::cout << "secret " << (dir / "secret.djk").string() << "\n";
  std::cout << "decryption_error_std " << p.accumulated_error_std() << " (threshold " << p.q / (2.0 * p.p) << ")\n";
  return kExitOk;
}

struct SecureArgs {
  std::string public_key;
  std::string secret_key;
  double snr_db = 20.0;
  std::string checkpoint;
  std::size_t symbols = 100000;
  std::size_t limit = 100;
  double clip = 3.0;
  double threshold = 1e-3;
};

int cmd_secure_demo(const Globals& g, const SecureArgs& a) {
  const Config c = load_config(g, false);
  const KeyPair keys{load_public_key(a.public_key), load_secret_key(a.secret_key)};
  const std::uint64_t seed = eval_seed(g, c);

  SecureStats total;
  double q_mse = 0.0, f_mse = 0.0, t_mse = 0.0, blocks = 0.0;
  auto accumulate = [&](const SecureStats& s) {
    total.plaintext_symbols += s.plaintext_symbols;
    total.symbol_errors += s.symbol_errors;
    total.channel_integer_errors += s.channel_integer_errors;
    total.channel_uses += s.channel_uses;
    q_mse += s.quantization_mse;
    f_mse += s.failure_mse;
    t_mse += s.total_mse;
    blocks += 1.0;
  };

  ExperimentResult result;
  result.name = "secure";
  result.version = version_string();
  result.seeds = {{"eval", seed}};

  if (a.checkpoint.empty()) {
    // Unit-power Gaussian latents stand in for encoder outputs.
    const auto k = static_cast<int>(std::max<std::size_t>(1, a.symbols / 2));
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < static_cast<std::size_t>(k); start += chunk) {
      const int n = static_cast<int>(std::min(chunk, static_cast<std::size_t>(k) - start));
      ChannelSymbolBlock<double> z{standard_complex_noise<double>(n, seed ^ 0x7a7aULL, start), 1.0};
      accumulate(secure_transmit(z, keys, a.snr_db, seed, a.clip, start).stats);
    }
  } else {
    const ModelParams<float> model = load_checkpoint(a.checkpoint);
    const auto images = eval_images(c, "test", a.limit);
    EvalOptions plain;
    plain.seed = seed;
    const QualityReport clear = evaluate_model(model, images, a.snr_db, model.config.layers, plain);
    EvalOptions secure = plain;
    secure.channel = [&](const ChannelSymbolBlock<float>& block, std::size_t index) {
      ChannelSymbolBlock<double> z{block.symbols.cast<std::complex<double>>(), block.power_budget};
      const SecureResult r = secure_transmit(z, keys, a.snr_db, seed, a.clip, index);
      accumulate(r.stats);
      return ChannelSymbolBlock<float>{r.block.symbols.cast<std::complex<float>>(), block.power_budget};
    };
    const QualityReport enc = evaluate_model(model, images, a.snr_db, model.config.layers, secure);
    const std::string name = fs::path(a.checkpoint).stem().string();
    result.rows.push_back({scheme_tag(model), name, a.snr_db, model.config.layers, clear.psnr_db, clear.ms_ssim});
    result.rows.push_back({"secure", name, a.snr_db, model.config.layers, enc.psnr_db, enc.ms_ssim});
    std::cout << "psnr_plain_db " << format_db(clear.psnr_db) << "\n";
    std::cout << "psnr_secure_db " << format_db(enc.psnr_db) << "\n";
  }

  const double failure_rate =
      total.plaintext_symbols ? static_cast<double>(total.symbol_errors) / static_cast<double>(total.plaintext_symbols) : 0.0;
  const double wire_error_rate =
      total.channel_uses ? static_cast<double>(total.channel_integer_errors) / (2.0 * static_cast<double>(total.channel_uses)) : 0.0;
  std::cout << "plaintext_symbols " << total.plaintext_symbols << "\n";
  std::cout << "channel_uses " << total.channel_uses << "\n";
  std::cout << "ciphertext_integer_error_rate " << wire_error_rate << "\n";
  std::cout << "decryption_failure_rate " << failure_rate << "\n";
  std::cout << "quantization_mse " << (blocks > 0 ? q_mse / blocks : 0.0) << "\n";
  std::cout << "failure_mse " << (blocks > 0 ? f_mse / blocks : 0.0) << "\n";
  std::cout << "total_mse " << (blocks > 0 ? t_mse / blocks : 0.0) << "\n";

  result.config_snapshot = snapshot_with(c, {{"secure.snr_db", format_db(a.snr_db)},
                                             {"secure.clip", format_db(a.clip)},
                                             {"secure.checkpoint", a.checkpoint.empty() ? "" : fs::path(a.checkpoint).stem().string()},
                                             {"secure.failure_rate", format_db(failure_rate)}});
  if (!result.rows.empty()) save_experiment_csv(out_dir(g) / "secure.csv", result);

  if (failure_rate >= a.threshold) {
    std::cout << "FAIL decryption failure rate " << failure_rate << " >= " << a.threshold << "\n";
    return kExitThreshold;
  }
  std::cout << "PASS decryption failure rate below " << a.threshold << "\n";
  return kExitOk;
}

// -- plot -----------------------------------------------------------------

int cmd_plot(const Globals& g, const std::string& csv) {
  const ExperimentResult result = load_experiment_csv(csv);
  const fs::path dir = out_dir(g);
  const std::string stem = fs::path(csv).stem().string();
  int written = 0;
  if (plot_psnr_vs_snr(result, dir / (stem + "_psnr_vs_snr.svg"))) {
    std::cout << "plot " << (dir / (stem + "_psnr_vs_snr.svg")).string() << "\n";
    ++written;
  }
  if (plot_psnr_vs_layers(result, dir / (stem + "_psnr_vs_layers.svg"))) {
    std::cout << "plot " << (dir / (stem + "_psnr_vs_layers.svg")).string() << "\n";
    ++written;
  }
  if (written == 0) std::cerr << "nothing to plot in " << csv << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingPath:
    case ErrorCode::kCorruptImage:
    case ErrorCode::kDiskWriteFailure:
    case ErrorCode::kKeyFileCorrupt:
    case ErrorCode::kCheckpointVersionMismatch:
      return kExitIo;
    case ErrorCode::kBadConfig:
    case ErrorCode::kBadParams:
    case ErrorCode::kBadFractions:
    case ErrorCode::kBadRange:
    case ErrorCode::kUnknownKind:
    case ErrorCode::kLayerOutOfRange:
      return kExitUsage;
    default:
      return kExitThreshold;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep joint source-channel coding toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "Override the run seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.set_version_flag("--version", std::string(version_string()));

  int rc = kExitOk;
  auto* train = app.add_subcommand("train", "Train a model from --config");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Evaluate checkpoints over an SNR x layer grid");
  sweep->add_option("--checkpoint", sweep_args.checkpoints, "Checkpoint file (repeatable)");
  sweep->add_option("--snr", sweep_args.snr_grid, "SNR grid: list or low:high:step")->capture_default_str();
  sweep->add_option("--layers", sweep_args.layers, "Layer counts (default 1..L)");
  sweep->add_option("--name", sweep_args.name, "Result name")->capture_default_str();
  sweep->add_option("--split", sweep_args.split, "val or test")->check(CLI::IsMember({"val", "test"}))->capture_default_str();
  sweep->add_option("--limit", sweep_args.limit, "Evaluate at most N images (0 = all)");
  sweep->add_option("--baseline", sweep_args.baseline_design_snr, "Add separation baseline rows at this design SNR");

  TableArgs table_args;
  auto* table = app.add_subcommand("table", "Build a rate-quality table on the validation split");
  table->add_option("--checkpoint", table_args.checkpoint, "Checkpoint file")->required();
  table->add_option("--snr", table_args.snr_grid, "SNR grid (default: model range, 1 dB bins)");
  table->add_option("--metric", table_args.metric, "psnr or ms_ssim")->capture_default_str();
  table->add_option("--limit", table_args.limit, "Evaluate at most N images (0 = all)");

  std::string table_path, rtp;
  double decide_snr = 0.0;
  auto* decide = app.add_subcommand("decide", "Choose the layer count for a quality target");
  decide->add_option("--table", table_path, "Rate-quality table JSON")->required();
  decide->add_option("--snr", decide_snr, "Current channel SNR (dB)")->required();
  decide->add_option("--rtp", rtp, "Required performance, metric:target")->required();

  auto* keygen_cmd = app.add_subcommand("keygen", "Generate an LWE key pair into --out");

  SecureArgs secure_args;
  auto* secure = app.add_subcommand("secure-demo", "Round trip through LWE encryption and the channel");
  secure->add_option("--public", secure_args.public_key, "Public key file")->required();
  secure->add_option("--secret", secure_args.secret_key, "Secret key file")->required();
  std::string secure_snr = "20";
  secure->add_option("--snr", secure_snr, "Channel SNR in dB ('inf' disables noise)")->capture_default_str();
  secure->add_option("--checkpoint", secure_args.checkpoint, "Also report end-to-end PSNR for this model");
  secure->add_option("--symbols", secure_args.symbols, "Real symbols to send without a model")->capture_default_str();
  secure->add_option("--limit", secure_args.limit, "Test images with a model")->capture_default_str();
  secure->add_option("--clip", secure_args.clip, "Quantizer clip level")->capture_default_str();
  secure->add_option("--threshold", secure_args.threshold, "Failure-rate threshold")->capture_default_str();

  std::string plot_csv;
  auto* plot = app.add_subcommand("plot", "Render SVG plots from a sweep CSV");
  plot->add_option("csv", plot_csv, "Experiment CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) rc = cmd_train(g);
    else if (*sweep) rc = cmd_sweep(g, sweep_args);
    else if (*table) rc = cmd_table(g, table_args);
    else if (*decide) rc = cmd_decide(table_path, decide_snr, rtp);
    else if (*keygen_cmd) rc = cmd_keygen(g);
    else if (*secure) {
      try {
        secure_args.snr_db = parse_double(secure_snr);
      } catch (const Error&) {
        throw UsageError("bad --snr '" + secure_snr + "'");
      }
      rc = cmd_secure_demo(g, secure_args);
    }
    else if (*plot) rc = cmd_plot(g, plot_csv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return rc;
}
