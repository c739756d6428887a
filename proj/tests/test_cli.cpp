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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "djscc/codec.hpp"
#include "djscc/experiment.hpp"
#include "test_util.hpp"

#ifndef DJSCC_CLI_PATH
#error "DJSCC_CLI_PATH must name the djscc binary"
#endif

using namespace djscc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;

  // "key value" lines from stdout.
  std::string field(const std::string& key) const {
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
      if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
    }
    return {};
  }
};

Run run(const std::string& args) {
  const std::string cmd = std::string("DJL_DATA= ") + DJSCC_CLI_PATH + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0;) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string text_of(const fs::path& p) {
  const auto raw = djscc::testing::slurp(p);
  return {raw.begin(), raw.end()};
}

class Workspace {
 public:
  Workspace() : dir_("cli") {
    write_djl1(dir_ / "data.djl", djscc::testing::random_images(40, 3, {16, 16, 3}));
  }
  const fs::path& root() const { return dir_.path(); }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  fs::path write_config(const std::string& name, const std::string& extra) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << "data.path = " << (dir_ / "data.djl").string() << "\n"
                     << "data.shape = 16x16x3\ndata.seed = 4\n"
                     << "codec.widths = 4,6,6,6\ntrain.epochs = 1\ntrain.batch_size = 8\n"
                     << "train.probe_snr_db = 10\nchannel.seed = 9\n"
                     << extra;
    return p;
  }

 private:
  djscc::testing::TempDir dir_;
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").exit_code == 2);
  CHECK(run("train").exit_code == 2);
  CHECK(run("train --config /nonexistent/conf").exit_code == 2);
  CHECK(run("bogus").exit_code == 2);
  CHECK(run("decide --table x.json").exit_code == 2);
  const auto v = run("--version");
  CHECK(v.exit_code == 0);
  CHECK(v.out.rfind("0.1.0", 0) == 0);
}

TEST_CASE("train, sweep, table and decide end to end") {
  Workspace ws;
  const auto conf = ws.write_config("classical.conf", "codec.k = 64\ntrain.snr_range_db = 10:10\n");
  const std::string base = "--config " + conf.string() + " ";

  const auto t1 = run(base + "--out " + (ws / "a").string() + " train");
  REQUIRE(t1.exit_code == 0);
  // 32 training images (0.8 of 40) in batches of 8.
  CHECK(t1.field("steps") == "4");
  const auto model = load_checkpoint(ws / "a" / "model.djc");
  CHECK(model.config.k == 64);
  CHECK(model.metadata.snr_train_low_db == 10.0);
  const std::string log = text_of(ws / "a" / "train_log.csv");
  CHECK(log.rfind("# version = ", 0) == 0);
  CHECK(log.find("# codec.k = 64") != std::string::npos);

  SUBCASE("training is deterministic") {
    REQUIRE(run(base + "--out " + (ws / "b").string() + " train").exit_code == 0);
    CHECK(text_of(ws / "a" / "train_log.csv") == text_of(ws / "b" / "train_log.csv"));
    CHECK(text_of(ws / "a" / "model.djc") == text_of(ws / "b" / "model.djc"));
    REQUIRE(run(base + "--seed 5 --out " + (ws / "c").string() + " train").exit_code == 0);
    CHECK(text_of(ws / "a" / "model.djc") != text_of(ws / "c" / "model.djc"));
  }

  SUBCASE("single-cell sweep is one row and reproducible") {
    const std::string ckpt = (ws / "a" / "model.djc").string();
    const auto s1 = run(base + "--out " + (ws / "s1").string() + " sweep --checkpoint " + ckpt + " --snr 10 --layers 1");
    REQUIRE(s1.exit_code == 0);
    CHECK(s1.field("rows") == "1");
    const auto s2 = run(base + "--out " + (ws / "s2").string() + " sweep --checkpoint " + ckpt + " --snr 10 --layers 1");
    REQUIRE(s2.exit_code == 0);
    CHECK(text_of(ws / "s1" / "sweep.csv") == text_of(ws / "s2" / "sweep.csv"));
    const auto r = load_experiment_csv(ws / "s1" / "sweep.csv");
    CHECK(r.rows[0].scheme == "classical@10");
    CHECK(r.config_snapshot.find("sweep.snr_grid = 10") != std::string::npos);
  }

  SUBCASE("table and decide") {
    const std::string ckpt = (ws / "a" / "model.djc").string();
    REQUIRE(run(base + "--out " + (ws / "t1").string() + " table --checkpoint " + ckpt + " --snr 0:20:5").exit_code == 0);
    REQUIRE(run(base + "--out " + (ws / "t2").string() + " table --checkpoint " + ckpt + " --snr 0:20:5").exit_code == 0);
    CHECK(text_of(ws / "t1" / "table.json") == text_of(ws / "t2" / "table.json"));
    const std::string table = (ws / "t1" / "table.json").string();
    const auto low = run("decide --table " + table + " --snr 12 --rtp psnr:1");
    CHECK(low.exit_code == 0);
    CHECK(low.out.rfind("l=1 achievable", 0) == 0);
    const auto high = run("decide --table " + table + " --snr 12 --rtp psnr:99");
    CHECK(high.exit_code == 0);
    CHECK(high.out.rfind("l=1 not achievable", 0) == 0);
    CHECK(run("decide --table " + table + " --snr 12 --rtp ms_ssim:0.5").exit_code == 2);
    CHECK(run("decide --table " + table + " --snr 12 --rtp psnr:-3").exit_code == 2);
  }

  SUBCASE("missing checkpoint is an I/O error") {
    CHECK(run(base + "--out " + (ws / "x").string() + " sweep --checkpoint " + (ws / "none.djc").string()).exit_code == 3);
  }
}

TEST_CASE("layered sweep grid arithmetic") {
  Workspace ws;
  const auto conf = ws.write_config("layered.conf", "codec.k = 80\ncodec.layers = 5\n");
  const std::string base = "--config " + conf.string() + " ";
  REQUIRE(run(base + "--out " + (ws / "m1").string() + " train").exit_code == 0);
  REQUIRE(run(base + "--seed 2 --out " + (ws / "m2").string() + " train").exit_code == 0);
  fs::copy_file(ws / "m1" / "model.djc", ws / "first.djc");
  fs::copy_file(ws / "m2" / "model.djc", ws / "second.djc");
  const std::string models = "--checkpoint " + (ws / "first.djc").string() + " --checkpoint " + (ws / "second.djc").string();
  const auto s = run(base + "--out " + (ws / "sw").string() + " sweep " + models + " --snr 0:20:1 --limit 2");
  REQUIRE(s.exit_code == 0);
  CHECK(s.field("rows") == "210");
  CHECK(fs::exists(ws / "sw" / "sweep_psnr_vs_snr.svg"));
  CHECK(fs::exists(ws / "sw" / "sweep_psnr_vs_layers.svg"));
  const auto again = run(base + "--out " + (ws / "sw2").string() + " sweep " + models + " --snr 0:20:1 --limit 2");
  CHECK(text_of(ws / "sw" / "sweep.csv") == text_of(ws / "sw2" / "sweep.csv"));

  const auto p = run("--out " + (ws / "plots").string() + " plot " + (ws / "sw" / "sweep.csv").string());
  CHECK(p.exit_code == 0);
  CHECK(text_of(ws / "plots" / "sweep_psnr_vs_snr.svg") == text_of(ws / "sw" / "sweep_psnr_vs_snr.svg"));

  const std::string ckpt = (ws / "first.djc").string();
  REQUIRE(run(base + "--out " + (ws / "t").string() + " table --checkpoint " + ckpt + " --snr 0:20:10 --limit 4").exit_code == 0);
  const auto high = run("decide --table " + (ws / "t" / "table.json").string() + " --snr 3 --rtp psnr:99");
  CHECK(high.out.rfind("l=5 not achievable", 0) == 0);
  CHECK(high.field("bin_snr_db") == "0");
}

TEST_CASE("keygen and secure-demo") {
  Workspace ws;
  REQUIRE(run("--seed 1 --out " + (ws / "k1").string() + " keygen").exit_code == 0);
  REQUIRE(run("--seed 2 --out " + (ws / "k2").string() + " keygen").exit_code == 0);
  REQUIRE(run("--seed 1 --out " + (ws / "k3").string() + " keygen").exit_code == 0);
  CHECK(text_of(ws / "k1" / "secret.djk") == text_of(ws / "k3" / "secret.djk"));
  const std::string pub = (ws / "k1" / "public.djk").string();

  const auto clean = run("secure-demo --public " + pub + " --secret " + (ws / "k1" / "secret.djk").string() +
                         " --snr inf --symbols 20000");
  CHECK(clean.exit_code == 0);
  CHECK(clean.field("decryption_failure_rate") == "0");
  CHECK(clean.field("plaintext_symbols") == "20000");

  const auto wrong = run("secure-demo --public " + pub + " --secret " + (ws / "k2" / "secret.djk").string() +
                         " --snr inf --symbols 20000");
  CHECK(wrong.exit_code == 1);
  CHECK(std::stod(wrong.field("decryption_failure_rate")) >= 1.0 - 2.0 / 64);

  std::ofstream(ws / "junk.djk") << "DJK1 not really";
  CHECK(run("secure-demo --public " + (ws / "junk.djk").string() + " --secret " + pub + " --snr inf").exit_code == 3);
  CHECK(run("secure-demo --public " + pub + " --secret " + pub + " --snr bogus").exit_code == 2);

  const auto conf = ws.write_config("m.conf", "codec.k = 64\n");
  REQUIRE(run("--config " + conf.string() + " --out " + (ws / "m").string() + " train").exit_code == 0);
  const std::string args = "--config " + conf.string() + " --out " + (ws / "sd").string() + " secure-demo --public " + pub +
                           " --secret " + (ws / "k1" / "secret.djk").string() + " --snr inf --checkpoint " +
                           (ws / "m" / "model.djc").string();
  const auto with_model = run(args);
  CHECK(with_model.exit_code == 0);
  // Without noise only quantization separates the two paths.
  CHECK(std::stod(with_model.field("psnr_secure_db")) > std::stod(with_model.field("psnr_plain_db")) - 3.0);
  const auto csv1 = text_of(ws / "sd" / "secure.csv");
  REQUIRE(run(args).exit_code == 0);
  CHECK(text_of(ws / "sd" / "secure.csv") == csv1);
}
