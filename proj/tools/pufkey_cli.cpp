// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace pl = pufkey::pipeline;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;

  pl::ExperimentConfig load() const {
    pl::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = pl::ExperimentConfig::from_json_file(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (format) cfg.format = *format;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PUF key-generation toolkit: transform coding, quantizer/code co-design,\n"
               "fuzzy commitment over BCH, nested-polar Wyner-Ziv key generation, and\n"
               "rate-region computation."};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--config", global.config_path, "Experiment config JSON");
  app.add_option("--seed", global.seed, "Override the config seed");
  app.add_option("--out", global.out_dir, "Override the output directory");
  app.add_option("--format", global.format, "Table format: csv|json")->check(CLI::IsMember({"csv", "json"}));

  auto* gen = app.add_subcommand("gen", "Synthesize an RO dataset from the configured source model");
  auto* ingest = app.add_subcommand("ingest", "Validate and import an RO dataset CSV");
  std::string ingest_path;
  ingest->add_option("csv", ingest_path, "dataset CSV path")->required();
  auto* analyze = app.add_subcommand("analyze", "Estimate statistics, fit coefficient models, score transforms");
  auto* design = app.add_subcommand("design", "Run the quantizer/code co-design (FCS) or nested-polar design (WZ)");
  auto* enroll = app.add_subcommand("enroll", "Enroll a device and persist its helper-data record");
  int device = 0;
  bool unsafe_dump_key = false;
  enroll->add_option("--device", device, "device index")->required();
  enroll->add_flag("--unsafe-dump-key", unsafe_dump_key, "persist the raw key bits in the record (testing only)");
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct a key from a stored record and a measurement");
  int rec_device = 0, rec_measurement = 1;
  reconstruct->add_option("--device", rec_device, "device index")->required();
  reconstruct->add_option("--measurement", rec_measurement, "measurement id (0 = enrollment output)");
  auto* evaluate = app.add_subcommand("evaluate", "Uniqueness, Monte-Carlo key-error rate, region placement");
  int trials = 1000;
  std::string dump_bits;
  evaluate->add_option("--trials", trials, "Monte-Carlo trials");
  evaluate->add_option("--dump-bits", dump_bits, "write extracted bitstreams (one device per line) to this file");
  auto* rates_cmd = app.add_subcommand("rates", "Emit a rate-region boundary and optional code points");
  std::string model = "gs";
  double p_a = 0.15;
  int grid = 101;
  std::vector<std::string> bch_points;
  std::vector<std::string> wz_specs;
  rates_cmd->add_option("--model", model, "fcs|gs|cs");
  rates_cmd->add_option("--p", p_a, "measurement channel crossover p_A");
  rates_cmd->add_option("--grid", grid, "number of boundary points");
  rates_cmd->add_option("--bch", bch_points, "overlay an (n,k) fuzzy-commitment code point, e.g. 255,131");
  rates_cmd->add_option("--wz-spec", wz_specs, "overlay a nested polar spec JSON");

  // Let global flags appear after the subcommand too.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return pl::cmd_gen(global.load());
    if (*ingest) return pl::cmd_ingest(global.load(), ingest_path);
    if (*analyze) return pl::cmd_analyze(global.load());
    if (*design) return pl::cmd_design(global.load());
    if (*enroll) return pl::cmd_enroll(global.load(), device, unsafe_dump_key);
    if (*reconstruct) return pl::cmd_reconstruct(global.load(), rec_device, rec_measurement);
    if (*evaluate) return pl::cmd_evaluate(global.load(), trials, dump_bits);
    if (*rates_cmd) {
      std::string out_dir = global.out_dir.value_or("out");
      std::string format = global.format.value_or("csv");
      return pl::cmd_rates(model, p_a, grid, bch_points, wz_specs, out_dir, format);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kValidationError;
  }
  return pl::kValidationError;
}
