// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/pipeline.hpp"

#include "pufkey/fcs.hpp"
#include "pufkey/normal.hpp"
#include "pufkey/rates.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pufkey::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Substream labels for seed derivation; every randomized stage pulls from its
// own stream so artifacts stay reproducible command by command.
constexpr std::uint64_t kStreamSource = 0x501;
constexpr std::uint64_t kStreamSecret = 0x5EC;
constexpr std::uint64_t kStreamSalt = 0x5A1;
constexpr std::uint64_t kStreamWzDevice = 0xDE7;
constexpr std::uint64_t kStreamWzNoise = 0xAEC;
constexpr std::uint64_t kStreamWzDesign = 0xDE5;
constexpr std::uint64_t kStreamEvaluate = 0xE7A;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset_path(const ExperimentConfig& c) { return c.out_dir + "/dataset.csv"; }
std::string analysis_path(const ExperimentConfig& c) { return c.out_dir + "/analysis.json"; }
std::string design_path(const ExperimentConfig& c) { return c.out_dir + "/design.json"; }
std::string selection_path(const ExperimentConfig& c) { return c.out_dir + "/code_selection.json"; }
std::string wzspec_path(const ExperimentConfig& c) { return c.out_dir + "/wzspec.json"; }
std::string record_path(const ExperimentConfig& c, int device) {
  return c.out_dir + "/records/device_" + std::to_string(device) + ".json";
}

int fail_validation(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kValidationError;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

std::string bit_string(std::span<const std::uint8_t> bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
  return s;
}

std::string key_digest(const std::string& salt_hex, std::span<const std::uint8_t> key) {
  // Test-mode verifier fingerprint; fnv is not cryptographic and the digest
  // never leaves the local out directory.
  return to_hex_u64(fnv1a64(salt_hex + bit_string(key)));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (scheme != "FCS-BCH" && scheme != "WZ-polar") {
    throw std::invalid_argument("unknown scheme '" + scheme + "' (expected FCS-BCH or WZ-polar)");
  }
  if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
  transform::kind_from_name(transform);
  if (quantizer.c_max < 1) throw std::invalid_argument("quantizer.c_max must be positive");
  if (quantizer.key_length < 1) throw std::invalid_argument("quantizer.key_length must be positive");
  if (source.dataset_path.empty()) {
    if (source.rows < 1 || source.cols < 1) throw std::invalid_argument("source dimensions must be positive");
    if (source.devices < 2) throw std::invalid_argument("need at least two devices");
  }
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("source")) {
    const auto& s = j["source"];
    c.source.dataset_path = s.value("dataset", "");
    c.source.rows = s.value("rows", c.source.rows);
    c.source.cols = s.value("cols", c.source.cols);
    c.source.sigma2 = s.value("sigma2", c.source.sigma2);
    c.source.rho = s.value("rho", c.source.rho);
    c.source.noise_variance = s.value("noise_variance", c.source.noise_variance);
    c.source.mean_hz = s.value("mean_hz", c.source.mean_hz);
    c.source.devices = s.value("devices", c.source.devices);
    c.source.measurements = s.value("measurements", c.source.measurements);
  }
  c.transform = j.value("transform", c.transform);
  if (j.contains("quantizer")) {
    const auto& q = j["quantizer"];
    c.quantizer.c_max = q.value("c_max", c.quantizer.c_max);
    c.quantizer.target_pb = q.value("target_pb", c.quantizer.target_pb);
    c.quantizer.key_length = q.value("key_length", c.quantizer.key_length);
  }
  c.scheme = j.value("scheme", c.scheme);
  if (j.contains("fcs")) c.fcs_code = j["fcs"].value("code", c.fcs_code);
  if (j.contains("wz")) {
    const auto& w = j["wz"];
    c.wz.n = w.value("n", c.wz.n);
    c.wz.key_length = w.value("key_length", c.wz.key_length);
    c.wz.p_a = w.value("p_A", c.wz.p_a);
    c.wz.target_pb = w.value("target_pb", c.wz.target_pb);
    c.wz.list_size = w.value("list_size", c.wz.list_size);
    c.wz.construction_trials = w.value("construction_trials", c.wz.construction_trials);
    c.wz.sweep_trials = w.value("sweep_trials", c.wz.sweep_trials);
    c.wz.distortion_trials = w.value("distortion_trials", c.wz.distortion_trials);
  }
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out", c.out_dir);
  c.format = j.value("format", c.format);
  c.test_mode = j.value("test_mode", c.test_mode);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) { return from_json(slurp(path)); }

std::string ExperimentConfig::to_json() const {
  json j;
  j["source"] = {{"dataset", source.dataset_path}, {"rows", source.rows},
                 {"cols", source.cols},            {"sigma2", source.sigma2},
                 {"rho", source.rho},              {"noise_variance", source.noise_variance},
                 {"mean_hz", source.mean_hz},      {"devices", source.devices},
                 {"measurements", source.measurements}};
  j["transform"] = transform;
  j["quantizer"] = {{"c_max", quantizer.c_max}, {"target_pb", quantizer.target_pb}, {"key_length", quantizer.key_length}};
  j["scheme"] = scheme;
  j["fcs"] = {{"code", fcs_code}};
  j["wz"] = {{"n", wz.n},
             {"key_length", wz.key_length},
             {"p_A", wz.p_a},
             {"target_pb", wz.target_pb},
             {"list_size", wz.list_size},
             {"construction_trials", wz.construction_trials},
             {"sweep_trials", wz.sweep_trials},
             {"distortion_trials", wz.distortion_trials}};
  j["seed"] = seed;
  j["out"] = out_dir;
  j["format"] = format;
  j["test_mode"] = test_mode;
  return j.dump(2);
}

std::string ExperimentConfig::config_hash() const { return to_hex_u64(fnv1a64(to_json())); }

const Analysis::PerTransform& Analysis::get(const std::string& name) const {
  for (const auto& [n, t] : transforms) {
    if (n == name) return t;
  }
  throw std::invalid_argument("analysis has no transform '" + name + "'");
}

std::string Analysis::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["rows"] = rows;
  j["cols"] = cols;
  j["noise_variance"] = noise_variance;
  json ts;
  for (const auto& [name, t] : transforms) {
    json models = json::array();
    for (const auto& m : t.models) {
      models.push_back({{"mean", m.mean}, {"stddev", m.stddev}, {"noise_std_eq", m.noise_std_eq}});
    }
    json entry{{"eta_sample", t.eta_sample}, {"models", std::move(models)}};
    if (t.eta_analytic) entry["eta_analytic"] = *t.eta_analytic;
    ts[name] = std::move(entry);
  }
  j["transforms"] = std::move(ts);
  if (klt_basis.size() > 0) j["klt_basis"] = matrix_to_json(klt_basis);
  return j.dump();
}

Analysis Analysis::from_json(const std::string& text) {
  json j = json::parse(text);
  Analysis a;
  a.config_hash = j.value("config_hash", "");
  a.rows = j.at("rows").get<int>();
  a.cols = j.at("cols").get<int>();
  a.noise_variance = j.at("noise_variance").get<double>();
  for (const auto& [name, entry] : j.at("transforms").items()) {
    PerTransform t;
    t.eta_sample = entry.value("eta_sample", 0.0);
    if (entry.contains("eta_analytic")) t.eta_analytic = entry["eta_analytic"].get<double>();
    for (const auto& m : entry.at("models")) {
      t.models.push_back({m.at("mean").get<double>(), m.at("stddev").get<double>(), m.at("noise_std_eq").get<double>()});
    }
    a.transforms.emplace_back(name, std::move(t));
  }
  if (j.contains("klt_basis")) a.klt_basis = matrix_from_json(j["klt_basis"]);
  return a;
}

source::RODataset load_dataset(const ExperimentConfig& config) {
  return source::ingest_csv(dataset_path(config));
}

transform::Plan plan_for(const ExperimentConfig& config, const Analysis& analysis) {
  auto kind = transform::kind_from_name(config.transform);
  if (kind == transform::Kind::Klt) {
    if (analysis.klt_basis.size() == 0) throw std::invalid_argument("analysis lacks a KLT basis");
    return transform::Plan{kind, analysis.rows, analysis.cols, analysis.klt_basis};
  }
  return transform::make_plan(kind, analysis.rows, analysis.cols);
}

int cmd_gen(const ExperimentConfig& config) {
  try {
    config.validate();
    if (!config.source.dataset_path.empty()) {
      return fail_validation("gen: config points at an external dataset; nothing to synthesize");
    }
    fs::create_directories(config.out_dir);
    auto params = source::default_synthetic_params(config.source.rows, config.source.cols, config.source.sigma2,
                                                   config.source.rho, config.source.noise_variance,
                                                   config.source.mean_hz);
    auto ds = source::generate_synthetic(params, config.source.devices, config.source.measurements,
                                         derive_seed(config.seed, kStreamSource));
    source::write_csv(ds, dataset_path(config));
    std::cout << "gen: " << ds.devices.size() << " devices, " << params.length() << " oscillators, "
              << config.source.measurements << " noisy measurements -> " << dataset_path(config) << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

int cmd_ingest(const ExperimentConfig& config, const std::string& csv_path) {
  try {
    auto ds = source::ingest_csv(csv_path);
    fs::create_directories(config.out_dir);
    source::write_csv(ds, dataset_path(config));
    std::cout << "ingest: " << ds.devices.size() << " devices, l=" << ds.params.length()
              << ", noise_variance=" << ds.params.noise_variance << " -> " << dataset_path(config) << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

int cmd_analyze(const ExperimentConfig& config) {
  try {
    config.validate();
    if (!fs::exists(dataset_path(config))) {
      if (!config.source.dataset_path.empty()) {
        int rc = cmd_ingest(config, config.source.dataset_path);
        if (rc != kOk) return rc;
      } else {
        int rc = cmd_gen(config);
        if (rc != kOk) return rc;
      }
    }
    auto ds = load_dataset(config);
    auto stats = [&] {
      try {
        return source::estimate_statistics(ds);
      } catch (const std::invalid_argument&) {
        // No repeated measurements: keep the covariance path, take the noise
        // model from the sidecar.
        source::SourceStats st;
        int l = ds.params.length();
        st.sample_mean = Eigen::VectorXd::Zero(l);
        for (const auto& d : ds.devices) st.sample_mean += d.noiseless;
        st.sample_mean /= static_cast<double>(ds.devices.size());
        st.sample_autocovariance = Eigen::MatrixXd::Zero(l, l);
        for (const auto& d : ds.devices) {
          Eigen::VectorXd c = d.noiseless - st.sample_mean;
          st.sample_autocovariance.noalias() += c * c.transpose();
        }
        st.sample_autocovariance /= static_cast<double>(ds.devices.size() - 1);
        st.estimated_noise_variance = ds.params.noise_variance;
        return st;
      }
    }();

    Analysis analysis;
    analysis.config_hash = config.config_hash();
    analysis.rows = ds.params.rows;
    analysis.cols = ds.params.cols;
    analysis.noise_variance = stats.estimated_noise_variance;
    analysis.klt_basis = transform::fit_klt(stats.sample_autocovariance);

    // Model covariance is available only for the synthetic fixture.
    std::optional<Eigen::MatrixXd> model_cov;
    if (config.source.dataset_path.empty()) {
      model_cov = source::default_synthetic_params(config.source.rows, config.source.cols, config.source.sigma2,
                                                   config.source.rho, config.source.noise_variance,
                                                   config.source.mean_hz)
                      .autocovariance;
    }

    double noise_std = std::sqrt(analysis.noise_variance);
    for (const char* name : {"dct", "dwht", "dht", "klt"}) {
      auto kind = transform::kind_from_name(name);
      transform::Plan plan = kind == transform::Kind::Klt
                                 ? transform::Plan{kind, analysis.rows, analysis.cols, analysis.klt_basis}
                                 : transform::make_plan(kind, analysis.rows, analysis.cols);
      Analysis::PerTransform t;
      auto coeff_cov = transform::coefficient_autocovariance(plan, stats.sample_autocovariance);
      t.eta_sample = transform::decorrelation_efficiency(coeff_cov, stats.sample_autocovariance);
      if (model_cov) {
        t.eta_analytic =
            transform::decorrelation_efficiency(transform::coefficient_autocovariance(plan, *model_cov), *model_cov);
      }
      // Per-coefficient Gaussian models across devices.
      int l = ds.params.length();
      std::vector<std::vector<double>> samples(static_cast<std::size_t>(l));
      for (const auto& d : ds.devices) {
        auto coeffs = transform::forward(plan, d.noiseless);
        for (int i = 0; i < l; ++i) samples[static_cast<std::size_t>(i)].push_back(coeffs(i));
      }
      t.models.resize(static_cast<std::size_t>(l));
      for (int i = 0; i < l; ++i) {
        auto fit = quantizer::fit_gaussian(samples[static_cast<std::size_t>(i)]);
        t.models[static_cast<std::size_t>(i)] = {fit.mean, fit.stddev, noise_std / fit.stddev};
      }
      analysis.transforms.emplace_back(name, std::move(t));
    }

    atomic_write_file(analysis_path(config), analysis.to_json());

    // Efficiency table, one row per transform.
    if (config.format == "json") {
      json rows = json::array();
      for (const auto& [name, t] : analysis.transforms) {
        json row{{"transform", name}, {"eta_sample", t.eta_sample}};
        if (t.eta_analytic) row["eta_analytic"] = *t.eta_analytic;
        rows.push_back(std::move(row));
      }
      atomic_write_file(config.out_dir + "/efficiency.json",
                        json{{"config_hash", analysis.config_hash}, {"rows", rows}}.dump(2) + "\n");
    } else {
      std::ostringstream out;
      out << "transform,eta_sample,eta_analytic\n";
      for (const auto& [name, t] : analysis.transforms) {
        out << name << ',' << t.eta_sample << ',';
        if (t.eta_analytic) out << *t.eta_analytic;
        out << '\n';
      }
      atomic_write_file(config.out_dir + "/efficiency.csv", out.str());
    }
    for (const auto& [name, t] : analysis.transforms) {
      std::cout << "analyze: " << name << " eta_sample=" << t.eta_sample;
      if (t.eta_analytic) std::cout << " eta_analytic=" << *t.eta_analytic;
      std::cout << "\n";
    }
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

namespace {

struct FcsDesignArtifacts {
  quantizer::Design extraction;  // one bit per selected coefficient
  std::string code_name;
};

json design_to_json(const quantizer::Design& d, const std::string& code_name, const std::string& config_hash) {
  json j = json::parse(d.to_json());
  j["content_hash"] = d.content_hash();
  j["code"] = code_name;
  j["config_hash"] = config_hash;
  j["target_pb"] = d.target_pb;
  return j;
}

quantizer::Design design_from_json(const json& j) {
  quantizer::Design d;
  d.c_max = j.at("c_max").get<int>();
  d.threshold = j.at("threshold").get<double>();
  d.target_pb = j.value("target_pb", 1e-9);
  d.bits = j.at("bits_per_coeff").get<std::vector<int>>();
  d.total_bits = j.at("n").get<int>();
  d.required_correction = j.at("e").get<int>();
  return d;
}

FcsDesignArtifacts load_fcs_design(const ExperimentConfig& config) {
  json j = json::parse(slurp(design_path(config)));
  FcsDesignArtifacts art;
  art.extraction = design_from_json(j);
  art.code_name = j.at("code").get<std::string>();
  return art;
}

}  // namespace

int cmd_design(const ExperimentConfig& config) {
  try {
    config.validate();
    fs::create_directories(config.out_dir);

    if (config.scheme == "WZ-polar") {
      wz::DesignOptions opt;
      opt.list_size = config.wz.list_size;
      opt.construction_trials = config.wz.construction_trials;
      opt.sweep_trials = config.wz.sweep_trials;
      opt.distortion_trials = config.wz.distortion_trials;
      auto report = wz::design_nested(config.wz.n, config.wz.key_length, config.wz.p_a, config.wz.target_pb,
                                      derive_seed(config.seed, kStreamWzDesign), opt);
      atomic_write_file(config.out_dir + "/wz_design_report.json", report.to_json() + "\n");
      if (!report.feasible) {
        std::cerr << "design: infeasible: " << report.infeasible_reason << "\n";
        return kInfeasible;
      }
      atomic_write_file(wzspec_path(config), report.spec.to_json() + "\n");
      std::cout << "design: WZ-polar n=" << report.spec.n << " key=" << report.spec.key_length()
                << " m1=" << report.spec.m1() << " m2=" << report.spec.m2() << " p_c=" << report.p_c
                << " E[q]=" << report.target_distortion << " measured=" << report.measured_distortion
                << (report.surrogate_extrapolation ? " (extrapolated target)" : "") << "\n";
      return kOk;
    }

    // FCS path. Design-table analogue over the published C_max range plus the
    // configured value.
    if (!fs::exists(analysis_path(config))) {
      int rc = cmd_analyze(config);
      if (rc != kOk) return rc;
    }
    auto analysis = Analysis::from_json(slurp(analysis_path(config)));
    const auto& models = analysis.get(config.transform).models;
    int l = static_cast<int>(models.size());
    std::vector<int> c_max_values{16, 17, 18, 19, 20};
    if (std::find(c_max_values.begin(), c_max_values.end(), config.quantizer.c_max) == c_max_values.end()) {
      c_max_values.push_back(config.quantizer.c_max);
    }
    std::ostringstream table;
    table << "c_max,threshold,k_max,n,e\n";
    quantizer::Design chosen;
    for (int c_max : c_max_values) {
      auto d = quantizer::allocate_bits(models, c_max, config.quantizer.target_pb);
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.6f", d.threshold);
      table << c_max << ',' << buf << ',' << d.k_max() << ',' << d.total_bits << ',' << d.required_correction << '\n';
      if (c_max == config.quantizer.c_max) chosen = d;
    }
    atomic_write_file(config.out_dir + "/table_design.csv", table.str());

    if (chosen.total_bits < config.quantizer.key_length) {
      std::cerr << "design: infeasible: n(C_max=" << chosen.c_max << ") = " << chosen.total_bits
                << " is less than the required key length " << config.quantizer.key_length << "\n";
      return kInfeasible;
    }

    // Final extraction imposes one bit per coefficient; the exact block-error
    // evaluation then runs over independent per-coefficient bit errors.
    struct Candidate {
      std::string name;
      int n, k, t;
      double p_b;
      bool accepted;
    };
    std::vector<Candidate> candidates;
    std::vector<std::pair<double, int>> reliability;  // (P_c(1), index), best first
    for (int i = 1; i < l; ++i) {
      reliability.emplace_back(quantizer::correctness_probability(1, models[static_cast<std::size_t>(i)].noise_std_eq), i);
    }
    std::sort(reliability.begin(), reliability.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });

    std::string chosen_code;
    std::vector<int> chosen_coeffs;
    for (const char* name : {"bch_255_131", "bch_31_16", "bch_15_7"}) {
      auto code = code::make_code(name);
      if (code->length() > l - 1) continue;
      if (code->dimension() < config.quantizer.key_length) continue;
      std::vector<int> coeffs;
      fcs::ErrorProfile prof;
      for (int j = 0; j < code->length(); ++j) {
        prof.correctness.push_back(reliability[static_cast<std::size_t>(j)].first);
        coeffs.push_back(reliability[static_cast<std::size_t>(j)].second);
      }
      double p_b = fcs::block_error_exact(prof, code->correction_radius());
      bool ok = p_b <= config.quantizer.target_pb;
      candidates.push_back({name, code->length(), code->dimension(), code->correction_radius(), p_b, ok});
      if (ok && chosen_code.empty()) {
        chosen_code = name;
        chosen_coeffs = coeffs;
      }
    }

    json sel;
    sel["config_hash"] = config.config_hash();
    sel["transform"] = config.transform;
    json cand_json = json::array();
    for (const auto& c : candidates) {
      cand_json.push_back({{"code", c.name},
                           {"n", c.n},
                           {"k", c.k},
                           {"t", c.t},
                           {"exact_p_b", c.p_b},
                           {"accepted", c.accepted}});
    }
    sel["candidates"] = std::move(cand_json);
    sel["target_pb"] = config.quantizer.target_pb;
    sel["chosen"] = chosen_code;
    atomic_write_file(selection_path(config), sel.dump(2) + "\n");

    if (chosen_code.empty()) {
      std::cerr << "design: infeasible: no registered code meets P_B <= " << config.quantizer.target_pb
                << " with dimension >= " << config.quantizer.key_length << "\n";
      return kInfeasible;
    }

    quantizer::Design extraction;
    extraction.c_max = chosen.c_max;
    extraction.threshold = chosen.threshold;
    extraction.target_pb = config.quantizer.target_pb;
    extraction.bits.assign(static_cast<std::size_t>(l), 0);
    for (int i : chosen_coeffs) extraction.bits[static_cast<std::size_t>(i)] = 1;
    extraction.total_bits = static_cast<int>(chosen_coeffs.size());
    extraction.required_correction = std::min(chosen.c_max, extraction.total_bits);
    atomic_write_file(design_path(config),
                      design_to_json(extraction, chosen_code, config.config_hash()).dump(2) + "\n");

    for (const auto& c : candidates) {
      std::cout << "design: candidate " << c.name << " exact P_B = " << c.p_b
                << (c.accepted ? " (accepted)" : " (rejected)") << "\n";
    }
    std::cout << "design: chosen " << chosen_code << ", extraction of " << extraction.total_bits
              << " bits, quantizer hash " << extraction.content_hash() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

std::vector<std::uint8_t> device_bits_fcs(const ExperimentConfig& config, const Analysis& analysis,
                                          const Eigen::VectorXd& array) {
  auto art = load_fcs_design(config);
  auto plan = plan_for(config, analysis);
  auto coeffs = transform::forward(plan, array);
  return quantizer::extract_bits(art.extraction, analysis.get(config.transform).models, coeffs).bits;
}

std::vector<std::uint8_t> device_bits_wz(const ExperimentConfig& config, int device) {
  Rng rng(derive_seed(derive_seed(config.seed, kStreamWzDevice), static_cast<std::uint64_t>(device)));
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(config.wz.n));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
  return bits;
}

int cmd_enroll(const ExperimentConfig& config, int device, bool unsafe_dump_key) {
  try {
    config.validate();
    fs::create_directories(config.out_dir + "/records");
    std::string salt = to_hex_u64(derive_seed(derive_seed(config.seed, kStreamSalt), static_cast<std::uint64_t>(device)));

    json record;
    std::vector<std::uint8_t> key;
    if (config.scheme == "FCS-BCH") {
      auto analysis = Analysis::from_json(slurp(analysis_path(config)));
      auto ds = load_dataset(config);
      if (device < 0 || device >= static_cast<int>(ds.devices.size())) {
        return fail_validation("enroll: device index out of range");
      }
      auto art = load_fcs_design(config);
      auto code = code::make_code(art.code_name);
      auto x = device_bits_fcs(config, analysis, ds.devices[static_cast<std::size_t>(device)].noiseless);
      if (static_cast<int>(x.size()) != code->length()) {
        return fail_validation("enroll: extracted " + std::to_string(x.size()) + " bits but the code needs " +
                               std::to_string(code->length()));
      }
      Rng rng(derive_seed(derive_seed(config.seed, kStreamSecret), static_cast<std::uint64_t>(device)));
      key.resize(static_cast<std::size_t>(code->dimension()));
      for (auto& b : key) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
      auto rec = fcs::enroll(*code, x, key, art.extraction.content_hash());
      record = json::parse(rec.to_json());
    } else {
      auto spec = wz::NestedPolarSpec::from_json(slurp(wzspec_path(config)));
      auto x = device_bits_wz(config, device);
      auto enr = wz::enroll(spec, x, spec.e_q);
      key = enr.secret;
      record["scheme"] = "WZ-polar";
      record["spec_hash"] = spec.spec_hash();
      record["helper_bits"] = enr.helper.size();
      record["helper_hex"] = bits_to_hex(enr.helper);
      record["distortion"] = enr.distortion;
    }
    record["device"] = device;
    record["config_hash"] = config.config_hash();
    if (config.test_mode) {
      record["key_check"] = {{"salt", salt}, {"digest", key_digest(salt, key)}};
    }
    if (unsafe_dump_key) record["unsafe_key_bits"] = bit_string(key);
    atomic_write_file(record_path(config, device), record.dump(2) + "\n");
    std::cout << "enroll: device " << device << " -> " << record_path(config, device) << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

int cmd_reconstruct(const ExperimentConfig& config, int device, int measurement) {
  try {
    config.validate();
    json record = json::parse(slurp(record_path(config, device)));
    std::optional<std::vector<std::uint8_t>> key;

    if (config.scheme == "FCS-BCH") {
      auto analysis = Analysis::from_json(slurp(analysis_path(config)));
      auto ds = load_dataset(config);
      if (device < 0 || device >= static_cast<int>(ds.devices.size())) {
        return fail_validation("reconstruct: device index out of range");
      }
      const auto& dev = ds.devices[static_cast<std::size_t>(device)];
      Eigen::VectorXd y_array;
      if (measurement == 0) {
        y_array = dev.noiseless;
      } else if (measurement >= 1 && measurement <= static_cast<int>(dev.measurements.size())) {
        y_array = dev.measurements[static_cast<std::size_t>(measurement - 1)];
      } else {
        return fail_validation("reconstruct: measurement index out of range");
      }
      auto rec = fcs::EnrollmentRecord::from_json(record.dump());
      auto code = code::make_code(rec.code_name);
      auto y = device_bits_fcs(config, analysis, y_array);
      key = fcs::reconstruct(*code, rec, y);
    } else {
      auto spec = wz::NestedPolarSpec::from_json(slurp(wzspec_path(config)));
      auto x = device_bits_wz(config, device);
      auto y = x;
      // Measurement 0 is the noiseless enrollment output, ids >= 1 add fresh
      // measurement-channel noise, mirroring the dataset convention.
      if (measurement > 0) {
        Rng noise(derive_seed(derive_seed(config.seed, kStreamWzNoise),
                              static_cast<std::uint64_t>(device) * 100003ull + static_cast<std::uint64_t>(measurement)));
        for (auto& b : y) {
          if (noise.bernoulli(config.wz.p_a)) b ^= 1u;
        }
      }
      std::size_t n_bits = record.at("helper_bits").get<std::size_t>();
      auto helper = hex_to_bits(record.at("helper_hex").get<std::string>(), n_bits);
      double p_total = spec.e_q * (1.0 - config.wz.p_a) + (1.0 - spec.e_q) * config.wz.p_a;
      key = wz::reconstruct(spec, y, helper, p_total);
    }

    if (!key) {
      std::cout << "reconstruct: verdict=decode-failure\n";
      return kDecodeFailure;
    }
    if (record.contains("key_check")) {
      const auto& kc = record["key_check"];
      bool match = key_digest(kc.at("salt").get<std::string>(), *key) == kc.at("digest").get<std::string>();
      std::cout << "reconstruct: verdict=" << (match ? "match" : "mismatch") << "\n";
      return match ? kOk : kDecodeFailure;
    }
    std::cout << "reconstruct: verdict=decoded (no key check stored; production mode)\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

UniquenessResult uniqueness(const std::vector<std::vector<std::uint8_t>>& sequences, RunPolicy policy) {
  std::size_t d = sequences.size();
  if (d < 2) throw std::invalid_argument("uniqueness: need at least two sequences");
  std::size_t n = sequences.front().size();
  for (const auto& s : sequences) {
    if (s.size() != n) throw std::invalid_argument("uniqueness: ragged sequences");
  }
  if (n == 0) throw std::invalid_argument("uniqueness: empty sequences");

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  std::vector<std::size_t> dist(pairs.size());
  if (policy == RunPolicy::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
      dist[static_cast<std::size_t>(i)] =
          hamming_distance(sequences[static_cast<std::size_t>(pairs[static_cast<std::size_t>(i)].first)],
                           sequences[static_cast<std::size_t>(pairs[static_cast<std::size_t>(i)].second)]);
    }
  } else {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      dist[i] = hamming_distance(sequences[static_cast<std::size_t>(pairs[i].first)],
                                 sequences[static_cast<std::size_t>(pairs[i].second)]);
    }
  }

  UniquenessResult res;
  res.pairs = pairs.size();
  double sum = 0.0;
  for (auto v : dist) sum += static_cast<double>(v) / static_cast<double>(n);
  res.mean = sum / static_cast<double>(pairs.size());
  double sq = 0.0;
  for (auto v : dist) {
    double f = static_cast<double>(v) / static_cast<double>(n) - res.mean;
    sq += f * f;
  }
  res.variance = sq / static_cast<double>(pairs.size());
  return res;
}

int cmd_evaluate(const ExperimentConfig& config, int trials, const std::string& dump_bits_path) {
  try {
    config.validate();
    auto t_start = std::chrono::steady_clock::now();
    json report;
    report["config_hash"] = config.config_hash();
    report["scheme"] = config.scheme;
    report["ci_method"] = "wilson-95";

    std::vector<std::vector<std::uint8_t>> sequences;
    double rs = 0, rl = 0, rw = 0;
    WilsonInterval ker{0, 0, 0};
    std::uint64_t errors = 0;

    if (config.scheme == "FCS-BCH") {
      auto analysis = Analysis::from_json(slurp(analysis_path(config)));
      auto ds = load_dataset(config);
      if (ds.devices.size() < 2) return fail_validation("evaluate: need at least two devices");
      auto art = load_fcs_design(config);
      auto code = code::make_code(art.code_name);
      for (const auto& dev : ds.devices) {
        sequences.push_back(device_bits_fcs(config, analysis, dev.noiseless));
      }

      int d_count = static_cast<int>(ds.devices.size());
      std::vector<std::uint8_t> trial_error(static_cast<std::size_t>(trials), 0);
#pragma omp parallel for schedule(dynamic, 8)
      for (int t = 0; t < trials; ++t) {
        int dev = t % d_count;
        const auto& rec_dev = ds.devices[static_cast<std::size_t>(dev)];
        Rng rng(derive_seed(derive_seed(config.seed, kStreamSecret), static_cast<std::uint64_t>(dev)));
        std::vector<std::uint8_t> key(static_cast<std::size_t>(code->dimension()));
        for (auto& b : key) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
        auto rec = fcs::enroll(*code, sequences[static_cast<std::size_t>(dev)], key, "");
        auto y_array = source::measure(rec_dev.noiseless, ds.params,
                                       derive_seed(derive_seed(config.seed, kStreamEvaluate), static_cast<std::uint64_t>(t)));
        auto y = device_bits_fcs(config, analysis, y_array);
        auto got = fcs::reconstruct(*code, rec, y);
        trial_error[static_cast<std::size_t>(t)] = (!got || *got != key) ? 1 : 0;
      }
      for (auto e : trial_error) errors += e;
      ker = wilson_interval(errors, static_cast<std::uint64_t>(trials));

      rs = static_cast<double>(code->dimension()) / code->length();
      rl = 1.0 - rs;
      rw = 1.0;  // the fuzzy commitment stores a full n-bit helper string

      // Region placement against the FCS key-leakage region at the average
      // one-bit error probability of the used coefficients.
      const auto& models = analysis.get(config.transform).models;
      double avg_err = 0.0;
      int used = 0;
      for (std::size_t i = 0; i < art.extraction.bits.size(); ++i) {
        if (art.extraction.bits[i] == 0) continue;
        avg_err += 1.0 - quantizer::correctness_probability(1, models[i].noise_std_eq);
        ++used;
      }
      avg_err /= std::max(1, used);
      auto [rs_max, rl_min] = rates::fcs_region_point(avg_err);
      report["channel"] = {{"p_bar", avg_err}};
      report["region_gap"] = {{"key_rate_gap", rs_max - rs}, {"leakage_gap", rl - rl_min}};

      std::ostringstream csv;
      csv << "q,R_s,R_ell,R_w\n";
      for (int i = 0; i <= 50; ++i) {
        double r = rs_max * i / 50.0;
        csv << r << ',' << r << ',' << 1.0 - r << ",1\n";
      }
      csv << "# point," << rs << ',' << rl << ',' << rw << '\n';
      atomic_write_file(config.out_dir + "/evaluation_region.csv", csv.str());
    } else {
      auto spec = wz::NestedPolarSpec::from_json(slurp(wzspec_path(config)));
      int d_count = std::max(2, config.source.devices);
      for (int dev = 0; dev < d_count; ++dev) sequences.push_back(device_bits_wz(config, dev));

      auto est = wz::system_ker(spec, config.wz.p_a, trials, derive_seed(config.seed, kStreamEvaluate));
      errors = static_cast<std::uint64_t>(est.errors);
      ker = est.wilson();

      rs = static_cast<double>(spec.key_length()) / spec.n;
      rw = static_cast<double>(spec.m2()) / spec.n;
      rl = rw;

      std::vector<double> grid;
      for (int i = 0; i <= 50; ++i) grid.push_back(0.5 * i / 50.0);
      auto b = rates::gs_region_boundary(config.wz.p_a, grid);
      double min_rw = 2.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (b.tuples[i].key_rate >= rs) min_rw = std::min(min_rw, b.tuples[i].storage_rate);
      }
      report["region_gap"] = {{"storage_gap", rw - min_rw}};
      std::ostringstream csv;
      csv << "q,R_s,R_ell,R_w\n";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        csv << grid[i] << ',' << b.tuples[i].key_rate << ',' << b.tuples[i].leakage_rate << ','
            << b.tuples[i].storage_rate << '\n';
      }
      csv << "# point," << rs << ',' << rl << ',' << rw << '\n';
      atomic_write_file(config.out_dir + "/evaluation_region.csv", csv.str());
    }

    auto uniq = uniqueness(sequences);
    report["uniqueness"] = {{"mean", uniq.mean}, {"variance", uniq.variance}, {"pairs", uniq.pairs}};
    report["key_error"] = {{"trials", trials}, {"errors", errors}, {"rate", ker.rate}, {"ci_lo", ker.lo}, {"ci_hi", ker.hi}};
    report["rate_tuple"] = {{"R_s", rs}, {"R_ell", rl}, {"R_w", rw}};
    auto t_end = std::chrono::steady_clock::now();
    report["runtime_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count();
    fs::create_directories(config.out_dir);
    atomic_write_file(config.out_dir + "/evaluation.json", report.dump(2) + "\n");

    if (!dump_bits_path.empty()) {
      std::ostringstream bits;
      for (const auto& s : sequences) bits << bit_string(s) << '\n';
      atomic_write_file(dump_bits_path, bits.str());
    }

    std::cout << "evaluate: uniqueness mean=" << uniq.mean << " var=" << uniq.variance << " over " << uniq.pairs
              << " pairs\n";
    std::cout << "evaluate: key-error " << errors << "/" << trials << " (wilson [" << ker.lo << ", " << ker.hi
              << "])\n";
    std::cout << "evaluate: rates R_s=" << rs << " R_ell=" << rl << " R_w=" << rw << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

int cmd_rates(const std::string& model, double p_a, int grid_points, const std::vector<std::string>& bch_points,
              const std::vector<std::string>& wz_spec_paths, const std::string& out_dir, const std::string& format) {
  try {
    if (grid_points < 2) throw std::invalid_argument("rates: need at least two grid points");
    fs::create_directories(out_dir);

    std::vector<double> grid;
    std::vector<rates::RateTuple> tuples;
    if (model == "gs" || model == "cs") {
      for (int i = 0; i < grid_points; ++i) grid.push_back(0.5 * i / (grid_points - 1));
      auto b = model == "gs" ? rates::gs_region_boundary(p_a, grid) : rates::cs_region_boundary(p_a, grid);
      tuples = b.tuples;
    } else if (model == "fcs") {
      auto [rs_max, rl_min] = rates::fcs_region_point(p_a);
      for (int i = 0; i < grid_points; ++i) {
        double r = rs_max * i / (grid_points - 1);
        grid.push_back(r);
        tuples.push_back({r, 1.0 - r, 1.0});
      }
      (void)rl_min;
    } else {
      throw std::invalid_argument("rates: unknown model '" + model + "' (fcs|gs|cs)");
    }

    std::string boundary_path = out_dir + "/rates_" + model + (format == "json" ? ".json" : ".csv");
    if (format == "json") {
      json rows = json::array();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({{"q", grid[i]},
                        {"R_s", tuples[i].key_rate},
                        {"R_ell", tuples[i].leakage_rate},
                        {"R_w", tuples[i].storage_rate}});
      }
      atomic_write_file(boundary_path, json{{"model", model}, {"p_A", p_a}, {"rows", rows}}.dump(2) + "\n");
    } else {
      std::ostringstream out;
      out << "q,R_s,R_ell,R_w\n";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        out << grid[i] << ',' << tuples[i].key_rate << ',' << tuples[i].leakage_rate << ','
            << tuples[i].storage_rate << '\n';
      }
      atomic_write_file(boundary_path, out.str());
      atomic_write_file(out_dir + "/rates_" + model + ".meta.json",
                        json{{"model", model}, {"p_A", p_a}}.dump() + "\n");
    }

    std::ostringstream pts;
    pts << "label,R_s,R_ell,R_w\n";
    bool any_points = false;
    for (const auto& spec_str : bch_points) {
      auto comma = spec_str.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("rates: --bch expects n,k");
      int n = std::stoi(spec_str.substr(0, comma));
      int k = std::stoi(spec_str.substr(comma + 1));
      auto [prs, prl] = rates::code_point_fcs(n, k);
      pts << "bch_" << n << '_' << k << ',' << prs << ',' << prl << ",1\n";
      any_points = true;
    }
    for (const auto& path : wz_spec_paths) {
      auto spec = wz::NestedPolarSpec::from_json(slurp(path));
      double prs = static_cast<double>(spec.key_length()) / spec.n;
      double prw = static_cast<double>(spec.m2()) / spec.n;
      pts << "wz_n" << spec.n << ',' << prs << ',' << prw << ',' << prw << '\n';
      any_points = true;
    }
    if (any_points) atomic_write_file(out_dir + "/rates_points.csv", pts.str());

    std::cout << "rates: wrote " << boundary_path << (any_points ? " and rates_points.csv" : "") << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail_validation(e.what());
  }
}

}  // namespace pufkey::pipeline
