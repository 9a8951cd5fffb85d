// Copyright (c) 2026 The pufkey Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pufkey/source.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pufkey::source {

namespace {

Eigen::VectorXd draw_device(const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor, Rng& rng) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.gaussian();
  return mean + factor * z;
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& x, double noise_std, Rng& rng) {
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise_std * rng.gaussian();
  return y;
}

DeviceRecord make_device(const SourceParams& params, const Eigen::MatrixXd& factor, int n_measurements,
                         std::uint64_t device_seed) {
  Rng rng(device_seed);
  DeviceRecord rec;
  rec.noiseless = draw_device(params.mean, factor, rng);
  double noise_std = std::sqrt(params.noise_variance);
  rec.measurements.reserve(static_cast<std::size_t>(n_measurements));
  for (int m = 0; m < n_measurements; ++m) {
    rec.measurements.push_back(add_noise(rec.noiseless, noise_std, rng));
  }
  return rec;
}

}  // namespace

void SourceParams::validate() const {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("SourceParams: non-positive dimensions");
  int l = length();
  if (mean.size() != l) throw std::invalid_argument("SourceParams: mean length != r*c");
  if (autocovariance.rows() != l || autocovariance.cols() != l) {
    throw std::invalid_argument("SourceParams: autocovariance is not l x l");
  }
  if (noise_variance < 0.0) throw std::invalid_argument("SourceParams: negative noise variance");
}

SourceParams default_synthetic_params(int rows, int cols, double sigma2, double rho, double noise_variance,
                                      double mean_hz) {
  SourceParams p;
  p.rows = rows;
  p.cols = cols;
  int l = rows * cols;
  p.mean = Eigen::VectorXd::Constant(l, mean_hz);
  p.autocovariance.resize(l, l);
  for (int a = 0; a < l; ++a) {
    int ar = a / cols, ac = a % cols;
    for (int b = 0; b < l; ++b) {
      int br = b / cols, bc = b % cols;
      double dist = std::hypot(static_cast<double>(ar - br), static_cast<double>(ac - bc));
      p.autocovariance(a, b) = sigma2 * std::pow(rho, dist);
    }
  }
  p.noise_variance = noise_variance;
  p.validate();
  return p;
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& autocovariance) {
  double asym = (autocovariance - autocovariance.transpose()).cwiseAbs().maxCoeff();
  double scale = std::max(1.0, autocovariance.cwiseAbs().maxCoeff());
  if (asym > 1e-9 * scale) throw std::invalid_argument("covariance_factor: matrix not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(autocovariance);
  if (solver.info() != Eigen::Success) throw std::invalid_argument("covariance_factor: factorization failed");
  Eigen::VectorXd evals = solver.eigenvalues();
  double tol = 1e-10 * std::max(1.0, autocovariance.trace());
  Eigen::VectorXd sq(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals(i) < -tol) {
      throw std::invalid_argument("covariance_factor: matrix is not positive semidefinite");
    }
    sq(i) = std::sqrt(std::max(0.0, evals(i)));
  }
  return solver.eigenvectors() * sq.asDiagonal();
}

RODataset generate_synthetic(const SourceParams& params, int n_devices, int n_measurements, std::uint64_t seed,
                             RunPolicy policy) {
  params.validate();
  if (n_devices < 1) throw std::invalid_argument("generate_synthetic: need at least one device");
  if (n_measurements < 0) throw std::invalid_argument("generate_synthetic: negative measurement count");

  Eigen::MatrixXd factor = covariance_factor(params.autocovariance);
  RODataset ds;
  ds.params = params;
  ds.devices.resize(static_cast<std::size_t>(n_devices));

  if (policy == RunPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (int d = 0; d < n_devices; ++d) {
      ds.devices[static_cast<std::size_t>(d)] =
          make_device(params, factor, n_measurements, derive_seed(seed, static_cast<std::uint64_t>(d)));
    }
  } else {
    for (int d = 0; d < n_devices; ++d) {
      ds.devices[static_cast<std::size_t>(d)] =
          make_device(params, factor, n_measurements, derive_seed(seed, static_cast<std::uint64_t>(d)));
    }
  }
  return ds;
}

Eigen::VectorXd measure(const Eigen::VectorXd& noiseless, const SourceParams& params, std::uint64_t seed) {
  if (noiseless.size() != params.length()) throw std::invalid_argument("measure: array length mismatch");
  Rng rng(seed);
  return add_noise(noiseless, std::sqrt(params.noise_variance), rng);
}

SourceStats estimate_statistics(const RODataset& dataset) {
  const auto& devices = dataset.devices;
  if (devices.size() < 2) {
    throw std::invalid_argument("estimate_statistics: need >= 2 devices for the sample covariance");
  }
  int l = dataset.params.length();
  Eigen::Index n = static_cast<Eigen::Index>(devices.size());

  SourceStats st;
  st.sample_mean = Eigen::VectorXd::Zero(l);
  for (const auto& d : devices) st.sample_mean += d.noiseless;
  st.sample_mean /= static_cast<double>(n);

  st.sample_autocovariance = Eigen::MatrixXd::Zero(l, l);
  for (const auto& d : devices) {
    Eigen::VectorXd c = d.noiseless - st.sample_mean;
    st.sample_autocovariance.noalias() += c * c.transpose();
  }
  st.sample_autocovariance /= static_cast<double>(n - 1);

  double ss = 0.0;
  long dof = 0;
  int pooled = 0;
  for (const auto& d : devices) {
    std::size_t m = d.measurements.size();
    if (m < 2) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(l);
    for (const auto& y : d.measurements) mean += y;
    mean /= static_cast<double>(m);
    for (const auto& y : d.measurements) ss += (y - mean).squaredNorm();
    dof += static_cast<long>(l) * static_cast<long>(m - 1);
    pooled += static_cast<int>(m);
  }
  if (dof == 0) {
    throw std::invalid_argument(
        "estimate_statistics: need >= 2 measurements on at least one device for the noise variance");
  }
  st.estimated_noise_variance = ss / static_cast<double>(dof);
  st.pooled_residuals = pooled;
  return st;
}

namespace {

struct CsvRow {
  long device;
  long measurement;
  long ro;
  double value;
};

}  // namespace

void write_csv(const RODataset& dataset, const std::string& path) {
  std::ostringstream out;
  out << "device_id,measurement_id,ro_index,frequency_hz\n";
  char buf[64];
  auto emit = [&](std::size_t dev, std::size_t meas, int ro, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << dev << ',' << meas << ',' << ro << ',' << buf << '\n';
  };
  for (std::size_t d = 0; d < dataset.devices.size(); ++d) {
    const auto& rec = dataset.devices[d];
    for (int i = 0; i < rec.noiseless.size(); ++i) emit(d, 0, i, rec.noiseless(i));
    for (std::size_t m = 0; m < rec.measurements.size(); ++m) {
      for (int i = 0; i < rec.measurements[m].size(); ++i) emit(d, m + 1, i, rec.measurements[m](i));
    }
  }
  atomic_write_file(path, out.str());

  nlohmann::json sidecar{{"r", dataset.params.rows},
                         {"c", dataset.params.cols},
                         {"noise_variance", dataset.params.noise_variance}};
  atomic_write_file(path + ".json", sidecar.dump(2) + "\n");
}

RODataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (line.ends_with("\r")) line.pop_back();
  if (line != "device_id,measurement_id,ro_index,frequency_hz") {
    throw std::runtime_error(path + ":1: unexpected header '" + line + "'");
  }

  // (device, measurement) -> (ro -> value), insertion-ordered by device id.
  std::map<long, std::map<long, std::map<long, double>>> table;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.ends_with("\r")) line.pop_back();
    if (line.empty()) continue;
    CsvRow row{};
    char* end = nullptr;
    const char* s = line.c_str();
    auto parse_long = [&](long& dst) {
      dst = std::strtol(s, &end, 10);
      if (end == s || *end != ',') throw std::runtime_error(path + ":" + std::to_string(row_no) + ": malformed row");
      s = end + 1;
    };
    parse_long(row.device);
    parse_long(row.measurement);
    parse_long(row.ro);
    row.value = std::strtod(s, &end);
    if (end == s || *end != '\0') throw std::runtime_error(path + ":" + std::to_string(row_no) + ": malformed row");
    if (row.measurement < 0 || row.ro < 0) {
      throw std::runtime_error(path + ":" + std::to_string(row_no) + ": negative identifier");
    }
    auto& cell = table[row.device][row.measurement];
    if (!cell.emplace(row.ro, row.value).second) {
      throw std::runtime_error(path + ":" + std::to_string(row_no) + ": duplicate (device_id, measurement_id, ro_index)");
    }
  }
  if (table.empty()) throw std::runtime_error(path + ": no data rows");

  // Sidecar gives array geometry and the noise model when present.
  int rows = 0, cols = 0;
  double sidecar_noise = -1.0;
  {
    std::ifstream sc(path + ".json");
    if (sc) {
      nlohmann::json j = nlohmann::json::parse(sc);
      rows = j.value("r", 0);
      cols = j.value("c", 0);
      sidecar_noise = j.value("noise_variance", -1.0);
    }
  }

  // Validate rectangularity: every (device, measurement) must cover ro 0..l-1.
  long l = -1;
  for (const auto& [dev, measurements] : table) {
    if (measurements.find(0) == measurements.end()) {
      throw std::runtime_error(path + ": device " + std::to_string(dev) + " is missing measurement_id 0 (enrollment)");
    }
    long expected_m = 0;
    for (const auto& [mid, ros] : measurements) {
      if (mid != expected_m) {
        throw std::runtime_error(path + ": device " + std::to_string(dev) + " is missing measurement_id " +
                                 std::to_string(expected_m));
      }
      ++expected_m;
      long n = static_cast<long>(ros.size());
      if (l < 0) l = n;
      if (n != l) {
        throw std::runtime_error(path + ": non-rectangular data at device " + std::to_string(dev) +
                                 " measurement " + std::to_string(mid));
      }
      long expect = 0;
      for (const auto& [ro, _] : ros) {
        if (ro != expect) {
          throw std::runtime_error(path + ": device " + std::to_string(dev) + " measurement " + std::to_string(mid) +
                                   " is missing ro_index " + std::to_string(expect));
        }
        ++expect;
      }
    }
  }

  if (rows <= 0 || cols <= 0) {
    rows = 1;
    cols = static_cast<int>(l);
  }
  if (static_cast<long>(rows) * cols != l) {
    throw std::runtime_error(path + ": sidecar geometry r*c does not match the ro_index range");
  }

  RODataset ds;
  ds.devices.reserve(table.size());
  for (const auto& [dev, measurements] : table) {
    DeviceRecord rec;
    for (const auto& [mid, ros] : measurements) {
      Eigen::VectorXd v(l);
      for (const auto& [ro, val] : ros) v(ro) = val;
      if (mid == 0) {
        rec.noiseless = v;
      } else {
        rec.measurements.push_back(v);
      }
    }
    ds.devices.push_back(std::move(rec));
  }

  ds.params.rows = rows;
  ds.params.cols = cols;
  if (ds.devices.size() >= 2) {
    SourceStats st;
    bool have_noise = false;
    try {
      st = estimate_statistics(ds);
      have_noise = true;
    } catch (const std::invalid_argument&) {
      // Not enough repeated measurements; fall back to the sidecar noise.
      st.sample_mean = Eigen::VectorXd::Zero(l);
      for (const auto& d : ds.devices) st.sample_mean += d.noiseless;
      st.sample_mean /= static_cast<double>(ds.devices.size());
      st.sample_autocovariance = Eigen::MatrixXd::Zero(l, l);
      for (const auto& d : ds.devices) {
        Eigen::VectorXd c = d.noiseless - st.sample_mean;
        st.sample_autocovariance.noalias() += c * c.transpose();
      }
      st.sample_autocovariance /= static_cast<double>(ds.devices.size() - 1);
    }
    ds.params.mean = st.sample_mean;
    ds.params.autocovariance = st.sample_autocovariance;
    ds.params.noise_variance = have_noise ? st.estimated_noise_variance : std::max(0.0, sidecar_noise);
  } else {
    ds.params.mean = ds.devices.front().noiseless;
    ds.params.autocovariance = Eigen::MatrixXd::Zero(l, l);
    ds.params.noise_variance = std::max(0.0, sidecar_noise);
  }
  if (sidecar_noise >= 0.0) ds.params.noise_variance = sidecar_noise;
  return ds;
}

}  // namespace pufkey::source
