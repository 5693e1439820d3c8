#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brownscene/local_time.hpp"
#include "brownscene/process.hpp"
#include "brownscene/replica.hpp"

namespace brownscene::harness {

/// Flat key = value experiment description. Lines starting with '#' are
/// comments; T_grid is a comma-separated list. See README for the key table.
struct ExperimentConfig {
  ProcessSpec spec{};
  double dt = 1.0 / 64.0;
  std::size_t n_steps = 1024;         // path length for simulate
  std::vector<double> T_grid{16, 32, 64, 128, 256, 512, 1024};
  std::size_t n_replicas = 2000;
  std::uint64_t master_seed = 1;
  double barrier = 1.0;
  double dx_kappa = 1.0;
  double dx_floor = 1e-9;
  std::optional<double> dx;           // fixed bin width, overrides kappa
  std::string out_dir = "out";
  unsigned workers = 1;

  // budgets of the validate suite
  std::size_t ks_replicas = 10000;
  std::size_t path_checks = 10000;    // comparison, superadditivity, covariance
  std::size_t residual_paths = 100;
  std::size_t residual_steps = 100000;
  std::size_t maximal_replicas = 10000;
  std::size_t tail_replicas = 100000;
  double tail_dt = 1.0 / 256.0;
  std::size_t slepian_paths = 50;
  std::size_t slepian_sceneries = 1000;
  std::size_t molchan_replicas_01 = 10000;
  double molchan_dt_01 = 1.0 / 16384.0;

  SimulationOptions simulation() const;
  DxPolicy dx_policy() const;

  /// Every violated precondition, one "key: reason" entry each.
  std::vector<std::string> problems() const;
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace brownscene::harness
