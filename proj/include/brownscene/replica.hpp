#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "brownscene/campaign.hpp"
#include "brownscene/local_time.hpp"
#include "brownscene/process.hpp"
#include "brownscene/rng.hpp"
#include "brownscene/scenery.hpp"

namespace brownscene {

/// Discretization and parallelism shared by every campaign.
struct SimulationOptions {
  double dt = 1.0 / 64.0;
  DxPolicy dx{};
  unsigned workers = 1;
};

/// Number of grid steps for horizon T, or a ParameterError if T is off-grid.
inline std::size_t steps_for(double horizon, double dt) {
  const auto k = grid_index(horizon, dt);
  if (!k || *k == 0)
    throw ParameterError("horizon " + std::to_string(horizon) + " is not a positive multiple of dt=" +
                         std::to_string(dt));
  return *k;
}

/// Deterministic path supply for a campaign: replica r's path depends only on
/// (spec, horizon, dt, master, r), and its scenery seed lives in a separate
/// hash domain of the master seed. Circulant fBm paths come in pairs sharing
/// one FFT, so replicas are grouped into blocks of paths_per_block().
class ReplicaSource {
 public:
  ReplicaSource(const ProcessSpec& spec, double horizon, double dt, std::uint64_t master)
      : generator_(spec, steps_for(horizon, dt), dt), master_(master) {}

  const PathGenerator& generator() const noexcept { return generator_; }
  std::size_t paths_per_block() const noexcept { return generator_.paths_per_draw(); }
  std::size_t blocks(std::size_t replicas) const noexcept {
    const std::size_t p = paths_per_block();
    return (replicas + p - 1) / p;
  }

  std::uint64_t path_seed(std::size_t block) const noexcept {
    return derive_seed(master_, SeedDomain::kPath, block);
  }
  std::uint64_t scenery_seed(std::size_t replica) const noexcept {
    return derive_seed(master_, SeedDomain::kScenery, replica);
  }

  /// Paths of replicas block*p .. block*p + p - 1.
  std::vector<PathSample> block_paths(std::size_t block) const {
    std::vector<PathSample> out;
    if (paths_per_block() == 2) {
      auto [a, b] = generator_.draw_pair(path_seed(block));
      out.push_back(std::move(a));
      out.push_back(std::move(b));
    } else {
      out.push_back(generator_.draw(path_seed(block)));
    }
    return out;
  }

  PathSample path(std::size_t replica) const {
    const std::size_t p = paths_per_block();
    return std::move(block_paths(replica / p)[replica % p]);
  }

 private:
  PathGenerator generator_;
  std::uint64_t master_;
};

/// fn(replica, path) -> Result for replicas 0..count-1, in replica order.
template <class Result, class Fn>
std::vector<Result> run_campaign(const ReplicaSource& source, std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<std::optional<Result>> slots(count);
  const std::size_t per = source.paths_per_block();
  parallel_for_blocks(source.blocks(count), workers, [&](std::size_t b) {
    auto paths = source.block_paths(b);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const std::size_t r = b * per + i;
      if (r < count) slots[r].emplace(fn(r, paths[i]));
    }
  });
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Scenery for replica r, sized from its path.
inline SceneryField replica_scenery(const ReplicaSource& source, std::size_t r, const PathSample& path,
                                    const DxPolicy& dx) {
  return sample_scenery(grid_for_path(path, dx), source.scenery_seed(r));
}

}  // namespace brownscene
