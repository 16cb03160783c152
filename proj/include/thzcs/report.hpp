#pragma once

// JSON form of a SolveReport.

#include "thzcs/bsbl.hpp"
#include "thzcs/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace thzcs {

struct ReportContext {
  std::string solver = "bsbl";
  double eta = 0.0;
  Index block_size = 0;
  std::uint64_t seed = 0;
  /// Present when the caller had the ground truth.
  std::optional<SnrDb> snr;
};

/// Keys: snr_db (only with a truth image; the string "exact" for zero error),
/// iterations, wall_time_s, eta, block_size, beta_inv, cost_trajectory,
/// active_blocks, seed, solver, stop.
inline nlohmann::json report_to_json(const SolveReport& r, const ReportContext& ctx) {
  nlohmann::json j;
  if (ctx.snr) {
    if (ctx.snr->is_exact()) j["snr_db"] = "exact";
    else j["snr_db"] = ctx.snr->value();
  }
  j["iterations"] = r.iterations;
  j["wall_time_s"] = r.wall_time;
  j["eta"] = ctx.eta;
  j["block_size"] = ctx.block_size;
  j["beta_inv"] = r.beta_inv;
  j["cost_trajectory"] = r.cost_trajectory;
  auto active = nlohmann::json::array();
  for (const auto& [i, g] : r.final_gamma.gamma) active.push_back({{"block", i}, {"gamma", g}});
  j["active_blocks"] = std::move(active);
  j["seed"] = ctx.seed;
  j["solver"] = ctx.solver;
  j["stop"] = to_string(r.stop);
  return j;
}

}  // namespace thzcs
