#pragma once

// Synthetic data laboratory: BSM trajectories and crash counts with
// known ground truth, so every statistical routine has a recoverable
// target. All generators are pure functions of their seed.

#include <cstdint>
#include <string>
#include <vector>

#include "lbv/config.hpp"
#include "lbv/design.hpp"
#include "lbv/geo.hpp"
#include "lbv/ingest.hpp"

namespace lbv {

struct RegimeParams {
  double accel_mean = 1.0;  // magnitude, m/s^2
  double accel_sd = 0.5;
};

// Four families of one-second 10 Hz approach maneuvers, one per
// quadrant. Each trip keeps one constant acceleration magnitude (drawn
// once, floored) so quadrant CV targets stay analytic, and mid-trip
// speeds sit in a low or high band so quadrant membership is
// structural, not borderline.
struct TrajectoryProfile {
  int64_t vehicles_per_regime = 100;  // trips per quadrant family
  RegimeParams accel_low, accel_high, decel_low, decel_high;
  double low_speed_lo = 5.0, low_speed_hi = 7.0;  // mid-trip speed, m/s
  double high_speed_lo = 13.0, high_speed_hi = 15.0;
  double tick_s = 0.1;
  int64_t ticks = 10;  // records per trip
  std::string device_prefix = "v";
  uint64_t seed = 1;
};

// Draws below this magnitude are clamped up, never discarded, so a
// zero-acceleration class cannot appear by accident.
constexpr double kAccelMagnitudeFloor = 0.05;

std::vector<BsmRecord> generate_trajectories(const IntersectionSite& site,
                                             const TrajectoryProfile& profile);

// Counts n_i ~ Poisson(exp(beta_i . x_i)); a column with sigma > 0 gets
// a per-observation normal coefficient around its mean.
std::vector<int64_t> generate_counts(const DesignMatrix& d, const std::vector<double>& beta,
                                     const std::vector<double>& sigma, uint64_t seed);

// Config-driven drivers behind `synth trajectories` and `synth counts`.
struct SynthTrajectoriesResult {
  int64_t sites = 0;
  int64_t records = 0;
  std::string inventory_path;
};

SynthTrajectoriesResult synth_trajectories_from_config(const Config& cfg,
                                                       const std::string& out_path);

int64_t synth_counts_from_config(const Config& cfg, const std::string& out_path);

}  // namespace lbv
