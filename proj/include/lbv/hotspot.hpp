#pragma once

// Proactive screening: rank intersections by the gap between where
// their volatility sits in the percentile distribution and where their
// crash history sits. A large positive gap with few crashes marks a
// latent hotspot.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbv/geo.hpp"
#include "lbv/volatility.hpp"

namespace lbv {

enum class HotspotFlag { kKnown, kLatent, kNormal, kInsufficient };

std::string hotspot_flag_name(HotspotFlag f);

struct HotspotThresholds {
  double latent_min_discrepancy = 30.0;
  double latent_max_crash_pct = 50.0;
  double known_min_crash_pct = 80.0;
};

struct HotspotWeights {
  double al = 1.0, ah = 1.0, dl = 1.0, dh = 1.0;
};

// Weighted mean of the defined quadrant CVs; weights renormalized over
// the defined entries. nullopt when no CV is defined (insufficient).
std::optional<double> volatility_score(const LbvSummary& s, const HotspotWeights& w = {});

struct HotspotRow {
  std::string site_id;
  int64_t crashes_5yr = 0;
  double crash_percentile = 0.0;
  double volatility_score = 0.0;
  double volatility_percentile = 0.0;
  double discrepancy = 0.0;  // volatility percentile minus crash percentile
  HotspotFlag flag = HotspotFlag::kNormal;
  std::optional<double> fit_residual;  // observed - fitted, when a fit is attached
};

// percentile = 100*(rank-1)/(N-1), ascending, average rank on ties.
// Needs at least two values.
std::vector<double> percentile_ranks(const std::vector<double>& values);

// Joins summaries with the inventory, scores the sufficient sites, and
// returns rows sorted by descending discrepancy (site_id breaks ties).
// Sites without a defined score carry flag insufficient_data, sit after
// the scored rows, and stay out of the percentile pool.
std::vector<HotspotRow> rank_sites(const std::vector<LbvSummary>& summaries,
                                   const std::vector<IntersectionSite>& sites,
                                   const HotspotThresholds& thresholds = {},
                                   const HotspotWeights& weights = {});

// Adds observed-minus-fitted residuals from a model fit, matched by
// site id; rows absent from the fit keep an empty residual.
void attach_fit_residuals(std::vector<HotspotRow>& rows, const std::vector<std::string>& fit_ids,
                          const std::vector<int64_t>& response,
                          const std::vector<double>& fitted);

void write_hotspot_table(const std::string& path, const std::vector<HotspotRow>& rows);

// Plot-ready companion for external mapping: site, lon, lat, and circle
// radii for crashes, cv_al, and cv_dl, each scaled linearly so the pool
// maximum has radius 1. Undefined CVs leave empty cells.
void write_plot_file(const std::string& path, const std::vector<HotspotRow>& rows,
                     const std::vector<LbvSummary>& summaries,
                     const std::vector<IntersectionSite>& sites);

}  // namespace lbv
