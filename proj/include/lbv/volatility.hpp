#pragma once

// Location-based volatility: per site, the coefficient of variation of
// longitudinal acceleration magnitudes in four quadrants — {acceleration,
// deceleration} x {at-or-below-mean speed, above-mean speed}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbv/geo.hpp"

namespace lbv {

struct LbvSummary {
  std::string site_id;
  double mean_speed = 0.0;  // over all matched points of the site
  int64_t n_points = 0;
  // CVs in percent; a quadrant with fewer than min_quadrant_n samples is
  // undefined (nullopt), never zero.
  std::optional<double> cv_al, cv_ah, cv_dl, cv_dh;
  int64_t n_al = 0, n_ah = 0, n_dl = 0, n_dh = 0;
  bool sufficient = false;  // all four quadrants defined
};

constexpr int64_t kDefaultMinQuadrantN = 30;

// 100 * sample sd / mean (n-1 denominator) of positive magnitudes.
// Empty input -> nullopt; a single value -> 0 (zero dispersion).
std::optional<double> coefficient_of_variation(const std::vector<double>& values);

// All points must belong to one site. Points with accel_long > 0 are
// accelerations, < 0 decelerations (magnitudes), exactly 0 excluded.
// Speed <= mean_speed selects the low bin. The hint names the site in
// errors when the point set is empty.
LbvSummary compute_lbv(const std::vector<MatchedPoint>& points, int64_t min_quadrant_n,
                       const std::string& site_id_hint = "");

// Computes one summary per site present in `points`, sites ordered by
// site_id. Parallel over sites; results independent of thread count.
std::vector<LbvSummary> compute_lbv_all(const std::vector<MatchedPoint>& points,
                                        int64_t min_quadrant_n);

// One stratified descriptive cell block: mean/sd/min/max over sites.
struct SummaryRow {
  std::string stratum;   // all | signalized | unsignalized
  std::string variable;  // column being described
  int64_t n = 0;         // sites with the variable defined
  std::optional<double> mean, sd, min, max;
};

// Descriptive statistics of crash counts, covariates, and CVs per
// stratum. Undefined CVs are excluded cell-wise (n reflects that).
std::vector<SummaryRow> summarize_lbv(const std::vector<LbvSummary>& summaries,
                                      const std::vector<IntersectionSite>& sites);

void write_lbv_file(const std::string& path, const std::vector<LbvSummary>& summaries);
std::vector<LbvSummary> read_lbv_file(const std::string& path);
void write_summary_table(const std::string& path, const std::vector<SummaryRow>& rows);

}  // namespace lbv
