#pragma once

// Regression design assembly: joins per-site volatility summaries with
// the inventory, applies column transforms, and yields the dense matrix
// the estimators consume. Model specs are data (text files), not code.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbv/geo.hpp"
#include "lbv/volatility.hpp"

namespace lbv {

enum class Transform { kIdentity, kLog };

struct DesignMatrix {
  std::vector<std::string> ids;      // site_id per row
  std::vector<int64_t> response;     // crash counts n_i
  std::vector<std::string> columns;  // source names; first is "const"
  std::vector<Transform> transforms; // aligned with columns
  std::vector<double> x;             // row-major, n_rows x n_cols
  size_t n_rows = 0;
  size_t n_cols = 0;

  double at(size_t i, size_t j) const { return x[i * n_cols + j]; }
  // Report label: log columns render as ln(name).
  std::string display_name(size_t j) const;
  std::optional<size_t> column_index(const std::string& source_name) const;
};

enum class Family { kPoisson, kNegbin, kAuto, kRandomPoisson };

std::string family_name(Family f);
Family parse_family(const std::string& s);

enum class Stratum { kAll, kSignalized, kUnsignalized };

std::string stratum_name(Stratum s);
Stratum parse_stratum(const std::string& s);

// One model to estimate, read from a spec file with keys: name,
// response, covariates, transforms, stratum, family, and for the
// random-parameter family: random_columns, draws, halton_skip, seed.
struct ModelSpec {
  std::string name;
  std::string response = "crashes_5yr_total";
  std::vector<std::string> covariates;
  std::vector<Transform> transforms;  // same length as covariates
  Stratum stratum = Stratum::kAll;
  Family family = Family::kAuto;
  std::vector<std::string> random_columns;
  int64_t draws = 200;
  int64_t halton_skip = 10;
  uint64_t seed = 1;

  static ModelSpec from_file(const std::string& path);
};

struct BuildResult {
  DesignMatrix design;
  int64_t dropped_undefined = 0;  // sites excluded for undefined covariates
};

// Covariate sources: inventory columns (aadt_major, speed_limit_major,
// legs, ...) and volatility columns (cv_al..cv_dh, mean_speed,
// n_points). Sites whose needed CV is undefined are excluded and
// counted. Log transforms require strictly positive raw values.
BuildResult build_design(const std::vector<LbvSummary>& summaries,
                         const std::vector<IntersectionSite>& sites, const ModelSpec& spec);

}  // namespace lbv
