#include "lbv/design.hpp"

#include <cmath>
#include <filesystem>
#include <map>

#include "lbv/config.hpp"
#include "lbv/errors.hpp"

namespace lbv {

std::string DesignMatrix::display_name(size_t j) const {
  return transforms[j] == Transform::kLog ? "ln(" + columns[j] + ")" : columns[j];
}

std::optional<size_t> DesignMatrix::column_index(const std::string& source_name) const {
  for (size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == source_name) return j;
  return std::nullopt;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::kPoisson: return "poisson";
    case Family::kNegbin: return "negbin";
    case Family::kAuto: return "auto";
    case Family::kRandomPoisson: return "random-poisson";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "poisson") return Family::kPoisson;
  if (s == "negbin") return Family::kNegbin;
  if (s == "auto") return Family::kAuto;
  if (s == "random-poisson") return Family::kRandomPoisson;
  throw ValidationError("family must be poisson|negbin|auto|random-poisson, got '" + s + "'");
}

std::string stratum_name(Stratum s) {
  switch (s) {
    case Stratum::kAll: return "all";
    case Stratum::kSignalized: return "signalized";
    case Stratum::kUnsignalized: return "unsignalized";
  }
  return "?";
}

Stratum parse_stratum(const std::string& s) {
  if (s == "all") return Stratum::kAll;
  if (s == "signalized") return Stratum::kSignalized;
  if (s == "unsignalized") return Stratum::kUnsignalized;
  throw ValidationError("stratum must be all|signalized|unsignalized, got '" + s + "'");
}

namespace {

Transform parse_transform(const std::string& s) {
  if (s == "identity") return Transform::kIdentity;
  if (s == "log") return Transform::kLog;
  throw ValidationError("transform must be identity or log, got '" + s + "'");
}

}  // namespace

ModelSpec ModelSpec::from_file(const std::string& path) {
  Config cfg = Config::from_file(path);
  ModelSpec spec;
  spec.name = cfg.get_or("name", std::filesystem::path(path).stem().string());
  spec.response = cfg.get_or("response", spec.response);
  spec.covariates = cfg.get_list("covariates");
  auto transform_names = cfg.get_list("transforms");
  if (transform_names.empty()) {
    spec.transforms.assign(spec.covariates.size(), Transform::kIdentity);
  } else {
    if (transform_names.size() != spec.covariates.size())
      throw ValidationError(path + ": transforms must match covariates (" +
                            std::to_string(transform_names.size()) + " vs " +
                            std::to_string(spec.covariates.size()) + ")");
    for (const auto& t : transform_names) spec.transforms.push_back(parse_transform(t));
  }
  spec.stratum = parse_stratum(cfg.get_or("stratum", "all"));
  spec.family = parse_family(cfg.get_or("family", "auto"));
  spec.random_columns = cfg.get_list("random_columns");
  for (const auto& rc : spec.random_columns) {
    bool known = false;
    for (const auto& c : spec.covariates) known = known || c == rc;
    if (!known) throw ValidationError(path + ": random column '" + rc + "' is not a covariate");
  }
  spec.draws = cfg.get_int("draws", spec.draws);
  if (spec.draws < 25) throw ValidationError(path + ": draws must be >= 25");
  spec.halton_skip = cfg.get_int("halton_skip", spec.halton_skip);
  if (spec.halton_skip < 0) throw ValidationError(path + ": halton_skip must be >= 0");
  spec.seed = static_cast<uint64_t>(cfg.get_int("seed", static_cast<int64_t>(spec.seed)));
  if (!spec.random_columns.empty() && spec.family != Family::kRandomPoisson)
    throw ValidationError(path + ": random_columns requires family = random-poisson");
  return spec;
}

namespace {

std::optional<double> covariate_value(const std::string& name, const LbvSummary& lbv,
                                      const IntersectionSite& site) {
  if (name == "aadt_major") return site.aadt_major;
  if (name == "aadt_minor") return site.aadt_minor;
  if (name == "speed_limit_major") return site.speed_limit_major;
  if (name == "speed_limit_minor") return site.speed_limit_minor;
  if (name == "through_lanes_total") return static_cast<double>(site.through_lanes_total);
  if (name == "left_lanes_total") return static_cast<double>(site.left_lanes_total);
  if (name == "right_lanes_total") return static_cast<double>(site.right_lanes_total);
  if (name == "legs") return static_cast<double>(site.legs);
  if (name == "mean_speed") return lbv.mean_speed;
  if (name == "n_points") return static_cast<double>(lbv.n_points);
  if (name == "cv_al") return lbv.cv_al;
  if (name == "cv_ah") return lbv.cv_ah;
  if (name == "cv_dl") return lbv.cv_dl;
  if (name == "cv_dh") return lbv.cv_dh;
  throw ValidationError("unknown covariate '" + name + "'");
}

int64_t response_value(const std::string& name, const IntersectionSite& site) {
  if (name == "crashes_5yr_total") return site.crashes_5yr_total;
  if (name == "crashes_5yr_rearend") return site.crashes_5yr_rearend;
  throw ValidationError("unknown response '" + name + "' (crash count columns only)");
}

}  // namespace

BuildResult build_design(const std::vector<LbvSummary>& summaries,
                         const std::vector<IntersectionSite>& sites, const ModelSpec& spec) {
  std::map<std::string, const IntersectionSite*> inv;
  for (const auto& s : sites) inv[s.site_id] = &s;

  BuildResult res;
  DesignMatrix& d = res.design;
  d.columns.push_back("const");
  d.transforms.push_back(Transform::kIdentity);
  for (size_t k = 0; k < spec.covariates.size(); ++k) {
    for (const auto& existing : d.columns)
      if (existing == spec.covariates[k])
        throw ValidationError("duplicate design column '" + spec.covariates[k] + "'");
    d.columns.push_back(spec.covariates[k]);
    d.transforms.push_back(spec.transforms[k]);
  }
  d.n_cols = d.columns.size();

  for (const auto& lbv : summaries) {
    auto it = inv.find(lbv.site_id);
    if (it == inv.end())
      throw ValidationError("build_design: site '" + lbv.site_id + "' not in inventory");
    const IntersectionSite& site = *it->second;
    if (spec.stratum == Stratum::kSignalized && site.control != Control::kSignalized) continue;
    if (spec.stratum == Stratum::kUnsignalized && site.control != Control::kUnsignalized) continue;

    std::vector<double> row;
    row.push_back(1.0);
    bool undefined = false;
    for (size_t k = 0; k < spec.covariates.size() && !undefined; ++k) {
      auto v = covariate_value(spec.covariates[k], lbv, site);
      if (!v) {
        undefined = true;
        break;
      }
      if (spec.transforms[k] == Transform::kLog) {
        if (!(*v > 0.0))
          throw ValidationError("site '" + lbv.site_id + "': log transform of non-positive " +
                                spec.covariates[k]);
        row.push_back(std::log(*v));
      } else {
        row.push_back(*v);
      }
    }
    if (undefined) {
      ++res.dropped_undefined;
      continue;
    }
    d.ids.push_back(lbv.site_id);
    d.response.push_back(response_value(spec.response, site));
    d.x.insert(d.x.end(), row.begin(), row.end());
  }
  d.n_rows = d.ids.size();
  if (d.n_rows == 0) throw ValidationError("design for model '" + spec.name + "' has no rows");
  return res;
}

}  // namespace lbv
