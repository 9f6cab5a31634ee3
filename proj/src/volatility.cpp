#include "lbv/volatility.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lbv/csv.hpp"
#include "lbv/errors.hpp"
#include "lbv/kernels/kernels.hpp"
#include "lbv/parallel.hpp"

namespace lbv {

std::optional<double> coefficient_of_variation(const std::vector<double>& values) {
  const size_t n = values.size();
  if (n == 0) return std::nullopt;
  if (n == 1) return 0.0;
  const auto& ops = kernels::active();
  double mean = ops.reduce_sum(values.data(), n) / static_cast<double>(n);
  if (!(mean > 0.0)) throw ValidationError("coefficient_of_variation: values must be positive magnitudes");
  double ss = ops.centered_sumsq(values.data(), n, mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return 100.0 * sd / mean;
}

LbvSummary compute_lbv(const std::vector<MatchedPoint>& points, int64_t min_quadrant_n,
                       const std::string& site_id_hint) {
  if (points.empty())
    throw ValidationError("compute_lbv: no points for site '" +
                          (site_id_hint.empty() ? std::string("<unknown>") : site_id_hint) + "'");
  LbvSummary out;
  out.site_id = site_id_hint.empty() ? points.front().site_id : site_id_hint;
  out.n_points = static_cast<int64_t>(points.size());

  double speed_sum = 0.0;
  for (const auto& p : points) {
    if (p.site_id != out.site_id)
      throw ValidationError("compute_lbv: mixed site_ids '" + out.site_id + "' and '" + p.site_id + "'");
    speed_sum += p.speed;
  }
  out.mean_speed = speed_sum / static_cast<double>(points.size());

  // Bin edge first (mean over all points), then the accel/decel split.
  // Zero accelerations are neither maneuver and enter no quadrant.
  std::vector<double> al, ah, dl, dh;
  for (const auto& p : points) {
    if (p.accel_long == 0.0) continue;
    bool low = p.speed <= out.mean_speed;  // boundary point belongs to the low bin
    double mag = std::abs(p.accel_long);
    if (p.accel_long > 0.0)
      (low ? al : ah).push_back(mag);
    else
      (low ? dl : dh).push_back(mag);
  }
  out.n_al = static_cast<int64_t>(al.size());
  out.n_ah = static_cast<int64_t>(ah.size());
  out.n_dl = static_cast<int64_t>(dl.size());
  out.n_dh = static_cast<int64_t>(dh.size());

  auto cv_if_enough = [min_quadrant_n](const std::vector<double>& v) -> std::optional<double> {
    if (static_cast<int64_t>(v.size()) < min_quadrant_n) return std::nullopt;
    return coefficient_of_variation(v);
  };
  out.cv_al = cv_if_enough(al);
  out.cv_ah = cv_if_enough(ah);
  out.cv_dl = cv_if_enough(dl);
  out.cv_dh = cv_if_enough(dh);
  out.sufficient = out.cv_al && out.cv_ah && out.cv_dl && out.cv_dh;
  return out;
}

std::vector<LbvSummary> compute_lbv_all(const std::vector<MatchedPoint>& points,
                                        int64_t min_quadrant_n) {
  std::map<std::string, std::vector<MatchedPoint>> by_site;
  for (const auto& p : points) by_site[p.site_id].push_back(p);

  std::vector<const std::pair<const std::string, std::vector<MatchedPoint>>*> groups;
  groups.reserve(by_site.size());
  for (const auto& g : by_site) groups.push_back(&g);

  std::vector<LbvSummary> out(groups.size());
  parallel_chunks(groups.size(), 1, [&](size_t, size_t b, size_t e) {
    for (size_t i = b; i < e; ++i)
      out[i] = compute_lbv(groups[i]->second, min_quadrant_n, groups[i]->first);
  });
  return out;
}

namespace {

SummaryRow describe(const std::string& stratum, const std::string& variable,
                    const std::vector<double>& values) {
  SummaryRow row;
  row.stratum = stratum;
  row.variable = variable;
  row.n = static_cast<int64_t>(values.size());
  if (values.empty()) return row;
  double sum = 0.0, mn = values[0], mx = values[0];
  for (double v : values) {
    sum += v;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  double mean = sum / static_cast<double>(values.size());
  row.mean = mean;
  row.min = mn;
  row.max = mx;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    row.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return row;
}

}  // namespace

std::vector<SummaryRow> summarize_lbv(const std::vector<LbvSummary>& summaries,
                                      const std::vector<IntersectionSite>& sites) {
  std::map<std::string, const IntersectionSite*> inv;
  for (const auto& s : sites) inv[s.site_id] = &s;

  struct Joined {
    const LbvSummary* lbv;
    const IntersectionSite* site;
  };
  std::vector<Joined> rows;
  for (const auto& s : summaries) {
    auto it = inv.find(s.site_id);
    if (it == inv.end())
      throw ValidationError("summarize_lbv: site '" + s.site_id + "' not in inventory");
    rows.push_back({&s, it->second});
  }

  using Getter = std::function<std::optional<double>(const Joined&)>;
  const std::pair<std::string, Getter> variables[] = {
      {"crashes_5yr_total", [](const Joined& j) { return static_cast<double>(j.site->crashes_5yr_total); }},
      {"crashes_5yr_rearend", [](const Joined& j) { return static_cast<double>(j.site->crashes_5yr_rearend); }},
      {"aadt_major", [](const Joined& j) { return j.site->aadt_major; }},
      {"aadt_minor", [](const Joined& j) { return j.site->aadt_minor; }},
      {"speed_limit_major", [](const Joined& j) { return j.site->speed_limit_major; }},
      {"speed_limit_minor", [](const Joined& j) { return j.site->speed_limit_minor; }},
      {"through_lanes_total", [](const Joined& j) { return static_cast<double>(j.site->through_lanes_total); }},
      {"left_lanes_total", [](const Joined& j) { return static_cast<double>(j.site->left_lanes_total); }},
      {"right_lanes_total", [](const Joined& j) { return static_cast<double>(j.site->right_lanes_total); }},
      {"legs", [](const Joined& j) { return static_cast<double>(j.site->legs); }},
      {"mean_speed", [](const Joined& j) { return j.lbv->mean_speed; }},
      {"n_points", [](const Joined& j) { return static_cast<double>(j.lbv->n_points); }},
      {"cv_al", [](const Joined& j) { return j.lbv->cv_al; }},
      {"cv_ah", [](const Joined& j) { return j.lbv->cv_ah; }},
      {"cv_dl", [](const Joined& j) { return j.lbv->cv_dl; }},
      {"cv_dh", [](const Joined& j) { return j.lbv->cv_dh; }},
  };

  std::vector<SummaryRow> out;
  for (const char* stratum : {"all", "signalized", "unsignalized"}) {
    for (const auto& [variable, getter] : variables) {
      std::vector<double> values;
      for (const auto& j : rows) {
        if (std::string(stratum) == "signalized" && j.site->control != Control::kSignalized) continue;
        if (std::string(stratum) == "unsignalized" && j.site->control != Control::kUnsignalized) continue;
        if (auto v = getter(j)) values.push_back(*v);
      }
      out.push_back(describe(stratum, variable, values));
    }
  }
  return out;
}

namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

}  // namespace

void write_lbv_file(const std::string& path, const std::vector<LbvSummary>& summaries) {
  DelimWriter w(path);
  w.write_row({"site_id", "n_points", "mean_speed", "n_al", "n_ah", "n_dl", "n_dh",
               "cv_al", "cv_ah", "cv_dl", "cv_dh", "sufficient"});
  for (const auto& s : summaries) {
    w.write_row({s.site_id, std::to_string(s.n_points), fmt_double(s.mean_speed),
                 std::to_string(s.n_al), std::to_string(s.n_ah), std::to_string(s.n_dl),
                 std::to_string(s.n_dh), opt_cell(s.cv_al), opt_cell(s.cv_ah), opt_cell(s.cv_dl),
                 opt_cell(s.cv_dh), s.sufficient ? "true" : "false"});
  }
  w.close();
}

std::vector<LbvSummary> read_lbv_file(const std::string& path) {
  DelimReader r(path);
  const char* names[] = {"site_id", "n_points", "mean_speed", "n_al", "n_ah", "n_dl", "n_dh",
                         "cv_al", "cv_ah", "cv_dl", "cv_dh", "sufficient"};
  size_t idx[std::size(names)];
  for (size_t i = 0; i < std::size(names); ++i) {
    auto c = r.column(names[i]);
    if (!c) throw ValidationError(path + ": missing column '" + std::string(names[i]) + "'");
    idx[i] = *c;
  }
  auto opt_field = [&r](size_t i) -> std::optional<double> {
    std::string_view f = trim(r.fields()[i]);
    if (f.empty()) return std::nullopt;
    auto v = parse_double(f);
    if (!v) throw ValidationError(r.path() + " line " + std::to_string(r.line_number()) + ": bad number");
    return v;
  };
  std::vector<LbvSummary> out;
  while (r.next_row()) {
    LbvSummary s;
    s.site_id = std::string(r.fields()[idx[0]]);
    s.n_points = parse_int(r.fields()[idx[1]]).value_or(-1);
    auto ms = parse_double(r.fields()[idx[2]]);
    if (s.n_points < 0 || !ms)
      throw ValidationError(path + " line " + std::to_string(r.line_number()) + ": bad number");
    s.mean_speed = *ms;
    s.n_al = parse_int(r.fields()[idx[3]]).value_or(0);
    s.n_ah = parse_int(r.fields()[idx[4]]).value_or(0);
    s.n_dl = parse_int(r.fields()[idx[5]]).value_or(0);
    s.n_dh = parse_int(r.fields()[idx[6]]).value_or(0);
    s.cv_al = opt_field(idx[7]);
    s.cv_ah = opt_field(idx[8]);
    s.cv_dl = opt_field(idx[9]);
    s.cv_dh = opt_field(idx[10]);
    std::string_view suff = trim(r.fields()[idx[11]]);
    s.sufficient = suff == "true";
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_table(const std::string& path, const std::vector<SummaryRow>& rows) {
  DelimWriter w(path);
  w.write_row({"stratum", "variable", "n", "mean", "sd", "min", "max"});
  for (const auto& row : rows) {
    w.write_row({row.stratum, row.variable, std::to_string(row.n), opt_cell(row.mean),
                 opt_cell(row.sd), opt_cell(row.min), opt_cell(row.max)});
  }
  w.close();
}

}  // namespace lbv
