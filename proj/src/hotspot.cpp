#include "lbv/hotspot.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "lbv/csv.hpp"
#include "lbv/errors.hpp"

namespace lbv {

std::string hotspot_flag_name(HotspotFlag f) {
  switch (f) {
    case HotspotFlag::kKnown: return "known_hotspot";
    case HotspotFlag::kLatent: return "latent_hotspot";
    case HotspotFlag::kNormal: return "normal";
    case HotspotFlag::kInsufficient: return "insufficient_data";
  }
  return "normal";
}

std::optional<double> volatility_score(const LbvSummary& s, const HotspotWeights& w) {
  double wsum = 0.0, acc = 0.0;
  auto add = [&](const std::optional<double>& cv, double weight) {
    if (!cv) return;
    if (weight < 0.0) throw ValidationError("volatility weights must be non-negative");
    wsum += weight;
    acc += weight * *cv;
  };
  add(s.cv_al, w.al);
  add(s.cv_ah, w.ah);
  add(s.cv_dl, w.dl);
  add(s.cv_dh, w.dh);
  if (!(wsum > 0.0)) return std::nullopt;
  return acc / wsum;
}

std::vector<double> percentile_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  if (n < 2) throw ValidationError("percentile ranks need at least two values");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> pct(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their average
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    double p = 100.0 * (avg_rank - 1.0) / (static_cast<double>(n) - 1.0);
    for (size_t t = i; t <= j; ++t) pct[order[t]] = p;
    i = j + 1;
  }
  return pct;
}

std::vector<HotspotRow> rank_sites(const std::vector<LbvSummary>& summaries,
                                   const std::vector<IntersectionSite>& sites,
                                   const HotspotThresholds& thresholds,
                                   const HotspotWeights& weights) {
  std::map<std::string, const IntersectionSite*> by_id;
  for (const IntersectionSite& s : sites) by_id[s.site_id] = &s;

  std::vector<HotspotRow> scored, insufficient;
  std::vector<double> crash_vals, score_vals;
  for (const LbvSummary& s : summaries) {
    auto it = by_id.find(s.site_id);
    if (it == by_id.end())
      throw ValidationError("site '" + s.site_id + "' has volatility but no inventory row");
    HotspotRow row;
    row.site_id = s.site_id;
    row.crashes_5yr = it->second->crashes_5yr_total;
    std::optional<double> score = volatility_score(s, weights);
    if (!score) {
      row.flag = HotspotFlag::kInsufficient;
      insufficient.push_back(std::move(row));
      continue;
    }
    row.volatility_score = *score;
    crash_vals.push_back(static_cast<double>(row.crashes_5yr));
    score_vals.push_back(row.volatility_score);
    scored.push_back(std::move(row));
  }
  if (scored.size() < 2)
    throw ValidationError("ranking needs at least two sites with a defined volatility score");

  std::vector<double> crash_pct = percentile_ranks(crash_vals);
  std::vector<double> score_pct = percentile_ranks(score_vals);
  for (size_t i = 0; i < scored.size(); ++i) {
    HotspotRow& row = scored[i];
    row.crash_percentile = crash_pct[i];
    row.volatility_percentile = score_pct[i];
    row.discrepancy = row.volatility_percentile - row.crash_percentile;
    if (row.crash_percentile >= thresholds.known_min_crash_pct)
      row.flag = HotspotFlag::kKnown;
    else if (row.discrepancy >= thresholds.latent_min_discrepancy &&
             row.crash_percentile <= thresholds.latent_max_crash_pct)
      row.flag = HotspotFlag::kLatent;
    else
      row.flag = HotspotFlag::kNormal;
  }
  std::sort(scored.begin(), scored.end(), [](const HotspotRow& a, const HotspotRow& b) {
    if (a.discrepancy != b.discrepancy) return a.discrepancy > b.discrepancy;
    return a.site_id < b.site_id;
  });
  std::sort(insufficient.begin(), insufficient.end(),
            [](const HotspotRow& a, const HotspotRow& b) { return a.site_id < b.site_id; });
  for (HotspotRow& row : insufficient) scored.push_back(std::move(row));
  return scored;
}

void attach_fit_residuals(std::vector<HotspotRow>& rows, const std::vector<std::string>& fit_ids,
                          const std::vector<int64_t>& response,
                          const std::vector<double>& fitted) {
  if (fit_ids.size() != response.size() || fit_ids.size() != fitted.size())
    throw ValidationError("fit residual inputs have mismatched lengths");
  std::map<std::string, double> residual;
  for (size_t i = 0; i < fit_ids.size(); ++i)
    residual[fit_ids[i]] = static_cast<double>(response[i]) - fitted[i];
  for (HotspotRow& row : rows) {
    auto it = residual.find(row.site_id);
    if (it != residual.end()) row.fit_residual = it->second;
  }
}

void write_hotspot_table(const std::string& path, const std::vector<HotspotRow>& rows) {
  DelimWriter w(path);
  w.write_row({"site_id", "crashes_5yr", "crash_percentile", "volatility_score",
               "volatility_percentile", "discrepancy", "flag", "fit_residual"});
  for (const HotspotRow& r : rows) {
    bool scored = r.flag != HotspotFlag::kInsufficient;
    w.write_row({r.site_id, std::to_string(r.crashes_5yr),
                 scored ? fmt_double(r.crash_percentile) : "",
                 scored ? fmt_double(r.volatility_score) : "",
                 scored ? fmt_double(r.volatility_percentile) : "",
                 scored ? fmt_double(r.discrepancy) : "", hotspot_flag_name(r.flag),
                 r.fit_residual ? fmt_double(*r.fit_residual) : ""});
  }
  w.close();
}

void write_plot_file(const std::string& path, const std::vector<HotspotRow>& rows,
                     const std::vector<LbvSummary>& summaries,
                     const std::vector<IntersectionSite>& sites) {
  std::map<std::string, const IntersectionSite*> site_by_id;
  for (const IntersectionSite& s : sites) site_by_id[s.site_id] = &s;
  std::map<std::string, const LbvSummary*> summary_by_id;
  for (const LbvSummary& s : summaries) summary_by_id[s.site_id] = &s;

  double crash_max = 0.0, al_max = 0.0, dl_max = 0.0;
  for (const HotspotRow& r : rows) {
    crash_max = std::max(crash_max, static_cast<double>(r.crashes_5yr));
    auto it = summary_by_id.find(r.site_id);
    if (it == summary_by_id.end()) continue;
    if (it->second->cv_al) al_max = std::max(al_max, *it->second->cv_al);
    if (it->second->cv_dl) dl_max = std::max(dl_max, *it->second->cv_dl);
  }
  auto scaled = [](double v, double vmax) { return vmax > 0.0 ? v / vmax : 0.0; };

  DelimWriter w(path);
  w.write_row({"site_id", "lon", "lat", "crash_radius", "cv_al_radius", "cv_dl_radius"});
  for (const HotspotRow& r : rows) {
    auto site_it = site_by_id.find(r.site_id);
    if (site_it == site_by_id.end())
      throw ValidationError("site '" + r.site_id + "' missing from the inventory");
    const IntersectionSite& site = *site_it->second;
    auto sum_it = summary_by_id.find(r.site_id);
    const LbvSummary* sum = sum_it == summary_by_id.end() ? nullptr : sum_it->second;
    w.write_row({r.site_id, fmt_double(site.center_lon), fmt_double(site.center_lat),
                 fmt_double(scaled(static_cast<double>(r.crashes_5yr), crash_max)),
                 sum && sum->cv_al ? fmt_double(scaled(*sum->cv_al, al_max)) : "",
                 sum && sum->cv_dl ? fmt_double(scaled(*sum->cv_dl, dl_max)) : ""});
  }
  w.close();
}

}  // namespace lbv
