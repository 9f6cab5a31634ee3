#include "lbv/geo.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "lbv/csv.hpp"
#include "lbv/errors.hpp"
#include "lbv/kernels/kernels.hpp"
#include "lbv/parallel.hpp"

namespace lbv {

std::string control_name(Control c) {
  return c == Control::kSignalized ? "signalized" : "unsignalized";
}

Control parse_control(const std::string& s) {
  if (s == "signalized") return Control::kSignalized;
  if (s == "unsignalized") return Control::kUnsignalized;
  throw ValidationError("control must be signalized or unsignalized, got '" + s + "'");
}

namespace {

constexpr double kDegToRad = 0.017453292519943295;

// Slightly below the sphere's true meters-per-degree of latitude
// (pi * R / 180 = 111,194.93), so radius/this overestimates the window.
constexpr double kConservativeMetersPerDegLat = 111000.0;

double require_num(const DelimReader& r, size_t idx, const std::string& site,
                   const std::string& field) {
  auto v = parse_double(r.fields()[idx]);
  if (!v)
    throw ValidationError(r.path() + " line " + std::to_string(r.line_number()) + ", site '" +
                          site + "': field " + field + " is not a number");
  return *v;
}

int64_t require_int(const DelimReader& r, size_t idx, const std::string& site,
                    const std::string& field) {
  auto v = parse_int(r.fields()[idx]);
  if (!v)
    throw ValidationError(r.path() + " line " + std::to_string(r.line_number()) + ", site '" +
                          site + "': field " + field + " is not an integer");
  return *v;
}

}  // namespace

std::vector<IntersectionSite> load_inventory(const std::string& path) {
  DelimReader r(path);
  const char* names[] = {"site_id", "name", "center_lat", "center_lon", "control", "legs",
                         "aadt_major", "aadt_minor", "speed_limit_major", "speed_limit_minor",
                         "through_lanes_total", "left_lanes_total", "right_lanes_total",
                         "crashes_5yr_total", "crashes_5yr_rearend"};
  size_t idx[std::size(names)];
  for (size_t i = 0; i < std::size(names); ++i) {
    auto c = r.column(names[i]);
    if (!c) throw ValidationError(path + ": missing inventory column '" + std::string(names[i]) + "'");
    idx[i] = *c;
  }

  std::vector<IntersectionSite> sites;
  std::set<std::string> seen;
  while (r.next_row()) {
    if (r.fields().size() <= *std::max_element(idx, idx + std::size(names)))
      throw ValidationError(path + " line " + std::to_string(r.line_number()) + ": short row");
    IntersectionSite s;
    s.site_id = std::string(trim(r.fields()[idx[0]]));
    if (s.site_id.empty())
      throw ValidationError(path + " line " + std::to_string(r.line_number()) + ": empty site_id");
    if (!seen.insert(s.site_id).second)
      throw ValidationError(path + ": duplicate site_id '" + s.site_id + "'");
    s.name = std::string(trim(r.fields()[idx[1]]));
    s.center_lat = require_num(r, idx[2], s.site_id, "center_lat");
    s.center_lon = require_num(r, idx[3], s.site_id, "center_lon");
    s.control = parse_control(std::string(trim(r.fields()[idx[4]])));
    s.legs = require_int(r, idx[5], s.site_id, "legs");
    s.aadt_major = require_num(r, idx[6], s.site_id, "aadt_major");
    s.aadt_minor = require_num(r, idx[7], s.site_id, "aadt_minor");
    s.speed_limit_major = require_num(r, idx[8], s.site_id, "speed_limit_major");
    s.speed_limit_minor = require_num(r, idx[9], s.site_id, "speed_limit_minor");
    s.through_lanes_total = require_int(r, idx[10], s.site_id, "through_lanes_total");
    s.left_lanes_total = require_int(r, idx[11], s.site_id, "left_lanes_total");
    s.right_lanes_total = require_int(r, idx[12], s.site_id, "right_lanes_total");
    s.crashes_5yr_total = require_int(r, idx[13], s.site_id, "crashes_5yr_total");
    s.crashes_5yr_rearend = require_int(r, idx[14], s.site_id, "crashes_5yr_rearend");

    auto fail = [&](const std::string& rule) {
      throw ValidationError(path + ", site '" + s.site_id + "': invariant violated: " + rule);
    };
    if (s.center_lat < -90.0 || s.center_lat > 90.0) fail("latitude in [-90, 90]");
    if (s.center_lon < -180.0 || s.center_lon > 180.0) fail("longitude in [-180, 180]");
    if (!(s.aadt_minor > 0.0)) fail("aadt_minor > 0");
    if (!(s.aadt_major >= s.aadt_minor)) fail("aadt_major >= aadt_minor");
    if (s.legs != 3 && s.legs != 4) fail("legs in {3, 4}");
    if (s.crashes_5yr_total < 0) fail("crashes_5yr_total >= 0");
    if (s.crashes_5yr_rearend < 0) fail("crashes_5yr_rearend >= 0");
    if (s.crashes_5yr_rearend > s.crashes_5yr_total) fail("crashes_5yr_rearend <= crashes_5yr_total");
    sites.push_back(std::move(s));
  }
  if (sites.empty()) std::cerr << "warning: inventory " << path << " has no data rows\n";
  return sites;
}

void write_inventory(const std::string& path, const std::vector<IntersectionSite>& sites) {
  DelimWriter w(path);
  w.write_row({"site_id", "name", "center_lat", "center_lon", "control", "legs", "aadt_major",
               "aadt_minor", "speed_limit_major", "speed_limit_minor", "through_lanes_total",
               "left_lanes_total", "right_lanes_total", "crashes_5yr_total", "crashes_5yr_rearend"});
  for (const auto& s : sites) {
    w.write_row({s.site_id, s.name, fmt_double(s.center_lat), fmt_double(s.center_lon),
                 control_name(s.control), std::to_string(s.legs), fmt_double(s.aadt_major),
                 fmt_double(s.aadt_minor), fmt_double(s.speed_limit_major),
                 fmt_double(s.speed_limit_minor), std::to_string(s.through_lanes_total),
                 std::to_string(s.left_lanes_total), std::to_string(s.right_lanes_total),
                 std::to_string(s.crashes_5yr_total), std::to_string(s.crashes_5yr_rearend)});
  }
  w.close();
}

double great_circle_distance(double lat_a, double lon_a, double lat_b, double lon_b) {
  double phi_a = lat_a * kDegToRad;
  double phi_b = lat_b * kDegToRad;
  double sp = std::sin(0.5 * (phi_b - phi_a));
  double sl = std::sin(0.5 * kDegToRad * (lon_b - lon_a));
  double h = sp * sp + std::cos(phi_a) * std::cos(phi_b) * sl * sl;
  if (h > 1.0) h = 1.0;
  return 2.0 * kernels::kEarthRadiusM * std::asin(std::sqrt(h));
}

SiteIndex::SiteIndex(const std::vector<IntersectionSite>& sites, double radius_m)
    : sites_(&sites), radius_m_(radius_m) {
  if (!(radius_m > 0.0)) throw ValidationError("match radius must be positive");
  by_lat_.reserve(sites.size());
  for (size_t i = 0; i < sites.size(); ++i)
    by_lat_.push_back({sites[i].center_lat, sites[i].center_lon, i});
  std::sort(by_lat_.begin(), by_lat_.end(),
            [](const Entry& a, const Entry& b) { return a.lat < b.lat; });
  lat_window_deg_ = radius_m / kConservativeMetersPerDegLat;
}

std::optional<size_t> SiteIndex::nearest_within(double lat, double lon) const {
  auto lo = std::lower_bound(by_lat_.begin(), by_lat_.end(), lat - lat_window_deg_,
                             [](const Entry& e, double v) { return e.lat < v; });
  auto hi = std::upper_bound(by_lat_.begin(), by_lat_.end(), lat + lat_window_deg_,
                             [](double v, const Entry& e) { return v < e.lat; });
  std::optional<size_t> best;
  double best_d = 0.0;
  for (auto it = lo; it != hi; ++it) {
    double d = great_circle_distance(lat, lon, it->lat, it->lon);
    if (d > radius_m_) continue;
    const std::string& id = (*sites_)[it->original].site_id;
    if (!best || d < best_d || (d == best_d && id < (*sites_)[*best].site_id)) {
      best = it->original;
      best_d = d;
    }
  }
  return best;
}

std::vector<MatchedPoint> match_points(const std::vector<BsmRecord>& records,
                                       const std::vector<IntersectionSite>& sites,
                                       double radius_m, MatchStats* stats) {
  SiteIndex index(sites, radius_m);
  const size_t n = records.size();
  const size_t chunk = kDefaultChunk;
  const size_t n_chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
  std::vector<std::vector<MatchedPoint>> per_chunk(n_chunks);
  parallel_chunks(n, chunk, [&](size_t c, size_t b, size_t e) {
    auto& out = per_chunk[c];
    for (size_t i = b; i < e; ++i) {
      const BsmRecord& r = records[i];
      auto site = index.nearest_within(r.latitude, r.longitude);
      if (!site) continue;
      out.push_back({sites[*site].site_id, r.device_id, r.timestamp, r.speed, r.accel_long});
    }
  });
  std::vector<MatchedPoint> matched;
  for (auto& v : per_chunk) {
    matched.insert(matched.end(), std::make_move_iterator(v.begin()),
                   std::make_move_iterator(v.end()));
  }
  if (stats) {
    stats->points_in = static_cast<int64_t>(n);
    stats->points_matched = static_cast<int64_t>(matched.size());
  }
  return matched;
}

void write_matched_file(const std::string& path, const std::vector<MatchedPoint>& points) {
  DelimWriter w(path);
  w.write_row({"site_id", "device_id", "timestamp", "speed", "accel_long"});
  for (const auto& p : points) {
    w.write_row({p.site_id, p.device_id, fmt_double(p.timestamp), fmt_double(p.speed),
                 fmt_double(p.accel_long)});
  }
  w.close();
}

std::vector<MatchedPoint> read_matched_file(const std::string& path) {
  DelimReader r(path);
  const char* names[] = {"site_id", "device_id", "timestamp", "speed", "accel_long"};
  size_t idx[std::size(names)];
  for (size_t i = 0; i < std::size(names); ++i) {
    auto c = r.column(names[i]);
    if (!c) throw ValidationError(path + ": missing column '" + std::string(names[i]) + "'");
    idx[i] = *c;
  }
  std::vector<MatchedPoint> out;
  while (r.next_row()) {
    MatchedPoint p;
    p.site_id = std::string(r.fields()[idx[0]]);
    p.device_id = std::string(r.fields()[idx[1]]);
    auto ts = parse_double(r.fields()[idx[2]]);
    auto sp = parse_double(r.fields()[idx[3]]);
    auto ac = parse_double(r.fields()[idx[4]]);
    if (!ts || !sp || !ac)
      throw ValidationError(path + " line " + std::to_string(r.line_number()) + ": bad number");
    p.timestamp = *ts;
    p.speed = *sp;
    p.accel_long = *ac;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace lbv
