#pragma once

// Intersection inventory and point-to-intersection assignment. Every BSM
// point lands on at most one site: the nearest center within the match
// radius, ties broken by smallest site_id. The latitude-window prefilter
// is provably equivalent to checking every site.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbv/ingest.hpp"

namespace lbv {

enum class Control { kSignalized, kUnsignalized };

std::string control_name(Control c);
Control parse_control(const std::string& s);

struct IntersectionSite {
  std::string site_id;
  std::string name;
  double center_lat = 0.0;
  double center_lon = 0.0;
  Control control = Control::kUnsignalized;
  int64_t legs = 0;
  double aadt_major = 0.0;
  double aadt_minor = 0.0;
  double speed_limit_major = 0.0;  // mph, as posted
  double speed_limit_minor = 0.0;
  int64_t through_lanes_total = 0;
  int64_t left_lanes_total = 0;
  int64_t right_lanes_total = 0;
  int64_t crashes_5yr_total = 0;
  int64_t crashes_5yr_rearend = 0;
};

// One BSM sample attributed to a site.
struct MatchedPoint {
  std::string site_id;
  std::string device_id;
  double timestamp = 0.0;
  double speed = 0.0;
  double accel_long = 0.0;
};

constexpr double kDefaultMatchRadiusM = 45.72;  // 150 ft

// Loads and validates the inventory; duplicate site_id or any violated
// site invariant is fatal. An empty (header-only) file returns an empty
// sequence with a warning on stderr.
std::vector<IntersectionSite> load_inventory(const std::string& path);

void write_inventory(const std::string& path, const std::vector<IntersectionSite>& sites);

// Haversine distance in meters on a sphere of radius 6,371,000 m.
double great_circle_distance(double lat_a, double lon_a, double lat_b, double lon_b);

// Read-only spatial index over site centers, shared across matching
// tasks. Sites are held sorted by latitude; a query scans only the
// latitude window that could possibly contain a center within the
// radius (the window uses a meters-per-degree constant slightly below
// the true sphere value, so it never excludes a true match).
class SiteIndex {
 public:
  SiteIndex(const std::vector<IntersectionSite>& sites, double radius_m);

  // Index into the original sites vector, or nullopt when no center is
  // within the radius.
  std::optional<size_t> nearest_within(double lat, double lon) const;

  double radius_m() const { return radius_m_; }

 private:
  struct Entry {
    double lat;
    double lon;
    size_t original;
  };
  std::vector<Entry> by_lat_;
  const std::vector<IntersectionSite>* sites_;
  double radius_m_;
  double lat_window_deg_;
};

struct MatchStats {
  int64_t points_in = 0;
  int64_t points_matched = 0;
};

// Assigns each record to at most one site. Output order equals input
// order restricted to matched records, for any thread count.
std::vector<MatchedPoint> match_points(const std::vector<BsmRecord>& records,
                                       const std::vector<IntersectionSite>& sites,
                                       double radius_m, MatchStats* stats = nullptr);

void write_matched_file(const std::string& path, const std::vector<MatchedPoint>& points);
std::vector<MatchedPoint> read_matched_file(const std::string& path);

}  // namespace lbv
