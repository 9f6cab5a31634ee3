#include "lbv/ingest.hpp"

#include <cmath>
#include <unordered_map>

#include "lbv/csv.hpp"
#include "lbv/errors.hpp"

namespace lbv {

int64_t IngestAudit::total_rejects() const {
  int64_t s = 0;
  for (const auto& [rule, n] : rejects_by_rule) s += n;
  return s;
}

double IngestAudit::lateral_saturated_fraction() const {
  return records_read == 0 ? 0.0 : static_cast<double>(lateral_saturated) / static_cast<double>(records_read);
}

void IngestAudit::merge(const IngestAudit& other) {
  records_read += other.records_read;
  records_accepted += other.records_accepted;
  lateral_saturated += other.lateral_saturated;
  for (const auto& [rule, n] : other.rejects_by_rule) rejects_by_rule[rule] += n;
}

BsmSchema BsmSchema::from_file(const std::string& path) {
  // Schema files are flat key=value: canonical_name = source column.
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema: " + path);
  BsmSchema s;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("schema line " + std::to_string(line_no) + ": expected canonical=column");
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (key.empty() || value.empty())
      throw ValidationError("schema line " + std::to_string(line_no) + ": empty name");
    s.columns[key] = value;
  }
  return s;
}

std::string BsmSchema::column_for(const std::string& canonical) const {
  auto it = columns.find(canonical);
  return it == columns.end() ? canonical : it->second;
}

Units parse_units(const std::string& s) {
  if (s == "si") return Units::kSi;
  if (s == "us") return Units::kUs;
  throw ValidationError("units must be si or us, got '" + s + "'");
}

namespace {

constexpr double kMphToMps = 0.44704;
constexpr double kFpsSqToMps2 = 0.3048;

struct TripKey {
  std::string device;
  std::string trip;
  bool operator==(const TripKey&) const = default;
};

struct TripKeyHash {
  size_t operator()(const TripKey& k) const {
    return std::hash<std::string>()(k.device) * 1000003u ^ std::hash<std::string>()(k.trip);
  }
};

}  // namespace

IngestAudit parse_bsm_file(const std::string& path, const BsmSchema& schema,
                           Units units, const RecordSink& sink) {
  DelimReader reader(path);

  auto col = [&](const std::string& canonical, bool required) -> std::optional<size_t> {
    auto idx = reader.column(schema.column_for(canonical));
    if (!idx && required)
      throw ValidationError(path + ": missing required column '" + schema.column_for(canonical) +
                            "' (field " + canonical + ")");
    return idx;
  };

  const size_t c_device = *col("device_id", true);
  const size_t c_trip = *col("trip_id", true);
  const size_t c_time = *col("timestamp", true);
  const size_t c_lat = *col("latitude", true);
  const size_t c_lon = *col("longitude", true);
  const size_t c_speed = *col("speed", true);
  const size_t c_heading = *col("heading", true);
  const size_t c_along = *col("accel_long", true);
  const std::optional<size_t> c_alat = col("accel_lat", false);

  size_t needed = std::max({c_device, c_trip, c_time, c_lat, c_lon, c_speed, c_heading, c_along});
  if (c_alat) needed = std::max(needed, *c_alat);

  const double speed_scale = units == Units::kUs ? kMphToMps : 1.0;
  const double accel_scale = units == Units::kUs ? kFpsSqToMps2 : 1.0;

  IngestAudit audit;
  std::unordered_map<TripKey, double, TripKeyHash> last_time;

  while (reader.next_row()) {
    ++audit.records_read;
    const auto& f = reader.fields();
    auto reject = [&](const char* rule) { audit.rejects_by_rule[rule]++; };

    if (f.size() <= needed) {
      reject("short_row");
      continue;
    }
    auto ts = parse_double(f[c_time]);
    auto lat = parse_double(f[c_lat]);
    auto lon = parse_double(f[c_lon]);
    auto speed = parse_double(f[c_speed]);
    auto heading = parse_double(f[c_heading]);
    auto along = parse_double(f[c_along]);
    bool alat_present = c_alat && !trim(f[*c_alat]).empty();
    std::optional<double> alat;
    if (alat_present) alat = parse_double(f[*c_alat]);
    if (!ts || !lat || !lon || !speed || !heading || !along || (alat_present && !alat)) {
      reject("bad_number");
      continue;
    }
    double speed_si = *speed * speed_scale;
    double along_si = *along * accel_scale;
    if (*lat < -90.0 || *lat > 90.0) {
      reject("lat_range");
      continue;
    }
    if (*lon < -180.0 || *lon > 180.0) {
      reject("lon_range");
      continue;
    }
    if (speed_si < 0.0) {
      reject("speed_negative");
      continue;
    }
    if (speed_si > kMaxSpeedMps) {
      reject("speed_excessive");
      continue;
    }
    if (*heading < 0.0 || *heading >= 360.0) {
      reject("heading_range");
      continue;
    }
    if (std::abs(along_si) > kAccelLongRejectMps2) {
      reject("accel_long_extreme");
      continue;
    }
    TripKey key{std::string(f[c_device]), std::string(f[c_trip])};
    auto [it, inserted] = last_time.try_emplace(key, *ts);
    if (!inserted) {
      if (*ts <= it->second) {
        reject("timestamp_regression");
        continue;
      }
      it->second = *ts;
    }

    BsmRecord rec;
    rec.device_id = key.device;
    rec.trip_id = key.trip;
    rec.timestamp = *ts;
    rec.latitude = *lat;
    rec.longitude = *lon;
    rec.speed = speed_si;
    rec.heading = *heading;
    rec.accel_long = along_si;
    if (alat) {
      double alat_si = *alat * accel_scale;
      if (std::abs(alat_si) >= kLateralSaturationMps2) {
        ++audit.lateral_saturated;  // hardware cap artifact: null, keep row
      } else {
        rec.accel_lat = alat_si;
      }
    }
    ++audit.records_accepted;
    sink(rec);
  }
  return audit;
}

IngestAudit parse_bsm_file(const std::string& path, const BsmSchema& schema,
                           Units units, std::vector<BsmRecord>& out) {
  return parse_bsm_file(path, schema, units, [&out](const BsmRecord& r) { out.push_back(r); });
}

std::vector<ConsistencyFlag> check_accel_consistency(const std::vector<BsmRecord>& trip,
                                                     double tolerance_mps2) {
  std::vector<ConsistencyFlag> flags;
  if (trip.size() < 3) return flags;  // no interior record to check
  for (size_t i = 1; i + 1 < trip.size(); ++i) {
    double dt = trip[i + 1].timestamp - trip[i - 1].timestamp;
    if (dt <= 0.0) continue;  // defensive; trips are strictly increasing
    double est = (trip[i + 1].speed - trip[i - 1].speed) / dt;
    if (std::abs(est - trip[i].accel_long) > tolerance_mps2)
      flags.push_back({i, trip[i].timestamp, trip[i].accel_long, est});
  }
  return flags;
}

std::vector<std::pair<std::string, std::vector<size_t>>> group_trips(
    const std::vector<BsmRecord>& records) {
  std::vector<std::pair<std::string, std::vector<size_t>>> groups;
  std::unordered_map<std::string, size_t> slot;
  for (size_t i = 0; i < records.size(); ++i) {
    std::string key = records[i].device_id + "\x1f" + records[i].trip_id;
    auto [it, inserted] = slot.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back(key, std::vector<size_t>{});
    groups[it->second].second.push_back(i);
  }
  return groups;
}

void write_bsm_file(const std::string& path, const std::vector<BsmRecord>& records) {
  DelimWriter w(path);
  w.write_row({"device_id", "trip_id", "timestamp", "latitude", "longitude", "speed",
               "heading", "accel_long", "accel_lat"});
  for (const auto& r : records) {
    w.write_row({r.device_id, r.trip_id, fmt_double(r.timestamp), fmt_double(r.latitude),
                 fmt_double(r.longitude), fmt_double(r.speed), fmt_double(r.heading),
                 fmt_double(r.accel_long), r.accel_lat ? fmt_double(*r.accel_lat) : ""});
  }
  w.close();
}

}  // namespace lbv
