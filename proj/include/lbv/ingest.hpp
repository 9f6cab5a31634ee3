#pragma once

// Raw BSM log ingestion: stream rows out of delimited text, validate
// them into canonical SI records, and keep a full accounting of what was
// rejected and why. Parsing is total: every input row is either accepted
// or attributed to exactly one reject rule.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lbv {

// One 10 Hz probe message in canonical units (m, m/s, m/s^2, degrees).
struct BsmRecord {
  std::string device_id;
  std::string trip_id;
  double timestamp = 0.0;  // seconds since epoch, fractional
  double latitude = 0.0;
  double longitude = 0.0;
  double speed = 0.0;
  double heading = 0.0;
  double accel_long = 0.0;
  std::optional<double> accel_lat;  // null once saturated or absent
};

struct IngestAudit {
  int64_t records_read = 0;
  int64_t records_accepted = 0;
  std::map<std::string, int64_t> rejects_by_rule;
  int64_t lateral_saturated = 0;

  int64_t total_rejects() const;
  double lateral_saturated_fraction() const;
  void merge(const IngestAudit& other);
};

// Maps canonical field names to the column headers of a specific source.
// Unmapped names default to the canonical name itself.
struct BsmSchema {
  std::map<std::string, std::string> columns;

  static BsmSchema from_file(const std::string& path);
  std::string column_for(const std::string& canonical) const;
};

enum class Units { kSi, kUs };  // us: speed in mph, accelerations in ft/s^2

Units parse_units(const std::string& s);

// Recording cap of the DSRC hardware: lateral values at or beyond 2g in
// magnitude are saturation artifacts, not measurements.
constexpr double kLateralSaturationMps2 = 19.6;
// Longitudinal values beyond this are corrupt, and the row is rejected.
constexpr double kAccelLongRejectMps2 = 15.0;
constexpr double kMaxSpeedMps = 80.0;

using RecordSink = std::function<void(const BsmRecord&)>;

// Streams accepted records to the sink in file order. Rejected rows are
// counted per rule and never emitted. A record whose lateral channel is
// saturated is emitted with accel_lat nulled and counted.
IngestAudit parse_bsm_file(const std::string& path, const BsmSchema& schema,
                           Units units, const RecordSink& sink);

// Convenience form collecting into a vector.
IngestAudit parse_bsm_file(const std::string& path, const BsmSchema& schema,
                           Units units, std::vector<BsmRecord>& out);

// A reported acceleration that disagrees with the speed trajectory.
struct ConsistencyFlag {
  size_t index = 0;  // position within the trip sequence
  double timestamp = 0.0;
  double reported = 0.0;   // accel_long in the record
  double estimated = 0.0;  // central finite difference of speed
};

// Compares reported accel_long against the central finite difference of
// speed at each interior record of one time-ordered trip. Advisory: the
// caller decides whether flagged records are kept (default) or dropped.
std::vector<ConsistencyFlag> check_accel_consistency(const std::vector<BsmRecord>& trip,
                                                     double tolerance_mps2 = 1.0);

// Groups record indices by (device_id, trip_id) in order of first
// appearance; within a group, file order is preserved.
std::vector<std::pair<std::string, std::vector<size_t>>> group_trips(
    const std::vector<BsmRecord>& records);

// Canonical-stream interchange: one row per record, empty accel_lat cell
// for null.
void write_bsm_file(const std::string& path, const std::vector<BsmRecord>& records);

}  // namespace lbv
