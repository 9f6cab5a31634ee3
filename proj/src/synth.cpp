#include "lbv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lbv/csv.hpp"
#include "lbv/errors.hpp"
#include "lbv/kernels/kernels.hpp"
#include "lbv/rng.hpp"

namespace lbv {

namespace {

void check_profile(const TrajectoryProfile& p) {
  if (p.vehicles_per_regime < 1) throw ValidationError("vehicles_per_regime must be positive");
  if (p.ticks < 2) throw ValidationError("ticks must be at least 2");
  if (!(p.tick_s > 0.0)) throw ValidationError("tick_s must be positive");
  for (const RegimeParams* r : {&p.accel_low, &p.accel_high, &p.decel_low, &p.decel_high}) {
    if (!(r->accel_mean > 0.0)) throw ValidationError("accel_mean must be positive");
    if (r->accel_sd < 0.0) throw ValidationError("accel_sd must be non-negative");
  }
  if (!(0.0 < p.low_speed_lo && p.low_speed_lo <= p.low_speed_hi &&
        p.low_speed_hi < p.high_speed_lo && p.high_speed_lo <= p.high_speed_hi))
    throw ValidationError("speed bands must satisfy 0 < low_lo <= low_hi < high_lo <= high_hi");
}

}  // namespace

std::vector<BsmRecord> generate_trajectories(const IntersectionSite& site,
                                             const TrajectoryProfile& p) {
  check_profile(p);
  const double deg_per_m = 180.0 / (3.14159265358979323846 * kernels::kEarthRadiusM);
  const RegimeParams* regimes[4] = {&p.accel_low, &p.accel_high, &p.decel_low, &p.decel_high};
  const size_t ticks = static_cast<size_t>(p.ticks);

  std::vector<BsmRecord> out;
  out.reserve(static_cast<size_t>(4 * p.vehicles_per_regime) * ticks);
  std::vector<double> v(ticks), pos(ticks);

  for (int f = 0; f < 4; ++f) {
    const bool accelerating = f < 2;
    const bool high_band = (f == 1 || f == 3);
    for (int64_t i = 0; i < p.vehicles_per_regime; ++i) {
      uint64_t gidx = static_cast<uint64_t>(f) * static_cast<uint64_t>(p.vehicles_per_regime) +
                      static_cast<uint64_t>(i);
      Rng rng = Rng::substream(p.seed, "trip", gidx);
      double a = std::max(rng.normal(regimes[f]->accel_mean, regimes[f]->accel_sd),
                          kAccelMagnitudeFloor);
      double vmid = high_band ? rng.uniform(p.high_speed_lo, p.high_speed_hi)
                              : rng.uniform(p.low_speed_lo, p.low_speed_hi);
      double sign = accelerating ? 1.0 : -1.0;
      double span = p.tick_s * static_cast<double>(p.ticks - 1);

      // speed is linear in time, so the trapezoid position integral is
      // exact; the path is centered on the site so every point stays
      // well inside the match radius
      v[0] = vmid - sign * a * span / 2.0;
      pos[0] = 0.0;
      for (size_t t = 1; t < ticks; ++t) {
        v[t] = v[t - 1] + sign * a * p.tick_s;
        pos[t] = pos[t - 1] + (v[t - 1] + v[t]) / 2.0 * p.tick_s;
      }
      double mid = pos[ticks - 1] / 2.0;

      char dev[48];
      std::snprintf(dev, sizeof dev, "%s%06llu", p.device_prefix.c_str(),
                    static_cast<unsigned long long>(gidx));
      double t0 = static_cast<double>(gidx) * 10.0;
      for (size_t t = 0; t < ticks; ++t) {
        BsmRecord r;
        r.device_id = dev;
        r.trip_id = "1";
        r.timestamp = t0 + static_cast<double>(t) * p.tick_s;
        r.latitude = site.center_lat + (pos[t] - mid) * deg_per_m;
        r.longitude = site.center_lon;
        r.speed = v[t];
        r.heading = 0.0;
        r.accel_long = sign * a;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

std::vector<int64_t> generate_counts(const DesignMatrix& d, const std::vector<double>& beta,
                                     const std::vector<double>& sigma, uint64_t seed) {
  if (d.n_rows == 0) throw ValidationError("empty design matrix");
  if (beta.size() != d.n_cols) throw ValidationError("beta length does not match the design");
  if (sigma.size() != d.n_cols) throw ValidationError("sigma length does not match the design");
  for (double s : sigma)
    if (s < 0.0) throw ValidationError("sigma must be non-negative");
  std::vector<int64_t> out(d.n_rows, 0);
  for (size_t i = 0; i < d.n_rows; ++i) {
    Rng rng = Rng::substream(seed, "count", i);
    double eta = 0.0;
    for (size_t j = 0; j < d.n_cols; ++j) {
      double b = beta[j];
      if (sigma[j] > 0.0) b += sigma[j] * rng.normal();
      eta += b * d.at(i, j);
    }
    double lambda = std::exp(eta);
    if (!std::isfinite(lambda))
      throw ValidationError("count mean overflows at row " + std::to_string(i));
    out[i] = rng.poisson(lambda);
  }
  return out;
}

SynthTrajectoriesResult synth_trajectories_from_config(const Config& cfg,
                                                       const std::string& out_path) {
  int64_t n_sites = cfg.get_int("sites", 1);
  if (n_sites < 1) throw ValidationError("sites must be positive");
  std::string inventory_out = cfg.require("inventory_out");

  TrajectoryProfile base;
  base.vehicles_per_regime = cfg.get_int("vehicles_per_regime", base.vehicles_per_regime);
  RegimeParams r{cfg.get_double("accel_mean", 1.0), cfg.get_double("accel_sd", 0.5)};
  base.accel_low = base.accel_high = base.decel_low = base.decel_high = r;
  uint64_t master = static_cast<uint64_t>(cfg.get_int("seed", 1));
  double base_lat = cfg.get_double("base_lat", 42.28);
  double base_lon = cfg.get_double("base_lon", -83.74);
  double spacing = cfg.get_double("site_spacing_deg", 0.02);
  if (!(spacing > 0.0)) throw ValidationError("site_spacing_deg must be positive");

  std::vector<IntersectionSite> sites;
  std::vector<BsmRecord> records;
  for (int64_t s = 0; s < n_sites; ++s) {
    Rng site_rng = Rng::substream(master, "site", static_cast<uint64_t>(s));
    IntersectionSite site;
    char id[24];
    std::snprintf(id, sizeof id, "S%03lld", static_cast<long long>(s));
    site.site_id = id;
    site.name = std::string("synthetic ") + id;
    site.center_lat = base_lat;
    site.center_lon = base_lon + spacing * static_cast<double>(s);
    site.control = (s % 2 == 0) ? Control::kSignalized : Control::kUnsignalized;
    site.legs = 3 + (s % 2);
    site.aadt_major = std::floor(site_rng.uniform(5000.0, 30000.0));
    site.aadt_minor = std::min(std::floor(site_rng.uniform(500.0, 8000.0)), site.aadt_major);
    site.speed_limit_major = 25.0 + 5.0 * static_cast<double>(s % 5);
    site.speed_limit_minor = 25.0;
    site.through_lanes_total = 2 + (s % 4);
    site.left_lanes_total = s % 3;
    site.right_lanes_total = s % 2;
    site.crashes_5yr_total = site_rng.poisson(8.0);
    site.crashes_5yr_rearend =
        site.crashes_5yr_total > 0
            ? static_cast<int64_t>(site_rng.uniform01() *
                                   static_cast<double>(site.crashes_5yr_total + 1))
            : 0;
    if (site.crashes_5yr_rearend > site.crashes_5yr_total)
      site.crashes_5yr_rearend = site.crashes_5yr_total;

    TrajectoryProfile prof = base;
    prof.seed = Rng::substream(master, "site_trips", static_cast<uint64_t>(s)).next_u64();
    prof.device_prefix = site.site_id + "_";
    std::vector<BsmRecord> recs = generate_trajectories(site, prof);
    records.insert(records.end(), std::make_move_iterator(recs.begin()),
                   std::make_move_iterator(recs.end()));
    sites.push_back(std::move(site));
  }
  write_inventory(inventory_out, sites);
  write_bsm_file(out_path, records);
  return {n_sites, static_cast<int64_t>(records.size()), inventory_out};
}

int64_t synth_counts_from_config(const Config& cfg, const std::string& out_path) {
  int64_t n = cfg.get_int("n", 100);
  if (n < 1) throw ValidationError("n must be positive");
  auto parse_list = [&](const std::string& key) {
    std::vector<double> out;
    for (const std::string& item : cfg.get_list(key)) {
      auto v = parse_double(item);
      if (!v) throw ValidationError("config key '" + key + "': bad number '" + item + "'");
      out.push_back(*v);
    }
    return out;
  };
  std::vector<double> beta = parse_list("beta");
  if (beta.empty()) throw ValidationError("config key 'beta' is required (first entry is the constant)");
  const size_t k = beta.size();
  std::vector<double> sigma = parse_list("sigma");
  if (sigma.empty()) sigma.assign(k, 0.0);
  if (sigma.size() != k) throw ValidationError("sigma list length must match beta");
  std::vector<double> x_lo = parse_list("x_lo"), x_hi = parse_list("x_hi");
  if (x_lo.empty()) x_lo.assign(k - 1, 0.0);
  if (x_hi.empty()) x_hi.assign(k - 1, 1.0);
  if (x_lo.size() != k - 1 || x_hi.size() != k - 1)
    throw ValidationError("x_lo/x_hi lists must have one entry per non-constant column");
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));

  DesignMatrix d;
  d.n_rows = static_cast<size_t>(n);
  d.n_cols = k;
  d.columns.push_back("const");
  d.transforms.push_back(Transform::kIdentity);
  for (size_t j = 1; j < k; ++j) {
    d.columns.push_back("x" + std::to_string(j));
    d.transforms.push_back(Transform::kIdentity);
  }
  d.x.resize(d.n_rows * k);
  for (size_t i = 0; i < d.n_rows; ++i) {
    d.ids.push_back("r" + std::to_string(i));
    Rng rng = Rng::substream(seed, "xrow", i);
    d.x[i * k] = 1.0;
    for (size_t j = 1; j < k; ++j) d.x[i * k + j] = rng.uniform(x_lo[j - 1], x_hi[j - 1]);
  }
  d.response = generate_counts(d, beta, sigma, seed);

  DelimWriter w(out_path);
  std::vector<std::string> header{"id"};
  for (size_t j = 1; j < k; ++j) header.push_back(d.columns[j]);
  header.push_back("count");
  w.write_row(header);
  for (size_t i = 0; i < d.n_rows; ++i) {
    std::vector<std::string> row{d.ids[i]};
    for (size_t j = 1; j < k; ++j) row.push_back(fmt_double(d.at(i, j)));
    row.push_back(std::to_string(d.response[i]));
    w.write_row(row);
  }
  w.close();
  return n;
}

}  // namespace lbv
