#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "doctest.h"
#include "lbv/csv.hpp"
#include "lbv/errors.hpp"
#include "lbv/geo.hpp"
#include "lbv/hotspot.hpp"
#include "lbv/volatility.hpp"

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

lbv::IntersectionSite make_site(const std::string& id, int64_t crashes, double lat = 42.28,
                                double lon = -83.74) {
  lbv::IntersectionSite s;
  s.site_id = id;
  s.name = id;
  s.center_lat = lat;
  s.center_lon = lon;
  s.legs = 4;
  s.aadt_major = 10000;
  s.aadt_minor = 2000;
  s.crashes_5yr_total = crashes;
  s.crashes_5yr_rearend = crashes / 2;
  return s;
}

lbv::LbvSummary make_summary(const std::string& id, std::optional<double> al,
                             std::optional<double> ah = std::nullopt,
                             std::optional<double> dl = std::nullopt,
                             std::optional<double> dh = std::nullopt) {
  lbv::LbvSummary s;
  s.site_id = id;
  s.cv_al = al;
  s.cv_ah = ah;
  s.cv_dl = dl;
  s.cv_dh = dh;
  s.sufficient = al.has_value() && ah.has_value() && dl.has_value() && dh.has_value();
  return s;
}

}  // namespace

TEST_CASE("volatility score averages the defined quadrant spreads") {
  auto all_hundred = make_summary("a", 100.0, 100.0, 100.0, 100.0);
  CHECK(lbv::volatility_score(all_hundred) == 100.0);

  auto mixed = make_summary("b", 100.0, 200.0, 100.0, 200.0);
  CHECK(lbv::volatility_score(mixed) == 150.0);

  // weights renormalize over the defined entries only
  auto partial = make_summary("c", 120.0);
  CHECK(lbv::volatility_score(partial) == 120.0);

  lbv::HotspotWeights w;
  w.al = 1.0;
  w.ah = 0.0;
  w.dl = 3.0;
  w.dh = 0.0;
  auto two = make_summary("d", 100.0, std::nullopt, 200.0, std::nullopt);
  CHECK(lbv::volatility_score(two, w) == doctest::Approx(175.0).epsilon(1e-14));

  CHECK(!lbv::volatility_score(make_summary("e", std::nullopt)).has_value());

  lbv::HotspotWeights zero;
  zero.al = zero.ah = zero.dl = zero.dh = 0.0;
  CHECK(!lbv::volatility_score(all_hundred, zero).has_value());

  lbv::HotspotWeights neg;
  neg.al = -1.0;
  CHECK_THROWS_AS((void)lbv::volatility_score(all_hundred, neg), lbv::ValidationError);
}

TEST_CASE("percentile ranks run 0 to 100 and average over ties") {
  std::vector<double> evenly = {10, 20, 30, 40, 50};
  std::vector<double> want = {0, 25, 50, 75, 100};
  CHECK(lbv::percentile_ranks(evenly) == want);

  // unsorted input keeps its positions
  std::vector<double> shuffled = {30, 10, 50, 20, 40};
  std::vector<double> want_shuffled = {50, 0, 100, 25, 75};
  CHECK(lbv::percentile_ranks(shuffled) == want_shuffled);

  // tied values share the average of their ranks
  std::vector<double> tied = {1, 2, 2, 3};
  auto pct = lbv::percentile_ranks(tied);
  CHECK(pct[0] == 0.0);
  CHECK(pct[1] == 50.0);
  CHECK(pct[2] == 50.0);
  CHECK(pct[3] == 100.0);

  std::vector<double> equal = {5, 5, 5};
  for (double p : lbv::percentile_ranks(equal)) CHECK(p == 50.0);

  CHECK_THROWS_AS((void)lbv::percentile_ranks({}), lbv::ValidationError);
  CHECK_THROWS_AS((void)lbv::percentile_ranks({1.0}), lbv::ValidationError);
}

TEST_CASE("percentiles are invariant under a monotone rescaling") {
  std::vector<double> v = {3.7, -1.2, 0.0, 12.5, 8.8, 2.2};
  std::vector<double> stretched;
  for (double x : v) stretched.push_back(std::exp(0.3 * x) * 40.0);
  CHECK(lbv::percentile_ranks(v) == lbv::percentile_ranks(stretched));
}

TEST_CASE("a quiet site with violent driving ranks first as a latent hotspot") {
  // A: long crash record, middling volatility. B: one crash, extreme
  // volatility. C: average on both counts.
  std::vector<lbv::IntersectionSite> sites = {make_site("A", 30), make_site("B", 1),
                                              make_site("C", 10)};
  std::vector<lbv::LbvSummary> summaries = {make_summary("A", 80.0, 80.0, 80.0, 80.0),
                                            make_summary("B", 150.0, 150.0, 150.0, 150.0),
                                            make_summary("C", 60.0, 60.0, 60.0, 60.0)};
  auto rows = lbv::rank_sites(summaries, sites);
  REQUIRE(rows.size() == 3);

  CHECK(rows[0].site_id == "B");
  CHECK(rows[0].crash_percentile == 0.0);
  CHECK(rows[0].volatility_percentile == 100.0);
  CHECK(rows[0].discrepancy == 100.0);
  CHECK(rows[0].flag == lbv::HotspotFlag::kLatent);

  // A and C tie on discrepancy; the id breaks the tie
  CHECK(rows[1].site_id == "A");
  CHECK(rows[1].discrepancy == -50.0);
  CHECK(rows[1].flag == lbv::HotspotFlag::kKnown);  // crash history says so
  CHECK(rows[2].site_id == "C");
  CHECK(rows[2].discrepancy == -50.0);
  CHECK(rows[2].flag == lbv::HotspotFlag::kNormal);
}

TEST_CASE("identical sites sit at the middle percentile with zero discrepancy") {
  std::vector<lbv::IntersectionSite> sites;
  std::vector<lbv::LbvSummary> summaries;
  for (const std::string& id : {"s1", "s2", "s3", "s4"}) {
    sites.push_back(make_site(id, 7));
    summaries.push_back(make_summary(id, 90.0, 90.0, 90.0, 90.0));
  }
  auto rows = lbv::rank_sites(summaries, sites);
  REQUIRE(rows.size() == 4);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].crash_percentile == 50.0);
    CHECK(rows[i].volatility_percentile == 50.0);
    CHECK(rows[i].discrepancy == 0.0);
    CHECK(rows[i].flag == lbv::HotspotFlag::kNormal);
    CHECK(rows[i].site_id == "s" + std::to_string(i + 1));  // id order on ties
  }
}

TEST_CASE("thresholds draw the flag boundaries inclusively") {
  // five sites whose percentiles land on multiples of 25
  std::vector<lbv::IntersectionSite> sites = {make_site("s1", 0), make_site("s2", 1),
                                              make_site("s3", 2), make_site("s4", 3),
                                              make_site("s5", 4)};
  std::vector<lbv::LbvSummary> summaries = {
      make_summary("s1", 20.0), make_summary("s2", 30.0), make_summary("s3", 10.0),
      make_summary("s4", 40.0), make_summary("s5", 50.0)};
  lbv::HotspotThresholds th;
  th.latent_min_discrepancy = 25.0;
  th.latent_max_crash_pct = 25.0;
  th.known_min_crash_pct = 75.0;
  auto rows = lbv::rank_sites(summaries, sites, th);
  auto flag_of = [&](const std::string& id) {
    for (const auto& r : rows)
      if (r.site_id == id) return r.flag;
    throw std::runtime_error("row missing");
  };
  // s1: crash 0, volatility 25 -> discrepancy exactly at the latent floor
  CHECK(flag_of("s1") == lbv::HotspotFlag::kLatent);
  // s2: crash percentile exactly at the latent ceiling
  CHECK(flag_of("s2") == lbv::HotspotFlag::kLatent);
  CHECK(flag_of("s3") == lbv::HotspotFlag::kNormal);
  // s4: crash percentile exactly at the known floor
  CHECK(flag_of("s4") == lbv::HotspotFlag::kKnown);
  CHECK(flag_of("s5") == lbv::HotspotFlag::kKnown);
}

TEST_CASE("a known hotspot outranks the latent label") {
  std::vector<lbv::IntersectionSite> sites = {make_site("a", 0), make_site("b", 1),
                                              make_site("c", 2)};
  std::vector<lbv::LbvSummary> summaries = {make_summary("a", 10.0), make_summary("b", 20.0),
                                            make_summary("c", 30.0)};
  lbv::HotspotThresholds th;
  th.latent_min_discrepancy = 0.0;
  th.latent_max_crash_pct = 100.0;  // c qualifies for both labels
  th.known_min_crash_pct = 80.0;
  auto rows = lbv::rank_sites(summaries, sites, th);
  for (const auto& r : rows)
    if (r.site_id == "c") CHECK(r.flag == lbv::HotspotFlag::kKnown);
}

TEST_CASE("unscorable sites trail the ranking and stay out of the pool") {
  std::vector<lbv::IntersectionSite> sites = {make_site("B", 2), make_site("D", 8),
                                              make_site("C", 100), make_site("A", 50)};
  std::vector<lbv::LbvSummary> summaries = {
      make_summary("B", 70.0), make_summary("D", 40.0),
      make_summary("C", std::nullopt),  // no quadrant defined
      make_summary("A", std::nullopt)};
  auto rows = lbv::rank_sites(summaries, sites);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].site_id == "B");
  CHECK(rows[1].site_id == "D");
  // the 100- and 50-crash sites did not shift the crash percentiles
  CHECK(rows[0].crash_percentile == 0.0);
  CHECK(rows[1].crash_percentile == 100.0);
  // unscored rows follow in id order, flagged and blank
  CHECK(rows[2].site_id == "A");
  CHECK(rows[3].site_id == "C");
  CHECK(rows[2].flag == lbv::HotspotFlag::kInsufficient);
  CHECK(rows[3].flag == lbv::HotspotFlag::kInsufficient);
  CHECK(rows[2].crashes_5yr == 50);
  CHECK(rows[2].volatility_score == 0.0);
  CHECK(rows[2].discrepancy == 0.0);
}

TEST_CASE("ranking refuses thin or inconsistent inputs") {
  // one scorable site is not a distribution
  std::vector<lbv::IntersectionSite> sites = {make_site("A", 1), make_site("B", 2)};
  std::vector<lbv::LbvSummary> summaries = {make_summary("A", 50.0),
                                            make_summary("B", std::nullopt)};
  CHECK_THROWS_AS((void)lbv::rank_sites(summaries, sites), lbv::ValidationError);

  std::vector<lbv::LbvSummary> ghost = {make_summary("A", 50.0), make_summary("ghost", 60.0)};
  CHECK_THROWS_WITH_AS((void)lbv::rank_sites(ghost, sites),
                       "site 'ghost' has volatility but no inventory row",
                       lbv::ValidationError);
}

TEST_CASE("fit residuals join by site and tolerate absent rows") {
  std::vector<lbv::IntersectionSite> sites = {make_site("A", 3), make_site("B", 5),
                                              make_site("C", 9)};
  std::vector<lbv::LbvSummary> summaries = {make_summary("A", 40.0), make_summary("B", 50.0),
                                            make_summary("C", 60.0)};
  auto rows = lbv::rank_sites(summaries, sites);
  lbv::attach_fit_residuals(rows, {"A", "C"}, {7, 2}, {4.5, 3.25});
  for (const auto& r : rows) {
    if (r.site_id == "A") {
      REQUIRE(r.fit_residual.has_value());
      CHECK(*r.fit_residual == 2.5);
    } else if (r.site_id == "B") {
      CHECK(!r.fit_residual.has_value());
    } else {
      REQUIRE(r.fit_residual.has_value());
      CHECK(*r.fit_residual == -1.25);
    }
  }
  CHECK_THROWS_AS(lbv::attach_fit_residuals(rows, {"A"}, {1, 2}, {0.5}), lbv::ValidationError);
}

TEST_CASE("the ranking table writes eight columns and blanks the unscored") {
  std::vector<lbv::IntersectionSite> sites = {make_site("A", 30), make_site("B", 1),
                                              make_site("Z", 4)};
  std::vector<lbv::LbvSummary> summaries = {make_summary("A", 80.0), make_summary("B", 150.0),
                                            make_summary("Z", std::nullopt)};
  auto rows = lbv::rank_sites(summaries, sites);
  lbv::attach_fit_residuals(rows, {"B"}, {1}, {2.5});
  std::string p = temp_path("lbv_hotspot_table.csv");
  lbv::write_hotspot_table(p, rows);

  lbv::DelimReader r(p);
  std::vector<std::string> want_header = {"site_id",          "crashes_5yr",
                                          "crash_percentile", "volatility_score",
                                          "volatility_percentile", "discrepancy",
                                          "flag",             "fit_residual"};
  CHECK(r.header() == want_header);
  REQUIRE(r.next_row());
  REQUIRE(r.fields().size() == 8);
  CHECK(r.fields()[0] == "B");
  CHECK(r.fields()[1] == "1");
  CHECK(r.fields()[6] == "latent_hotspot");
  CHECK(r.fields()[7] == "-1.5");
  REQUIRE(r.next_row());
  CHECK(r.fields()[0] == "A");
  CHECK(r.fields()[6] == "known_hotspot");
  CHECK(r.fields()[7] == "");
  REQUIRE(r.next_row());
  CHECK(r.fields()[0] == "Z");
  CHECK(r.fields()[2] == "");  // no percentile without a score
  CHECK(r.fields()[3] == "");
  CHECK(r.fields()[6] == "insufficient_data");
  CHECK(!r.next_row());
  std::filesystem::remove(p);
}

TEST_CASE("the plot file scales each radius to the pool maximum") {
  std::vector<lbv::IntersectionSite> sites = {make_site("P", 10, 42.30, -83.70),
                                              make_site("Q", 5, 42.31, -83.71)};
  std::vector<lbv::LbvSummary> summaries = {
      make_summary("P", 50.0, std::nullopt, 25.0, std::nullopt),
      make_summary("Q", 25.0, std::nullopt, std::nullopt, std::nullopt)};
  auto rows = lbv::rank_sites(summaries, sites);
  std::string p = temp_path("lbv_hotspot_plot.csv");
  lbv::write_plot_file(p, rows, summaries, sites);

  lbv::DelimReader r(p);
  std::vector<std::string> want_header = {"site_id", "lon",          "lat",
                                          "crash_radius", "cv_al_radius", "cv_dl_radius"};
  CHECK(r.header() == want_header);
  double lat_p = 0.0, lon_p = 0.0;
  while (r.next_row()) {
    REQUIRE(r.fields().size() == 6);
    std::string id(r.fields()[0]);
    if (id == "P") {
      lon_p = std::stod(std::string(r.fields()[1]));
      lat_p = std::stod(std::string(r.fields()[2]));
      CHECK(r.fields()[3] == "1");  // 10 of 10 crashes
      CHECK(r.fields()[4] == "1");  // 50 of 50
      CHECK(r.fields()[5] == "1");  // 25 of 25
    } else {
      CHECK(r.fields()[3] == "0.5");
      CHECK(r.fields()[4] == "0.5");
      CHECK(r.fields()[5] == "");  // undefined quadrant leaves the cell empty
    }
  }
  CHECK(lat_p == 42.30);
  CHECK(lon_p == -83.70);
  std::filesystem::remove(p);

  // a ranking row the inventory cannot place is an error
  std::vector<lbv::IntersectionSite> truncated = {sites[0]};
  CHECK_THROWS_AS(lbv::write_plot_file(p, rows, summaries, truncated), lbv::ValidationError);

  // all-zero crash counts scale to zero rather than dividing by zero
  std::vector<lbv::IntersectionSite> quiet = {make_site("P", 0, 42.30, -83.70),
                                              make_site("Q", 0, 42.31, -83.71)};
  auto quiet_rows = lbv::rank_sites(summaries, quiet);
  lbv::write_plot_file(p, quiet_rows, summaries, quiet);
  lbv::DelimReader rq(p);
  while (rq.next_row()) CHECK(rq.fields()[3] == "0");
  std::filesystem::remove(p);
}
