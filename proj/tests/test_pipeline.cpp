#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lbv/config.hpp"
#include "lbv/errors.hpp"
#include "lbv/geo.hpp"
#include "lbv/parallel.hpp"
#include "lbv/pipeline.hpp"
#include "lbv/report.hpp"
#include "lbv/rng.hpp"
#include "lbv/synth.hpp"
#include "lbv/volatility.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// A scratch directory with a synthetic world: bsm.csv, inventory.csv,
// and a one-covariate model spec. Removed on destruction.
struct World {
  std::string dir;

  World() {
    dir = (fs::temp_directory_path() / ("lbv_pipe_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++)))
              .string();
    fs::create_directories(dir);
    std::string traj = "sites = 4\nvehicles_per_regime = 30\nseed = 11\ninventory_out = " +
                       dir + "/inventory.csv\n";
    lbv::Config cfg = lbv::Config::from_string(traj);
    (void)lbv::synth_trajectories_from_config(cfg, dir + "/bsm.csv");
    spit(dir + "/m1.spec",
         "name = m1\nresponse = crashes_5yr_total\ncovariates = cv_al\n"
         "transforms = identity\nfamily = poisson\n");
  }
  ~World() { fs::remove_all(dir); }

  std::string pipeline_config(const std::string& out_dir) const {
    return "bsm = " + dir + "/bsm*.csv\ninventory = " + dir + "/inventory.csv\nout_dir = " +
           out_dir + "\nseed = 11\n[models]\nspecs = " + dir +
           "/m1.spec\n[hotspot]\nresidual_model = m1\n";
  }

  static int counter;
};

int World::counter = 0;

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    out[e.path().filename().string()] = slurp(e.path().string());
  return out;
}

std::string manifest_value(const lbv::PipelineResult& res, const std::string& key) {
  for (const auto& [k, v] : res.manifest)
    if (k == key) return v;
  return "";
}

}  // namespace

TEST_CASE("expand_glob passes plain paths through and sorts matches") {
  auto plain = lbv::expand_glob("/no/such/file.csv");
  REQUIRE(plain.size() == 1);
  CHECK(plain[0] == "/no/such/file.csv");

  std::string dir = (fs::temp_directory_path() / "lbv_glob_test").string();
  fs::create_directories(dir);
  spit(dir + "/c.csv", "x\n");
  spit(dir + "/a.csv", "x\n");
  spit(dir + "/b.txt", "x\n");
  auto got = lbv::expand_glob(dir + "/*.csv");
  REQUIRE(got.size() == 2);
  CHECK(got[0] == dir + "/a.csv");
  CHECK(got[1] == dir + "/c.csv");
  CHECK_THROWS_AS((void)lbv::expand_glob(dir + "/*.tsv"), lbv::ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("a full run writes every product and a complete manifest") {
  World w;
  std::string cfg_path = w.dir + "/run.cfg";
  spit(cfg_path, w.pipeline_config(w.dir + "/out"));
  lbv::PipelineResult res = lbv::run_pipeline_file(cfg_path);
  CHECK(res.complete);
  CHECK(res.out_dir == w.dir + "/out");

  for (const std::string& f :
       {"audit.txt", "audit.json", "matched.csv", "lbv.csv", "summary.csv", "fit_m1.txt",
        "fit_m1.json", "hotspot.csv", "hotspot_plot.csv", "manifest.txt"})
    CHECK(fs::exists(w.dir + "/out/" + f));

  CHECK(manifest_value(res, "records_read") == "4800");
  CHECK(manifest_value(res, "records_accepted") == "4800");
  CHECK(manifest_value(res, "sites_inventory") == "4");
  CHECK(manifest_value(res, "points_matched") == "4800");
  CHECK(manifest_value(res, "sites_with_lbv") == "4");
  CHECK(manifest_value(res, "sites_sufficient") == "4");
  CHECK(manifest_value(res, "models_fit") == "1");
  CHECK(manifest_value(res, "model_m1_family") == "poisson");
  CHECK(manifest_value(res, "model_m1_rows") == "4");
  CHECK(manifest_value(res, "hotspot_rows") == "4");
  CHECK(manifest_value(res, "config_hash").size() == 16);

  std::string manifest = slurp(w.dir + "/out/manifest.txt");
  CHECK(manifest.find("status = complete") != std::string::npos);
  CHECK(manifest.find("stages = ingest,match,compute,summarize,fit,rank") != std::string::npos);

  // the fit JSON carries the observations used for residual screening
  lbv::FitObservations obs = lbv::read_fit_observations(w.dir + "/out/fit_m1.json");
  REQUIRE(obs.ids.size() == 4);
  REQUIRE(obs.response.size() == 4);
  REQUIRE(obs.fitted.size() == 4);
  CHECK(obs.ids[0] == "S000");
  for (double f : obs.fitted) CHECK(f > 0.0);
}

TEST_CASE("reruns are byte identical at any thread count") {
  World w;
  std::string cfg_path = w.dir + "/run.cfg";
  spit(cfg_path, w.pipeline_config(w.dir + "/out"));

  unsigned before = lbv::thread_count();
  lbv::set_thread_count(1);
  (void)lbv::run_pipeline_file(cfg_path);
  auto first = snapshot(w.dir + "/out");

  lbv::set_thread_count(6);
  (void)lbv::run_pipeline_file(cfg_path);
  auto second = snapshot(w.dir + "/out");
  lbv::set_thread_count(before);

  REQUIRE(first.size() == second.size());
  for (const auto& [name, bytes] : first) {
    INFO("file ", name);
    CHECK(second.at(name) == bytes);
  }

  // the config hash follows the config text
  std::string cfg2_path = w.dir + "/run2.cfg";
  spit(cfg2_path, w.pipeline_config(w.dir + "/out2") + "# annotated\n");
  lbv::PipelineResult res2 = lbv::run_pipeline_file(cfg2_path);
  std::string h1, h2 = manifest_value(res2, "config_hash");
  for (const auto& [name, bytes] : first)
    if (name == "manifest.txt") {
      size_t pos = bytes.find("config_hash = ");
      REQUIRE(pos != std::string::npos);
      h1 = bytes.substr(pos + 14, 16);
    }
  CHECK(h1 != h2);
}

TEST_CASE("a config that sets threads pins the worker count") {
  World w;
  std::string cfg_path = w.dir + "/run.cfg";
  spit(cfg_path, "threads = 2\n" + w.pipeline_config(w.dir + "/out"));
  unsigned before = lbv::thread_count();
  (void)lbv::run_pipeline_file(cfg_path);
  CHECK(lbv::thread_count() == 2);
  lbv::set_thread_count(before);
}

TEST_CASE("missing required keys abort with the key named") {
  World w;
  // no out_dir: nothing can be written, not even a manifest
  CHECK_THROWS_WITH_AS((void)lbv::run_pipeline(lbv::Config::from_string("seed = 1\n")),
                       "config missing required key: out_dir", lbv::ValidationError);

  // no bsm inputs: the ingest stage fails and the manifest records it
  std::string out = w.dir + "/out_nobsm";
  CHECK_THROWS_WITH_AS(
      (void)lbv::run_pipeline(lbv::Config::from_string("out_dir = " + out + "\n")),
      "stage ingest: config key 'bsm' is required", lbv::ValidationError);
  std::string manifest = slurp(out + "/manifest.txt");
  CHECK(manifest.find("status = incomplete") != std::string::npos);
  CHECK(manifest.find("failed_stage = ingest") != std::string::npos);
  CHECK(manifest.find("error = config key 'bsm' is required") != std::string::npos);

  // no inventory: ingest succeeds, the match stage fails
  out = w.dir + "/out_noinv";
  CHECK_THROWS_WITH_AS((void)lbv::run_pipeline(lbv::Config::from_string(
                           "out_dir = " + out + "\nbsm = " + w.dir + "/bsm.csv\n")),
                       "stage match: config missing required key: inventory",
                       lbv::ValidationError);
  manifest = slurp(out + "/manifest.txt");
  CHECK(manifest.find("failed_stage = match") != std::string::npos);
}

TEST_CASE("a failure mid pipeline leaves an incomplete manifest naming the stage") {
  World w;
  // the ranking stage rejects a residual model that was never fitted
  std::string out = w.dir + "/out_badmodel";
  std::string cfg = "bsm = " + w.dir + "/bsm.csv\ninventory = " + w.dir +
                    "/inventory.csv\nout_dir = " + out + "\n[models]\nspecs = " + w.dir +
                    "/m1.spec\n[hotspot]\nresidual_model = nope\n";
  CHECK_THROWS_AS((void)lbv::run_pipeline(lbv::Config::from_string(cfg)), lbv::ValidationError);
  std::string manifest = slurp(out + "/manifest.txt");
  CHECK(manifest.find("status = incomplete") != std::string::npos);
  CHECK(manifest.find("failed_stage = rank") != std::string::npos);
  CHECK(manifest.find("'nope' is not a fitted model") != std::string::npos);
  // stages completed before the failure still recorded their counts
  CHECK(manifest.find("points_matched = 4800") != std::string::npos);

  // a bad spec path fails in the fit stage
  out = w.dir + "/out_badspec";
  cfg = "bsm = " + w.dir + "/bsm.csv\ninventory = " + w.dir + "/inventory.csv\nout_dir = " +
        out + "\n[models]\nspecs = " + w.dir + "/absent.spec\n";
  CHECK_THROWS_AS((void)lbv::run_pipeline(lbv::Config::from_string(cfg)), lbv::IoError);
  manifest = slurp(out + "/manifest.txt");
  CHECK(manifest.find("failed_stage = fit") != std::string::npos);
}

TEST_CASE("the automatic family keeps poisson data and flees overdispersion") {
  // forty sites whose crash counts either match or defy a Poisson rate
  auto build_world = [](bool overdispersed, std::vector<lbv::LbvSummary>& summaries,
                        std::vector<lbv::IntersectionSite>& sites) {
    lbv::Rng rng = lbv::Rng::substream(42, overdispersed ? "od" : "eq", 0);
    for (int i = 0; i < 40; ++i) {
      char id[8];
      std::snprintf(id, sizeof id, "s%02d", i);
      lbv::LbvSummary s;
      s.site_id = id;
      s.cv_al = 40.0 + 20.0 * rng.uniform01();
      s.cv_ah = s.cv_dl = s.cv_dh = 50.0;
      s.sufficient = true;
      summaries.push_back(s);

      lbv::IntersectionSite site;
      site.site_id = id;
      site.name = id;
      site.center_lat = 42.0 + 0.01 * i;
      site.center_lon = -83.0;
      site.legs = 4;
      site.aadt_major = 10000;
      site.aadt_minor = 1000;
      double lambda = 5.0;
      if (overdispersed) lambda *= rng.gamma(0.5) / 0.5;  // heavy mixing
      site.crashes_5yr_total = rng.poisson(lambda);
      site.crashes_5yr_rearend = site.crashes_5yr_total / 2;
      sites.push_back(site);
    }
  };

  lbv::ModelSpec ms;
  ms.name = "auto";
  ms.covariates = {"cv_al"};
  ms.transforms = {lbv::Transform::kIdentity};
  ms.family = lbv::Family::kAuto;

  {
    std::vector<lbv::LbvSummary> summaries;
    std::vector<lbv::IntersectionSite> sites;
    build_world(false, summaries, sites);
    lbv::SingleFitResult fr = lbv::fit_one_model(summaries, sites, ms);
    CHECK(fr.family_used == "poisson");
    CHECK(fr.rows == 40);
    CHECK(fr.ids.size() == 40);
    CHECK(fr.response.size() == 40);
    CHECK(fr.fitted.size() == 40);
  }
  {
    std::vector<lbv::LbvSummary> summaries;
    std::vector<lbv::IntersectionSite> sites;
    build_world(true, summaries, sites);
    lbv::SingleFitResult fr = lbv::fit_one_model(summaries, sites, ms);
    CHECK(fr.family_used == "negbin");
  }
}
