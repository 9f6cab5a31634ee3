// Command-line front end. Subcommands mirror the pipeline stages so
// every stage is independently runnable on its interchange files; `run`
// drives them all from one config. Library exceptions map to exit
// codes: 2 validation, 3 estimation, 4 I/O.

#include <cstdio>

#include "CLI11.hpp"
#include "lbv/config.hpp"
#include "lbv/countmodel.hpp"
#include "lbv/design.hpp"
#include "lbv/errors.hpp"
#include "lbv/geo.hpp"
#include "lbv/hotspot.hpp"
#include "lbv/ingest.hpp"
#include "lbv/parallel.hpp"
#include "lbv/pipeline.hpp"
#include "lbv/report.hpp"
#include "lbv/synth.hpp"
#include "lbv/volatility.hpp"

namespace {

std::vector<lbv::BsmRecord> load_canonical(const std::string& path, lbv::IngestAudit* audit_out) {
  lbv::BsmSchema schema;
  std::vector<lbv::BsmRecord> records;
  lbv::IngestAudit audit = lbv::parse_bsm_file(path, schema, lbv::Units::kSi, records);
  if (audit_out) *audit_out = audit;
  return records;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"location-based driving volatility toolkit"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware default)");

  // ingest
  std::vector<std::string> in_patterns;
  std::string schema_path, units_s = "si", audit_out, ingest_out;
  auto* c_ingest = app.add_subcommand("ingest", "validate raw BSM logs into canonical records");
  c_ingest->add_option("--input", in_patterns, "input file or glob")->required();
  c_ingest->add_option("--schema", schema_path, "column-name mapping file");
  c_ingest->add_option("--units", units_s, "si or us")->capture_default_str();
  c_ingest->add_option("--audit-out", audit_out, "write the audit as JSON");
  c_ingest->add_option("--out", ingest_out, "write accepted records in canonical units");

  // match
  std::string m_bsm, m_inventory, m_out;
  double m_radius = lbv::kDefaultMatchRadiusM;
  auto* c_match = app.add_subcommand("match", "assign BSM points to intersections");
  c_match->add_option("--bsm", m_bsm, "canonical BSM file")->required();
  c_match->add_option("--inventory", m_inventory, "intersection inventory")->required();
  c_match->add_option("--radius-m", m_radius, "match radius in meters")->capture_default_str();
  c_match->add_option("--out", m_out, "matched points file")->required();

  // compute
  std::string v_matched, v_out;
  int64_t v_min_n = lbv::kDefaultMinQuadrantN;
  auto* c_compute = app.add_subcommand("compute", "per-site quadrant volatility");
  c_compute->add_option("--matched", v_matched, "matched points file")->required();
  c_compute->add_option("--min-quadrant-n", v_min_n, "minimum samples per quadrant")
      ->capture_default_str();
  c_compute->add_option("--out", v_out, "volatility file")->required();

  // summarize
  std::string s_lbv, s_inventory, s_out;
  auto* c_summarize = app.add_subcommand("summarize", "descriptive statistics by stratum");
  c_summarize->add_option("--lbv", s_lbv, "volatility file")->required();
  c_summarize->add_option("--inventory", s_inventory, "intersection inventory")->required();
  c_summarize->add_option("--out", s_out, "summary table")->required();

  // fit
  std::string f_lbv, f_inventory, f_spec, f_out;
  auto* c_fit = app.add_subcommand("fit", "estimate a crash-frequency model");
  c_fit->add_option("--lbv", f_lbv, "volatility file")->required();
  c_fit->add_option("--inventory", f_inventory, "intersection inventory")->required();
  c_fit->add_option("--spec", f_spec, "model spec file")->required();
  c_fit->add_option("--out", f_out, "report path (JSON written alongside as <out>.json)")
      ->required();

  // rank
  std::string r_lbv, r_inventory, r_fit, r_out, r_plot;
  lbv::HotspotThresholds th;
  auto* c_rank = app.add_subcommand("rank", "screen sites for latent hotspots");
  c_rank->add_option("--lbv", r_lbv, "volatility file")->required();
  c_rank->add_option("--inventory", r_inventory, "intersection inventory")->required();
  c_rank->add_option("--fit", r_fit, "fit report JSON for a residual column");
  c_rank->add_option("--out", r_out, "ranked table")->required();
  c_rank->add_option("--plot-out", r_plot, "plot-ready companion file");
  c_rank->add_option("--latent-min-discrepancy", th.latent_min_discrepancy)
      ->capture_default_str();
  c_rank->add_option("--latent-max-crash-pct", th.latent_max_crash_pct)->capture_default_str();
  c_rank->add_option("--known-min-crash-pct", th.known_min_crash_pct)->capture_default_str();

  // synth
  std::string sy_config, sy_out;
  auto* c_synth = app.add_subcommand("synth", "synthetic data with known ground truth");
  c_synth->require_subcommand(1);
  auto* c_straj = c_synth->add_subcommand("trajectories", "BSM records plus inventory");
  c_straj->add_option("--config", sy_config, "generator config")->required();
  c_straj->add_option("--out", sy_out, "BSM output file")->required();
  auto* c_scount = c_synth->add_subcommand("counts", "covariates plus Poisson counts");
  c_scount->add_option("--config", sy_config, "generator config")->required();
  c_scount->add_option("--out", sy_out, "counts output file")->required();

  // run
  std::string run_config;
  auto* c_run = app.add_subcommand("run", "full pipeline from one config");
  c_run->add_option("--config", run_config, "pipeline config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : lbv::kExitValidation;
  }

  lbv::set_thread_count(threads);
  try {
    if (app.got_subcommand(c_ingest)) {
      lbv::BsmSchema schema;
      if (!schema_path.empty()) schema = lbv::BsmSchema::from_file(schema_path);
      lbv::Units units = lbv::parse_units(units_s);
      std::vector<std::string> files;
      for (const std::string& pat : in_patterns) {
        std::vector<std::string> got = lbv::expand_glob(pat);
        files.insert(files.end(), got.begin(), got.end());
      }
      lbv::IngestAudit audit;
      std::vector<lbv::BsmRecord> records;
      for (const std::string& f : files)
        audit.merge(lbv::parse_bsm_file(f, schema, units, records));
      if (!ingest_out.empty()) lbv::write_bsm_file(ingest_out, records);
      if (!audit_out.empty()) lbv::write_text_file(audit_out, lbv::render_audit_json(audit));
      std::fputs(lbv::render_audit_text(audit).c_str(), stdout);
    } else if (app.got_subcommand(c_match)) {
      std::vector<lbv::IntersectionSite> sites = lbv::load_inventory(m_inventory);
      std::vector<lbv::BsmRecord> records = load_canonical(m_bsm, nullptr);
      lbv::MatchStats stats;
      std::vector<lbv::MatchedPoint> matched =
          lbv::match_points(records, sites, m_radius, &stats);
      lbv::write_matched_file(m_out, matched);
      std::printf("matched %lld of %lld points\n",
                  static_cast<long long>(stats.points_matched),
                  static_cast<long long>(stats.points_in));
    } else if (app.got_subcommand(c_compute)) {
      std::vector<lbv::MatchedPoint> matched = lbv::read_matched_file(v_matched);
      std::vector<lbv::LbvSummary> summaries = lbv::compute_lbv_all(matched, v_min_n);
      lbv::write_lbv_file(v_out, summaries);
      std::printf("computed volatility for %zu sites\n", summaries.size());
    } else if (app.got_subcommand(c_summarize)) {
      std::vector<lbv::LbvSummary> summaries = lbv::read_lbv_file(s_lbv);
      std::vector<lbv::IntersectionSite> sites = lbv::load_inventory(s_inventory);
      lbv::write_summary_table(s_out, lbv::summarize_lbv(summaries, sites));
      std::printf("wrote %s\n", s_out.c_str());
    } else if (app.got_subcommand(c_fit)) {
      std::vector<lbv::LbvSummary> summaries = lbv::read_lbv_file(f_lbv);
      std::vector<lbv::IntersectionSite> sites = lbv::load_inventory(f_inventory);
      lbv::ModelSpec ms = lbv::ModelSpec::from_file(f_spec);
      lbv::SingleFitResult fr = lbv::fit_one_model(summaries, sites, ms);
      lbv::write_text_file(f_out, fr.text);
      lbv::write_text_file(f_out + ".json", fr.json_text);
      std::fputs(fr.text.c_str(), stdout);
    } else if (app.got_subcommand(c_rank)) {
      std::vector<lbv::LbvSummary> summaries = lbv::read_lbv_file(r_lbv);
      std::vector<lbv::IntersectionSite> sites = lbv::load_inventory(r_inventory);
      std::vector<lbv::HotspotRow> rows = lbv::rank_sites(summaries, sites, th);
      if (!r_fit.empty()) {
        lbv::FitObservations obs = lbv::read_fit_observations(r_fit);
        lbv::attach_fit_residuals(rows, obs.ids, obs.response, obs.fitted);
      }
      lbv::write_hotspot_table(r_out, rows);
      if (!r_plot.empty()) lbv::write_plot_file(r_plot, rows, summaries, sites);
      std::printf("ranked %zu sites\n", rows.size());
    } else if (app.got_subcommand(c_synth)) {
      lbv::Config cfg = lbv::Config::from_file(sy_config);
      if (c_synth->got_subcommand(c_straj)) {
        lbv::SynthTrajectoriesResult r = lbv::synth_trajectories_from_config(cfg, sy_out);
        std::printf("wrote %lld records for %lld sites (inventory: %s)\n",
                    static_cast<long long>(r.records), static_cast<long long>(r.sites),
                    r.inventory_path.c_str());
      } else {
        int64_t n = lbv::synth_counts_from_config(cfg, sy_out);
        std::printf("wrote %lld count rows\n", static_cast<long long>(n));
      }
    } else if (app.got_subcommand(c_run)) {
      lbv::PipelineResult r = lbv::run_pipeline_file(run_config);
      std::printf("pipeline complete: %s\n", r.out_dir.c_str());
      for (const auto& [k, v] : r.manifest) std::printf("  %s = %s\n", k.c_str(), v.c_str());
    }
    return lbv::kExitOk;
  } catch (const lbv::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return lbv::kExitValidation;
  } catch (const lbv::EstimationError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), e.trace.c_str());
    return lbv::kExitEstimation;
  } catch (const lbv::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return lbv::kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
