#include "lbv/pipeline.hpp"

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

#include "lbv/countmodel.hpp"
#include "lbv/design.hpp"
#include "lbv/errors.hpp"
#include "lbv/geo.hpp"
#include "lbv/hotspot.hpp"
#include "lbv/ingest.hpp"
#include "lbv/kernels/kernels.hpp"
#include "lbv/mathfn.hpp"
#include "lbv/parallel.hpp"
#include "lbv/randparam.hpp"
#include "lbv/report.hpp"
#include "lbv/volatility.hpp"

namespace lbv {

std::vector<std::string> expand_glob(const std::string& pattern) {
  if (pattern.find_first_of("*?[") == std::string::npos) return {pattern};
  ::glob_t g;
  int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0)
    for (size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed on pattern: " + pattern);
  if (out.empty()) throw ValidationError("no files match: " + pattern);
  std::sort(out.begin(), out.end());
  return out;
}

SingleFitResult fit_one_model(const std::vector<LbvSummary>& summaries,
                              const std::vector<IntersectionSite>& sites, const ModelSpec& ms) {
  BuildResult br = build_design(summaries, sites, ms);
  FitContext ctx;
  ctx.stratum = stratum_name(ms.stratum);
  ctx.dropped_undefined = br.dropped_undefined;
  ctx.ids = br.design.ids;
  ctx.response = br.design.response;

  SingleFitResult out;
  out.rows = static_cast<int64_t>(br.design.n_rows);
  if (ms.family == Family::kRandomPoisson) {
    RandomParamSpec rs{ms.random_columns, ms.draws, ms.halton_skip, ms.seed};
    RandomParamFit fit = fit_random_poisson(br.design, rs);
    fit.model_name = ms.name;
    out.text = render_fit_text(fit, ctx);
    out.json_text = render_fit_json(fit, ctx);
    out.family_used = fit.family;
    out.fitted = std::move(fit.fitted_lambda);
  } else {
    ModelFit fit =
        ms.family == Family::kNegbin ? fit_negative_binomial(br.design) : fit_poisson(br.design);
    if (ms.family == Family::kAuto && fit.lm_poisson_ok && !*fit.lm_poisson_ok) {
      ModelFit nb = fit_negative_binomial(br.design);
      nb.lm_stat = fit.lm_stat;  // the decision that triggered the fallback
      nb.lm_poisson_ok = fit.lm_poisson_ok;
      fit = std::move(nb);
    }
    fit.model_name = ms.name;
    ctx.marginal_effects = average_marginal_effects_fixed(fit, br.design);
    out.text = render_fit_text(fit, ctx);
    out.json_text = render_fit_json(fit, ctx);
    out.family_used = fit.family;
    out.fitted = std::move(fit.fitted_lambda);
  }
  out.ids = std::move(ctx.ids);
  out.response = std::move(ctx.response);
  return out;
}

PipelineResult run_pipeline(const Config& cfg) {
  namespace fs = std::filesystem;
  PipelineResult res;
  res.out_dir = cfg.require("out_dir");
  std::error_code ec;
  fs::create_directories(res.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + res.out_dir + ": " + ec.message());
  if (cfg.has("threads"))
    set_thread_count(static_cast<unsigned>(cfg.get_int("threads", 0)));

  auto& mf = res.manifest;
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.source_text())));
  mf.emplace_back("config_hash", hex);
  mf.emplace_back("seed", std::to_string(cfg.get_int("seed", 0)));
  mf.emplace_back("kernel", kernels::active_name());

  std::string stage = "ingest";
  auto write_manifest = [&](bool complete, const std::string& error) {
    std::string text = "status = " + std::string(complete ? "complete" : "incomplete") + "\n";
    if (!complete) {
      std::string msg = error;
      for (char& c : msg)
        if (c == '\n') c = ' ';
      text += "failed_stage = " + stage + "\n";
      text += "error = " + msg + "\n";
    }
    for (const auto& [k, v] : mf) text += k + " = " + v + "\n";
    write_text_file(res.out_dir + "/manifest.txt", text);
  };

  try {
    BsmSchema schema;
    if (auto sp = cfg.get("schema")) schema = BsmSchema::from_file(*sp);
    Units units = parse_units(cfg.get_or("units", "si"));
    std::vector<std::string> inputs;
    for (const std::string& pat : cfg.get_list("bsm")) {
      std::vector<std::string> got = expand_glob(pat);
      inputs.insert(inputs.end(), got.begin(), got.end());
    }
    if (inputs.empty()) throw ValidationError("config key 'bsm' is required");
    IngestAudit audit;
    std::vector<BsmRecord> records;
    for (const std::string& path : inputs) audit.merge(parse_bsm_file(path, schema, units, records));
    write_text_file(res.out_dir + "/audit.txt", render_audit_text(audit));
    write_text_file(res.out_dir + "/audit.json", render_audit_json(audit));
    mf.emplace_back("records_read", std::to_string(audit.records_read));
    mf.emplace_back("records_accepted", std::to_string(audit.records_accepted));

    stage = "match";
    std::vector<IntersectionSite> sites = load_inventory(cfg.require("inventory"));
    double radius = cfg.get_double("match.radius_m", kDefaultMatchRadiusM);
    MatchStats stats;
    std::vector<MatchedPoint> matched = match_points(records, sites, radius, &stats);
    write_matched_file(res.out_dir + "/matched.csv", matched);
    mf.emplace_back("sites_inventory", std::to_string(sites.size()));
    mf.emplace_back("points_matched", std::to_string(stats.points_matched));

    stage = "compute";
    int64_t min_q = cfg.get_int("volatility.min_quadrant_n", kDefaultMinQuadrantN);
    std::vector<LbvSummary> summaries = compute_lbv_all(matched, min_q);
    write_lbv_file(res.out_dir + "/lbv.csv", summaries);
    int64_t sufficient = 0;
    for (const LbvSummary& s : summaries) sufficient += s.sufficient ? 1 : 0;
    mf.emplace_back("sites_with_lbv", std::to_string(summaries.size()));
    mf.emplace_back("sites_sufficient", std::to_string(sufficient));

    stage = "summarize";
    write_summary_table(res.out_dir + "/summary.csv", summarize_lbv(summaries, sites));

    stage = "fit";
    std::map<std::string, SingleFitResult> kept;
    std::vector<std::string> spec_paths = cfg.get_list("models.specs");
    for (const std::string& sp : spec_paths) {
      ModelSpec ms = ModelSpec::from_file(sp);
      SingleFitResult fr = fit_one_model(summaries, sites, ms);
      write_text_file(res.out_dir + "/fit_" + ms.name + ".txt", fr.text);
      write_text_file(res.out_dir + "/fit_" + ms.name + ".json", fr.json_text);
      mf.emplace_back("model_" + ms.name + "_rows", std::to_string(fr.rows));
      mf.emplace_back("model_" + ms.name + "_family", fr.family_used);
      kept[ms.name] = std::move(fr);
    }
    mf.emplace_back("models_fit", std::to_string(spec_paths.size()));

    stage = "rank";
    HotspotThresholds th;
    th.latent_min_discrepancy =
        cfg.get_double("hotspot.latent_min_discrepancy", th.latent_min_discrepancy);
    th.latent_max_crash_pct = cfg.get_double("hotspot.latent_max_crash_pct", th.latent_max_crash_pct);
    th.known_min_crash_pct = cfg.get_double("hotspot.known_min_crash_pct", th.known_min_crash_pct);
    std::vector<HotspotRow> rows = rank_sites(summaries, sites, th);
    if (auto rm = cfg.get("hotspot.residual_model")) {
      auto it = kept.find(*rm);
      if (it == kept.end())
        throw ValidationError("hotspot.residual_model '" + *rm + "' is not a fitted model");
      attach_fit_residuals(rows, it->second.ids, it->second.response, it->second.fitted);
    }
    write_hotspot_table(res.out_dir + "/hotspot.csv", rows);
    write_plot_file(res.out_dir + "/hotspot_plot.csv", rows, summaries, sites);
    mf.emplace_back("hotspot_rows", std::to_string(rows.size()));
    mf.emplace_back("stages", "ingest,match,compute,summarize,fit,rank");
  } catch (const ValidationError& e) {
    write_manifest(false, e.what());
    throw ValidationError("stage " + stage + ": " + e.what());
  } catch (const EstimationError& e) {
    write_manifest(false, e.what());
    throw EstimationError("stage " + stage + ": " + e.what(), e.trace);
  } catch (const IoError& e) {
    write_manifest(false, e.what());
    throw IoError("stage " + stage + ": " + e.what());
  }

  res.complete = true;
  write_manifest(true, "");
  return res;
}

PipelineResult run_pipeline_file(const std::string& config_path) {
  return run_pipeline(Config::from_file(config_path));
}

}  // namespace lbv
