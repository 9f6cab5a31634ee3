#pragma once

// Human-readable and machine-readable renderings of fits and ingest
// audits. Text output is aligned for terminals; JSON carries the same
// content plus per-observation fitted values so downstream stages can
// reuse a fit without refitting.

#include <cstdint>
#include <string>
#include <vector>

#include "lbv/countmodel.hpp"
#include "lbv/ingest.hpp"
#include "lbv/randparam.hpp"

namespace lbv {

// Context a fit alone does not carry.
struct FitContext {
  std::string stratum = "all";
  int64_t dropped_undefined = 0;
  std::vector<std::string> ids;      // per observation, aligned with fitted_lambda
  std::vector<int64_t> response;     // observed counts
  std::vector<std::pair<std::string, double>> marginal_effects;  // fixed fits
};

std::string render_fit_text(const ModelFit& fit, const FitContext& ctx);
std::string render_fit_text(const RandomParamFit& fit, const FitContext& ctx);

std::string render_fit_json(const ModelFit& fit, const FitContext& ctx);
std::string render_fit_json(const RandomParamFit& fit, const FitContext& ctx);

std::string render_audit_text(const IngestAudit& audit);
std::string render_audit_json(const IngestAudit& audit);

// Fitted values reloaded from a JSON fit report (for residual columns).
struct FitObservations {
  std::vector<std::string> ids;
  std::vector<int64_t> response;
  std::vector<double> fitted;
};

FitObservations read_fit_observations(const std::string& json_path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace lbv
