#pragma once

// End-to-end orchestration: ingest -> match -> compute -> summarize ->
// fit -> rank, driven by one config, writing one output directory with
// a manifest. Reruns with the same config and seed are byte-identical
// at any thread count.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lbv/config.hpp"
#include "lbv/design.hpp"

namespace lbv {

// One model spec estimated against a volatility/inventory join, with
// both report renderings and the per-site fitted values (for residual
// screening). family_used records what was actually estimated after an
// auto decision.
struct SingleFitResult {
  std::string text;
  std::string json_text;
  std::string family_used;
  int64_t rows = 0;
  std::vector<std::string> ids;
  std::vector<int64_t> response;
  std::vector<double> fitted;
};

SingleFitResult fit_one_model(const std::vector<LbvSummary>& summaries,
                              const std::vector<IntersectionSite>& sites, const ModelSpec& ms);

struct PipelineResult {
  std::string out_dir;
  bool complete = false;
  std::vector<std::pair<std::string, std::string>> manifest;  // as written
};

PipelineResult run_pipeline(const Config& cfg);
PipelineResult run_pipeline_file(const std::string& config_path);

// Expands a shell-style pattern (*, ?, [) against the filesystem; a
// plain path returns itself without touching the disk. Sorted.
std::vector<std::string> expand_glob(const std::string& pattern);

}  // namespace lbv
