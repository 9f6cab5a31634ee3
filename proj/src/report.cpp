#include "lbv/report.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "lbv/csv.hpp"
#include "lbv/errors.hpp"

namespace lbv {

namespace {

using nlohmann::json;

std::string fmt_g(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

void line(std::string& out, const char* label, const std::string& value) {
  char b[160];
  std::snprintf(b, sizeof b, "%-20s%s\n", label, value.c_str());
  out += b;
}

std::string text_core(const ModelFit& fit, const FitContext& ctx, const RandomParamFit* rp) {
  std::string out;
  line(out, "model", fit.model_name.empty() ? "(unnamed)" : fit.model_name);
  line(out, "family", fit.family);
  line(out, "stratum", ctx.stratum);
  line(out, "observations", std::to_string(fit.fitted_lambda.size()));
  line(out, "dropped", std::to_string(ctx.dropped_undefined));
  out += "\n";

  char b[200];
  std::snprintf(b, sizeof b, "%-24s %14s %14s %10s\n", "term", "estimate", "std_error", "t");
  out += b;
  auto coef_line = [&](const std::string& name, double est, double se, double t) {
    std::snprintf(b, sizeof b, "%-24s %14s %14s %10s\n", name.c_str(), fmt_g(est).c_str(),
                  fmt_g(se).c_str(), fmt_g(t).c_str());
    out += b;
  };
  for (const CoefRow& row : fit.coef) coef_line(row.name, row.estimate, row.std_error, row.t_stat);
  if (rp) {
    for (const SdRow& row : rp->sd_rows) {
      if (row.collapsed) {
        std::snprintf(b, sizeof b, "%-24s %14s %14s %10s  collapsed to fixed\n",
                      ("sd(" + row.name + ")").c_str(), fmt_g(row.estimate).c_str(), "-", "-");
        out += b;
      } else {
        coef_line("sd(" + row.name + ")", row.estimate, row.std_error, row.t_stat);
      }
    }
  }
  if (fit.alpha) {
    if (fit.alpha_collapsed) {
      std::snprintf(b, sizeof b, "%-24s %14s %14s %10s  collapses to Poisson\n", "alpha",
                    fmt_g(*fit.alpha).c_str(), "-", "-");
      out += b;
    } else {
      coef_line("alpha", *fit.alpha, fit.alpha_std_error.value_or(0.0),
                fit.alpha_std_error && *fit.alpha_std_error > 0.0
                    ? *fit.alpha / *fit.alpha_std_error
                    : 0.0);
    }
  }
  out += "\n";

  const auto& ame = rp ? rp->marginal_effects : ctx.marginal_effects;
  if (!ame.empty()) {
    out += "marginal effects (per unit; ln columns per ln-unit)\n";
    for (const auto& [name, value] : ame) {
      std::snprintf(b, sizeof b, "%-24s %14s\n", name.c_str(), fmt_g(value).c_str());
      out += b;
    }
    out += "\n";
  }

  line(out, "loglik_zero", fmt_g(fit.loglik_zero));
  line(out, "loglik_conv", fmt_g(fit.loglik_conv));
  line(out, "mcfadden_rho2", fmt_g(fit.rho2));
  if (fit.lm_stat)
    line(out, "lm_stat",
         fmt_g(*fit.lm_stat) + std::string("  decision ") +
             (fit.lm_poisson_ok.value_or(false) ? "poisson_ok" : "overdispersed"));
  if (rp) line(out, "draws", std::to_string(rp->draws_used));
  line(out, "converged", fit.converged ? "yes" : "no");
  line(out, "iterations", std::to_string(fit.iterations));
  return out;
}

json json_core(const ModelFit& fit, const FitContext& ctx, const RandomParamFit* rp) {
  json j;
  j["model"] = fit.model_name;
  j["family"] = fit.family;
  j["stratum"] = ctx.stratum;
  j["n_obs"] = fit.fitted_lambda.size();
  j["dropped_undefined"] = ctx.dropped_undefined;
  json coefs = json::array();
  for (const CoefRow& row : fit.coef)
    coefs.push_back({{"name", row.name},
                     {"estimate", row.estimate},
                     {"std_error", row.std_error},
                     {"t_stat", row.t_stat}});
  j["coefficients"] = coefs;
  if (rp) {
    json sd = json::array();
    for (const SdRow& row : rp->sd_rows) {
      json r = {{"name", row.name}, {"estimate", row.estimate}, {"collapsed", row.collapsed}};
      if (!row.collapsed) {
        r["std_error"] = row.std_error;
        r["t_stat"] = row.t_stat;
      }
      sd.push_back(r);
    }
    j["sd_rows"] = sd;
    j["draws"] = rp->draws_used;
  }
  if (fit.alpha) {
    j["alpha"] = *fit.alpha;
    j["alpha_collapsed"] = fit.alpha_collapsed;
    if (fit.alpha_std_error) j["alpha_std_error"] = *fit.alpha_std_error;
  }
  const auto& ame = rp ? rp->marginal_effects : ctx.marginal_effects;
  if (!ame.empty()) {
    json m = json::array();
    for (const auto& [name, value] : ame) m.push_back({{"name", name}, {"value", value}});
    j["marginal_effects"] = m;
  }
  j["loglik_zero"] = fit.loglik_zero;
  j["loglik_conv"] = fit.loglik_conv;
  j["mcfadden_rho2"] = fit.rho2;
  if (fit.lm_stat) {
    j["lm_stat"] = *fit.lm_stat;
    j["lm_decision"] = fit.lm_poisson_ok.value_or(false) ? "poisson_ok" : "overdispersed";
  }
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  if (ctx.ids.size() == fit.fitted_lambda.size() && ctx.response.size() == ctx.ids.size()) {
    json obs = json::array();
    for (size_t i = 0; i < ctx.ids.size(); ++i)
      obs.push_back({{"site_id", ctx.ids[i]},
                     {"response", ctx.response[i]},
                     {"fitted", fit.fitted_lambda[i]}});
    j["observations"] = obs;
  }
  return j;
}

}  // namespace

std::string render_fit_text(const ModelFit& fit, const FitContext& ctx) {
  return text_core(fit, ctx, nullptr);
}

std::string render_fit_text(const RandomParamFit& fit, const FitContext& ctx) {
  return text_core(fit, ctx, &fit);
}

std::string render_fit_json(const ModelFit& fit, const FitContext& ctx) {
  return json_core(fit, ctx, nullptr).dump(2) + "\n";
}

std::string render_fit_json(const RandomParamFit& fit, const FitContext& ctx) {
  return json_core(fit, ctx, &fit).dump(2) + "\n";
}

std::string render_audit_text(const IngestAudit& audit) {
  std::string out;
  line(out, "records_read", std::to_string(audit.records_read));
  line(out, "records_accepted", std::to_string(audit.records_accepted));
  line(out, "rejects_total", std::to_string(audit.total_rejects()));
  for (const auto& [rule, count] : audit.rejects_by_rule) {
    char b[120];
    std::snprintf(b, sizeof b, "  %-22s%lld\n", rule.c_str(), static_cast<long long>(count));
    out += b;
  }
  line(out, "lateral_saturated",
       std::to_string(audit.lateral_saturated) + "  fraction " +
           fmt_g(audit.lateral_saturated_fraction()));
  return out;
}

std::string render_audit_json(const IngestAudit& audit) {
  json j;
  j["records_read"] = audit.records_read;
  j["records_accepted"] = audit.records_accepted;
  j["rejects_total"] = audit.total_rejects();
  json rules;
  for (const auto& [rule, count] : audit.rejects_by_rule) rules[rule] = count;
  j["rejects_by_rule"] = rules;
  j["lateral_saturated"] = audit.lateral_saturated;
  j["lateral_saturated_fraction"] = audit.lateral_saturated_fraction();
  return j.dump(2) + "\n";
}

FitObservations read_fit_observations(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open fit report: " + json_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("fit report " + json_path + " is not valid JSON: " + e.what());
  }
  if (!j.contains("observations"))
    throw ValidationError("fit report " + json_path + " has no observations block");
  FitObservations out;
  for (const json& o : j["observations"]) {
    out.ids.push_back(o.at("site_id").get<std::string>());
    out.response.push_back(o.at("response").get<int64_t>());
    out.fitted.push_back(o.at("fitted").get<double>());
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace lbv
