#include "spatialq.h"

#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"
#include "spatialq/chain.hpp"
#include "spatialq/io.hpp"
#include "spatialq/model.hpp"
#include "spatialq/rates.hpp"
#include "spatialq/sim.hpp"
#include "spatialq/solvers.hpp"

using namespace spatialq;

struct sq_model {
  ModelConfig cfg;
  ReducedCosts costs;
  RawCosts raw;
  LinearDemandCurve curve;

  sq_model(const ModelConfig& c, const ReducedCosts& rc, const RawCosts& rw)
      : cfg(c), costs(rc), raw(rw), curve(c.Lambda, c.p_max) {}
};

struct sq_rates {
  RateTable table;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

/// Runs fn, translating exceptions into status codes + the thread-local
/// error message. Validation-type exceptions map to SQ_ERR_VALIDATION,
/// everything else (solver non-convergence etc.) to SQ_ERR_SOLVER.
template <typename Fn>
sq_status guarded(Fn&& fn) {
  try {
    fn();
    return SQ_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return SQ_ERR_VALIDATION;
  } catch (const std::domain_error& e) {
    g_last_error = e.what();
    return SQ_ERR_VALIDATION;
  } catch (const std::out_of_range& e) {
    g_last_error = e.what();
    return SQ_ERR_VALIDATION;
  } catch (const nlohmann::json::exception& e) {
    // Malformed or mistyped JSON input is a caller error, not a solver failure.
    g_last_error = e.what();
    return SQ_ERR_VALIDATION;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SQ_ERR_SOLVER;
  }
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

DispatchRule parse_rule(const sq_model* model, const std::string& kind, double r0, double r1,
                        const char* policy_csv) {
  if (kind == "constant") return DispatchRule::constant_radius(r0);
  require(policy_csv != nullptr, "rule requires a count policy CSV");
  DispatchPolicy policy = io::parse_policy_csv(policy_csv);
  require(policy.L() == model->cfg.L && policy.M() == model->cfg.M,
          "rule policy shape does not match the model");
  if (kind == "zigzag") return DispatchRule::count_zigzag(std::move(policy));
  if (kind == "two_radius") return DispatchRule::two_radius(r0, r1, std::move(policy));
  throw std::invalid_argument("unknown dispatch rule: " + kind);
}

SimConfig make_sim(const sq_model* model, double T, double warmup, unsigned long long seed) {
  SimConfig sim;
  sim.cfg = model->cfg;
  sim.T = T;
  sim.warmup = warmup;
  sim.seed = seed;
  sim.validate();
  return sim;
}

nlohmann::ordered_json metrics_json(const SimMetrics& m) {
  nlohmann::ordered_json j;
  j["objective_eq4"] = m.objective_eq4;
  j["objective_eq2"] = m.objective_eq2;
  j["revenue_rate"] = m.revenue_rate;
  j["avg_price"] = m.avg_price;
  j["avg_pickup_time"] = m.avg_pickup_time;
  j["avg_queue_time"] = m.avg_queue_time;
  j["throughput"] = m.throughput;
  j["mean_l"] = m.mean_l;
  j["mean_m"] = m.mean_m;
  j["arrivals"] = m.arrivals;
  j["accepted"] = m.accepted;
  j["blocked"] = m.blocked;
  j["dispatches"] = m.dispatches;
  j["completions"] = m.completions;
  j["horizon"] = m.horizon;
  return j;
}

}  // namespace

extern "C" {

const char* sq_last_error(void) { return g_last_error.c_str(); }

void sq_string_free(char* s) { std::free(s); }
void sq_model_free(sq_model* model) { delete model; }
void sq_rates_free(sq_rates* rates) { delete rates; }

sq_status sq_model_from_config(const char* config_text, double cd_override, double cr_override,
                               sq_model** out) {
  return guarded([&] {
    require(config_text && out, "null argument");
    io::LoadedConfig loaded = io::parse_config(config_text);
    ReducedCosts costs = io::resolve_costs(loaded, cd_override, cr_override);
    // Raw weights for Eq.-(2) accounting: keep the configured idle/pickup
    // weights (paper defaults when only reduced costs were given) and solve
    // the Lemma-1 relations backwards for the rest.
    double w_o_d = loaded.has_raw ? loaded.raw.w_o_d : 0.2;
    double w_p_r = loaded.has_raw ? loaded.raw.w_p_r : 0.2;
    RawCosts raw = raw_from_reduced(costs, w_o_d, w_p_r);
    *out = new sq_model(loaded.cfg, costs, raw);
  });
}

sq_status sq_model_params(const sq_model* model, int* L, double* Lambda, int* M, double* t0,
                          double* p0, double* p_max, double* c_d, double* c_r, double* p0_eff) {
  return guarded([&] {
    require(model != nullptr, "null model");
    if (L) *L = model->cfg.L;
    if (Lambda) *Lambda = model->cfg.Lambda;
    if (M) *M = model->cfg.M;
    if (t0) *t0 = model->cfg.t0;
    if (p0) *p0 = model->cfg.p0;
    if (p_max) *p_max = model->cfg.p_max;
    if (c_d) *c_d = model->costs.c_d;
    if (c_r) *c_r = model->costs.c_r;
    if (p0_eff) *p0_eff = model->costs.p0_eff;
  });
}

double sq_mean_trip_time(void) { return mean_trip_time(); }

sq_status sq_rates_estimate(const sq_model* model, int samples_per_state,
                            unsigned long long seed, sq_rates** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = new sq_rates{mc_estimate_rates(model->cfg, samples_per_state, seed)};
  });
}

sq_status sq_rates_from_csv(const char* csv_text, sq_rates** out) {
  return guarded([&] {
    require(csv_text && out, "null argument");
    *out = new sq_rates{io::parse_rates_csv(csv_text)};
  });
}

sq_status sq_rates_to_csv(const sq_rates* rates, char** csv_out) {
  return guarded([&] {
    require(rates && csv_out, "null argument");
    *csv_out = dup_string(io::rates_csv_string(rates->table));
  });
}

sq_status sq_rates_powerlaw(const sq_model* model, double C, double alpha1, double alpha2,
                            sq_rates** out) {
  return guarded([&] {
    require(model && out, "null argument");
    PowerLawFit fit;
    fit.C = C;
    fit.alpha1 = alpha1;
    fit.alpha2 = alpha2;
    *out = new sq_rates{powerlaw_rate_table(fit, model->cfg)};
  });
}

sq_status sq_rates_check_assumption2(const sq_rates* rates, char** report_json_out) {
  return guarded([&] {
    require(rates && report_json_out, "null argument");
    auto violations = check_assumption2(rates->table);
    nlohmann::ordered_json j;
    j["count"] = violations.size();
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& v : violations) {
      nlohmann::ordered_json item;
      item["condition"] = v.condition;
      item["direction"] = std::string(1, v.direction);
      item["l"] = v.at.l;
      item["m"] = v.at.m;
      item["slack"] = v.slack;
      list.push_back(item);
    }
    j["violations"] = list;
    *report_json_out = dup_string(j.dump(2) + "\n");
  });
}

sq_status sq_closed_form_policy(const sq_rates* rates, char** policy_csv_out) {
  return guarded([&] {
    require(rates && policy_csv_out, "null argument");
    *policy_csv_out = dup_string(io::policy_csv_string(closed_form_zigzag(rates->table)));
  });
}

sq_status sq_solve(const sq_model* model, const sq_rates* rates, const char* method,
                   const char* pricing_mode, double wall_cap_s, char** result_json_out) {
  return guarded([&] {
    require(model && rates && method && pricing_mode && result_json_out, "null argument");
    require(rates->table.L() == model->cfg.L && rates->table.M() == model->cfg.M,
            "rate table shape does not match the model");
    std::string me = method, pm = pricing_mode;
    require(pm == "static" || pm == "dynamic", "pricing mode must be static or dynamic");
    SolveResult result;
    if (me == "zigzag") {
      ZigzagDpSolution sol = zigzag_dp(rates->table, model->costs, model->curve, model->cfg);
      result = pm == "static" ? sol.static_best : sol.dynamic;
    } else if (me == "vi") {
      ViOptions opts;
      if (wall_cap_s > 0) opts.wall_cap_s = wall_cap_s;
      result = relative_value_iteration(rates->table, model->costs, model->curve, model->cfg, opts);
    } else if (me == "greedy") {
      result = solve_greedy_dynamic(rates->table, model->costs, model->curve, model->cfg);
    } else {
      throw std::invalid_argument("unknown method: " + me);
    }
    *result_json_out = dup_string(io::solve_result_json(result));
  });
}

sq_status sq_eval(const sq_model* model, const sq_rates* rates, const char* policy_csv,
                  const char* pricing_csv, char** report_json_out) {
  return guarded([&] {
    require(model && rates && policy_csv && pricing_csv && report_json_out, "null argument");
    DispatchPolicy policy = io::parse_policy_csv(policy_csv);
    PricingPolicy pricing = io::parse_pricing_csv(pricing_csv);
    require(policy.L() == model->cfg.L && policy.M() == model->cfg.M &&
                pricing.L() == model->cfg.L && pricing.M() == model->cfg.M,
            "policy/pricing shape does not match the model");
    StationaryDistribution dist =
        generator_stationary(policy, pricing, rates->table, model->cfg);
    EvalReport report =
        metrics(dist, policy, pricing, rates->table, model->curve, model->cfg, model->costs);
    nlohmann::ordered_json j;
    j["objective"] = report.objective;
    j["revenue_rate"] = report.revenue_rate;
    j["avg_price"] = report.avg_price;
    j["avg_price_arrival"] = report.avg_price_arrival;
    j["avg_pickup_time"] = report.avg_pickup_time;
    j["avg_queue_time"] = report.avg_queue_time;
    j["throughput"] = report.throughput;
    j["mean_l"] = report.mean_l;
    j["mean_m"] = report.mean_m;
    *report_json_out = dup_string(j.dump(2) + "\n");
  });
}

sq_status sq_simulate(const sq_model* model, const char* rule, double r0, double r1,
                      const char* policy_csv, const char* pricing_csv, double T, double warmup,
                      unsigned long long seed, char** metrics_json_out) {
  return guarded([&] {
    require(model && rule && pricing_csv && metrics_json_out, "null argument");
    SimConfig sim = make_sim(model, T, warmup, seed);
    DispatchRule parsed = parse_rule(model, rule, r0, r1, policy_csv);
    PricingPolicy pricing = io::parse_pricing_csv(pricing_csv);
    SimResult result = simulate(sim, parsed, pricing, model->curve, model->raw);
    *metrics_json_out = dup_string(metrics_json(result.metrics).dump(2) + "\n");
  });
}

sq_status sq_collect_samples(const sq_model* model, double lambda_bar, double T, double warmup,
                             unsigned long long seed, char** samples_csv_out) {
  return guarded([&] {
    require(model && samples_csv_out, "null argument");
    SimConfig sim = make_sim(model, T, warmup, seed);
    auto rows =
        collect_pickup_samples(sim, default_radius_grid(), lambda_bar, model->curve, model->raw);
    *samples_csv_out = dup_string(io::samples_csv_string(rows));
  });
}

sq_status sq_fit_powerlaw(const char* samples_csv, long min_count, int L, char** fit_json_out) {
  return guarded([&] {
    require(samples_csv && fit_json_out, "null argument");
    PowerLawFit fit = fit_powerlaw(io::parse_samples_csv(samples_csv), min_count, L);
    *fit_json_out = dup_string(io::powerlaw_fit_json(fit));
  });
}

sq_status sq_calibrate(const sq_model* model, double T, double warmup, unsigned long long seed,
                       double r_init, double lambda_init, char** result_json_out) {
  return guarded([&] {
    require(model && result_json_out, "null argument");
    SimConfig sim = make_sim(model, T, warmup, seed);
    CalibrationResult result =
        calibrate_constant_radius(sim, model->curve, model->raw, r_init, lambda_init);
    nlohmann::ordered_json j;
    j["r"] = result.r;
    j["lambda_bar"] = result.lambda_bar;
    j["objective"] = result.objective;
    j["converged"] = result.converged;
    j["evaluations"] = result.trace.size();
    *result_json_out = dup_string(j.dump(2) + "\n");
  });
}

sq_status sq_two_radius(const sq_model* model, const char* policy_csv, const char* pricing_csv,
                        double r_star, double T, double warmup, unsigned long long seed,
                        char** result_json_out) {
  return guarded([&] {
    require(model && policy_csv && pricing_csv && result_json_out, "null argument");
    SimConfig sim = make_sim(model, T, warmup, seed);
    DispatchPolicy policy = io::parse_policy_csv(policy_csv);
    PricingPolicy pricing = io::parse_pricing_csv(pricing_csv);
    TwoRadiusResult result =
        tune_two_radius(sim, policy, pricing, r_star, model->curve, model->raw);
    nlohmann::ordered_json j;
    j["delta"] = result.delta;
    j["objective"] = result.objective;
    *result_json_out = dup_string(j.dump(2) + "\n");
  });
}

sq_status sq_sweep(const sq_model* model, const char* spec_json, char** table_csv_out) {
  return guarded([&] {
    require(model && spec_json && table_csv_out, "null argument");
    nlohmann::json spec = nlohmann::json::parse(spec_json);
    SimConfig base = make_sim(model, spec.value("T", 20000.0), spec.value("warmup", 1000.0), 1);
    std::vector<double> lambdas = spec.at("lambdas").get<std::vector<double>>();
    std::vector<uint64_t> seeds = spec.at("seeds").get<std::vector<uint64_t>>();
    std::vector<SweepPolicy> policies;
    for (const auto& p : spec.at("policies")) {
      SweepPolicy pol;
      pol.name = p.at("name").get<std::string>();
      std::string kind = p.at("rule").get<std::string>();
      std::string policy_csv = p.value("policy_csv", "");
      pol.rule = parse_rule(model, kind, p.value("r0", 0.0), p.value("r1", 0.0),
                            policy_csv.empty() ? nullptr : policy_csv.c_str());
      pol.pricing = io::parse_pricing_csv(p.at("pricing_csv").get<std::string>());
      policies.push_back(std::move(pol));
    }
    auto rows = robustness_sweep(base, policies, lambdas, seeds, model->curve, model->raw);
    std::string csv = "Lambda,policy,objective,stderr\n";
    for (const auto& row : rows) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g\n", row.Lambda, row.policy.c_str(),
                    row.objective, row.stderr_);
      csv += buf;
    }
    *table_csv_out = dup_string(csv);
  });
}

}  // extern "C"
