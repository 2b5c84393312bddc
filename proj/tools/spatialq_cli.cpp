// Command-line front end for the spatial-queue toolkit. Talks to the core
// exclusively through the C API in spatialq.h; file handling, flag parsing,
// and the reproducibility manifest live here.
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spatialq.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
  throw CliError{code, message};
}

void check(sq_status status) {
  if (status == SQ_OK) return;
  fail(static_cast<int>(status), sq_last_error());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(kExitIo, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) fail(kExitIo, "read error on " + path);
  return out.str();
}

void spill(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kExitIo, "cannot open " + path + " for writing");
  out << content;
  if (!out) fail(kExitIo, "write error on " + path);
}

/// Accumulates every input that determines a command's output (command name,
/// file contents, flag values) into a 64-bit FNV-1a hash. Rerunning with
/// identical inputs yields the same manifest hash.
class Manifest {
 public:
  explicit Manifest(const std::string& command) { add(command); }

  void add(const std::string& piece) {
    for (unsigned char c : piece) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
    hash_ ^= 0xff;  // field separator
    hash_ *= 0x100000001b3ULL;
  }
  void add(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    add(std::string(buf));
  }
  void add(long long v) { add(std::to_string(v)); }

  std::string hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash_);
    return buf;
  }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ULL;
};

/// Wraps a malloc'd C-API string and frees it on scope exit.
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { sq_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct OwnedModel {
  sq_model* ptr = nullptr;
  ~OwnedModel() { sq_model_free(ptr); }
};

struct OwnedRates {
  sq_rates* ptr = nullptr;
  ~OwnedRates() { sq_rates_free(ptr); }
};

std::string stamp_csv(const std::string& csv, const Manifest& manifest) {
  return "# manifest: " + manifest.hex() + "\n" + csv;
}

std::string stamp_json(const std::string& json_text, const Manifest& manifest) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(json_text);
  j["manifest_hash"] = manifest.hex();
  return j.dump(2) + "\n";
}

/// Shared --config/--cd/--cr handling: loads the config file and builds the
/// model handle, folding the inputs into the manifest.
struct ModelArgs {
  std::string config_path;
  double cd = -1;
  double cr = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "model config file")->required();
    cmd->add_option("--cd", cd, "override driver holding cost c_d");
    cmd->add_option("--cr", cr, "override rider waiting cost c_r");
  }

  void load(OwnedModel& model, Manifest& manifest) const {
    std::string text = slurp(config_path);
    manifest.add(text);
    manifest.add(cd);
    manifest.add(cr);
    check(sq_model_from_config(text.c_str(), cd, cr, &model.ptr));
  }
};

void load_rates(const std::string& path, OwnedRates& rates, Manifest& manifest) {
  std::string text = slurp(path);
  manifest.add(text);
  check(sq_rates_from_csv(text.c_str(), &rates.ptr));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dispatch and pricing toolkit for two-sided spatial queues"};
  app.require_subcommand(1);

  // --- estimate-rates ------------------------------------------------------
  ModelArgs er_model;
  int er_samples = 10000;
  unsigned long long er_seed = 1;
  std::string er_out, er_audit;
  auto* er = app.add_subcommand("estimate-rates",
                                "Monte-Carlo service-rate table for the configured grid");
  er_model.attach(er);
  er->add_option("--samples", er_samples, "replications per state")->default_val(er_samples);
  er->add_option("--seed", er_seed, "RNG seed")->default_val(er_seed);
  er->add_option("--out", er_out, "rate-table CSV (default stdout)");
  er->add_option("--audit", er_audit, "also write an Assumption-2 audit JSON here");

  // --- solve ---------------------------------------------------------------
  ModelArgs sv_model;
  std::string sv_rates, sv_method = "zigzag", sv_pricing = "dynamic", sv_out;
  double sv_wall_cap = -1;
  auto* sv = app.add_subcommand("solve", "Run a solver and emit a SolveResult JSON");
  sv_model.attach(sv);
  sv->add_option("--rates", sv_rates, "rate-table CSV")->required();
  sv->add_option("--method", sv_method, "zigzag | vi | greedy")->default_val(sv_method);
  sv->add_option("--pricing", sv_pricing, "static | dynamic")->default_val(sv_pricing);
  sv->add_option("--wall-cap", sv_wall_cap, "VI wall-clock cap in seconds (<=0 keeps default)");
  sv->add_option("--out", sv_out, "result JSON (default stdout)");

  // --- eval ----------------------------------------------------------------
  ModelArgs ev_model;
  std::string ev_rates, ev_policy, ev_pricing, ev_out;
  auto* ev = app.add_subcommand("eval", "Exact stationary evaluation of a policy + pricing pair");
  ev_model.attach(ev);
  ev->add_option("--rates", ev_rates, "rate-table CSV")->required();
  ev->add_option("--policy", ev_policy, "dispatch policy CSV")->required();
  ev->add_option("--pricing-file", ev_pricing, "pricing grid CSV")->required();
  ev->add_option("--out", ev_out, "report JSON (default stdout)");

  // --- simulate ------------------------------------------------------------
  ModelArgs sm_model;
  std::string sm_rule = "constant", sm_policy, sm_pricing, sm_out;
  double sm_r0 = 3, sm_r1 = 3, sm_T = 20000, sm_warmup = 1000;
  unsigned long long sm_seed = 1;
  auto* sm = app.add_subcommand("simulate", "Event-driven spatial simulation run");
  sm_model.attach(sm);
  sm->add_option("--rule", sm_rule, "constant | zigzag | two_radius")->default_val(sm_rule);
  sm->add_option("--radius", sm_r0, "dispatch radius (hold radius for two_radius)")
      ->default_val(sm_r0);
  sm->add_option("--radius2", sm_r1, "dispatch radius when the count policy says dispatch")
      ->default_val(sm_r1);
  sm->add_option("--policy", sm_policy, "count policy CSV (zigzag / two_radius rules)");
  sm->add_option("--pricing-file", sm_pricing, "pricing grid CSV")->required();
  sm->add_option("--T", sm_T, "horizon")->default_val(sm_T);
  sm->add_option("--warmup", sm_warmup, "warmup cut before statistics start")
      ->default_val(sm_warmup);
  sm->add_option("--seed", sm_seed, "RNG seed")->default_val(sm_seed);
  sm->add_option("--out", sm_out, "metrics JSON (default stdout)");

  // --- collect-samples -----------------------------------------------------
  ModelArgs cs_model;
  double cs_lambda = 12, cs_T = 20000, cs_warmup = 1000;
  unsigned long long cs_seed = 1;
  std::string cs_out;
  auto* cs = app.add_subcommand("collect-samples",
                                "Pickup-time corpus over the radius grid for power-law fitting");
  cs_model.attach(cs);
  cs->add_option("--lambda", cs_lambda, "uniform effective request rate")->default_val(cs_lambda);
  cs->add_option("--T", cs_T, "horizon per run")->default_val(cs_T);
  cs->add_option("--warmup", cs_warmup, "warmup cut")->default_val(cs_warmup);
  cs->add_option("--seed", cs_seed, "base RNG seed")->default_val(cs_seed);
  cs->add_option("--out", cs_out, "samples CSV (default stdout)");

  // --- fit -----------------------------------------------------------------
  std::string ft_samples, ft_out;
  long ft_min_count = 10;
  int ft_L = -1;
  auto* ft = app.add_subcommand("fit", "Log-log power-law fit of a pickup-sample corpus");
  ft->add_option("--samples", ft_samples, "samples CSV from collect-samples")->required();
  ft->add_option("--min-count", ft_min_count, "drop states with fewer observations")
      ->default_val(ft_min_count);
  ft->add_option("--L", ft_L, "fleet size (default: inferred from the corpus)");
  ft->add_option("--out", ft_out, "fit JSON (default stdout)");

  // --- calibrate -----------------------------------------------------------
  ModelArgs cb_model;
  double cb_T = 20000, cb_warmup = 1000, cb_r = 3, cb_lambda = 12;
  unsigned long long cb_seed = 1;
  std::string cb_out;
  auto* cb = app.add_subcommand("calibrate",
                                "Coordinate-ascent search for the best constant radius and rate");
  cb_model.attach(cb);
  cb->add_option("--T", cb_T, "horizon per evaluation")->default_val(cb_T);
  cb->add_option("--warmup", cb_warmup, "warmup cut")->default_val(cb_warmup);
  cb->add_option("--seed", cb_seed, "RNG seed")->default_val(cb_seed);
  cb->add_option("--r-init", cb_r, "starting radius")->default_val(cb_r);
  cb->add_option("--lambda-init", cb_lambda, "starting rate")->default_val(cb_lambda);
  cb->add_option("--out", cb_out, "result JSON (default stdout)");

  // --- two-radius ----------------------------------------------------------
  ModelArgs tr_model;
  std::string tr_policy, tr_pricing, tr_out;
  double tr_r_star = 3, tr_T = 20000, tr_warmup = 1000;
  unsigned long long tr_seed = 1;
  auto* tr = app.add_subcommand("two-radius",
                                "Split search around a calibrated radius for a count policy");
  tr_model.attach(tr);
  tr->add_option("--policy", tr_policy, "count policy CSV")->required();
  tr->add_option("--pricing-file", tr_pricing, "pricing grid CSV")->required();
  tr->add_option("--r-star", tr_r_star, "calibrated constant radius")->required();
  tr->add_option("--T", tr_T, "horizon per evaluation")->default_val(tr_T);
  tr->add_option("--warmup", tr_warmup, "warmup cut")->default_val(tr_warmup);
  tr->add_option("--seed", tr_seed, "RNG seed")->default_val(tr_seed);
  tr->add_option("--out", tr_out, "result JSON (default stdout)");

  // --- sweep ---------------------------------------------------------------
  ModelArgs sw_model;
  std::string sw_spec, sw_out;
  auto* sw = app.add_subcommand("sweep", "Seed-averaged robustness sweep over arrival rates");
  sw_model.attach(sw);
  sw->add_option("--spec", sw_spec, "sweep spec JSON file")->required();
  sw->add_option("--out", sw_out, "table CSV (default stdout)");

  try {
    app.parse(argc, argv);

    if (*er) {
      Manifest manifest("estimate-rates");
      OwnedModel model;
      er_model.load(model, manifest);
      manifest.add(static_cast<long long>(er_samples));
      manifest.add(static_cast<long long>(er_seed));
      OwnedRates rates;
      check(sq_rates_estimate(model.ptr, er_samples, er_seed, &rates.ptr));
      OwnedString csv;
      check(sq_rates_to_csv(rates.ptr, &csv.ptr));
      spill(er_out, stamp_csv(csv.str(), manifest));
      if (!er_audit.empty()) {
        OwnedString report;
        check(sq_rates_check_assumption2(rates.ptr, &report.ptr));
        spill(er_audit, stamp_json(report.str(), manifest));
      }
    } else if (*sv) {
      Manifest manifest("solve");
      OwnedModel model;
      sv_model.load(model, manifest);
      OwnedRates rates;
      load_rates(sv_rates, rates, manifest);
      manifest.add(sv_method);
      manifest.add(sv_pricing);
      manifest.add(sv_wall_cap);
      OwnedString result;
      check(sq_solve(model.ptr, rates.ptr, sv_method.c_str(), sv_pricing.c_str(), sv_wall_cap,
                     &result.ptr));
      spill(sv_out, stamp_json(result.str(), manifest));
    } else if (*ev) {
      Manifest manifest("eval");
      OwnedModel model;
      ev_model.load(model, manifest);
      OwnedRates rates;
      load_rates(ev_rates, rates, manifest);
      std::string policy = slurp(ev_policy), pricing = slurp(ev_pricing);
      manifest.add(policy);
      manifest.add(pricing);
      OwnedString report;
      check(sq_eval(model.ptr, rates.ptr, policy.c_str(), pricing.c_str(), &report.ptr));
      spill(ev_out, stamp_json(report.str(), manifest));
    } else if (*sm) {
      Manifest manifest("simulate");
      OwnedModel model;
      sm_model.load(model, manifest);
      std::string policy = sm_policy.empty() ? "" : slurp(sm_policy);
      std::string pricing = slurp(sm_pricing);
      manifest.add(sm_rule);
      manifest.add(sm_r0);
      manifest.add(sm_r1);
      manifest.add(policy);
      manifest.add(pricing);
      manifest.add(sm_T);
      manifest.add(sm_warmup);
      manifest.add(static_cast<long long>(sm_seed));
      OwnedString metrics;
      check(sq_simulate(model.ptr, sm_rule.c_str(), sm_r0, sm_r1,
                        policy.empty() ? nullptr : policy.c_str(), pricing.c_str(), sm_T,
                        sm_warmup, sm_seed, &metrics.ptr));
      spill(sm_out, stamp_json(metrics.str(), manifest));
    } else if (*cs) {
      Manifest manifest("collect-samples");
      OwnedModel model;
      cs_model.load(model, manifest);
      manifest.add(cs_lambda);
      manifest.add(cs_T);
      manifest.add(cs_warmup);
      manifest.add(static_cast<long long>(cs_seed));
      OwnedString csv;
      check(sq_collect_samples(model.ptr, cs_lambda, cs_T, cs_warmup, cs_seed, &csv.ptr));
      spill(cs_out, stamp_csv(csv.str(), manifest));
    } else if (*ft) {
      Manifest manifest("fit");
      std::string samples = slurp(ft_samples);
      manifest.add(samples);
      manifest.add(static_cast<long long>(ft_min_count));
      manifest.add(static_cast<long long>(ft_L));
      OwnedString fit;
      check(sq_fit_powerlaw(samples.c_str(), ft_min_count, ft_L, &fit.ptr));
      spill(ft_out, stamp_json(fit.str(), manifest));
    } else if (*cb) {
      Manifest manifest("calibrate");
      OwnedModel model;
      cb_model.load(model, manifest);
      manifest.add(cb_T);
      manifest.add(cb_warmup);
      manifest.add(static_cast<long long>(cb_seed));
      manifest.add(cb_r);
      manifest.add(cb_lambda);
      OwnedString result;
      check(sq_calibrate(model.ptr, cb_T, cb_warmup, cb_seed, cb_r, cb_lambda, &result.ptr));
      spill(cb_out, stamp_json(result.str(), manifest));
    } else if (*tr) {
      Manifest manifest("two-radius");
      OwnedModel model;
      tr_model.load(model, manifest);
      std::string policy = slurp(tr_policy), pricing = slurp(tr_pricing);
      manifest.add(policy);
      manifest.add(pricing);
      manifest.add(tr_r_star);
      manifest.add(tr_T);
      manifest.add(tr_warmup);
      manifest.add(static_cast<long long>(tr_seed));
      OwnedString result;
      check(sq_two_radius(model.ptr, policy.c_str(), pricing.c_str(), tr_r_star, tr_T, tr_warmup,
                          tr_seed, &result.ptr));
      spill(tr_out, stamp_json(result.str(), manifest));
    } else if (*sw) {
      Manifest manifest("sweep");
      OwnedModel model;
      sw_model.load(model, manifest);
      std::string spec = slurp(sw_spec);
      manifest.add(spec);
      // Inline any policy/pricing file references so the core sees raw CSV
      // text and the manifest covers the referenced files' contents.
      nlohmann::json parsed = nlohmann::json::parse(spec);
      for (auto& p : parsed.at("policies")) {
        for (const char* key : {"policy_csv", "pricing_csv"}) {
          if (p.contains(key) && p[key].is_string()) {
            std::string value = p[key].get<std::string>();
            if (value.find('\n') == std::string::npos && !value.empty()) {
              std::string text = slurp(value);
              manifest.add(text);
              p[key] = text;
            }
          }
        }
      }
      OwnedString table;
      check(sq_sweep(model.ptr, parsed.dump().c_str(), &table.ptr));
      spill(sw_out, stamp_csv(table.str(), manifest));
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
}
