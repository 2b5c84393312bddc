#pragma once

#include <string>
#include <vector>

#include "spatialq/model.hpp"
#include "spatialq/rates.hpp"
#include "spatialq/solvers.hpp"

namespace spatialq::io {

/// Parsed key=value config. The cost block is either raw Eq.-(2) weights or
/// pre-reduced (c_d, c_r, p0_eff); exactly one form must be present.
struct LoadedConfig {
  ModelConfig cfg;
  bool has_raw = false;
  RawCosts raw;
  bool has_reduced = false;
  ReducedCosts reduced;
};

/// Parses `key = value` lines ('#' starts a comment). Recognized keys:
/// L, Lambda, M, t0, p0, p_max, w_s_d, w_o_d, w_p_r, w_q_r, c_d, c_r, p0_eff.
/// Unknown keys, malformed lines, mixed/missing cost forms, or invalid values
/// throw std::invalid_argument.
LoadedConfig parse_config(const std::string& text);
LoadedConfig read_config(const std::string& path);

/// Reduced costs from the config, with optional overrides (negative = keep).
/// Overrides apply to c_d / c_r after any Lemma-1 reduction.
ReducedCosts resolve_costs(const LoadedConfig& config, double cd_override = -1,
                           double cr_override = -1);

/// All CSV writers prepend the given comment lines as `# ...`; readers skip
/// blank and `#` lines. Grids are one row per l, columns m = 0..M. Each
/// format has a string form (parse_* / *_string) and a file form wrapping it.
std::string rates_csv_string(const RateTable& rates, const std::vector<std::string>& comments = {});
RateTable parse_rates_csv(const std::string& text);
void write_rates_csv(const std::string& path, const RateTable& rates,
                     const std::vector<std::string>& comments = {});
RateTable read_rates_csv(const std::string& path);

std::string policy_csv_string(const DispatchPolicy& policy,
                              const std::vector<std::string>& comments = {});
DispatchPolicy parse_policy_csv(const std::string& text);
void write_policy_csv(const std::string& path, const DispatchPolicy& policy,
                      const std::vector<std::string>& comments = {});
DispatchPolicy read_policy_csv(const std::string& path);

std::string pricing_csv_string(const PricingPolicy& pricing,
                               const std::vector<std::string>& comments = {});
PricingPolicy parse_pricing_csv(const std::string& text);
void write_pricing_csv(const std::string& path, const PricingPolicy& pricing,
                       const std::vector<std::string>& comments = {});
PricingPolicy read_pricing_csv(const std::string& path);

/// Two-column `l,m` CSV with a header row.
std::string path_csv_string(const ZigzagPath& zpath, const std::vector<std::string>& comments = {});
ZigzagPath parse_path_csv(const std::string& text);
void write_path_csv(const std::string& path, const ZigzagPath& zpath,
                    const std::vector<std::string>& comments = {});
ZigzagPath read_path_csv(const std::string& path);

/// Pickup-sample corpus: header `l,m,avg_pickup,count`.
std::string samples_csv_string(const std::vector<PickupSampleRow>& rows,
                               const std::vector<std::string>& comments = {});
std::vector<PickupSampleRow> parse_samples_csv(const std::string& text);
void write_samples_csv(const std::string& path, const std::vector<PickupSampleRow>& rows,
                       const std::vector<std::string>& comments = {});
std::vector<PickupSampleRow> read_samples_csv(const std::string& path);

/// Full-precision JSON report for a power-law fit.
std::string powerlaw_fit_json(const PowerLawFit& fit, const std::string& manifest_hash = "");
PowerLawFit parse_powerlaw_fit_json(const std::string& text);

/// Full-precision JSON for a SolveResult: method, objective, iterations,
/// wall-time, recurrent path, dispatch and pricing grids.
std::string solve_result_json(const SolveResult& result, const std::string& manifest_hash = "");

/// Round-half-away-from-zero to 2 decimals, as the paper's tables print.
std::string table_round(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace spatialq::io
