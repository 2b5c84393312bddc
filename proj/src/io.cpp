#include "spatialq/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace spatialq::io {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid number for " + what + ": '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid integer for " + what + ": '" + s + "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

/// Non-comment, non-blank lines of CSV text.
std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(t);
  }
  return out;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string grid_csv_string(int rows, int cols,
                            const std::function<std::string(int, int)>& cell,
                            const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << "\n";
  for (int l = 0; l < rows; ++l) {
    for (int m = 0; m < cols; ++m) {
      if (m) out << ",";
      out << cell(l, m);
    }
    out << "\n";
  }
  return out.str();
}

std::vector<std::vector<double>> parse_grid_csv(const std::string& text) {
  std::vector<std::vector<double>> grid;
  for (const std::string& line : data_lines(text)) {
    std::vector<double> row;
    for (const std::string& cell : split_csv(line)) row.push_back(parse_double(cell, "grid cell"));
    if (!grid.empty() && row.size() != grid.front().size())
      throw std::invalid_argument("ragged CSV grid");
    grid.push_back(std::move(row));
  }
  if (grid.empty()) throw std::invalid_argument("empty CSV grid");
  return grid;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedConfig parse_config(const std::string& text) {
  static const std::set<std::string> model_keys = {"L", "Lambda", "M", "t0", "p0", "p_max"};
  static const std::set<std::string> raw_keys = {"w_s_d", "w_o_d", "w_p_r", "w_q_r"};
  static const std::set<std::string> reduced_keys = {"c_d", "c_r", "p0_eff"};

  std::map<std::string, double> values;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: expected key = value: " + t);
    std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
    if (!model_keys.count(key) && !raw_keys.count(key) && !reduced_keys.count(key))
      throw std::invalid_argument("config: unknown key: " + key);
    if (values.count(key)) throw std::invalid_argument("config: duplicate key: " + key);
    values[key] = parse_double(val, key);
  }

  for (const std::string& key : model_keys)
    if (!values.count(key)) throw std::invalid_argument("config: missing key: " + key);

  LoadedConfig out;
  out.cfg.L = static_cast<int>(values["L"]);
  out.cfg.Lambda = values["Lambda"];
  out.cfg.M = static_cast<int>(values["M"]);
  out.cfg.t0 = values["t0"];
  out.cfg.p0 = values["p0"];
  out.cfg.p_max = values["p_max"];
  if (out.cfg.L != values["L"] || out.cfg.M != values["M"])
    throw std::invalid_argument("config: L and M must be integers");
  out.cfg.validate();

  int n_raw = 0, n_reduced = 0;
  for (const std::string& key : raw_keys) n_raw += values.count(key);
  for (const std::string& key : reduced_keys) n_reduced += values.count(key);
  if (n_raw > 0 && n_reduced > 0)
    throw std::invalid_argument("config: give either raw weights or reduced costs, not both");
  if (n_raw > 0 && n_raw < 4)
    throw std::invalid_argument("config: raw cost form needs all of w_s_d, w_o_d, w_p_r, w_q_r");
  if (n_reduced > 0 && n_reduced < 3)
    throw std::invalid_argument("config: reduced cost form needs all of c_d, c_r, p0_eff");
  if (n_raw == 0 && n_reduced == 0)
    throw std::invalid_argument("config: missing cost parameters");

  if (n_raw == 4) {
    out.has_raw = true;
    out.raw = {values["w_s_d"], values["w_o_d"], values["w_p_r"], values["w_q_r"]};
    out.reduced = reduce_costs(out.raw, out.cfg.p0, out.cfg.t0);
  } else {
    out.has_reduced = true;
    out.reduced = {values["c_d"], values["c_r"], values["p0_eff"]};
    if (out.reduced.c_d <= 0 || out.reduced.c_r <= 0)
      throw std::invalid_argument("config: c_d and c_r must be > 0");
  }
  return out;
}

LoadedConfig read_config(const std::string& path) { return parse_config(read_text_file(path)); }

ReducedCosts resolve_costs(const LoadedConfig& config, double cd_override, double cr_override) {
  ReducedCosts out = config.reduced;
  if (cd_override >= 0) out.c_d = cd_override;
  if (cr_override >= 0) out.c_r = cr_override;
  if (out.c_d <= 0 || out.c_r <= 0)
    throw std::invalid_argument("resolve_costs: c_d and c_r must be > 0");
  return out;
}

std::string rates_csv_string(const RateTable& rates, const std::vector<std::string>& comments) {
  return grid_csv_string(
      rates.L() + 1, rates.M() + 1, [&](int l, int m) { return fmt_full(rates.mu(l, m)); },
      comments);
}

void write_rates_csv(const std::string& path, const RateTable& rates,
                     const std::vector<std::string>& comments) {
  write_text_file(path, rates_csv_string(rates, comments));
}

RateTable parse_rates_csv(const std::string& text) {
  auto grid = parse_grid_csv(text);
  RateTable rates(static_cast<int>(grid.size()) - 1, static_cast<int>(grid.front().size()) - 1);
  for (int l = 0; l <= rates.L(); ++l)
    for (int m = 0; m <= rates.M(); ++m) rates.mu(l, m) = grid[l][m];
  rates.recompute_bound();
  return rates;
}

RateTable read_rates_csv(const std::string& path) { return parse_rates_csv(read_text_file(path)); }

std::string policy_csv_string(const DispatchPolicy& policy,
                              const std::vector<std::string>& comments) {
  return grid_csv_string(
      policy.L() + 1, policy.M() + 1,
      [&](int l, int m) { return std::to_string(int(policy.phi(l, m))); }, comments);
}

void write_policy_csv(const std::string& path, const DispatchPolicy& policy,
                      const std::vector<std::string>& comments) {
  write_text_file(path, policy_csv_string(policy, comments));
}

DispatchPolicy parse_policy_csv(const std::string& text) {
  auto grid = parse_grid_csv(text);
  DispatchPolicy policy(static_cast<int>(grid.size()) - 1,
                        static_cast<int>(grid.front().size()) - 1);
  for (int l = 0; l <= policy.L(); ++l)
    for (int m = 0; m <= policy.M(); ++m) {
      double v = grid[l][m];
      if (v != 0 && v != 1) throw std::invalid_argument("policy cells must be 0 or 1");
      policy.phi(l, m) = static_cast<uint8_t>(v);
    }
  policy.validate();
  return policy;
}

DispatchPolicy read_policy_csv(const std::string& path) {
  return parse_policy_csv(read_text_file(path));
}

std::string pricing_csv_string(const PricingPolicy& pricing,
                               const std::vector<std::string>& comments) {
  return grid_csv_string(
      pricing.L() + 1, pricing.M() + 1, [&](int l, int m) { return fmt_full(pricing.lambda(l, m)); },
      comments);
}

void write_pricing_csv(const std::string& path, const PricingPolicy& pricing,
                       const std::vector<std::string>& comments) {
  write_text_file(path, pricing_csv_string(pricing, comments));
}

PricingPolicy parse_pricing_csv(const std::string& text) {
  auto grid = parse_grid_csv(text);
  PricingPolicy pricing(static_cast<int>(grid.size()) - 1,
                        static_cast<int>(grid.front().size()) - 1);
  for (int l = 0; l <= pricing.L(); ++l)
    for (int m = 0; m <= pricing.M(); ++m) {
      if (grid[l][m] < 0) throw std::invalid_argument("negative rate in pricing grid");
      pricing.lambda(l, m) = grid[l][m];
    }
  return pricing;
}

PricingPolicy read_pricing_csv(const std::string& path) {
  return parse_pricing_csv(read_text_file(path));
}

std::string path_csv_string(const ZigzagPath& zpath, const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "l,m\n";
  for (const State& s : zpath.states) out << s.l << "," << s.m << "\n";
  return out.str();
}

void write_path_csv(const std::string& path, const ZigzagPath& zpath,
                    const std::vector<std::string>& comments) {
  write_text_file(path, path_csv_string(zpath, comments));
}

ZigzagPath parse_path_csv(const std::string& text) {
  ZigzagPath zpath;
  for (const std::string& line : data_lines(text)) {
    if (line == "l,m") continue;
    auto cells = split_csv(line);
    if (cells.size() != 2) throw std::invalid_argument("path CSV: expected two columns");
    zpath.states.push_back({static_cast<int>(parse_long(cells[0], "l")),
                            static_cast<int>(parse_long(cells[1], "m"))});
  }
  zpath.validate();
  return zpath;
}

ZigzagPath read_path_csv(const std::string& path) { return parse_path_csv(read_text_file(path)); }

std::string samples_csv_string(const std::vector<PickupSampleRow>& rows,
                               const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "l,m,avg_pickup,count\n";
  for (const PickupSampleRow& r : rows)
    out << r.l << "," << r.m << "," << fmt_full(r.avg_pickup) << "," << r.count << "\n";
  return out.str();
}

void write_samples_csv(const std::string& path, const std::vector<PickupSampleRow>& rows,
                       const std::vector<std::string>& comments) {
  write_text_file(path, samples_csv_string(rows, comments));
}

std::vector<PickupSampleRow> parse_samples_csv(const std::string& text) {
  std::vector<PickupSampleRow> rows;
  for (const std::string& line : data_lines(text)) {
    if (line == "l,m,avg_pickup,count") continue;
    auto cells = split_csv(line);
    if (cells.size() != 4) throw std::invalid_argument("samples CSV: expected four columns");
    PickupSampleRow r;
    r.l = static_cast<int>(parse_long(cells[0], "l"));
    r.m = static_cast<int>(parse_long(cells[1], "m"));
    r.avg_pickup = parse_double(cells[2], "avg_pickup");
    r.count = parse_long(cells[3], "count");
    rows.push_back(r);
  }
  return rows;
}

std::vector<PickupSampleRow> read_samples_csv(const std::string& path) {
  return parse_samples_csv(read_text_file(path));
}

std::string powerlaw_fit_json(const PowerLawFit& fit, const std::string& manifest_hash) {
  nlohmann::ordered_json j;
  if (!manifest_hash.empty()) j["manifest_hash"] = manifest_hash;
  j["C"] = fit.C;
  j["alpha1"] = fit.alpha1;
  j["alpha2"] = fit.alpha2;
  j["se_C"] = fit.se_C;
  j["se_log_C"] = fit.se_log_C;
  j["se_alpha1"] = fit.se_alpha1;
  j["se_alpha2"] = fit.se_alpha2;
  j["n_samples"] = fit.n_samples;
  return j.dump(2) + "\n";
}

PowerLawFit parse_powerlaw_fit_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PowerLawFit fit;
  fit.C = j.at("C").get<double>();
  fit.alpha1 = j.at("alpha1").get<double>();
  fit.alpha2 = j.at("alpha2").get<double>();
  fit.se_C = j.value("se_C", 0.0);
  fit.se_log_C = j.value("se_log_C", 0.0);
  fit.se_alpha1 = j.value("se_alpha1", 0.0);
  fit.se_alpha2 = j.value("se_alpha2", 0.0);
  fit.n_samples = j.value("n_samples", 0);
  return fit;
}

std::string solve_result_json(const SolveResult& result, const std::string& manifest_hash) {
  nlohmann::ordered_json j;
  if (!manifest_hash.empty()) j["manifest_hash"] = manifest_hash;
  j["method"] = result.method;
  j["objective"] = result.objective;
  j["iterations"] = result.iterations;
  j["wall_time_s"] = result.wall_time_s;
  j["converged"] = result.converged;
  nlohmann::ordered_json path = nlohmann::ordered_json::array();
  for (const State& s : result.path.states) path.push_back({s.l, s.m});
  j["path"] = path;
  nlohmann::ordered_json dispatch = nlohmann::ordered_json::array();
  for (int l = 0; l <= result.dispatch.L(); ++l) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int m = 0; m <= result.dispatch.M(); ++m) row.push_back(int(result.dispatch.phi(l, m)));
    dispatch.push_back(row);
  }
  j["dispatch"] = dispatch;
  nlohmann::ordered_json pricing = nlohmann::ordered_json::array();
  for (int l = 0; l <= result.pricing.L(); ++l) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int m = 0; m <= result.pricing.M(); ++m) row.push_back(result.pricing.lambda(l, m));
    pricing.push_back(row);
  }
  j["pricing"] = pricing;
  return j.dump(2) + "\n";
}

std::string table_round(double v) {
  double r = std::round(std::abs(v) * 100.0) / 100.0;
  if (v < 0) r = -r;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

}  // namespace spatialq::io
