// Exercises the shared library strictly through its public C header.
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "spatialq.h"

namespace {

const char* kConfig =
    "L = 6\nLambda = 4\nM = 5\nt0 = 5.2140543316472066\np0 = 3.9571891336705587\n"
    "p_max = 2\nw_s_d = 0.5\nw_o_d = 0.2\nw_p_r = 0.2\nw_q_r = 0.5\n";

struct ModelGuard {
  sq_model* m = nullptr;
  ~ModelGuard() { sq_model_free(m); }
};
struct RatesGuard {
  sq_rates* r = nullptr;
  ~RatesGuard() { sq_rates_free(r); }
};
struct StringGuard {
  char* s = nullptr;
  ~StringGuard() { sq_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
};

}  // namespace

TEST_CASE("model lifecycle and parameter access") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  int L = 0, M = 0;
  double Lambda = 0, t0 = 0, p0 = 0, p_max = 0, c_d = 0, c_r = 0, p0_eff = 0;
  REQUIRE(sq_model_params(model.m, &L, &Lambda, &M, &t0, &p0, &p_max, &c_d, &c_r, &p0_eff) ==
          SQ_OK);
  CHECK(L == 6);
  CHECK(Lambda == doctest::Approx(4.0));
  CHECK(M == 5);
  CHECK(c_d == doctest::Approx(0.5));
  CHECK(c_r == doctest::Approx(0.5));
  CHECK(p0_eff == doctest::Approx(5.0));
  CHECK(sq_mean_trip_time() == doctest::Approx(5.2140543316472066));

  SUBCASE("null outputs are allowed") {
    CHECK(sq_model_params(model.m, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                          nullptr, nullptr) == SQ_OK);
  }
  SUBCASE("cost overrides apply") {
    ModelGuard o;
    REQUIRE(sq_model_from_config(kConfig, 0.75, 1.0, &o.m) == SQ_OK);
    double ocd = 0, ocr = 0;
    REQUIRE(sq_model_params(o.m, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, &ocd, &ocr,
                            nullptr) == SQ_OK);
    CHECK(ocd == doctest::Approx(0.75));
    CHECK(ocr == doctest::Approx(1.0));
  }
}

TEST_CASE("validation errors set status and message") {
  sq_model* out = nullptr;
  CHECK(sq_model_from_config("L = not_a_number\n", -1, -1, &out) == SQ_ERR_VALIDATION);
  CHECK(out == nullptr);
  CHECK(std::strlen(sq_last_error()) > 0);

  sq_rates* rates = nullptr;
  CHECK(sq_rates_from_csv("0.1,0.2\n0.3\n", &rates) == SQ_ERR_VALIDATION);
  CHECK(rates == nullptr);
  CHECK(std::string(sq_last_error()).find("ragged") != std::string::npos);
}

TEST_CASE("rates round-trip through CSV") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  RatesGuard rates;
  REQUIRE(sq_rates_estimate(model.m, 2000, 7, &rates.r) == SQ_OK);
  StringGuard csv;
  REQUIRE(sq_rates_to_csv(rates.r, &csv.s) == SQ_OK);
  RatesGuard back;
  REQUIRE(sq_rates_from_csv(csv.s, &back.r) == SQ_OK);
  StringGuard csv2;
  REQUIRE(sq_rates_to_csv(back.r, &csv2.s) == SQ_OK);
  CHECK(csv.str() == csv2.str());
}

TEST_CASE("power-law table, assumption audit, closed form") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  RatesGuard rates;
  REQUIRE(sq_rates_powerlaw(model.m, 3.839, -0.274, -0.192, &rates.r) == SQ_OK);
  StringGuard audit;
  REQUIRE(sq_rates_check_assumption2(rates.r, &audit.s) == SQ_OK);
  CHECK(audit.str().find("\"count\": 0") != std::string::npos);
  StringGuard policy;
  REQUIRE(sq_closed_form_policy(rates.r, &policy.s) == SQ_OK);
  CHECK(!policy.str().empty());

  SUBCASE("invalid C rejected") {
    sq_rates* bad = nullptr;
    CHECK(sq_rates_powerlaw(model.m, -1.0, 0, 0, &bad) == SQ_ERR_VALIDATION);
  }
}

TEST_CASE("solve / eval / simulate pipeline") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  RatesGuard rates;
  REQUIRE(sq_rates_powerlaw(model.m, 3.839, -0.274, -0.192, &rates.r) == SQ_OK);

  StringGuard solve;
  REQUIRE(sq_solve(model.m, rates.r, "zigzag", "dynamic", -1, &solve.s) == SQ_OK);
  std::string sj = solve.str();
  CHECK(sj.find("\"method\": \"zigzag-dyn\"") != std::string::npos);
  CHECK(sj.find("\"objective\"") != std::string::npos);
  CHECK(sj.find("\"dispatch\"") != std::string::npos);

  SUBCASE("vi agrees with zigzag here (c_d = c_r)") {
    StringGuard vi;
    REQUIRE(sq_solve(model.m, rates.r, "vi", "dynamic", -1, &vi.s) == SQ_OK);
    auto grab = [](const std::string& j) {
      size_t p = j.find("\"objective\": ");
      return std::stod(j.substr(p + 13));
    };
    CHECK(std::abs(grab(vi.str()) - grab(sj)) / grab(vi.str()) <= 1e-3);
  }

  SUBCASE("unknown method rejected") {
    char* out = nullptr;
    CHECK(sq_solve(model.m, rates.r, "simplex", "dynamic", -1, &out) == SQ_ERR_VALIDATION);
  }

  SUBCASE("eval consumes explicit grids") {
    // Greedy dispatch, uniform rate 1.5 everywhere.
    std::string policy_csv, pricing_csv;
    for (int l = 0; l <= 6; ++l) {
      for (int m = 0; m <= 5; ++m) {
        policy_csv += (l < 6 && m >= 1) ? '1' : '0';
        pricing_csv += "1.5";
        if (m < 5) policy_csv += ',', pricing_csv += ',';
      }
      policy_csv += '\n';
      pricing_csv += '\n';
    }
    StringGuard report;
    REQUIRE(sq_eval(model.m, rates.r, policy_csv.c_str(), pricing_csv.c_str(), &report.s) == SQ_OK);
    CHECK(report.str().find("\"objective\"") != std::string::npos);
    CHECK(report.str().find("\"throughput\"") != std::string::npos);
  }

  SUBCASE("simulation smoke and determinism") {
    StringGuard a, b;
    std::string pricing_csv;
    for (int l = 0; l <= 6; ++l) {
      for (int m = 0; m <= 5; ++m) pricing_csv += m < 5 ? "1.0," : "1.0";
      pricing_csv += '\n';
    }
    REQUIRE(sq_simulate(model.m, "constant", 4.0, 0, nullptr, pricing_csv.c_str(), 300, 30, 5,
                        &a.s) == SQ_OK);
    REQUIRE(sq_simulate(model.m, "constant", 4.0, 0, nullptr, pricing_csv.c_str(), 300, 30, 5,
                        &b.s) == SQ_OK);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("objective_eq4") != std::string::npos);
  }
}

TEST_CASE("sample collection and fitting through the C surface") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  StringGuard samples;
  REQUIRE(sq_collect_samples(model.m, 1.0, 400, 40, 3, &samples.s) == SQ_OK);
  StringGuard fit;
  REQUIRE(sq_fit_powerlaw(samples.s, 5, 6, &fit.s) == SQ_OK);
  CHECK(fit.str().find("\"C\"") != std::string::npos);
  CHECK(fit.str().find("\"alpha1\"") != std::string::npos);

  SUBCASE("unusable corpus is a validation error") {
    char* out = nullptr;
    CHECK(sq_fit_powerlaw("l,m,avg_pickup,count\n0,0,1.0,100\n", 10, 6, &out) ==
          SQ_ERR_VALIDATION);
  }
}

TEST_CASE("calibration and two-radius through the C surface") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  StringGuard cal;
  REQUIRE(sq_calibrate(model.m, 200, 20, 2, 3.0, 1.0, &cal.s) == SQ_OK);
  CHECK(cal.str().find("\"r\"") != std::string::npos);
  CHECK(cal.str().find("\"lambda_bar\"") != std::string::npos);

  std::string policy_csv, pricing_csv;
  for (int l = 0; l <= 6; ++l) {
    for (int m = 0; m <= 5; ++m) {
      policy_csv += (l < 6 && m >= 2) ? '1' : '0';
      pricing_csv += "1.0";
      if (m < 5) policy_csv += ',', pricing_csv += ',';
    }
    policy_csv += '\n';
    pricing_csv += '\n';
  }
  StringGuard two;
  REQUIRE(sq_two_radius(model.m, policy_csv.c_str(), pricing_csv.c_str(), 3.0, 200, 20, 2,
                        &two.s) == SQ_OK);
  CHECK(two.str().find("\"delta\"") != std::string::npos);
}

TEST_CASE("sweep through the C surface") {
  ModelGuard model;
  REQUIRE(sq_model_from_config(kConfig, -1, -1, &model.m) == SQ_OK);
  std::string pricing_csv;
  for (int l = 0; l <= 6; ++l) {
    for (int m = 0; m <= 5; ++m) pricing_csv += m < 5 ? "1.0," : "1.0";
    pricing_csv += '\n';
  }
  std::string spec = std::string("{\"lambdas\":[2,4],\"seeds\":[1,2],\"T\":200,\"warmup\":20,") +
                     "\"policies\":[{\"name\":\"cr\",\"rule\":\"constant\",\"r0\":4.0," +
                     "\"pricing_csv\":" + "\"" + "1.0,1.0,1.0,1.0,1.0,1.0\\n1.0,1.0,1.0,1.0,1.0,1.0\\n"
                     "1.0,1.0,1.0,1.0,1.0,1.0\\n1.0,1.0,1.0,1.0,1.0,1.0\\n"
                     "1.0,1.0,1.0,1.0,1.0,1.0\\n1.0,1.0,1.0,1.0,1.0,1.0\\n"
                     "1.0,1.0,1.0,1.0,1.0,1.0\\n\"}]}";
  StringGuard table;
  REQUIRE(sq_sweep(model.m, spec.c_str(), &table.s) == SQ_OK);
  // Header plus 2 lambdas x 1 policy.
  int lines = 0;
  for (char ch : table.str())
    if (ch == '\n') ++lines;
  CHECK(lines >= 3);

  SUBCASE("malformed spec rejected") {
    char* out = nullptr;
    CHECK(sq_sweep(model.m, "{not json", &out) == SQ_ERR_VALIDATION);
  }
}

TEST_CASE("free functions accept NULL") {
  sq_model_free(nullptr);
  sq_rates_free(nullptr);
  sq_string_free(nullptr);
  CHECK(true);
}
