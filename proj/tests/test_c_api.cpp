#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "emorl/emorl.h"

namespace fs = std::filesystem;

TEST_CASE("version and error channel") {
  CHECK(std::string(emorl_version()).size() > 0);
  double v = 0.0;
  CHECK(emorl_propulsion_power(-1.0, &v) == EMORL_ERR_DOMAIN);
  CHECK(std::string(emorl_last_error()).size() > 0);
  CHECK(emorl_propulsion_power(0.0, &v) == EMORL_OK);
  CHECK(std::string(emorl_last_error()).empty());
  CHECK(v > 0.0);
  CHECK(emorl_propulsion_power(0.0, nullptr) == EMORL_ERR_NULL);
}

TEST_CASE("environment lifecycle") {
  emorl_env* env = nullptr;
  REQUIRE(emorl_env_create(R"({"K": 10, "T": 3, "area_x": 100, "area_y": 100})", 5, &env) == EMORL_OK);
  REQUIRE(env != nullptr);
  double obs[4];
  double reward[3];
  int done = 0;
  const double action[3] = {1.0, 10.0, 0.5};
  CHECK(emorl_env_step(env, action, obs, reward, &done) == EMORL_ERR_USAGE);
  REQUIRE(emorl_env_reset(env, 9, obs) == EMORL_OK);
  for (double o : obs) CHECK(std::isfinite(o));
  int steps = 0;
  while (!done) {
    REQUIRE(emorl_env_step(env, action, obs, reward, &done) == EMORL_OK);
    ++steps;
  }
  CHECK(steps == 3);
  CHECK(emorl_env_step(env, action, obs, reward, &done) == EMORL_ERR_USAGE);

  const auto csv = fs::temp_directory_path() / "emorl_capi_episode.csv";
  REQUIRE(emorl_env_write_csv(env, csv.string().c_str()) == EMORL_OK);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,x,y", 0) == 0);
  fs::remove(csv);

  CHECK(emorl_env_reset(env, 9, obs) == EMORL_OK);
  const double nan_action[3] = {NAN, 0.0, 0.0};
  CHECK(emorl_env_step(env, nan_action, obs, reward, &done) == EMORL_ERR_DOMAIN);
  emorl_env_destroy(env);
  emorl_env_destroy(nullptr);
}

TEST_CASE("environment creation errors") {
  emorl_env* env = nullptr;
  CHECK(emorl_env_create("{\"K\": -1}", 1, &env) == EMORL_ERR_CONFIG);
  CHECK(env == nullptr);
  CHECK(emorl_env_create("{not json", 1, &env) == EMORL_ERR_CONFIG);
  CHECK(emorl_env_create("{\"unknown\": 1}", 1, &env) == EMORL_ERR_CONFIG);
  CHECK(emorl_env_create(nullptr, 1, nullptr) == EMORL_ERR_NULL);
  CHECK(emorl_env_reset(nullptr, 1, nullptr) == EMORL_ERR_NULL);
}

TEST_CASE("metric entry points") {
  const double pts[6] = {1.0, 0.5, 0.5, 0.5, 0.5, 0.5};
  const double ref[3] = {0.0, 0.0, 0.0};
  double hv = 0.0;
  REQUIRE(emorl_hv3(pts, 2, ref, &hv) == EMORL_OK);
  CHECK(hv == doctest::Approx(0.25));
  CHECK(emorl_hv3(nullptr, 2, ref, &hv) == EMORL_ERR_NULL);

  const double a[3] = {0.0, 0.0, 0.0};
  const double b[3] = {1.0, 0.0, 0.0};
  double d = 0.0;
  REQUIRE(emorl_igd(a, 1, b, 1, &d) == EMORL_OK);
  CHECK(d == 1.0);
  CHECK(emorl_igd(a, 0, b, 1, &d) == EMORL_ERR_DOMAIN);
}

TEST_CASE("JSON request entry points") {
  char* out = nullptr;
  REQUIRE(emorl_instances_json(R"({"seed": 2, "desk_scale": true})", &out) == EMORL_OK);
  REQUIRE(out != nullptr);
  CHECK(std::string(out).find("I-(140,50)") != std::string::npos);
  emorl_string_free(out);

  out = nullptr;
  CHECK(emorl_train(R"({"algo": "nope"})", &out) == EMORL_ERR_CONFIG);
  CHECK(out == nullptr);
  CHECK(emorl_eval(R"({"labels": []})", &out) == EMORL_ERR_CONFIG);
  CHECK(emorl_eval(R"({"fronts": ["/nonexistent/front.csv"]})", &out) == EMORL_ERR_IO);
  CHECK(emorl_train(nullptr, nullptr) == EMORL_ERR_NULL);

  const auto dir = fs::temp_directory_path() / "emorl_capi_eval";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "a.csv");
    f << "policy_id,R_D,R_E,R_N,D_total,E_total,N_total\n0,0,0,0,1,1,1\n";
    std::ofstream g(dir / "b.csv");
    g << "policy_id,R_D,R_E,R_N,D_total,E_total,N_total\n0,1,2,4,2,2,2\n";
  }
  const std::string req = R"({"fronts": [")" + (dir / "a.csv").string() + R"(", ")" +
                          (dir / "b.csv").string() + R"("], "labels": ["a", "b"], "out": ")" +
                          (dir / "report").string() + R"("})";
  REQUIRE(emorl_eval(req.c_str(), &out) == EMORL_OK);
  CHECK(std::string(out).find("\"igd\"") != std::string::npos);
  emorl_string_free(out);
  CHECK(fs::exists(dir / "report" / "report.csv"));
  fs::remove_all(dir);
}
