#include <cmath>
#include <cstdio>
#include <fstream>

#include <doctest.h>

#include "compofun/features.hpp"
#include "compofun/io.hpp"
#include "compofun/ode.hpp"
#include "util.hpp"

using namespace cf;
using namespace testutil;

TEST_CASE("json round trip preserves structure and values") {
  auto f = trig_triple();
  auto g = parse_dag(dag_to_json(f));
  CHECK(g.d() == f.d());
  CHECK(g.q() == f.q());
  CHECK(g.R() == f.R());
  REQUIRE(g.nodes().size() == f.nodes().size());
  for (size_t i = 0; i < f.nodes().size(); ++i) {
    const auto& a = f.nodes()[i];
    const auto& b = g.nodes()[i];
    CHECK(a.id == b.id);
    CHECK(a.kind == b.kind);
    CHECK(a.prim == b.prim);
    CHECK(a.params == b.params);
    CHECK(a.layer == b.layer);
    CHECK(a.R_ij == b.R_ij);
    CHECK(a.m_ij == b.m_ij);
    REQUIRE(a.inputs.size() == b.inputs.size());
    for (size_t k = 0; k < a.inputs.size(); ++k) {
      CHECK(a.inputs[k].src == b.inputs[k].src);
      CHECK(a.inputs[k].slot == b.inputs[k].slot);
    }
  }
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto ya = f.evaluate(x), yb = g.evaluate(x);
    for (int k = 0; k < 3; ++k) CHECK(ya[k] == yb[k]);
  }
}

TEST_CASE("save and load through a file") {
  auto f = make_lorenz96(4, 8.0, 1.0);
  std::string path = "io_roundtrip_tmp.json";
  save_dag(f, path);
  auto g = load_dag(path);
  std::remove(path.c_str());
  REQUIRE(g.nodes().size() == f.nodes().size());
  std::vector<double> x = {0.3, -0.7, 0.1, 0.9};
  auto ya = f.evaluate(x), yb = g.evaluate(x);
  for (int k = 0; k < 4; ++k) CHECK(ya[k] == yb[k]);
}

TEST_CASE("strict schema rejections") {
  CHECK_THROWS_AS(parse_dag("not json"), SchemaError);
  CHECK_THROWS_AS(parse_dag("[1,2]"), SchemaError);
  CHECK_THROWS_WITH_AS(
      parse_dag(R"({"d":1,"q":1,"R":1,"nodes":[],"extra":0})"),
      doctest::Contains("unknown field \"extra\""), SchemaError);
  CHECK_THROWS_WITH_AS(parse_dag(R"({"d":1,"q":1,"R":1,"nodes":[]})"),
                       doctest::Contains("nonempty"), SchemaError);
  CHECK_THROWS_WITH_AS(parse_dag(R"({"d":1,"q":1,"nodes":[]})"),
                       doctest::Contains("missing field \"R\""), SchemaError);

  std::string node_missing = R"({"d":1,"q":1,"R":1,"nodes":[
    {"id":"x1","kind":"input","primitive":"","params":[],"layer":0,"inputs":[],"R_ij":1}
  ]})";
  CHECK_THROWS_WITH_AS(parse_dag(node_missing), doctest::Contains("missing field \"m_ij\""),
                       SchemaError);

  std::string bad_prim = R"({"d":1,"q":1,"R":1,"nodes":[
    {"id":"x1","kind":"input","primitive":"","params":[],"layer":0,"inputs":[],"R_ij":1,"m_ij":2},
    {"id":"o","kind":"general","primitive":"sinh","params":[],"layer":1,
     "inputs":[{"src":"x1","slot":0}],"R_ij":1,"m_ij":2}
  ]})";
  CHECK_THROWS_WITH_AS(parse_dag(bad_prim), doctest::Contains("unknown primitive \"sinh\""),
                       SchemaError);
}

TEST_CASE("load rejects structurally broken graphs with the first issue") {
  // sin's R_ij is too small for its source range, a compatibility failure
  std::string text = R"({"d":1,"q":1,"R":1,"nodes":[
    {"id":"x1","kind":"input","primitive":"","params":[],"layer":0,"inputs":[],"R_ij":1,"m_ij":2},
    {"id":"a","kind":"linear","primitive":"affine","params":[0,3],"layer":1,
     "inputs":[{"src":"x1","slot":0}],"R_ij":1.01,"m_ij":2},
    {"id":"o","kind":"general","primitive":"sin","params":[],"layer":2,
     "inputs":[{"src":"a","slot":0}],"R_ij":1.0,"m_ij":2}
  ]})";
  std::string path = "io_invalid_tmp.json";
  {
    std::ofstream out(path);
    out << text;
  }
  CHECK_THROWS_WITH_AS(load_dag(path), doctest::Contains("compatibility"), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("bundled cyclic system file matches the constructor") {
  auto file = load_dag(std::string(COMPOFUN_DATA_DIR) + "/lorenz96_d4.json");
  auto built = make_lorenz96(4, 8.0, 1.0);
  REQUIRE(file.nodes().size() == built.nodes().size());
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-1, 1);
    auto ya = file.evaluate(x), yb = built.evaluate(x);
    for (int k = 0; k < 4; ++k) CHECK(ya[k] == doctest::Approx(yb[k]).epsilon(1e-15));
  }
}

TEST_CASE("bundled power system file matches the closed-form injections") {
  auto f = load_dag(std::string(COMPOFUN_DATA_DIR) + "/power_system.json");
  CHECK(f.d() == 3);
  CHECK(f.q() == 3);
  auto rep = validate(f, 512);
  CHECK(rep.pass);

  const double E[3] = {1.0, 1.1, 0.9};
  const double G[3][3] = {{0.2, 0.1, 0.15}, {0.1, 0.25, 0.05}, {0.15, 0.05, 0.3}};
  const double B[3][3] = {{0.0, 0.4, 0.3}, {0.4, 0.0, 0.5}, {0.3, 0.5, 0.0}};
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> del = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto y = f.evaluate(del);
    for (int i = 0; i < 3; ++i) {
      double p = E[i] * E[i] * G[i][i];
      for (int j = 0; j < 3; ++j) {
        if (j == i) continue;
        p += E[i] * E[j] *
             (G[i][j] * std::cos(del[i] - del[j]) + B[i][j] * std::sin(del[i] - del[j]));
      }
      CHECK(y[i] == doctest::Approx(p).epsilon(1e-12));
    }
  }

  auto ft = extract_features(f);
  CHECK(!ft.empty);
  CHECK(ft.r_max > 0);
  CHECK(std::isfinite(ft.Lambda));
}

TEST_CASE("feature serialization") {
  auto ft = extract_features(trig_triple());
  auto js = features_to_json(ft);
  CHECK(js.find("\"r_max\"") != std::string::npos);
  CHECK(js.find("\"p\": \"inf\"") != std::string::npos);
  CHECK(js.find("\"p12\"") != std::string::npos);

  auto csv = features_to_csv(ft);
  CHECK(csv.rfind("id,d_ij,m_ij,R_ij,L_ij,sobolev\n", 0) == 0);
  int rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 1 + ft.n_general);
}
