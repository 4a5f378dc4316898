#include "doctest.h"

#include "mfnet/experiment.hpp"

#include <cmath>
#include <sstream>

using namespace mfnet;
using nlohmann::json;

namespace {

ConfigError parse_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("config was accepted: " << j.dump());
  return ConfigError("", "");
}

}  // namespace

TEST_CASE("defaults resolve for every experiment") {
  for (const auto& name : experiment_names()) {
    CAPTURE(name);
    if (name == "autoencode-mnist") continue;  // default data paths are relative to the repo
    auto cfg = parse_config({{"experiment", name}});
    CHECK(cfg.experiment == name);
    const auto fields = experiment_fields(name);
    CHECK(cfg.values.size() == fields.size());
    CHECK(cfg.defaulted.size() == fields.size() - 1);
    std::ostringstream os;
    print_config(os, cfg);
    CHECK(os.str().find("(default)") != std::string::npos);
  }
}

TEST_CASE("every numeric field rejects out-of-range values by name") {
  for (const auto& name : experiment_names()) {
    for (const auto& f : experiment_fields(name)) {
      if (f.type != FieldType::Int && f.type != FieldType::Number && f.type != FieldType::IntList &&
          f.type != FieldType::NumberList) {
        continue;
      }
      CAPTURE(name);
      CAPTURE(f.name);
      const bool list = f.type == FieldType::IntList || f.type == FieldType::NumberList;
      const std::string item = list ? f.name + "[0]" : f.name;
      for (double bad : {-1e30, 1e30}) {
        if (bad > 0 && f.name.find("seed") != std::string::npos) continue;  // full u64 range
        json v = f.type == FieldType::Int || f.type == FieldType::IntList ? json(static_cast<long long>(std::copysign(9e18, bad)))
                                                                          : json(bad);
        json j = {{"experiment", name}, {f.name, list ? json::array({v}) : v}};
        CHECK(parse_error(j).field() == item);
      }
      json wrong = {{"experiment", name}, {f.name, "text"}};
      CHECK(parse_error(wrong).field() == f.name);
    }
  }
}

TEST_CASE("config validation messages") {
  CHECK(parse_error(json::array()).field() == "config");
  CHECK(parse_error({{"seed", 1}}).field() == "experiment");
  CHECK(parse_error({{"experiment", "other"}}).field() == "experiment");
  CHECK(parse_error({{"experiment", "wfm-demo"}, {"sizes_", 1}}).field() == "sizes_");
  CHECK(parse_error({{"experiment", "wfm-demo"}, {"sizes", {25, 10}}}).field() == "sizes");
  CHECK(parse_error({{"experiment", "wfm-demo"}, {"manifold", "torus"}}).field() == "manifold");
  CHECK(parse_error({{"experiment", "wfm-demo"}, {"manifold", "grassmann"}, {"dim", 3}, {"sub_dim", 3}})
            .field() == "sub_dim");
  CHECK(parse_error({{"experiment", "wfm-demo"}, {"manifold", "grassmann"}, {"radius", 1.6}}).field() ==
        "radius");
  CHECK(parse_error({{"experiment", "wfm-demo"}, {"dim", 2.5}}).field() == "dim");
  CHECK(parse_error({{"experiment", "equivariance-check"}, {"manifolds", {"spd", "spd"}}}).field() ==
        "manifolds[1]");
  CHECK(parse_error({{"experiment", "equivariance-check"}, {"manifolds", json::array()}}).field() ==
        "manifolds");

  // Kernel longer than the sequence.
  json layers = {{{"kernel", 30}, {"stride", 1}, {"in_channels", 1}, {"out_channels", 2}}};
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"layers", layers}}).field() == "layers");
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"frames", 4}}).field() == "layers");
  layers[0].erase("stride");
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"layers", layers}}).field() == "layers[0].stride");
  layers[0]["stride"] = 1;
  layers[0]["dilation"] = 1;
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"layers", layers}}).field() == "layers[0].dilation");
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"classes", {30, 30}}}).field() == "classes");
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"refit_scaling", 1}}).field() == "refit_scaling");
  CHECK(parse_error({{"experiment", "spd-seq-classify"}, {"per_class", 2}, {"test_fraction", 0.1}}).field() ==
        "test_fraction");

  CHECK(parse_error({{"experiment", "grassmann-pca"}, {"k", 10}}).field() == "k");
  CHECK(parse_error({{"experiment", "grassmann-pca"}, {"spectrum", {5, 4, 1, 1}}}).field() == "spectrum");
  CHECK(parse_error({{"experiment", "grassmann-pca"}, {"report_every", 10}}).field() == "report_every");
  CHECK(parse_error({{"experiment", "grassmann-pca"}, {"data_csv", "/no/such.csv"}}).field() == "data_csv");
  CHECK(parse_error({{"experiment", "autoencode-mnist"}, {"images", "/no/such"}}).field() == "images");
}

TEST_CASE("metrics rows") {
  std::ostringstream os;
  MetricsWriter w(os);
  w.write({"grassmann-pca", 18446744073709551615ull, 3, "oracle_distance", 0.1, 1.25});
  w.write({"x", 0, 0, "m", 1e-300, 0.0});
  CHECK(w.rows() == 2);
  CHECK(os.str() ==
        "experiment,seed,step,metric,value,wall_s\n"
        "grassmann-pca,18446744073709551615,3,oracle_distance,0.1,1.250000\n"
        "x,0,0,m,1e-300,0.000000\n");
}

TEST_CASE("runs are deterministic and equivariance rows are tiny") {
  auto cfg = parse_config({{"experiment", "equivariance-check"}, {"trials", 20}, {"network_sequences", 2}});
  auto run_once = [&] {
    std::ostringstream os;
    MetricsWriter w(os);
    run_experiment(cfg, 9, w);
    std::string out;
    std::istringstream in(os.str());
    for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  const std::string a = run_once();
  CHECK(a == run_once());
  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    CAPTURE(line);
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) < 1e-6);
    ++rows;
  }
  CHECK(rows == 5 + 2);
}
