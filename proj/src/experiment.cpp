#include "mfnet/experiment.hpp"

#include "mfnet/autoencoder.hpp"
#include "mfnet/data.hpp"
#include "mfnet/grassmann_reduce.hpp"
#include "mfnet/ifme.hpp"
#include "mfnet/linalg.hpp"
#include "mfnet/spd_tcn.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace mfnet {

using nlohmann::json;

// ---------------------------------------------------------------- metrics

std::string format_metrics_row(const MetricsRecord& r) {
  char value[64];
  auto res = std::to_chars(value, value + sizeof(value), r.value);
  std::string v(value, res.ptr);
  char wall[64];
  std::snprintf(wall, sizeof(wall), "%.6f", r.wall_s);
  return r.experiment + "," + std::to_string(r.seed) + "," + std::to_string(r.step) + "," +
         r.metric + "," + v + "," + wall;
}

MetricsWriter::MetricsWriter(std::ostream& out) : out_(out) {
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

void MetricsWriter::write(const MetricsRecord& r) {
  out_ << format_metrics_row(r) << '\n';
  out_.flush();
  ++rows_;
}

// ------------------------------------------------------------ field table

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxSeed = 18446744073709551615.0;

struct Field {
  std::string name;
  FieldType type;
  json def;
  double lo = -kInf;
  double hi = kInf;
  std::vector<std::string> choices;
  std::string help;
};

const std::vector<std::string> kManifoldNames = {"spd", "spd-le", "grassmann", "sphere",
                                                 "euclidean"};

json default_layers() {
  json out = json::array();
  for (const auto& l : default_spd_tcn_spec(2).layers) {
    out.push_back({{"kernel", l.kernel},
                   {"stride", l.stride},
                   {"in_channels", l.in_channels},
                   {"out_channels", l.out_channels}});
  }
  return out;
}

std::vector<Field> common_fields() {
  return {
      {"experiment", FieldType::String, json(), -kInf, kInf, experiment_names(),
       "experiment to run (required)"},
      {"seed", FieldType::Int, 0, 0, kMaxSeed, {}, "run seed; --seed overrides"},
      {"output", FieldType::String, "", -kInf, kInf, {}, "metrics CSV path; --out overrides"},
  };
}

std::vector<Field> specific_fields(const std::string& exp) {
  if (exp == "wfm-demo") {
    return {
        {"manifold", FieldType::String, "spd", -kInf, kInf, kManifoldNames, "point manifold"},
        {"dim", FieldType::Int, 3, 2, 64, {}, "SPD matrix size or ambient dimension"},
        {"sub_dim", FieldType::Int, 2, 1, 63, {}, "Grassmann subspace dimension, < dim"},
        {"radius", FieldType::Number, 0.5, 1e-6, 10.0, {}, "sampling ball radius"},
        {"sizes", FieldType::IntList, json::array({10, 25, 100, 400}), 1, 100000, {},
         "sample sizes N, strictly increasing"},
        {"seeds", FieldType::Int, 20, 1, 10000, {}, "seeds per sample size"},
        {"weights", FieldType::String, "uniform", -kInf, kInf, {"uniform", "random"},
         "uniform or U(0.05, 1) weights"},
        {"oracle_tol", FieldType::Number, 1e-10, 1e-15, 1e-3, {}, "oracle residual tolerance"},
        {"oracle_max_iter", FieldType::Int, 1000, 1, 1000000, {}, "oracle iteration cap"},
    };
  }
  if (exp == "equivariance-check") {
    return {
        {"manifolds", FieldType::StringList, kManifoldNames, -kInf, kInf, kManifoldNames,
         "manifolds to check"},
        {"trials", FieldType::Int, 100, 1, 1000000, {}, "random trials per manifold"},
        {"points", FieldType::Int, 10, 1, 10000, {}, "points per trial"},
        {"dim", FieldType::Int, 4, 2, 64, {}, "SPD matrix size or ambient dimension"},
        {"sub_dim", FieldType::Int, 2, 1, 63, {}, "Grassmann subspace dimension, < dim"},
        {"network_sequences", FieldType::Int, 6, 0, 10000, {},
         "sequences for the network invariance check on spd/spd-le (0 skips)"},
        {"network_dim", FieldType::Int, 4, 2, 64, {}, "SPD size for the network check"},
    };
  }
  if (exp == "spd-seq-classify") {
    return {
        {"classes", FieldType::NumberList, json::array({30.0, 60.0}), -360.0, 360.0, {},
         "orientation per class in degrees, distinct"},
        {"per_class", FieldType::Int, 25, 2, 100000, {}, "sequences per class"},
        {"frames", FieldType::Int, 20, 2, 100000, {}, "frames per sequence"},
        {"dim", FieldType::Int, 8, 2, 64, {}, "SPD frame size"},
        {"noise", FieldType::Number, 0.01, 0.0, 100.0, {}, "frame noise standard deviation"},
        {"data_seed", FieldType::Int, 0, 0, kMaxSeed, {}, "dataset seed (the run seed picks the split)"},
        {"test_fraction", FieldType::Number, 0.2, 0.01, 0.99, {}, "held-out share of each class"},
        {"manifold", FieldType::String, "spd", -kInf, kInf, {"spd", "spd-le"}, "SPD metric"},
        {"layers", FieldType::Layers, default_layers(), 1, 4096, {},
         "temporal layers {kernel, stride, in_channels, out_channels}"},
        {"penalty", FieldType::Number, 1.0, 0.0, 1e6, {}, "weight-sum penalty coefficient"},
        {"learning_rate", FieldType::Number, 0.05, 1e-12, 100.0, {}, "head step size"},
        {"theta_learning_rate", FieldType::Number, 0.01, 0.0, 100.0, {}, "wFM weight step size"},
        {"theta_grad_clip", FieldType::Number, 1.0, 0.0, 1e12, {}, "wFM gradient norm cap (0: off)"},
        {"momentum", FieldType::Number, 0.9, 0.0, 0.999, {}, "heavy-ball momentum"},
        {"epochs", FieldType::Int, 4, 0, 100000, {}, "training epochs"},
        {"batch_size", FieldType::Int, 8, 1, 100000, {}, "minibatch size"},
        {"fd_batch", FieldType::Int, 1, 0, 100000, {},
         "samples per finite-difference gradient (0: whole minibatch)"},
        {"fd_step", FieldType::Number, 1e-5, 1e-10, 1e-2, {}, "finite-difference step"},
        {"refit_scaling", FieldType::Bool, true, -kInf, kInf, {}, "refit feature standardization each epoch"},
    };
  }
  if (exp == "grassmann-pca") {
    return {
        {"dim", FieldType::Int, 10, 2, 10000, {}, "ambient dimension n"},
        {"k", FieldType::Int, 3, 1, 9999, {}, "subspace dimension, < dim"},
        {"spectrum", FieldType::NumberList, json::array({5.0, 4.0, 3.0, 1.0}), 1e-12, 1e12, {},
         "covariance eigenvalues, last entry repeated up to dim"},
        {"samples", FieldType::Int, 30000, 1, 100000000, {}, "streamed samples"},
        {"report_every", FieldType::Int, 1000, 1, 100000000, {}, "checkpoint spacing, > dim"},
        {"data_csv", FieldType::String, "", -kInf, kInf, {},
         "vectors from CSV instead of synthetic data (rows are centered)"},
    };
  }
  if (exp == "autoencode-mnist") {
    return {
        {"images", FieldType::String, "data/mnist-1k-images-idx3-ubyte", -kInf, kInf, {},
         "IDX image file"},
        {"labels", FieldType::String, "data/mnist-1k-labels-idx1-ubyte", -kInf, kInf, {},
         "IDX label file checked for pairing (empty: skip)"},
        {"train_count", FieldType::Int, 800, 1, 100000000, {}, "leading images used for training"},
        {"hidden", FieldType::Int, 25, 2, 100000, {}, "encoder width"},
        {"latent", FieldType::Int, 2, 1, 100000, {}, "latent dimension, < hidden"},
        {"batch_size", FieldType::Int, 32, 1, 100000, {}, "minibatch size, >= latent"},
        {"epochs", FieldType::Int, 200, 0, 100000, {}, "training epochs"},
        {"learning_rate", FieldType::Number, 1e-3, 1e-12, 10.0, {}, "Adam step size"},
        {"beta1", FieldType::Number, 0.9, 0.0, 0.9999, {}, "Adam first-moment decay"},
        {"beta2", FieldType::Number, 0.999, 0.0, 0.999999, {}, "Adam second-moment decay"},
        {"fd_step", FieldType::Number, 1e-5, 1e-10, 1e-2, {}, "finite-difference step for θ"},
        {"penalty", FieldType::Number, 1.0, 0.0, 1e6, {}, "weight-sum penalty coefficient"},
        {"init_decoder_bias", FieldType::Bool, true, -kInf, kInf, {}, "start decoder at the mean image"},
        {"bottlenecks", FieldType::StringList, json::array({"grassmann", "dense"}), -kInf, kInf,
         {"grassmann", "dense"}, "models to train"},
        {"pca", FieldType::Bool, true, -kInf, kInf, {}, "also report pixel-space PCA"},
    };
  }
  throw ConfigError("experiment", "unknown experiment '" + exp + "'");
}

std::vector<Field> all_fields(const std::string& exp) {
  auto out = common_fields();
  for (auto& f : specific_fields(exp)) out.push_back(std::move(f));
  return out;
}

std::string range_text(const Field& f) {
  std::ostringstream os;
  if (!f.choices.empty()) {
    os << "one of";
    for (const auto& c : f.choices) os << ' ' << c;
  } else if (f.lo > -kInf || f.hi < kInf) {
    os << "in [" << f.lo << ", " << f.hi << "]";
  }
  return os.str();
}

void check_number(const std::string& name, const json& v, bool integer, double lo, double hi) {
  if (integer ? !v.is_number_integer() : !v.is_number()) {
    throw ConfigError(name, integer ? "must be an integer" : "must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(name, "must be finite");
  if (x < lo || x > hi) {
    std::ostringstream os;
    os << "out of range: " << v.dump() << " not in [" << lo << ", " << hi << "]";
    throw ConfigError(name, os.str());
  }
}

void check_choice(const std::string& name, const json& v, const std::vector<std::string>& choices) {
  if (!v.is_string()) throw ConfigError(name, "must be a string");
  if (choices.empty()) return;
  const auto s = v.get<std::string>();
  if (std::find(choices.begin(), choices.end(), s) == choices.end()) {
    std::string msg = "invalid value '" + s + "', expected one of";
    for (const auto& c : choices) msg += " " + c;
    throw ConfigError(name, msg);
  }
}

void check_field(const Field& f, const json& v) {
  switch (f.type) {
    case FieldType::Int:
      check_number(f.name, v, true, f.lo, f.hi);
      return;
    case FieldType::Number:
      check_number(f.name, v, false, f.lo, f.hi);
      return;
    case FieldType::String:
      check_choice(f.name, v, f.choices);
      return;
    case FieldType::Bool:
      if (!v.is_boolean()) throw ConfigError(f.name, "must be true or false");
      return;
    case FieldType::IntList:
    case FieldType::NumberList:
    case FieldType::StringList:
    case FieldType::Layers:
      break;
  }
  if (!v.is_array() || v.empty()) throw ConfigError(f.name, "must be a non-empty array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = f.name + "[" + std::to_string(i) + "]";
    const json& e = v[i];
    if (f.type == FieldType::IntList) {
      check_number(item, e, true, f.lo, f.hi);
    } else if (f.type == FieldType::NumberList) {
      check_number(item, e, false, f.lo, f.hi);
    } else if (f.type == FieldType::StringList) {
      check_choice(item, e, f.choices);
      if (!seen.insert(e.get<std::string>()).second) throw ConfigError(item, "duplicate entry");
    } else {
      if (!e.is_object()) throw ConfigError(item, "must be an object");
      for (const char* key : {"kernel", "stride", "in_channels", "out_channels"}) {
        if (!e.contains(key)) throw ConfigError(item + "." + key, "missing");
        check_number(item + "." + key, e.at(key), true, f.lo, f.hi);
      }
      for (const auto& [key, _] : e.items()) {
        if (key != "kernel" && key != "stride" && key != "in_channels" && key != "out_channels") {
          throw ConfigError(item + "." + key, "unknown field");
        }
      }
    }
  }
}

int geti(const json& j, const char* key) { return j.at(key).get<int>(); }
double getd(const json& j, const char* key) { return j.at(key).get<double>(); }
std::string gets(const json& j, const char* key) { return j.at(key).get<std::string>(); }

std::vector<TemporalWfmSpec> layers_from(const json& arr) {
  std::vector<TemporalWfmSpec> out;
  for (const auto& e : arr) {
    out.push_back({geti(e, "kernel"), geti(e, "stride"), geti(e, "in_channels"),
                   geti(e, "out_channels")});
  }
  return out;
}

NetworkSpec network_from(const json& v) {
  NetworkSpec spec;
  spec.manifold = Manifold::from_name(gets(v, "manifold"));
  spec.layers = layers_from(v.at("layers"));
  spec.classes = static_cast<int>(v.at("classes").size());
  spec.penalty_coeff = getd(v, "penalty");
  return spec;
}

void require_file(const std::string& field, const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw ConfigError(field, "file not found: " + path);
  }
}

std::vector<double> padded_spectrum(const json& v) {
  auto spec = v.at("spectrum").get<std::vector<double>>();
  const auto n = static_cast<std::size_t>(geti(v, "dim"));
  while (spec.size() < n) spec.push_back(spec.back());
  return spec;
}

// Checks that involve more than one field.
void cross_check(const std::string& exp, const json& v) {
  if (exp == "wfm-demo" || exp == "equivariance-check") {
    const bool grass = exp == "wfm-demo"
                           ? gets(v, "manifold") == "grassmann"
                           : std::count(v.at("manifolds").begin(), v.at("manifolds").end(), "grassmann") > 0;
    if (grass && geti(v, "sub_dim") >= geti(v, "dim")) {
      throw ConfigError("sub_dim", "must be less than dim");
    }
  }
  if (exp == "wfm-demo") {
    const auto sizes = v.at("sizes").get<std::vector<long>>();
    for (std::size_t i = 1; i < sizes.size(); ++i) {
      if (sizes[i] <= sizes[i - 1]) throw ConfigError("sizes", "must be strictly increasing");
    }
    const Manifold m = Manifold::from_name(gets(v, "manifold"));
    if (getd(v, "radius") >= m.ball_radius_bound()) {
      std::ostringstream os;
      os << "must be below " << m.ball_radius_bound() << " on " << m.name();
      throw ConfigError("radius", os.str());
    }
  } else if (exp == "spd-seq-classify") {
    auto classes = v.at("classes").get<std::vector<double>>();
    std::sort(classes.begin(), classes.end());
    if (std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
      throw ConfigError("classes", "orientations must be distinct");
    }
    if (classes.size() < 2) throw ConfigError("classes", "need at least two classes");
    const int per_class = geti(v, "per_class");
    const int held = static_cast<int>(std::lround(getd(v, "test_fraction") * per_class));
    if (held < 1 || held >= per_class) {
      throw ConfigError("test_fraction", "leaves an empty train or test split for per_class " +
                                             std::to_string(per_class));
    }
    try {
      network_from(v).validate(geti(v, "frames"));
    } catch (const InvalidArgument& e) {
      throw ConfigError("layers", e.what());
    }
  } else if (exp == "grassmann-pca") {
    const int n = geti(v, "dim");
    const int k = geti(v, "k");
    if (k >= n) throw ConfigError("k", "must be less than dim");
    if (geti(v, "report_every") <= n) throw ConfigError("report_every", "must exceed dim");
    const std::string csv = gets(v, "data_csv");
    if (!csv.empty()) {
      require_file("data_csv", csv);
    } else {
      if (v.at("spectrum").size() > static_cast<std::size_t>(n)) {
        throw ConfigError("spectrum", "has more entries than dim");
      }
      const auto s = padded_spectrum(v);
      if (s[static_cast<std::size_t>(k) - 1] <= s[static_cast<std::size_t>(k)]) {
        throw ConfigError("spectrum", "entry k must exceed entry k+1 (no principal subspace otherwise)");
      }
      if (geti(v, "samples") < k) throw ConfigError("samples", "must be at least k");
    }
  } else if (exp == "autoencode-mnist") {
    require_file("images", gets(v, "images"));
    if (!gets(v, "labels").empty()) require_file("labels", gets(v, "labels"));
    if (geti(v, "latent") >= geti(v, "hidden")) throw ConfigError("latent", "must be less than hidden");
    if (geti(v, "batch_size") < geti(v, "latent")) {
      throw ConfigError("batch_size", "must be at least latent");
    }
    if (geti(v, "train_count") < geti(v, "batch_size")) {
      throw ConfigError("train_count", "must be at least batch_size");
    }
  }
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"wfm-demo", "equivariance-check", "spd-seq-classify", "grassmann-pca",
          "autoencode-mnist"};
}

std::vector<FieldDoc> experiment_fields(const std::string& experiment) {
  std::vector<FieldDoc> out;
  for (const auto& f : all_fields(experiment)) {
    std::string help = f.help;
    const std::string range = range_text(f);
    if (!range.empty() && f.type != FieldType::Layers) help += "; " + range;
    out.push_back({f.name, f.type, f.def, help});
  }
  return out;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  if (!j.contains("experiment")) throw ConfigError("experiment", "missing");
  const auto common = common_fields();
  check_field(common[0], j.at("experiment"));

  ExperimentConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  const auto fields = all_fields(cfg.experiment);
  for (const auto& [key, _] : j.items()) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == key; });
    if (it == fields.end()) throw ConfigError(key, "unknown field for " + cfg.experiment);
  }
  cfg.values = json::object();
  for (const auto& f : fields) {
    if (j.contains(f.name)) {
      check_field(f, j.at(f.name));
      cfg.values[f.name] = j.at(f.name);
    } else {
      cfg.values[f.name] = f.def;
      cfg.defaulted.push_back(f.name);
    }
  }
  cross_check(cfg.experiment, cfg.values);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void print_config(std::ostream& os, const ExperimentConfig& cfg) {
  os << "config:\n";
  for (const auto& f : all_fields(cfg.experiment)) {
    const bool dflt =
        std::find(cfg.defaulted.begin(), cfg.defaulted.end(), f.name) != cfg.defaulted.end();
    os << "  " << f.name << " = " << cfg.values.at(f.name).dump() << (dflt ? "  (default)" : "")
       << '\n';
  }
}

// ----------------------------------------------------------------- runners

namespace {

class Run {
 public:
  Run(std::string experiment, std::uint64_t seed, MetricsWriter& out)
      : experiment_(std::move(experiment)), seed_(seed), out_(out),
        t0_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }
  void row(const std::string& variant, long step, const std::string& metric, double value,
           std::optional<double> wall = std::nullopt) {
    const std::string exp = variant.empty() ? experiment_ : experiment_ + ":" + variant;
    out_.write({exp, seed_, step, metric, value, wall ? *wall : elapsed()});
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::string experiment_;
  std::uint64_t seed_;
  MetricsWriter& out_;
  std::chrono::steady_clock::time_point t0_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

ManifoldPoint canonical_center(const Manifold& m, int dim, int sub_dim) {
  switch (m.kind()) {
    case ManifoldKind::Spd:
      return SpdPoint(Matrix::Identity(dim, dim));
    case ManifoldKind::Grassmann:
      return GrassmannPoint(Matrix::Identity(dim, sub_dim));
    case ManifoldKind::Sphere:
      return SpherePoint(Vector::Unit(dim, 0));
    case ManifoldKind::Euclidean:
      break;
  }
  return EuclideanPoint(Vector::Zero(dim));
}

ManifoldPoint random_center(const Manifold& m, int dim, int sub_dim, std::mt19937_64& rng) {
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      Matrix a = linalg::gaussian_matrix(dim, dim, rng);
      return SpdPoint(linalg::symmetrize(a * a.transpose() / dim + Matrix::Identity(dim, dim)));
    }
    case ManifoldKind::Grassmann:
      return GrassmannPoint(linalg::random_orthogonal(dim, rng).leftCols(sub_dim));
    case ManifoldKind::Sphere: {
      Vector v = linalg::gaussian_matrix(dim, 1, rng);
      return SpherePoint(v / v.norm());
    }
    case ManifoldKind::Euclidean:
      break;
  }
  return EuclideanPoint(linalg::gaussian_matrix(dim, 1, rng));
}

// Sampling radii for the equivariance check; pairwise distances stay inside
// the log domain of every manifold.
double check_radius(const Manifold& m) {
  switch (m.kind()) {
    case ManifoldKind::Spd:
      return 1.5;
    case ManifoldKind::Grassmann:
      return 0.7;
    case ManifoldKind::Sphere:
      return 1.0;
    case ManifoldKind::Euclidean:
      break;
  }
  return 3.0;
}

std::vector<double> uniform_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

void run_wfm_demo(const json& v, Run& run) {
  const Manifold m = Manifold::from_name(gets(v, "manifold"));
  const BallSpec ball{canonical_center(m, geti(v, "dim"), geti(v, "sub_dim")), getd(v, "radius")};
  validate_ball(m, ball);
  PointSampler sampler = [m, ball](std::size_t n, std::uint64_t s) {
    std::mt19937_64 rng(s);
    std::vector<ManifoldPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(random_point_in_ball(m, ball, rng));
    return pts;
  };
  const bool random = gets(v, "weights") == "random";
  WeightFn weights = [random](std::size_t n, std::uint64_t s) {
    if (!random) return WeightVector::uniform(n);
    std::mt19937_64 rng(mix(s, 1));
    return WeightVector(uniform_weights(n, rng));
  };
  OracleOptions opts;
  opts.tol = getd(v, "oracle_tol");
  opts.max_iter = geti(v, "oracle_max_iter");
  const auto sizes = v.at("sizes").get<std::vector<std::size_t>>();
  const auto curve = consistency_curve(m, sampler, weights, sizes, geti(v, "seeds"), run.seed(), opts);
  for (const auto& pt : curve) {
    run.row(m.name(), static_cast<long>(pt.n), "median_oracle_distance", pt.error);
  }
}

void run_equivariance(const json& v, Run& run) {
  const int trials = geti(v, "trials");
  const auto points = static_cast<std::size_t>(geti(v, "points"));
  const auto names = v.at("manifolds").get<std::vector<std::string>>();
  for (const auto& name : names) {
    const Manifold m = Manifold::from_name(name);
    const auto idx = static_cast<std::uint64_t>(
        std::find(kManifoldNames.begin(), kManifoldNames.end(), name) - kManifoldNames.begin());
    std::mt19937_64 rng(mix(run.seed(), idx));
    const ManifoldPoint center = random_center(m, geti(v, "dim"), geti(v, "sub_dim"), rng);
    const BallSpec ball{center, check_radius(m)};
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      std::vector<ManifoldPoint> pts;
      for (std::size_t i = 0; i < points; ++i) pts.push_back(random_point_in_ball(m, ball, rng));
      const auto w = uniform_weights(points, rng);
      const Isometry g = random_isometry(m, pts[0], rng);
      std::vector<ManifoldPoint> moved;
      for (const auto& p : pts) moved.push_back(act(m, g, p));
      const double err = distance(m, ifme_wfm(m, moved, w), act(m, g, ifme_wfm(m, pts, w)));
      worst = std::max(worst, err);
    }
    run.row(name, trials, "max_equiv_error", worst);
  }

  // Whole temporal network: class probabilities under a group action on
  // every input frame.
  const int sequences = geti(v, "network_sequences");
  if (sequences == 0) return;
  for (const auto& name : names) {
    if (name != "spd" && name != "spd-le") continue;
    NetworkSpec spec = default_spd_tcn_spec(2);
    spec.manifold = Manifold::from_name(name);
    const double orient[] = {30.0, 60.0};
    const int frames = 20;
    auto data = synth_spd_sequences(orient, (sequences + 1) / 2, frames, geti(v, "network_dim"), 0.01,
                                    mix(run.seed(), 100));
    data.resize(static_cast<std::size_t>(sequences));
    std::mt19937_64 rng(mix(run.seed(), 101));
    WfmNetwork net = WfmNetwork::init(spec, frames, rng, 0.5, 1.0);
    net.fit_feature_scaling(data);
    double worst = 0.0;
    for (const auto& s : data) {
      const Isometry g = random_isometry(spec.manifold, s.frames[0], rng);
      std::vector<ManifoldPoint> moved;
      for (const auto& f : s.frames) moved.push_back(act(spec.manifold, g, f));
      worst = std::max(worst, (net.predict(s.frames) - net.predict(moved)).cwiseAbs().maxCoeff());
    }
    run.row("network-" + name, sequences, "max_invariance_error", worst);
  }
}

void run_classify(const json& v, Run& run) {
  const auto classes = v.at("classes").get<std::vector<double>>();
  const int per_class = geti(v, "per_class");
  const int frames = geti(v, "frames");
  auto data = synth_spd_sequences(classes, per_class, frames, geti(v, "dim"), getd(v, "noise"),
                                  v.at("data_seed").get<std::uint64_t>());

  // Stratified split chosen by the run seed.
  const int held = static_cast<int>(std::lround(getd(v, "test_fraction") * per_class));
  std::mt19937_64 rng(mix(run.seed(), 200));
  std::vector<std::vector<std::size_t>> by_class(classes.size());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data[i].label)].push_back(i);
  std::vector<char> is_test(data.size(), 0);
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < held; ++i) is_test[idx[static_cast<std::size_t>(i)]] = 1;
  }
  std::vector<LabeledSequence> train, test;
  for (std::size_t i = 0; i < data.size(); ++i) (is_test[i] ? test : train).push_back(std::move(data[i]));

  const NetworkSpec spec = network_from(v);
  OptimizerConfig opt;
  opt.learning_rate = getd(v, "learning_rate");
  opt.theta_learning_rate = getd(v, "theta_learning_rate");
  opt.theta_grad_clip = getd(v, "theta_grad_clip");
  opt.momentum = getd(v, "momentum");
  opt.epochs = geti(v, "epochs");
  opt.batch_size = geti(v, "batch_size");
  opt.fd_batch = geti(v, "fd_batch");
  opt.fd_step = getd(v, "fd_step");
  opt.refit_scaling = v.at("refit_scaling").get<bool>();

  const double start = run.elapsed();
  const TrainResult res = train_classifier(spec, train, test, opt, run.seed());
  for (const auto& e : res.history) {
    const double wall = start + e.wall_seconds;
    run.row("", e.epoch, "loss", e.loss, wall);
    run.row("", e.epoch, "train_accuracy", e.train_accuracy, wall);
    run.row("", e.epoch, "test_accuracy", e.test_accuracy, wall);
    run.row("", e.epoch, "max_weight_sum_deviation", e.max_weight_sum_deviation, wall);
  }
  run.row("", opt.epochs, "parameter_count", static_cast<double>(res.network.parameter_count()));
}

void run_grassmann_pca(const json& v, Run& run) {
  const int k = geti(v, "k");
  const std::string csv = gets(v, "data_csv");
  Matrix x;
  std::optional<GrassmannPoint> truth;
  if (!csv.empty()) {
    x = read_csv_vectors(std::filesystem::path(csv));
    if (x.cols() != geti(v, "dim")) {
      throw ConfigError("dim", "is " + std::to_string(geti(v, "dim")) + " but " + csv + " has " +
                                   std::to_string(x.cols()) + " columns");
    }
    if (x.rows() < k) throw ConfigError("data_csv", "has fewer rows than k");
    x = x.rowwise() - x.colwise().mean();
  } else {
    std::mt19937_64 rng(mix(run.seed(), 300));
    const Matrix basis = linalg::random_orthogonal(geti(v, "dim"), rng);
    x = gaussian_samples(basis, padded_spectrum(v), geti(v, "samples"), rng);
    truth = GrassmannPoint(basis.leftCols(k));
  }

  const auto g = Manifold::grassmann();
  const long total = static_cast<long>(x.rows());
  const long every = geti(v, "report_every");
  StreamingSubspace stream(static_cast<int>(x.cols()), k);
  long done = 0;
  while (done < total) {
    const long next = std::min(total, (done / every + 1) * every);
    stream.push_rows(x.middleRows(done, next - done));
    done = next;
    if (!stream.ready()) continue;
    const auto est = stream.estimate();
    run.row("", done, "oracle_distance", distance(g, est.point, pca_oracle(x.topRows(done), k)));
    if (truth) run.row("", done, "truth_distance", distance(g, est.point, *truth));
  }
  if (!stream.ready()) throw NumericalError("no full-rank block in " + std::to_string(total) + " samples");
  const auto est = stream.estimate();
  run.row("", total, "blocks_used", static_cast<double>(est.blocks_used));
  run.row("", total, "blocks_skipped", static_cast<double>(est.blocks_skipped));
}

void run_autoencoder(const json& v, Run& run) {
  const ImageSet images = load_idx_images(gets(v, "images"));
  if (!gets(v, "labels").empty()) check_pairing(images, load_idx_labels(gets(v, "labels")));
  const int n_train = geti(v, "train_count");
  if (n_train >= images.count()) {
    throw ConfigError("train_count", "must be less than the " + std::to_string(images.count()) +
                                         " images in " + gets(v, "images"));
  }
  const Matrix train = images.pixels.topRows(n_train);
  const Matrix val = images.pixels.bottomRows(images.count() - n_train);

  AutoencoderConfig cfg;
  cfg.epochs = geti(v, "epochs");
  cfg.learning_rate = getd(v, "learning_rate");
  cfg.beta1 = getd(v, "beta1");
  cfg.beta2 = getd(v, "beta2");
  cfg.fd_step = getd(v, "fd_step");
  cfg.init_decoder_bias = v.at("init_decoder_bias").get<bool>();

  for (const auto& name : v.at("bottlenecks").get<std::vector<std::string>>()) {
    const Bottleneck b = name == "grassmann" ? Bottleneck::Grassmann : Bottleneck::Dense;
    // Same generator state for every model, so encoder and decoder start equal.
    std::mt19937_64 rng(mix(run.seed(), 400));
    AutoencoderSpec spec = make_autoencoder(static_cast<int>(train.cols()), geti(v, "hidden"),
                                            geti(v, "latent"), b, geti(v, "batch_size"), rng);
    spec.penalty_coeff = getd(v, "penalty");
    const double start = run.elapsed();
    const auto res = autoencoder_train(spec, train, val, cfg, run.seed());
    for (const auto& e : res.history) {
      const double wall = start + e.wall_seconds;
      run.row(name, e.epoch, "train_loss", e.train_loss, wall);
      run.row(name, e.epoch, "validation_error", e.validation_error, wall);
      if (b == Bottleneck::Grassmann) {
        run.row(name, e.epoch, "weight_sum_deviation", e.weight_sum_deviation, wall);
      }
    }
    run.row(name, cfg.epochs, "parameter_count", static_cast<double>(res.spec.parameter_count()));
  }
  if (v.at("pca").get<bool>()) {
    run.row("pca", 0, "validation_error", pca_reconstruction_error(train, val, geti(v, "latent")));
  }
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, MetricsWriter& out) {
  Run run(cfg.experiment, seed, out);
  const json& v = cfg.values;
  if (cfg.experiment == "wfm-demo") {
    run_wfm_demo(v, run);
  } else if (cfg.experiment == "equivariance-check") {
    run_equivariance(v, run);
  } else if (cfg.experiment == "spd-seq-classify") {
    run_classify(v, run);
  } else if (cfg.experiment == "grassmann-pca") {
    run_grassmann_pca(v, run);
  } else if (cfg.experiment == "autoencode-mnist") {
    run_autoencoder(v, run);
  } else {
    throw ConfigError("experiment", "unknown experiment '" + cfg.experiment + "'");
  }
}

}  // namespace mfnet
