#include "sdmh/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

#include "sdmh/diagnostics.hpp"
#include "sdmh/errors.hpp"
#include "sdmh/log.hpp"

namespace sdmh {

namespace fs = std::filesystem;
using Index = Eigen::Index;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  void number(const char* key, double& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void count(const char* key, std::size_t& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(path(key) + ": expected a nonnegative integer");
      out = v->get<std::size_t>();
    }
  }
  void seed(const char* key, std::uint64_t& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(path(key) + ": expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void flag(const char* key, bool& out) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void text(const char* key, std::string& out) {
    if (const Json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  const Json* object(const char* key) {
    const Json* v = take(key);
    if (v && !v->is_object()) throw ConfigError(path(key) + ": expected an object");
    return v;
  }
  const Json* array(const char* key) {
    const Json* v = take(key);
    if (v && !v->is_array()) throw ConfigError(path(key) + ": expected an array");
    return v;
  }
  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path q(p);
  if (q.is_relative()) q = base / q;
  return fs::absolute(q).lexically_normal();
}

// Resolved configs carry their kind; a run config may repeat it but not contradict it.
void expect_kind(Fields& f, const std::string& kind) {
  std::string given = kind;
  f.text("kind", given);
  if (given != kind) throw ConfigError("config.kind: expected '" + kind + "', got '" + given + "'");
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

void read_linear_synth(Fields& f, LinearSynthConfig& c) {
  f.count("n", c.n);
  f.count("predictors", c.predictors);
  f.count("n_active", c.n_active);
  f.number("rho", c.rho);
  f.number("sigma2", c.sigma2);
  f.seed("seed", c.seed);
  f.finish();
  c.validate();
}

Json linear_synth_json(const LinearSynthConfig& c) {
  return Json{{"n", c.n},         {"predictors", c.predictors}, {"n_active", c.n_active},
              {"rho", c.rho},     {"sigma2", c.sigma2},         {"seed", c.seed}};
}

void read_dm_synth(Fields& f, DMSynthConfig& c) {
  f.count("n", c.n);
  f.count("predictors", c.predictors);
  f.count("categories", c.categories);
  f.number("rho", c.rho);
  if (const Json* a = f.array("associations")) {
    c.associations.clear();
    for (std::size_t i = 0; i < a->size(); ++i) {
      Fields g((*a)[i], f.path("associations") + "[" + std::to_string(i) + "]");
      DMAssociation as;
      g.count("predictor", as.predictor);
      g.count("category", as.category);
      g.number("coefficient", as.coefficient);
      g.finish();
      c.associations.push_back(as);
    }
  }
  f.count("n_random", c.n_random);
  f.number("magnitude", c.magnitude);
  f.number("intercept", c.intercept);
  f.number("depth_base", c.depth_base);
  f.number("depth_poisson_mean", c.depth_poisson_mean);
  f.seed("seed", c.seed);
  f.finish();
  c.validate();
}

Json dm_synth_json(const DMSynthConfig& c) {
  Json assoc = Json::array();
  for (const auto& a : c.associations) {
    assoc.push_back({{"predictor", a.predictor}, {"category", a.category}, {"coefficient", a.coefficient}});
  }
  return Json{{"n", c.n},
              {"predictors", c.predictors},
              {"categories", c.categories},
              {"rho", c.rho},
              {"associations", assoc},
              {"n_random", c.n_random},
              {"magnitude", c.magnitude},
              {"intercept", c.intercept},
              {"depth_base", c.depth_base},
              {"depth_poisson_mean", c.depth_poisson_mean},
              {"seed", c.seed}};
}

void read_adapt(Fields& f, AdaptConfig& a, bool with_t_end, bool& t_end_given) {
  f.flag("enabled", a.enabled);
  f.count("window", a.window);
  f.number("c", a.c);
  f.number("delta", a.delta);
  f.number("lambda_min", a.lambda_min);
  f.number("lambda_max", a.lambda_max);
  f.count("t_start", a.t_start);
  if (with_t_end) {
    t_end_given = f.has("t_end");
    f.count("t_end", a.t_end);
  }
  f.number("initial_lambda", a.initial_lambda);
  f.finish();
}

Json adapt_json(const AdaptConfig& a, bool with_t_end) {
  Json j{{"enabled", a.enabled},       {"window", a.window},         {"c", a.c},
         {"delta", a.delta},           {"lambda_min", a.lambda_min}, {"lambda_max", a.lambda_max},
         {"t_start", a.t_start}};
  if (with_t_end) j["t_end"] = a.t_end;
  j["initial_lambda"] = a.initial_lambda;
  return j;
}

void read_diagnostics(Fields& f, DiagnosticsConfig& d) {
  f.count("acf_max_lag", d.acf_max_lag);
  f.number("fdr_alpha", d.fdr_alpha);
  f.number("pip_cutoff", d.pip_cutoff);
  f.finish();
  if (!(d.fdr_alpha > 0.0 && d.fdr_alpha < 1.0)) throw ConfigError("fdr_alpha must lie in (0, 1)");
}

Json diagnostics_json(const DiagnosticsConfig& d) {
  return Json{{"acf_max_lag", d.acf_max_lag}, {"fdr_alpha", d.fdr_alpha}, {"pip_cutoff", d.pip_cutoff}};
}

MatrixXd standardized(MatrixXd x) {
  standardize_columns(x);
  return x;
}

std::string index_header(const char* prefix, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ',';
    s += prefix + std::to_string(i);
  }
  return s;
}

std::vector<std::string> default_names(const char* prefix, std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

void write_matrix(const fs::path& path, const std::vector<std::string>& header, const MatrixXd& m) {
  write_numeric_csv(path, header, m);
}

Json hamming_json(const HammingHistogram& h) {
  return Json{{"0", h[0]}, {"1", h[1]}, {"2", h[2]}, {"3+", h[3]}};
}

void write_hamming(const fs::path& path, const HammingHistogram& h) {
  std::string s = "dH,count\n";
  const char* labels[4] = {"0", "1", "2", "3+"};
  for (int i = 0; i < 4; ++i) s += std::string(labels[i]) + "," + std::to_string(h[static_cast<std::size_t>(i)]) + "\n";
  write_text_file(path, s);
}

void write_acf(const fs::path& path, const ACF& acf) {
  std::string s = "lag,acf\n";
  for (std::size_t k = 0; k < acf.values.size(); ++k) {
    s += std::to_string(k) + "," + format_double(acf.values[k]) + "\n";
  }
  write_text_file(path, s);
}

ACF safe_acf(const std::vector<double>& series, std::size_t max_lag) {
  if (series.size() < 2) return ACF{{}, true};
  return autocorrelation(series, std::min(max_lag, series.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace

Json load_json_file(const fs::path& path) {
  const std::string text = [&] {
    try {
      return read_text_file(path);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    throw ConfigError(path.string() + ": " + msg);
  }
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError("output path '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw ConfigError("output directory '" + dir.string() + "' is not empty (use --force)");
    }
  } else {
    fs::create_directories(dir);
  }
}

GenConfig GenConfig::from_json(const Json& j) {
  GenConfig g;
  Fields f(j, "config");
  std::string kind = "linear";
  f.text("kind", kind);
  if (kind == "linear") {
    g.kind = Kind::Linear;
  } else if (kind == "dm") {
    g.kind = Kind::DM;
  } else {
    throw ConfigError("config.kind: expected 'linear' or 'dm'");
  }
  if (const Json* l = f.object("linear")) {
    Fields h(*l, "config.linear");
    read_linear_synth(h, g.linear);
  }
  if (const Json* d = f.object("dm")) {
    Fields h(*d, "config.dm");
    read_dm_synth(h, g.dm);
  }
  f.finish();
  return g;
}

Json GenConfig::to_json() const {
  Json j{{"kind", kind == Kind::Linear ? "linear" : "dm"}};
  if (kind == Kind::Linear) {
    j["linear"] = linear_synth_json(linear);
  } else {
    j["dm"] = dm_synth_json(dm);
  }
  return j;
}

LinearRunConfig LinearRunConfig::from_json(const Json& j, const fs::path& base) {
  LinearRunConfig c;
  Fields f(j, "config");
  expect_kind(f, "linear");
  std::uint64_t seed = c.sampler.seed;
  f.seed("seed", seed);
  c.sampler.seed = seed;
  const Json* data = f.object("data");
  const Json* synth = f.object("synth");
  if (data && synth) throw ConfigError("config: give either 'data' or 'synth', not both");
  if (data) {
    Fields d(*data, "config.data");
    std::string x, y;
    d.text("x", x);
    d.text("y", y);
    d.flag("standardize", c.standardize);
    d.finish();
    if (x.empty() || y.empty()) throw ConfigError("config.data: both 'x' and 'y' are required");
    c.x_path = resolve(base, x);
    c.y_path = resolve(base, y);
    require_file(c.x_path, "covariate file");
    require_file(c.y_path, "response file");
  } else {
    LinearSynthConfig s;
    if (synth) {
      Fields d(*synth, "config.synth");
      read_linear_synth(d, s);
    }
    c.synth = s;
  }
  if (const Json* p = f.object("prior")) {
    Fields d(*p, "config.prior");
    d.number("precision", c.prior_precision);
    d.number("a0", c.a0);
    d.number("b0", c.b0);
    d.number("a_pi", c.model_prior.a_pi);
    d.number("b_pi", c.model_prior.b_pi);
    d.finish();
  }
  bool t_end_given = false;
  if (const Json* s = f.object("sampler")) {
    Fields d(*s, "config.sampler");
    d.count("iterations", c.sampler.iterations);
    d.count("burn_in", c.sampler.burn_in);
    std::string kind(to_string(c.sampler.kind));
    d.text("dissimilarity", kind);
    try {
      c.sampler.kind = parse_dissimilarity(kind);
    } catch (const std::exception&) {
      throw ConfigError("config.sampler.dissimilarity: expected 'F' or 'LR'");
    }
    d.flag("swap", c.sampler.swap_enabled);
    d.number("lambda_move", c.sampler.lambda_move);
    d.number("graph_threshold", c.graph_threshold);
    std::string graph;
    d.text("graph", graph);
    c.graph_path = resolve(base, graph);
    if (!c.graph_path.empty()) require_file(c.graph_path, "graph file");
    d.count("replicates", c.replicates);
    d.finish();
  }
  if (const Json* a = f.object("adapt")) {
    Fields d(*a, "config.adapt");
    read_adapt(d, c.sampler.adapt, true, t_end_given);
  }
  if (!t_end_given) c.sampler.adapt.t_end = c.sampler.iterations * 3 / 4;
  if (const Json* s = f.object("sweep")) {
    Fields d(*s, "config.sweep");
    d.count("iterations", c.sweep_iterations);
    d.count("burn_in", c.sweep_burn_in);
    d.finish();
  }
  if (const Json* s = f.object("diagnostics")) {
    Fields d(*s, "config.diagnostics");
    read_diagnostics(d, c.diagnostics);
  }
  f.finish();
  if (c.replicates == 0) throw ConfigError("config.sampler.replicates must be positive");
  if (c.sweep_burn_in >= c.sweep_iterations) throw ConfigError("config.sweep: burn_in must be below iterations");
  if (!(c.prior_precision > 0.0 && c.a0 > 0.0 && c.b0 > 0.0)) {
    throw ConfigError("config.prior: precision, a0 and b0 must be positive");
  }
  if (!(c.model_prior.a_pi > 0.0 && c.model_prior.b_pi > 0.0)) {
    throw ConfigError("config.prior: a_pi and b_pi must be positive");
  }
  return c;
}

Json LinearRunConfig::to_json() const {
  Json j{{"kind", "linear"}, {"seed", sampler.seed}};
  if (synth) {
    j["synth"] = linear_synth_json(*synth);
  } else {
    j["data"] = {{"x", x_path.string()}, {"y", y_path.string()}, {"standardize", standardize}};
  }
  j["prior"] = {{"precision", prior_precision}, {"a0", a0}, {"b0", b0},
                {"a_pi", model_prior.a_pi},     {"b_pi", model_prior.b_pi}};
  j["sampler"] = {{"iterations", sampler.iterations},
                  {"burn_in", sampler.burn_in},
                  {"dissimilarity", std::string(to_string(sampler.kind))},
                  {"swap", sampler.swap_enabled},
                  {"lambda_move", sampler.lambda_move},
                  {"graph_threshold", graph_threshold},
                  {"graph", graph_path.string()},
                  {"replicates", replicates}};
  j["adapt"] = adapt_json(sampler.adapt, true);
  j["sweep"] = {{"iterations", sweep_iterations}, {"burn_in", sweep_burn_in}};
  j["diagnostics"] = diagnostics_json(diagnostics);
  return j;
}

DMRunConfig DMRunConfig::from_json(const Json& j, const fs::path& base) {
  DMRunConfig c;
  Fields f(j, "config");
  expect_kind(f, "dm");
  f.seed("seed", c.sampler.seed);
  const Json* data = f.object("data");
  const Json* synth = f.object("synth");
  if (data && synth) throw ConfigError("config: give either 'data' or 'synth', not both");
  if (data) {
    Fields d(*data, "config.data");
    std::string y, x;
    d.text("counts", y);
    d.text("x", x);
    d.flag("standardize", c.standardize);
    d.finish();
    if (x.empty() || y.empty()) throw ConfigError("config.data: both 'counts' and 'x' are required");
    c.counts_path = resolve(base, y);
    c.x_path = resolve(base, x);
    require_file(c.counts_path, "count file");
    require_file(c.x_path, "covariate file");
  } else {
    DMSynthConfig s;
    if (synth) {
      Fields d(*synth, "config.synth");
      read_dm_synth(d, s);
    }
    c.synth = s;
  }
  if (const Json* p = f.object("priors")) {
    Fields d(*p, "config.priors");
    d.number("s2", c.s2);
    d.number("r2", c.r2);
    d.number("a", c.sampler.priors.a);
    d.number("b", c.sampler.priors.b);
    d.number("c", c.sampler.priors.c);
    d.finish();
  }
  if (const Json* s = f.object("sampler")) {
    Fields d(*s, "config.sampler");
    d.count("iterations", c.sampler.iterations);
    d.count("burn_in", c.sampler.burn_in);
    d.number("beta0_sd", c.sampler.beta0_sd);
    d.number("beta0_target", c.sampler.beta0_adapt.target);
    d.count("beta0_window", c.sampler.beta0_adapt.window);
    d.flag("beta0_adapt", c.sampler.beta0_adapt.enabled);
    d.flag("local_move", c.sampler.local_move);
    d.number("lambda_move", c.sampler.lambda_move);
    d.number("graph_threshold", c.sampler.graph_threshold);
    std::string graph;
    d.text("graph", graph);
    c.graph_path = resolve(base, graph);
    if (!c.graph_path.empty()) require_file(c.graph_path, "graph file");
    d.count("drift_check_every", c.sampler.drift_check_every);
    d.count("checkpoint_every", c.sampler.checkpoint_every);
    d.count("warm_start_capacity", c.sampler.warm_start_capacity);
    d.finish();
  }
  if (const Json* a = f.object("adapt")) {
    Fields d(*a, "config.adapt");
    bool unused = false;
    read_adapt(d, c.sampler.adapt, false, unused);
  }
  if (const Json* p = f.object("pmle")) {
    Fields d(*p, "config.pmle");
    d.number("grad_tol", c.sampler.pmle.lbfgs.grad_tol);
    d.count("max_iterations", c.sampler.pmle.lbfgs.max_iterations);
    d.count("memory", c.sampler.pmle.lbfgs.memory);
    d.flag("exact_initial_hessian", c.sampler.pmle.exact_initial_hessian);
    d.finish();
  }
  if (const Json* s = f.object("diagnostics")) {
    Fields d(*s, "config.diagnostics");
    read_diagnostics(d, c.diagnostics);
  }
  f.finish();
  if (!(c.s2 > 0.0 && c.r2 > 0.0)) throw ConfigError("config.priors: s2 and r2 must be positive");
  if (!(c.sampler.pmle.lbfgs.grad_tol > 0.0)) throw ConfigError("config.pmle.grad_tol must be positive");
  c.sampler.adapt.t_end = c.sampler.burn_in;
  c.sampler.beta0_adapt.t_end = c.sampler.burn_in;
  return c;
}

Json DMRunConfig::to_json() const {
  Json j{{"kind", "dm"}, {"seed", sampler.seed}};
  if (synth) {
    j["synth"] = dm_synth_json(*synth);
  } else {
    j["data"] = {{"counts", counts_path.string()}, {"x", x_path.string()}, {"standardize", standardize}};
  }
  j["priors"] = {{"s2", s2}, {"r2", r2}, {"a", sampler.priors.a}, {"b", sampler.priors.b}, {"c", sampler.priors.c}};
  j["sampler"] = {{"iterations", sampler.iterations},
                  {"burn_in", sampler.burn_in},
                  {"beta0_sd", sampler.beta0_sd},
                  {"beta0_target", sampler.beta0_adapt.target},
                  {"beta0_window", sampler.beta0_adapt.window},
                  {"beta0_adapt", sampler.beta0_adapt.enabled},
                  {"local_move", sampler.local_move},
                  {"lambda_move", sampler.lambda_move},
                  {"graph_threshold", sampler.graph_threshold},
                  {"graph", graph_path.string()},
                  {"drift_check_every", sampler.drift_check_every},
                  {"checkpoint_every", sampler.checkpoint_every},
                  {"warm_start_capacity", sampler.warm_start_capacity}};
  j["adapt"] = adapt_json(sampler.adapt, false);
  j["pmle"] = {{"grad_tol", sampler.pmle.lbfgs.grad_tol},
               {"max_iterations", sampler.pmle.lbfgs.max_iterations},
               {"memory", sampler.pmle.lbfgs.memory},
               {"exact_initial_hessian", sampler.pmle.exact_initial_hessian}};
  j["diagnostics"] = diagnostics_json(diagnostics);
  return j;
}

void write_generated(const GenConfig& config, const fs::path& dir) {
  Json truth;
  if (config.kind == GenConfig::Kind::Linear) {
    const LinearSynth s = gen_linear(config.linear);
    write_matrix(dir / "X.csv", default_names("x", config.linear.predictors), s.x);
    write_matrix(dir / "y.csv", {"y"}, s.y);
    Json active = Json::array();
    Json coef = Json::array();
    for (std::size_t p : s.truth.active_indices()) {
      active.push_back(p);
      coef.push_back(s.beta(static_cast<Index>(p)));
    }
    truth = {{"kind", "linear"}, {"intercept", s.intercept}, {"active", active}, {"coefficients", coef}};
  } else {
    const DMSynth s = gen_dm(config.dm);
    write_matrix(dir / "Y.csv", default_names("c", config.dm.categories), s.data.counts);
    write_matrix(dir / "X.csv", default_names("x", config.dm.predictors), s.data.x);
    Json assoc = Json::array();
    for (const auto& a : s.associations) {
      assoc.push_back({{"predictor", a.predictor}, {"category", a.category}, {"coefficient", a.coefficient}});
    }
    Json b0 = Json::array();
    for (Index j = 0; j < s.beta0.size(); ++j) b0.push_back(s.beta0(j));
    truth = {{"kind", "dm"}, {"intercepts", b0}, {"associations", assoc}};
  }
  write_json(dir / "truth.json", truth);
  write_json(dir / "config.resolved", config.to_json());
}

LinearDataset load_linear_data(const LinearRunConfig& c) {
  LinearDataset d;
  if (c.synth) {
    LinearSynth s = gen_linear(*c.synth);
    d.x = std::move(s.x);
    d.y = std::move(s.y);
    d.truth = s.truth;
    d.names = default_names("x", c.synth->predictors);
    return d;
  }
  NumericCsv x = read_numeric_csv(c.x_path);
  NumericCsv y = read_numeric_csv(c.y_path);
  if (y.values.cols() != 1) throw DataError(c.y_path.string() + ": expected exactly one column");
  if (x.values.rows() != y.values.rows()) {
    throw DataError("covariates have " + std::to_string(x.values.rows()) + " rows but the response has " +
                    std::to_string(y.values.rows()));
  }
  if (x.values.rows() < 2) throw DataError("at least two observations are required");
  if (!x.values.allFinite() || !y.values.allFinite()) throw DataError("data contain non-finite values");
  d.x = c.standardize ? standardized(std::move(x.values)) : std::move(x.values);
  d.y = y.values.col(0);
  d.names = x.header;
  return d;
}

DMDataset load_dm_data(const DMRunConfig& c) {
  DMDataset d;
  if (c.synth) {
    DMSynth s = gen_dm(*c.synth);
    d.data = s.data;
    d.predictor_names = default_names("x", c.synth->predictors);
    d.category_names = default_names("c", c.synth->categories);
    d.truth = std::move(s);
    return d;
  }
  NumericCsv y = read_numeric_csv(c.counts_path);
  NumericCsv x = read_numeric_csv(c.x_path);
  if (x.values.rows() != y.values.rows()) {
    throw DataError("covariates have " + std::to_string(x.values.rows()) + " rows but the counts have " +
                    std::to_string(y.values.rows()));
  }
  if (!x.values.allFinite()) throw DataError("covariates contain non-finite values");
  d.data = DMData::make(std::move(y.values), c.standardize ? standardized(std::move(x.values)) : std::move(x.values));
  d.predictor_names = x.header;
  d.category_names = y.header;
  return d;
}

LinearProblem make_linear_problem(const LinearRunConfig& c, const LinearDataset& d) {
  return LinearProblem(d.x, d.y,
                       NIGPrior::diffuse(static_cast<std::size_t>(d.x.cols()), c.prior_precision, c.a0, c.b0),
                       c.model_prior);
}

Json summarize_linear(const LinearTraceColumns& trace, const ConfigTrace& configs,
                      const Json& resolved, const std::vector<double>* exact, const fs::path& out) {
  const std::size_t T = trace.flip_accepted.size();
  const std::size_t B = resolved.at("sampler").at("burn_in").get<std::size_t>();
  if (configs.length() != T + 1) throw DataError("configuration trace length does not match the trace");
  if (B >= T) throw DataError("burn-in is not shorter than the trace");
  DiagnosticsConfig diag;
  diag.acf_max_lag = resolved.at("diagnostics").at("acf_max_lag").get<std::size_t>();
  diag.fdr_alpha = resolved.at("diagnostics").at("fdr_alpha").get<double>();
  diag.pip_cutoff = resolved.at("diagnostics").at("pip_cutoff").get<double>();

  // Stored jump sizes must agree with the stored configurations.
  const HammingHistogram h = hamming_histogram(trace.d_h);
  if (h != hamming_histogram(configs)) throw DataError("jump sizes disagree with stored configurations");

  const std::vector<double> pips = pip(configs, B + 1);
  const FDRSelection fdr = bayes_fdr_threshold(pips, diag.fdr_alpha);
  const std::vector<std::size_t> cut = cutoff_selection(pips, diag.pip_cutoff);

  std::vector<double> size_post(trace.model_size.begin() + static_cast<long>(B), trace.model_size.end());
  const ACF acf = safe_acf(size_post, diag.acf_max_lag);

  std::size_t flips = 0, flips_post = 0, swaps_post = 0, swaps_tried = 0;
  for (std::size_t t = 0; t < T; ++t) {
    flips += trace.flip_accepted[t];
    if (t >= B) {
      flips_post += trace.flip_accepted[t];
      if (trace.swap[t] >= 0) {
        ++swaps_tried;
        swaps_post += trace.swap[t] == 1 ? 1 : 0;
      }
    }
  }

  {
    std::string s = "predictor,pip\n";
    for (std::size_t p = 0; p < pips.size(); ++p) s += std::to_string(p) + "," + format_double(pips[p]) + "\n";
    write_text_file(out / "pip.csv", s);
    std::string l = "iteration,lambda\n";
    for (std::size_t t = 0; t < T; ++t) l += std::to_string(t + 1) + "," + format_double(trace.lambda[t]) + "\n";
    write_text_file(out / "lambda.csv", l);
    write_hamming(out / "hamming.csv", h);
    write_acf(out / "acf.csv", acf);
  }

  Json j;
  j["kind"] = "linear";
  j["seed"] = resolved.at("seed");
  j["config_hash"] = config_hash(resolved.dump());
  j["iterations"] = T;
  j["burn_in"] = B;
  j["predictors"] = configs.bits();
  j["acceptance"] = {
      {"flip", static_cast<double>(flips) / static_cast<double>(T)},
      {"flip_post_burn_in", static_cast<double>(flips_post) / static_cast<double>(T - B)},
      {"swap_post_burn_in", swaps_tried ? static_cast<double>(swaps_post) / static_cast<double>(swaps_tried) : 0.0},
      {"swap_attempts_post_burn_in", swaps_tried}};
  j["lambda_final"] = trace.lambda.back();
  j["hamming"] = hamming_json(h);
  j["mean_model_size"] = mean_of(size_post);
  j["acf_lag1"] = acf.values.size() > 1 && !acf.constant ? Json(acf.values[1]) : Json(nullptr);
  j["selection"] = {{"rule", "bayes_fdr"},
                    {"fdr_alpha", diag.fdr_alpha},
                    {"threshold", fdr.threshold},
                    {"selected", fdr.selected},
                    {"pip_cutoff", diag.pip_cutoff},
                    {"cutoff_selected", cut}};
  if (exact) {
    j["tv_distance"] = tv_distance(*exact, empirical_distribution(configs, B + 1));
  }
  return j;
}

Json summarize_dm(const DMTraceColumns& trace, const ConfigTrace& configs, std::size_t predictors,
                  const Json& resolved, const fs::path& out) {
  const std::size_t jn = trace.categories;
  const std::size_t T = trace.log_post.size();
  const std::size_t B = resolved.at("sampler").at("burn_in").get<std::size_t>();
  if (configs.length() != T || configs.bits() != jn * predictors) {
    throw DataError("configuration trace does not match the trace");
  }
  if (B >= T) throw DataError("burn-in is not shorter than the trace");
  DiagnosticsConfig diag;
  diag.acf_max_lag = resolved.at("diagnostics").at("acf_max_lag").get<std::size_t>();
  diag.fdr_alpha = resolved.at("diagnostics").at("fdr_alpha").get<double>();
  diag.pip_cutoff = resolved.at("diagnostics").at("pip_cutoff").get<double>();

  const std::vector<double> pips = pip(configs, B);  // bit j * P + p
  const FDRSelection fdr = bayes_fdr_threshold(pips, diag.fdr_alpha);
  const std::vector<std::size_t> cut = cutoff_selection(pips, diag.pip_cutoff);
  std::vector<double> sizes = model_sizes(configs);
  std::vector<double> size_post(sizes.begin() + static_cast<long>(B), sizes.end());
  const ACF acf = safe_acf(size_post, diag.acf_max_lag);

  auto pair_list = [&](const std::vector<std::size_t>& bits) {
    Json a = Json::array();
    for (std::size_t b : bits) {
      a.push_back({{"predictor", b % predictors}, {"category", b / predictors}, {"pip", pips[b]}});
    }
    return a;
  };

  {
    std::string s = "predictor,category,pip\n";
    for (std::size_t p = 0; p < predictors; ++p) {
      for (std::size_t j = 0; j < jn; ++j) {
        s += std::to_string(p) + "," + std::to_string(j) + "," + format_double(pips[j * predictors + p]) + "\n";
      }
    }
    write_text_file(out / "pip.csv", s);
    std::string sel = "predictor,category,pip\n";
    for (std::size_t b : fdr.selected) {
      sel += std::to_string(b % predictors) + "," + std::to_string(b / predictors) + "," + format_double(pips[b]) + "\n";
    }
    write_text_file(out / "selected.csv", sel);
    std::string l = "iteration," + index_header("lambda_", jn) + "\n";
    for (std::size_t t = 0; t < T; ++t) {
      l += std::to_string(t + 1);
      for (std::size_t j = 0; j < jn; ++j) l += "," + format_double(trace.lambda[t * jn + j]);
      l += "\n";
    }
    write_text_file(out / "lambda.csv", l);
    write_acf(out / "acf.csv", acf);
  }

  Json flip_rate = Json::array();
  Json swap_rate = Json::array();
  Json lambda_final = Json::array();
  for (std::size_t j = 0; j < jn; ++j) {
    std::size_t acc = 0, sacc = 0, stried = 0;
    for (std::size_t t = B; t < T; ++t) {
      acc += trace.flip[t * jn + j] == 1 ? 1 : 0;
      if (trace.swap[t * jn + j] >= 0) {
        ++stried;
        sacc += trace.swap[t * jn + j] == 1 ? 1 : 0;
      }
    }
    flip_rate.push_back(static_cast<double>(acc) / static_cast<double>(T - B));
    swap_rate.push_back(stried ? static_cast<double>(sacc) / static_cast<double>(stried) : 0.0);
    lambda_final.push_back(trace.lambda[(T - 1) * jn + j]);
  }
  std::size_t b0 = 0;
  for (std::size_t t = B; t < T; ++t) b0 += trace.beta0_accepted[t];

  Json j;
  j["kind"] = "dm";
  j["seed"] = resolved.at("seed");
  j["config_hash"] = config_hash(resolved.dump());
  j["iterations"] = T;
  j["burn_in"] = B;
  j["predictors"] = predictors;
  j["categories"] = jn;
  const Json& pr = resolved.at("priors");
  j["priors"] = {{"c", pr.at("c")}, {"a", pr.at("a")}, {"b", pr.at("b")}, {"r2", pr.at("r2")}, {"s2", pr.at("s2")}};
  j["initial_lambda"] = resolved.at("adapt").at("initial_lambda");
  j["acceptance"] = {{"beta0_post_burn_in", static_cast<double>(b0) / static_cast<double>(T - B)},
                     {"flip_post_burn_in", flip_rate},
                     {"swap_post_burn_in", swap_rate}};
  j["lambda_final"] = lambda_final;
  j["mean_model_size"] = mean_of(size_post);
  j["selection"] = {{"rule", "bayes_fdr"},
                    {"fdr_alpha", diag.fdr_alpha},
                    {"threshold", fdr.threshold},
                    {"selected", pair_list(fdr.selected)},
                    {"pip_cutoff", diag.pip_cutoff},
                    {"cutoff_selected", pair_list(cut)}};
  return j;
}

namespace {

Json planted_report(const Json& truth, const Json& summary, const std::vector<double>& pips,
                    std::size_t predictors) {
  Json rows = Json::array();
  bool all = true;
  std::set<std::pair<std::size_t, std::size_t>> sel;
  for (const auto& s : summary.at("selection").at("selected")) {
    sel.insert({s.at("predictor").get<std::size_t>(), s.at("category").get<std::size_t>()});
  }
  for (const auto& a : truth.at("associations")) {
    const auto p = a.at("predictor").get<std::size_t>();
    const auto c = a.at("category").get<std::size_t>();
    const bool in = sel.count({p, c}) > 0;
    all = all && in;
    rows.push_back({{"predictor", p}, {"category", c}, {"coefficient", a.at("coefficient")},
                    {"pip", pips[c * predictors + p]}, {"selected", in}});
  }
  return Json{{"associations", rows}, {"all_selected", all}};
}

Json run_linear_single(const LinearRunConfig& config, const LinearRunOptions& options,
                       const LinearProblem& problem, const DependencyGraph* graph,
                       const fs::path& out) {
  const Json resolved = config.to_json();
  write_json(out / "config.resolved", resolved);
  const auto t0 = std::chrono::steady_clock::now();
  const ChainTrace trace = run_chain(problem, config.sampler, graph);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(out / "trace.csv", linear_trace_csv(trace));
  write_config_trace(out / "configs.bin", trace.configs);

  std::optional<std::vector<double>> exact;
  if (options.exact) {
    if (problem.predictors() > 20) throw ConfigError("--exact needs at most 20 predictors");
    const LinearScorer scorer(problem, config.sampler.kind);
    exact = exact_posterior(scorer);
    std::string s = "state,probability\n";
    for (std::size_t i = 0; i < exact->size(); ++i) s += std::to_string(i) + "," + format_double((*exact)[i]) + "\n";
    write_text_file(out / "exact.csv", s);
  }
  Json summary = summarize_linear(linear_trace_columns(trace), trace.configs, resolved,
                                  exact ? &*exact : nullptr, out);
  write_json(out / "summary.json", summary);
  write_json(out / "run_info.json", {{"seconds", seconds},
                                     {"flip_failures", trace.flip_failures},
                                     {"swap_failures", trace.swap_failures},
                                     {"warnings", warning_count()}});
  return summary;
}

}  // namespace

Json run_linear_experiment(const LinearRunConfig& config, const LinearRunOptions& options,
                           const fs::path& out) {
  const LinearDataset data = load_linear_data(config);
  config.sampler.validate(static_cast<std::size_t>(data.x.cols()));
  const LinearProblem problem = make_linear_problem(config, data);
  std::optional<DependencyGraph> graph;
  if (config.sampler.swap_enabled) {
    graph = config.graph_path.empty() ? estimate_graph(data.x, config.graph_threshold)
                                      : read_adjacency(config.graph_path, static_cast<std::size_t>(data.x.cols()));
  }
  if (data.truth) {
    Json active = Json::array();
    for (std::size_t p : data.truth->active_indices()) active.push_back(p);
    write_json(out / "truth.json", {{"kind", "linear"}, {"active", active}});
  }

  if (options.sweep) {
    const std::vector<SweepPoint> pts = lambda_sweep(problem, *options.sweep, config.sweep_iterations,
                                                     config.sweep_burn_in, config.sampler.kind,
                                                     config.sampler.seed);
    std::string s = "lambda,acceptance\n";
    for (const auto& p : pts) s += format_double(p.lambda) + "," + format_double(p.acceptance) + "\n";
    write_text_file(out / "sweep.csv", s);
  }

  if (config.replicates == 1) {
    return run_linear_single(config, options, problem, graph ? &*graph : nullptr, out);
  }

  // Replicates run in parallel; each writes its own directory and the
  // merged table is assembled in replicate order.
  const std::size_t r = config.replicates;
  std::vector<Json> summaries(r);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(r);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(r, std::thread::hardware_concurrency()));
  auto work = [&] {
    for (std::size_t i = next++; i < r; i = next++) {
      try {
        LinearRunConfig c = config;
        c.replicates = 1;
        c.sampler.seed = derive_seed(config.sampler.seed, i);
        char name[32];
        std::snprintf(name, sizeof(name), "rep_%03zu", i);
        const fs::path dir = out / name;
        fs::create_directories(dir);
        summaries[i] = run_linear_single(c, options, problem, graph ? &*graph : nullptr, dir);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::string s = "replicate,seed,d0,d1,d2,d3plus,flip_post_burn_in,swap_post_burn_in\n";
  HammingHistogram total{};
  for (std::size_t i = 0; i < r; ++i) {
    const Json& h = summaries[i].at("hamming");
    const std::size_t d[4] = {h.at("0").get<std::size_t>(), h.at("1").get<std::size_t>(),
                              h.at("2").get<std::size_t>(), h.at("3+").get<std::size_t>()};
    for (int k = 0; k < 4; ++k) total[static_cast<std::size_t>(k)] += d[k];
    s += std::to_string(i) + "," + std::to_string(summaries[i].at("seed").get<std::uint64_t>()) + "," +
         std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) + "," +
         std::to_string(d[3]) + "," +
         format_double(summaries[i].at("acceptance").at("flip_post_burn_in").get<double>()) + "," +
         format_double(summaries[i].at("acceptance").at("swap_post_burn_in").get<double>()) + "\n";
  }
  write_text_file(out / "replicates.csv", s);
  write_json(out / "config.resolved", config.to_json());
  Json j{{"kind", "linear_replicates"}, {"replicates", r}, {"hamming", hamming_json(total)}};
  write_json(out / "summary.json", j);
  return j;
}

Json run_dm_experiment(const DMRunConfig& config, const fs::path& out) {
  const DMDataset data = load_dm_data(config);
  RJConfig rj = config.sampler;
  rj.priors = DMPriors::defaults(data.data.categories(), config.s2, config.r2, rj.priors.a,
                                 rj.priors.b, rj.priors.c);
  std::optional<DependencyGraph> graph;
  if (rj.local_move && !config.graph_path.empty()) {
    graph = read_adjacency(config.graph_path, data.data.predictors());
  }
  const Json resolved = config.to_json();
  write_json(out / "config.resolved", resolved);
  Json truth;
  if (data.truth) {
    Json assoc = Json::array();
    for (const auto& a : data.truth->associations) {
      assoc.push_back({{"predictor", a.predictor}, {"category", a.category}, {"coefficient", a.coefficient}});
    }
    truth = {{"kind", "dm"}, {"associations", assoc}};
    write_json(out / "truth.json", truth);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const RJTrace trace = run_rjmcmc(data.data, rj, graph ? &*graph : nullptr);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(out / "trace.csv", dm_trace_csv(trace));
  write_text_file(out / "coefficients.csv", dm_coefficients_csv(trace));
  write_config_trace(out / "configs.bin", trace.xi);
  Json summary = summarize_dm(dm_trace_columns(trace), trace.xi, data.data.predictors(), resolved, out);
  if (!truth.is_null()) {
    summary["planted"] = planted_report(truth, summary, pip(trace.xi, rj.burn_in), data.data.predictors());
  }
  write_json(out / "summary.json", summary);
  write_json(out / "run_info.json", {{"seconds", seconds},
                                     {"failed_moves", trace.failed_moves},
                                     {"drift_resyncs", trace.drift_resyncs},
                                     {"fits_computed", trace.fits_computed},
                                     {"reverse_proposals", trace.reverse_built},
                                     {"link_clamps", dm_clamp_events()},
                                     {"warnings", warning_count()}});
  return summary;
}

Json diagnose_run(const fs::path& run_dir, const fs::path& out, std::optional<std::size_t> acf_max_lag) {
  const fs::path cfg = run_dir / "config.resolved";
  if (!fs::is_regular_file(cfg)) throw DataError("no config.resolved in '" + run_dir.string() + "'");
  for (const char* f : {"trace.csv", "configs.bin"}) {
    if (!fs::is_regular_file(run_dir / f)) throw DataError("missing trace file '" + (run_dir / f).string() + "'");
  }
  Json resolved;
  try {
    resolved = Json::parse(read_text_file(cfg));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(cfg.string() + ": " + e.what());
  }
  fs::create_directories(out);
  Json effective = resolved;
  if (acf_max_lag) effective["diagnostics"]["acf_max_lag"] = *acf_max_lag;
  const ConfigTrace configs = read_config_trace(run_dir / "configs.bin");
  const std::string kind = resolved.at("kind").get<std::string>();
  Json summary;
  if (kind == "linear") {
    const LinearTraceColumns cols = read_linear_trace(run_dir / "trace.csv");
    std::optional<std::vector<double>> exact;
    if (fs::is_regular_file(run_dir / "exact.csv")) {
      const NumericCsv e = read_numeric_csv(run_dir / "exact.csv");
      exact.emplace(static_cast<std::size_t>(e.values.rows()));
      for (Index i = 0; i < e.values.rows(); ++i) (*exact)[static_cast<std::size_t>(i)] = e.values(i, 1);
    }
    summary = summarize_linear(cols, configs, effective, exact ? &*exact : nullptr, out);
    // The hash identifies the run, not the diagnostic overrides.
    summary["config_hash"] = config_hash(resolved.dump());
  } else if (kind == "dm") {
    std::size_t jn = 0;
    {
      const CsvTable t = read_csv(run_dir / "trace.csv");
      if (t.header.size() < 4 || (t.header.size() - 4) % 5 != 0) throw DataError("unexpected trace header");
      jn = (t.header.size() - 4) / 5;
    }
    if (jn == 0 || configs.bits() % jn != 0) throw DataError("trace and configurations disagree");
    const DMTraceColumns cols = read_dm_trace(run_dir / "trace.csv", jn);
    const std::size_t pn = configs.bits() / jn;
    summary = summarize_dm(cols, configs, pn, effective, out);
    summary["config_hash"] = config_hash(resolved.dump());
    if (fs::is_regular_file(run_dir / "truth.json")) {
      const Json truth = Json::parse(read_text_file(run_dir / "truth.json"));
      summary["planted"] = planted_report(truth, summary, pip(configs, resolved.at("sampler").at("burn_in").get<std::size_t>()), pn);
    }
  } else {
    throw DataError("unknown run kind '" + kind + "'");
  }
  write_json(out / "summary.json", summary);
  return summary;
}

std::vector<double> parse_sweep(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw ConfigError("--sweep-lambda expects a:b:n, got '" + spec + "'");
  }
  try {
    std::size_t used = 0;
    const std::string sa = spec.substr(0, a), sb = spec.substr(a + 1, b - a - 1), sn = spec.substr(b + 1);
    const double lo = std::stod(sa, &used);
    if (used != sa.size()) throw std::invalid_argument("a");
    const double hi = std::stod(sb, &used);
    if (used != sb.size()) throw std::invalid_argument("b");
    const long n = std::stol(sn, &used);
    if (used != sn.size() || n < 1) throw std::invalid_argument("n");
    if (!(lo > 0.0 && hi >= lo)) throw std::invalid_argument("range");
    return linspace(lo, hi, static_cast<std::size_t>(n));
  } catch (const std::invalid_argument&) {
    throw ConfigError("--sweep-lambda expects a:b:n with 0 < a <= b and n >= 1, got '" + spec + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("--sweep-lambda value out of range: '" + spec + "'");
  }
}

}  // namespace sdmh
