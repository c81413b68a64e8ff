#include "pograd/cli.hpp"

#include "pograd/errors.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace pograd {

using nlohmann::json;

std::string method_name(Method m) {
  switch (m) {
    case Method::kHardMcmc: return "hard_mcmc";
    case Method::kRelaxedHmc: return "relaxed_hmc";
    case Method::kFullrankVi: return "fullrank_vi";
    case Method::kMajority: return "majority";
    case Method::kSoftdag: return "softdag";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kHardMcmc, Method::kRelaxedHmc, Method::kFullrankVi, Method::kMajority,
                   Method::kSoftdag}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name +
                    "' (expected hard_mcmc, relaxed_hmc, fullrank_vi, majority or softdag)");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  // Accepts a key that is read elsewhere.
  void allow(const char* key) { known_.insert(key); }

  void get_optional(const char* key, std::optional<double>& out) {
    known_.insert(key);
    if (!obj_.contains(key)) return;
    if (obj_.at(key).is_null()) {
      out.reset();
      return;
    }
    double v = 0.0;
    get(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!known_.count(key)) throw ConfigError("config: unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json& obj_;
  std::string name_;
  std::set<std::string> known_;
};

template <typename Fn>
void read_section(const json& j, const char* key, Fn&& fn) {
  if (!j.contains(key)) return;
  Section s(j.at(key), key);
  fn(s);
  s.finish();
}

}  // namespace

void RunConfig::finalize() {
  hmc.seed = mh.seed = advi.seed = synth.seed = softdag.seed = seed;
  if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("config: zeta must lie in (0,1)");
  if (!(majority_theta >= 0.0 && majority_theta < 1.0)) {
    throw ConfigError("config: majority theta must lie in [0,1)");
  }
  prior.validate();
  switch (method) {
    case Method::kRelaxedHmc: hmc.validate(); break;
    case Method::kFullrankVi: advi.validate(); break;
    case Method::kHardMcmc: mh.validate(); break;
    case Method::kSoftdag: softdag.validate(); break;
    case Method::kMajority: break;
  }
  synth.validate();
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  std::string schema = kConfigSchema;
  top.get("schema", schema);
  if (schema != kConfigSchema) throw ConfigError(std::string("config: expected schema ") + kConfigSchema);
  std::string method = method_name(c.method);
  top.get("method", method);
  c.method = parse_method(method);
  top.get("seed", c.seed);
  top.get("zeta", c.zeta);
  std::string out = c.out_dir.string();
  top.get("out", out);
  c.out_dir = out;
  std::string dataset;
  top.get("dataset", dataset);
  if (!dataset.empty()) c.dataset = dataset;
  std::string reference;
  top.get("reference", reference);
  if (!reference.empty()) c.reference = reference;
  for (const char* key : {"prior", "hmc", "mh", "advi", "synth", "softdag", "majority"}) top.allow(key);
  top.finish();

  read_section(j, "prior", [&](Section& s) {
    s.get("a_rho", c.prior.a_rho);
    s.get("b_rho", c.prior.b_rho);
    s.get("a_beta", c.prior.a_beta);
    s.get("b_beta", c.prior.b_beta);
    s.get("a_gamma", c.prior.a_gamma);
    s.get("b_gamma", c.prior.b_gamma);
    s.get("d", c.prior.d);
    s.get("tau", c.prior.tau);
    s.get_optional("fix_beta", c.prior.fix_beta);
    s.get_optional("fix_gamma", c.prior.fix_gamma);
  });
  read_section(j, "hmc", [&](Section& s) {
    s.get("warmup_iters", c.hmc.warmup_iters);
    s.get("sampling_iters", c.hmc.sampling_iters);
    s.get("target_accept", c.hmc.target_accept);
    s.get("max_leapfrog_steps", c.hmc.max_leapfrog_steps);
    s.get("init_step_size", c.hmc.init_step_size);
    s.get("chains", c.hmc.chains);
  });
  read_section(j, "mh", [&](Section& s) {
    s.get("iters", c.mh.iters);
    s.get("burn_in_fraction", c.mh.burn_in_fraction);
    s.get("max_draws", c.mh.max_draws);
    s.get("tune_rounds", c.mh.tune_rounds);
    s.get("tune_iters", c.mh.tune_iters);
    s.get("accept_lo", c.mh.accept_lo);
    s.get("accept_hi", c.mh.accept_hi);
    s.get("scale_z", c.mh.scale_z);
    s.get("scale_rho", c.mh.scale_rho);
    s.get("scale_beta", c.mh.scale_beta);
    s.get("init_retries", c.mh.init_retries);
    s.get("chains", c.mh.chains);
  });
  read_section(j, "advi", [&](Section& s) {
    s.get("iters", c.advi.iters);
    s.get("mc_samples_grad", c.advi.mc_samples_grad);
    s.get("mc_samples_elbo", c.advi.mc_samples_elbo);
    s.get("eval_every", c.advi.eval_every);
    s.get("learning_rate", c.advi.learning_rate);
    s.get("adapt_learning_rate", c.advi.adapt_learning_rate);
    s.get("adapt_iters", c.advi.adapt_iters);
    s.get("tol_rel_obj", c.advi.tol_rel_obj);
    s.get("n_output_draws", c.advi.n_output_draws);
    s.get("max_retries", c.advi.max_retries);
  });
  read_section(j, "synth", [&](Section& s) {
    int n = c.synth.n_items;
    s.get("n_items", n);
    c.synth.n_items = n;
    s.get("d_gen", c.synth.d_gen);
    s.get("rho_gen", c.synth.rho_gen);
    s.get("beta_gen", c.synth.beta_gen);
    // Budgets default to n..2n for the chosen item count.
    int lo = -1, hi = -1;
    s.get("trace_budget_min", lo);
    s.get("trace_budget_max", hi);
    c.synth.trace_budget_min = lo >= 0 ? lo : n;
    c.synth.trace_budget_max = hi >= 0 ? hi : std::max(2 * n, c.synth.trace_budget_min);
    s.get("n_test_traces", c.synth.n_test_traces);
    s.get("target_ip_cov", c.synth.target_ip_cov);
  });
  read_section(j, "softdag", [&](Section& s) {
    s.get("lambda_l1", c.softdag.lambda_l1);
    s.get("lambda_h", c.softdag.lambda_h);
    s.get("k_hops", c.softdag.k_hops);
    s.get("taylor_degree", c.softdag.taylor_degree);
    s.get("adam_lr", c.softdag.adam_lr);
    s.get("steps", c.softdag.steps);
    s.get("restarts", c.softdag.restarts);
    s.get("init_mean", c.softdag.init_mean);
    s.get("init_sd", c.softdag.init_sd);
    s.get("validation_fraction", c.softdag.validation_fraction);
    s.get("theta_dag", c.softdag.theta_dag);
    s.get("l1_grid", c.softdag_l1_grid);
    s.get("h_grid", c.softdag_h_grid);
  });
  read_section(j, "majority", [&](Section& s) { s.get("theta", c.majority_theta); });
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Draw files

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(what + " is not valid JSON: " + e.what());
  }
}

json load_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

void require_schema(const json& j, const char* schema, const std::string& what) {
  if (!j.is_object() || j.value("schema", std::string()) != schema) {
    throw DataError(what + ": expected schema \"" + schema + "\"");
  }
}

json matrix_json(const BoolMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw DataError(what + ": expected a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError(what + ": ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw DataError(what + ": matrix entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

}  // namespace

std::string draws_to_jsonl(const DrawSet& draws) {
  draws.validate();
  std::string out;
  json header = {{"schema", kDrawsSchema},   {"method", draws.meta.method},
                 {"n_items", draws.n_items()}, {"dim", draws.dim()},
                 {"n_draws", draws.size()},  {"seed", draws.meta.seed},
                 {"tau", draws.meta.tau},    {"chains", draws.meta.chains}};
  out += header.dump() + "\n";
  for (const Draw& d : draws.draws) {
    std::vector<double> z;
    z.reserve(static_cast<std::size_t>(d.params.z.size()));
    for (Eigen::Index r = 0; r < d.params.z.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.params.z.cols(); ++c) z.push_back(d.params.z(r, c));
    }
    json rec = {{"z", z},
                {"rho", d.params.rho},
                {"beta", d.params.beta},
                {"gamma", d.params.gamma},
                {"logp", finite_or_null(d.logp)}};
    out += rec.dump() + "\n";
  }
  return out;
}

DrawSet draws_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("draws: empty file");
  const json header = parse_json(line, "draws header");
  require_schema(header, kDrawsSchema, "draws");
  DrawSet ds;
  Eigen::Index n = 0, d = 0;
  std::size_t expected = 0;
  try {
    ds.meta.method = header.at("method").get<std::string>();
    n = header.at("n_items").get<Eigen::Index>();
    d = header.at("dim").get<Eigen::Index>();
    expected = header.at("n_draws").get<std::size_t>();
    ds.meta.seed = header.value("seed", std::uint64_t{0});
    ds.meta.tau = header.value("tau", 0.0);
    ds.meta.chains = header.value("chains", 1);
  } catch (const json::exception& e) {
    throw DataError(std::string("draws header: ") + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_json(line, "draws line " + std::to_string(line_no));
    try {
      const auto z = rec.at("z").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(z.size()) != n * d) {
        throw DataError("draws line " + std::to_string(line_no) + ": z has " + std::to_string(z.size()) +
                        " entries, expected " + std::to_string(n * d));
      }
      Draw dr;
      dr.params.z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          z.data(), n, d);
      dr.params.rho = rec.at("rho").get<double>();
      dr.params.beta = rec.at("beta").get<double>();
      dr.params.gamma = rec.at("gamma").get<double>();
      dr.logp = rec.at("logp").is_null() ? -std::numeric_limits<double>::infinity() : rec.at("logp").get<double>();
      ds.draws.push_back(std::move(dr));
    } catch (const json::exception& e) {
      throw DataError("draws line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (ds.size() != expected) {
    throw DataError("draws: header promises " + std::to_string(expected) + " draws, found " +
                    std::to_string(ds.size()));
  }
  if (ds.empty()) throw DataError("draws: no draws");
  return ds;
}

DrawSet load_draws(const std::filesystem::path& path) { return draws_from_jsonl(read_text(path)); }

namespace {

struct Estimate {
  std::string method;
  PartialOrder closure;
  std::optional<Eigen::MatrixXd> w;  // SoftDAG only
  double beta = 1.0;
  int k_hops = 1;
};

Estimate load_estimate(const std::filesystem::path& path) {
  const json j = load_json(path);
  require_schema(j, kEstimateSchema, path.string());
  Estimate e;
  e.method = j.value("method", std::string());
  const Eigen::MatrixXd c = matrix_from_json(j.at("closure"), "estimate closure");
  if (c.rows() != c.cols()) throw DataError("estimate closure must be square");
  try {
    e.closure = PartialOrder::from_closure((c.array() != 0.0).matrix());
  } catch (const std::invalid_argument& err) {
    throw DataError(std::string("estimate closure: ") + err.what());
  }
  if (j.contains("w")) {
    e.w = matrix_from_json(j.at("w"), "estimate w");
    e.beta = j.value("beta", 1.0);
    e.k_hops = j.value("k_hops", 1);
  }
  return e;
}

std::filesystem::path fit_output(const std::filesystem::path& dir) {
  const auto draws = dir / "draws.jsonl";
  if (std::filesystem::exists(draws)) return draws;
  const auto est = dir / "estimate.json";
  if (std::filesystem::exists(est)) return est;
  throw DataError("no fit output (draws.jsonl or estimate.json) in " + dir.string());
}

}  // namespace

ClosureProbabilities load_closure_probabilities(const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") return closure_probabilities(load_draws(path));
  return ClosureProbabilities::from_order(load_estimate(path).closure);
}

CompareResult compare_closures(const ClosureProbabilities& a, const ClosureProbabilities& b) {
  CompareResult r;
  r.mae = mae_to_reference(a, b);
  const Eigen::Index n = a.n_items();
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      xs.push_back(a.p_hat(i, j));
      ys.push_back(b.p_hat(i, j));
    }
  }
  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), static_cast<Eigen::Index>(xs.size()));
  const Eigen::Map<const Eigen::VectorXd> y(ys.data(), static_cast<Eigen::Index>(ys.size()));
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double denom = xc.norm() * yc.norm();
  r.correlation = denom > 0.0 ? xc.dot(yc) / denom : std::numeric_limits<double>::quiet_NaN();
  return r;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_generate(const RunConfig& cfg) {
  const Dataset ds = generate_dataset(cfg.synth);
  save_dataset(ds, cfg.out_dir / "dataset.json");
}

void cmd_fit(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.dataset_path());
  const std::vector<Trace> train = ds.train();
  if (train.empty()) throw DataError("dataset has no training traces");
  const Eigen::Index n = ds.n_items();

  json summary = {{"schema", kFitSummarySchema},
                  {"method", method_name(cfg.method)},
                  {"seed", cfg.seed},
                  {"n_items", n},
                  {"n_train_traces", train.size()},
                  {"dataset", cfg.dataset_path().string()}};
  const auto t0 = std::chrono::steady_clock::now();
  if (is_bayesian(cfg.method)) {
    DrawSet draws;
    switch (cfg.method) {
      case Method::kRelaxedHmc: draws = hmc_sample(n, train, cfg.prior, cfg.hmc); break;
      case Method::kFullrankVi: draws = advi_fit(n, train, cfg.prior, cfg.advi); break;
      default: draws = hard_mh_sample(n, train, cfg.prior, cfg.mh); break;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file_atomic(cfg.out_dir / "draws.jsonl", draws_to_jsonl(draws));
    summary["runtime_seconds"] = seconds;
    summary["n_draws"] = draws.size();
    summary["tau"] = draws.meta.tau;
    summary["chains"] = draws.meta.chains;
    summary["acceptance_rate"] = finite_or_null(draws.meta.acceptance_rate);
    summary["step_size"] = finite_or_null(draws.meta.step_size);
    summary["divergences"] = draws.meta.divergences;
    summary["converged"] = draws.meta.converged;
    summary["trail_kind"] = cfg.method == Method::kFullrankVi ? "elbo" : "acceptance";
    json trail = json::array();
    for (double v : draws.meta.trail) trail.push_back(finite_or_null(v));
    summary["trail"] = std::move(trail);
  } else {
    json est = {{"schema", kEstimateSchema}, {"method", method_name(cfg.method)}, {"items", ds.items}};
    if (cfg.method == Method::kMajority) {
      const PartialOrder po = majority_fit(n, train, cfg.majority_theta);
      est["closure"] = matrix_json(po.matrix());
      est["theta"] = cfg.majority_theta;
    } else {
      const SoftDagResult r = softdag_select(n, train, cfg.softdag, cfg.softdag_l1_grid, cfg.softdag_h_grid);
      est["closure"] = matrix_json(r.order.matrix());
      est["w"] = matrix_json(r.w);
      est["beta"] = r.beta;
      est["k_hops"] = cfg.softdag.hops(n);
      est["lambda_l1"] = r.lambda_l1;
      est["lambda_h"] = r.lambda_h;
      est["val_step_nll"] = r.val_step_nll;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file_atomic(cfg.out_dir / "estimate.json", est.dump(2) + "\n");
    summary["runtime_seconds"] = seconds;
  }
  write_file_atomic(cfg.out_dir / "fit_summary.json", summary.dump(2) + "\n");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> item_names(const Dataset* ds, Eigen::Index n) {
  if (ds && ds->n_items() == n) return ds->items;
  return Dataset::default_item_names(n);
}

}  // namespace

void cmd_decode(const RunConfig& cfg) {
  const ClosureProbabilities p = load_closure_probabilities(fit_output(cfg.out_dir));
  const Eigen::Index n = p.n_items();
  std::optional<Dataset> ds;
  if (std::filesystem::exists(cfg.dataset_path())) ds = load_dataset(cfg.dataset_path());
  const auto names = item_names(ds ? &*ds : nullptr, n);
  const PartialOrder closure = decode_closure(p, cfg.zeta);
  const BoolMatrix cover = transitive_reduction(closure.matrix());

  std::string phat = "item";
  for (const auto& name : names) phat += "," + csv_field(name);
  phat += "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    phat += csv_field(names[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) phat += "," + format_double(p.p_hat(i, j));
    phat += "\n";
  }
  std::string edges = "source,target,p_hat\n";
  std::string hasse = "source,target\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::string a = csv_field(names[static_cast<std::size_t>(i)]);
      const std::string b = csv_field(names[static_cast<std::size_t>(j)]);
      if (closure.precedes(static_cast<int>(i), static_cast<int>(j))) {
        edges += a + "," + b + "," + format_double(p.p_hat(i, j)) + "\n";
      }
      if (cover(i, j)) hasse += a + "," + b + "\n";
    }
  }
  write_file_atomic(cfg.out_dir / "p_hat.csv", phat);
  write_file_atomic(cfg.out_dir / "closure.csv", edges);
  write_file_atomic(cfg.out_dir / "hasse.csv", hasse);
  const json cj = {{"schema", kClosureSchema},
                   {"items", names},
                   {"zeta", cfg.zeta},
                   {"closure", matrix_json(closure.matrix())},
                   {"hasse", matrix_json(cover)}};
  write_file_atomic(cfg.out_dir / "closure.json", cj.dump(2) + "\n");
}

const std::vector<std::string>& metrics_csv_columns() {
  static const std::vector<std::string> cols{
      "method", "seed",  "n_items", "zeta",    "precision", "recall",  "f1",     "mae_to_reference",
      "trace_nll", "step_nll", "infeasible_traces", "waic", "lppd", "p_waic", "ip_cov", "runtime_seconds"};
  return cols;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? finite_or_null(*v) : json(nullptr); }

json report_json(const MetricsReport& r, const RunConfig& cfg, const std::string& method, std::uint64_t seed,
                 Eigen::Index n, const std::string& evaluator) {
  json j = {{"schema", kMetricsSchema},
            {"method", method},
            {"seed", seed},
            {"n_items", n},
            {"zeta", cfg.zeta},
            {"evaluator", evaluator},
            {"precision", r.prf ? json(r.prf->precision) : json(nullptr)},
            {"recall", r.prf ? json(r.prf->recall) : json(nullptr)},
            {"f1", r.prf ? json(r.prf->f1) : json(nullptr)},
            {"mae_to_reference", optional_json(r.mae_to_reference)},
            {"trace_nll", optional_json(r.trace_nll)},
            {"step_nll", optional_json(r.step_nll)},
            {"infeasible_traces", r.infeasible_traces},
            {"waic", r.waic ? finite_or_null(r.waic->waic) : json(nullptr)},
            {"lppd", r.waic ? finite_or_null(r.waic->lppd) : json(nullptr)},
            {"p_waic", r.waic ? finite_or_null(r.waic->p_waic) : json(nullptr)},
            {"ip_cov", optional_json(r.ip_cov)},
            {"runtime_seconds", r.runtime_seconds}};
  return j;
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace

MetricsReport cmd_eval(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.dataset_path());
  const auto output = fit_output(cfg.out_dir);
  const std::vector<Trace> train = ds.train();
  const std::vector<Trace> test = ds.test();
  MetricsReport r;
  std::string method;
  std::string evaluator = "none";
  ClosureProbabilities p;

  if (output.extension() == ".jsonl") {
    const DrawSet draws = load_draws(output);
    if (draws.n_items() != ds.n_items()) throw DataError("draws and dataset disagree on the item count");
    method = draws.meta.method;
    const Evaluator ev = method == method_name(Method::kHardMcmc) ? Evaluator::kHard : Evaluator::kRelaxed;
    evaluator = ev == Evaluator::kHard ? "hard" : "relaxed";
    p = closure_probabilities(draws);
    if (!test.empty()) {
      const PredictiveScores s = predictive_scores(draws, test, ev, draws.meta.tau);
      r.trace_nll = s.trace_nll;
      r.step_nll = s.step_nll;
      r.infeasible_traces = s.infeasible_traces;
    }
    if (!train.empty()) r.waic = waic(draws, train, ev, draws.meta.tau);
  } else {
    const Estimate est = load_estimate(output);
    if (est.closure.size() != ds.n_items()) throw DataError("estimate and dataset disagree on the item count");
    method = est.method;
    p = ClosureProbabilities::from_order(est.closure);
    if (est.w && !test.empty()) {
      evaluator = "softdag";
      double trace_sum = 0.0;
      long steps = 0;
      for (const Trace& t : test) {
        const std::vector<Trace> one{t};
        const double nll = softdag_step_nll(*est.w, est.beta, one, est.k_hops);
        trace_sum += nll * static_cast<double>(t.length());
        steps += static_cast<long>(t.length());
      }
      r.trace_nll = trace_sum / static_cast<double>(test.size());
      r.step_nll = steps > 0 ? trace_sum / static_cast<double>(steps) : 0.0;
    }
  }

  if (ds.ground_truth) {
    r.prf = closure_prf(decode_closure(p, cfg.zeta), *ds.ground_truth);
    r.ip_cov = ip_cov(train, *ds.ground_truth);
  }
  if (cfg.reference) r.mae_to_reference = mae_to_reference(p, load_closure_probabilities(*cfg.reference));
  // Runtime and seed belong to the fit, not to this invocation.
  std::uint64_t seed = cfg.seed;
  const auto summary_path = cfg.out_dir / "fit_summary.json";
  if (std::filesystem::exists(summary_path)) {
    const json summary = load_json(summary_path);
    r.runtime_seconds = summary.value("runtime_seconds", 0.0);
    seed = summary.value("seed", seed);
  }

  const json j = report_json(r, cfg, method, seed, ds.n_items(), evaluator);
  write_file_atomic(cfg.out_dir / "metrics.json", j.dump(2) + "\n");

  const auto csv_path = cfg.out_dir / "metrics.csv";
  std::string csv;
  if (std::filesystem::exists(csv_path)) {
    csv = read_text(csv_path);
    if (!csv.empty() && csv.back() != '\n') csv += '\n';
  }
  if (csv.empty()) {
    for (std::size_t k = 0; k < metrics_csv_columns().size(); ++k) {
      csv += (k ? "," : "") + metrics_csv_columns()[k];
    }
    csv += "\n";
  }
  for (std::size_t k = 0; k < metrics_csv_columns().size(); ++k) {
    csv += (k ? "," : "") + csv_cell(j.at(metrics_csv_columns()[k]));
  }
  csv += "\n";
  write_file_atomic(csv_path, csv);
  return r;
}

CompareResult cmd_compare(const RunConfig& cfg, const std::filesystem::path& a,
                          const std::filesystem::path& b) {
  const CompareResult r = compare_closures(load_closure_probabilities(a), load_closure_probabilities(b));
  const json j = {{"schema", kCompareSchema},
                  {"a", a.string()},
                  {"b", b.string()},
                  {"mae", r.mae},
                  {"correlation", finite_or_null(r.correlation)}};
  write_file_atomic(cfg.out_dir / "compare.json", j.dump(2) + "\n");
  std::cout << "metric,value\nmae," << format_double(r.mae) << "\ncorrelation," << format_double(r.correlation)
            << "\n";
  return r;
}

// ---------------------------------------------------------------------------
// Command line

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bayesian partial-order inference from ranking traces"};
  app.require_subcommand(1);
  std::string config_path, method, out, dataset, reference, draws_a, draws_b;
  std::optional<std::uint64_t> seed;
  std::optional<double> zeta, tau;
  std::optional<int> n_items;
  std::optional<double> rho_gen, target;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "Root seed");
    sub->add_option("--method", method, "hard_mcmc, relaxed_hmc, fullrank_vi, majority or softdag");
    sub->add_option("--zeta", zeta, "Decoding threshold in (0,1)");
    sub->add_option("--tau", tau, "Soft-min temperature");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--dataset", dataset, "Dataset path (default <out>/dataset.json)");
  };
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic dataset.json");
  add_common(gen);
  gen->add_option("--n-items", n_items, "Number of items (budgets default to n..2n)");
  gen->add_option("--rho", rho_gen, "Generator correlation");
  gen->add_option("--target-ip-cov", target, "Target incomparable-pair coverage");
  CLI::App* fit = app.add_subcommand("fit", "Fit a method to the training traces");
  add_common(fit);
  CLI::App* dec = app.add_subcommand("decode", "Decode the fitted posterior into a closure");
  add_common(dec);
  CLI::App* ev = app.add_subcommand("eval", "Score the fit and append to metrics.csv");
  add_common(ev);
  ev->add_option("--reference", reference, "Reference draws (hard MCMC) for posterior MAE");
  CLI::App* cmp = app.add_subcommand("compare", "MAE and correlation between two fits");
  add_common(cmp);
  cmp->add_option("a", draws_a, "First draws.jsonl or estimate.json")->required();
  cmp->add_option("b", draws_b, "Second draws.jsonl or estimate.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!method.empty()) cfg.method = parse_method(method);
    if (zeta) cfg.zeta = *zeta;
    if (tau) cfg.prior.tau = *tau;
    if (!out.empty()) cfg.out_dir = out;
    if (!dataset.empty()) cfg.dataset = dataset;
    if (!reference.empty()) cfg.reference = reference;
    if (n_items) {
      cfg.synth.n_items = *n_items;
      cfg.synth.trace_budget_min = *n_items;
      cfg.synth.trace_budget_max = 2 * *n_items;
    }
    if (rho_gen) cfg.synth.rho_gen = *rho_gen;
    if (target) cfg.synth.target_ip_cov = *target;
    cfg.finalize();

    if (*gen) {
      cmd_generate(cfg);
    } else if (*fit) {
      cmd_fit(cfg);
    } else if (*dec) {
      cmd_decode(cfg);
    } else if (*ev) {
      const MetricsReport r = cmd_eval(cfg);
      if (r.prf) std::cout << "f1," << format_double(r.prf->f1) << "\n";
    } else if (*cmp) {
      cmd_compare(cfg, draws_a, draws_b);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pograd
