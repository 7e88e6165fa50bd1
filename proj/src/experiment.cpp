#include "gsvb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "gsvb/datasets.hpp"
#include "gsvb/error.hpp"
#include "gsvb/matrix_io.hpp"
#include "gsvb/metrics.hpp"

namespace gsvb {
namespace {

using json = nlohmann::json;
using Index = Eigen::Index;

Index idx_cast(std::size_t i) { return static_cast<Index>(i); }

enum Stream : std::uint64_t { kGraphStream = 1, kSignalStream = 2, kSamplingStream = 3 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  fail(ErrorCode::ConfigError, "config field '" + field + "': " + what);
}

template <typename T>
T read_field(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(path + key, e.what());
  }
}

template <typename T>
std::vector<T> read_int_list(const json& obj, const std::string& key, const std::string& path) {
  const json& node = obj.at(key);
  if (node.is_number_integer()) return {read_field<T>(obj, key, path)};
  return read_field<std::vector<T>>(obj, key, path);
}

const std::map<std::string, Scenario>& scenario_names() {
  static const std::map<std::string, Scenario> names{
      {"synthetic_kronecker", Scenario::SyntheticKronecker},
      {"temperature_harary", Scenario::TemperatureHarary},
      {"custom_csv", Scenario::CustomCsv}};
  return names;
}

const char* sweep_name(SweepMode m) { return m == SweepMode::Jacobi ? "jacobi" : "gauss_seidel"; }

const char* shape_name(NoiseShapeCount c) {
  return c == NoiseShapeCount::Observed ? "observed" : "stacked_signal";
}

VBConfig parse_vb(const json& node) {
  static const std::vector<std::string> known{
      "epsilon",       "lambda_init",  "rho_e",
      "xi_e",          "max_iters",    "rel_tol",
      "update_edges",  "fixed_alpha",  "sweep",
      "noise_shape",   "defer_first_noise_update", "incremental_determinants",
      "series_abs_tol", "series_max_terms"};
  if (!node.is_object()) config_error("vb", "must be an object");
  for (const auto& [key, value] : node.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      config_error("vb." + key, "unknown key");

  VBConfig vb;
  const std::string p = "vb.";
  if (node.contains("epsilon")) vb.epsilon = read_field<double>(node, "epsilon", p);
  if (node.contains("lambda_init")) vb.lambda_init = read_field<double>(node, "lambda_init", p);
  if (node.contains("rho_e")) vb.rho_e = read_field<double>(node, "rho_e", p);
  if (node.contains("xi_e")) vb.xi_e = read_field<double>(node, "xi_e", p);
  if (node.contains("max_iters")) vb.max_iters = read_field<int>(node, "max_iters", p);
  if (node.contains("rel_tol")) vb.rel_tol = read_field<double>(node, "rel_tol", p);
  if (node.contains("update_edges")) vb.update_edges = read_field<bool>(node, "update_edges", p);
  if (node.contains("fixed_alpha") && !node.at("fixed_alpha").is_null())
    vb.fixed_alpha = read_field<double>(node, "fixed_alpha", p);
  if (node.contains("sweep")) {
    const auto s = read_field<std::string>(node, "sweep", p);
    if (s == "gauss_seidel") vb.sweep = SweepMode::GaussSeidel;
    else if (s == "jacobi") vb.sweep = SweepMode::Jacobi;
    else config_error("vb.sweep", "expected gauss_seidel or jacobi, got " + s);
  }
  if (node.contains("noise_shape")) {
    const auto s = read_field<std::string>(node, "noise_shape", p);
    if (s == "observed") vb.noise_shape = NoiseShapeCount::Observed;
    else if (s == "stacked_signal") vb.noise_shape = NoiseShapeCount::StackedSignal;
    else config_error("vb.noise_shape", "expected observed or stacked_signal, got " + s);
  }
  if (node.contains("defer_first_noise_update"))
    vb.defer_first_noise_update = read_field<bool>(node, "defer_first_noise_update", p);
  if (node.contains("incremental_determinants"))
    vb.incremental_determinants = read_field<bool>(node, "incremental_determinants", p);
  if (node.contains("series_abs_tol"))
    vb.series.abs_tol = read_field<double>(node, "series_abs_tol", p);
  if (node.contains("series_max_terms"))
    vb.series.max_terms_per_axis = read_field<int>(node, "series_max_terms", p);
  return vb;
}

json vb_to_json(const VBConfig& vb) {
  json out{{"epsilon", vb.epsilon},
           {"lambda_init", vb.lambda_init},
           {"rho_e", vb.rho_e},
           {"xi_e", vb.xi_e},
           {"max_iters", vb.max_iters},
           {"rel_tol", vb.rel_tol},
           {"update_edges", vb.update_edges},
           {"fixed_alpha", nullptr},
           {"sweep", sweep_name(vb.sweep)},
           {"noise_shape", shape_name(vb.noise_shape)},
           {"defer_first_noise_update", vb.defer_first_noise_update},
           {"incremental_determinants", vb.incremental_determinants},
           {"series_abs_tol", vb.series.abs_tol},
           {"series_max_terms", vb.series.max_terms_per_axis}};
  if (vb.fixed_alpha) out["fixed_alpha"] = *vb.fixed_alpha;
  return out;
}

int vertex_count(const ExperimentConfig& c) {
  if (c.scenario == Scenario::SyntheticKronecker) {
    int n = 1;
    for (int i = 0; i < c.kron_order; ++i) n *= 3;
    return n;
  }
  return c.n_sensors;
}

Matrix reshape_rows(const Vector& stacked, std::size_t k, std::size_t n) {
  Matrix out(idx_cast(k), idx_cast(n));
  for (std::size_t s = 0; s < k; ++s)
    out.row(idx_cast(s)) = stacked.segment(idx_cast(s * n), idx_cast(n)).transpose();
  return out;
}

Eigen::MatrixX<bool> support_mask(const WeightedGraph& g) {
  return g.weights().array() != 0.0;
}

// Inputs shared by every cell of one run.
struct SharedData {
  std::optional<SensorDataset> sensors;
  std::map<std::uint64_t, Matrix> kron_laplacian;  // by seed, synthetic only
};

struct CellData {
  Matrix clean;  // K x N truth
  Matrix noisy;
  std::optional<double> noise_variance;
  std::optional<Matrix> true_laplacian;
  std::optional<Eigen::MatrixX<bool>> support;
};

CellData build_cell_data(const ExperimentConfig& cfg, const CellKey& key, const SharedData& shared,
                         CellResult& row) {
  CellData data;
  const int n = vertex_count(cfg);
  if (key.harary_p > 0) data.support = support_mask(harary_graph(n, key.harary_p));

  if (cfg.scenario == Scenario::SyntheticKronecker) {
    const Matrix& lap = shared.kron_laplacian.at(key.seed);
    row.data_seed = derive_seed(key.seed, kSignalStream, static_cast<std::uint64_t>(key.omega),
                                static_cast<std::uint64_t>(key.k));
    BandlimitedSpec spec{key.omega, key.k, cfg.snr_db, row.data_seed};
    auto signals = generate_bandlimited_signals(LaplacianEstimate(lap), spec);
    data.clean = std::move(signals.clean);
    data.noisy = std::move(signals.noisy);
    data.noise_variance = signals.noise_variance;
    data.true_laplacian = lap;
    return data;
  }

  if (shared.sensors) {
    const Matrix& all = shared.sensors->snapshots;
    if (all.rows() < key.k)
      fail(ErrorCode::TooFewSnapshots, "csv holds " + std::to_string(all.rows()) +
                                           " complete snapshots, cell needs " +
                                           std::to_string(key.k));
    data.clean = all.topRows(key.k);
    data.noisy = data.clean;
    return data;
  }

  // Sensor-network stand-in: a smooth field on a ring, the same for every P
  // and nested across K (the first K rows of one draw).
  const int k_max = *std::max_element(cfg.k_values.begin(), cfg.k_values.end());
  const Matrix lap = laplacian_from_weights(harary_graph(n, cfg.field_connectivity)).values();
  row.data_seed = derive_seed(key.seed, kSignalStream, static_cast<std::uint64_t>(key.omega));
  BandlimitedSpec spec{key.omega, k_max, cfg.snr_db, row.data_seed};
  auto signals = generate_bandlimited_signals(LaplacianEstimate(lap), spec);
  data.clean = signals.clean.topRows(key.k);
  data.noisy = signals.noisy.topRows(key.k);
  data.noise_variance = signals.noise_variance;
  data.true_laplacian = lap;
  return data;
}

void run_cell(const ExperimentConfig& cfg, const SharedData& shared, const ExperimentHooks& hooks,
              CellResult& row) {
  const CellKey& key = row.key;
  const CellData data = build_cell_data(cfg, key, shared, row);
  const std::size_t n = static_cast<std::size_t>(data.clean.cols());
  const std::size_t k = static_cast<std::size_t>(data.clean.rows());
  row.n = n;

  row.sampling_seed = derive_seed(key.seed, kSamplingStream, static_cast<std::uint64_t>(key.m));
  const SamplingOperator op =
      random_sampling_operator(n, k, static_cast<std::size_t>(key.m), row.sampling_seed);
  const StackedObservations obs = StackedObservations::sample(op, data.noisy);

  row.zero_fill_nmse = nmse_signal(reshape_rows(op.adjoint(obs.y), k, n), data.clean);

  RunOptions options;
  options.truth = data.clean;
  options.edge_support = data.support;
  options.on_edge_update = hooks.on_edge_update;
  const VBState state = run_vb(obs, op, cfg.vb, options);
  row.nmse_signal = nmse_signal(state.signal.mean_matrix(), data.clean);
  row.iterations = state.iteration;
  row.converged = state.converged;
  row.noise_var_estimate = state.noise.variance_estimate();
  row.noise_var_true = data.noise_variance;
  row.trace = state.trace;
  for (const auto& d : state.trace) row.edges_skipped += d.edges_skipped;
  if (data.true_laplacian) row.nmse_laplacian = nmse_laplacian(state.laplacian, *data.true_laplacian);

  if (cfg.oracle_baseline && data.true_laplacian) {
    VBConfig oracle_cfg = cfg.vb;
    oracle_cfg.update_edges = false;
    RunOptions oracle_opts;
    oracle_opts.initial_laplacian = LaplacianEstimate(*data.true_laplacian);
    const VBState oracle = run_vb(obs, op, oracle_cfg, oracle_opts);
    row.oracle_nmse = nmse_signal(oracle.signal.mean_matrix(), data.clean);
    row.oracle_noise_var = oracle.noise.variance_estimate();
  }
  row.ok = true;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

json median_or_null(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  return median(v);
}

}  // namespace


const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::SyntheticKronecker: return "synthetic_kronecker";
    case Scenario::TemperatureHarary: return "temperature_harary";
    case Scenario::CustomCsv: return "custom_csv";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                          std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ a);
  return splitmix64(h ^ b);
}

void ExperimentConfig::validate() const {
  const int n = vertex_count(*this);
  if (scenario == Scenario::SyntheticKronecker && (kron_order < 1 || kron_order > 6))
    config_error("kron_order", "must lie in [1, 6]");
  if (scenario != Scenario::SyntheticKronecker && n_sensors < 3)
    config_error("n_sensors", "must be >= 3");
  if (sweep.empty()) config_error("sweep", "must list at least one M");
  for (int m : sweep)
    if (m < 1 || m > n) config_error("sweep", "M=" + std::to_string(m) + " outside [1, " +
                                                  std::to_string(n) + "]");
  if (omegas.empty()) config_error("omegas", "must list at least one bandwidth");
  for (int w : omegas)
    if (w < 1 || w > n) config_error("omegas", "omega=" + std::to_string(w) + " outside [1, N]");
  if (k_values.empty()) config_error("K", "must be a positive integer or a non-empty list");
  for (int k : k_values)
    if (k < 1) config_error("K", "snapshot counts must be >= 1");
  for (int p : harary_p)
    if (p < 2 || p >= n) config_error("harary_p", "connectivity must lie in [2, N-1]");
  if (seeds.empty()) config_error("seeds", "must list at least one seed");
  if (!std::isfinite(snr_db)) config_error("snr_db", "must be finite");
  if (threads < 1) config_error("threads", "must be >= 1");
  if (scenario == Scenario::TemperatureHarary &&
      (field_connectivity < 2 || field_connectivity >= n))
    config_error("field_connectivity", "must lie in [2, N-1]");
  if (scenario == Scenario::CustomCsv && !csv_path)
    config_error("csv_path", "required for custom_csv");
  if (csv_path && !std::filesystem::exists(*csv_path))
    config_error("csv_path", "no such file: " + csv_path->string());
  try {
    vb.validate();
  } catch (const Error& e) {
    config_error("vb", e.what());
  }
}

namespace {

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");

  static const std::vector<std::string> known{
      "scenario", "sweep",    "omegas",   "K",              "harary_p",
      "snr_db",   "seeds",    "vb",       "kron_order",     "n_sensors",
      "field_connectivity",   "csv_path", "max_snapshots",  "oracle_baseline",
      "output_dir", "threads"};
  for (const auto& [key, value] : root.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      config_error(key, "unknown key");

  ExperimentConfig c;
  if (root.contains("scenario")) {
    const auto name = read_field<std::string>(root, "scenario", "");
    const auto it = scenario_names().find(name);
    if (it == scenario_names().end()) config_error("scenario", "unknown scenario " + name);
    c.scenario = it->second;
  }
  if (root.contains("sweep")) c.sweep = read_int_list<int>(root, "sweep", "");
  if (root.contains("omegas")) c.omegas = read_int_list<int>(root, "omegas", "");
  if (root.contains("K")) c.k_values = read_int_list<int>(root, "K", "");
  if (root.contains("harary_p")) c.harary_p = read_int_list<int>(root, "harary_p", "");
  if (root.contains("snr_db")) c.snr_db = read_field<double>(root, "snr_db", "");
  if (root.contains("seeds")) c.seeds = read_int_list<std::uint64_t>(root, "seeds", "");
  if (root.contains("vb")) c.vb = parse_vb(root.at("vb"));
  if (root.contains("kron_order")) c.kron_order = read_field<int>(root, "kron_order", "");
  if (root.contains("n_sensors")) c.n_sensors = read_field<int>(root, "n_sensors", "");
  if (root.contains("field_connectivity"))
    c.field_connectivity = read_field<int>(root, "field_connectivity", "");
  if (root.contains("csv_path") && !root.at("csv_path").is_null())
    c.csv_path = read_field<std::string>(root, "csv_path", "");
  if (root.contains("max_snapshots"))
    c.max_snapshots = read_field<std::size_t>(root, "max_snapshots", "");
  if (root.contains("oracle_baseline"))
    c.oracle_baseline = read_field<bool>(root, "oracle_baseline", "");
  if (root.contains("output_dir")) c.output_dir = read_field<std::string>(root, "output_dir", "");
  if (root.contains("threads")) c.threads = read_field<unsigned>(root, "threads", "");
  return c;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ExperimentConfig c = parse_config(text);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig c = parse_config(text.str());
  // Relative csv paths are resolved against the config file's directory.
  if (c.csv_path && c.csv_path->is_relative() && !std::filesystem::exists(*c.csv_path))
    c.csv_path = path.parent_path() / *c.csv_path;
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json_text() const {
  json out{{"scenario", to_string(scenario)},
           {"sweep", sweep},
           {"omegas", omegas},
           {"K", k_values},
           {"harary_p", harary_p},
           {"snr_db", snr_db},
           {"seeds", seeds},
           {"vb", vb_to_json(vb)},
           {"kron_order", kron_order},
           {"n_sensors", n_sensors},
           {"field_connectivity", field_connectivity},
           {"csv_path", csv_path ? json(csv_path->string()) : json(nullptr)},
           {"max_snapshots", max_snapshots},
           {"oracle_baseline", oracle_baseline},
           {"output_dir", output_dir.string()},
           {"threads", threads}};
  return out.dump(2);
}

std::string CellKey::label() const {
  std::ostringstream s;
  s << "M" << m << "_w" << omega << "_K" << k << "_P" << harary_p << "_s" << seed;
  return s.str();
}

std::size_t ExperimentResult::failed() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok; }));
}

std::vector<CellKey> enumerate_cells(const ExperimentConfig& config) {
  std::vector<CellKey> keys;
  const std::vector<int> masks = config.harary_p.empty() ? std::vector<int>{0} : config.harary_p;
  for (int m : config.sweep)
    for (int w : config.omegas)
      for (int k : config.k_values)
        for (int p : masks)
          for (std::uint64_t s : config.seeds) keys.push_back({m, w, k, p, s});
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  config.validate();
  ExperimentResult result;
  result.config = config;

  SharedData shared;
  if (config.csv_path && config.scenario != Scenario::SyntheticKronecker) {
    const int k_max = *std::max_element(config.k_values.begin(), config.k_values.end());
    const std::size_t keep =
        config.max_snapshots > 0 ? config.max_snapshots : static_cast<std::size_t>(k_max);
    shared.sensors = load_sensor_csv(*config.csv_path,
                                     static_cast<std::size_t>(config.n_sensors), keep);
  }
  if (config.scenario == Scenario::SyntheticKronecker) {
    KroneckerSpec spec;
    spec.kron_order = config.kron_order;
    const Matrix prob = kronecker_probability_matrix(spec);
    for (std::uint64_t s : config.seeds) {
      const WeightedGraph g = sample_adjacency(prob, derive_seed(s, kGraphStream));
      shared.kron_laplacian.emplace(s, laplacian_from_weights(g).values());
    }
  }

  const std::vector<CellKey> keys = enumerate_cells(config);
  result.cells.resize(keys.size());
  for (std::size_t c = 0; c < keys.size(); ++c) result.cells[c].key = keys[c];

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t c = next++; c < keys.size(); c = next++) {
      CellResult& row = result.cells[c];
      try {
        run_cell(config, shared, hooks, row);
      } catch (const Error& e) {
        row = CellResult{};
        row.key = keys[c];
        row.status = to_string(e.code());
        row.message = e.what();
      } catch (const std::exception& e) {
        row = CellResult{};
        row.key = keys[c];
        row.status = "Internal";
        row.message = e.what();
      }
      std::lock_guard lock(log_mutex);
      if (row.ok)
        spdlog::info("cell {} done: nmse {:.4g}, {} iterations", row.key.label(), row.nmse_signal,
                     row.iterations);
      else
        spdlog::warn("cell {} failed: {}: {}", row.key.label(), row.status, row.message);
    }
  };
  const unsigned threads =
      std::min<unsigned>(config.threads, static_cast<unsigned>(std::max<std::size_t>(1, keys.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return result;
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& output_dir) {
  if (result.cells.empty()) fail(ErrorCode::InvalidArgument, "emit_report: no results");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + output_dir.string() + ": " + ec.message());

  auto open = [&](const std::string& name) {
    std::ofstream out(output_dir / name, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + (output_dir / name).string());
    return out;
  };

  const VBConfig& vb = result.config.vb;
  std::ostringstream vb_cols;
  vb_cols << format_double(vb.epsilon) << ',' << format_double(vb.lambda_init) << ','
          << format_double(vb.rho_e) << ',' << format_double(vb.xi_e) << ',' << vb.max_iters
          << ',' << format_double(vb.rel_tol) << ',' << sweep_name(vb.sweep) << ','
          << shape_name(vb.noise_shape) << ',' << vb.defer_first_noise_update << ','
          << vb.incremental_determinants << ',' << vb.update_edges << ','
          << (vb.fixed_alpha ? format_double(*vb.fixed_alpha) : std::string());

  {
    auto out = open("results.csv");
    out << "scenario,M,omega,K,P,seed,status,message,data_seed,sampling_seed,N,nmse_signal,"
           "nmse_laplacian,iterations,converged,noise_var_estimate,noise_var_true,edges_skipped,"
           "zero_fill_nmse,oracle_nmse,oracle_noise_var,epsilon,lambda_init,rho_e,xi_e,"
           "max_iters,rel_tol,sweep_mode,noise_shape,defer_first_noise_update,"
           "incremental_determinants,update_edges,fixed_alpha\n";
    for (const CellResult& c : result.cells) {
      out << to_string(result.config.scenario) << ',' << c.key.m << ',' << c.key.omega << ','
          << c.key.k << ',' << c.key.harary_p << ',' << c.key.seed << ',' << c.status << ','
          << csv_quote(c.message) << ',';
      if (c.ok) {
        out << c.data_seed << ',' << c.sampling_seed << ',' << c.n << ','
            << format_double(c.nmse_signal) << ',' << opt(c.nmse_laplacian) << ','
            << c.iterations << ',' << c.converged << ',' << format_double(c.noise_var_estimate)
            << ',' << opt(c.noise_var_true) << ',' << c.edges_skipped << ','
            << format_double(c.zero_fill_nmse) << ',' << opt(c.oracle_nmse) << ','
            << opt(c.oracle_noise_var) << ',';
      } else {
        out << ",,,,,,,,,,,,,";
      }
      out << vb_cols.str() << '\n';
    }
    if (!out) fail(ErrorCode::IoError, "write failed: results.csv");
  }

  for (const CellResult& c : result.cells) {
    if (!c.ok) continue;
    auto out = open("trace_" + c.key.label() + ".csv");
    out << "iteration,relative_change,alpha_mean,nmse,edges_skipped\n";
    for (const auto& d : c.trace)
      out << d.iteration << ',' << format_double(d.relative_change) << ','
          << format_double(d.alpha_mean) << ','
          << (d.nmse >= 0.0 ? format_double(d.nmse) : std::string()) << ',' << d.edges_skipped
          << '\n';
    if (!out) fail(ErrorCode::IoError, "write failed: trace " + c.key.label());
  }

  // Medians per (M, omega, K, P) over successful seeds.
  std::map<std::tuple<int, int, int, int>, std::vector<const CellResult*>> groups;
  for (const CellResult& c : result.cells)
    groups[{c.key.m, c.key.omega, c.key.k, c.key.harary_p}].push_back(&c);

  json summary;
  summary["scenario"] = to_string(result.config.scenario);
  summary["cells"] = result.cells.size();
  summary["failed"] = result.failed();
  summary["config"] = json::parse(result.config.to_json_text());
  summary["groups"] = json::array();
  for (const auto& [key, cells] : groups) {
    std::vector<double> nmse, lap, zero, oracle, noise, iters;
    std::size_t ok = 0;
    for (const CellResult* c : cells) {
      if (!c->ok) continue;
      ++ok;
      nmse.push_back(c->nmse_signal);
      if (c->nmse_laplacian) lap.push_back(*c->nmse_laplacian);
      zero.push_back(c->zero_fill_nmse);
      if (c->oracle_nmse) oracle.push_back(*c->oracle_nmse);
      noise.push_back(c->noise_var_estimate);
      iters.push_back(c->iterations);
    }
    summary["groups"].push_back({{"M", std::get<0>(key)},
                                 {"omega", std::get<1>(key)},
                                 {"K", std::get<2>(key)},
                                 {"P", std::get<3>(key)},
                                 {"runs", cells.size()},
                                 {"ok", ok},
                                 {"median_nmse_signal", median_or_null(nmse)},
                                 {"median_nmse_laplacian", median_or_null(lap)},
                                 {"median_zero_fill_nmse", median_or_null(zero)},
                                 {"median_oracle_nmse", median_or_null(oracle)},
                                 {"median_noise_var_estimate", median_or_null(noise)},
                                 {"median_iterations", median_or_null(iters)}});
  }
  auto out = open("summary.json");
  out << summary.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed: summary.json");
}


}  // namespace gsvb
