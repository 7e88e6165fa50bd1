#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsvb/gsvb.h"

namespace fs = std::filesystem;

namespace {

// 4-vertex path with unit weights.
const double kPath[16] = {1, -1, 0, 0, -1, 2, -1, 0, 0, -1, 2, -1, 0, 0, -1, 1};

struct Problem {
  gsvb_problem* p = nullptr;
  ~Problem() { gsvb_problem_destroy(p); }
};

struct Result {
  gsvb_result* r = nullptr;
  ~Result() { gsvb_result_destroy(r); }
};

struct Experiment {
  gsvb_experiment* e = nullptr;
  ~Experiment() { gsvb_experiment_destroy(e); }
};

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::string(gsvb_status_string(GSVB_OK)) == "ok");
  CHECK(std::string(gsvb_status_string(GSVB_ERR_CONFIG)) == "configuration error");
  CHECK(std::string(gsvb_status_string(static_cast<gsvb_status>(1234))) == "unknown status");
  CHECK(std::string(gsvb_version()) == "0.1.0");
  CHECK(gsvb_set_log_level("warn") == GSVB_OK);
  CHECK(gsvb_set_log_level("loud") == GSVB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(gsvb_last_error()).find("loud") != std::string::npos);
  CHECK(gsvb_set_log_level("off") == GSVB_OK);
  CHECK(std::string(gsvb_last_error()).empty());
}

TEST_CASE("special functions through the C boundary") {
  double out = 0.0;
  // phi1 with both variables zero is 1
  REQUIRE(gsvb_phi1(1.5, 2.0, 3.0, 0.0, 0.0, &out) == GSVB_OK);
  CHECK(out == 1.0);
  // beta = 0 reduces to M(a; c; x); M(1; 2; x) = (e^x - 1)/x
  REQUIRE(gsvb_phi1(1.0, 0.0, 2.0, 0.5, 0.0, &out) == GSVB_OK);
  CHECK(out == doctest::Approx(std::expm1(0.5) / 0.5).epsilon(1e-13));
  CHECK(gsvb_phi1(1.0, 1.0, 2.0, 0.0, 1.5, &out) == GSVB_ERR_DOMAIN);
  CHECK(gsvb_phi1(1.0, 1.0, 2.0, 0.5, 0.0, nullptr) == GSVB_ERR_INVALID_ARGUMENT);

  // uniform on [0.2, 1.2]: alpha = p = q = 1, v = 1, u = 0.2
  const gsvb_gcch_params uniform{1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.2};
  REQUIRE(gsvb_gcch_mean(&uniform, &out) == GSVB_OK);
  CHECK(out == doctest::Approx(0.7).epsilon(1e-12));
  REQUIRE(gsvb_gcch_log_pdf(&uniform, 0.9, &out) == GSVB_OK);
  CHECK(out == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gsvb_gcch_mean(nullptr, &out) == GSVB_ERR_INVALID_ARGUMENT);
  gsvb_gcch_params bad = uniform;
  bad.p = -1.0;
  CHECK(gsvb_gcch_mean(&bad, &out) == GSVB_ERR_DOMAIN);

  REQUIRE(gsvb_h_normalizer(1.0, 1.0, 0.0, 0.0, 1.0, 0.0, &out) == GSVB_OK);
  CHECK(out == doctest::Approx(1.0).epsilon(1e-12));

  // c = 0 and d = 0: the determinant does not depend on the weight
  REQUIRE(gsvb_edge_posterior_mean(0.0, 0.0, 1.0, 2.0, 3, &out) == GSVB_OK);
  CHECK(out == doctest::Approx(std::sqrt(2.0 / (M_PI * 2.0))).epsilon(1e-10));
}

TEST_CASE("fixed-topology run equals the dense Gaussian posterior") {
  Problem pb;
  REQUIRE(gsvb_problem_create(4, 2, &pb.p) == GSVB_OK);
  const size_t sel0[] = {0, 2, 3};
  const double val0[] = {0.4, -1.1, 0.7};
  const size_t sel1[] = {1};
  const double val1[] = {2.5};
  REQUIRE(gsvb_problem_set_snapshot(pb.p, 0, sel0, val0, 3) == GSVB_OK);
  REQUIRE(gsvb_problem_set_snapshot(pb.p, 1, sel1, val1, 1) == GSVB_OK);
  REQUIRE(gsvb_problem_set_initial_laplacian(pb.p, kPath) == GSVB_OK);

  gsvb_vb_config cfg;
  gsvb_vb_config_default(&cfg);
  cfg.update_edges = 0;
  cfg.fixed_alpha = 3.0;
  cfg.max_iters = 1;
  Result res;
  REQUIRE(gsvb_run(pb.p, &cfg, &res.r) == GSVB_OK);

  std::vector<double> mean(8);
  REQUIRE(gsvb_result_signal(res.r, mean.data()) == GSVB_OK);

  const Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> lap(kPath);
  const double alpha = 3.0;
  const std::vector<std::vector<size_t>> sels{{0, 2, 3}, {1}};
  const std::vector<std::vector<double>> vals{{0.4, -1.1, 0.7}, {2.5}};
  for (int k = 0; k < 2; ++k) {
    Eigen::Matrix4d precision = lap + cfg.epsilon * Eigen::Matrix4d::Identity();
    Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
    for (size_t m = 0; m < sels[k].size(); ++m) {
      precision(sels[k][m], sels[k][m]) += alpha;
      rhs(sels[k][m]) += alpha * vals[k][m];
    }
    const Eigen::Vector4d mu = precision.ldlt().solve(rhs);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(mean[4 * k + i] - mu(i)) <= 1e-10);
  }

  std::vector<double> l(16);
  REQUIRE(gsvb_result_laplacian(res.r, l.data()) == GSVB_OK);
  for (int i = 0; i < 16; ++i) CHECK(l[i] == kPath[i]);
  int iterations = 0, converged = -1;
  REQUIRE(gsvb_result_status(res.r, &iterations, &converged) == GSVB_OK);
  CHECK(iterations == 1);
  CHECK(gsvb_result_trace_length(res.r) == 1);
  double nmse = 0.0;
  REQUIRE(gsvb_result_trace(res.r, 0, nullptr, nullptr, nullptr, &nmse) == GSVB_OK);
  CHECK(nmse < 0.0);  // no truth supplied
  CHECK(gsvb_result_trace(res.r, 5, nullptr, nullptr, nullptr, nullptr) ==
        GSVB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("learned topology keeps Laplacian structure") {
  Problem pb;
  REQUIRE(gsvb_problem_create(4, 3, &pb.p) == GSVB_OK);
  const size_t all[] = {0, 1, 2, 3};
  const double rows[3][4] = {{1.0, 0.9, 0.2, 0.1}, {-0.5, -0.4, 0.3, 0.35}, {0.2, 0.1, -0.8, -0.9}};
  for (size_t k = 0; k < 3; ++k)
    REQUIRE(gsvb_problem_set_snapshot(pb.p, k, all, rows[k], 4) == GSVB_OK);
  unsigned char mask[16] = {0};
  for (int i = 0; i < 3; ++i) mask[i * 4 + i + 1] = mask[(i + 1) * 4 + i] = 1;
  REQUIRE(gsvb_problem_set_edge_support(pb.p, mask) == GSVB_OK);
  REQUIRE(gsvb_problem_set_truth(pb.p, &rows[0][0]) == GSVB_OK);

  gsvb_vb_config cfg;
  gsvb_vb_config_default(&cfg);
  cfg.max_iters = 6;
  Result res;
  REQUIRE(gsvb_run(pb.p, &cfg, &res.r) == GSVB_OK);
  std::vector<double> l(16);
  REQUIRE(gsvb_result_laplacian(res.r, l.data()) == GSVB_OK);
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < 4; ++j) {
      row += l[i * 4 + j];
      CHECK(l[i * 4 + j] == l[j * 4 + i]);
      if (i != j) {
        CHECK(l[i * 4 + j] <= 0.0);
        if (!mask[i * 4 + j]) CHECK(l[i * 4 + j] == 0.0);
      }
    }
    CHECK(std::abs(row) <= 1e-12);
  }
  double shape = 0.0, rate = 0.0, nmse = -1.0;
  REQUIRE(gsvb_result_noise(res.r, &shape, &rate) == GSVB_OK);
  CHECK(shape > 0.0);
  CHECK(rate > 0.0);
  REQUIRE(gsvb_result_trace(res.r, 0, nullptr, nullptr, nullptr, &nmse) == GSVB_OK);
  CHECK(nmse >= 0.0);
}

TEST_CASE("problem argument errors") {
  gsvb_problem* p = nullptr;
  CHECK(gsvb_problem_create(1, 1, &p) == GSVB_ERR_INVALID_ARGUMENT);
  CHECK(p == nullptr);
  Problem pb;
  REQUIRE(gsvb_problem_create(3, 1, &pb.p) == GSVB_OK);
  const size_t dup[] = {1, 1};
  const size_t out_of_range[] = {3};
  const double v[] = {0.0, 0.0};
  CHECK(gsvb_problem_set_snapshot(pb.p, 0, dup, v, 2) != GSVB_OK);
  CHECK(gsvb_problem_set_snapshot(pb.p, 0, out_of_range, v, 1) != GSVB_OK);
  CHECK(gsvb_problem_set_snapshot(pb.p, 1, dup, v, 1) == GSVB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(gsvb_last_error()).find("snapshot") != std::string::npos);
  const double not_laplacian[9] = {1, 1, 0, 1, 1, 0, 0, 0, 0};
  CHECK(gsvb_problem_set_initial_laplacian(pb.p, not_laplacian) != GSVB_OK);
  const unsigned char asym[9] = {0, 1, 0, 0, 0, 0, 0, 0, 0};
  CHECK(gsvb_problem_set_edge_support(pb.p, asym) == GSVB_ERR_INVALID_ARGUMENT);
  gsvb_vb_config cfg;
  gsvb_vb_config_default(&cfg);
  cfg.epsilon = -1.0;
  gsvb_result* r = nullptr;
  CHECK(gsvb_run(pb.p, &cfg, &r) != GSVB_OK);
  CHECK(r == nullptr);
  CHECK(gsvb_run(nullptr, &cfg, &r) == GSVB_ERR_INVALID_ARGUMENT);
  gsvb_problem_destroy(nullptr);
  gsvb_result_destroy(nullptr);
  gsvb_experiment_destroy(nullptr);
}

TEST_CASE("experiment handle") {
  const fs::path dir = fs::temp_directory_path() / "gsvb_c_api_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Experiment bad;
  CHECK(gsvb_experiment_from_json(R"({"sweep": []})", &bad.e) == GSVB_ERR_CONFIG);
  CHECK(std::string(gsvb_last_error()).find("sweep") != std::string::npos);
  CHECK(gsvb_experiment_load((dir / "missing.json").c_str(), &bad.e) == GSVB_ERR_IO);

  Experiment ex;
  REQUIRE(gsvb_experiment_from_json(
              R"({"kron_order": 2, "sweep": [6, 9], "omegas": [3], "K": 3, "seeds": [1],
                  "vb": {"max_iters": 4}})",
              &ex.e) == GSVB_OK);
  const uint64_t seeds[] = {7, 8};
  REQUIRE(gsvb_experiment_set_seeds(ex.e, seeds, 2) == GSVB_OK);
  CHECK(gsvb_experiment_set_seeds(ex.e, seeds, 0) == GSVB_ERR_INVALID_ARGUMENT);
  REQUIRE(gsvb_experiment_set_threads(ex.e, 2) == GSVB_OK);
  CHECK(gsvb_experiment_set_threads(ex.e, 0) == GSVB_ERR_INVALID_ARGUMENT);
  REQUIRE(gsvb_experiment_set_output_dir(ex.e, (dir / "out").c_str()) == GSVB_OK);
  size_t cells = 0;
  REQUIRE(gsvb_experiment_cell_count(ex.e, &cells) == GSVB_OK);
  CHECK(cells == 4);
  CHECK(gsvb_experiment_write_report(ex.e) == GSVB_ERR_INVALID_ARGUMENT);

  size_t failed = 99;
  REQUIRE(gsvb_experiment_run(ex.e, &failed) == GSVB_OK);
  CHECK(failed == 0);
  char buf[64] = "x";
  REQUIRE(gsvb_experiment_first_failure(ex.e, buf, sizeof buf) == GSVB_OK);
  CHECK(buf[0] == '\0');
  REQUIRE(gsvb_experiment_write_report(ex.e) == GSVB_OK);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(fs::exists(dir / "out" / "trace_M9_w3_K3_P0_s8.csv"));

  REQUIRE(gsvb_generate_synthetic((dir / "gen").c_str(), 2, 3, 5, 6.0, 11) == GSVB_OK);
  for (const char* f : {"adjacency.csv", "laplacian.csv", "clean.csv", "noisy.csv"})
    CHECK(fs::exists(dir / "gen" / f));
  CHECK(gsvb_generate_synthetic((dir / "gen").c_str(), 0, 3, 5, 6.0, 11) ==
        GSVB_ERR_INVALID_PARAMS);
  fs::remove_all(dir);
}
