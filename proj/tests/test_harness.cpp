#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vsa/errors.hpp"
#include "vsa/harness.hpp"

using namespace vsa;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scenefactor_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TrialRecord record(const std::string& label, EncodingMode enc, int trial, double correct,
                   int iterations, bool converged, double conf) {
  TrialRecord r;
  r.sweep_label = label;
  r.encoding = enc;
  r.trial = trial;
  r.correct = correct;
  r.iterations = iterations;
  r.converged = converged;
  r.final_confidences = {conf, conf, conf};
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("summarize: accuracy, nearest-rank quartiles, confidence split") {
  std::vector<TrialRecord> records;
  for (int i = 0; i < 5; ++i) {
    records.push_back(record("K=5", EncodingMode::kSparse, i, 1.0, i + 1, true, 0.8));
  }
  const auto rows = summarize(records);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].accuracy == 1.0);
  CHECK(rows[0].iterations_median == 3);
  CHECK(rows[0].iterations_q25 == 2);
  CHECK(rows[0].iterations_q75 == 4);
  CHECK(rows[0].convergence_rate == 1.0);
  CHECK(rows[0].n_incorrect == 0);
  CHECK(rows[0].mean_conf_incorrect == 0.0);

  records.push_back(record("K=5", EncodingMode::kSparse, 5, 0.0, 10, false, 0.2));
  records.push_back(record("K=5", EncodingMode::kSparse, 6, 0.0, 12, false, 0.4));
  const auto mixed = summarize(records);
  REQUIRE(mixed.size() == 1);
  CHECK(mixed[0].mean_conf_correct == doctest::Approx(0.8));
  CHECK(mixed[0].mean_conf_incorrect == doctest::Approx(0.3));
  CHECK(mixed[0].n_correct == 5);
  CHECK(mixed[0].n_incorrect == 2);

  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("summarize groups by sweep label and encoding in first-appearance order") {
  std::vector<TrialRecord> records;
  records.push_back(record("K=5", EncodingMode::kSparse, 0, 1.0, 2, true, 0.9));
  records.push_back(record("K=5", EncodingMode::kPixel, 0, 0.0, 7, false, 0.1));
  records.push_back(record("K=10", EncodingMode::kSparse, 0, 1.0, 3, true, 0.9));
  const auto rows = summarize(records);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].sweep_label == "K=5");
  CHECK(rows[0].encoding == EncodingMode::kSparse);
  CHECK(rows[1].sweep_label == "K=5");
  CHECK(rows[1].encoding == EncodingMode::kPixel);
  CHECK(rows[2].sweep_label == "K=10");
}

TEST_CASE("config defaults, file parsing and env override") {
  const ExperimentConfig bars = default_config(ExperimentKind::kBarsScaling);
  CHECK(bars.dim == 2500);
  CHECK(bars.side == 100);
  CHECK(bars.sweep == std::vector<int>{5, 15, 30, 50});
  CHECK(bars.stopping.max_iters == 100);

  const ExperimentConfig mnist = default_config(ExperimentKind::kMnistScaling);
  CHECK(mnist.dim == 5000);
  CHECK(mnist.sweep == std::vector<int>{60, 120});
  CHECK(mnist.stopping.epsilon == doctest::Approx(0.05));
  CHECK(mnist.stopping.max_iters == 20);

  const fs::path dir = temp_dir("config");
  {
    std::ofstream out(dir / "exp.cfg");
    out << "# comment\n";
    out << "kind=bars_scaling\n";
    out << "sweep=3,7\n";
    out << "trials=9\n";
    out << "seed=1234\n";
    out << "encodings=sparse\n";
    out << "dim=600\n";
  }
  unsetenv("RESONATOR_SEED");
  const ExperimentConfig cfg = load_config_file(dir / "exp.cfg");
  CHECK(cfg.kind == ExperimentKind::kBarsScaling);
  CHECK(cfg.sweep == std::vector<int>{3, 7});
  CHECK(cfg.trials == 9);
  CHECK(cfg.seed == 1234);
  CHECK(cfg.dim == 600);
  CHECK(cfg.encodings.size() == 1);

  setenv("RESONATOR_SEED", "777", 1);
  const ExperimentConfig overridden = load_config_file(dir / "exp.cfg");
  CHECK(overridden.seed == 777);
  unsetenv("RESONATOR_SEED");

  {
    std::ofstream out(dir / "bad.cfg");
    out << "kind=bars_scaling\nwat=1\n";
  }
  CHECK_THROWS_AS(load_config_file(dir / "bad.cfg"), ConfigError);
  {
    std::ofstream out(dir / "nokind.cfg");
    out << "trials=5\n";
  }
  CHECK_THROWS_AS(load_config_file(dir / "nokind.cfg"), ConfigError);
}

TEST_CASE("config validation rejects nonsense") {
  ExperimentConfig cfg = default_config(ExperimentKind::kBarsScaling);
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::kBarsScaling);
  cfg.sweep.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::kBarsScaling);
  cfg.encodings.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("bars experiment: row accounting and byte-identical replay") {
  const fs::path dir = temp_dir("replay");
  ExperimentConfig cfg = default_config(ExperimentKind::kBarsScaling);
  cfg.dim = 400;
  cfg.side = 20;
  cfg.sweep = {3};
  cfg.trials = 4;
  cfg.seed = 99;
  cfg.stopping.max_iters = 30;
  cfg.threads = 2;

  cfg.output_path = (dir / "run1").string();
  const ExperimentOutput out1 = run_experiment(cfg);
  cfg.output_path = (dir / "run2").string();
  const ExperimentOutput out2 = run_experiment(cfg);

  CHECK(out1.records.size() == 1 * 2 * 4);  // sweeps x encodings x trials
  CHECK(slurp(dir / "run1.csv") == slurp(dir / "run2.csv"));
  CHECK(slurp(dir / "run1_summary.csv") == slurp(dir / "run2_summary.csv"));
  CHECK(!slurp(dir / "run1.csv").empty());

  // Different seed changes the outcome stream.
  cfg.seed = 100;
  cfg.output_path = (dir / "run3").string();
  (void)run_experiment(cfg);
  CHECK(slurp(dir / "run1.csv") != slurp(dir / "run3.csv"));
}

TEST_CASE("multi_object experiment at toy scale") {
  ExperimentConfig cfg = default_config(ExperimentKind::kMultiObject);
  cfg.dim = 500;
  cfg.side = 24;
  cfg.sweep = {1, 2};
  cfg.class_count = 4;
  cfg.trials = 3;
  cfg.seed = 7;
  cfg.stopping.max_iters = 40;
  const ExperimentOutput out = run_experiment(cfg);
  CHECK(out.records.size() == 2 * 2 * 3);
  for (const auto& r : out.records) {
    CHECK(r.correct >= 0.0);
    CHECK(r.correct <= 1.0);
  }
  // m=1 rows carry graded values in {0, 1}.
  for (const auto& r : out.records) {
    if (r.sweep_label == "m=1") {
      CHECK((r.correct == 0.0 || r.correct == 1.0));
    }
  }
}

TEST_SUITE_END();
