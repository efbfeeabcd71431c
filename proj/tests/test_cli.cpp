#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <oedipus/pipeline.hpp>

using namespace oedipus;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run_cli(const std::string &args) {
  const auto log = fs::temp_directory_path() / "oedipus_cli_test.log";
  const std::string cmd = std::string(OEDIPUS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(log.string())};
}

fs::path workdir(const std::string &name) {
  const auto dir = fs::temp_directory_path() / "oedipus_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 16 x 16 experiment that designs and evaluates in seconds.
nlohmann::json small_config(const fs::path &out) {
  auto j = nlohmann::json::parse(R"({
    "name": "small",
    "grid": [16, 16],
    "undersampling": "both",
    "channels": [{"name": "sco"}],
    "exemplar_seeds": [0],
    "test_seeds": [1, 2],
    "R": [2],
    "baselines": {"uniform": true, "poisson": {"realizations": 3, "center_block": 4, "seed": 40}},
    "recon": {"max_iters": 10}
  })");
  j["output"] = out.string();
  return j;
}

std::string write_config(const fs::path &dir, const nlohmann::json &j) {
  const auto path = dir / "config.json";
  write_text(path.string(), j.dump(2));
  return path.string();
}

std::vector<std::vector<std::string>> csv_rows(const std::string &text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

} // namespace

TEST(Cli, SelftestPasses) {
  const auto r = run_cli("selftest");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos) << r.output;
}

TEST(Cli, CorruptedWaveletFailsSelftest) {
  const auto r = run_cli("selftest --corrupt-wavelet");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find("FAIL"), std::string::npos) << r.output;
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = workdir("config_errors");
  EXPECT_EQ(run_cli("design " + (dir / "absent.json").string()).code, kExitConfig);
  write_text((dir / "broken.json").string(), "{\"grid\": [16,");
  EXPECT_EQ(run_cli("design " + (dir / "broken.json").string()).code, kExitConfig);
  EXPECT_EQ(run_cli("frobnicate").code, kExitConfig);
}

TEST(Cli, TinyBudgetWithLargeSupportExitsThree) {
  const auto dir = workdir("infeasible");
  auto j = small_config(dir / "out");
  j["fraction"] = 1.0;
  j["R"] = {4};
  const auto r = run_cli("design " + write_config(dir, j));
  EXPECT_EQ(r.code, kExitInfeasible);
  EXPECT_NE(r.output.find("infeasible acceleration"), std::string::npos) << r.output;
  const auto manifest = nlohmann::json::parse(read_text((dir / "out" / "patterns" / "manifest.json").string()));
  EXPECT_EQ(manifest.at("patterns").at(0).at("status"), "infeasible");
}

TEST(Cli, EvaluateWithoutPatternsExitsFour) {
  const auto dir = workdir("missing_patterns");
  EXPECT_EQ(run_cli("evaluate " + write_config(dir, small_config(dir / "out"))).code, kExitIo);
}

TEST(Cli, DesignAndEvaluateAreDeterministic) {
  const auto dir = workdir("determinism");
  std::string json[2], csv[2];
  for (int rep = 0; rep < 2; ++rep) {
    const auto out = dir / ("out" + std::to_string(rep));
    const auto cfg = write_config(dir, small_config(out));
    ASSERT_EQ(run_cli("design " + cfg).code, 0);
    ASSERT_EQ(run_cli("evaluate " + cfg).code, 0);
    json[rep] = read_text((out / "patterns" / "sco_R2.json").string());
    csv[rep] = read_text((out / "report.csv").string());
  }
  EXPECT_EQ(json[0], json[1]);
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(csv[0].rfind("# oedipus-report v1", 0), 0u);

  // 3 patterns (designed, uniform, Poisson) x 1 R x 2 regularizers per phantom
  const auto rows = csv_rows(csv[0]);
  ASSERT_EQ(rows.size(), 1u + 2u * 3u * 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"pattern_id", "realization", "phantom", "R", "channels", "regularizer",
                                               "lambda", "iters", "nrmse", "crb"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 10u);
    EXPECT_EQ(rows[i][1] != "-", rows[i][0] == "poisson");
  }
  EXPECT_TRUE(fs::exists(dir / "out0" / "patterns" / "sco_R2.pgm"));
  EXPECT_TRUE(fs::exists(dir / "out0" / "patterns" / "sco_R2_log.csv"));
  EXPECT_TRUE(fs::exists(dir / "out0" / "recon" / "gold_p1.pgm"));
}

TEST(Cli, PoissonRowIsBestOfItsRealizations) {
  const auto dir = workdir("best_of");
  const auto cfg_path = write_config(dir, small_config(dir / "out"));
  ASSERT_EQ(run_cli("design " + cfg_path).code, 0);
  ASSERT_EQ(run_cli("evaluate " + cfg_path).code, 0);
  const auto c = load_config(cfg_path);
  const auto model = channel_model(c, c.channels[0]);
  const CVec gold = render_phantom(phantom_for_seed(c, 2));
  EXPECT_EQ(nrmse(gold, gold), 0.0);

  for (const auto &row : csv_rows(read_text((dir / "out" / "report.csv").string()))) {
    if (row[0] != "poisson" || row[2] != "2" || row[5] != "tv")
      continue;
    double best = std::numeric_limits<double>::infinity();
    std::string best_seed;
    for (const auto &spec : poisson_specs(c, 2.0)) {
      const auto p = poisson_disc_pattern(spec, model.candidates, target_group_count(2.0, model.candidates.L()));
      const CVec d = retrospective_undersample(gold, p, model, 0, c.recon.noise_sigma, noise_seed(c, 2, 0));
      const double e = nrmse(irls_solve(make_recon_problem(c, model, p, RegularizerKind::TV, d)).image, gold);
      if (e < best) {
        best = e;
        best_seed = std::to_string(spec.seed);
      }
    }
    EXPECT_EQ(row[1], best_seed);
    EXPECT_EQ(row[8], format_double(best));
    return;
  }
  FAIL() << "no Poisson-disc row found";
}

TEST(Cli, FullSizeDesignKeepsHalfTheLocations) {
  // 64 x 64, R = 2, one unit coil, per-location grouping. A small support
  // fraction keeps the run short; the budget arithmetic does not depend on it.
  const auto dir = workdir("budget");
  auto j = small_config(dir / "out");
  j["grid"] = {64, 64};
  j["fraction"] = 0.01;
  ASSERT_EQ(run_cli("design " + write_config(dir, j)).code, 0);
  const auto pj = nlohmann::json::parse(read_text((dir / "out" / "patterns" / "sco_R2.json").string()));
  EXPECT_EQ(pj.at("kept_groups").size(), 2048u);
  const auto mask = run_length_decode(pj.at("mask").get<std::vector<Index>>());
  EXPECT_EQ(std::count(mask.begin(), mask.end(), 1), 2048);
}
