// Command-line front end: design, baseline, evaluate, selftest.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <oedipus/pipeline.hpp>
#include <oedipus/selftest.hpp>

namespace {

template <typename F> int guarded(F &&f) {
  using namespace oedipus;
  try {
    return f();
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleDesign &e) {
    std::cerr << "infeasible acceleration: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const IoError &e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"k-space sampling design by greedy oracle-CRB minimisation"};
  app.require_subcommand(1);

  std::string config_path;
  auto *design = app.add_subcommand("design", "design sampling patterns for every channel setup and R");
  design->add_option("config", config_path, "JSON experiment config")->required();
  auto *baseline = app.add_subcommand("baseline", "write uniform, CAIPI and Poisson-disc baseline patterns");
  baseline->add_option("config", config_path, "JSON experiment config")->required();
  auto *evaluate = app.add_subcommand("evaluate", "reconstruct test phantoms and write the NRMSE report");
  evaluate->add_option("config", config_path, "JSON experiment config")->required();

  oedipus::SelftestOptions st;
  auto *selftest = app.add_subcommand("selftest", "run the built-in numerical checks");
  selftest->add_flag("--corrupt-wavelet", st.corrupt_wavelet, "perturb a wavelet filter tap (fault injection)");
  selftest->add_option("--draws", st.monte_carlo_draws, "Monte-Carlo draws for the covariance check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oedipus::kExitConfig;
  }

  if (*selftest)
    return guarded([&] { return oedipus::run_selftest(st, std::cout); });
  return guarded([&] {
    const auto config = oedipus::load_config(config_path);
    if (*design)
      return oedipus::run_design(config);
    if (*baseline)
      return oedipus::run_baseline(config);
    return oedipus::run_evaluate(config);
  });
}
