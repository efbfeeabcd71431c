#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "design.hpp"
#include "encoding.hpp"
#include "phantom.hpp"
#include "recon.hpp"
#include "sparsity.hpp"

namespace oedipus {

// One receive-channel configuration. A single coil uses the unit map; larger
// arrays draw one coil map set per seed (T = coil_seeds.size()).
struct ChannelConfig {
  std::string name;
  Index coils = 1;
  std::vector<std::uint64_t> coil_seeds{0};
  double decay = 1.5;
};

struct PoissonConfig {
  bool enabled = true;
  Index realizations = 10;
  Index center_block = 16;
  std::uint64_t seed = 1000; // realization r uses seed + r
};

struct ReconConfig {
  std::vector<RegularizerKind> regularizers{RegularizerKind::WaveletL1, RegularizerKind::TV};
  double lambda = 0.01;
  Index max_iters = 50;
  double tol = 1e-6;
  Index cg_max_iters = 200;
  double cg_tol = 1e-6;
  double noise_sigma = 0.0;
  bool write_images = true;
};

struct RunConfig {
  std::string name = "experiment";
  ImageGrid grid{{64, 64}, {1.0, 1.0}};
  VoxelBasis basis = VoxelBasis::Dirac;
  double oversampling = 1.0;
  Undersampling undersampling = Undersampling::Both;
  std::vector<ChannelConfig> channels;
  PhantomSpec phantom; // template; seeds replace perturbation_seed
  std::vector<std::uint64_t> exemplar_seeds{0};
  std::vector<std::uint64_t> test_seeds{1};
  TransformSpec transform;
  double fraction = 0.15;
  std::vector<double> R{2.0};
  ObjectiveMode objective = ObjectiveMode::AverageCase;
  bool uniform_baseline = true;
  bool caipi_baseline = false;
  Index caipi_shift = 1;
  PoissonConfig poisson;
  ReconConfig recon;
  std::string output_dir = "out";
  std::uint64_t seed = 0; // noise draws
  Index refresh_period = 32;
};

namespace detail {

template <typename T> T get_or(const nlohmann::json &j, const char *key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline std::vector<Ellipse> ellipses_from_json(const nlohmann::json &j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "shepp-logan")
      throw InvalidArgument("unknown ellipse preset: " + j.get<std::string>());
    return shepp_logan_ellipses();
  }
  std::vector<Ellipse> out;
  for (const auto &e : j) {
    Ellipse el;
    el.center = e.at("center").get<std::array<double, 2>>();
    el.axes = e.at("axes").get<std::array<double, 2>>();
    el.angle = get_or(e, "angle", 0.0);
    el.intensity = e.at("intensity").get<double>();
    out.push_back(el);
  }
  return out;
}

} // namespace detail

inline PhantomSpec phantom_from_json(const nlohmann::json &j, const ImageGrid &grid) {
  PhantomSpec spec = default_phantom_spec(grid.dims);
  spec.grid = grid;
  if (j.contains("ellipses"))
    spec.ellipses = detail::ellipses_from_json(j.at("ellipses"));
  if (j.contains("phase"))
    spec.phase = phase_kind_from_string(j.at("phase").get<std::string>());
  if (j.contains("phase_coefficients"))
    spec.phase_coefficients = j.at("phase_coefficients").get<std::array<double, 5>>();
  spec.jitter = detail::get_or(j, "jitter", spec.jitter);
  spec.texture = detail::get_or(j, "texture", spec.texture);
  spec.supersampling = detail::get_or(j, "supersampling", spec.supersampling);
  spec.perturbation_seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  return spec;
}

inline void validate(const RunConfig &c) {
  validate(c.grid);
  validate_transform(c.grid.dims, c.transform);
  if (c.channels.empty())
    throw InvalidArgument("at least one channel configuration is required");
  for (const auto &ch : c.channels) {
    if (ch.name.empty() || ch.coils < 1 || ch.coil_seeds.empty())
      throw InvalidArgument("channel '" + ch.name + "' needs a name, coils >= 1 and at least one coil seed");
    if (ch.name.find_first_of("/\\ ,") != std::string::npos)
      throw InvalidArgument("channel names may not contain separators or spaces");
  }
  for (std::size_t i = 0; i < c.channels.size(); ++i)
    for (std::size_t j = i + 1; j < c.channels.size(); ++j)
      if (c.channels[i].name == c.channels[j].name)
        throw InvalidArgument("duplicate channel name: " + c.channels[i].name);
  if (c.R.empty())
    throw InvalidArgument("the R list must not be empty");
  for (double r : c.R)
    if (!(r >= 1.0))
      throw InvalidArgument("every acceleration must be >= 1");
  if (c.exemplar_seeds.empty())
    throw InvalidArgument("at least one exemplar seed is required");
  if (!(c.fraction > 0.0) || c.fraction > 1.0)
    throw InvalidArgument("support fraction must be in (0, 1]");
  if (c.poisson.enabled && c.poisson.realizations < 1)
    throw InvalidArgument("Poisson-disc realizations must be >= 1");
  if (c.recon.regularizers.empty())
    throw InvalidArgument("at least one regularizer is required");
  validate(c.phantom);
}

inline RunConfig config_from_json(const nlohmann::json &j) {
  using detail::get_or;
  RunConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  c.grid.dims = j.at("grid").get<std::array<Index, 2>>();
  c.grid.fov = get_or(j, "fov", c.grid.fov);
  const std::string basis = get_or<std::string>(j, "basis", "dirac");
  if (basis == "dirac")
    c.basis = VoxelBasis::Dirac;
  else if (basis == "rect")
    c.basis = VoxelBasis::Rect;
  else
    throw InvalidArgument("unknown voxel basis: " + basis);
  c.oversampling = get_or(j, "oversampling", c.oversampling);
  c.undersampling = undersampling_from_string(get_or<std::string>(j, "undersampling", "both"));
  for (const auto &ch : j.at("channels")) {
    ChannelConfig cc;
    cc.name = ch.at("name").get<std::string>();
    cc.coils = get_or(ch, "coils", cc.coils);
    cc.coil_seeds = get_or(ch, "coil_seeds", cc.coil_seeds);
    cc.decay = get_or(ch, "decay", cc.decay);
    c.channels.push_back(cc);
  }
  c.phantom = phantom_from_json(get_or(j, "phantom", nlohmann::json::object()), c.grid);
  c.exemplar_seeds = get_or(j, "exemplar_seeds", c.exemplar_seeds);
  c.test_seeds = get_or(j, "test_seeds", c.test_seeds);
  if (j.contains("wavelet")) {
    const auto &w = j.at("wavelet");
    c.transform.family = wavelet_family_from_string(get_or<std::string>(w, "family", "daubechies4"));
    c.transform.levels = get_or(w, "levels", c.transform.levels);
  }
  c.fraction = get_or(j, "fraction", c.fraction);
  c.R = get_or(j, "R", c.R);
  c.objective = objective_mode_from_string(get_or<std::string>(j, "objective", "average"));
  c.refresh_period = get_or(j, "refresh_period", c.refresh_period);
  if (j.contains("baselines")) {
    const auto &b = j.at("baselines");
    c.uniform_baseline = get_or(b, "uniform", c.uniform_baseline);
    c.caipi_baseline = get_or(b, "caipi", c.caipi_baseline);
    c.caipi_shift = get_or(b, "caipi_shift", c.caipi_shift);
    if (b.contains("poisson")) {
      const auto &p = b.at("poisson");
      if (p.is_boolean()) {
        c.poisson.enabled = p.get<bool>();
      } else {
        c.poisson.enabled = get_or(p, "enabled", true);
        c.poisson.realizations = get_or(p, "realizations", c.poisson.realizations);
        c.poisson.center_block = get_or(p, "center_block", c.poisson.center_block);
        c.poisson.seed = get_or(p, "seed", c.poisson.seed);
      }
    }
  }
  if (j.contains("recon")) {
    const auto &r = j.at("recon");
    if (r.contains("regularizers")) {
      c.recon.regularizers.clear();
      for (const auto &s : r.at("regularizers"))
        c.recon.regularizers.push_back(regularizer_from_string(s.get<std::string>()));
    }
    c.recon.lambda = get_or(r, "lambda", c.recon.lambda);
    c.recon.max_iters = get_or(r, "max_iters", c.recon.max_iters);
    c.recon.tol = get_or(r, "tol", c.recon.tol);
    c.recon.cg_max_iters = get_or(r, "cg_max_iters", c.recon.cg_max_iters);
    c.recon.cg_tol = get_or(r, "cg_tol", c.recon.cg_tol);
    c.recon.noise_sigma = get_or(r, "noise_sigma", c.recon.noise_sigma);
    c.recon.write_images = get_or(r, "write_images", c.recon.write_images);
  }
  c.output_dir = get_or<std::string>(j, "output", c.output_dir);
  c.seed = get_or(j, "seed", c.seed);
  validate(c);
  return c;
}

// Parse and semantic errors both surface as ConfigError.
inline RunConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config " + path);
  try {
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const InvalidArgument &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

} // namespace oedipus
