#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "encoding.hpp"
#include "random.hpp"

namespace oedipus {

// Normalised coordinates: x runs along dim 2, y along dim 1 (pointing up),
// both spanning [-1, 1) across the field of view.
struct Ellipse {
  std::array<double, 2> center{0.0, 0.0};
  std::array<double, 2> axes{0.5, 0.5};
  double angle = 0.0; // radians
  double intensity = 1.0;
};

enum class PhaseKind { None, LinearRamp, SmoothPolynomial };

struct PhantomSpec {
  ImageGrid grid{{64, 64}, {1.0, 1.0}};
  std::vector<Ellipse> ellipses;
  PhaseKind phase = PhaseKind::SmoothPolynomial;
  // x, y, x^2, xy, y^2 (radians); LinearRamp uses the first two.
  std::array<double, 5> phase_coefficients{0.6, -0.4, 0.5, 0.3, -0.5};
  std::uint64_t perturbation_seed = 0;
  double jitter = 0.005; // relative size of the per-seed parameter perturbation
  double texture = 0.0;  // amplitude of a smooth multiplicative random field
  Index supersampling = 4;
};

// Modified Shepp-Logan head (Toft's contrast-enhanced intensities).
inline std::vector<Ellipse> shepp_logan_ellipses() {
  const double deg = std::numbers::pi / 180.0;
  return {
      {{0.0, 0.0}, {0.69, 0.92}, 0.0, 1.0},
      {{0.0, -0.0184}, {0.6624, 0.874}, 0.0, -0.8},
      {{0.22, 0.0}, {0.11, 0.31}, -18.0 * deg, -0.2},
      {{-0.22, 0.0}, {0.16, 0.41}, 18.0 * deg, -0.2},
      {{0.0, 0.35}, {0.21, 0.25}, 0.0, 0.1},
      {{0.0, 0.1}, {0.046, 0.046}, 0.0, 0.1},
      {{0.0, -0.1}, {0.046, 0.046}, 0.0, 0.1},
      {{-0.08, -0.605}, {0.046, 0.023}, 0.0, 0.1},
      {{0.0, -0.606}, {0.023, 0.023}, 0.0, 0.1},
      {{0.06, -0.605}, {0.023, 0.046}, 0.0, 0.1},
  };
}

inline PhantomSpec default_phantom_spec(std::array<Index, 2> dims = {64, 64}, std::uint64_t seed = 0) {
  PhantomSpec spec;
  spec.grid.dims = dims;
  spec.ellipses = shepp_logan_ellipses();
  spec.perturbation_seed = seed;
  return spec;
}

inline std::string to_string(PhaseKind p) {
  switch (p) {
  case PhaseKind::None:
    return "none";
  case PhaseKind::LinearRamp:
    return "linear";
  default:
    return "smooth";
  }
}

inline PhaseKind phase_kind_from_string(const std::string &s) {
  if (s == "none")
    return PhaseKind::None;
  if (s == "linear")
    return PhaseKind::LinearRamp;
  if (s == "smooth")
    return PhaseKind::SmoothPolynomial;
  throw InvalidArgument("unknown phase kind: " + s);
}

inline void validate(const PhantomSpec &spec) {
  validate(spec.grid);
  if (spec.ellipses.empty())
    throw InvalidArgument("a phantom needs at least one ellipse");
  for (const auto &e : spec.ellipses)
    if (!(e.axes[0] > 0.0) || !(e.axes[1] > 0.0))
      throw InvalidArgument("ellipse axes must be positive");
  if (!(spec.jitter >= 0.0) || !(spec.texture >= 0.0))
    throw InvalidArgument("jitter and texture must be non-negative");
  if (spec.supersampling < 1)
    throw InvalidArgument("supersampling must be >= 1");
}

// Additive ellipse composition, box-filtered over supersampling^2 points per
// voxel, clamped to [0, 1] and multiplied by a smooth phase map.
inline CVec render_phantom(const PhantomSpec &spec) {
  validate(spec);
  Rng rng(spec.perturbation_seed);
  const double j = spec.jitter;
  std::vector<Ellipse> ellipses = spec.ellipses;
  for (auto &e : ellipses) {
    e.center[0] += j * rng.uniform(-1.0, 1.0) * e.axes[0];
    e.center[1] += j * rng.uniform(-1.0, 1.0) * e.axes[1];
    e.axes[0] *= 1.0 + j * rng.uniform(-1.0, 1.0);
    e.axes[1] *= 1.0 + j * rng.uniform(-1.0, 1.0);
    e.angle += j * rng.uniform(-1.0, 1.0);
    e.intensity *= 1.0 + j * rng.uniform(-1.0, 1.0);
  }
  auto phase = spec.phase_coefficients;
  for (auto &c : phase)
    c *= 1.0 + j * rng.uniform(-1.0, 1.0);

  struct Wave {
    double fx, fy, offset;
  };
  std::vector<Wave> waves;
  if (spec.texture > 0.0)
    for (int i = 0; i < 6; ++i)
      waves.push_back({rng.uniform(0.5, 3.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0), rng.uniform(0.5, 3.0),
                       rng.uniform(0.0, 2.0 * std::numbers::pi)});

  const Index N1 = spec.grid.dims[0], N2 = spec.grid.dims[1];
  const Index ss = spec.supersampling;
  CVec out(N1 * N2);
  for (Index a = 0; a < N1; ++a)
    for (Index b = 0; b < N2; ++b) {
      const double x0 = (static_cast<double>(b) - static_cast<double>(N2 / 2)) / (0.5 * static_cast<double>(N2));
      const double y0 = -(static_cast<double>(a) - static_cast<double>(N1 / 2)) / (0.5 * static_cast<double>(N1));
      double acc = 0.0;
      for (Index sa = 0; sa < ss; ++sa)
        for (Index sb = 0; sb < ss; ++sb) {
          const double dy = ((static_cast<double>(sa) + 0.5) / static_cast<double>(ss) - 0.5) * 2.0 /
                            static_cast<double>(N1);
          const double dx = ((static_cast<double>(sb) + 0.5) / static_cast<double>(ss) - 0.5) * 2.0 /
                            static_cast<double>(N2);
          const double x = x0 + dx, y = y0 - dy;
          for (const auto &e : ellipses) {
            const double px = x - e.center[0], py = y - e.center[1];
            const double c = std::cos(e.angle), s = std::sin(e.angle);
            const double ru = (px * c + py * s) / e.axes[0];
            const double rv = (-px * s + py * c) / e.axes[1];
            if (ru * ru + rv * rv <= 1.0)
              acc += e.intensity;
          }
        }
      double mag = acc / static_cast<double>(ss * ss);
      if (!waves.empty() && mag > 0.0) {
        double field = 0.0;
        for (const auto &w : waves)
          field += std::cos(std::numbers::pi * (w.fx * x0 + w.fy * y0) + w.offset);
        mag *= 1.0 + spec.texture * field / static_cast<double>(waves.size());
      }
      mag = std::clamp(mag, 0.0, 1.0);
      double phi = 0.0;
      if (spec.phase == PhaseKind::LinearRamp)
        phi = phase[0] * x0 + phase[1] * y0;
      else if (spec.phase == PhaseKind::SmoothPolynomial)
        phi = phase[0] * x0 + phase[1] * y0 + phase[2] * x0 * x0 + phase[3] * x0 * y0 + phase[4] * y0 * y0;
      out(a * N2 + b) = std::polar(mag, phi);
    }
  return out;
}

} // namespace oedipus
