#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pattern.hpp"
#include "random.hpp"

namespace oedipus {

enum class BaselineKind { Uniform1D, Caipi2D, PoissonDisc };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::Uniform1D;
  double R = 2.0;
  Index center_block = 16; // lines (1D grouping) or block side (2D grouping)
  Index caipi_shift = 1;
  Index caipi_ry = 0; // 0: pick a factorisation of R automatically
  Index caipi_rz = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline Index integer_acceleration(double R) {
  const double r = std::round(R);
  if (std::abs(R - r) > 1e-9 || r < 1.0)
    throw InvalidArgument("lattice sampling needs a positive integer acceleration");
  return static_cast<Index>(r);
}

inline bool is_1d(const CandidateSet &cs) { return cs.undersampling != Undersampling::Both; }

// Group-grid coordinates: one axis for line groupings, (m1, m2) for 2D.
inline std::array<double, 2> group_position(const CandidateSet &cs, Index g) {
  if (is_1d(cs))
    return {static_cast<double>(g), 0.0};
  return {static_cast<double>(g / cs.kdims[1]), static_cast<double>(g % cs.kdims[1])};
}

inline std::vector<Index> center_groups(const CandidateSet &cs, Index block) {
  std::vector<Index> out;
  if (block <= 0)
    return out;
  if (is_1d(cs)) {
    const Index L = cs.L();
    const Index b = std::min(block, L);
    const Index lo = L / 2 - b / 2;
    for (Index g = lo; g < lo + b; ++g)
      out.push_back(g);
    return out;
  }
  const Index b1 = std::min(block, cs.kdims[0]);
  const Index b2 = std::min(block, cs.kdims[1]);
  const Index lo1 = cs.kdims[0] / 2 - b1 / 2;
  const Index lo2 = cs.kdims[1] / 2 - b2 / 2;
  for (Index m1 = lo1; m1 < lo1 + b1; ++m1)
    for (Index m2 = lo2; m2 < lo2 + b2; ++m2)
      out.push_back(m1 * cs.kdims[1] + m2);
  return out;
}

} // namespace detail

// Every R-th group starting at offset 0 (rows of the lattice for 2D grouping).
inline SamplingPattern uniform_pattern(const BaselineSpec &spec, const CandidateSet &cs) {
  if (!(spec.R >= 1.0))
    throw InvalidArgument("acceleration must be >= 1");
  if (!detail::is_1d(cs)) {
    const Index step = detail::integer_acceleration(spec.R);
    if (step > cs.kdims[0])
      throw InvalidArgument("acceleration exceeds the number of lines");
    std::vector<Index> kept;
    for (Index m1 = 0; m1 < cs.kdims[0]; m1 += step)
      for (Index m2 = 0; m2 < cs.kdims[1]; ++m2)
        kept.push_back(m1 * cs.kdims[1] + m2);
    return make_pattern(cs, kept, "uniform");
  }
  const Index L = cs.L();
  if (spec.R > static_cast<double>(L))
    throw InvalidArgument("acceleration exceeds the number of candidate groups");
  const Index M = std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(L) / spec.R)));
  std::vector<Index> kept;
  for (Index i = 0; i < M; ++i)
    kept.push_back(static_cast<Index>(std::llround(static_cast<double>(i) * static_cast<double>(L) /
                                                   static_cast<double>(M))));
  return make_pattern(cs, kept, "uniform");
}

// Sheared lattice over 2D-grouped locations: (m1, m2) is kept iff
// m1 = 0 mod Ry and m2 = (m1/Ry * shift) mod Rz.
inline SamplingPattern caipi_pattern(const BaselineSpec &spec, const CandidateSet &cs) {
  if (detail::is_1d(cs))
    throw InvalidArgument("CAIPI sampling needs 2D (per-location) grouping");
  const Index R = detail::integer_acceleration(spec.R);
  Index ry = spec.caipi_ry;
  Index rz = spec.caipi_rz;
  if (ry == 0 && rz == 0) {
    ry = 1;
    for (Index d = 1; d * d <= R; ++d)
      if (R % d == 0)
        ry = R / d;
    rz = R / ry;
  } else if (ry == 0) {
    ry = rz > 0 && R % rz == 0 ? R / rz : 0;
  } else if (rz == 0) {
    rz = R % ry == 0 ? R / ry : 0;
  }
  if (ry < 1 || rz < 1 || ry * rz != R)
    throw InvalidArgument("acceleration does not factor as Ry * Rz");
  if (ry > cs.kdims[0] || rz > cs.kdims[1])
    throw InvalidArgument("lattice spacing exceeds the grid");
  std::vector<Index> kept;
  for (Index m1 = 0; m1 < cs.kdims[0]; m1 += ry) {
    const Index offset = ((m1 / ry) * spec.caipi_shift) % rz;
    for (Index m2 = 0; m2 < cs.kdims[1]; ++m2)
      if (m2 % rz == (offset + rz) % rz)
        kept.push_back(m1 * cs.kdims[1] + m2);
  }
  return make_pattern(cs, kept, "caipi");
}

struct PoissonDiscSample {
  SamplingPattern pattern;
  double radius = 0.0;
  std::vector<Index> outer; // accepted groups outside the centre block
};

// Constant-density Poisson-disc sampling with a fully sampled centre. The
// minimum-distance radius is bisected until the kept count lands within
// max(1, 1% of target) above target_M; the surplus latest darts are then
// dropped so every pattern has exactly target_M groups.
inline PoissonDiscSample poisson_disc(const BaselineSpec &spec, const CandidateSet &cs, Index target_M) {
  const Index L = cs.L();
  const auto centre = detail::center_groups(cs, spec.center_block);
  const Index n_centre = static_cast<Index>(centre.size());
  if (target_M < n_centre || target_M > L)
    throw InvalidArgument("target count must lie between the centre block size and L");
  std::vector<bool> in_centre(static_cast<std::size_t>(L), false);
  for (Index g : centre)
    in_centre[static_cast<std::size_t>(g)] = true;

  std::vector<Index> order;
  for (Index g = 0; g < L; ++g)
    if (!in_centre[static_cast<std::size_t>(g)])
      order.push_back(g);
  Rng rng(spec.seed);
  rng.shuffle(order.begin(), order.end());

  auto throw_darts = [&](double radius) {
    std::vector<Index> accepted;
    const double r2 = radius * radius;
    for (Index g : order) {
      const auto pg = detail::group_position(cs, g);
      bool ok = true;
      for (Index a : accepted) {
        const auto pa = detail::group_position(cs, a);
        const double dx = pg[0] - pa[0];
        const double dy = pg[1] - pa[1];
        if (dx * dx + dy * dy < r2) {
          ok = false;
          break;
        }
      }
      if (ok)
        accepted.push_back(g);
    }
    return accepted;
  };
  auto finish = [&](std::vector<Index> outer, double radius) {
    std::vector<Index> kept = centre;
    kept.insert(kept.end(), outer.begin(), outer.end());
    PoissonDiscSample out{make_pattern(cs, kept, "poisson"), radius, std::move(outer)};
    return out;
  };

  if (target_M == L)
    return finish(order, 0.0);
  const double tol = std::max(1.0, 0.01 * static_cast<double>(target_M));
  const double target = static_cast<double>(target_M);
  double lo = 0.0;
  double hi = std::hypot(static_cast<double>(cs.kdims[0]), static_cast<double>(cs.kdims[1])) + 1.0;
  std::vector<Index> lo_set = order; // radius 0 accepts everything
  if (static_cast<double>(n_centre + static_cast<Index>(lo_set.size())) < target - tol)
    throw GenerationFailure("Poisson-disc target is unreachable");
  for (int step = 0; step < 50; ++step) {
    const double mid = 0.5 * (lo + hi);
    auto accepted = throw_darts(mid);
    const double count = static_cast<double>(n_centre + static_cast<Index>(accepted.size()));
    if (count >= target && count - target <= tol) {
      accepted.resize(static_cast<std::size_t>(target_M - n_centre));
      return finish(std::move(accepted), mid);
    }
    if (count > target) {
      lo = mid;
      lo_set = std::move(accepted);
    } else {
      hi = mid;
    }
  }
  // The count jumps across the tolerance window at some radius (typical on
  // coarse 1D lattices). Thin the densest feasible set in reverse acceptance
  // order; dropping samples never decreases the minimum distance.
  if (static_cast<double>(n_centre + static_cast<Index>(lo_set.size())) < target)
    throw GenerationFailure("Poisson-disc radius bisection did not reach the target count");
  lo_set.resize(static_cast<std::size_t>(target_M - n_centre));
  return finish(std::move(lo_set), lo);
}

inline SamplingPattern poisson_disc_pattern(const BaselineSpec &spec, const CandidateSet &cs, Index target_M) {
  return poisson_disc(spec, cs, target_M).pattern;
}

struct BestRealization {
  SamplingPattern pattern;
  std::uint64_t seed = 0;
  double score = 0.0;
  std::vector<double> scores; // per spec, in input order
};

// Scores each seeded realization and keeps the minimum; ties go to the lower seed.
inline BestRealization best_of_realizations(const std::vector<BaselineSpec> &specs, const CandidateSet &cs,
                                            Index target_M,
                                            const std::function<double(const SamplingPattern &)> &scorer) {
  if (specs.empty())
    throw InvalidArgument("need at least one realization");
  BestRealization best;
  best.score = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto &spec : specs) {
    SamplingPattern p = poisson_disc_pattern(spec, cs, target_M);
    const double s = scorer(p);
    best.scores.push_back(s);
    if (!std::isfinite(s))
      continue;
    if (!found || s < best.score || (s == best.score && spec.seed < best.seed)) {
      best.pattern = std::move(p);
      best.seed = spec.seed;
      best.score = s;
      found = true;
    }
  }
  if (!found)
    throw GenerationFailure("every realization scored +infinity");
  return best;
}

} // namespace oedipus
