#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "crb.hpp"
#include "parallel.hpp"
#include "pattern.hpp"

namespace oedipus {

enum class ObjectiveMode { AverageCase, WorstCase };

struct DesignObjective {
  ObjectiveMode mode = ObjectiveMode::AverageCase;

  // Sum (average case) or max (worst case) over the (k, t) traces; any
  // infinite trace makes the whole objective infinite.
  double combine(const std::vector<double> &traces) const {
    double acc = 0.0;
    for (double v : traces) {
      if (!std::isfinite(v))
        return std::numeric_limits<double>::infinity();
      acc = mode == ObjectiveMode::AverageCase ? acc + v : std::max(acc, v);
    }
    return acc;
  }
};

inline std::string to_string(ObjectiveMode m) { return m == ObjectiveMode::WorstCase ? "worst" : "average"; }

inline ObjectiveMode objective_mode_from_string(const std::string &s) {
  if (s == "average")
    return ObjectiveMode::AverageCase;
  if (s == "worst")
    return ObjectiveMode::WorstCase;
  throw InvalidArgument("unknown objective mode: " + s);
}

// One greedy deletion as seen by an observer. costs[l] is the objective after
// removing group l (NaN for groups already deleted, +inf for mandatory ones).
struct SbsStep {
  Index iteration = 0;
  std::vector<double> costs;
  Index chosen = -1;
  double objective = 0.0;
};

struct SbsOptions {
  enum class Update { Recursive, FromScratch };
  Update update = Update::Recursive;
  // Recompute the cached B~ C^full products from scratch every this many deletions.
  Index refresh_period = 32;
  // Costs within this relative distance of the minimum count as ties; the
  // lowest group index wins.
  double tie_tolerance = 1e-9;
  std::function<void(const SbsStep &)> observer;
};

// Picks the lowest index among (near-)minimal finite costs; -1 if none.
inline Index select_group(const std::vector<double> &costs, double tie_tolerance) {
  double best = std::numeric_limits<double>::infinity();
  for (double c : costs)
    if (std::isfinite(c))
      best = std::min(best, c);
  if (!std::isfinite(best))
    return -1;
  const double cutoff = best + tie_tolerance * std::abs(best);
  for (std::size_t l = 0; l < costs.size(); ++l)
    if (std::isfinite(costs[l]) && costs[l] <= cutoff)
      return static_cast<Index>(l);
  return -1;
}

namespace detail {

// Support-restricted candidate rows and CRB state for one (k, t) pair.
struct EnsembleMember {
  Index k = 0;
  Index t = 0;
  CRowMat rows;    // P x S, group-major
  CrbState state;
  CRowMat cached;  // rows * state.inv_gram
};

inline std::vector<EnsembleMember> prepare_ensemble(const EncodingModel &model, const std::vector<SupportSet> &supports,
                                                    const TransformSpec &spec) {
  std::vector<EnsembleMember> members;
  for (Index k = 0; k < static_cast<Index>(supports.size()); ++k)
    for (Index t = 0; t < model.T(); ++t) {
      EnsembleMember m;
      m.k = k;
      m.t = t;
      m.rows = restricted_candidate_rows(model, supports[static_cast<std::size_t>(k)], spec, t);
      members.push_back(std::move(m));
    }
  return members;
}

inline CRowMat gather_groups(const CRowMat &rows, Index C, const std::vector<Index> &groups) {
  CRowMat out(C * static_cast<Index>(groups.size()), rows.cols());
  for (std::size_t i = 0; i < groups.size(); ++i)
    out.middleRows(static_cast<Index>(i) * C, C) = rows.middleRows(groups[i] * C, C);
  return out;
}

inline double trace_or_inf(const CRowMat &rows, const std::vector<Index> &groups) {
  try {
    return crb_from_rows(rows, groups).trace;
  } catch (const InfeasibleDesign &) {
    return std::numeric_limits<double>::infinity();
  }
}

// Trace after removing group l, from the cached rows * C product.
inline double cached_downdate_trace(const EnsembleMember &m, Index l, Index C) {
  const CMat b = m.rows.middleRows(l * C, C);
  const CMat w = m.cached.middleRows(l * C, C);
  Eigen::LLT<CMat> inner(hermitian_part(CMat::Identity(C, C) - b * w.adjoint()));
  if (inner.info() != Eigen::Success || !(inner.matrixLLT().diagonal().real().minCoeff() > 0.0))
    return std::numeric_limits<double>::infinity();
  const double next = m.state.trace + inner.matrixL().solve(w).squaredNorm();
  if (!std::isfinite(next) || m.state.gram_norm * next > kConditionLimit)
    return std::numeric_limits<double>::infinity();
  return next;
}

} // namespace detail

// Modified sequential backward selection: starting from every candidate group,
// repeatedly delete the group whose removal least increases the objective
// until target_groups remain.
inline SamplingPattern sbs_design(const EncodingModel &model, const std::vector<SupportSet> &supports,
                                  const TransformSpec &spec, const DesignObjective &objective, Index target_groups,
                                  const SbsOptions &options = {}) {
  validate(model);
  const auto &cs = model.candidates;
  const Index L = cs.L();
  const Index C = cs.C();
  if (supports.empty())
    throw InvalidArgument("need at least one exemplar support");
  if (target_groups < 1 || target_groups > L)
    throw InvalidArgument("target group count must be in [1, L]");
  for (const auto &s : supports)
    if (s.S() > target_groups * C)
      throw InfeasibleDesign("support size exceeds the target measurement count", 0);

  std::vector<Index> active(static_cast<std::size_t>(L));
  std::iota(active.begin(), active.end(), Index{0});
  std::vector<double> log;
  if (target_groups == L)
    return make_pattern(cs, active, to_string(objective.mode), log);

  auto members = detail::prepare_ensemble(model, supports, spec);
  const bool recursive = options.update == SbsOptions::Update::Recursive;
  for (auto &m : members) {
    try {
      m.state = crb_from_rows(m.rows, active, m.k, m.t);
    } catch (const InfeasibleDesign &e) {
      throw InfeasibleDesign(std::string("full candidate CRB is singular: ") + e.what(), 0);
    }
    if (recursive)
      m.cached = m.rows * m.state.inv_gram;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Index iteration = 0;
  std::vector<bool> alive(static_cast<std::size_t>(L), true);
  while (static_cast<Index>(active.size()) > target_groups) {
    ++iteration;
    std::vector<double> costs(static_cast<std::size_t>(L), nan);
    parallel_for(static_cast<Index>(active.size()), [&](Index i) {
      const Index l = active[static_cast<std::size_t>(i)];
      std::vector<double> traces;
      traces.reserve(members.size());
      for (const auto &m : members) {
        if (recursive) {
          traces.push_back(detail::cached_downdate_trace(m, l, C));
        } else {
          std::vector<Index> rest;
          rest.reserve(active.size() - 1);
          for (Index g : active)
            if (g != l)
              rest.push_back(g);
          traces.push_back(detail::trace_or_inf(detail::gather_groups(m.rows, C, rest), rest));
        }
        if (!std::isfinite(traces.back()))
          break;
      }
      costs[static_cast<std::size_t>(l)] = objective.combine(traces);
    });
    for (Index l = 0; l < L; ++l)
      if (!alive[static_cast<std::size_t>(l)])
        costs[static_cast<std::size_t>(l)] = nan;

    const Index chosen = select_group(costs, options.tie_tolerance);
    if (chosen < 0)
      throw InfeasibleDesign("every remaining group is mandatory at iteration " + std::to_string(iteration) +
                                 " with " + std::to_string(active.size()) + " groups left",
                             iteration);

    active.erase(std::find(active.begin(), active.end(), chosen));
    alive[static_cast<std::size_t>(chosen)] = false;
    const bool refresh = options.refresh_period > 0 && iteration % options.refresh_period == 0;
    std::vector<double> traces;
    for (auto &m : members) {
      if (recursive) {
        GroupBlock block{CMat(m.rows.middleRows(chosen * C, C)), chosen, m.t, m.k};
        const CMat w = m.cached.middleRows(chosen * C, C);
        try {
          m.state = smw_downdate(m.state, block);
        } catch (const InfeasibleDesign &e) {
          throw InfeasibleDesign(e.what(), iteration);
        }
        if (refresh) {
          m.cached = m.rows * m.state.inv_gram;
        } else {
          Eigen::LLT<CMat> inner(hermitian_part(CMat::Identity(C, C) - block.b_tilde * w.adjoint()));
          const CMat z = inner.solve(w);
          m.cached.noalias() += (m.rows * w.adjoint()) * z;
        }
      } else {
        const CRowMat rest = detail::gather_groups(m.rows, C, active);
        m.state = crb_from_rows(rest, active, m.k, m.t);
      }
      traces.push_back(m.state.trace);
    }
    const double value = objective.combine(traces);
    log.push_back(value);
    if (options.observer)
      options.observer(SbsStep{iteration, costs, chosen, value});
  }
  return make_pattern(cs, active, to_string(objective.mode), log);
}

// Objective of an existing pattern, rebuilt from scratch; +inf when singular.
inline double evaluate_pattern_crb(const SamplingPattern &pattern, const EncodingModel &model,
                                   const std::vector<SupportSet> &supports, const TransformSpec &spec,
                                   const DesignObjective &objective) {
  check_compatible(pattern, model.candidates);
  std::vector<double> traces;
  for (Index k = 0; k < static_cast<Index>(supports.size()); ++k)
    for (Index t = 0; t < model.T(); ++t) {
      try {
        traces.push_back(build_full_crb(model, supports[static_cast<std::size_t>(k)], spec, t, k,
                                        pattern.kept_groups)
                             .trace);
      } catch (const InfeasibleDesign &) {
        return std::numeric_limits<double>::infinity();
      }
    }
  return objective.combine(traces);
}

inline double binomial(Index n, Index r) {
  if (r < 0 || r > n)
    return 0.0;
  r = std::min(r, n - r);
  double v = 1.0;
  for (Index i = 1; i <= r; ++i)
    v = v * static_cast<double>(n - r + i) / static_cast<double>(i);
  return std::round(v);
}

// Global optimum by enumerating every subset of target_groups groups.
inline SamplingPattern exhaustive_design(const EncodingModel &model, const std::vector<SupportSet> &supports,
                                         const TransformSpec &spec, const DesignObjective &objective,
                                         Index target_groups, double budget = 1e6) {
  validate(model);
  const auto &cs = model.candidates;
  const Index L = cs.L();
  const Index C = cs.C();
  if (target_groups < 1 || target_groups > L)
    throw InvalidArgument("target group count must be in [1, L]");
  if (binomial(L, target_groups) > budget)
    throw InvalidArgument("exhaustive search exceeds the combinatorial budget");
  const auto members = detail::prepare_ensemble(model, supports, spec);

  std::vector<Index> combo(static_cast<std::size_t>(target_groups));
  std::iota(combo.begin(), combo.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> best_combo;
  while (true) {
    std::vector<double> traces;
    for (const auto &m : members) {
      traces.push_back(detail::trace_or_inf(detail::gather_groups(m.rows, C, combo), combo));
      if (!std::isfinite(traces.back()))
        break;
    }
    const double value = objective.combine(traces);
    if (value < best) {
      best = value;
      best_combo = combo;
    }
    // next combination in lexicographic order
    Index i = target_groups - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == L - target_groups + i)
      --i;
    if (i < 0)
      break;
    ++combo[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < target_groups; ++j)
      combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (best_combo.empty())
    throw InfeasibleDesign("every subset of the requested size is singular");
  return make_pattern(cs, best_combo, to_string(objective.mode), {best});
}

} // namespace oedipus
