#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "crb.hpp"
#include "design.hpp"
#include "recon.hpp"
#include "testing/oracles.hpp"

namespace oedipus {

struct SelftestOptions {
  // Fault injection: perturb one wavelet filter tap so Parseval must fail.
  bool corrupt_wavelet = false;
  Index monte_carlo_draws = 10000;
  std::uint64_t seed = 7;
};

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

inline SelftestCheck check_parseval(const SelftestOptions &o) {
  FilterBank fb = filter_bank(WaveletFamily::Daubechies4);
  if (o.corrupt_wavelet)
    fb.lowpass(0) *= 1.001;
  Rng rng(o.seed);
  const std::array<Index, 2> dims{16, 16};
  const TransformSpec spec{WaveletFamily::Daubechies4, 3};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CVec f = oracle::random_vector(rng, 256);
    const CVec c = forward_transform(f, dims, spec, fb);
    worst = std::max(worst, std::abs(c.norm() - f.norm()) / f.norm());
    worst = std::max(worst, (inverse_transform(c, dims, spec, fb) - f).norm() / f.norm());
  }
  return {"wavelet Parseval + reconstruction", worst < 1e-10, "max rel err " + sci(worst)};
}

inline SelftestCheck check_adjoints(const SelftestOptions &o) {
  Rng rng(o.seed + 1);
  auto model = oracle::random_model(rng, {8, 8}, 2, Undersampling::Both);
  std::vector<Index> kept;
  for (Index g = 0; g < model.candidates.L(); ++g)
    if (rng.uniform() < 0.5)
      kept.push_back(g);
  if (kept.empty())
    kept.push_back(0);
  const PatternedEncoder A(model, 0, kept);
  double worst = oracle::adjoint_mismatch(
      rng, A.cols(), A.rows(), [&](const CVec &x) { return A.apply(x); },
      [&](const CVec &y) { return A.adjoint(y); }, 20);
  const std::array<Index, 2> dims{8, 8};
  for (auto fam : {WaveletFamily::Daubechies4, WaveletFamily::Haar}) {
    const TransformSpec spec{fam, 3};
    worst = std::max(worst, oracle::adjoint_mismatch(
                                rng, 64, 64, [&](const CVec &x) { return forward_transform(x, dims, spec); },
                                [&](const CVec &y) { return inverse_transform(y, dims, spec); }, 20));
  }
  const FiniteDifference tv(dims);
  worst = std::max(worst, oracle::adjoint_mismatch(
                              rng, 64, 128, [&](const CVec &x) { return tv.apply(x); },
                              [&](const CVec &y) { return tv.adjoint(y); }, 20));
  return {"operator adjoints (encoding, wavelet, TV)", worst < 1e-10, "max rel mismatch " + sci(worst)};
}

inline SelftestCheck check_smw(const SelftestOptions &o) {
  Rng rng(o.seed + 2);
  const TransformSpec spec{WaveletFamily::Daubechies4, 3};
  double worst = 0.0;
  for (int inst = 0; inst < 5; ++inst) {
    auto model = oracle::random_model(rng, {8, 8}, 2, Undersampling::Both);
    const auto support = oracle::random_support(rng, 64, 12);
    CrbState state = build_full_crb(model, support, spec, 0);
    std::vector<Index> active = state.active_groups;
    for (int d = 0; d < 10; ++d) {
      const Index pick = active[static_cast<std::size_t>(rng.below(active.size()))];
      state = smw_downdate(state, group_block(model, support, spec, 0, 0, pick));
      active.erase(std::find(active.begin(), active.end(), pick));
    }
    const CMat direct = oracle::direct_inverse_gram(
        oracle::dense_restricted_rows(model, support, spec, 0, oracle::group_candidates(model.candidates, active)));
    worst = std::max(worst, (state.inv_gram - direct).norm() / direct.norm());
  }
  return {"SMW downdate vs direct inverse", worst < 1e-7, "max rel Frobenius err " + sci(worst)};
}

inline SelftestCheck check_trace_equality(const SelftestOptions &o) {
  Rng rng(o.seed + 3);
  double worst = 0.0;
  for (auto fam : {WaveletFamily::Daubechies4, WaveletFamily::Haar}) {
    const TransformSpec spec{fam, 3};
    auto model = oracle::random_model(rng, {8, 8}, 1, Undersampling::Both);
    const auto support = oracle::random_support(rng, 64, 10);
    const CrbState state = build_full_crb(model, support, spec, 0);
    const double a = state.trace;
    const double b = coefficient_domain_crb_trace(state, support, 64);
    const double c = image_domain_crb_trace(state, support, model.grid.dims, spec);
    worst = std::max({worst, std::abs(a - b) / a, std::abs(a - c) / a});
  }
  return {"CRB trace equality across domains", worst < 1e-8, "max rel diff " + sci(worst)};
}

inline SelftestCheck check_greedy_toy(const SelftestOptions &o) {
  Rng rng(o.seed + 4);
  const TransformSpec spec{WaveletFamily::Haar, 2};
  bool ok = true;
  double gap = 0.0;
  for (int inst = 0; inst < 3; ++inst) {
    auto model = oracle::random_model(rng, {4, 4}, 1, Undersampling::Dim2);
    // single-coil 4x4 with line grouping: L = 4, C = 4
    const auto support = oracle::random_support(rng, 16, 5);
    const DesignObjective obj{ObjectiveMode::AverageCase};
    const std::vector<CRowMat> rows{restricted_candidate_rows(model, support, spec, 0)};
    const auto brute = oracle::brute_force_costs(rows, model.candidates.C(), model.candidates.L(),
                                                  {0, 1, 2, 3}, obj);
    Index first = -1;
    SbsOptions opts;
    opts.observer = [&](const SbsStep &s) {
      if (s.iteration == 1)
        first = s.chosen;
    };
    const auto p = sbs_design(model, {support}, spec, obj, 2, opts);
    ok = ok && first == select_group(brute, opts.tie_tolerance);
    const auto best = exhaustive_design(model, {support}, spec, obj, 2);
    const double sbs_value = p.log.back();
    ok = ok && sbs_value >= best.log.front() * (1.0 - 1e-9);
    gap = std::max(gap, sbs_value - best.log.front());
  }
  return {"greedy vs brute force (toy)", ok, "max optimality gap " + sci(gap)};
}

inline SelftestCheck check_monte_carlo(const SelftestOptions &o) {
  Rng rng(o.seed + 5);
  // S = 3 unknowns observed through M = 8 random rows with unit complex noise
  const Index S = 3, M = 8;
  CMat rows(M, S);
  for (Index i = 0; i < M; ++i)
    for (Index s = 0; s < S; ++s)
      rows(i, s) = rng.complex_normal(1.0);
  const CMat C = oracle::direct_inverse_gram(rows);
  const CVec truth = oracle::random_vector(rng, S);
  const SupportSet support{{0, 1, 2}, "mc"};
  const Index draws = o.monte_carlo_draws;
  std::vector<CVec> est;
  est.reserve(static_cast<std::size_t>(draws));
  CVec mean = CVec::Zero(S);
  for (Index d = 0; d < draws; ++d) {
    CVec y = rows * truth;
    for (Index i = 0; i < M; ++i)
      y(i) += rng.complex_normal(1.0);
    est.push_back(oracle_lsq_estimate(y, rows, support, S));
    mean += est.back();
  }
  mean /= static_cast<double>(draws);
  double worst = 0.0;
  for (Index a = 0; a < S; ++a)
    for (Index b = 0; b < S; ++b) {
      // sample covariance entry and its standard error
      Complex m(0.0);
      double m2 = 0.0;
      for (const auto &e : est) {
        const Complex v = (e(a) - truth(a)) * std::conj(e(b) - truth(b));
        m += v;
        m2 += std::norm(v);
      }
      m /= static_cast<double>(draws);
      const double var = m2 / static_cast<double>(draws) - std::norm(m);
      const double se = std::sqrt(std::max(var, 1e-300) / static_cast<double>(draws));
      worst = std::max(worst, std::abs(m - C(a, b)) / se);
    }
  return {"oracle LS covariance vs CRB (Monte-Carlo)", worst < 8.0, "max deviation " + sci(worst) + " SE"};
}

} // namespace detail

inline std::vector<SelftestCheck> run_selftest_checks(const SelftestOptions &o = {}) {
  std::vector<SelftestCheck> out;
  const std::vector<std::function<SelftestCheck(const SelftestOptions &)>> checks{
      detail::check_parseval,        detail::check_adjoints,    detail::check_smw,
      detail::check_trace_equality,  detail::check_greedy_toy,  detail::check_monte_carlo};
  for (const auto &check : checks) {
    try {
      out.push_back(check(o));
    } catch (const std::exception &e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

inline int run_selftest(const SelftestOptions &o, std::ostream &out) {
  const auto checks = run_selftest_checks(o);
  bool all = true;
  for (const auto &c : checks) {
    out << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(44) << c.name << c.detail << '\n';
    all = all && c.passed;
  }
  out << (all ? "all checks passed\n" : "selftest FAILED\n");
  return all ? 0 : 1;
}

} // namespace oedipus
