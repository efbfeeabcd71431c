#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "encoding.hpp"
#include "pattern.hpp"
#include "random.hpp"
#include "sparsity.hpp"

namespace oedipus {

// Anisotropic first-order forward differences with replicate (Neumann)
// boundaries. Output stacks the axis-1 differences, then the axis-2 ones (2N).
class FiniteDifference {
public:
  explicit FiniteDifference(std::array<Index, 2> dims) : dims_(dims) {
    if (dims_[0] < 2 || dims_[1] < 2)
      throw InvalidArgument("finite differences need a grid of at least 2 x 2");
  }

  Index rows() const { return 2 * cols(); }
  Index cols() const { return dims_[0] * dims_[1]; }

  CVec apply(const CVec &f) const {
    const Index N1 = dims_[0], N2 = dims_[1], N = cols();
    CVec out = CVec::Zero(2 * N);
    for (Index a = 0; a < N1; ++a)
      for (Index b = 0; b < N2; ++b) {
        const Index n = a * N2 + b;
        if (a + 1 < N1)
          out(n) = f(n + N2) - f(n);
        if (b + 1 < N2)
          out(N + n) = f(n + 1) - f(n);
      }
    return out;
  }

  CVec adjoint(const CVec &y) const {
    const Index N1 = dims_[0], N2 = dims_[1], N = cols();
    CVec out = CVec::Zero(N);
    for (Index a = 0; a < N1; ++a)
      for (Index b = 0; b < N2; ++b) {
        const Index n = a * N2 + b;
        if (a + 1 < N1) {
          out(n + N2) += y(n);
          out(n) -= y(n);
        }
        if (b + 1 < N2) {
          out(n + 1) += y(N + n);
          out(n) -= y(N + n);
        }
      }
    return out;
  }

private:
  std::array<Index, 2> dims_;
};

enum class RegularizerKind { WaveletL1, TV };

struct Regularizer {
  RegularizerKind kind = RegularizerKind::WaveletL1;
  TransformSpec wavelet; // used by WaveletL1
};

inline std::string to_string(RegularizerKind k) { return k == RegularizerKind::TV ? "tv" : "wavelet"; }

inline RegularizerKind regularizer_from_string(const std::string &s) {
  if (s == "wavelet" || s == "wav")
    return RegularizerKind::WaveletL1;
  if (s == "tv")
    return RegularizerKind::TV;
  throw InvalidArgument("unknown regularizer: " + s);
}

// The sparsifying operator T of a regularizer (Psi or finite differences).
class SparsifyingOperator {
public:
  SparsifyingOperator(const Regularizer &reg, std::array<Index, 2> dims) : reg_(reg), dims_(dims), tv_(dims) {
    if (reg_.kind == RegularizerKind::WaveletL1)
      validate_transform(dims_, reg_.wavelet);
  }

  CVec apply(const CVec &f) const {
    return reg_.kind == RegularizerKind::TV ? tv_.apply(f) : forward_transform(f, dims_, reg_.wavelet);
  }
  CVec adjoint(const CVec &y) const {
    return reg_.kind == RegularizerKind::TV ? tv_.adjoint(y) : inverse_transform(y, dims_, reg_.wavelet);
  }

private:
  Regularizer reg_;
  std::array<Index, 2> dims_;
  FiniteDifference tv_;
};

struct ReconProblem {
  CVec data;
  SamplingPattern pattern;
  const EncodingModel *model = nullptr;
  Index t = 0; // coil map set used for the forward model
  Regularizer regularizer;
  double lambda = 0.01;
  Index max_iters = 50;
  double epsilon = 0.0; // <= 0: 1e-6 * max|T f0|
  double tol = 1e-6;
  Index cg_max_iters = 200;
  double cg_tol = 1e-6;
  // Throw SolverFailure when an inner solve stops at the cap above cg_tol.
  bool strict_inner = false;
};

struct ReconResult {
  CVec image;
  std::vector<double> objective_log; // entry 0 is the initial image
  Index iterations = 0;
  Index inner_cap_hits = 0;
  double epsilon = 0.0;
  std::optional<double> nrmse_vs;
};

// Carries the objective log of the aborted solve.
struct ReconFailure : SolverFailure {
  ReconFailure(const std::string &what, std::vector<double> log) : SolverFailure(what), log(std::move(log)) {}
  std::vector<double> log;
};

inline double nrmse(const CVec &estimate, const CVec &gold) {
  if (estimate.size() != gold.size())
    throw InvalidArgument("nrmse: length mismatch");
  const double g = gold.norm();
  if (!(g > 0.0))
    throw InvalidArgument("nrmse: gold standard has zero norm");
  return (estimate - gold).norm() / g;
}

inline CVec retrospective_undersample(const CVec &image, const SamplingPattern &pattern, const EncodingModel &model,
                                      Index t, double noise_sigma, std::uint64_t seed) {
  check_compatible(pattern, model.candidates);
  const PatternedEncoder A(model, t, pattern.kept_groups);
  CVec d = A.apply(image);
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    for (Index i = 0; i < d.size(); ++i)
      d(i) += rng.complex_normal(noise_sigma);
  }
  return d;
}

// Density-uncompensated adjoint, normalised as if k-space were fully sampled.
inline CVec zero_filled_reconstruction(const CVec &data, const SamplingPattern &pattern, const EncodingModel &model,
                                       Index t) {
  check_compatible(pattern, model.candidates);
  const PatternedEncoder A(model, t, pattern.kept_groups);
  const RVec diag = A.full_sampling_diagonal();
  CVec f = A.adjoint(data);
  for (Index n = 0; n < f.size(); ++n)
    f(n) = diag(n) > 0.0 ? f(n) / diag(n) : Complex(0.0);
  return f;
}

namespace detail {

inline double smoothed_magnitude(double x, double eps) { return x >= eps ? x : x * x / (2.0 * eps) + 0.5 * eps; }

inline double recon_objective(const PatternedEncoder &A, const SparsifyingOperator &T, const CVec &f, const CVec &d,
                              double lambda, double eps) {
  const double fidelity = (A.apply(f) - d).squaredNorm();
  const CVec z = T.apply(f);
  double penalty = 0.0;
  for (Index j = 0; j < z.size(); ++j)
    penalty += smoothed_magnitude(std::abs(z(j)), eps);
  return fidelity + lambda * penalty;
}

} // namespace detail

// Multiplicative half-quadratic (IRLS) minimisation of
//   ||A f - d||^2 + lambda * sum_j rho_eps((T f)_j).
// Each outer step solves (A^H A + lambda/2 T^H W T) f = A^H d by conjugate
// gradients warm-started at the current iterate, which keeps the objective
// non-increasing even when the inner solve is truncated.
inline ReconResult irls_solve(const ReconProblem &problem) {
  if (problem.model == nullptr)
    throw InvalidArgument("reconstruction problem has no encoding model");
  if (!(problem.lambda > 0.0))
    throw InvalidArgument("lambda must be positive");
  if (problem.max_iters < 0 || problem.cg_max_iters < 1)
    throw InvalidArgument("iteration limits must be positive");
  const EncodingModel &model = *problem.model;
  check_compatible(problem.pattern, model.candidates);
  const PatternedEncoder A(model, problem.t, problem.pattern.kept_groups);
  if (problem.data.size() != A.rows())
    throw InvalidArgument("data length does not match the sampling pattern");
  const SparsifyingOperator T(problem.regularizer, model.grid.dims);
  const CVec &d = problem.data;
  const double half_lambda = 0.5 * problem.lambda;

  const CVec rhs = A.adjoint(d);
  CVec f = rhs;
  {
    // least-squares scaling of the adjoint image
    const CVec Af = A.apply(f);
    const double denom = Af.squaredNorm();
    f *= denom > 0.0 ? Af.dot(d) / denom : Complex(0.0);
  }

  ReconResult result;
  const CVec z0 = T.apply(f);
  const double zmax = z0.size() > 0 ? z0.cwiseAbs().maxCoeff() : 0.0;
  const double eps = problem.epsilon > 0.0 ? problem.epsilon : (zmax > 0.0 ? 1e-6 * zmax : 1e-6);
  result.epsilon = eps;
  result.objective_log.push_back(detail::recon_objective(A, T, f, d, problem.lambda, eps));

  const double rhs_norm = rhs.norm();
  for (Index it = 0; it < problem.max_iters && rhs_norm > 0.0; ++it) {
    const CVec z = T.apply(f);
    RVec w(z.size());
    for (Index j = 0; j < z.size(); ++j)
      w(j) = 1.0 / std::max(std::abs(z(j)), eps);
    auto H = [&](const CVec &x) -> CVec {
      CVec tx = T.apply(x);
      tx.array() *= w.array().cast<Complex>();
      return A.normal(x) + half_lambda * T.adjoint(tx);
    };

    CVec x = f;
    CVec r = rhs - H(x);
    CVec p = r;
    double rr = r.squaredNorm();
    bool converged = std::sqrt(rr) <= problem.cg_tol * rhs_norm;
    for (Index k = 0; k < problem.cg_max_iters && !converged; ++k) {
      const CVec Hp = H(p);
      const double pHp = p.dot(Hp).real();
      if (!(pHp > 0.0) || !std::isfinite(pHp)) {
        if (rr == 0.0)
          break;
        throw ReconFailure("conjugate gradient breakdown (non-positive curvature)", result.objective_log);
      }
      const double alpha = rr / pHp;
      x += alpha * p;
      r -= alpha * Hp;
      const double rr_next = r.squaredNorm();
      converged = std::sqrt(rr_next) <= problem.cg_tol * rhs_norm;
      p = r + (rr_next / rr) * p;
      rr = rr_next;
    }
    if (!converged) {
      ++result.inner_cap_hits;
      if (problem.strict_inner)
        throw ReconFailure("inner conjugate gradient did not converge within " +
                               std::to_string(problem.cg_max_iters) + " iterations",
                           result.objective_log);
    }

    const double change = (x - f).norm() / std::max(f.norm(), std::numeric_limits<double>::min());
    f = std::move(x);
    result.objective_log.push_back(detail::recon_objective(A, T, f, d, problem.lambda, eps));
    result.iterations = it + 1;
    if (change < problem.tol)
      break;
  }
  result.image = std::move(f);
  return result;
}

} // namespace oedipus
