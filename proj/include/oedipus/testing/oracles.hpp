#pragma once

// Slow, direct reference computations used by the unit tests, the acceptance
// harness and the selftest subcommand.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "../crb.hpp"
#include "../design.hpp"
#include "../encoding.hpp"
#include "../random.hpp"
#include "../sparsity.hpp"

namespace oedipus::oracle {

inline CVec random_vector(Rng &rng, Index n) {
  CVec v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = rng.complex_normal(1.0);
  return v;
}

// Dense Psi (Q x N): column n is the transform of the n-th unit image.
inline CMat dense_wavelet(const std::array<Index, 2> &dims, const TransformSpec &spec, const FilterBank &fb) {
  const Index N = dims[0] * dims[1];
  CMat psi(N, N);
  CVec e = CVec::Zero(N);
  for (Index n = 0; n < N; ++n) {
    e(n) = 1.0;
    psi.col(n) = forward_transform(e, dims, spec, fb);
    e(n) = 0.0;
  }
  return psi;
}

inline CMat dense_wavelet(const std::array<Index, 2> &dims, const TransformSpec &spec) {
  return dense_wavelet(dims, spec, filter_bank(spec.family));
}

// One level of the orthonormal Haar butterfly, written out directly.
inline std::vector<double> haar_step(const std::vector<double> &x) {
  const double r = 1.0 / std::sqrt(2.0);
  const std::size_t half = x.size() / 2;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < half; ++i) {
    out[i] = r * (x[2 * i] + x[2 * i + 1]);
    out[half + i] = r * (x[2 * i] - x[2 * i + 1]);
  }
  return out;
}

// Dense encoding matrix (P x N) straight from the per-candidate definition.
inline CMat dense_encoding(const EncodingModel &model, Index t, const std::vector<Index> &candidates) {
  CMat A(static_cast<Index>(candidates.size()), model.N());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    A.row(static_cast<Index>(i)) = candidate_row(model, candidates[i], t).transpose();
  return A;
}

inline std::vector<Index> group_candidates(const CandidateSet &cs, const std::vector<Index> &groups) {
  std::vector<Index> out;
  for (Index g : groups)
    out.insert(out.end(), cs.groups[static_cast<std::size_t>(g)].begin(),
               cs.groups[static_cast<std::size_t>(g)].end());
  return out;
}

// Restricted rows B Psi^H U via dense matrices.
inline CMat dense_restricted_rows(const EncodingModel &model, const SupportSet &support, const TransformSpec &spec,
                                  Index t, const std::vector<Index> &candidates) {
  const CMat A = dense_encoding(model, t, candidates);
  const CMat psi = dense_wavelet(model.grid.dims, spec);
  const CMat full = A * psi.adjoint();
  CMat out(full.rows(), support.S());
  for (Index s = 0; s < support.S(); ++s)
    out.col(s) = full.col(support.indices[static_cast<std::size_t>(s)]);
  return out;
}

// Inverse Gram via a full-pivot LU solve against the identity.
inline CMat direct_inverse_gram(const CMat &rows) {
  const CMat gram = rows.adjoint() * rows;
  return gram.fullPivLu().solve(CMat::Identity(gram.rows(), gram.cols()));
}

inline SupportSet random_support(Rng &rng, Index Q, Index S) {
  std::vector<Index> all(static_cast<std::size_t>(Q));
  std::iota(all.begin(), all.end(), Index{0});
  rng.shuffle(all.begin(), all.end());
  all.resize(static_cast<std::size_t>(S));
  std::sort(all.begin(), all.end());
  return {all, "random"};
}

// Small random model: an n1 x n2 grid with the given coil count and grouping.
inline EncodingModel random_model(Rng &rng, std::array<Index, 2> dims, Index coils, Undersampling u, Index T = 1) {
  ImageGrid grid{dims, {1.0, 1.0}};
  std::vector<CMat> maps;
  for (Index t = 0; t < T; ++t)
    maps.push_back(synthesize_coil_maps(grid, coils, 1.5, rng.below(1u << 30)));
  return make_encoding_model(grid, VoxelBasis::Dirac, std::move(maps), 1.0, u);
}

// Relative adjoint mismatch |<Ax, y> - <x, A^H y>| / (|<Ax, y>| + tiny).
template <typename Apply, typename Adjoint>
double adjoint_mismatch(Rng &rng, Index n_in, Index n_out, Apply &&apply, Adjoint &&adjoint, int trials) {
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    const CVec x = random_vector(rng, n_in);
    const CVec y = random_vector(rng, n_out);
    const Complex lhs = y.dot(apply(x));
    const Complex rhs = adjoint(y).dot(x);
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

// Brute-force cost of deleting each active group (from-scratch inverses).
inline std::vector<double> brute_force_costs(const std::vector<CRowMat> &rows_per_member, Index C, Index L,
                                             const std::vector<Index> &active, const DesignObjective &objective) {
  std::vector<double> costs(static_cast<std::size_t>(L), std::numeric_limits<double>::quiet_NaN());
  for (Index l : active) {
    std::vector<Index> rest;
    for (Index g : active)
      if (g != l)
        rest.push_back(g);
    std::vector<double> traces;
    for (const auto &rows : rows_per_member) {
      const CRowMat sub = detail::gather_groups(rows, C, rest);
      if (sub.rows() < sub.cols()) {
        traces.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      Eigen::SelfAdjointEigenSolver<CMat> eig(hermitian_part(sub.adjoint() * sub));
      const RVec &lam = eig.eigenvalues();
      if (!(lam(0) > 0.0) || lam(lam.size() - 1) / lam(0) > kConditionLimit)
        traces.push_back(std::numeric_limits<double>::infinity());
      else
        traces.push_back(lam.cwiseInverse().sum());
    }
    costs[static_cast<std::size_t>(l)] = objective.combine(traces);
  }
  return costs;
}

} // namespace oedipus::oracle
