#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "encoding.hpp"
#include "sparsity.hpp"
#include "types.hpp"

namespace oedipus {

// Oracle CRB for one (exemplar k, coil map set t) pair: the inverse of the
// support-restricted Gram matrix over the currently active candidate groups.
struct CrbState {
  CMat inv_gram;
  double trace = 0.0;
  Index k = 0;
  Index t = 0;
  std::vector<Index> active_groups; // sorted
  // Largest eigenvalue of the Gram matrix the state was built from. Deleting
  // rows only shrinks the Gram, so gram_norm * trace bounds the condition
  // number of every downdated state.
  double gram_norm = 0.0;
  double condition = 1.0;

  Index S() const { return inv_gram.rows(); }
  double condition_bound() const { return gram_norm * trace; }
};

// Restricted rows B~ = B Psi^H U for one candidate group (C x S).
struct GroupBlock {
  CMat b_tilde;
  Index group = 0;
  Index t = 0;
  Index k = 0;
};

inline CMat hermitian_part(const CMat &x) { return 0.5 * (x + x.adjoint()); }

// Fast generator for candidate rows; equals candidate_row() but reuses the
// separable per-axis factors.
class RowGenerator {
public:
  explicit RowGenerator(const EncodingModel &model)
      : model_(&model), E1_(axis_encoding(model, 0)), E2_(axis_encoding(model, 1)) {}

  void row(Index p, Index t, CVec &out) const {
    const auto &cs = model_->candidates;
    const Index q = cs.location_of(p);
    const Index coil = cs.coil_of(p);
    const Index m1 = q / cs.kdims[1];
    const Index m2 = q % cs.kdims[1];
    const Index N1 = model_->grid.dims[0];
    const Index N2 = model_->grid.dims[1];
    const auto &maps = model_->coil_maps[static_cast<std::size_t>(t)];
    out.resize(N1 * N2);
    for (Index a = 0; a < N1; ++a) {
      const Complex e1 = E1_(m1, a);
      for (Index b = 0; b < N2; ++b)
        out(a * N2 + b) = maps(coil, a * N2 + b) * e1 * E2_(m2, b);
    }
  }

private:
  const EncodingModel *model_;
  CMat E1_, E2_;
};

// Restricted rows for an explicit list of candidates, in list order.
inline CRowMat restricted_rows(const EncodingModel &model, const SupportSet &support, const TransformSpec &spec,
                               Index t, const std::vector<Index> &candidates) {
  validate(model);
  validate(support, model.N());
  const auto dims = model.grid.dims;
  const FilterBank fb = filter_bank(spec.family);
  RowGenerator gen(model);
  CRowMat out(static_cast<Index>(candidates.size()), support.S());
  CVec row;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    gen.row(candidates[i], t, row);
    out.row(static_cast<Index>(i)) = restricted_row(row, support, dims, spec, fb).transpose();
  }
  return out;
}

// All candidate rows stacked group-major: group l occupies rows [l*C, (l+1)*C).
inline CRowMat restricted_candidate_rows(const EncodingModel &model, const SupportSet &support,
                                         const TransformSpec &spec, Index t) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(model.candidates.P()));
  for (const auto &g : model.candidates.groups)
    order.insert(order.end(), g.begin(), g.end());
  return restricted_rows(model, support, spec, t, order);
}

inline GroupBlock group_block(const EncodingModel &model, const SupportSet &support, const TransformSpec &spec,
                              Index t, Index k, Index group) {
  if (group < 0 || group >= model.candidates.L())
    throw InvalidArgument("group index out of range");
  GroupBlock block;
  block.b_tilde = restricted_rows(model, support, spec, t, model.candidates.groups[static_cast<std::size_t>(group)]);
  block.group = group;
  block.t = t;
  block.k = k;
  return block;
}

// Inverts a stacked restricted-row matrix's Gram. Throws InfeasibleDesign when
// the Gram is singular or its condition number exceeds kConditionLimit.
template <typename Rows>
CrbState crb_from_rows(const Rows &rows, std::vector<Index> active_groups, Index k = 0, Index t = 0) {
  const Index S = rows.cols();
  if (S == 0)
    throw InvalidArgument("empty support");
  if (rows.rows() < S)
    throw InfeasibleDesign("fewer measurements than support coefficients (S > M)");
  const CMat gram = hermitian_part(rows.adjoint() * rows);
  Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
  if (eig.info() != Eigen::Success)
    throw InfeasibleDesign("Gram eigendecomposition failed");
  const RVec &lambda = eig.eigenvalues();
  const double lmin = lambda(0);
  const double lmax = lambda(S - 1);
  if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > kConditionLimit)
    throw InfeasibleDesign("restricted Gram matrix is singular or near-singular");
  CrbState state;
  state.inv_gram = hermitian_part(eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
                                  eig.eigenvectors().adjoint());
  state.trace = state.inv_gram.diagonal().real().sum();
  state.k = k;
  state.t = t;
  std::sort(active_groups.begin(), active_groups.end());
  state.active_groups = std::move(active_groups);
  state.gram_norm = lmax;
  state.condition = lmax / lmin;
  return state;
}

// CRB using every group listed in `groups` (all candidates when empty).
inline CrbState build_full_crb(const EncodingModel &model, const SupportSet &support, const TransformSpec &spec,
                               Index t, Index k = 0, std::vector<Index> groups = {}) {
  if (groups.empty()) {
    groups.resize(static_cast<std::size_t>(model.candidates.L()));
    for (Index g = 0; g < model.candidates.L(); ++g)
      groups[static_cast<std::size_t>(g)] = g;
  }
  if (support.S() > model.candidates.C() * static_cast<Index>(groups.size()))
    throw InfeasibleDesign("fewer measurements than support coefficients (S > M)");
  std::vector<Index> cands;
  for (Index g : groups) {
    if (g < 0 || g >= model.candidates.L())
      throw InvalidArgument("group index out of range");
    const auto &members = model.candidates.groups[static_cast<std::size_t>(g)];
    cands.insert(cands.end(), members.begin(), members.end());
  }
  return crb_from_rows(restricted_rows(model, support, spec, t, cands), std::move(groups), k, t);
}

namespace detail {

struct DowndateTerms {
  CMat G;                  // C^full B~^H, S x C
  Eigen::LLT<CMat> inner;  // I_C - B~ G
  bool ok = false;
};

inline DowndateTerms downdate_terms(const CrbState &state, const CMat &b_tilde) {
  if (b_tilde.cols() != state.S())
    throw InvalidArgument("group block width does not match support size");
  DowndateTerms terms;
  terms.G = state.inv_gram * b_tilde.adjoint();
  const CMat inner = hermitian_part(CMat::Identity(b_tilde.rows(), b_tilde.rows()) - b_tilde * terms.G);
  terms.inner.compute(inner);
  terms.ok = terms.inner.info() == Eigen::Success && terms.inner.matrixLLT().diagonal().real().minCoeff() > 0.0;
  return terms;
}

inline bool is_active(const CrbState &state, Index group) {
  return std::binary_search(state.active_groups.begin(), state.active_groups.end(), group);
}

} // namespace detail

// Trace of the CRB after removing one group, without forming the S x S update.
// Returns +infinity when the group is mandatory (removal loses identifiability
// or pushes the condition bound past kConditionLimit).
inline double downdate_trace(const CrbState &state, const GroupBlock &block) {
  if (!detail::is_active(state, block.group))
    throw InvalidArgument("group is not active in this CRB state");
  if (block.b_tilde.rows() == 0)
    return state.trace;
  const auto terms = detail::downdate_terms(state, block.b_tilde);
  if (!terms.ok)
    return std::numeric_limits<double>::infinity();
  // Trace[G (I - B G)^{-1} G^H] = || L^{-1} G^H ||_F^2
  const CMat half = terms.inner.matrixL().solve(terms.G.adjoint());
  const double next = state.trace + half.squaredNorm();
  if (!std::isfinite(next) || state.gram_norm * next > kConditionLimit)
    return std::numeric_limits<double>::infinity();
  return next;
}

// Sherman-Morrison-Woodbury removal of one group's rows.
inline CrbState smw_downdate(const CrbState &state, const GroupBlock &block) {
  if (!detail::is_active(state, block.group))
    throw InvalidArgument("group is not active in this CRB state");
  CrbState next = state;
  next.active_groups.erase(std::lower_bound(next.active_groups.begin(), next.active_groups.end(), block.group));
  if (block.b_tilde.rows() == 0)
    return next;
  const auto terms = detail::downdate_terms(state, block.b_tilde);
  if (!terms.ok)
    throw InfeasibleDesign("removing group " + std::to_string(block.group) + " destroys identifiability");
  next.inv_gram = hermitian_part(state.inv_gram + terms.G * terms.inner.solve(terms.G.adjoint()));
  next.trace = next.inv_gram.diagonal().real().sum();
  if (!std::isfinite(next.trace) || next.condition_bound() > kConditionLimit)
    throw InfeasibleDesign("removing group " + std::to_string(block.group) + " makes the CRB near-singular");
  next.condition = next.condition_bound();
  return next;
}

// Psi^H U as an N x S matrix (columns are synthesis atoms of the support).
inline CMat support_atoms(const SupportSet &support, const std::array<Index, 2> &dims, const TransformSpec &spec) {
  const Index N = dims[0] * dims[1];
  CMat atoms(N, support.S());
  CVec e = CVec::Zero(N);
  for (Index s = 0; s < support.S(); ++s) {
    const Index idx = support.indices[static_cast<std::size_t>(s)];
    e(idx) = 1.0;
    atoms.col(s) = inverse_transform(e, dims, spec);
    e(idx) = 0.0;
  }
  return atoms;
}

// Trace of U C U^H (coefficient-domain oracle CRB), summed over all Q entries.
inline double coefficient_domain_crb_trace(const CrbState &state, const SupportSet &support, Index Q) {
  RVec diag = RVec::Zero(Q);
  for (Index s = 0; s < support.S(); ++s)
    diag(support.indices[static_cast<std::size_t>(s)]) = state.inv_gram(s, s).real();
  return diag.sum();
}

// Trace of Psi^H U C U^H Psi (image-domain oracle CRB), one voxel at a time.
inline double image_domain_crb_trace(const CrbState &state, const SupportSet &support,
                                     const std::array<Index, 2> &dims, const TransformSpec &spec) {
  const CMat atoms = support_atoms(support, dims, spec);
  const CMat weighted = atoms * state.inv_gram; // N x S
  double trace = 0.0;
  for (Index n = 0; n < atoms.rows(); ++n)
    trace += (weighted.row(n) * atoms.row(n).adjoint())(0, 0).real();
  return trace;
}

// Least squares on the known support, zero-filled to Q coefficients.
inline CVec oracle_lsq_estimate(const CVec &data, const CMat &rows, const SupportSet &support, Index Q) {
  if (rows.rows() != data.size())
    throw InvalidArgument("data length does not match the number of rows");
  if (rows.cols() != support.S())
    throw InvalidArgument("row width does not match support size");
  Eigen::ColPivHouseholderQR<CMat> qr(rows);
  if (qr.rank() < support.S())
    throw InfeasibleDesign("restricted rows are rank deficient");
  return zero_fill(qr.solve(data), support, Q);
}

} // namespace oedipus
