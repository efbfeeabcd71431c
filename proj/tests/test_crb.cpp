#include <gtest/gtest.h>

#include <oedipus/crb.hpp>
#include <oedipus/testing/oracles.hpp>

using namespace oedipus;

namespace {

SupportSet full_support(Index Q) {
  SupportSet s;
  for (Index i = 0; i < Q; ++i)
    s.indices.push_back(i);
  return s;
}

std::vector<Index> iota_groups(Index n) {
  std::vector<Index> g(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = i;
  return g;
}

EncodingModel dft_1d() {
  ImageGrid grid{{1, 4}, {1.0, 1.0}};
  return make_encoding_model(grid, VoxelBasis::Dirac, {CMat::Ones(1, 4)}, 1.0, Undersampling::Both);
}

double rel(const CMat &a, const CMat &b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST(BuildFullCrb, FullDftWithIdentityTransform) {
  const auto model = dft_1d();
  const TransformSpec spec{WaveletFamily::Identity, 1};
  const auto state = build_full_crb(model, full_support(4), spec, 0);
  EXPECT_LT((state.inv_gram - 0.25 * CMat::Identity(4, 4)).norm(), 1e-14);
  EXPECT_NEAR(state.trace, 1.0, 1e-14);
  EXPECT_NEAR(state.condition, 1.0, 1e-12);
  EXPECT_EQ(state.active_groups, iota_groups(4));
}

TEST(BuildFullCrb, MoreCoefficientsThanMeasurements) {
  const auto model = dft_1d();
  const TransformSpec spec{WaveletFamily::Identity, 1};
  EXPECT_THROW(build_full_crb(model, full_support(4), spec, 0, 0, {0, 1, 2}), InfeasibleDesign);
}

TEST(BuildFullCrb, MatchesDensePseudoinverse) {
  Rng rng(11);
  for (int inst = 0; inst < 3; ++inst) {
    const auto model = oracle::random_model(rng, {8, 8}, 2, Undersampling::Both);
    const auto support = oracle::random_support(rng, 64, 10);
    const TransformSpec spec{WaveletFamily::Daubechies4, 3};
    std::vector<Index> groups;
    for (Index g = 0; g < model.candidates.L(); g += 4)
      groups.push_back(g);
    const auto state = build_full_crb(model, support, spec, 0, 0, groups);
    const CMat rows =
        oracle::dense_restricted_rows(model, support, spec, 0, oracle::group_candidates(model.candidates, groups));
    const CMat pinv = rows.completeOrthogonalDecomposition().pseudoInverse();
    EXPECT_LT(rel(state.inv_gram, pinv * pinv.adjoint()), 1e-8);
  }
}

TEST(BuildFullCrb, RestrictedRowsMatchDenseOracle) {
  Rng rng(12);
  const auto model = oracle::random_model(rng, {8, 8}, 2, Undersampling::Dim1);
  const auto support = oracle::random_support(rng, 64, 9);
  const TransformSpec spec{WaveletFamily::Haar, 2};
  const CRowMat fast = restricted_candidate_rows(model, support, spec, 0);
  std::vector<Index> order;
  for (const auto &g : model.candidates.groups)
    order.insert(order.end(), g.begin(), g.end());
  const CMat dense = oracle::dense_restricted_rows(model, support, spec, 0, order);
  EXPECT_LT((CMat(fast) - dense).norm(), 1e-10 * dense.norm());
}

TEST(SmwDowndate, ZeroBlockOnlyUpdatesBookkeeping) {
  Rng rng(13);
  const auto model = oracle::random_model(rng, {4, 4}, 1, Undersampling::Both);
  const auto support = oracle::random_support(rng, 16, 4);
  const auto state = build_full_crb(model, support, TransformSpec{WaveletFamily::Haar, 2}, 0);
  const GroupBlock zero{CMat::Zero(1, 4), 3, 0, 0};
  const auto next = smw_downdate(state, zero);
  EXPECT_EQ((next.inv_gram - state.inv_gram).norm(), 0.0);
  EXPECT_EQ(next.active_groups.size(), state.active_groups.size() - 1);
  EXPECT_FALSE(std::binary_search(next.active_groups.begin(), next.active_groups.end(), Index{3}));
  EXPECT_EQ(downdate_trace(state, zero), state.trace);
}

TEST(SmwDowndate, RankOneMatchesShermanMorrison) {
  Rng rng(14);
  CMat rows(5, 3);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j)
      rows(i, j) = rng.complex_normal(1.0);
  const auto state = crb_from_rows(rows, iota_groups(5));
  const CMat b = rows.row(2);
  const auto next = smw_downdate(state, GroupBlock{b, 2, 0, 0});
  const CMat C = (rows.adjoint() * rows).inverse();
  const Complex denom = 1.0 - (b * C * b.adjoint())(0, 0);
  const CMat sm = C + (C * b.adjoint() * b * C) / denom;
  EXPECT_LT(rel(next.inv_gram, sm), 1e-12);
  CMat reduced(4, 3);
  reduced << rows.topRows(2), rows.bottomRows(2);
  EXPECT_LT(rel(next.inv_gram, (reduced.adjoint() * reduced).inverse()), 1e-12);
}

TEST(SmwDowndate, TwoCoilGroupMatchesRebuild) {
  Rng rng(15);
  const TransformSpec spec{WaveletFamily::Daubechies4, 3};
  const auto model = oracle::random_model(rng, {8, 8}, 2, Undersampling::Both);
  const auto support = oracle::random_support(rng, 64, 12);
  const auto state = build_full_crb(model, support, spec, 0);
  const Index g = 27;
  const auto next = smw_downdate(state, group_block(model, support, spec, 0, 0, g));
  auto rest = iota_groups(model.candidates.L());
  rest.erase(rest.begin() + g);
  const auto rebuilt = build_full_crb(model, support, spec, 0, 0, rest);
  EXPECT_LT(rel(next.inv_gram, rebuilt.inv_gram), 1e-8);
  EXPECT_EQ(next.active_groups, rebuilt.active_groups);
}

TEST(SmwDowndate, TwentyChainedDeletions) {
  Rng rng(16);
  const TransformSpec spec{WaveletFamily::Daubechies4, 3};
  for (Index C : {1, 2, 4}) {
    const auto model = oracle::random_model(rng, {8, 8}, C, Undersampling::Both);
    const auto support = oracle::random_support(rng, 64, 16);
    auto state = build_full_crb(model, support, spec, 0);
    auto active = state.active_groups;
    for (int d = 0; d < 20; ++d) {
      const Index pick = active[static_cast<std::size_t>(rng.below(active.size()))];
      state = smw_downdate(state, group_block(model, support, spec, 0, 0, pick));
      active.erase(std::find(active.begin(), active.end(), pick));
    }
    const auto rebuilt = build_full_crb(model, support, spec, 0, 0, active);
    EXPECT_LT(rel(state.inv_gram, rebuilt.inv_gram), 1e-7) << "C=" << C;
    EXPECT_NEAR(state.trace, rebuilt.trace, 1e-7 * rebuilt.trace);
  }
}

TEST(DowndateTrace, EqualsTraceOfFullDowndate) {
  Rng rng(17);
  const TransformSpec spec{WaveletFamily::Haar, 3};
  const auto model = oracle::random_model(rng, {8, 8}, 2, Undersampling::Dim2);
  const auto support = oracle::random_support(rng, 64, 20);
  const auto state = build_full_crb(model, support, spec, 0);
  for (Index g = 0; g < model.candidates.L(); ++g) {
    const auto block = group_block(model, support, spec, 0, 0, g);
    const double fast = downdate_trace(state, block);
    const double full = smw_downdate(state, block).trace;
    EXPECT_NEAR(fast, full, 1e-10 * full);
  }
}

TEST(DowndateTrace, RankCollapseIsInfinite) {
  const CMat rows = CMat::Identity(3, 3);
  const auto state = crb_from_rows(rows, {0, 1, 2});
  const GroupBlock block{CMat(rows.row(1)), 1, 0, 0};
  EXPECT_TRUE(std::isinf(downdate_trace(state, block)));
  EXPECT_THROW(smw_downdate(state, block), InfeasibleDesign);
}

TEST(DowndateTrace, InactiveGroupIsRejected) {
  const CMat rows = CMat::Identity(3, 3);
  const auto state = crb_from_rows(rows, {0, 1, 2});
  EXPECT_THROW(downdate_trace(state, GroupBlock{CMat::Zero(1, 3), 7, 0, 0}), InvalidArgument);
  EXPECT_THROW(smw_downdate(state, GroupBlock{CMat::Zero(1, 3), 7, 0, 0}), InvalidArgument);
}

TEST(CrbFromRows, NearSingularIsInfeasible) {
  CMat rows = CMat::Identity(3, 3);
  rows(2, 2) = 1e-7; // condition 1e14
  EXPECT_THROW(crb_from_rows(rows, {0, 1, 2}), InfeasibleDesign);
}

TEST(TraceEquality, IdentityTransformIsExact) {
  Rng rng(18);
  const auto model = oracle::random_model(rng, {4, 4}, 1, Undersampling::Both);
  const TransformSpec spec{WaveletFamily::Identity, 1};
  const auto support = oracle::random_support(rng, 16, 5);
  const auto state = build_full_crb(model, support, spec, 0);
  EXPECT_NEAR(image_domain_crb_trace(state, support, model.grid.dims, spec), state.trace, 1e-14 * state.trace);
  EXPECT_EQ(coefficient_domain_crb_trace(state, support, 16), state.trace);
}

TEST(TraceEquality, WaveletsAgainstExplicitMatrices) {
  Rng rng(19);
  const std::array<std::pair<TransformSpec, Index>, 2> cases{
      std::pair{TransformSpec{WaveletFamily::Daubechies4, 3}, Index{6}},
      std::pair{TransformSpec{WaveletFamily::Haar, 1}, Index{4}}};
  for (const auto &[spec, S] : cases) {
    const auto model = oracle::random_model(rng, {8, 8}, 1, Undersampling::Both);
    const auto support = oracle::random_support(rng, 64, S);
    const auto state = build_full_crb(model, support, spec, 0);
    const CMat psi = oracle::dense_wavelet(model.grid.dims, spec);
    CMat U = CMat::Zero(64, S);
    for (Index s = 0; s < S; ++s)
      U(support.indices[static_cast<std::size_t>(s)], s) = 1.0;
    const double coef = (U * state.inv_gram * U.adjoint()).trace().real();
    const double image = (psi.adjoint() * U * state.inv_gram * U.adjoint() * psi).trace().real();
    EXPECT_NEAR(coefficient_domain_crb_trace(state, support, 64), coef, 1e-8 * coef);
    EXPECT_NEAR(image_domain_crb_trace(state, support, model.grid.dims, spec), image, 1e-8 * image);
    EXPECT_NEAR(image, state.trace, 1e-8 * state.trace);
  }
}

TEST(OracleLsq, NoiselessRecovery) {
  Rng rng(20);
  CMat rows(10, 4);
  for (Index i = 0; i < rows.size(); ++i)
    rows.data()[i] = rng.complex_normal(1.0);
  const SupportSet support{{1, 4, 6, 7}, ""};
  const CVec truth = oracle::random_vector(rng, 4);
  const CVec est = oracle_lsq_estimate(rows * truth, rows, support, 9);
  EXPECT_EQ(est.size(), 9);
  EXPECT_LT((est - zero_fill(truth, support, 9)).norm(), 1e-10 * truth.norm());
}

TEST(OracleLsq, SingleCoefficientIsScalarLeastSquares) {
  CMat a(3, 1);
  a << Complex(1, 2), Complex(0, -1), Complex(3, 0);
  CVec d(3);
  d << Complex(0.5, 0), Complex(1, 1), Complex(-2, 0.3);
  const SupportSet support{{2}, ""};
  const CVec est = oracle_lsq_estimate(d, a, support, 4);
  const Complex expected = (a.adjoint() * d)(0, 0) / a.squaredNorm();
  EXPECT_NEAR(std::abs(est(2) - expected), 0.0, 1e-14);
  EXPECT_EQ(std::abs(est(0)) + std::abs(est(1)) + std::abs(est(3)), 0.0);
}

TEST(OracleLsq, RankDeficientIsInfeasible) {
  CMat rows = CMat::Zero(4, 2);
  rows.col(0).setOnes();
  EXPECT_THROW(oracle_lsq_estimate(CVec::Ones(4), rows, SupportSet{{0, 1}, ""}, 2), InfeasibleDesign);
}

TEST(OracleLsq, EmpiricalCovarianceMatchesCrb) {
  Rng rng(21);
  const Index S = 3, M = 8, draws = 100000;
  CMat rows(M, S);
  for (Index i = 0; i < rows.size(); ++i)
    rows.data()[i] = rng.complex_normal(1.0);
  const auto state = crb_from_rows(rows, iota_groups(M));
  const SupportSet support{{0, 1, 2}, ""};
  const CVec truth = oracle::random_vector(rng, S);
  CMat sum = CMat::Zero(S, S);
  RMat sumsq = RMat::Zero(S, S);
  CVec bias = CVec::Zero(S);
  for (Index d = 0; d < draws; ++d) {
    CVec y = rows * truth;
    for (Index i = 0; i < M; ++i)
      y(i) += rng.complex_normal(1.0);
    const CVec e = oracle_lsq_estimate(y, rows, support, S) - truth;
    bias += e;
    for (Index a = 0; a < S; ++a)
      for (Index b = 0; b < S; ++b) {
        const Complex v = e(a) * std::conj(e(b));
        sum(a, b) += v;
        sumsq(a, b) += std::norm(v);
      }
  }
  const double n = static_cast<double>(draws);
  for (Index a = 0; a < S; ++a) {
    // unbiased: mean error within 5 standard errors of zero
    EXPECT_LT(std::abs(bias(a) / n), 5.0 * std::sqrt(state.inv_gram(a, a).real() / n));
    for (Index b = 0; b < S; ++b) {
      const Complex mean = sum(a, b) / n;
      const double se = std::sqrt((sumsq(a, b) / n - std::norm(mean)) / n);
      EXPECT_LT(std::abs(mean - state.inv_gram(a, b)), 5.0 * se) << a << "," << b;
    }
  }
}
