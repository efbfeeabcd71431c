#include <gtest/gtest.h>

#include <set>

#include <oedipus/baselines.hpp>
#include <oedipus/design.hpp>
#include <oedipus/testing/oracles.hpp>

using namespace oedipus;

namespace {

CandidateSet candidates(std::array<Index, 2> dims, Undersampling u) {
  return build_cartesian_candidates({dims, {1.0, 1.0}}, 1.0, u, 1);
}

BaselineSpec spec_with(BaselineKind kind, double R) {
  BaselineSpec s;
  s.kind = kind;
  s.R = R;
  return s;
}

} // namespace

TEST(Uniform, EveryOtherLineOf160) {
  const auto cs = candidates({256, 160}, Undersampling::Dim2);
  const auto p = uniform_pattern(spec_with(BaselineKind::Uniform1D, 2.0), cs);
  ASSERT_EQ(p.kept_groups.size(), 80u);
  for (std::size_t i = 0; i < 80; ++i)
    EXPECT_EQ(p.kept_groups[i], static_cast<Index>(2 * i));
}

TEST(Uniform, RateOneKeepsAll) {
  const auto cs = candidates({8, 8}, Undersampling::Dim1);
  EXPECT_EQ(uniform_pattern(spec_with(BaselineKind::Uniform1D, 1.0), cs).kept_groups.size(), 8u);
}

TEST(Uniform, EightLinesAtRateFour) {
  const auto cs = candidates({4, 8}, Undersampling::Dim2);
  EXPECT_EQ(uniform_pattern(spec_with(BaselineKind::Uniform1D, 4.0), cs).kept_groups, (std::vector<Index>{0, 4}));
}

TEST(Uniform, RateAboveLIsRejected) {
  const auto cs = candidates({4, 8}, Undersampling::Dim2);
  EXPECT_THROW(uniform_pattern(spec_with(BaselineKind::Uniform1D, 9.0), cs), InvalidArgument);
}

TEST(Uniform, IsSeedIndependent) {
  const auto cs = candidates({8, 16}, Undersampling::Dim2);
  auto a = spec_with(BaselineKind::Uniform1D, 3.0);
  auto b = a;
  b.seed = 99;
  EXPECT_EQ(uniform_pattern(a, cs).kept_groups, uniform_pattern(b, cs).kept_groups);
}

TEST(Caipi, RyTwoRzOneIsUniformRows) {
  const auto cs = candidates({8, 8}, Undersampling::Both);
  auto s = spec_with(BaselineKind::Caipi2D, 2.0);
  s.caipi_ry = 2;
  s.caipi_rz = 1;
  s.caipi_shift = 0;
  EXPECT_EQ(caipi_pattern(s, cs).kept_groups, uniform_pattern(s, cs).kept_groups);
}

TEST(Caipi, ShearedLatticeMatchesModularEnumeration) {
  const auto cs = candidates({8, 8}, Undersampling::Both);
  for (Index shift : {0, 1}) {
    auto s = spec_with(BaselineKind::Caipi2D, 4.0);
    s.caipi_ry = 2;
    s.caipi_rz = 2;
    s.caipi_shift = shift;
    std::vector<Index> expected;
    for (Index ky = 0; ky < 8; ++ky)
      for (Index kz = 0; kz < 8; ++kz)
        if (ky % 2 == 0 && kz % 2 == ((ky / 2) * shift) % 2)
          expected.push_back(ky * 8 + kz);
    const auto p = caipi_pattern(s, cs);
    EXPECT_EQ(p.kept_groups, expected);
    EXPECT_EQ(p.kept_groups.size(), 16u);
  }
}

TEST(Caipi, ShiftZeroIsAxisAligned) {
  const auto cs = candidates({8, 8}, Undersampling::Both);
  auto s = spec_with(BaselineKind::Caipi2D, 4.0);
  s.caipi_shift = 0;
  for (Index g : caipi_pattern(s, cs).kept_groups) {
    EXPECT_EQ((g / 8) % 2, 0);
    EXPECT_EQ((g % 8) % 2, 0);
  }
}

TEST(Caipi, RejectsNonFactorableAndLineGrouping) {
  auto s = spec_with(BaselineKind::Caipi2D, 6.0);
  s.caipi_ry = 4;
  EXPECT_THROW(caipi_pattern(s, candidates({8, 8}, Undersampling::Both)), InvalidArgument);
  EXPECT_THROW(caipi_pattern(spec_with(BaselineKind::Caipi2D, 2.5), candidates({8, 8}, Undersampling::Both)),
               InvalidArgument);
  EXPECT_THROW(caipi_pattern(spec_with(BaselineKind::Caipi2D, 2.0), candidates({8, 8}, Undersampling::Dim2)),
               InvalidArgument);
}

TEST(Poisson, FullTargetSamplesEverything) {
  const auto cs = candidates({16, 16}, Undersampling::Both);
  for (std::uint64_t seed : {1u, 2u}) {
    auto s = spec_with(BaselineKind::PoissonDisc, 1.0);
    s.seed = seed;
    EXPECT_EQ(poisson_disc_pattern(s, cs, cs.L()).kept_groups.size(), 256u);
  }
}

TEST(Poisson, DeterministicForSeed) {
  const auto cs = candidates({32, 32}, Undersampling::Both);
  auto s = spec_with(BaselineKind::PoissonDisc, 3.0);
  s.seed = 17;
  EXPECT_EQ(poisson_disc_pattern(s, cs, 341).kept_groups, poisson_disc_pattern(s, cs, 341).kept_groups);
  auto t = s;
  t.seed = 18;
  EXPECT_NE(poisson_disc_pattern(s, cs, 341).kept_groups, poisson_disc_pattern(t, cs, 341).kept_groups);
}

TEST(Poisson, MinimumDistanceAndCountOn64x64) {
  const auto cs = candidates({64, 64}, Undersampling::Both);
  auto s = spec_with(BaselineKind::PoissonDisc, 4.0);
  s.seed = 3;
  const Index target = 1024;
  const auto r = poisson_disc(s, cs, target);
  EXPECT_EQ(static_cast<Index>(r.pattern.kept_groups.size()), target);
  EXPECT_GT(r.radius, 1.0);
  double closest = 1e300;
  for (std::size_t i = 0; i < r.outer.size(); ++i)
    for (std::size_t j = i + 1; j < r.outer.size(); ++j) {
      const double d1 = static_cast<double>(r.outer[i] / 64 - r.outer[j] / 64);
      const double d2 = static_cast<double>(r.outer[i] % 64 - r.outer[j] % 64);
      closest = std::min(closest, std::hypot(d1, d2));
    }
  EXPECT_GE(closest, r.radius);
  // centre 16 x 16 block fully sampled
  const std::set<Index> kept(r.pattern.kept_groups.begin(), r.pattern.kept_groups.end());
  for (Index a = 24; a < 40; ++a)
    for (Index b = 24; b < 40; ++b)
      EXPECT_TRUE(kept.count(a * 64 + b));
}

TEST(Poisson, LineGroupingKeepsCentreLinesAndHitsTarget) {
  const auto cs = candidates({64, 64}, Undersampling::Dim2);
  auto s = spec_with(BaselineKind::PoissonDisc, 2.0);
  s.seed = 5;
  const auto p = poisson_disc_pattern(s, cs, 32);
  EXPECT_EQ(p.kept_groups.size(), 32u);
  for (Index g = 24; g < 40; ++g)
    EXPECT_TRUE(std::binary_search(p.kept_groups.begin(), p.kept_groups.end(), g));
}

TEST(Poisson, TargetBelowCentreIsRejected) {
  const auto cs = candidates({64, 64}, Undersampling::Dim2);
  EXPECT_THROW(poisson_disc_pattern(spec_with(BaselineKind::PoissonDisc, 8.0), cs, 8), InvalidArgument);
}

TEST(BestOf, SingleRealizationIsItself) {
  const auto cs = candidates({16, 16}, Undersampling::Both);
  auto s = spec_with(BaselineKind::PoissonDisc, 2.0);
  s.center_block = 4;
  s.seed = 4;
  const auto best = best_of_realizations({s}, cs, 128, [](const SamplingPattern &) { return 1.0; });
  EXPECT_EQ(best.pattern.kept_groups, poisson_disc_pattern(s, cs, 128).kept_groups);
  EXPECT_EQ(best.seed, 4u);
}

TEST(BestOf, ArgminOfCrbAcrossTenSeeds) {
  Rng rng(9);
  const auto model = oracle::random_model(rng, {16, 16}, 1, Undersampling::Both);
  const auto support = oracle::random_support(rng, 256, 20);
  const TransformSpec spec{WaveletFamily::Haar, 2};
  std::vector<BaselineSpec> specs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = spec_with(BaselineKind::PoissonDisc, 4.0);
    s.center_block = 4;
    s.seed = seed;
    specs.push_back(s);
  }
  auto score = [&](const SamplingPattern &p) { return evaluate_pattern_crb(p, model, {support}, spec, {}); };
  const auto best = best_of_realizations(specs, model.candidates, 64, score);
  double expected = std::numeric_limits<double>::infinity();
  for (const auto &s : specs)
    expected = std::min(expected, score(poisson_disc_pattern(s, model.candidates, 64)));
  EXPECT_DOUBLE_EQ(best.score, expected);
  EXPECT_DOUBLE_EQ(score(best.pattern), expected);
}

TEST(BestOf, TiesGoToLowerSeed) {
  const auto cs = candidates({16, 16}, Undersampling::Both);
  auto a = spec_with(BaselineKind::PoissonDisc, 2.0);
  a.center_block = 4;
  auto b = a;
  a.seed = 8;
  b.seed = 3;
  EXPECT_EQ(best_of_realizations({a, b}, cs, 128, [](const SamplingPattern &) { return 2.0; }).seed, 3u);
}

TEST(BestOf, AllInfiniteFails) {
  const auto cs = candidates({16, 16}, Undersampling::Both);
  auto s = spec_with(BaselineKind::PoissonDisc, 2.0);
  s.center_block = 4;
  EXPECT_THROW(best_of_realizations({s}, cs, 128,
                                    [](const SamplingPattern &) { return std::numeric_limits<double>::infinity(); }),
               GenerationFailure);
  EXPECT_THROW(best_of_realizations({}, cs, 128, [](const SamplingPattern &) { return 0.0; }), InvalidArgument);
}
