#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "random.hpp"
#include "types.hpp"

namespace oedipus {

// Rectilinear voxel lattice. Voxel n = n1*N2 + n2 sits at (n1*fov1/N1, n2*fov2/N2)
// in millimetres.
struct ImageGrid {
  std::array<Index, 2> dims{0, 0};
  std::array<double, 2> fov{1.0, 1.0};

  Index size() const { return dims[0] * dims[1]; }
  Index n1(Index n) const { return n / dims[1]; }
  Index n2(Index n) const { return n % dims[1]; }
  std::array<double, 2> center(Index n) const {
    return {static_cast<double>(n1(n)) * fov[0] / static_cast<double>(dims[0]),
            static_cast<double>(n2(n)) * fov[1] / static_cast<double>(dims[1])};
  }
  friend bool operator==(const ImageGrid &, const ImageGrid &) = default;
};

inline void validate(const ImageGrid &grid) {
  if (grid.dims[0] <= 0 || grid.dims[1] <= 0)
    throw InvalidArgument("image grid must have positive dimensions");
  if (!(grid.fov[0] > 0.0) || !(grid.fov[1] > 0.0))
    throw InvalidArgument("field of view must be positive");
}

enum class VoxelBasis { Dirac, Rect };

// Which k-space axes the design may thin out. Dim2 alone groups whole readout
// lines (one group per dim-2 phase-encode index); Both makes every k-space
// location its own group.
enum class Undersampling { Dim1, Dim2, Both };

inline double sinc(double x) {
  if (std::abs(x) < 1e-12)
    return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Candidate k-space samples on a (possibly oversampled) Cartesian grid.
// Location q = m1*G2 + m2 has frequency index m - floor(G/2) along each axis,
// so index floor(G/2) is DC. Candidate p = q*n_coils + coil.
struct CandidateSet {
  std::array<Index, 2> kdims{0, 0};
  std::array<double, 2> dk{0.0, 0.0}; // cycles/mm
  double oversampling = 1.0;
  Index n_coils = 1;
  Undersampling undersampling = Undersampling::Both;
  std::vector<std::vector<Index>> groups;          // candidate indices per group
  std::vector<std::vector<Index>> group_locations; // location indices per group

  Index locations() const { return kdims[0] * kdims[1]; }
  Index P() const { return locations() * n_coils; }
  Index L() const { return static_cast<Index>(groups.size()); }
  Index C() const { return groups.empty() ? 0 : static_cast<Index>(groups.front().size()); }

  Index location_of(Index p) const { return p / n_coils; }
  Index coil_of(Index p) const { return p % n_coils; }
  Index frequency_index(int axis, Index m) const { return m - kdims[axis] / 2; }
  std::array<double, 2> k(Index q) const {
    const Index m1 = q / kdims[1];
    const Index m2 = q % kdims[1];
    return {static_cast<double>(frequency_index(0, m1)) * dk[0],
            static_cast<double>(frequency_index(1, m2)) * dk[1]};
  }
};

inline CandidateSet build_cartesian_candidates(const ImageGrid &grid, double oversampling,
                                               Undersampling undersampling, Index n_coils = 1) {
  if (grid.dims[0] <= 0 || grid.dims[1] <= 0)
    throw InvalidArgument("zero-sized image grid");
  validate(grid);
  if (!(oversampling >= 1.0))
    throw InvalidArgument("oversampling must be >= 1");
  if (n_coils < 1)
    throw InvalidArgument("need at least one coil");

  CandidateSet set;
  set.oversampling = oversampling;
  set.n_coils = n_coils;
  set.undersampling = undersampling;
  for (int d = 0; d < 2; ++d) {
    set.kdims[d] = static_cast<Index>(std::ceil(oversampling * static_cast<double>(grid.dims[d]) - 1e-9));
    // FOV is fixed; oversampling shrinks the k-space step.
    set.dk[d] = 1.0 / (oversampling * grid.fov[d]);
  }
  const Index G1 = set.kdims[0];
  const Index G2 = set.kdims[1];

  auto push_group = [&](std::vector<Index> locs) {
    std::vector<Index> cands;
    cands.reserve(locs.size() * static_cast<std::size_t>(n_coils));
    for (Index q : locs)
      for (Index j = 0; j < n_coils; ++j)
        cands.push_back(q * n_coils + j);
    set.groups.push_back(std::move(cands));
    set.group_locations.push_back(std::move(locs));
  };

  switch (undersampling) {
  case Undersampling::Both:
    for (Index q = 0; q < G1 * G2; ++q)
      push_group({q});
    break;
  case Undersampling::Dim2:
    for (Index m2 = 0; m2 < G2; ++m2) {
      std::vector<Index> locs;
      for (Index m1 = 0; m1 < G1; ++m1)
        locs.push_back(m1 * G2 + m2);
      push_group(std::move(locs));
    }
    break;
  case Undersampling::Dim1:
    for (Index m1 = 0; m1 < G1; ++m1) {
      std::vector<Index> locs;
      for (Index m2 = 0; m2 < G2; ++m2)
        locs.push_back(m1 * G2 + m2);
      push_group(std::move(locs));
    }
    break;
  }
  return set;
}

// Everything that defines the candidate rows a_p^t.
struct EncodingModel {
  ImageGrid grid;
  VoxelBasis basis = VoxelBasis::Dirac;
  std::vector<CMat> coil_maps; // T entries, each n_coils x N
  CandidateSet candidates;

  Index N() const { return grid.size(); }
  Index T() const { return static_cast<Index>(coil_maps.size()); }
  Index n_coils() const { return candidates.n_coils; }
};

inline void validate(const EncodingModel &model) {
  validate(model.grid);
  if (model.coil_maps.empty())
    throw InvalidArgument("encoding model needs at least one coil map set");
  for (const auto &maps : model.coil_maps) {
    if (maps.rows() != model.candidates.n_coils || maps.cols() != model.N())
      throw InvalidArgument("coil map set does not match coil count and grid size");
  }
  if (model.candidates.L() == 0)
    throw InvalidArgument("empty candidate set");
}

inline EncodingModel make_encoding_model(const ImageGrid &grid, VoxelBasis basis, std::vector<CMat> coil_maps,
                                         double oversampling, Undersampling undersampling) {
  if (coil_maps.empty())
    throw InvalidArgument("encoding model needs at least one coil map set");
  EncodingModel model;
  model.grid = grid;
  model.basis = basis;
  model.candidates = build_cartesian_candidates(grid, oversampling, undersampling, coil_maps.front().rows());
  model.coil_maps = std::move(coil_maps);
  validate(model);
  return model;
}

// Weight b_p of the voxel basis at frequency index f along one axis.
inline double basis_weight(VoxelBasis basis, double k, double voxel_size) {
  return basis == VoxelBasis::Dirac ? 1.0 : sinc(k * voxel_size);
}

// Per-axis factor of the separable encoding: E[m, n] = b(k_m) exp(-i 2 pi k_m x_n),
// shape kdims[axis] x dims[axis].
inline CMat axis_encoding(const EncodingModel &model, int axis) {
  const auto &cs = model.candidates;
  const Index G = cs.kdims[axis];
  const Index Nd = model.grid.dims[axis];
  const double voxel = model.grid.fov[axis] / static_cast<double>(Nd);
  CMat E(G, Nd);
  for (Index m = 0; m < G; ++m) {
    const double k = static_cast<double>(cs.frequency_index(axis, m)) * cs.dk[axis];
    const double b = basis_weight(model.basis, k, voxel);
    for (Index n = 0; n < Nd; ++n) {
      const double phase = -2.0 * std::numbers::pi * k * static_cast<double>(n) * voxel;
      E(m, n) = b * Complex(std::cos(phase), std::sin(phase));
    }
  }
  return E;
}

inline CVec candidate_row(const EncodingModel &model, Index p, Index t) {
  const auto &cs = model.candidates;
  if (p < 0 || p >= cs.P())
    throw InvalidArgument("candidate index out of range");
  if (t < 0 || t >= model.T())
    throw InvalidArgument("coil map set index out of range");
  const Index q = cs.location_of(p);
  const Index coil = cs.coil_of(p);
  const auto k = cs.k(q);
  const double b = basis_weight(model.basis, k[0], model.grid.fov[0] / static_cast<double>(model.grid.dims[0])) *
                   basis_weight(model.basis, k[1], model.grid.fov[1] / static_cast<double>(model.grid.dims[1]));
  const auto &maps = model.coil_maps[static_cast<std::size_t>(t)];
  CVec row(model.N());
  for (Index n = 0; n < model.N(); ++n) {
    const auto r = model.grid.center(n);
    const double phase = -2.0 * std::numbers::pi * (k[0] * r[0] + k[1] * r[1]);
    row(n) = maps(coil, n) * b * Complex(std::cos(phase), std::sin(phase));
  }
  return row;
}

// Gaussian-lobe receive profiles placed around the FOV boundary, each with a
// smooth linear phase. A single coil is the unit map.
inline CMat synthesize_coil_maps(const ImageGrid &grid, Index n_coils, double decay, std::uint64_t seed) {
  validate(grid);
  if (n_coils < 1)
    throw InvalidArgument("n_coils must be >= 1");
  if (!(decay > 0.0))
    throw InvalidArgument("decay must be positive");
  const Index N = grid.size();
  CMat maps(n_coils, N);
  if (n_coils == 1) {
    maps.setOnes();
    return maps;
  }
  Rng rng(seed);
  for (Index j = 0; j < n_coils; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_coils) +
                         rng.uniform(-0.1, 0.1);
    const double slope_u = rng.uniform(-0.5, 0.5);
    const double slope_v = rng.uniform(-0.5, 0.5);
    const double cu = std::cos(theta);
    const double cv = std::sin(theta);
    for (Index n = 0; n < N; ++n) {
      const auto r = grid.center(n);
      // normalised coordinates: FOV maps onto [-1, 1)^2
      const double u = 2.0 * r[0] / grid.fov[0] - 1.0;
      const double v = 2.0 * r[1] / grid.fov[1] - 1.0;
      const double d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
      const double mag = std::exp(-decay * d2);
      const double phase = theta + std::numbers::pi * (slope_u * u + slope_v * v);
      maps(j, n) = std::polar(mag, phase);
    }
  }
  return maps;
}

// Linear operator A_Omega for the rows of a set of retained groups under one
// coil map set. Data ordering: retained groups ascending, candidates within a
// group in CandidateSet order.
class PatternedEncoder {
public:
  PatternedEncoder(const EncodingModel &model, Index t, std::vector<Index> kept_groups)
      : grid_(model.grid), kdims_(model.candidates.kdims), n_coils_(model.n_coils()) {
    validate(model);
    if (t < 0 || t >= model.T())
      throw InvalidArgument("coil map set index out of range");
    maps_ = model.coil_maps[static_cast<std::size_t>(t)];
    E1_ = axis_encoding(model, 0);
    E2_ = axis_encoding(model, 1);
    std::sort(kept_groups.begin(), kept_groups.end());
    const auto &cs = model.candidates;
    mask_ = RMat::Zero(kdims_[0], kdims_[1]);
    for (Index g : kept_groups) {
      if (g < 0 || g >= cs.L())
        throw InvalidArgument("pattern group index out of range");
      for (Index p : cs.groups[static_cast<std::size_t>(g)]) {
        locations_.push_back(cs.location_of(p));
        coils_.push_back(cs.coil_of(p));
      }
      for (Index q : cs.group_locations[static_cast<std::size_t>(g)])
        mask_(q / kdims_[1], q % kdims_[1]) = 1.0;
    }
    prepare_normal();
  }

  Index rows() const { return static_cast<Index>(locations_.size()); }
  Index cols() const { return grid_.size(); }
  const RMat &mask() const { return mask_; }

  CVec apply(const CVec &f) const {
    check_image(f);
    CVec d(rows());
    std::vector<CRowMat> kspace(static_cast<std::size_t>(n_coils_));
    for (Index j = 0; j < n_coils_; ++j)
      kspace[static_cast<std::size_t>(j)] = E1_ * coil_image(f, j) * E2_.transpose();
    for (Index i = 0; i < rows(); ++i) {
      const Index q = locations_[static_cast<std::size_t>(i)];
      d(i) = kspace[static_cast<std::size_t>(coils_[static_cast<std::size_t>(i)])](q / kdims_[1], q % kdims_[1]);
    }
    return d;
  }

  CVec adjoint(const CVec &d) const {
    if (d.size() != rows())
      throw InvalidArgument("data length does not match pattern");
    std::vector<CRowMat> kspace(static_cast<std::size_t>(n_coils_), CRowMat::Zero(kdims_[0], kdims_[1]));
    for (Index i = 0; i < rows(); ++i) {
      const Index q = locations_[static_cast<std::size_t>(i)];
      kspace[static_cast<std::size_t>(coils_[static_cast<std::size_t>(i)])](q / kdims_[1], q % kdims_[1]) += d(i);
    }
    CVec f = CVec::Zero(cols());
    for (Index j = 0; j < n_coils_; ++j) {
      CRowMat x = E1_.adjoint() * kspace[static_cast<std::size_t>(j)] * E2_.conjugate();
      accumulate_coil(f, x, j);
    }
    return f;
  }

  // A^H A f without materialising the data vector.
  CVec normal(const CVec &f) const {
    check_image(f);
    if (!separable_)
      return adjoint(apply(f));
    CVec out = CVec::Zero(cols());
    for (Index j = 0; j < n_coils_; ++j) {
      CRowMat x = coil_image(f, j);
      CRowMat y = left_identity_ ? CRowMat(left_scale_ * x * K2_) : CRowMat(K1_ * x * K2_);
      accumulate_coil(out, y, j);
    }
    return out;
  }

  // Diagonal of A^H A.
  RVec normal_diagonal() const {
    double weight = 0.0;
    for (Index i = 0; i < static_cast<Index>(locations_.size()); i += n_coils_) {
      const Index q = locations_[static_cast<std::size_t>(i)];
      weight += std::norm(E1_(q / kdims_[1], 0)) * std::norm(E2_(q % kdims_[1], 0));
    }
    RVec diag(cols());
    for (Index n = 0; n < cols(); ++n)
      diag(n) = weight * maps_.col(n).squaredNorm();
    return diag;
  }

  // Diagonal of A^H A had every candidate location been kept.
  RVec full_sampling_diagonal() const {
    const double weight = E1_.col(0).squaredNorm() * E2_.col(0).squaredNorm();
    RVec diag(cols());
    for (Index n = 0; n < cols(); ++n)
      diag(n) = weight * maps_.col(n).squaredNorm();
    return diag;
  }

private:
  void check_image(const CVec &f) const {
    if (f.size() != cols())
      throw InvalidArgument("image length does not match grid");
  }

  CRowMat coil_image(const CVec &f, Index j) const {
    CRowMat x(grid_.dims[0], grid_.dims[1]);
    for (Index n = 0; n < cols(); ++n)
      x(n / grid_.dims[1], n % grid_.dims[1]) = maps_(j, n) * f(n);
    return x;
  }

  void accumulate_coil(CVec &f, const CRowMat &x, Index j) const {
    for (Index n = 0; n < cols(); ++n)
      f(n) += std::conj(maps_(j, n)) * x(n / grid_.dims[1], n % grid_.dims[1]);
  }

  // A separable mask m1 m2^T lets A^H A act as K1 X K2 per coil.
  void prepare_normal() {
    RVec m1 = RVec::Zero(kdims_[0]);
    RVec m2 = RVec::Zero(kdims_[1]);
    for (Index a = 0; a < kdims_[0]; ++a)
      for (Index b = 0; b < kdims_[1]; ++b)
        if (mask_(a, b) != 0.0) {
          m1(a) = 1.0;
          m2(b) = 1.0;
        }
    separable_ = (m1 * m2.transpose() - mask_).cwiseAbs().maxCoeff() == 0.0;
    if (!separable_)
      return;
    K1_ = E1_.adjoint() * m1.cast<Complex>().asDiagonal() * E1_;
    K2_ = E2_.transpose() * m2.cast<Complex>().asDiagonal() * E2_.conjugate();
    left_scale_ = K1_(0, 0).real();
    const CMat scaled_identity = left_scale_ * CMat::Identity(K1_.rows(), K1_.cols());
    left_identity_ = (K1_ - scaled_identity).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, left_scale_);
  }

  ImageGrid grid_;
  std::array<Index, 2> kdims_;
  Index n_coils_;
  CMat maps_;
  CMat E1_, E2_;
  RMat mask_;
  std::vector<Index> locations_;
  std::vector<Index> coils_;
  bool separable_ = false;
  bool left_identity_ = false;
  double left_scale_ = 1.0;
  CMat K1_, K2_;
};

} // namespace oedipus
