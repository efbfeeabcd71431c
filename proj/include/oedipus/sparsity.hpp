#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "types.hpp"

namespace oedipus {

// Identity is the trivial (pixel-domain) transform, handy for tests and for
// images that are sparse on their own.
enum class WaveletFamily { Daubechies4, Haar, Identity };

// Orthonormal multi-level 2D wavelet transform with periodic boundaries.
// Coefficients use the Mallat layout of an N1 x N2 array (approximation band in
// the top-left corner), flattened row-major, so Q = N.
struct TransformSpec {
  WaveletFamily family = WaveletFamily::Daubechies4;
  int levels = 3;
};

// Two-channel orthonormal filter bank. highpass[n] = (-1)^n lowpass[len-1-n].
struct FilterBank {
  RVec lowpass;
  RVec highpass;

  static FilterBank from_lowpass(RVec h) {
    FilterBank fb;
    const Index len = h.size();
    fb.highpass.resize(len);
    for (Index n = 0; n < len; ++n)
      fb.highpass(n) = ((n % 2 == 0) ? 1.0 : -1.0) * h(len - 1 - n);
    fb.lowpass = std::move(h);
    return fb;
  }
};

inline FilterBank filter_bank(WaveletFamily family) {
  RVec h;
  if (family == WaveletFamily::Identity) {
    h = RVec::Ones(1);
  } else if (family == WaveletFamily::Haar) {
    h.resize(2);
    h << 1.0, 1.0;
    h /= std::sqrt(2.0);
  } else {
    // 4-tap Daubechies (two vanishing moments)
    const double s3 = std::sqrt(3.0);
    h.resize(4);
    h << 1.0 + s3, 3.0 + s3, 3.0 - s3, 1.0 - s3;
    h /= 4.0 * std::sqrt(2.0);
  }
  return FilterBank::from_lowpass(std::move(h));
}

inline void validate_transform(const std::array<Index, 2> &dims, const TransformSpec &spec) {
  if (spec.family == WaveletFamily::Identity) {
    if (dims[0] <= 0 || dims[1] <= 0)
      throw InvalidArgument("grid dimensions must be positive");
    return;
  }
  if (spec.levels < 1)
    throw InvalidArgument("wavelet levels must be >= 1");
  const Index block = Index{1} << spec.levels;
  if (dims[0] <= 0 || dims[1] <= 0 || dims[0] % block != 0 || dims[1] % block != 0)
    throw InvalidArgument("grid dimensions must be divisible by 2^levels");
}

namespace detail {

// One analysis step on a strided 1D signal of even length n.
inline void analyze_1d(Complex *x, Index n, Index stride, const FilterBank &fb, std::vector<Complex> &tmp) {
  tmp.assign(static_cast<std::size_t>(n), Complex(0.0));
  const Index half = n / 2;
  const Index taps = fb.lowpass.size();
  for (Index i = 0; i < half; ++i) {
    Complex a(0.0), d(0.0);
    for (Index k = 0; k < taps; ++k) {
      const Complex v = x[((2 * i + k) % n) * stride];
      a += fb.lowpass(k) * v;
      d += fb.highpass(k) * v;
    }
    tmp[static_cast<std::size_t>(i)] = a;
    tmp[static_cast<std::size_t>(half + i)] = d;
  }
  for (Index i = 0; i < n; ++i)
    x[i * stride] = tmp[static_cast<std::size_t>(i)];
}

inline void synthesize_1d(Complex *x, Index n, Index stride, const FilterBank &fb, std::vector<Complex> &tmp) {
  tmp.assign(static_cast<std::size_t>(n), Complex(0.0));
  const Index half = n / 2;
  const Index taps = fb.lowpass.size();
  for (Index i = 0; i < half; ++i) {
    const Complex a = x[i * stride];
    const Complex d = x[(half + i) * stride];
    for (Index k = 0; k < taps; ++k)
      tmp[static_cast<std::size_t>((2 * i + k) % n)] += fb.lowpass(k) * a + fb.highpass(k) * d;
  }
  for (Index i = 0; i < n; ++i)
    x[i * stride] = tmp[static_cast<std::size_t>(i)];
}

} // namespace detail

inline CVec forward_transform(const CVec &image, const std::array<Index, 2> &dims, const TransformSpec &spec,
                              const FilterBank &fb) {
  validate_transform(dims, spec);
  if (image.size() != dims[0] * dims[1])
    throw InvalidArgument("image length does not match grid");
  CVec c = image;
  if (spec.family == WaveletFamily::Identity)
    return c;
  Complex *data = c.data();
  const Index row_stride = dims[1];
  std::vector<Complex> tmp;
  Index r = dims[0], s = dims[1];
  for (int level = 0; level < spec.levels; ++level) {
    for (Index i = 0; i < r; ++i)
      detail::analyze_1d(data + i * row_stride, s, 1, fb, tmp);
    for (Index j = 0; j < s; ++j)
      detail::analyze_1d(data + j, r, row_stride, fb, tmp);
    r /= 2;
    s /= 2;
  }
  return c;
}

inline CVec forward_transform(const CVec &image, const std::array<Index, 2> &dims, const TransformSpec &spec) {
  return forward_transform(image, dims, spec, filter_bank(spec.family));
}

inline CVec inverse_transform(const CVec &coeffs, const std::array<Index, 2> &dims, const TransformSpec &spec,
                              const FilterBank &fb) {
  validate_transform(dims, spec);
  if (coeffs.size() != dims[0] * dims[1])
    throw InvalidArgument("coefficient length does not match grid");
  CVec f = coeffs;
  if (spec.family == WaveletFamily::Identity)
    return f;
  Complex *data = f.data();
  const Index row_stride = dims[1];
  std::vector<Complex> tmp;
  for (int level = spec.levels - 1; level >= 0; --level) {
    const Index r = dims[0] >> level;
    const Index s = dims[1] >> level;
    for (Index j = 0; j < s; ++j)
      detail::synthesize_1d(data + j, r, row_stride, fb, tmp);
    for (Index i = 0; i < r; ++i)
      detail::synthesize_1d(data + i * row_stride, s, 1, fb, tmp);
  }
  return f;
}

inline CVec inverse_transform(const CVec &coeffs, const std::array<Index, 2> &dims, const TransformSpec &spec) {
  return inverse_transform(coeffs, dims, spec, filter_bank(spec.family));
}

// Transform-domain support of an exemplar: sorted coefficient indices.
struct SupportSet {
  std::vector<Index> indices;
  std::string source_label;

  Index S() const { return static_cast<Index>(indices.size()); }
  friend bool operator==(const SupportSet &, const SupportSet &) = default;
};

// Keeps the ceil(fraction * Q) largest-magnitude coefficients; equal
// magnitudes go to the lower index.
inline SupportSet support_from_coefficients(const CVec &coeffs, double fraction, std::string label = {}) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw InvalidArgument("support fraction must be in (0, 1]");
  const Index Q = coeffs.size();
  const Index keep = std::min<Index>(Q, static_cast<Index>(std::ceil(fraction * static_cast<double>(Q) - 1e-9)));
  std::vector<Index> order(static_cast<std::size_t>(Q));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> mag(static_cast<std::size_t>(Q));
  for (Index i = 0; i < Q; ++i)
    mag[static_cast<std::size_t>(i)] = std::abs(coeffs(i));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return mag[static_cast<std::size_t>(a)] > mag[static_cast<std::size_t>(b)];
  });
  SupportSet support;
  support.indices.assign(order.begin(), order.begin() + keep);
  std::sort(support.indices.begin(), support.indices.end());
  support.source_label = std::move(label);
  return support;
}

inline SupportSet extract_support(const CVec &image, const std::array<Index, 2> &dims, const TransformSpec &spec,
                                  double fraction, std::string label = {}) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw InvalidArgument("support fraction must be in (0, 1]");
  return support_from_coefficients(forward_transform(image, dims, spec), fraction, std::move(label));
}

inline void validate(const SupportSet &support, Index Q) {
  for (std::size_t i = 0; i < support.indices.size(); ++i) {
    if (support.indices[i] < 0 || support.indices[i] >= Q)
      throw InvalidArgument("support index out of range");
    if (i > 0 && support.indices[i] <= support.indices[i - 1])
      throw InvalidArgument("support indices must be sorted and unique");
  }
}

// row * Psi^H restricted to the support, for a 1 x N measurement row.
inline CVec restricted_row(const CVec &row, const SupportSet &support, const std::array<Index, 2> &dims,
                           const TransformSpec &spec, const FilterBank &fb) {
  const CVec projected = forward_transform(row.conjugate(), dims, spec, fb).conjugate();
  CVec out(support.S());
  for (Index s = 0; s < support.S(); ++s)
    out(s) = projected(support.indices[static_cast<std::size_t>(s)]);
  return out;
}

inline CVec restricted_row(const CVec &row, const SupportSet &support, const std::array<Index, 2> &dims,
                           const TransformSpec &spec) {
  return restricted_row(row, support, dims, spec, filter_bank(spec.family));
}

// Zero-filling embedding U c~ into the full coefficient vector.
inline CVec zero_fill(const CVec &on_support, const SupportSet &support, Index Q) {
  CVec c = CVec::Zero(Q);
  for (Index s = 0; s < support.S(); ++s)
    c(support.indices[static_cast<std::size_t>(s)]) = on_support(s);
  return c;
}

inline nlohmann::json to_json(const SupportSet &support) {
  return nlohmann::json{{"S", support.S()}, {"indices", support.indices}, {"source_label", support.source_label}};
}

inline SupportSet support_from_json(const nlohmann::json &j) {
  SupportSet support;
  support.indices = j.at("indices").get<std::vector<Index>>();
  support.source_label = j.value("source_label", std::string{});
  if (j.at("S").get<Index>() != support.S())
    throw InvalidArgument("support JSON: S does not match the index count");
  return support;
}

inline std::string to_string(WaveletFamily f) {
  switch (f) {
  case WaveletFamily::Haar:
    return "haar";
  case WaveletFamily::Identity:
    return "identity";
  default:
    return "daubechies4";
  }
}

inline WaveletFamily wavelet_family_from_string(const std::string &s) {
  if (s == "haar")
    return WaveletFamily::Haar;
  if (s == "daubechies4" || s == "db4" || s == "d4")
    return WaveletFamily::Daubechies4;
  if (s == "identity")
    return WaveletFamily::Identity;
  throw InvalidArgument("unknown wavelet family: " + s);
}

} // namespace oedipus
