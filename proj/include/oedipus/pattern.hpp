#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "encoding.hpp"
#include "types.hpp"

namespace oedipus {

// Retained candidate groups on a k-space grid.
struct SamplingPattern {
  std::array<Index, 2> kdims{0, 0};
  Undersampling grouping = Undersampling::Both;
  Index group_count = 0; // L before any deletion
  Index group_size = 0;  // C
  std::vector<Index> kept_groups;
  double R = 1.0;
  std::string mode;
  std::vector<double> log;

  Index M() const { return static_cast<Index>(kept_groups.size()) * group_size; }
};

inline std::string to_string(Undersampling u) {
  switch (u) {
  case Undersampling::Dim1:
    return "dim1";
  case Undersampling::Dim2:
    return "dim2";
  default:
    return "both";
  }
}

inline Undersampling undersampling_from_string(const std::string &s) {
  if (s == "dim1")
    return Undersampling::Dim1;
  if (s == "dim2" || s == "1d")
    return Undersampling::Dim2;
  if (s == "both" || s == "2d")
    return Undersampling::Both;
  throw InvalidArgument("unknown undersampling mode: " + s);
}

// Builds a pattern record for `kept` groups of a candidate set.
inline SamplingPattern make_pattern(const CandidateSet &cs, std::vector<Index> kept, std::string mode,
                                    std::vector<double> log = {}) {
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  for (Index g : kept)
    if (g < 0 || g >= cs.L())
      throw InvalidArgument("pattern group index out of range");
  if (kept.empty())
    throw InvalidArgument("a sampling pattern must keep at least one group");
  SamplingPattern p;
  p.kdims = cs.kdims;
  p.grouping = cs.undersampling;
  p.group_count = cs.L();
  p.group_size = cs.C();
  p.R = static_cast<double>(cs.L()) / static_cast<double>(kept.size());
  p.kept_groups = std::move(kept);
  p.mode = std::move(mode);
  p.log = std::move(log);
  return p;
}

inline void check_compatible(const SamplingPattern &p, const CandidateSet &cs) {
  if (p.kdims != cs.kdims || p.grouping != cs.undersampling || p.group_count != cs.L() || p.group_size != cs.C())
    throw InvalidArgument("sampling pattern does not match the candidate set");
}

// Location indices (q = m1*G2 + m2) covered by group g.
inline std::vector<Index> group_locations(const SamplingPattern &p, Index g) {
  std::vector<Index> locs;
  const Index G1 = p.kdims[0];
  const Index G2 = p.kdims[1];
  switch (p.grouping) {
  case Undersampling::Both:
    locs.push_back(g);
    break;
  case Undersampling::Dim2:
    for (Index m1 = 0; m1 < G1; ++m1)
      locs.push_back(m1 * G2 + g);
    break;
  case Undersampling::Dim1:
    for (Index m2 = 0; m2 < G2; ++m2)
      locs.push_back(g * G2 + m2);
    break;
  }
  return locs;
}

// Binary mask over k-space locations, row-major G1 x G2.
inline std::vector<std::uint8_t> location_mask(const SamplingPattern &p) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(p.kdims[0] * p.kdims[1]), 0);
  for (Index g : p.kept_groups)
    for (Index q : group_locations(p, g))
      mask[static_cast<std::size_t>(q)] = 1;
  return mask;
}

// Run lengths alternating 0-runs and 1-runs, always starting with a 0-run
// (which may be empty).
inline std::vector<Index> run_length_encode(const std::vector<std::uint8_t> &mask) {
  std::vector<Index> runs;
  std::uint8_t current = 0;
  Index count = 0;
  for (auto v : mask) {
    const std::uint8_t bit = v ? 1 : 0;
    if (bit != current) {
      runs.push_back(count);
      current = bit;
      count = 0;
    }
    ++count;
  }
  runs.push_back(count);
  return runs;
}

inline std::vector<std::uint8_t> run_length_decode(const std::vector<Index> &runs) {
  std::vector<std::uint8_t> mask;
  std::uint8_t bit = 0;
  for (Index r : runs) {
    if (r < 0)
      throw InvalidArgument("negative run length");
    mask.insert(mask.end(), static_cast<std::size_t>(r), bit);
    bit ^= 1;
  }
  return mask;
}

inline nlohmann::json to_json(const SamplingPattern &p) {
  nlohmann::json j;
  j["grid"] = {p.kdims[0], p.kdims[1]};
  j["R"] = p.R;
  j["mode"] = p.mode;
  j["kept_groups"] = p.kept_groups;
  j["mask"] = run_length_encode(location_mask(p));
  j["log"] = p.log;
  return j;
}

// The JSON record carries no grouping information; the candidate set supplies it.
inline SamplingPattern pattern_from_json(const nlohmann::json &j, const CandidateSet &cs) {
  const auto grid = j.at("grid").get<std::array<Index, 2>>();
  if (grid != cs.kdims)
    throw InvalidArgument("pattern grid does not match the candidate set");
  SamplingPattern p = make_pattern(cs, j.at("kept_groups").get<std::vector<Index>>(), j.at("mode").get<std::string>(),
                                   j.at("log").get<std::vector<double>>());
  if (run_length_decode(j.at("mask").get<std::vector<Index>>()) != location_mask(p))
    throw InvalidArgument("pattern mask is inconsistent with kept_groups");
  return p;
}

inline void write_pattern_json(const std::string &path, const SamplingPattern &p) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path);
  out << to_json(p).dump(2) << '\n';
  if (!out)
    throw IoError("write failed: " + path);
}

inline SamplingPattern read_pattern_json(const std::string &path, const CandidateSet &cs) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw IoError("malformed pattern file " + path + ": " + e.what());
  }
  return pattern_from_json(j, cs);
}

// Fraction of kept locations inside the central k-space quartile: the middle
// quarter of lines for 1D grouping, the central half-by-half block for 2D.
inline double central_quartile_fraction(const SamplingPattern &p) {
  const auto mask = location_mask(p);
  auto central = [](Index m, Index G, Index width) {
    const Index lo = G / 2 - width / 2;
    return m >= lo && m < lo + width;
  };
  Index inside = 0, total = 0;
  for (Index q = 0; q < static_cast<Index>(mask.size()); ++q) {
    if (!mask[static_cast<std::size_t>(q)])
      continue;
    ++total;
    const Index m1 = q / p.kdims[1];
    const Index m2 = q % p.kdims[1];
    bool in = false;
    switch (p.grouping) {
    case Undersampling::Dim2:
      in = central(m2, p.kdims[1], p.kdims[1] / 4);
      break;
    case Undersampling::Dim1:
      in = central(m1, p.kdims[0], p.kdims[0] / 4);
      break;
    case Undersampling::Both:
      in = central(m1, p.kdims[0], p.kdims[0] / 2) && central(m2, p.kdims[1], p.kdims[1] / 2);
      break;
    }
    inside += in ? 1 : 0;
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
}

} // namespace oedipus
