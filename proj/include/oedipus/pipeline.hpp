#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "config.hpp"
#include "design.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "phantom.hpp"
#include "recon.hpp"

namespace oedipus {

// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitInfeasible = 3, kExitIo = 4 };

inline EncodingModel channel_model(const RunConfig &c, const ChannelConfig &ch) {
  std::vector<CMat> maps;
  if (ch.coils == 1)
    maps.push_back(synthesize_coil_maps(c.grid, 1, ch.decay, 0));
  else
    for (auto s : ch.coil_seeds)
      maps.push_back(synthesize_coil_maps(c.grid, ch.coils, ch.decay, s));
  return make_encoding_model(c.grid, c.basis, std::move(maps), c.oversampling, c.undersampling);
}

inline PhantomSpec phantom_for_seed(const RunConfig &c, std::uint64_t seed) {
  PhantomSpec spec = c.phantom;
  spec.grid = c.grid;
  spec.perturbation_seed = seed;
  return spec;
}

inline std::vector<SupportSet> exemplar_supports(const RunConfig &c) {
  std::vector<SupportSet> out;
  for (auto s : c.exemplar_seeds)
    out.push_back(extract_support(render_phantom(phantom_for_seed(c, s)), c.grid.dims, c.transform, c.fraction,
                                  "phantom-" + std::to_string(s)));
  return out;
}

inline Index target_group_count(double R, Index L) {
  return std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(L) / R)));
}

inline std::string pattern_stem(const std::string &channel, double R) { return channel + "_R" + format_double(R); }

namespace detail {

inline std::filesystem::path make_dir(const std::filesystem::path &p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec)
    throw IoError("cannot create directory " + p.string() + ": " + ec.message());
  return p;
}

inline void write_mask_pgm(const std::string &path, const SamplingPattern &p) {
  const auto mask = location_mask(p);
  RVec v(static_cast<Index>(mask.size()));
  for (std::size_t i = 0; i < mask.size(); ++i)
    v(static_cast<Index>(i)) = mask[i];
  write_pgm(path, v, p.kdims, 1.0);
}

inline std::string log_csv(const std::vector<double> &log) {
  std::ostringstream s;
  s << "iteration,objective\n";
  for (std::size_t i = 0; i < log.size(); ++i)
    s << i + 1 << ',' << format_double(log[i]) << '\n';
  return s.str();
}

} // namespace detail

// Greedy designs for every (channel configuration, R). Infeasible jobs are
// reported and recorded in the manifest; the remaining jobs still run.
inline int run_design(const RunConfig &c, std::ostream &msg = std::cerr) {
  const auto dir = detail::make_dir(std::filesystem::path(c.output_dir) / "patterns");
  const auto supports = exemplar_supports(c);
  nlohmann::json manifest;
  manifest["experiment"] = c.name;
  manifest["patterns"] = nlohmann::json::array();
  bool infeasible = false;
  for (const auto &ch : c.channels) {
    const EncodingModel model = channel_model(c, ch);
    for (double R : c.R) {
      const std::string stem = pattern_stem(ch.name, R);
      const Index target = target_group_count(R, model.candidates.L());
      nlohmann::json entry{{"id", stem}, {"channel", ch.name}, {"R", R}, {"target_groups", target}};
      SbsOptions options;
      options.refresh_period = c.refresh_period;
      try {
        const SamplingPattern p =
            sbs_design(model, supports, c.transform, DesignObjective{c.objective}, target, options);
        write_pattern_json((dir / (stem + ".json")).string(), p);
        detail::write_mask_pgm((dir / (stem + ".pgm")).string(), p);
        write_text((dir / (stem + "_log.csv")).string(), detail::log_csv(p.log));
        entry["status"] = "ok";
        entry["file"] = stem + ".json";
        msg << "design " << stem << ": kept " << p.kept_groups.size() << " of " << model.candidates.L()
            << " groups\n";
      } catch (const InfeasibleDesign &e) {
        infeasible = true;
        entry["status"] = "infeasible";
        entry["iteration"] = e.iteration();
        entry["message"] = e.what();
        msg << "design " << stem << ": infeasible acceleration (" << e.what() << ")\n";
      }
      manifest["patterns"].push_back(entry);
    }
  }
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return infeasible ? kExitInfeasible : kExitOk;
}

inline std::vector<BaselineSpec> poisson_specs(const RunConfig &c, double R) {
  std::vector<BaselineSpec> specs;
  for (Index r = 0; r < c.poisson.realizations; ++r) {
    BaselineSpec s;
    s.kind = BaselineKind::PoissonDisc;
    s.R = R;
    s.center_block = c.poisson.center_block;
    s.seed = c.poisson.seed + static_cast<std::uint64_t>(r);
    specs.push_back(s);
  }
  return specs;
}

// Writes every baseline pattern (each Poisson-disc realization separately).
inline int run_baseline(const RunConfig &c, std::ostream &msg = std::cerr) {
  const auto dir = detail::make_dir(std::filesystem::path(c.output_dir) / "baselines");
  for (const auto &ch : c.channels) {
    const auto cs = build_cartesian_candidates(c.grid, c.oversampling, c.undersampling, ch.coils);
    for (double R : c.R) {
      const std::string stem = pattern_stem(ch.name, R);
      auto emit = [&](const std::string &name, const SamplingPattern &p) {
        write_pattern_json((dir / (name + "_" + stem + ".json")).string(), p);
        detail::write_mask_pgm((dir / (name + "_" + stem + ".pgm")).string(), p);
        msg << "baseline " << name << "_" << stem << ": " << p.kept_groups.size() << " groups\n";
      };
      BaselineSpec spec;
      spec.R = R;
      if (c.uniform_baseline)
        emit("uniform", uniform_pattern(spec, cs));
      if (c.caipi_baseline) {
        spec.kind = BaselineKind::Caipi2D;
        spec.caipi_shift = c.caipi_shift;
        emit("caipi", caipi_pattern(spec, cs));
      }
      if (c.poisson.enabled)
        for (const auto &ps : poisson_specs(c, R))
          emit("poisson" + std::to_string(ps.seed), poisson_disc_pattern(ps, cs, target_group_count(R, cs.L())));
    }
  }
  return kExitOk;
}

struct ReportRow {
  std::string pattern_id;
  std::string realization; // Poisson-disc seed of the best realization, "-" otherwise
  std::uint64_t phantom = 0;
  double R = 0.0;
  std::string channels;
  RegularizerKind regularizer = RegularizerKind::WaveletL1;
  double lambda = 0.0;
  Index iters = 0;
  double nrmse = 0.0;
  double crb = 0.0;
};

inline std::string report_csv(const std::vector<ReportRow> &rows, const RunConfig &c) {
  std::ostringstream s;
  s << "# oedipus-report v1; data term unnormalised, lambda as given; noise_sigma="
    << format_double(c.recon.noise_sigma) << '\n';
  s << "pattern_id,realization,phantom,R,channels,regularizer,lambda,iters,nrmse,crb\n";
  for (const auto &r : rows)
    s << r.pattern_id << ',' << r.realization << ',' << r.phantom << ',' << format_double(r.R) << ','
      << r.channels << ',' << to_string(r.regularizer) << ',' << format_double(r.lambda) << ',' << r.iters << ','
      << format_double(r.nrmse) << ',' << format_double(r.crb) << '\n';
  return s.str();
}

namespace detail {

struct EvalPattern {
  std::string id;
  std::vector<SamplingPattern> realizations; // empty: infeasible design
  std::vector<std::uint64_t> seeds;          // Poisson-disc seeds, parallel to realizations
  std::vector<double> crb;
};

struct ReconJob {
  std::size_t channel, r, pattern, realization, phantom, reg;
  double nrmse = std::numeric_limits<double>::infinity();
  Index iters = 0;
  CVec image;
};

inline nlohmann::json read_manifest(const std::filesystem::path &dir) {
  const std::string text = read_text((dir / "manifest.json").string());
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw IoError("malformed manifest: " + std::string(e.what()));
  }
}

} // namespace detail

inline ReconProblem make_recon_problem(const RunConfig &c, const EncodingModel &model, const SamplingPattern &p,
                                       RegularizerKind reg, CVec data) {
  ReconProblem prob;
  prob.data = std::move(data);
  prob.pattern = p;
  prob.model = &model;
  prob.regularizer.kind = reg;
  prob.regularizer.wavelet = c.transform;
  prob.lambda = c.recon.lambda;
  prob.max_iters = c.recon.max_iters;
  prob.tol = c.recon.tol;
  prob.cg_max_iters = c.recon.cg_max_iters;
  prob.cg_tol = c.recon.cg_tol;
  return prob;
}

// Noise seed for one (test phantom, channel configuration) pair.
inline std::uint64_t noise_seed(const RunConfig &c, std::uint64_t phantom, std::size_t channel) {
  return c.seed * 0x9E3779B97F4A7C15ull + phantom * 1000003ull + channel;
}

// Retrospective undersampling and reconstruction of every test phantom under
// every designed and baseline pattern. Returns the report rows in a fixed order.
inline std::vector<ReportRow> evaluate_rows(const RunConfig &c, std::ostream &msg = std::cerr) {
  const std::filesystem::path out(c.output_dir);
  const auto pattern_dir = out / "patterns";
  const nlohmann::json manifest = detail::read_manifest(pattern_dir);
  const auto supports = exemplar_supports(c);
  const DesignObjective objective{c.objective};

  std::vector<EncodingModel> models;
  std::vector<std::vector<std::vector<detail::EvalPattern>>> patterns; // [channel][R][pattern]
  for (const auto &ch : c.channels) {
    models.push_back(channel_model(c, ch));
    const EncodingModel &model = models.back();
    const auto &cs = model.candidates;
    auto &per_r = patterns.emplace_back();
    for (double R : c.R) {
      auto &list = per_r.emplace_back();
      const std::string stem = pattern_stem(ch.name, R);
      detail::EvalPattern designed{"oedipus", {}, {}, {}};
      bool listed = false;
      for (const auto &e : manifest.at("patterns"))
        if (e.at("id").get<std::string>() == stem) {
          listed = true;
          if (e.at("status").get<std::string>() == "ok")
            designed.realizations.push_back(read_pattern_json((pattern_dir / (stem + ".json")).string(), cs));
        }
      if (!listed)
        throw IoError("no designed pattern for " + stem + " in " + (pattern_dir / "manifest.json").string());
      list.push_back(std::move(designed));
      BaselineSpec spec;
      spec.R = R;
      if (c.uniform_baseline)
        list.push_back({"uniform", {uniform_pattern(spec, cs)}, {}, {}});
      if (c.caipi_baseline) {
        spec.kind = BaselineKind::Caipi2D;
        spec.caipi_shift = c.caipi_shift;
        list.push_back({"caipi", {caipi_pattern(spec, cs)}, {}, {}});
      }
      if (c.poisson.enabled) {
        detail::EvalPattern pd{"poisson", {}, {}, {}};
        for (const auto &ps : poisson_specs(c, R)) {
          pd.realizations.push_back(poisson_disc_pattern(ps, cs, target_group_count(R, cs.L())));
          pd.seeds.push_back(ps.seed);
        }
        list.push_back(std::move(pd));
      }
    }
  }

  std::vector<CVec> gold;
  for (auto s : c.test_seeds)
    gold.push_back(render_phantom(phantom_for_seed(c, s)));

  // CRB of every pattern realization on the exemplar supports
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> crb_jobs;
  for (std::size_t ch = 0; ch < patterns.size(); ++ch)
    for (std::size_t r = 0; r < patterns[ch].size(); ++r)
      for (std::size_t p = 0; p < patterns[ch][r].size(); ++p) {
        auto &ep = patterns[ch][r][p];
        ep.crb.assign(ep.realizations.size(), std::numeric_limits<double>::infinity());
        for (std::size_t q = 0; q < ep.realizations.size(); ++q)
          crb_jobs.emplace_back(ch, r, p, q);
      }
  parallel_for(static_cast<Index>(crb_jobs.size()), [&](Index i) {
    const auto [ch, r, p, q] = crb_jobs[static_cast<std::size_t>(i)];
    auto &ep = patterns[ch][r][p];
    ep.crb[q] = evaluate_pattern_crb(ep.realizations[q], models[ch], supports, c.transform, objective);
  });

  std::vector<detail::ReconJob> jobs;
  for (std::size_t ch = 0; ch < patterns.size(); ++ch)
    for (std::size_t r = 0; r < patterns[ch].size(); ++r)
      for (std::size_t p = 0; p < patterns[ch][r].size(); ++p)
        for (std::size_t q = 0; q < patterns[ch][r][p].realizations.size(); ++q)
          for (std::size_t ph = 0; ph < gold.size(); ++ph)
            for (std::size_t g = 0; g < c.recon.regularizers.size(); ++g)
              jobs.push_back({ch, r, p, q, ph, g, std::numeric_limits<double>::infinity(), 0, CVec()});
  msg << "evaluate: " << jobs.size() << " reconstructions\n";
  parallel_for(static_cast<Index>(jobs.size()), [&](Index i) {
    auto &job = jobs[static_cast<std::size_t>(i)];
    const auto &pat = patterns[job.channel][job.r][job.pattern].realizations[job.realization];
    const EncodingModel &model = models[job.channel];
    const CVec d = retrospective_undersample(gold[job.phantom], pat, model, 0, c.recon.noise_sigma,
                                             noise_seed(c, c.test_seeds[job.phantom], job.channel));
    const auto result =
        irls_solve(make_recon_problem(c, model, pat, c.recon.regularizers[job.reg], d));
    job.nrmse = nrmse(result.image, gold[job.phantom]);
    job.iters = result.iterations;
    job.image = result.image;
  });

  // Best realization per (channel, R, pattern, phantom, regularizer); ties go to the lower seed.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>, std::size_t> best;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto &j = jobs[i];
    const auto key = std::make_tuple(j.channel, j.r, j.pattern, j.phantom, j.reg);
    auto it = best.find(key);
    if (it == best.end() || j.nrmse < jobs[it->second].nrmse)
      best[key] = i;
  }

  const auto recon_dir = c.recon.write_images ? detail::make_dir(out / "recon") : out;
  std::vector<ReportRow> rows;
  for (std::size_t ch = 0; ch < patterns.size(); ++ch)
    for (std::size_t r = 0; r < patterns[ch].size(); ++r)
      for (std::size_t ph = 0; ph < gold.size(); ++ph)
        for (std::size_t p = 0; p < patterns[ch][r].size(); ++p)
          for (std::size_t g = 0; g < c.recon.regularizers.size(); ++g) {
            const auto &ep = patterns[ch][r][p];
            ReportRow row;
            row.pattern_id = ep.id;
            row.realization = "-";
            row.phantom = c.test_seeds[ph];
            row.R = c.R[r];
            row.channels = c.channels[ch].name;
            row.regularizer = c.recon.regularizers[g];
            row.lambda = c.recon.lambda;
            row.nrmse = std::numeric_limits<double>::infinity();
            row.crb = std::numeric_limits<double>::infinity();
            auto it = best.find(std::make_tuple(ch, r, p, ph, g));
            if (it != best.end()) {
              const auto &job = jobs[it->second];
              row.iters = job.iters;
              row.nrmse = job.nrmse;
              row.crb = ep.crb[job.realization];
              if (!ep.seeds.empty())
                row.realization = std::to_string(ep.seeds[job.realization]);
              if (c.recon.write_images) {
                const std::string name = pattern_stem(row.channels, row.R) + "_" + ep.id + "_p" +
                                         std::to_string(row.phantom) + "_" + to_string(row.regularizer) + ".pgm";
                write_magnitude_pgm((recon_dir / name).string(), job.image, c.grid.dims,
                                    gold[ph].cwiseAbs().maxCoeff());
              }
            }
            rows.push_back(row);
          }
  if (c.recon.write_images)
    for (std::size_t ph = 0; ph < gold.size(); ++ph)
      write_magnitude_pgm((recon_dir / ("gold_p" + std::to_string(c.test_seeds[ph]) + ".pgm")).string(), gold[ph],
                          c.grid.dims);
  return rows;
}

inline int run_evaluate(const RunConfig &c, std::ostream &msg = std::cerr) {
  const auto rows = evaluate_rows(c, msg);
  detail::make_dir(c.output_dir);
  write_text((std::filesystem::path(c.output_dir) / "report.csv").string(), report_csv(rows, c));
  msg << "evaluate: wrote " << rows.size() << " rows\n";
  return kExitOk;
}

} // namespace oedipus
