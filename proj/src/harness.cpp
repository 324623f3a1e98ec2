#include "kdp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kdp/errors.hpp"
#include "kdp/parallel.hpp"
#include "kdp/series.hpp"
#include "kdp/stats.hpp"
#include "kdp/urn.hpp"

namespace kdp {

using nlohmann::json;
using cplx = std::complex<double>;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string rep_name(const std::string& stem, std::size_t r, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_r%05zu.%s", stem.c_str(), r, ext.c_str());
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

DiagnosticsReport make_report(const std::string& command, const ExperimentConfig& cfg) {
  DiagnosticsReport rep;
  rep.command = command;
  rep.config_hash = cfg.hash();
  rep.config = cfg.entries;
  return rep;
}

void finish(DiagnosticsReport& rep, const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  const std::string name = rep.command + "_report.json";
  rep.artifacts.push_back(name);
  write_file(cfg.output_dir / name, rep.to_json().dump(2) + "\n");
}

TestEntry drift_entry(const DriftResult& d, std::uint64_t n) {
  TestEntry e;
  e.name = d.label;
  e.statistic = std::abs(d.z);
  e.threshold = d.threshold;
  e.pass = !d.flagged;
  e.detail = {{"n", n}, {"z", d.z}, {"mean_increment", d.mean}, {"std_error", d.std_error},
              {"replications", d.replications}};
  return e;
}

std::string t_label(const std::vector<double>& t) {
  std::string s;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (j) s += ',';
    s += num(t[j]);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

double cf_distance(const PredictiveMixture& a, const PredictiveMixture& b,
                   const std::vector<std::vector<double>>& t_grid) {
  if (a.dimension != b.dimension) throw DomainError("cf_distance: dimension mismatch");
  double d = 0.0;
  for (const auto& t : t_grid) d = std::max(d, std::abs(mixture_cf(a, t) - mixture_cf(b, t)));
  return d;
}

KernelCfTable::KernelCfTable(const BandwidthSchedule& schedule, const KernelSpec& kernel,
                             std::vector<std::vector<double>> t_grid, std::uint64_t max_n)
    : t_grid_(std::move(t_grid)), max_n_(max_n), values_(t_grid_.size() * max_n) {
  std::vector<double> scaled;
  for (std::size_t i = 0; i < t_grid_.size(); ++i) {
    for (std::uint64_t k = 1; k <= max_n; ++k) {
      const double h = schedule.at(k);
      scaled = t_grid_[i];
      for (double& v : scaled) v *= h;
      values_[i * max_n + (k - 1)] = kernel.cf(scaled);
    }
  }
}

std::vector<std::vector<cplx>> predictive_cf_at(const Trajectory& traj, const KernelCfTable& table,
                                                const std::vector<std::uint64_t>& checkpoints) {
  const auto& grid = table.t_grid();
  const std::uint64_t last = checkpoints.empty() ? 0 : checkpoints.back();
  if (last > traj.size() || last > table.max_n())
    throw DomainError("predictive_cf_at: checkpoint beyond the path or table");
  std::vector<std::vector<cplx>> out(checkpoints.size(), std::vector<cplx>(grid.size()));
  std::vector<CompensatedSum<cplx>> acc(grid.size());
  std::size_t next = 0;
  const bool kde = traj.flavor == Flavor::kde;
  for (std::uint64_t n = 1; n <= last; ++n) {
    const auto x = traj.point(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double phase = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) phase += grid[i][j] * x[j];
      const cplx e = std::polar(1.0, phase);
      acc[i].add(kde ? e : e * table.at(i, n));
    }
    if (n == checkpoints[next]) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx mean = acc[i].value() / static_cast<double>(n);
        out[next][i] = kde ? mean * table.at(i, n) : mean;
      }
      ++next;
    }
  }
  return out;
}

bool DiagnosticsReport::all_pass() const {
  return std::all_of(tests.begin(), tests.end(), [](const TestEntry& t) { return t.pass; });
}

json DiagnosticsReport::to_json() const {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["config_hash"] = config_hash;
  j["command"] = command;
  j["config"] = config;
  json tests_json = json::array();
  for (const auto& t : tests)
    tests_json.push_back({{"name", t.name},
                          {"statistic", t.statistic},
                          {"threshold", t.threshold},
                          {"pass", t.pass},
                          {"detail", t.detail}});
  j["tests"] = tests_json;
  j["all_pass"] = all_pass();
  for (const auto& [k, v] : sections.items()) j[k] = v;
  if (support_radius_estimate) j["support_radius_estimate"] = *support_radius_estimate;
  j["artifacts"] = artifacts;
  return j;
}

Trajectory simulate_replication(const ExperimentConfig& cfg, std::uint32_t r,
                                const std::vector<std::vector<double>>* prefix) {
  StreamDraws draws(cfg.master_seed, r);
  auto traj = init_trajectory(cfg.flavor, cfg.kernel.dimension(), prefix);
  extend(traj, std::max<std::size_t>(cfg.steps, traj.size()), cfg.schedule, cfg.kernel, draws);
  return traj;
}

ConvergenceSummary cf_convergence(const ExperimentConfig& cfg,
                                  const std::vector<std::uint64_t>& checkpoints) {
  ConvergenceSummary out;
  for (auto n : checkpoints)
    if (n < cfg.steps) out.checkpoints.push_back(n);
  auto points = out.checkpoints;
  points.push_back(cfg.steps);
  const KernelCfTable table(cfg.schedule, cfg.kernel, cfg.t_grid, cfg.steps);
  const std::size_t R = cfg.replications;
  out.per_replication.assign(R, std::vector<double>(out.checkpoints.size()));
  parallel_for(
      R,
      [&](std::size_t r) {
        const auto traj = simulate_replication(cfg, static_cast<std::uint32_t>(r));
        const auto phi = predictive_cf_at(traj, table, points);
        for (std::size_t c = 0; c < out.checkpoints.size(); ++c) {
          double d = 0.0;
          for (std::size_t i = 0; i < phi[c].size(); ++i)
            d = std::max(d, std::abs(phi[c][i] - phi.back()[i]));
          out.per_replication[r][c] = d;
        }
      },
      cfg.threads);
  out.mean_distance.assign(out.checkpoints.size(), 0.0);
  for (std::size_t c = 0; c < out.checkpoints.size(); ++c) {
    CompensatedSum<double> acc;
    for (std::size_t r = 0; r < R; ++r) acc.add(out.per_replication[r][c]);
    out.mean_distance[c] = acc.value() / static_cast<double>(R);
  }
  out.non_increasing = true;
  for (std::size_t c = 1; c < out.mean_distance.size(); ++c)
    if (out.mean_distance[c] > out.mean_distance[c - 1]) out.non_increasing = false;
  return out;
}

// ---------------------------------------------------------------------------

DiagnosticsReport run_simulate(const ExperimentConfig& cfg) {
  auto rep = make_report("simulate", cfg);
  ensure_dir(cfg.output_dir);
  const std::size_t R = cfg.replications;
  std::vector<double> radius(R), first_half(R);
  std::vector<std::string> names(R);
  std::vector<std::vector<double>> data;
  if (cfg.data_path) data = load_points(*cfg.data_path);
  parallel_for(
      R,
      [&](std::size_t r) {
        const auto traj =
            simulate_replication(cfg, static_cast<std::uint32_t>(r), cfg.data_path ? &data : nullptr);
        const auto sup = sup_norm_path(traj);
        radius[r] = sup.back();
        first_half[r] = sup[std::max<std::size_t>(sup.size() / 2, 1) - 1];
        std::ostringstream os;
        write_trajectory_csv(os, traj, {cfg.header_line()});
        names[r] = rep_name("trajectory", r, "csv");
        write_file(cfg.output_dir / names[r], os.str());
      },
      cfg.threads);
  rep.artifacts = names;
  const auto s = stats::summarize(radius);
  rep.support_radius_estimate = s.max;
  rep.sections["running_max"] = {{"final_max_per_replication", radius},
                                 {"first_half_max_per_replication", first_half},
                                 {"mean_final_max", s.mean},
                                 {"max_final_max", s.max}};
  finish(rep, cfg);
  return rep;
}

namespace {

struct ReplicationDiagnostics {
  std::vector<std::pair<double, double>> tightness;          // per drift point
  std::vector<std::vector<std::pair<cplx, cplx>>> cf;        // [t][drift point]
  std::vector<double> cf_excess;                             // [t] max |S_n| - bound
  std::vector<double> distances;                             // per checkpoint < N
  double final_max = 0.0;
  double first_half_max = 0.0;
  std::vector<std::uint64_t> descendants;                    // L_{n,1} per urn n
};

}  // namespace

DiagnosticsReport run_diagnose(const ExperimentConfig& cfg) {
  auto rep = make_report("diagnose", cfg);
  ensure_dir(cfg.output_dir);
  const std::size_t R = cfg.replications;
  const std::uint64_t N = cfg.steps;
  const double ew1 = cfg.kernel.abs_moment(1.0);

  std::vector<CfCorrections> corrections;
  if (cfg.cf)
    for (const auto& t : cfg.cf_t)
      corrections.push_back(cf_corrections(cfg.flavor, cfg.schedule, cfg.kernel, t, N));

  std::vector<std::uint64_t> compared;
  for (auto n : cfg.checkpoints)
    if (n < N) compared.push_back(n);
  auto cf_points = compared;
  cf_points.push_back(N);
  std::optional<KernelCfTable> table;
  if (!compared.empty()) table.emplace(cfg.schedule, cfg.kernel, cfg.t_grid, N);

  std::vector<std::uint64_t> urn_ns;
  for (auto n : cfg.urn_n_values)
    if (2 * n <= N) urn_ns.push_back(n);

  std::vector<ReplicationDiagnostics> reps(R);
  parallel_for(
      R,
      [&](std::size_t r) {
        const auto traj = simulate_replication(cfg, static_cast<std::uint32_t>(r));
        auto& out = reps[r];
        if (cfg.tightness) {
          const auto tr = tightness_trace(traj, cfg.schedule, ew1);
          for (auto n : cfg.drift_points) out.tightness.emplace_back(tr.S[n - 1], tr.S[n]);
        }
        for (const auto& corr : corrections) {
          const auto tr = cf_martingale_trace(traj, corr, N);
          std::vector<std::pair<cplx, cplx>> pairs;
          for (auto n : cfg.drift_points) {
            if (n < corr.start_index) {
              pairs.emplace_back(cplx{NAN, NAN}, cplx{NAN, NAN});
              continue;
            }
            pairs.emplace_back(tr.S[n - corr.start_index], tr.S[n + 1 - corr.start_index]);
          }
          out.cf.push_back(std::move(pairs));
          const double bound = cfg.flavor == Flavor::recursive ? 1.0 : corr.sup_abs_correction;
          double worst = -std::numeric_limits<double>::infinity();
          for (const auto& s : tr.S) worst = std::max(worst, std::abs(s) - bound);
          out.cf_excess.push_back(worst);
        }
        const auto sup = sup_norm_path(traj);
        out.final_max = sup.back();
        out.first_half_max = sup[std::max<std::size_t>(sup.size() / 2, 1) - 1];
        if (table) {
          const auto phi = predictive_cf_at(traj, *table, cf_points);
          for (std::size_t c = 0; c < compared.size(); ++c) {
            double d = 0.0;
            for (std::size_t i = 0; i < phi[c].size(); ++i)
              d = std::max(d, std::abs(phi[c][i] - phi.back()[i]));
            out.distances.push_back(d);
          }
        }
        for (auto n : urn_ns) out.descendants.push_back(simulate_descendants(traj, n).at(1));
      },
      cfg.threads);

  const bool enough = R >= 100;
  json notes = json::array();
  if (!enough && (cfg.tightness || cfg.cf) && !cfg.drift_points.empty())
    notes.push_back("drift tests need at least 100 replications; skipped");

  // Tightness drift.
  if (cfg.tightness && enough) {
    for (std::size_t p = 0; p < cfg.drift_points.size(); ++p) {
      std::vector<std::pair<double, double>> pairs(R);
      for (std::size_t r = 0; r < R; ++r) pairs[r] = reps[r].tightness[p];
      const auto n = cfg.drift_points[p];
      rep.tests.push_back(drift_entry(drift_test(pairs, "tightness_drift n=" + std::to_string(n)), n));
    }
  }
  // CF drift and boundedness.
  for (std::size_t ti = 0; ti < corrections.size(); ++ti) {
    const auto label = t_label(cfg.cf_t[ti]);
    if (enough) {
      for (std::size_t p = 0; p < cfg.drift_points.size(); ++p) {
        const auto n = cfg.drift_points[p];
        if (n < corrections[ti].start_index) {
          notes.push_back("cf drift at t=" + label + " n=" + std::to_string(n) +
                          " skipped: below start index " +
                          std::to_string(corrections[ti].start_index));
          continue;
        }
        std::vector<std::pair<double, double>> re(R), im(R);
        for (std::size_t r = 0; r < R; ++r) {
          const auto [a, b] = reps[r].cf[ti][p];
          re[r] = {a.real(), b.real()};
          im[r] = {a.imag(), b.imag()};
        }
        rep.tests.push_back(
            drift_entry(drift_test(re, "cf_drift_re t=" + label + " n=" + std::to_string(n)), n));
        rep.tests.push_back(
            drift_entry(drift_test(im, "cf_drift_im t=" + label + " n=" + std::to_string(n)), n));
      }
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < R; ++r) worst = std::max(worst, reps[r].cf_excess[ti]);
    TestEntry e;
    e.name = "cf_bounded t=" + label;
    e.statistic = worst;
    e.threshold = 1e-10;
    e.pass = worst <= 1e-10;
    e.detail = {{"bound", cfg.flavor == Flavor::recursive ? 1.0 : corrections[ti].sup_abs_correction},
                {"start_index", corrections[ti].start_index}};
    rep.tests.push_back(e);
  }

  // CF convergence distances.
  if (!compared.empty()) {
    std::vector<double> means(compared.size());
    for (std::size_t c = 0; c < compared.size(); ++c) {
      CompensatedSum<double> acc;
      for (std::size_t r = 0; r < R; ++r) acc.add(reps[r].distances[c]);
      means[c] = acc.value() / static_cast<double>(R);
    }
    bool monotone = true;
    for (std::size_t c = 1; c < means.size(); ++c)
      if (means[c] > means[c - 1]) monotone = false;
    rep.sections["cf_distance"] = {{"checkpoints", compared}, {"reference_n", N},
                                   {"mean_distance", means}};
    TestEntry e;
    e.name = "cf_distance_non_increasing";
    e.statistic = means.size() > 1 ? means.back() - means.front() : 0.0;
    e.threshold = 0.0;
    e.pass = monotone;
    e.detail = {{"mean_distance", means}, {"checkpoints", compared}};
    rep.tests.push_back(e);
  }

  // Running max / support radius.
  std::vector<double> finals(R), halves(R);
  for (std::size_t r = 0; r < R; ++r) {
    finals[r] = reps[r].final_max;
    halves[r] = reps[r].first_half_max;
  }
  const auto fs = stats::summarize(finals);
  rep.support_radius_estimate = fs.max;
  rep.sections["running_max"] = {{"mean_final_max", fs.mean},
                                 {"max_final_max", fs.max},
                                 {"mean_first_half_max", stats::summarize(halves).mean}};

  // Urn embedding from the simulated genealogies.
  if (enough) {
    for (std::size_t u = 0; u < urn_ns.size(); ++u) {
      const auto n = urn_ns[u];
      std::vector<double> observed(n + 1, 0.0), probs(n + 1);
      for (std::size_t r = 0; r < R; ++r) observed[reps[r].descendants[u]] += 1.0;
      for (std::uint64_t k = 0; k <= n; ++k) probs[k] = betabinom_pmf(n, k);
      const auto chi = stats::chi_square_gof(observed, probs);
      TestEntry e;
      e.name = "urn_embedding n=" + std::to_string(n);
      e.statistic = chi.p_value;
      e.threshold = 0.001;
      e.pass = chi.p_value > 0.001;
      e.detail = {{"chi_square", chi.statistic}, {"dof", chi.dof}, {"windows", R}};
      rep.tests.push_back(e);
    }
  }

  // Markov tail bound and trace dump for replication 0.
  const auto traj0 = simulate_replication(cfg, 0);
  if (cfg.tightness && traj0.size() >= 2) {
    const auto tr = tightness_trace(traj0, cfg.schedule, ew1);
    const double threshold = cfg.tail_threshold > 0.0 ? cfg.tail_threshold : 10.0 * tr.J.back();
    const std::size_t stride =
        cfg.tail_stride > 0 ? cfg.tail_stride : std::max<std::size_t>(1, traj0.size() / 1000);
    if (threshold > 0.0) {
      const auto tb = tail_prob_bound_check(tr, traj0, cfg.schedule, cfg.kernel, threshold, stride);
      TestEntry e;
      e.name = "tail_prob_bound";
      e.statistic = tb.max_violation;
      e.threshold = 1e-10;
      e.pass = tb.holds();
      e.detail = {{"threshold", threshold}, {"worst_n", tb.worst_n}, {"stride", stride},
                  {"exact_tail", tb.exact}};
      rep.tests.push_back(e);
    }
    std::ostringstream os;
    os << "# " << cfg.header_line() << '\n';
    os << "step,U,J,S,phi_re,phi_im,S_re,S_im\n";
    std::vector<cplx> phi;
    std::optional<CFMartingaleTrace> cft;
    if (!corrections.empty()) {
      phi = predictive_cf_path(traj0, corrections.front(), N);
      cft = cf_martingale_trace(traj0, corrections.front(), N);
    }
    for (std::uint64_t n = 1; n <= traj0.size(); ++n) {
      os << n << ',' << num(tr.U[n - 1]) << ',' << num(tr.J[n - 1]) << ',' << num(tr.S[n - 1]);
      if (!phi.empty()) {
        os << ',' << num(phi[n - 1].real()) << ',' << num(phi[n - 1].imag());
        if (n >= cft->start_index) {
          const auto s = cft->S[n - cft->start_index];
          os << ',' << num(s.real()) << ',' << num(s.imag());
        } else {
          os << ",,";
        }
      } else {
        os << ",,,,";
      }
      os << '\n';
    }
    write_file(cfg.output_dir / "trace_r00000.csv", os.str());
    rep.artifacts.push_back("trace_r00000.csv");
  }
  rep.sections["notes"] = notes;
  finish(rep, cfg);
  return rep;
}

DiagnosticsReport run_urn(const ExperimentConfig& cfg) {
  auto rep = make_report("urn", cfg);
  ensure_dir(cfg.output_dir);

  std::ostringstream csv;
  csv << "# " << cfg.header_line() << '\n';
  csv << "n,k,exact_pmf,empirical_freq,tail_exact,tail_bound\n";
  for (auto n : cfg.urn_n_values) {
    const std::size_t W = cfg.urn_windows;
    std::vector<std::uint64_t> L(W);
    auto window_cfg = cfg;
    window_cfg.steps = 2 * n;
    parallel_for(
        W,
        [&](std::size_t w) {
          const auto traj = simulate_replication(window_cfg, static_cast<std::uint32_t>(w));
          L[w] = simulate_descendants(traj, n).at(1);
        },
        cfg.threads);
    std::vector<double> observed(n + 1, 0.0), probs(n + 1);
    for (auto l : L) observed[l] += 1.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      probs[k] = betabinom_pmf(n, k);
      csv << n << ',' << k << ',' << num(probs[k]) << ',' << num(observed[k] / W) << ','
          << num(betabinom_tail(n, k)) << ',' << num(descendant_tail_bound(n, k)) << '\n';
    }
    const auto chi = stats::chi_square_gof(observed, probs);
    TestEntry e;
    e.name = "urn_embedding n=" + std::to_string(n);
    e.statistic = chi.p_value;
    e.threshold = 0.001;
    e.pass = chi.p_value > 0.001;
    e.detail = {{"chi_square", chi.statistic}, {"dof", chi.dof}, {"bins", chi.bins}, {"windows", W}};
    rep.tests.push_back(e);
  }
  write_file(cfg.output_dir / "urn.csv", csv.str());
  rep.artifacts.push_back("urn.csv");

  {
    double worst_norm = 0.0;
    for (std::int64_t n = 2; n <= std::max<std::int64_t>(2, cfg.urn_exact_max_n * 2); ++n)
      worst_norm = std::max(worst_norm, std::abs(betabinom_tail(n, 0) - 1.0));
    TestEntry e;
    e.name = "pmf_normalisation";
    e.statistic = worst_norm;
    e.threshold = 1e-12;
    e.pass = worst_norm <= 1e-12;
    e.detail = {{"max_n", std::max<std::int64_t>(2, cfg.urn_exact_max_n * 2)}};
    rep.tests.push_back(e);
  }
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::int64_t n = 2; n <= static_cast<std::int64_t>(cfg.urn_exact_max_n); ++n)
      for (std::int64_t k = 0; k <= n; ++k)
        worst = std::max(worst, betabinom_tail(n, k) - descendant_tail_bound(n, k));
    TestEntry e;
    e.name = "tail_bound_dominates_exact_tail";
    e.statistic = worst;
    e.threshold = 0.0;
    e.pass = worst <= 0.0;
    e.detail = {{"max_n", cfg.urn_exact_max_n}};
    rep.tests.push_back(e);
  }
  {
    const std::size_t R = cfg.urn_fraction_replications;
    auto frac_cfg = cfg;
    frac_cfg.steps = cfg.urn_horizon;
    std::vector<double> finals(R);
    parallel_for(
        R,
        [&](std::size_t r) {
          const auto traj = simulate_replication(frac_cfg, static_cast<std::uint32_t>(r));
          finals[r] = descendant_fraction_path(traj, cfg.urn_anchor, cfg.urn_horizon).back();
        },
        cfg.threads);
    const double b = static_cast<double>(cfg.urn_anchor) - 1.0;
    const double d = stats::ks_statistic(finals, [b](double x) { return stats::beta_cdf(x, 1.0, b); });
    const double p = stats::ks_pvalue(d, R);
    TestEntry e;
    e.name = "descendant_fraction_beta_limit";
    e.statistic = d;
    e.threshold = stats::ks_critical_value(0.001, R);
    e.pass = p > 0.001;
    e.detail = {{"anchor", cfg.urn_anchor}, {"horizon", cfg.urn_horizon}, {"replications", R},
                {"p_value", p}};
    rep.tests.push_back(e);
  }
  finish(rep, cfg);
  return rep;
}

DiagnosticsReport run_contrast(const ExperimentConfig& cfg) {
  if (cfg.kernel.family() != KernelFamily::half_normal)
    throw ConfigError("contrast requires kernel.family = half_normal");
  auto rep = make_report("contrast", cfg);
  ContrastConfig cc;
  cc.kernel = cfg.kernel;
  cc.schedule = cfg.schedule;
  cc.steps = cfg.steps;
  cc.replications = cfg.replications;
  cc.master_seed = cfg.master_seed;
  cc.threads = cfg.threads;
  const auto res = support_contrast_experiment(cc);
  auto flavor_json = [](const FlavorRecords& fr) {
    std::vector<double> maxima;
    std::vector<std::uint64_t> last;
    for (const auto& s : fr.replications) {
      maxima.push_back(s.final_max);
      last.push_back(s.last_record);
    }
    return json{{"flavor", to_string(fr.flavor)},
                {"late_records", fr.late_records},
                {"late_record_fraction", fr.late_fraction},
                {"mean_growth_ratio", fr.mean_growth_ratio},
                {"final_max", maxima},
                {"last_record_step", last}};
  };
  rep.sections["kde"] = flavor_json(res.kde);
  rep.sections["recursive"] = flavor_json(res.recursive);
  rep.sections["two_proportion_test"] = {{"recursive_fraction", res.test.p1},
                                         {"kde_fraction", res.test.p2},
                                         {"z", res.test.z},
                                         {"p_value_one_sided", res.test.p_value}};
  TestEntry e;
  e.name = "recursive_late_records_exceed_kde";
  e.statistic = res.test.p_value;
  e.threshold = 0.01;
  e.pass = res.test.p_value < 0.01;
  rep.tests.push_back(e);
  double kde_max = 0.0;
  for (const auto& s : res.kde.replications) kde_max = std::max(kde_max, s.final_max);
  rep.support_radius_estimate = kde_max;
  finish(rep, cfg);
  return rep;
}

DiagnosticsReport run_posterior(const ExperimentConfig& cfg) {
  if (!cfg.data_path) throw ConfigError("posterior requires run.data_path");
  const auto data = load_points(*cfg.data_path);
  if (static_cast<int>(data.front().size()) != cfg.kernel.dimension())
    throw ConfigError("data dimension does not match kernel.dimension");
  if (cfg.steps < data.size()) throw ConfigError("run.steps must be at least the data size");
  const int d = cfg.kernel.dimension();
  if (d != 1 && !cfg.posterior_intervals.empty())
    throw ConfigError("posterior.intervals are supported for d = 1 only");
  auto rep = make_report("posterior", cfg);
  ensure_dir(cfg.output_dir);

  const std::size_t R = cfg.replications;
  const auto& qs = d == 1 ? cfg.posterior_quantiles : std::vector<double>{};
  const std::size_t width = d + qs.size() + cfg.posterior_intervals.size();
  std::vector<std::vector<double>> draws(R, std::vector<double>(width));
  std::vector<double> final_gap(R, 0.0);
  std::vector<std::uint64_t> gap_points;
  for (auto n : cfg.checkpoints)
    if (n >= data.size()) gap_points.push_back(n);
  if (gap_points.empty() || gap_points.back() != cfg.steps) gap_points.push_back(cfg.steps);
  parallel_for(
      R,
      [&](std::size_t r) {
        const auto traj = simulate_replication(cfg, static_cast<std::uint32_t>(r), &data);
        const auto mix = predictive_mixture(traj, cfg.schedule, cfg.kernel);
        auto& row = draws[r];
        const auto mean = mixture_mean(mix);
        std::copy(mean.begin(), mean.end(), row.begin());
        std::size_t col = d;
        for (double q : qs) row[col++] = mixture_quantile(mix, q);
        for (const auto& [lo, hi] : cfg.posterior_intervals)
          row[col++] = mixture_prob(mix, Box{{lo}, {hi}});
        if (gap_points.size() >= 2) {
          const auto prev = predictive_mixture(traj, gap_points[gap_points.size() - 2], cfg.schedule,
                                               cfg.kernel);
          final_gap[r] = cf_distance(prev, mix, cfg.t_grid);
        }
      },
      cfg.threads);

  std::vector<std::string> names;
  for (int j = 1; j <= d; ++j) names.push_back("mean_" + std::to_string(j));
  for (double q : qs) names.push_back("quantile_" + num(q));
  for (const auto& [lo, hi] : cfg.posterior_intervals) names.push_back("prob_" + num(lo) + "_" + num(hi));

  std::ostringstream csv;
  csv << "# " << cfg.header_line() << '\n' << "replication";
  for (const auto& n : names) csv << ',' << n;
  csv << '\n';
  for (std::size_t r = 0; r < R; ++r) {
    csv << r;
    for (double v : draws[r]) csv << ',' << num(v);
    csv << '\n';
  }
  write_file(cfg.output_dir / "posterior_draws.csv", csv.str());
  rep.artifacts.push_back("posterior_draws.csv");

  json summary = json::object();
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<double> col(R);
    for (std::size_t r = 0; r < R; ++r) col[r] = draws[r][c];
    const auto s = stats::summarize(col);
    std::sort(col.begin(), col.end());
    auto pick = [&col](double p) {
      const double pos = p * static_cast<double>(col.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, col.size() - 1);
      return col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]);
    };
    summary[names[c]] = {{"mean", s.mean},
                         {"sd", std::sqrt(s.variance)},
                         {"q05", pick(0.05)},
                         {"q50", pick(0.5)},
                         {"q95", pick(0.95)}};
  }
  rep.sections["posterior"] = summary;
  rep.sections["data_size"] = data.size();
  if (gap_points.size() >= 2)
    rep.sections["final_checkpoint_cf_distance"] = {
        {"from", gap_points[gap_points.size() - 2]},
        {"to", gap_points.back()},
        {"mean", stats::summarize(final_gap).mean}};
  finish(rep, cfg);
  return rep;
}

DiagnosticsReport run_cf_trace(const ExperimentConfig& cfg) {
  if (cfg.cf_t.empty()) throw ConfigError("cf-trace needs diagnose.cf_t");
  auto rep = make_report("cf-trace", cfg);
  ensure_dir(cfg.output_dir);
  const std::uint64_t N = cfg.steps;
  const auto corr = cf_corrections(cfg.flavor, cfg.schedule, cfg.kernel, cfg.cf_t.front(), N);
  const double ew1 = cfg.kernel.abs_moment(1.0);
  const std::size_t R = cfg.replications;
  std::vector<std::string> names(R);
  std::vector<double> max_abs(R);
  parallel_for(
      R,
      [&](std::size_t r) {
        const auto traj = simulate_replication(cfg, static_cast<std::uint32_t>(r));
        const auto phi = predictive_cf_path(traj, corr, N);
        const auto cft = cf_martingale_trace(traj, corr, N);
        std::optional<TightnessTrace> tr;
        if (traj.size() >= 2) tr = tightness_trace(traj, cfg.schedule, ew1);
        std::ostringstream os;
        os << "# " << cfg.header_line() << '\n' << "step,U,J,S,phi_re,phi_im,S_re,S_im\n";
        double worst = 0.0;
        for (std::uint64_t n = 1; n <= N; ++n) {
          os << n;
          if (tr)
            os << ',' << num(tr->U[n - 1]) << ',' << num(tr->J[n - 1]) << ',' << num(tr->S[n - 1]);
          else
            os << ",0,0,";
          os << ',' << num(phi[n - 1].real()) << ',' << num(phi[n - 1].imag());
          if (n >= cft.start_index) {
            const auto s = cft.S[n - cft.start_index];
            worst = std::max(worst, std::abs(s));
            os << ',' << num(s.real()) << ',' << num(s.imag());
          } else {
            os << ",,";
          }
          os << '\n';
        }
        max_abs[r] = worst;
        names[r] = rep_name("trace", r, "csv");
        write_file(cfg.output_dir / names[r], os.str());
      },
      cfg.threads);
  rep.artifacts = names;
  rep.sections["cf_trace"] = {{"t", cfg.cf_t.front()},
                              {"start_index", corr.start_index},
                              {"sup_abs_correction", corr.sup_abs_correction},
                              {"max_abs_S_per_replication", max_abs}};
  finish(rep, cfg);
  return rep;
}

DiagnosticsReport run(const std::string& command, const ExperimentConfig& cfg) {
  if (command == "simulate") return run_simulate(cfg);
  if (command == "diagnose") return run_diagnose(cfg);
  if (command == "urn") return run_urn(cfg);
  if (command == "contrast") return run_contrast(cfg);
  if (command == "posterior") return run_posterior(cfg);
  if (command == "cf-trace") return run_cf_trace(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace kdp
