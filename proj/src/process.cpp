#include "kdp/process.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kdp/errors.hpp"
#include "kdp/series.hpp"

namespace kdp {

std::string to_string(Flavor flavor) {
  return flavor == Flavor::kde ? "kde" : "recursive";
}

Flavor parse_flavor(const std::string& name) {
  if (name == "kde") return Flavor::kde;
  if (name == "recursive") return Flavor::recursive;
  throw InvalidSpec("unknown flavor '" + name + "' (expected kde or recursive)");
}

StreamDraws::StreamDraws(std::uint64_t master_seed, std::uint32_t replication)
    : ancestors_(master_seed, replication, StreamPurpose::ancestor),
      kernels_(master_seed, replication, StreamPurpose::kernel) {}

std::uint64_t StreamDraws::ancestor(std::uint64_t n) { return ancestors_.index(n) + 1; }

void StreamDraws::kernel(const KernelSpec& kernel, std::span<double> out) {
  kernel.sample(kernels_, out);
}

ForcedDraws::ForcedDraws(std::vector<std::uint64_t> ancestors,
                         std::vector<std::vector<double>> draws, StepDraws* fallback)
    : ancestors_(std::move(ancestors)), draws_(std::move(draws)), fallback_(fallback) {}

std::uint64_t ForcedDraws::ancestor(std::uint64_t n) {
  if (next_ancestor_ < ancestors_.size()) {
    const auto m = ancestors_[next_ancestor_++];
    if (m < 1 || m > n)
      throw DomainError("forced ancestor " + std::to_string(m) + " outside {1.." +
                        std::to_string(n) + "}");
    return m;
  }
  if (fallback_) return fallback_->ancestor(n);
  throw DomainError("forced ancestors exhausted");
}

void ForcedDraws::kernel(const KernelSpec& kernel, std::span<double> out) {
  if (next_draw_ < draws_.size()) {
    const auto& y = draws_[next_draw_++];
    if (y.size() != out.size()) throw DomainError("forced draw has wrong dimension");
    std::copy(y.begin(), y.end(), out.begin());
    return;
  }
  if (fallback_) return fallback_->kernel(kernel, out);
  throw DomainError("forced kernel draws exhausted");
}

Trajectory init_trajectory(Flavor flavor, int dimension,
                           const std::vector<std::vector<double>>* data_prefix) {
  if (dimension < 1) throw InvalidSpec("dimension must be >= 1");
  Trajectory traj;
  traj.flavor = flavor;
  traj.dimension = dimension;
  if (data_prefix == nullptr) {
    traj.points.assign(dimension, 0.0);
    return traj;
  }
  if (data_prefix->empty()) throw InvalidSpec("data prefix is empty");
  traj.points.reserve(data_prefix->size() * dimension);
  for (const auto& x : *data_prefix) {
    if (static_cast<int>(x.size()) != dimension)
      throw InvalidSpec("data point has " + std::to_string(x.size()) +
                        " coordinates, expected " + std::to_string(dimension));
    for (double v : x) {
      if (!std::isfinite(v)) throw NonFiniteInput("data prefix contains a non-finite value");
      traj.points.push_back(v);
    }
  }
  traj.seed_prefix_len = data_prefix->size();
  return traj;
}

void step(Trajectory& traj, const BandwidthSchedule& schedule, const KernelSpec& kernel,
          StepDraws& draws) {
  const int d = traj.dimension;
  const std::uint64_t n = traj.size();
  const std::uint64_t m = draws.ancestor(n);
  const double h = schedule.at(traj.flavor == Flavor::kde ? n : m);

  const std::size_t draw_offset = traj.kernel_draws.size();
  traj.kernel_draws.resize(draw_offset + d);
  std::span<double> y(traj.kernel_draws.data() + draw_offset, d);
  draws.kernel(kernel, y);

  const std::size_t parent = (m - 1) * d;
  for (int j = 0; j < d; ++j) traj.points.push_back(traj.points[parent + j] + h * y[j]);
  traj.ancestors.push_back(m);
  traj.steps_h.push_back(h);
}

void extend(Trajectory& traj, std::size_t length, const BandwidthSchedule& schedule,
            const KernelSpec& kernel, StepDraws& draws) {
  if (length > traj.size()) {
    const std::size_t extra = length - traj.size();
    traj.points.reserve(length * traj.dimension);
    traj.kernel_draws.reserve(traj.kernel_draws.size() + extra * traj.dimension);
    traj.ancestors.reserve(traj.ancestors.size() + extra);
    traj.steps_h.reserve(traj.steps_h.size() + extra);
  }
  while (traj.size() < length) step(traj, schedule, kernel, draws);
}

PredictiveMixture predictive_mixture(const Trajectory& traj, std::size_t n,
                                     const BandwidthSchedule& schedule, const KernelSpec& kernel) {
  if (n < 1 || n > traj.size()) throw DomainError("predictive_mixture: n out of range");
  if (kernel.dimension() != traj.dimension)
    throw InvalidSpec("kernel dimension does not match trajectory");
  PredictiveMixture mix;
  mix.dimension = traj.dimension;
  mix.kernel = kernel;
  mix.centers.assign(traj.points.begin(), traj.points.begin() + n * traj.dimension);
  mix.scales.resize(n);
  if (traj.flavor == Flavor::kde) {
    std::fill(mix.scales.begin(), mix.scales.end(), schedule.at(n));
  } else {
    for (std::size_t k = 1; k <= n; ++k) mix.scales[k - 1] = schedule.at(k);
  }
  return mix;
}

PredictiveMixture predictive_mixture(const Trajectory& traj, const BandwidthSchedule& schedule,
                                     const KernelSpec& kernel) {
  return predictive_mixture(traj, traj.size(), schedule, kernel);
}

std::vector<double> sample_mixture(const PredictiveMixture& mix, StepDraws& draws) {
  const auto i = draws.ancestor(mix.size()) - 1;
  std::vector<double> y(mix.dimension);
  draws.kernel(mix.kernel, y);
  const auto c = mix.center(i);
  for (int j = 0; j < mix.dimension; ++j) y[j] = c[j] + mix.scales[i] * y[j];
  return y;
}

Box Box::everything(int d) {
  const double inf = std::numeric_limits<double>::infinity();
  return {std::vector<double>(d, -inf), std::vector<double>(d, inf)};
}

Box Box::half_line(double upper) {
  return {{-std::numeric_limits<double>::infinity()}, {upper}};
}

double mixture_prob(const PredictiveMixture& mix, const Box& region) {
  const int d = mix.dimension;
  if (static_cast<int>(region.lo.size()) != d || static_cast<int>(region.hi.size()) != d)
    throw DomainError("mixture_prob: box dimension mismatch");
  for (int j = 0; j < d; ++j)
    if (!(region.lo[j] <= region.hi[j])) throw DomainError("mixture_prob: lo > hi");
  CompensatedSum<double> total;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const auto c = mix.center(i);
    const double s = mix.scales[i];
    double p = 1.0;
    for (int j = 0; j < d && p > 0.0; ++j)
      p *= mix.kernel.cdf1((region.hi[j] - c[j]) / s) - mix.kernel.cdf1((region.lo[j] - c[j]) / s);
    total.add(p);
  }
  return std::clamp(total.value() * mix.weight(), 0.0, 1.0);
}

std::complex<double> mixture_cf(const PredictiveMixture& mix, std::span<const double> t) {
  const int d = mix.dimension;
  if (static_cast<int>(t.size()) != d) throw DomainError("mixture_cf: t dimension mismatch");
  std::vector<double> scaled(d);
  double last_scale = -1.0;
  std::complex<double> phi_k;
  CompensatedSum<std::complex<double>> total;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double s = mix.scales[i];
    if (s != last_scale) {
      for (int j = 0; j < d; ++j) scaled[j] = s * t[j];
      phi_k = mix.kernel.cf(scaled);
      last_scale = s;
    }
    const auto c = mix.center(i);
    double phase = 0.0;
    for (int j = 0; j < d; ++j) phase += t[j] * c[j];
    total.add(std::polar(1.0, phase) * phi_k);
  }
  return total.value() * mix.weight();
}

std::vector<double> mixture_mean(const PredictiveMixture& mix) {
  const int d = mix.dimension;
  const double ey = mix.kernel.coordinate_mean();
  std::vector<double> mean(d, 0.0);
  for (int j = 0; j < d; ++j) {
    CompensatedSum<double> acc;
    for (std::size_t i = 0; i < mix.size(); ++i) acc.add(mix.center(i)[j] + mix.scales[i] * ey);
    mean[j] = acc.value() * mix.weight();
  }
  return mean;
}

double mixture_cdf(const PredictiveMixture& mix, double x) {
  if (mix.dimension != 1) throw DomainError("mixture_cdf requires d = 1");
  return mixture_prob(mix, Box::half_line(x));
}

double mixture_quantile(const PredictiveMixture& mix, double p) {
  if (mix.dimension != 1) throw DomainError("mixture_quantile requires d = 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("mixture_quantile: p must lie in (0, 1)");
  const auto [cmin, cmax] = std::minmax_element(mix.centers.begin(), mix.centers.end());
  const double smax = *std::max_element(mix.scales.begin(), mix.scales.end());
  double lo = *cmin - smax, hi = *cmax + smax;
  while (mixture_cdf(mix, lo) > p) lo -= 2.0 * (hi - lo);
  while (mixture_cdf(mix, hi) < p) hi += 2.0 * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mixture_cdf(mix, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> reconstruct_from_genealogy(const Trajectory& traj, std::size_t n) {
  if (n < 1 || n > traj.size()) throw DomainError("reconstruct_from_genealogy: n out of range");
  if (n > 1 && n <= traj.seed_prefix_len)
    throw PrefixPointHasNoGenealogy("point " + std::to_string(n) + " is observed data");
  std::vector<std::size_t> chain;
  std::size_t m = n;
  while (traj.has_genealogy(m)) {
    chain.push_back(m);
    m = traj.ancestor_of(m);
  }
  const auto root = traj.point(m);
  std::vector<double> x(root.begin(), root.end());
  // Root first, so the additions happen in the order the path was built.
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const double h = traj.h_of(*it);
    const auto y = traj.draw_of(*it);
    for (int j = 0; j < traj.dimension; ++j) x[j] = x[j] + h * y[j];
  }
  return x;
}

namespace {
double norm(std::span<const double> x) {
  if (x.size() == 1) return std::abs(x[0]);
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}
}  // namespace

std::vector<double> sup_norm_path(const Trajectory& traj) {
  std::vector<double> out(traj.size());
  double running = 0.0;
  for (std::size_t n = 1; n <= traj.size(); ++n) {
    running = std::max(running, norm(traj.point(n)));
    out[n - 1] = running;
  }
  return out;
}

std::vector<double> dominating_process(const Trajectory& traj) {
  if (traj.seed_prefix_len > 1)
    throw MissingGenealogy("dominating process needs a path started from a single root");
  std::vector<double> u(traj.size(), 0.0);
  u[0] = norm(traj.point(1));
  for (std::size_t n = 2; n <= traj.size(); ++n)
    u[n - 1] = u[traj.ancestor_of(n) - 1] + traj.h_of(n) * norm(traj.draw_of(n));
  return u;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  const int d = traj.dimension;
  out << "step,ancestor,h_used";
  for (int j = 1; j <= d; ++j) out << ",y_" << j;
  for (int j = 1; j <= d; ++j) out << ",x_" << j;
  out << '\n';
  char buf[32];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (std::size_t n = 1; n <= traj.size(); ++n) {
    out << n;
    if (traj.has_genealogy(n)) {
      out << ',' << traj.ancestor_of(n) << ',' << num(traj.h_of(n));
      for (double y : traj.draw_of(n)) out << ',' << num(y);
    } else {
      out << ",,";
      for (int j = 0; j < d; ++j) out << ',';
    }
    for (double x : traj.point(n)) out << ',' << num(x);
    out << '\n';
  }
}

std::vector<std::vector<double>> load_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path.string() + "'");
  std::vector<std::vector<double>> points;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> x;
    std::string tok;
    while (ss >> tok) {
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::out_of_range&) {
        throw NonFiniteInput(path.string() + ":" + std::to_string(lineno) + ": value out of range");
      } catch (const std::invalid_argument&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": cannot parse '" +
                          tok + "'");
      }
      if (!std::isfinite(v))
        throw NonFiniteInput(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
      x.push_back(v);
    }
    if (x.empty()) continue;
    if (!points.empty() && x.size() != points.front().size())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": ragged data");
    points.push_back(std::move(x));
  }
  if (points.empty()) throw EmptyData("data file '" + path.string() + "' has no points");
  return points;
}

}  // namespace kdp
