#include "kdp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "kdp/errors.hpp"

namespace kdp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    if (!std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a finite real, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    // Allow 1e5-style literals for readability.
    if (v.find_first_of("eE.") != std::string::npos) {
      const double x = std::stod(v, &used);
      if (used != v.size() || x < 0 || x != std::floor(x) || x > 1.8e19)
        throw std::invalid_argument(v);
      return static_cast<std::uint64_t>(x);
    }
    const auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  // "a:b:step" expands to an inclusive grid.
  if (std::count(v.begin(), v.end(), ':') == 2 && v.find(',') == std::string::npos) {
    const auto parts = split(v, ':');
    if (parts.size() != 3) throw ConfigError(key + ": malformed range '" + v + "'");
    const double a = to_double(key, parts[0]), b = to_double(key, parts[1]),
                 s = to_double(key, parts[2]);
    if (!(s > 0.0) || b < a) throw ConfigError(key + ": range needs step > 0 and end >= start");
    std::vector<double> out;
    const auto count = static_cast<std::int64_t>(std::floor((b - a) / s + 1e-9));
    for (std::int64_t i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * s);
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::uint64_t> to_u64s(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(v, ',')) out.push_back(to_u64(key, item));
  return out;
}

// d = 1: plain list or range. d > 1: points separated by ';', coordinates by ','.
std::vector<std::vector<double>> to_points(const std::string& key, const std::string& v, int d) {
  std::vector<std::vector<double>> out;
  if (d == 1) {
    for (double x : to_doubles(key, v)) out.push_back({x});
    return out;
  }
  for (const auto& item : split(v, ';')) {
    auto p = to_doubles(key, item);
    if (static_cast<int>(p.size()) != d)
      throw ConfigError(key + ": point '" + item + "' needs " + std::to_string(d) + " coordinates");
    out.push_back(std::move(p));
  }
  return out;
}

std::string join_points(const std::vector<std::vector<double>>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ';';
    for (std::size_t j = 0; j < pts[i].size(); ++j) {
      if (j) s += ',';
      s += fmt(pts[i][j]);
    }
  }
  return s;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += f(xs[i]);
  }
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "run.flavor",          "run.steps",         "run.replications",
      "run.seed",            "run.threads",       "run.t_grid",
      "run.checkpoints",     "run.data_path",     "run.output_dir",
      "kernel.family",       "kernel.dof",        "kernel.dimension",
      "bandwidth.form",      "bandwidth.C",       "bandwidth.delta",
      "bandwidth.rate",      "bandwidth.table_path",
      "diagnose.tightness",  "diagnose.cf",       "diagnose.drift_points",
      "diagnose.cf_t",       "diagnose.threshold", "diagnose.tail_stride",
      "urn.n_values",        "urn.windows",       "urn.anchor",
      "urn.horizon",         "urn.fraction_replications", "urn.exact_max_n",
      "posterior.quantiles", "posterior.intervals",
  };
  return keys;
}

std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

ExperimentConfig make_config(const std::map<std::string, std::string>& raw) {
  const auto& known = config_keys();
  for (const auto& [k, v] : raw)
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError("unknown config key '" + k + "'");

  auto get = [&raw](const std::string& k) -> std::optional<std::string> {
    const auto it = raw.find(k);
    if (it == raw.end()) return std::nullopt;
    return it->second;
  };

  ExperimentConfig c;
  try {
    if (auto v = get("run.flavor")) c.flavor = parse_flavor(*v);

    const int d = get("kernel.dimension")
                      ? static_cast<int>(to_u64("kernel.dimension", *get("kernel.dimension")))
                      : 1;
    const auto family =
        get("kernel.family") ? parse_kernel_family(*get("kernel.family")) : KernelFamily::gaussian;
    double dof = 0.0;
    if (auto v = get("kernel.dof")) {
      if (family != KernelFamily::student_t)
        throw ConfigError("kernel.dof only applies to kernel.family = student_t");
      dof = to_double("kernel.dof", *v);
    } else if (family == KernelFamily::student_t) {
      throw ConfigError("kernel.family = student_t requires kernel.dof");
    }
    c.kernel = KernelSpec(family, d, dof);

    const std::string form = get("bandwidth.form").value_or("power");
    auto forbid = [&](std::initializer_list<const char*> keys) {
      for (const char* k : keys)
        if (get(k)) throw ConfigError(std::string(k) + " does not apply to bandwidth.form = " + form);
    };
    if (form == "power") {
      forbid({"bandwidth.rate", "bandwidth.table_path"});
      const double C = get("bandwidth.C") ? to_double("bandwidth.C", *get("bandwidth.C")) : 1.0;
      const double delta = get("bandwidth.delta")
                               ? to_double("bandwidth.delta", *get("bandwidth.delta"))
                               : 1.0 / (d + 4.0);
      c.schedule = BandwidthSchedule::power(C, delta);
    } else if (form == "exponential") {
      forbid({"bandwidth.C", "bandwidth.delta", "bandwidth.table_path"});
      const auto rate = get("bandwidth.rate");
      if (!rate) throw ConfigError("bandwidth.form = exponential requires bandwidth.rate");
      c.schedule = BandwidthSchedule::exponential(to_double("bandwidth.rate", *rate));
    } else if (form == "table") {
      forbid({"bandwidth.C", "bandwidth.delta", "bandwidth.rate"});
      const auto path = get("bandwidth.table_path");
      if (!path) throw ConfigError("bandwidth.form = table requires bandwidth.table_path");
      c.schedule = BandwidthSchedule::table_from_file(*path);
    } else {
      throw ConfigError("bandwidth.form must be power, exponential or table; got '" + form + "'");
    }

    if (auto v = get("run.steps")) c.steps = to_u64("run.steps", *v);
    if (auto v = get("run.replications")) c.replications = to_u64("run.replications", *v);
    if (auto v = get("run.seed")) c.master_seed = to_u64("run.seed", *v);
    if (auto v = get("run.threads")) c.threads = static_cast<unsigned>(to_u64("run.threads", *v));
    if (c.steps < 1) throw ConfigError("run.steps must be >= 1");
    if (c.replications < 1) throw ConfigError("run.replications must be >= 1");
    if (c.replications > 0x7fffffffULL) throw ConfigError("run.replications is too large");
    if (const auto len = c.schedule.length(); len && *len < c.steps + 1)
      throw ConfigError("bandwidth table needs at least run.steps + 1 entries");

    if (auto v = get("run.t_grid")) {
      c.t_grid = to_points("run.t_grid", *v, d);
      if (c.t_grid.empty()) throw ConfigError("run.t_grid is empty");
    } else {
      for (int i = -10; i <= 10; ++i) {
        std::vector<double> p(d, 0.0);
        p[0] = 0.5 * i;
        c.t_grid.push_back(p);
      }
    }
    if (auto v = get("run.checkpoints")) {
      c.checkpoints = to_u64s("run.checkpoints", *v);
    } else {
      for (std::uint64_t n : {c.steps / 10, c.steps / 4, c.steps / 2, c.steps})
        if (n >= 1 && (c.checkpoints.empty() || n > c.checkpoints.back())) c.checkpoints.push_back(n);
    }
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
      if (c.checkpoints[i] < 1 || c.checkpoints[i] > c.steps)
        throw ConfigError("run.checkpoints must lie in [1, run.steps]");
      if (i && c.checkpoints[i] <= c.checkpoints[i - 1])
        throw ConfigError("run.checkpoints must be strictly increasing");
    }
    if (auto v = get("run.data_path")) c.data_path = *v;
    if (auto v = get("run.output_dir")) c.output_dir = *v;

    if (auto v = get("diagnose.tightness")) c.tightness = to_bool("diagnose.tightness", *v);
    if (auto v = get("diagnose.cf")) c.cf = to_bool("diagnose.cf", *v);
    if (auto v = get("diagnose.drift_points")) {
      c.drift_points = to_u64s("diagnose.drift_points", *v);
    } else {
      for (std::uint64_t n : {10, 100, 1000})
        if (n + 1 <= c.steps) c.drift_points.push_back(n);
    }
    for (auto n : c.drift_points)
      if (n < 1 || n + 1 > c.steps)
        throw ConfigError("diagnose.drift_points need 1 <= n and n + 1 <= run.steps");
    if (auto v = get("diagnose.cf_t")) {
      c.cf_t = to_points("diagnose.cf_t", *v, d);
    } else {
      for (double t : {0.5, 1.0, 2.0}) {
        std::vector<double> p(d, 0.0);
        p[0] = t;
        c.cf_t.push_back(p);
      }
    }
    if (c.cf && c.cf_t.empty()) throw ConfigError("diagnose.cf = true needs a non-empty diagnose.cf_t");
    if (auto v = get("diagnose.threshold")) {
      c.tail_threshold = to_double("diagnose.threshold", *v);
      if (c.tail_threshold < 0.0) throw ConfigError("diagnose.threshold must be >= 0");
    }
    if (auto v = get("diagnose.tail_stride")) c.tail_stride = to_u64("diagnose.tail_stride", *v);

    if (auto v = get("urn.n_values")) c.urn_n_values = to_u64s("urn.n_values", *v);
    for (auto n : c.urn_n_values)
      if (n < 2) throw ConfigError("urn.n_values must all be >= 2");
    if (auto v = get("urn.windows")) c.urn_windows = to_u64("urn.windows", *v);
    if (auto v = get("urn.anchor")) c.urn_anchor = to_u64("urn.anchor", *v);
    if (auto v = get("urn.horizon")) c.urn_horizon = to_u64("urn.horizon", *v);
    if (auto v = get("urn.fraction_replications"))
      c.urn_fraction_replications = to_u64("urn.fraction_replications", *v);
    if (auto v = get("urn.exact_max_n")) c.urn_exact_max_n = to_u64("urn.exact_max_n", *v);
    if (c.urn_anchor < 2) throw ConfigError("urn.anchor must be >= 2");
    if (c.urn_horizon < c.urn_anchor) throw ConfigError("urn.horizon must be >= urn.anchor");

    if (auto v = get("posterior.quantiles")) {
      c.posterior_quantiles = to_doubles("posterior.quantiles", *v);
      for (double q : c.posterior_quantiles)
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("posterior.quantiles must lie in (0, 1)");
    }
    if (auto v = get("posterior.intervals")) {
      for (const auto& item : split(*v, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 2) throw ConfigError("posterior.intervals: expected lo:hi, got '" + item + "'");
        const auto parse_end = [](const std::string& s) {
          if (s == "-inf") return -std::numeric_limits<double>::infinity();
          if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
          return to_double("posterior.intervals", s);
        };
        const double lo = parse_end(parts[0]), hi = parse_end(parts[1]);
        if (!(lo <= hi)) throw ConfigError("posterior.intervals: lo must not exceed hi");
        c.posterior_intervals.emplace_back(lo, hi);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  // Canonical listing of the effective configuration.
  auto& e = c.entries;
  e["run.flavor"] = to_string(c.flavor);
  e["run.steps"] = std::to_string(c.steps);
  e["run.replications"] = std::to_string(c.replications);
  e["run.seed"] = std::to_string(c.master_seed);
  e["run.t_grid"] = join_points(c.t_grid);
  e["run.checkpoints"] = join(c.checkpoints, [](auto n) { return std::to_string(n); });
  e["run.data_path"] = c.data_path ? c.data_path->string() : "";
  e["kernel.family"] = to_string(c.kernel.family());
  e["kernel.dimension"] = std::to_string(c.kernel.dimension());
  if (c.kernel.family() == KernelFamily::student_t) e["kernel.dof"] = fmt(c.kernel.dof());
  e["bandwidth"] = c.schedule.describe();
  if (const auto* t = std::get_if<BandwidthSchedule::Table>(&c.schedule.form()))
    e["bandwidth.table"] = join(t->values, fmt);
  e["diagnose.tightness"] = c.tightness ? "true" : "false";
  e["diagnose.cf"] = c.cf ? "true" : "false";
  e["diagnose.drift_points"] = join(c.drift_points, [](auto n) { return std::to_string(n); });
  e["diagnose.cf_t"] = join_points(c.cf_t);
  e["diagnose.threshold"] = fmt(c.tail_threshold);
  e["diagnose.tail_stride"] = std::to_string(c.tail_stride);
  e["urn.n_values"] = join(c.urn_n_values, [](auto n) { return std::to_string(n); });
  e["urn.windows"] = std::to_string(c.urn_windows);
  e["urn.anchor"] = std::to_string(c.urn_anchor);
  e["urn.horizon"] = std::to_string(c.urn_horizon);
  e["urn.fraction_replications"] = std::to_string(c.urn_fraction_replications);
  e["urn.exact_max_n"] = std::to_string(c.urn_exact_max_n);
  e["posterior.quantiles"] = join(c.posterior_quantiles, fmt);
  e["posterior.intervals"] =
      join(c.posterior_intervals, [](const auto& p) { return fmt(p.first) + ":" + fmt(p.second); });
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto raw = parse_key_values(buf.str(), path.string());
  for (const auto& [k, v] : overrides) raw[k] = v;
  return make_config(raw);
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : entries) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::header_line() const {
  return std::string(kToolName) + " " + kToolVersion + " config_hash=" + hash();
}

}  // namespace kdp
