#include "kdp/bandwidth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kdp/errors.hpp"

namespace kdp {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }
}  // namespace

BandwidthSchedule BandwidthSchedule::power(double C, double delta) {
  if (!positive_finite(C) || !positive_finite(delta))
    throw InvalidSpec("power bandwidth requires C > 0 and delta > 0");
  return BandwidthSchedule(Power{C, delta});
}

BandwidthSchedule BandwidthSchedule::exponential(double rate) {
  if (!positive_finite(rate)) throw InvalidSpec("exponential bandwidth requires rate > 0");
  return BandwidthSchedule(Exponential{rate});
}

BandwidthSchedule BandwidthSchedule::table(std::vector<double> values) {
  if (values.empty()) throw InvalidSpec("bandwidth table is empty");
  for (double v : values)
    if (!positive_finite(v)) throw InvalidSpec("bandwidth table values must be positive");
  return BandwidthSchedule(Table{std::move(values)});
}

BandwidthSchedule BandwidthSchedule::table_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bandwidth table '" + path.string() + "'");
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v;
    if (!(ss >> v)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InvalidSpec(path.string() + ":" + std::to_string(lineno) +
                        ": expected a positive real");
    }
    std::string rest;
    if (ss >> rest)
      throw InvalidSpec(path.string() + ":" + std::to_string(lineno) +
                        ": one value per line");
    values.push_back(v);
  }
  return table(std::move(values));
}

BandwidthSchedule BandwidthSchedule::default_for_dimension(int d) {
  return power(1.0, 1.0 / (d + 4.0));
}

double BandwidthSchedule::at(std::uint64_t n) const {
  if (n == 0) throw DomainError("bandwidth index starts at 1");
  return std::visit(
      overloaded{
          [n](const Power& p) {
            return p.C * std::pow(static_cast<double>(n), -p.delta);
          },
          [n](const Exponential& e) { return std::exp(-e.rate * static_cast<double>(n)); },
          [n](const Table& t) {
            if (n > t.values.size())
              throw IndexBeyondTable("bandwidth table has " +
                                     std::to_string(t.values.size()) +
                                     " entries, index " + std::to_string(n) +
                                     " requested");
            return t.values[n - 1];
          },
      },
      form_);
}

std::optional<double> BandwidthSchedule::continuous(double x) const {
  return std::visit(
      overloaded{
          [x](const Power& p) -> std::optional<double> { return p.C * std::pow(x, -p.delta); },
          [x](const Exponential& e) -> std::optional<double> { return std::exp(-e.rate * x); },
          [](const Table&) -> std::optional<double> { return std::nullopt; },
      },
      form_);
}

std::optional<Envelope> BandwidthSchedule::envelope() const {
  return std::visit(
      overloaded{
          [](const Power& p) -> std::optional<Envelope> { return Envelope{p.C, p.delta}; },
          [](const Exponential& e) -> std::optional<Envelope> {
            // max_n n e^{-rate n} <= 1/(e rate)
            return Envelope{1.0 / (std::numbers::e * e.rate), 1.0};
          },
          [](const Table&) -> std::optional<Envelope> { return std::nullopt; },
      },
      form_);
}

std::optional<std::uint64_t> BandwidthSchedule::length() const {
  if (const auto* t = std::get_if<Table>(&form_)) return t->values.size();
  return std::nullopt;
}

std::string BandwidthSchedule::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&os](const Power& p) { os << "power(C=" << p.C << ",delta=" << p.delta << ")"; },
                 [&os](const Exponential& e) { os << "exponential(rate=" << e.rate << ")"; },
                 [&os](const Table& t) { os << "table(n=" << t.values.size() << ")"; },
             },
             form_);
  return os.str();
}

}  // namespace kdp
