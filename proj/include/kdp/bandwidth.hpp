#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kdp {

/// Power-law envelope h_n <= C n^{-delta}.
struct Envelope {
  double C;
  double delta;
};

class BandwidthSchedule {
 public:
  struct Power {
    double C;
    double delta;
  };
  struct Exponential {
    double rate;
  };
  struct Table {
    std::vector<double> values;
  };

  static BandwidthSchedule power(double C, double delta);
  static BandwidthSchedule exponential(double rate);
  static BandwidthSchedule table(std::vector<double> values);
  /// One positive real per line; blank lines and '#' comments are skipped.
  static BandwidthSchedule table_from_file(const std::filesystem::path& path);
  /// power(1, 1/(d+4)).
  static BandwidthSchedule default_for_dimension(int d);

  /// h_n for n >= 1. Throws IndexBeyondTable past the end of a table.
  double at(std::uint64_t n) const;
  double operator()(std::uint64_t n) const { return at(n); }

  /// Smooth extension h(x) for real x >= 1; nullopt for tables.
  std::optional<double> continuous(double x) const;
  /// Power-law envelope, if one is known. Exponential decay is dominated by
  /// C = 1/(e*rate), delta = 1.
  std::optional<Envelope> envelope() const;
  /// Number of defined indices; nullopt when unbounded.
  std::optional<std::uint64_t> length() const;

  std::string describe() const;
  const auto& form() const { return form_; }

 private:
  explicit BandwidthSchedule(std::variant<Power, Exponential, Table> form)
      : form_(std::move(form)) {}
  std::variant<Power, Exponential, Table> form_;
};

}  // namespace kdp
