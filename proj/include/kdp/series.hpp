#pragma once

#include <complex>
#include <cstdint>
#include <functional>

namespace kdp {

/// Neumaier compensated summation.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    const T t = sum_ + x;
    if constexpr (std::is_floating_point_v<T>) {
      if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
      else
        comp_ += (x - t) + sum_;
    } else {
      comp_ += fix(sum_, x, t);
    }
    sum_ = t;
  }
  T value() const { return sum_ + comp_; }

 private:
  static T fix(T a, T b, T t) {
    auto part = [](double s, double x, double tt) {
      return std::abs(s) >= std::abs(x) ? (s - tt) + x : (x - tt) + s;
    };
    return {part(a.real(), b.real(), t.real()), part(a.imag(), b.imag(), t.imag())};
  }
  T sum_{};
  T comp_{};
};

/// Index beyond which series tails switch from direct summation to the
/// midpoint Euler-Maclaurin estimate.
inline constexpr std::uint64_t kDirectSummationLimit = 4096;

/// sum_{k >= from} f(k) for a smooth, eventually monotone, integrable f
/// defined on reals x >= 1. Terms below kDirectSummationLimit are added
/// directly; the rest uses
///   int_{a}^inf f + (f(M) - f(M-1))/24 - 17 f'''(a)/5760,   a = M - 1/2,
/// with derivatives from unit-spacing differences.
double smooth_tail_sum(const std::function<double(double)>& f, std::uint64_t from);
std::complex<double> smooth_tail_sum(
    const std::function<std::complex<double>(double)>& f, std::uint64_t from);

/// int_a^inf f(x) dx via x = a e^s and double-exponential quadrature.
double integrate_to_infinity(const std::function<double(double)>& f, double a);

}  // namespace kdp
