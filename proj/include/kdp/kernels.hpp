#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "kdp/rng.hpp"

namespace kdp {

enum class KernelFamily { gaussian, half_normal, student_t, laplace };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

/// Kernel distribution K on R^d. Multivariate kernels are products of iid
/// univariate coordinates, so CFs and box probabilities factorise.
class KernelSpec {
 public:
  /// Throws InvalidSpec for d < 1, or student_t with dof <= 1.
  KernelSpec(KernelFamily family, int dimension = 1, double dof = 0.0);

  static KernelSpec gaussian(int d = 1) { return {KernelFamily::gaussian, d}; }
  static KernelSpec half_normal(int d = 1) { return {KernelFamily::half_normal, d}; }
  static KernelSpec laplace(int d = 1) { return {KernelFamily::laplace, d}; }
  static KernelSpec student_t(double dof, int d = 1) {
    return {KernelFamily::student_t, d, dof};
  }

  KernelFamily family() const { return family_; }
  int dimension() const { return dimension_; }
  double dof() const { return dof_; }
  bool symmetric() const { return family_ != KernelFamily::half_normal; }

  /// Writes one draw of K into out (size d).
  void sample(VariateSource& source, std::span<double> out) const;
  std::vector<double> sample(VariateSource& source) const;

  /// phi_K(t) = E exp(i t.Y).
  std::complex<double> cf(std::span<const double> t) const;
  /// Univariate coordinate CF.
  std::complex<double> cf1(double t) const;
  /// phi_K(t) - 1 without cancellation for small t.
  std::complex<double> cf_minus_one(std::span<const double> t) const;
  std::complex<double> cf1_minus_one(double t) const;
  /// Univariate coordinate CDF, handles +-inf.
  double cdf1(double y) const;

  /// E ||Y||^p with the Euclidean norm. Throws MomentUndefined when infinite.
  double abs_moment(double p) const;
  /// P(||Y|| > r). Exact for d = 1 and the Gaussian families; for product
  /// Laplace/Student kernels in d > 1 it returns the union bound
  /// sum_j P(|Y_j| > r / sqrt(d)), which is an upper bound.
  double norm_survival(double r) const;
  bool norm_survival_exact() const;

  /// ||E Y||; nonzero only for the half-normal family.
  double mean_norm() const;
  /// E Y_j for one coordinate.
  double coordinate_mean() const;

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelFamily family_;
  int dimension_;
  double dof_;
};

namespace detail {
/// E||Y||^p by one-dimensional quadrature over the coordinate laws; valid for
/// every family and dimension. abs_moment uses closed forms where they exist.
double product_abs_moment(const KernelSpec& k, double p);
}  // namespace detail

/// Dawson's integral F(x) = exp(-x^2) int_0^x exp(y^2) dy.
double dawson(double x);

}  // namespace kdp
