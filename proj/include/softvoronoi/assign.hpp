#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "softvoronoi/geometry.hpp"
#include "softvoronoi/matrix.hpp"

namespace softvoronoi {

enum class AssignMode { hard, softmax, entmax15 };

std::string_view to_string(AssignMode mode);
// Accepts "hard", "softmax", "entmax15" (also "entmax"). Throws InvalidInput.
AssignMode parse_assign_mode(std::string_view name);

// Strictly positive, finite temperature sigma.
class Temperature {
 public:
  explicit Temperature(double sigma);
  double sigma() const { return sigma_; }
  // 1 / (2 sigma^2), the scale applied to squared distances.
  double logit_scale() const { return 1.0 / (2.0 * sigma_ * sigma_); }

 private:
  double sigma_;
};

// Zero-based nearest-centroid labels.
struct Assignment {
  std::vector<std::size_t> labels;
};

// n x k row-stochastic matrix. renormalized_rows counts rows whose sum drifted
// more than kRowSumTolerance from 1 and were rescaled.
struct ResponsibilityMatrix {
  Matrix r;
  AssignMode mode = AssignMode::hard;
  std::size_t renormalized_rows = 0;

  std::size_t n() const { return r.rows(); }
  std::size_t k() const { return r.cols(); }
};

inline constexpr double kRowSumTolerance = 1e-12;

// Index of the smallest entry; ties go to the lowest index.
std::size_t argmin_index(std::span<const double> values);
// Index of the largest entry; ties go to the lowest index.
std::size_t argmax_index(std::span<const double> values);

Assignment hard_assign(const DistanceMatrix& dist);
ResponsibilityMatrix one_hot(const Assignment& assignment, std::size_t k);

ResponsibilityMatrix softmax_responsibilities(const DistanceMatrix& dist, const Temperature& t);

// Exact Entmax-1.5: p_j = [(z_j - tau)/2]_+^2 with tau chosen so sum p = 1,
// found by sorting and scanning candidate support sizes. O(k log k).
std::vector<double> entmax15(std::span<const double> z);
void entmax15_into(std::span<const double> z, std::span<double> out);

ResponsibilityMatrix entmax_responsibilities(const DistanceMatrix& dist, const Temperature& t);

// Dispatch on mode; AssignMode::hard ignores the temperature.
ResponsibilityMatrix responsibilities(const DistanceMatrix& dist, const Temperature& t,
                                      AssignMode mode);

}  // namespace softvoronoi
