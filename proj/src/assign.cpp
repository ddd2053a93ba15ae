#include "softvoronoi/assign.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "softvoronoi/error.hpp"

namespace softvoronoi {

std::string_view to_string(AssignMode mode) {
  switch (mode) {
    case AssignMode::hard:
      return "hard";
    case AssignMode::softmax:
      return "softmax";
    case AssignMode::entmax15:
      return "entmax15";
  }
  return "unknown";
}

AssignMode parse_assign_mode(std::string_view name) {
  if (name == "hard") return AssignMode::hard;
  if (name == "softmax") return AssignMode::softmax;
  if (name == "entmax15" || name == "entmax") return AssignMode::entmax15;
  throw InvalidInput("unknown assignment mode '" + std::string(name) +
                     "' (expected hard, softmax or entmax15)");
}

Temperature::Temperature(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidInput("temperature sigma must be finite and > 0, got " + std::to_string(sigma));
  }
}

std::size_t argmin_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] < values[best]) best = j;
  }
  return best;
}

std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

Assignment hard_assign(const DistanceMatrix& dist) {
  Assignment out;
  out.labels.resize(dist.n());
  for (std::size_t i = 0; i < dist.n(); ++i) {
    out.labels[i] = argmin_index(dist.sq.row(i));
  }
  return out;
}

ResponsibilityMatrix one_hot(const Assignment& assignment, std::size_t k) {
  ResponsibilityMatrix out{Matrix(assignment.labels.size(), k), AssignMode::hard, 0};
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] >= k) throw InvalidInput("one_hot: label out of range");
    out.r(i, assignment.labels[i]) = 1.0;
  }
  return out;
}

namespace {

// Rescale a row whose sum drifted; returns true when it did.
bool normalize_row(std::span<double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  if (std::abs(sum - 1.0) <= kRowSumTolerance) return false;
  for (double& v : row) v /= sum;
  return true;
}

template <typename RowMap>
ResponsibilityMatrix map_rows(const DistanceMatrix& dist, const Temperature& t, AssignMode mode,
                              RowMap&& row_map) {
  const std::size_t k = dist.k();
  ResponsibilityMatrix out{Matrix(dist.n(), k), mode, 0};
  std::vector<double> logits(k);
  const double scale = t.logit_scale();
  for (std::size_t i = 0; i < dist.n(); ++i) {
    const auto sq = dist.sq.row(i);
    for (std::size_t j = 0; j < k; ++j) logits[j] = -sq[j] * scale;
    auto row = out.r.row(i);
    row_map(std::span<const double>(logits), row);
    if (normalize_row(row)) ++out.renormalized_rows;
  }
  return out;
}

void softmax_row(std::span<const double> logits, std::span<double> out) {
  const double top = logits[argmax_index(logits)];
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - top);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

}  // namespace

ResponsibilityMatrix softmax_responsibilities(const DistanceMatrix& dist, const Temperature& t) {
  return map_rows(dist, t, AssignMode::softmax, softmax_row);
}

void entmax15_into(std::span<const double> z, std::span<double> out) {
  const std::size_t k = z.size();
  if (k == 0) return;
  // Shift so the largest half-logit is 0; entmax is invariant to shifts and
  // this keeps the variance term free of cancellation.
  const double top = z[argmax_index(z)];
  std::vector<double> half(k);
  for (std::size_t j = 0; j < k; ++j) half[j] = 0.5 * (z[j] - top);
  std::vector<double> sorted = half;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // For support size s the threshold solving sum_{j<=s} (v_j - tau)^2 = 1 is
  // tau_s = mean_s - sqrt((1 - s * (meansq_s - mean_s^2)) / s). The support
  // is the largest s with tau_s <= v_(s).
  double sum = 0.0;
  double sum_sq = 0.0;
  double tau = sorted[0] - 1.0;
  for (std::size_t s = 1; s <= k; ++s) {
    const double v = sorted[s - 1];
    sum += v;
    sum_sq += v * v;
    const double size = static_cast<double>(s);
    const double mean = sum / size;
    const double var = std::max(sum_sq / size - mean * mean, 0.0);
    const double delta = (1.0 - size * var) / size;
    const double tau_s = mean - std::sqrt(std::max(delta, 0.0));
    if (tau_s <= v) {
      tau = tau_s;
    } else {
      break;
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double gap = std::max(half[j] - tau, 0.0);
    out[j] = gap * gap;
  }
}

std::vector<double> entmax15(std::span<const double> z) {
  std::vector<double> out(z.size());
  entmax15_into(z, out);
  return out;
}

ResponsibilityMatrix entmax_responsibilities(const DistanceMatrix& dist, const Temperature& t) {
  return map_rows(dist, t, AssignMode::entmax15, entmax15_into);
}

ResponsibilityMatrix responsibilities(const DistanceMatrix& dist, const Temperature& t,
                                      AssignMode mode) {
  switch (mode) {
    case AssignMode::hard:
      return one_hot(hard_assign(dist), dist.k());
    case AssignMode::softmax:
      return softmax_responsibilities(dist, t);
    case AssignMode::entmax15:
      return entmax_responsibilities(dist, t);
  }
  throw InvalidInput("responsibilities: unknown mode");
}

}  // namespace softvoronoi
