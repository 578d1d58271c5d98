#include <cmath>
#include <limits>

#include "respsel/kernels.hpp"

namespace respsel::kernels {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t j = 0; j < w.cols; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    for (std::size_t i = 0; i < w.rows; ++i) y[i] += w.data[i * w.cols + j] * xj;
  }
}

namespace detail {

double cosine_row(std::span<const double> q, double qn, std::span<const double> r) {
  const double rn = norm(r);
  if (qn == 0.0 || rn == 0.0) return 0.0;
  return dot(q, r) / (qn * rn);
}

void assign_one(const Matrix& points, const Matrix& centers, std::size_t i, std::span<std::size_t> labels,
                std::span<double> sq_dists) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < centers.rows; ++k) {
    const double d = squared_distance(points.row(i), centers.row(k));
    if (d < best) {
      best = d;
      arg = k;
    }
  }
  labels[i] = arg;
  sq_dists[i] = best;
}

void project_one(const Matrix& w, const Matrix& inputs, Matrix& out, std::size_t i, bool normalize) {
  auto y = out.row(i);
  matvec(w, inputs.row(i), y);
  if (normalize) {
    const double n = norm(y);
    if (n > 0.0)
      for (double& v : y) v /= n;
  }
}

}  // namespace detail

namespace serial {

void cosine_scan(std::span<const double> query, const Matrix& rows, std::span<double> out) {
  const double qn = norm(query);
  for (std::size_t i = 0; i < rows.rows; ++i) out[i] = detail::cosine_row(query, qn, rows.row(i));
}

void assign_nearest(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> sq_dists) {
  for (std::size_t i = 0; i < points.rows; ++i) detail::assign_one(points, centers, i, labels, sq_dists);
}

void project_rows(const Matrix& weights, const Matrix& inputs, Matrix& out, bool normalize) {
  out = Matrix(inputs.rows, weights.rows);
  for (std::size_t i = 0; i < inputs.rows; ++i) detail::project_one(weights, inputs, out, i, normalize);
}

}  // namespace serial
}  // namespace respsel::kernels
