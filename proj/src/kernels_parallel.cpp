#include <cstdint>

#include "respsel/kernels.hpp"

namespace respsel::kernels {

namespace detail {
double cosine_row(std::span<const double> q, double qn, std::span<const double> r);
void assign_one(const Matrix& points, const Matrix& centers, std::size_t i, std::span<std::size_t> labels,
                std::span<double> sq_dists);
void project_one(const Matrix& w, const Matrix& inputs, Matrix& out, std::size_t i, bool normalize);
}  // namespace detail

namespace parallel {

void cosine_scan(std::span<const double> query, const Matrix& rows, std::span<double> out) {
  const double qn = norm(query);
  const auto n = static_cast<std::int64_t>(rows.rows);
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::int64_t i = 0; i < n; ++i) out[i] = detail::cosine_row(query, qn, rows.row(i));
}

void assign_nearest(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> sq_dists) {
  const auto n = static_cast<std::int64_t>(points.rows);
#pragma omp parallel for schedule(static) if (n > 128)
  for (std::int64_t i = 0; i < n; ++i) detail::assign_one(points, centers, i, labels, sq_dists);
}

void project_rows(const Matrix& weights, const Matrix& inputs, Matrix& out, bool normalize) {
  out = Matrix(inputs.rows, weights.rows);
  const auto n = static_cast<std::int64_t>(inputs.rows);
#pragma omp parallel for schedule(dynamic, 16) if (n > 32)
  for (std::int64_t i = 0; i < n; ++i) detail::project_one(weights, inputs, out, i, normalize);
}

}  // namespace parallel
}  // namespace respsel::kernels
