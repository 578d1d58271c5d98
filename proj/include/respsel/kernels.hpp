#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace respsel {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

// Hot loops shared by the index scan, K-means and head projection. The
// serial versions are the reference the OpenMP versions are tested against.
// Every parallel kernel is per-row independent, so both produce identical
// results.
namespace kernels {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

namespace serial {

// out[i] = cos(query, rows.row(i)); rows or query with zero norm score 0.
void cosine_scan(std::span<const double> query, const Matrix& rows, std::span<double> out);

// labels[i] = argmin_k |points_i - centers_k|^2 (lowest k on ties).
void assign_nearest(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> sq_dists);

// out.row(i) = weights * inputs.row(i), optionally L2-normalized.
void project_rows(const Matrix& weights, const Matrix& inputs, Matrix& out, bool normalize);

}  // namespace serial

namespace parallel {

void cosine_scan(std::span<const double> query, const Matrix& rows, std::span<double> out);
void assign_nearest(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> sq_dists);
void project_rows(const Matrix& weights, const Matrix& inputs, Matrix& out, bool normalize);

}  // namespace parallel

// y = W x, skipping zero components of x (mock embeddings are sparse).
void matvec(const Matrix& weights, std::span<const double> x, std::span<double> y);

}  // namespace kernels
}  // namespace respsel
