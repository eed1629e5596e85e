#include "stmtl/prox.hpp"

#include <cmath>
#include <vector>

namespace stmtl {

double soft_threshold(double z, double lam) {
  if (z > lam) return z - lam;
  if (z < -lam) return z + lam;
  return 0.0;
}

Vector soft_threshold(const Vector& z, double lam) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = soft_threshold(z[i], lam);
  return out;
}

Matrix soft_threshold(const Matrix& z, double lam) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) out(i, j) = soft_threshold(z(i, j), lam);
  return out;
}

Vector group_row_prox(const Vector& row, double lam) {
  const double norm = row.norm();
  if (norm <= lam) return Vector::Zero(row.size());
  return row * (1.0 - lam / norm);
}

// Dynamic-programming 1-D total-variation denoiser (Johnson 2013 style):
// forward pass maintains the clamped message as a piecewise-linear
// derivative, backward pass clips against the stored knot positions.
Vector fused_prox_1d(const Vector& z, double lam) {
  const int n = static_cast<int>(z.size());
  Vector theta(n);
  if (n == 0) return theta;
  if (n == 1 || lam == 0.0) return z;

  std::vector<double> knot(2 * n);      // breakpoint positions
  std::vector<double> slope(2 * n);     // derivative slope deltas at breakpoints
  std::vector<double> offset(2 * n);    // derivative offset deltas at breakpoints
  std::vector<double> clip_lo(n - 1);   // negative-side clamp per step
  std::vector<double> clip_hi(n - 1);   // positive-side clamp per step

  int left = n - 1;
  int right = n;
  clip_lo[0] = z[0] - lam;
  clip_hi[0] = z[0] + lam;
  knot[left] = clip_lo[0];
  knot[right] = clip_hi[0];
  slope[left] = 1.0;
  offset[left] = -z[0] + lam;
  slope[right] = -1.0;
  offset[right] = z[0] + lam;
  double slope_first = 1.0, offset_first = -z[1] - lam;
  double slope_last = -1.0, offset_last = z[1] - lam;

  for (int k = 1; k < n - 1; ++k) {
    // Walk up from the left until the derivative exceeds -lam.
    double s_lo = slope_first, o_lo = offset_first;
    int lo = left;
    for (; lo <= right; ++lo) {
      if (s_lo * knot[lo] + o_lo > -lam) break;
      s_lo += slope[lo];
      o_lo += offset[lo];
    }
    // Walk down from the right until the derivative drops below lam.
    double s_hi = slope_last, o_hi = offset_last;
    int hi = right;
    for (; hi >= lo; --hi) {
      if (-s_hi * knot[hi] - o_hi < lam) break;
      s_hi += slope[hi];
      o_hi += offset[hi];
    }

    clip_lo[k] = (-lam - o_lo) / s_lo;
    left = lo - 1;
    knot[left] = clip_lo[k];
    clip_hi[k] = (lam + o_hi) / (-s_hi);
    right = hi + 1;
    knot[right] = clip_hi[k];

    slope[left] = s_lo;
    offset[left] = o_lo + lam;
    slope[right] = s_hi;
    offset[right] = o_hi + lam;
    slope_first = 1.0;
    offset_first = -z[k + 1] - lam;
    slope_last = -1.0;
    offset_last = z[k + 1] - lam;
  }

  // Terminal coefficient sits where the final derivative vanishes.
  double s_lo = slope_first, o_lo = offset_first;
  for (int lo = left; lo <= right; ++lo) {
    if (s_lo * knot[lo] + o_lo > 0.0) break;
    s_lo += slope[lo];
    o_lo += offset[lo];
  }
  theta[n - 1] = -o_lo / s_lo;
  for (int k = n - 2; k >= 0; --k) {
    if (theta[k + 1] > clip_hi[k]) theta[k] = clip_hi[k];
    else if (theta[k + 1] < clip_lo[k]) theta[k] = clip_lo[k];
    else theta[k] = theta[k + 1];
  }
  return theta;
}

Vector fsgl_prox(const Vector& row, double lam1, double lam2, double lam3) {
  Vector x = fused_prox_1d(row, lam2);
  x = soft_threshold(x, lam1);
  return group_row_prox(x, lam3);
}

}  // namespace stmtl
