#pragma once

#include "stmtl/types.hpp"

namespace stmtl {

// prox of lam*||.||_1 : elementwise sign(z) * max(|z| - lam, 0).
double soft_threshold(double z, double lam);
Vector soft_threshold(const Vector& z, double lam);
Matrix soft_threshold(const Matrix& z, double lam);

// prox of lam*||.||_2 on one feature row: row * max(1 - lam/||row||, 0).
// Applying it to every row of W is the prox of the L2,1 norm.
Vector group_row_prox(const Vector& row, double lam);

// Exact prox of lam * sum_j |x_{j+1} - x_j| (1-D total variation), computed
// by the direct dynamic-programming method, no iterative approximation.
Vector fused_prox_1d(const Vector& z, double lam);

// Prox of lam1*||x||_1 + lam2*TV(x) + lam3*||x||_2 by exact sequential
// composition: fused, then soft threshold, then group shrink. The order is
// load-bearing; tests check the composition against an independent oracle.
Vector fsgl_prox(const Vector& row, double lam1, double lam2, double lam3);

}  // namespace stmtl
