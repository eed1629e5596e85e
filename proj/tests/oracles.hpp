#pragma once

// Independent oracle implementations used only by tests. Each one takes a
// different algorithmic route than the library code it checks.

#include "stmtl/types.hpp"

namespace stmtl::oracle {

// Objective of the fused-sparse-group prox problem:
//   0.5*||x - z||^2 + l1*||x||_1 + l2*sum|x_{j+1}-x_j| + l3*||x||_2.
double fsgl_objective(const Vector& x, const Vector& z, double l1, double l2, double l3);

// Grid search over the fused prox objective (k <= 3). Stages refine around
// the incumbent by a factor of ten per stage down to `final_step`; a full
// grid at the final step is combinatorially out of reach for k >= 2, and
// the problem is 1-strongly convex so the incumbent localizes the
// minimizer between stages.
Vector fused_grid_search(const Vector& z, double lam, double final_step);

// Accelerated projected-gradient solve of the Fenchel dual of the fsgl
// prox problem; recovers the primal point from the dual residual. Stops at
// the requested duality gap.
Vector fsgl_dual_prox(const Vector& z, double l1, double l2, double l3, double gap_tol = 1e-13,
                      int max_iter = 400000);

// Cyclic coordinate descent for min ||XW - Y||_F^2 + lam*||W||_1.
Matrix lasso_coordinate_descent(const Matrix& X, const Matrix& Y, double lam, double tol = 1e-13,
                                int max_sweeps = 100000);

// Per-task least squares via Householder QR.
Matrix least_squares(const Matrix& X, const Matrix& Y);

// Direct solve of the stacked dk x dk normal equations of the quadratic
//   ||XW-Y||_F^2 + theta1*||W||_F^2 + theta2*||WH||_F^2.
Matrix tgl_stacked_solve(const Matrix& X, const Matrix& Y, double theta1, double theta2);

// Central finite differences of a scalar function of a matrix.
Matrix finite_difference_grad(const std::function<double(const Matrix&)>& fn, const Matrix& W,
                              double h);

}  // namespace stmtl::oracle
