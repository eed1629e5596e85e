#pragma once

#include "stmtl/types.hpp"

#include <functional>

namespace stmtl {

// Forward-difference encodings of adjacent-task coupling. Column j of W*H
// is W.col(j) - W.col(j+1); row i of R*W^T is the same difference
// transposed, so ||WH||_F == ||RW^T||_F identically.
Matrix temporal_h(int k);  // k x (k-1)
Matrix temporal_r(int k);  // (k-1) x k

struct SolverConfig {
  int max_iter = 10000;
  double tol = 1e-6;          // relative objective change, |df| / max(1, |f|)
  double initial_step = 1.0;  // backtracking line search start
  double step_shrink = 0.5;

  void validate() const;
};

struct FitResult {
  Matrix W;
  std::vector<double> objective_trace;  // final entry == objective(W)
  int iterations = 0;
  bool converged = false;
};

// Value and gradient of ||XW-Y||_F^2 + theta1*||W||_F^2 + theta2*||WH||_F^2.
double smooth_objective_and_grad(const Matrix& W, const Matrix& X, const Matrix& Y, double theta1,
                                 double theta2, const Matrix& H, Matrix* grad);

using SmoothFn = std::function<double(const Matrix& W, Matrix* grad)>;
using ProxFn = std::function<Matrix(const Matrix& Z, double step)>;
using PenaltyFn = std::function<double(const Matrix& W)>;

// Accelerated proximal gradient with backtracking line search and momentum
// restart on objective increase. Throws NumericError if the objective goes
// non-finite or the line search collapses.
FitResult fista(const SmoothFn& smooth, const ProxFn& prox, const PenaltyFn& penalty,
                const Matrix& W0, const SolverConfig& config);

// min ||XW-Y||_F^2 + lam*||W||_F^2, closed form per task.
FitResult fit_ridge(const Matrix& X, const Matrix& Y, double lam);

// min 0.5*||XW-Y||_F^2 + lam*||W||_1.
FitResult fit_lasso(const Matrix& X, const Matrix& Y, double lam,
                    const SolverConfig& config = {});

// min ||XW-Y||_F^2 + theta1*||W||_F^2 + theta2*||WH||_F^2 + delta*||W||_{2,1}.
// The delta == 0 case is a quadratic and is solved directly.
FitResult fit_tgl(const Matrix& X, const Matrix& Y, double theta1, double theta2, double delta,
                  const SolverConfig& config = {});

// min ||XW-Y||_F^2 + theta1*||W||_1 + theta2*||RW^T||_1 + delta*||W||_{2,1}.
FitResult fit_cfsgl(const Matrix& X, const Matrix& Y, double theta1, double theta2, double delta,
                    const SolverConfig& config = {});

double tgl_objective(const Matrix& W, const Matrix& X, const Matrix& Y, double theta1,
                     double theta2, double delta);
double cfsgl_objective(const Matrix& W, const Matrix& X, const Matrix& Y, double theta1,
                       double theta2, double delta);

}  // namespace stmtl
