#include "stmtl/solvers.hpp"

#include "stmtl/prox.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace stmtl {

Matrix temporal_h(int k) {
  if (k < 1) throw ConfigError("temporal_h: k must be >= 1");
  Matrix h = Matrix::Zero(k, k - 1);
  for (int i = 0; i + 1 < k; ++i) {
    h(i, i) = 1.0;
    h(i + 1, i) = -1.0;
  }
  return h;
}

Matrix temporal_r(int k) {
  if (k < 1) throw ConfigError("temporal_r: k must be >= 1");
  Matrix r = Matrix::Zero(k - 1, k);
  for (int i = 0; i + 1 < k; ++i) {
    r(i, i) = 1.0;
    r(i, i + 1) = -1.0;
  }
  return r;
}

void SolverConfig::validate() const {
  if (max_iter < 1) throw ConfigError("solver config: max_iter must be positive");
  if (tol < 0.0) throw ConfigError("solver config: tol must be nonnegative");
  if (initial_step <= 0.0) throw ConfigError("solver config: initial_step must be positive");
  if (step_shrink <= 0.0 || step_shrink >= 1.0)
    throw ConfigError("solver config: step_shrink must be in (0, 1)");
}

double smooth_objective_and_grad(const Matrix& W, const Matrix& X, const Matrix& Y, double theta1,
                                 double theta2, const Matrix& H, Matrix* grad) {
  if (X.cols() != W.rows() || X.rows() != Y.rows() || W.cols() != Y.cols())
    throw ConfigError("smooth_objective_and_grad: dimension mismatch between X, W, Y");
  if (H.rows() != W.cols())
    throw ConfigError("smooth_objective_and_grad: H row count must equal task count");
  const Matrix residual = X * W - Y;
  const Matrix wh = W * H;
  const double value = residual.squaredNorm() + theta1 * W.squaredNorm() + theta2 * wh.squaredNorm();
  if (grad) {
    grad->noalias() = 2.0 * (X.transpose() * residual);
    if (theta1 != 0.0) *grad += 2.0 * theta1 * W;
    if (theta2 != 0.0) grad->noalias() += 2.0 * theta2 * (wh * H.transpose());
  }
  return value;
}

FitResult fista(const SmoothFn& smooth, const ProxFn& prox, const PenaltyFn& penalty,
                const Matrix& W0, const SolverConfig& config) {
  config.validate();
  FitResult result;
  Matrix x_prev = W0;
  Matrix y = W0;
  Matrix grad(W0.rows(), W0.cols());
  double t_momentum = 1.0;
  double step = config.initial_step;

  double obj_prev = smooth(x_prev, nullptr) + penalty(x_prev);
  if (!std::isfinite(obj_prev)) throw NumericError("fista: objective not finite at start");
  result.objective_trace.push_back(obj_prev);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const double f_y = smooth(y, &grad);
    if (!std::isfinite(f_y)) throw NumericError("fista: smooth part not finite");

    Matrix x_next;
    double f_next = 0.0;
    for (;;) {
      x_next = prox(y - step * grad, step);
      const Matrix diff = x_next - y;
      f_next = smooth(x_next, nullptr);
      const double quad_bound =
          f_y + (grad.array() * diff.array()).sum() + diff.squaredNorm() / (2.0 * step);
      if (std::isfinite(f_next) && f_next <= quad_bound + 1e-12 * std::abs(quad_bound) + 1e-300)
        break;
      step *= config.step_shrink;
      if (step < 1e-30) throw NumericError("fista: line search collapsed, objective diverges");
    }

    const double obj_next = f_next + penalty(x_next);
    if (!std::isfinite(obj_next)) throw NumericError("fista: objective not finite");
    result.objective_trace.push_back(obj_next);
    result.iterations = iter;

    const double rel_change = std::abs(obj_prev - obj_next) / std::max(1.0, std::abs(obj_prev));

    if (obj_next > obj_prev) {
      // Momentum overshoot: restart the acceleration sequence.
      t_momentum = 1.0;
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      y = x_next + ((t_momentum - 1.0) / t_next) * (x_next - x_prev);
      t_momentum = t_next;
    }
    x_prev = x_next;
    obj_prev = obj_next;

    if (rel_change < config.tol) {
      result.converged = true;
      break;
    }
  }

  result.W = std::move(x_prev);
  return result;
}

double tgl_objective(const Matrix& W, const Matrix& X, const Matrix& Y, double theta1,
                     double theta2, double delta) {
  const Matrix H = temporal_h(static_cast<int>(Y.cols()));
  double value = smooth_objective_and_grad(W, X, Y, theta1, theta2, H, nullptr);
  if (delta != 0.0) {
    for (Eigen::Index f = 0; f < W.rows(); ++f) value += delta * W.row(f).norm();
  }
  return value;
}

double cfsgl_objective(const Matrix& W, const Matrix& X, const Matrix& Y, double theta1,
                       double theta2, double delta) {
  double value = (X * W - Y).squaredNorm() + theta1 * W.lpNorm<1>();
  for (Eigen::Index f = 0; f < W.rows(); ++f) {
    for (Eigen::Index j = 0; j + 1 < W.cols(); ++j) value += theta2 * std::abs(W(f, j) - W(f, j + 1));
    value += delta * W.row(f).norm();
  }
  return value;
}

namespace {

// Solves (X^T X + theta1 I) W + W B = X^T Y for symmetric PSD B via the
// eigendecomposition of B; each rotated column is an independent ridge-type
// system.
Matrix solve_quadratic_coupled(const Matrix& X, const Matrix& Y, double theta1, const Matrix& B) {
  const Eigen::Index d = X.cols();
  Matrix gram = X.transpose() * X;
  gram.diagonal().array() += theta1;
  const Matrix rhs = X.transpose() * Y;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(B);
  if (eig.info() != Eigen::Success) throw NumericError("coupled solve: eigendecomposition failed");
  const Matrix q = eig.eigenvectors();
  const Vector lambdas = eig.eigenvalues();

  const Matrix rhs_rot = rhs * q;
  Matrix w_rot(d, Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    Matrix system = gram;
    system.diagonal().array() += std::max(0.0, lambdas[j]);
    Eigen::LDLT<Matrix> ldlt(system);
    if (ldlt.info() != Eigen::Success)
      throw NumericError("coupled solve: factorization failed");
    const double max_pivot = ldlt.vectorD().cwiseAbs().maxCoeff();
    const double min_pivot = ldlt.vectorD().cwiseAbs().minCoeff();
    if (max_pivot <= 0.0 || min_pivot < 1e-12 * max_pivot)
      throw NumericError("coupled solve: singular system (add regularization)");
    w_rot.col(j) = ldlt.solve(rhs_rot.col(j));
  }
  return w_rot * q.transpose();
}

}  // namespace

FitResult fit_ridge(const Matrix& X, const Matrix& Y, double lam) {
  if (lam < 0.0) throw ConfigError("fit_ridge: lam must be nonnegative");
  if (X.rows() != Y.rows()) throw ConfigError("fit_ridge: X and Y row counts differ");
  FitResult result;
  const Matrix B = Matrix::Zero(Y.cols(), Y.cols());
  result.W = solve_quadratic_coupled(X, Y, lam, B);
  result.objective_trace.push_back(tgl_objective(result.W, X, Y, lam, 0.0, 0.0));
  result.iterations = 0;
  result.converged = true;
  return result;
}

FitResult fit_lasso(const Matrix& X, const Matrix& Y, double lam, const SolverConfig& config) {
  if (lam < 0.0) throw ConfigError("fit_lasso: lam must be nonnegative");
  if (X.rows() != Y.rows()) throw ConfigError("fit_lasso: X and Y row counts differ");
  const auto smooth = [&X, &Y](const Matrix& W, Matrix* grad) {
    const Matrix residual = X * W - Y;
    if (grad) grad->noalias() = X.transpose() * residual;
    return 0.5 * residual.squaredNorm();
  };
  const auto prox = [lam](const Matrix& Z, double step) { return soft_threshold(Z, lam * step); };
  const auto penalty = [lam](const Matrix& W) { return lam * W.lpNorm<1>(); };
  return fista(smooth, prox, penalty, Matrix::Zero(X.cols(), Y.cols()), config);
}

FitResult fit_tgl(const Matrix& X, const Matrix& Y, double theta1, double theta2, double delta,
                  const SolverConfig& config) {
  if (theta1 < 0.0 || theta2 < 0.0 || delta < 0.0)
    throw ConfigError("fit_tgl: penalties must be nonnegative");
  if (X.rows() != Y.rows()) throw ConfigError("fit_tgl: X and Y row counts differ");
  const int k = static_cast<int>(Y.cols());
  const Matrix H = temporal_h(k);

  if (delta == 0.0) {
    // Pure quadratic: solve the normal equations directly.
    FitResult result;
    result.W = solve_quadratic_coupled(X, Y, theta1, theta2 * (H * H.transpose()));
    result.objective_trace.push_back(tgl_objective(result.W, X, Y, theta1, theta2, 0.0));
    result.iterations = 0;
    result.converged = true;
    return result;
  }

  const auto smooth = [&, theta1, theta2](const Matrix& W, Matrix* grad) {
    return smooth_objective_and_grad(W, X, Y, theta1, theta2, H, grad);
  };
  const auto prox = [delta](const Matrix& Z, double step) {
    Matrix out(Z.rows(), Z.cols());
    for (Eigen::Index f = 0; f < Z.rows(); ++f)
      out.row(f) = group_row_prox(Z.row(f).transpose(), delta * step).transpose();
    return out;
  };
  const auto penalty = [delta](const Matrix& W) {
    double value = 0.0;
    for (Eigen::Index f = 0; f < W.rows(); ++f) value += delta * W.row(f).norm();
    return value;
  };
  return fista(smooth, prox, penalty, Matrix::Zero(X.cols(), k), config);
}

FitResult fit_cfsgl(const Matrix& X, const Matrix& Y, double theta1, double theta2, double delta,
                    const SolverConfig& config) {
  if (theta1 < 0.0 || theta2 < 0.0 || delta < 0.0)
    throw ConfigError("fit_cfsgl: penalties must be nonnegative");
  if (X.rows() != Y.rows()) throw ConfigError("fit_cfsgl: X and Y row counts differ");
  const int k = static_cast<int>(Y.cols());
  const auto smooth = [&X, &Y](const Matrix& W, Matrix* grad) {
    const Matrix residual = X * W - Y;
    if (grad) grad->noalias() = 2.0 * (X.transpose() * residual);
    return residual.squaredNorm();
  };
  const auto prox = [theta1, theta2, delta](const Matrix& Z, double step) {
    Matrix out(Z.rows(), Z.cols());
    for (Eigen::Index f = 0; f < Z.rows(); ++f) {
      out.row(f) =
          fsgl_prox(Z.row(f).transpose(), theta1 * step, theta2 * step, delta * step).transpose();
    }
    return out;
  };
  const auto penalty = [theta1, theta2, delta](const Matrix& W) {
    double value = theta1 * W.lpNorm<1>();
    for (Eigen::Index f = 0; f < W.rows(); ++f) {
      for (Eigen::Index j = 0; j + 1 < W.cols(); ++j)
        value += theta2 * std::abs(W(f, j) - W(f, j + 1));
      value += delta * W.row(f).norm();
    }
    return value;
  };
  return fista(smooth, prox, penalty, Matrix::Zero(X.cols(), k), config);
}

}  // namespace stmtl
