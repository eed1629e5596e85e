#include "oracles.hpp"

#include "stmtl/solvers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace stmtl::oracle {

double fsgl_objective(const Vector& x, const Vector& z, double l1, double l2, double l3) {
  double value = 0.5 * (x - z).squaredNorm() + l1 * x.lpNorm<1>() + l3 * x.norm();
  for (Eigen::Index j = 0; j + 1 < x.size(); ++j) value += l2 * std::abs(x[j + 1] - x[j]);
  return value;
}

Vector fused_grid_search(const Vector& z, double lam, double final_step) {
  const int k = static_cast<int>(z.size());
  if (k < 1 || k > 3) throw std::invalid_argument("fused_grid_search: k must be 1..3");
  auto objective = [&](const Vector& x) {
    double value = 0.5 * (x - z).squaredNorm();
    for (int j = 0; j + 1 < k; ++j) value += lam * std::abs(x[j + 1] - x[j]);
    return value;
  };

  // The TV prox output lies within [min z, max z]; start one coarse stage
  // over that box, then shrink step by 10x around the incumbent.
  const double lo = z.minCoeff() - 1e-3;
  const double hi = z.maxCoeff() + 1e-3;
  Vector center = Vector::Constant(k, 0.5 * (lo + hi));
  double radius = 0.5 * (hi - lo);

  double step = 2e-2;
  for (;;) {
    const int points = static_cast<int>(std::floor(2.0 * radius / step)) + 1;
    Vector best = center;
    double best_value = objective(center);
    Vector x(k);
    const int j_max = (k >= 2) ? points : 1;
    const int l_max = (k >= 3) ? points : 1;
    for (int i = 0; i < points; ++i) {
      x[0] = center[0] - radius + i * step;
      for (int j = 0; j < j_max; ++j) {
        if (k >= 2) x[1] = center[1] - radius + j * step;
        for (int l = 0; l < l_max; ++l) {
          if (k >= 3) x[2] = center[2] - radius + l * step;
          const double value = objective(x);
          if (value < best_value) {
            best_value = value;
            best = x;
          }
        }
      }
    }
    center = best;
    if (step <= final_step) break;
    radius = 10.0 * step;  // generous window around the incumbent
    step = std::max(final_step, step / 10.0);
  }
  return center;
}

namespace {

// v = u1 + D^T u2 + u3 for the forward-difference D (Dx)_j = x_{j+1} - x_j.
Vector dual_combine(const Vector& u1, const Vector& u2, const Vector& u3) {
  Vector v = u1 + u3;
  const Eigen::Index k = u1.size();
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    // column j of D has -1 at row j... transpose scatter:
    v[j] -= u2[j];
    v[j + 1] += u2[j];
  }
  return v;
}

Vector apply_d(const Vector& x) {
  const Eigen::Index k = x.size();
  Vector dx(k - 1);
  for (Eigen::Index j = 0; j + 1 < k; ++j) dx[j] = x[j + 1] - x[j];
  return dx;
}

void project_box(Vector& u, double bound) {
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], -bound, bound);
}

void project_ball(Vector& u, double radius) {
  const double norm = u.norm();
  if (norm > radius) u *= (norm == 0.0 ? 0.0 : radius / norm);
}

}  // namespace

Vector fsgl_dual_prox(const Vector& z, double l1, double l2, double l3, double gap_tol,
                      int max_iter) {
  const Eigen::Index k = z.size();
  Vector u1 = Vector::Zero(k);
  Vector u2 = Vector::Zero(std::max<Eigen::Index>(k - 1, 0));
  Vector u3 = Vector::Zero(k);
  Vector y1 = u1, y2 = u2, y3 = u3;
  double t_momentum = 1.0;
  const double step = 1.0 / 6.0;  // 1 / (||I||^2 + ||D||^2 + ||I||^2) bound

  Vector x = z;
  double best_gap = std::numeric_limits<double>::infinity();
  Vector best_x = x;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector v = dual_combine(y1, y2, y3);
    x = z - v;
    Vector n1 = y1 + step * x;
    Vector n2 = (k > 1) ? Vector(y2 + step * apply_d(x)) : y2;
    Vector n3 = y3 + step * x;
    project_box(n1, l1);
    project_box(n2, l2);
    project_ball(n3, l3);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    const double momentum = (t_momentum - 1.0) / t_next;
    y1 = n1 + momentum * (n1 - u1);
    y2 = n2 + momentum * (n2 - u2);
    y3 = n3 + momentum * (n3 - u3);
    t_momentum = t_next;
    u1 = n1;
    u2 = n2;
    u3 = n3;

    if (iter % 16 == 0) {
      const Vector vf = dual_combine(u1, u2, u3);
      const Vector xf = z - vf;
      const double primal = fsgl_objective(xf, z, l1, l2, l3);
      const double dual = vf.dot(z) - 0.5 * vf.squaredNorm();
      const double gap = primal - dual;
      if (gap < best_gap) {
        best_gap = gap;
        best_x = xf;
      }
      if (gap <= gap_tol * std::max(1.0, std::abs(primal))) return xf;
      if (gap > 1e3 * best_gap + 1e-6) {
        // Momentum drifted; restart from the best feasible point.
        y1 = u1;
        y2 = u2;
        y3 = u3;
        t_momentum = 1.0;
      }
    }
  }
  return best_x;
}

Matrix lasso_coordinate_descent(const Matrix& X, const Matrix& Y, double lam, double tol,
                                int max_sweeps) {
  const Eigen::Index d = X.cols();
  const Eigen::Index k = Y.cols();
  const Matrix gram = X.transpose() * X;
  const Matrix corr = X.transpose() * Y;
  Matrix w = Matrix::Zero(d, k);
  for (Eigen::Index task = 0; task < k; ++task) {
    Vector wt = Vector::Zero(d);
    Vector gw = Vector::Zero(d);  // gram * wt, maintained incrementally
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      double max_delta = 0.0;
      for (Eigen::Index f = 0; f < d; ++f) {
        const double without = corr(f, task) - (gw[f] - gram(f, f) * wt[f]);
        double updated = 0.0;
        const double threshold = lam / 2.0;
        if (without > threshold) updated = (without - threshold) / gram(f, f);
        else if (without < -threshold) updated = (without + threshold) / gram(f, f);
        const double delta = updated - wt[f];
        if (delta != 0.0) {
          gw += delta * gram.col(f);
          wt[f] = updated;
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      if (max_delta < tol) break;
    }
    w.col(task) = wt;
  }
  return w;
}

Matrix least_squares(const Matrix& X, const Matrix& Y) {
  return X.householderQr().solve(Y);
}

Matrix tgl_stacked_solve(const Matrix& X, const Matrix& Y, double theta1, double theta2) {
  const Eigen::Index d = X.cols();
  const Eigen::Index k = Y.cols();
  const Matrix gram = X.transpose() * X;
  const Matrix h = temporal_h(static_cast<int>(k));
  const Matrix hht = h * h.transpose();

  Matrix system = Matrix::Zero(d * k, d * k);
  for (Eigen::Index j = 0; j < k; ++j) {
    system.block(j * d, j * d, d, d) = gram;
    system.block(j * d, j * d, d, d).diagonal().array() += theta1;
    for (Eigen::Index j2 = 0; j2 < k; ++j2) {
      system.block(j * d, j2 * d, d, d).diagonal().array() += theta2 * hht(j2, j);
    }
  }
  Vector rhs(d * k);
  const Matrix xty = X.transpose() * Y;
  for (Eigen::Index j = 0; j < k; ++j) rhs.segment(j * d, d) = xty.col(j);
  const Vector solution = system.partialPivLu().solve(rhs);
  Matrix w(d, k);
  for (Eigen::Index j = 0; j < k; ++j) w.col(j) = solution.segment(j * d, d);
  return w;
}

Matrix finite_difference_grad(const std::function<double(const Matrix&)>& fn, const Matrix& W,
                              double h) {
  Matrix grad(W.rows(), W.cols());
  Matrix probe = W;
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      probe(i, j) = W(i, j) + h;
      const double up = fn(probe);
      probe(i, j) = W(i, j) - h;
      const double down = fn(probe);
      probe(i, j) = W(i, j);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace stmtl::oracle
