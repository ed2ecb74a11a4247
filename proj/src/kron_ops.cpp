#include "kronwig/kron_ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kronwig {

ProblemInstance ProblemInstance::make(Eigen::MatrixXd A, Eigen::MatrixXd B, ProfileSet profiles) {
  const int n = profiles.n();
  if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != n)
    throw std::invalid_argument("ProblemInstance: A, B must be n x n with the profiles' n");
  if (!A.isApprox(A.transpose(), 1e-12) || !B.isApprox(B.transpose(), 1e-12))
    throw std::invalid_argument("ProblemInstance: A, B must be symmetric");
  return ProblemInstance{std::move(A), std::move(B), std::move(profiles), n};
}

namespace {

void check_dims(const ProblemInstance& inst, Eigen::Index rows, Eigen::Index cols,
                const char* who) {
  if (rows != inst.n || cols != inst.n)
    throw std::invalid_argument(std::string(who) + ": X must be n x n");
}

}  // namespace

Eigen::MatrixXd apply_sylvester(const ProblemInstance& inst, const Eigen::MatrixXd& X) {
  check_dims(inst, X.rows(), X.cols(), "apply_sylvester");
  return X * inst.A + inst.B * X;
}

Eigen::MatrixXd apply_quadratic(const ProblemInstance& inst, const Eigen::MatrixXd& X) {
  check_dims(inst, X.rows(), X.cols(), "apply_quadratic");
  const int n = inst.n;
  Eigen::MatrixXd Y = X * inst.A + inst.B * X;
  Eigen::MatrixXd R = Y * inst.A + inst.B * Y;
  const auto& th = inst.profiles.theta;
  const auto& xi = inst.profiles.xi;
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a) R(a, j) += xi(a) * th(j) * X(a, j);
  return R;
}

Eigen::MatrixXcd apply_shifted(const ProblemInstance& inst, const Eigen::MatrixXcd& X,
                               std::complex<double> z) {
  check_dims(inst, X.rows(), X.cols(), "apply_shifted");
  const int n = inst.n;
  // Split into real GEMMs: complex-by-real products are 2 real products each.
  const Eigen::MatrixXd Xr = X.real();
  const Eigen::MatrixXd Xi = X.imag();
  Eigen::MatrixXcd R(n, n);
  R.real() = Xr * inst.A + inst.B * Xr;
  R.imag() = Xi * inst.A + inst.B * Xi;
  const auto& th = inst.profiles.theta;
  const auto& xi = inst.profiles.xi;
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a) R(a, j) += (xi(a) * th(j) - z) * X(a, j);
  return R;
}

Eigen::MatrixXd solve_p(const ProblemInstance& inst, const Eigen::MatrixXd& rhs, double tol,
                        int max_iter, PSolveInfo* info) {
  check_dims(inst, rhs.rows(), rhs.cols(), "solve_p");
  const int n = inst.n;
  if (inst.profiles.theta.minCoeff() <= 0.0 || inst.profiles.xi.minCoeff() <= 0.0)
    throw std::invalid_argument("solve_p: theta, xi must be positive (SPD regularizer)");
  if (max_iter < 0) max_iter = 10 * n;

  // Jacobi preconditioner from the Theta (x) Xi part: divide by xi_i theta_j.
  const Eigen::ArrayXXd D = inst.profiles.xi.array().replicate(1, n) *
                            inst.profiles.theta.transpose().array().replicate(n, 1);

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd R = rhs;
  Eigen::MatrixXd Z = (R.array() / D).matrix();
  Eigen::MatrixXd P = Z;
  double rz = (R.array() * Z.array()).sum();
  const double nb = rhs.norm();
  if (nb == 0.0) {
    if (info) *info = {0, 0.0, true};
    return X;
  }
  int it = 0;
  double rnorm = R.norm();
  while (rnorm > tol * nb && it < max_iter) {
    Eigen::MatrixXd Ap = apply_quadratic(inst, P);
    const double pAp = (P.array() * Ap.array()).sum();
    const double alpha = rz / pAp;
    X += alpha * P;
    R -= alpha * Ap;
    Z = (R.array() / D).matrix();
    const double rz2 = (R.array() * Z.array()).sum();
    P = Z + (rz2 / rz) * P;
    rz = rz2;
    rnorm = R.norm();
    ++it;
  }
  if (info) *info = {it, rnorm / nb, rnorm <= tol * nb};
  if (rnorm > tol * nb && !info)
    throw std::runtime_error("solve_p: CG did not converge in " + std::to_string(max_iter) +
                             " iterations (relative residual " + std::to_string(rnorm / nb) + ")");
  return X;
}

SolveResult solve_instance(const ProblemInstance& inst, double tol, int max_iter) {
  const int n = inst.n;
  const Eigen::VectorXd& u = inst.profiles.u;
  const Eigen::VectorXd& v = inst.profiles.v;
  if (u.norm() == 0.0 || v.norm() == 0.0)
    throw std::invalid_argument("solve_instance: u, v must be nonzero");
  // vec(v u^T) = u (x) v.
  const Eigen::MatrixXd rhs = v * u.transpose();
  PSolveInfo info;
  Eigen::MatrixXd W = solve_p(inst, rhs, tol, max_iter, &info);
  if (!info.converged)
    throw std::runtime_error("solve_instance: CG did not converge (relative residual " +
                             std::to_string(info.residual) + ")");
  const double q = (rhs.array() * W.array()).sum() / (static_cast<double>(n) * n);
  if (!(q > 0.0))
    throw std::runtime_error("solve_instance: quadratic form nonpositive (ill-conditioned)");
  SolveResult res;
  res.X_hat = W / (static_cast<double>(n) * q);
  res.objective = 0.5 / q;
  res.cg_iterations = info.iterations;
  res.cg_residual = info.residual;
  res.constraint_value = v.dot(res.X_hat * u) / n;
  res.quadratic_form = q;
  return res;
}

double objective_eval(const ProblemInstance& inst, const Eigen::MatrixXd& X) {
  check_dims(inst, X.rows(), X.cols(), "objective_eval");
  const double syl = (X * inst.A + inst.B * X).squaredNorm();
  double reg = 0.0;
  for (int j = 0; j < inst.n; ++j)
    for (int a = 0; a < inst.n; ++a)
      reg += inst.profiles.xi(a) * inst.profiles.theta(j) * X(a, j) * X(a, j);
  return 0.5 * syl + 0.5 * reg;
}

Eigen::MatrixXcd dense_operator_matrix(const ProblemInstance& inst, OperatorMode mode,
                                       std::complex<double> z, int cap) {
  const int n = inst.n;
  if (n > cap)
    throw std::invalid_argument("dense_operator_matrix: n exceeds dense cap " +
                                std::to_string(cap));
  const int N = n * n;
  Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(N, N);
  // vec index of X_{alpha j} is j*n + alpha (column stacking).
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Q.block(i * n, j * n, n, n) += inst.A(i, j) * Eigen::MatrixXcd::Identity(n, n);
      if (i == j) {
        Q.block(i * n, j * n, n, n) += inst.B.cast<std::complex<double>>();
        for (int a = 0; a < n; ++a)
          Q(i * n + a, j * n + a) += inst.profiles.theta(i) * inst.profiles.xi(a);
      }
    }
  if (mode == OperatorMode::sylvester || mode == OperatorMode::quadratic) {
    // Remove the Theta (x) Xi part, square if needed, re-add for quadratic.
    Eigen::MatrixXcd S = Q;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) S(i * n + a, i * n + a) -= inst.profiles.theta(i) * inst.profiles.xi(a);
    if (mode == OperatorMode::sylvester) return S;
    Eigen::MatrixXcd P = S * S;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) P(i * n + a, i * n + a) += inst.profiles.theta(i) * inst.profiles.xi(a);
    return P;
  }
  Q -= z * Eigen::MatrixXcd::Identity(N, N);
  return Q;
}

}  // namespace kronwig
