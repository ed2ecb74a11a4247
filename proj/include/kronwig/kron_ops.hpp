#pragma once

#include <Eigen/Dense>
#include <complex>

#include "kronwig/wigner.hpp"

namespace kronwig {

// Symmetric A, B plus profiles; the operators below act on n x n matrices X
// whose column-stacked vector form x = vec(X) satisfies
//   (A (x) I + I (x) B) x = vec(XA + BX),   (Theta (x) Xi) x = vec(Xi X Theta),
// so the row index of X pairs with (xi, v) and the column index with (theta, u).
struct ProblemInstance {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  ProfileSet profiles;
  int n = 0;

  static ProblemInstance make(Eigen::MatrixXd A, Eigen::MatrixXd B, ProfileSet profiles);
};

enum class OperatorMode { sylvester, quadratic, shifted_resolvent };

// Read-only view selecting one of the three operator actions on vec(X):
//   sylvester          A(x)I + I(x)B
//   quadratic          (A(x)I + I(x)B)^2 + Theta(x)Xi
//   shifted_resolvent  A(x)I + I(x)B + Theta(x)Xi - z
struct KronOperatorHandle {
  const ProblemInstance* instance = nullptr;
  OperatorMode mode = OperatorMode::sylvester;
  std::complex<double> z{0.0, 0.0};
};

// X A + B X.
Eigen::MatrixXd apply_sylvester(const ProblemInstance& inst, const Eigen::MatrixXd& X);

// (XA + BX)A + B(XA + BX) + diag(xi) X diag(theta)  ==  P^{-1} vec(X).
Eigen::MatrixXd apply_quadratic(const ProblemInstance& inst, const Eigen::MatrixXd& X);

// X A + B X + diag(xi) X diag(theta) - z X, complex X (resolvent experiments).
Eigen::MatrixXcd apply_shifted(const ProblemInstance& inst, const Eigen::MatrixXcd& X,
                               std::complex<double> z);

struct PSolveInfo {
  int iterations = 0;
  double residual = 0.0;  // relative Frobenius residual
  bool converged = false;
};

// Solves P^{-1} W = rhs by conjugate gradient with a Jacobi preconditioner
// built from Theta (x) Xi.  The operator is SPD with smallest eigenvalue
// >= min_i,a theta_i xi_a under the positivity hypothesis.
// max_iter < 0 selects the default 10*n.
Eigen::MatrixXd solve_p(const ProblemInstance& inst, const Eigen::MatrixXd& rhs,
                        double tol = 1e-10, int max_iter = -1, PSolveInfo* info = nullptr);

struct SolveResult {
  Eigen::MatrixXd X_hat;
  double objective = 0.0;        // f(X_hat)
  int cg_iterations = 0;
  double cg_residual = 0.0;
  double constraint_value = 0.0; // n^{-1} v^T X_hat u, recomputed from X_hat
  double quadratic_form = 0.0;   // q = n^{-2} (u(x)v)^T P (u(x)v) = 1/(2 f(X_hat))
};

// Constrained minimizer of f(X) = 1/2 ||XA + BX||_F^2 + 1/2 sum xi_i theta_j X_ij^2
// subject to n^{-1} v^T X u = 1:
//   X_hat = n^{-1} P(u(x)v) / (n^{-2} (u(x)v)^T P (u(x)v)),  f(X_hat) = 1/(2q).
SolveResult solve_instance(const ProblemInstance& inst, double tol = 1e-10, int max_iter = -1);

double objective_eval(const ProblemInstance& inst, const Eigen::MatrixXd& X);

// Dense n^2 x n^2 assembly of the selected operator; test oracle only.
// Throws when n exceeds `cap` (default 32): large instances stay matrix-free.
Eigen::MatrixXcd dense_operator_matrix(const ProblemInstance& inst, OperatorMode mode,
                                       std::complex<double> z = {0.0, 0.0}, int cap = 32);

}  // namespace kronwig
