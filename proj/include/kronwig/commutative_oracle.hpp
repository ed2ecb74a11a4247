#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <utility>

#include "kronwig/wigner.hpp"

namespace kronwig {

// Eigendecompositions A = U_a diag(lambda) U_a^T, B = U_b diag(mu) U_b^T
// backing exact resolvent/P evaluation for commutative regularizers
// Theta = Xi = eta I.  Immutable after construction.
struct SpectralPair {
  Eigen::VectorXd eigvals_a, eigvals_b;
  Eigen::MatrixXd eigvecs_a, eigvecs_b;
  int n() const { return static_cast<int>(eigvals_a.size()); }
};

// Symmetric eigensolve of both matrices; inputs must be square, equal size,
// and symmetric.
SpectralPair make_spectral_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// (A(x)I + I(x)B - z)^{-1} vec(W): two n x n basis changes plus an entrywise
// divide by (lambda_j + mu_alpha - z); O(n^3), never forms the n^2 x n^2
// operator.  Throws when z lies within 1e-12 of an eigenvalue sum.
Eigen::MatrixXcd spectral_resolvent_apply(const SpectralPair& pair, std::complex<double> z,
                                          const Eigen::MatrixXcd& W);

// [(A(x)I + I(x)B)^2 + eta^2]^{-1} vec(W) via entrywise factors
// 1/((lambda_j + mu_alpha)^2 + eta^2); requires eta > 0.
Eigen::MatrixXd spectral_p_apply(const SpectralPair& pair, double eta, const Eigen::MatrixXd& W);

// Exact Stieltjes transform of A(x)I + I(x)B + shift at z:
//   n^{-2} sum_{j,alpha} (lambda_j + mu_alpha + shift - z)^{-1}.
std::complex<double> spectral_stieltjes(const SpectralPair& pair, double shift,
                                        std::complex<double> z);

// Detects constant profiles theta = c, xi = c' (within atol); the commutative
// case where Theta(x)Xi collapses to the scalar shift c*c'.
std::optional<std::pair<double, double>> commutative_scalars(const ProfileSet& ps,
                                                             double atol = 0.0);

}  // namespace kronwig
