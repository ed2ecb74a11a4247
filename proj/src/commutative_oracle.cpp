#include "kronwig/commutative_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace kronwig {

namespace {

void check_symmetric(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols()) throw std::invalid_argument(std::string(name) + " must be square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string(name) + " must be symmetric");
}

}  // namespace

SpectralPair make_spectral_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  check_symmetric(A, "A");
  check_symmetric(B, "B");
  if (A.rows() != B.rows()) throw std::invalid_argument("A and B must have equal dimension");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(A), eb(B);
  if (ea.info() != Eigen::Success || eb.info() != Eigen::Success)
    throw std::runtime_error("make_spectral_pair: eigensolver failed");
  return {ea.eigenvalues(), eb.eigenvalues(), ea.eigenvectors(), eb.eigenvectors()};
}

Eigen::MatrixXcd spectral_resolvent_apply(const SpectralPair& pair, std::complex<double> z,
                                          const Eigen::MatrixXcd& W) {
  const int n = pair.n();
  if (W.rows() != n || W.cols() != n)
    throw std::invalid_argument("spectral_resolvent_apply: dimension mismatch");
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a)
      if (std::abs(pair.eigvals_a(j) + pair.eigvals_b(a) - z) < 1e-12)
        throw std::domain_error("spectral_resolvent_apply: z within 1e-12 of an eigenvalue sum");
  // Columns of X carry the A side (Roman), rows the B side (Greek):
  // vec-consistent transform Wt = U_b^T W U_a, divide by (lambda_j + mu_a - z).
  const Eigen::MatrixXd Wr = pair.eigvecs_b.transpose() * W.real() * pair.eigvecs_a;
  const Eigen::MatrixXd Wi = pair.eigvecs_b.transpose() * W.imag() * pair.eigvecs_a;
  Eigen::MatrixXcd Xt(n, n);
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a)
      Xt(a, j) = std::complex<double>(Wr(a, j), Wi(a, j)) /
                 (pair.eigvals_a(j) + pair.eigvals_b(a) - z);
  Eigen::MatrixXcd out(n, n);
  out.real() = pair.eigvecs_b * Xt.real() * pair.eigvecs_a.transpose();
  out.imag() = pair.eigvecs_b * Xt.imag() * pair.eigvecs_a.transpose();
  return out;
}

Eigen::MatrixXd spectral_p_apply(const SpectralPair& pair, double eta, const Eigen::MatrixXd& W) {
  if (!(eta > 0.0)) throw std::invalid_argument("spectral_p_apply: eta must be > 0");
  const int n = pair.n();
  if (W.rows() != n || W.cols() != n)
    throw std::invalid_argument("spectral_p_apply: dimension mismatch");
  Eigen::MatrixXd Wt = pair.eigvecs_b.transpose() * W * pair.eigvecs_a;
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a) {
      const double s = pair.eigvals_a(j) + pair.eigvals_b(a);
      Wt(a, j) /= s * s + eta * eta;
    }
  return pair.eigvecs_b * Wt * pair.eigvecs_a.transpose();
}

std::complex<double> spectral_stieltjes(const SpectralPair& pair, double shift,
                                        std::complex<double> z) {
  const int n = pair.n();
  std::complex<double> acc(0.0, 0.0);
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a)
      acc += 1.0 / (pair.eigvals_a(j) + pair.eigvals_b(a) + shift - z);
  return acc / (static_cast<double>(n) * n);
}

std::optional<std::pair<double, double>> commutative_scalars(const ProfileSet& ps, double atol) {
  const int n = ps.n();
  if (n == 0) return std::nullopt;
  const double c = ps.theta(0), cp = ps.xi(0);
  for (int i = 0; i < n; ++i)
    if (std::abs(ps.theta(i) - c) > atol || std::abs(ps.xi(i) - cp) > atol) return std::nullopt;
  return std::make_pair(c, cp);
}

}  // namespace kronwig
