#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "kronwig/kron_ops.hpp"

namespace kronwig {

using Complex = std::complex<double>;

// Quantile summary of |G| entries within one index class.
struct EntryClassStats {
  std::size_t count = 0;
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

// Snapshot of resolvent structure at one (instance, z).
struct ResolventSummary {
  Complex z;
  int n = 0;
  Complex stieltjes;                     // n^{-2} Tr G(z)
  EntryClassStats diag, semi, off;       // classes: i=j&a=b, exactly one equal, neither
  std::vector<double> block_norms;       // sampled ||G_ij||_op, i != j
  std::vector<Complex> bilinear_samples; // (u(x)v)^* [G - blockdiag(M_i)] (u'(x)v')
};

// Dyson-type fixed point M = n^{-1} sum_i (B + theta_i Xi - z - M)^{-1}.
struct FixedPointSolution {
  Eigen::MatrixXcd M;
  double residual = 0;     // operator norm of M - F(M), re-evaluated at return
  int iterations = 0;
  Complex z;
  bool converged = false;
  double im_min_eigenvalue = 0;  // smallest eigenvalue of (M - M^*)/(2i)
};

// Factorization-backed access to G(z) = (Q - z)^{-1} at moderate n.  The
// shifted operator is assembled blockwise (block (i,j) = A_ij I + delta_ij (B
// + theta_i Xi) - z delta) and LU-factored once; blocks and columns are
// solved on demand and cached, the full n^2 x n^2 inverse only on request.
// Holds a reference to the instance; the instance must outlive this object.
class DenseResolvent {
 public:
  DenseResolvent(const ProblemInstance& instance, Complex z, int cap = kDefaultDenseCap);

  int n() const { return n_; }
  Complex z() const { return z_; }

  // Roman block (i,j): n x n matrix over (alpha, beta) of G_{ij,alpha beta}.
  Eigen::MatrixXcd block_roman(int i, int j) const;
  // Greek block (alpha, beta): n x n matrix over (i, j).
  Eigen::MatrixXcd block_greek(int alpha, int beta) const;
  // Single entry G_{ij,alpha beta}.
  Complex entry(int i, int j, int alpha, int beta) const;
  // Flat column (j, beta) of G reshaped to a matrix: (alpha', i') entry is
  // G_{i'j, alpha' beta}.
  Eigen::MatrixXcd column(int j, int beta) const;
  // Full G; materialized lazily, cached.
  const Eigen::MatrixXcd& full() const;
  Complex stieltjes() const;             // materializes the diagonal via full()
  double solve_residual() const;         // ||(Q - z) G e - e||_F spot check

  static constexpr int kDefaultDenseCap = 64;

 private:
  // Solves the n rhs columns {(j, beta) : beta} resp. {(j, beta) : j}.
  const Eigen::MatrixXcd& roman_columns(int j) const;
  const Eigen::MatrixXcd& greek_columns(int beta) const;

  const ProblemInstance* inst_;
  int n_;
  Complex z_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  mutable std::map<int, Eigen::MatrixXcd> roman_cache_, greek_cache_;
  mutable Eigen::MatrixXcd G_;
  mutable bool full_built_ = false;
};

// Validates Im z > 0 and the dense cap, then factors.
DenseResolvent resolvent_dense(const ProblemInstance& instance, Complex z,
                               int cap = DenseResolvent::kDefaultDenseCap);

struct ColumnSolveInfo {
  int iterations = 0;
  double residual = 0;  // relative Frobenius residual of the normal equations
  bool converged = false;
};

// Matrix-free column (j, beta) of G(z) at any n: conjugate gradient on the
// normal equations (Q - conj(z))(Q - z) x = (Q - conj(z)) e_{(j,beta)}, the
// operator applied as 4 real GEMMs per product.  Returns the column reshaped
// as in DenseResolvent::column.
Eigen::MatrixXcd resolvent_column(const ProblemInstance& instance, Complex z, int j, int beta,
                                  double tol = 1e-8, int max_iter = -1,
                                  ColumnSolveInfo* info = nullptr);

// Damped Picard iteration M <- (1-gamma) M + gamma n^{-1} sum_i (B + theta_i
// Xi - z - M)^{-1} from M0 (zero when absent); identical theta values are
// grouped so the commutative case costs one inverse per sweep.  Stops when
// the Frobenius residual (an operator-norm bound) drops below tol.
FixedPointSolution fixed_point(const Eigen::MatrixXd& B, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& xi, Complex z, double damping = 0.5,
                               double tol = 1e-10, int max_iter = 2000,
                               const std::optional<Eigen::MatrixXcd>& M0 = std::nullopt);

// Per-class medians of |G| entries across replicates and probe columns at
// each n, with least-squares log-log slopes; classes expected near slopes
// {0, -1/2, -1}.  Instances: GOE A,B and Uniform(-1,1) profiles per replicate.
struct ScanResult {
  struct Row {
    int n = 0;
    double diag_median = 0, semi_median = 0, off_median = 0;
  };
  std::vector<Row> rows;
  double slope_diag = 0, slope_semi = 0, slope_off = 0;
};

ScanResult entry_scaling_scan(const std::vector<int>& ns, Complex z, int replicates,
                              std::uint64_t seed, int columns_per_replicate = 3);

// Residuals of the diagonal-block identity G_ii^{-1} - G_jj^{-1} = (theta_i -
// theta_j) Xi (Roman) and its Greek mirror with (xi_a - xi_b) Theta, plus the
// off-diagonal block norms; numerically singular diagonal blocks are excluded
// with a count.
struct BlockIdentityReport {
  struct Row {
    int first = 0, second = 0;
    double identity_residual = 0;  // operator norm of the defect
    double offdiag_norm = 0;       // ||G_{first,second}||_op
  };
  std::vector<Row> roman, greek;
  int excluded = 0;
};

BlockIdentityReport block_identity_check(const ProblemInstance& instance, Complex z,
                                         const std::vector<std::pair<int, int>>& pairs);

// m(z) against the two fixed-point trace surrogates.  Commutative profiles
// take the exact spectral route (any n); otherwise the dense path within cap.
struct StieltjesComparison {
  Complex m, trace_mb, trace_ma;
  double deviation_b = 0, deviation_a = 0;
  int iterations_b = 0, iterations_a = 0;
  bool spectral_path = false;
};

StieltjesComparison stieltjes_compare(const ProblemInstance& instance, Complex z,
                                      int cap = DenseResolvent::kDefaultDenseCap);

// Full-structure snapshot (entry-class quantiles, sampled block norms, one
// bilinear deviation sample) — intended for small n.
ResolventSummary resolvent_summary(const ProblemInstance& instance, Complex z, int cap = 32);

// Largest singular value.
double operator_norm(const Eigen::MatrixXcd& M);

}  // namespace kronwig
