#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/KroneckerProduct>

#include "kronwig/kron_ops.hpp"
#include "kronwig/resolvent_lab.hpp"
#include "kronwig/rng.hpp"
#include "kronwig/wigner.hpp"

using namespace kronwig;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

MatrixXd random_symmetric(int n, Rng& rng) {
  MatrixXd M(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) M(i, j) = rng.normal();
  return 0.5 * (M + M.transpose());
}

ProblemInstance random_instance(int n, std::uint64_t seed, double matrix_scale = 1.0) {
  Rng rng = Rng::stream(seed, 0);
  ProfileSet ps;
  ps.theta = VectorXd::NullaryExpr(n, [&](int) { return 0.3 + rng.uniform01(); });
  ps.xi = VectorXd::NullaryExpr(n, [&](int) { return 0.3 + rng.uniform01(); });
  ps.u = VectorXd::NullaryExpr(n, [&](int) { return rng.normal(); });
  ps.v = VectorXd::NullaryExpr(n, [&](int) { return rng.normal(); });
  MatrixXd A = matrix_scale * random_symmetric(n, rng);
  MatrixXd B = matrix_scale * random_symmetric(n, rng);
  return ProblemInstance::make(std::move(A), std::move(B), std::move(ps));
}

ProblemInstance decoupled_instance(int n, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0);
  ProfileSet ps;
  ps.theta = VectorXd::NullaryExpr(n, [&](int) { return 0.4 + rng.uniform01(); });
  ps.xi = VectorXd::NullaryExpr(n, [&](int) { return 0.4 + rng.uniform01(); });
  ps.u = VectorXd::Ones(n);
  ps.v = VectorXd::Ones(n);
  return ProblemInstance::make(MatrixXd::Zero(n, n), MatrixXd::Zero(n, n), std::move(ps));
}

}  // namespace

TEST_CASE("dense resolvent inverts the shifted operator") {
  const int n = 6;
  const ProblemInstance inst = random_instance(n, 41);
  const Complex z{0.3, 1.0};
  const DenseResolvent res = resolvent_dense(inst, z);
  const MatrixXcd& G = res.full();

  const MatrixXcd Qz = dense_operator_matrix(inst, OperatorMode::shifted_resolvent, z);
  CHECK((Qz * G - MatrixXcd::Identity(n * n, n * n)).norm() <= 1e-10);
  CHECK(res.solve_residual() <= 1e-11);

  // Q is real symmetric, so G is complex symmetric and ||G|| <= 1/Im z.
  CHECK((G - G.transpose()).norm() <= 1e-11 * G.norm());
  CHECK(operator_norm(G) <= 1.0 / z.imag() + 1e-12);

  const Complex m = res.stieltjes();
  CHECK(m == G.trace() / static_cast<double>(n * n));
  CHECK(m.imag() > 0.0);
  CHECK(std::abs(m) <= 1.0 / z.imag() + 1e-12);
}

TEST_CASE("blocks, columns, and entries are consistent views of G") {
  const int n = 5;
  const ProblemInstance inst = random_instance(n, 42);
  const Complex z{-0.2, 0.8};
  const DenseResolvent res = resolvent_dense(inst, z);
  const MatrixXcd& G = res.full();

  for (int i : {0, 2, 4})
    for (int j : {1, 3}) {
      const MatrixXcd blk = res.block_roman(i, j);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          CHECK(std::abs(blk(a, b) - G(i * n + a, j * n + b)) <= 1e-13);
          CHECK(std::abs(res.entry(i, j, a, b) - G(i * n + a, j * n + b)) <= 1e-13);
        }
    }
  for (int a : {0, 3})
    for (int b : {1, 4}) {
      const MatrixXcd blk = res.block_greek(a, b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          CHECK(std::abs(blk(i, j) - G(i * n + a, j * n + b)) <= 1e-13);
    }
  const int j = 2, beta = 3;
  const MatrixXcd col = res.column(j, beta);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      CHECK(std::abs(col(a, i) - G(i * n + a, j * n + beta)) <= 1e-13);
}

TEST_CASE("decoupled case: G is diagonal with entries 1/(theta xi - z)") {
  const int n = 7;
  const ProblemInstance inst = decoupled_instance(n, 43);
  const Complex z{0.1, 0.9};
  const DenseResolvent res = resolvent_dense(inst, z);
  for (int i = 0; i < n; ++i) {
    const MatrixXcd blk = res.block_roman(i, i);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const Complex want =
            a == b ? 1.0 / (inst.profiles.theta(i) * inst.profiles.xi(a) - z) : 0.0;
        CHECK(std::abs(blk(a, b) - want) <= 1e-13);
      }
    for (int j = 0; j < n; ++j)
      if (j != i) CHECK(res.block_roman(i, j).norm() <= 1e-13);
  }
}

TEST_CASE("resolvent identity links two spectral points") {
  const int n = 6;
  const ProblemInstance inst = random_instance(n, 44);
  const Complex z1{0.5, 1.0}, z2{-0.3, 0.7};
  const MatrixXcd G1 = resolvent_dense(inst, z1).full();
  const MatrixXcd G2 = resolvent_dense(inst, z2).full();
  CHECK((G1 - G2 - (z1 - z2) * (G1 * G2)).norm() <= 1e-9 * G1.norm());
}

TEST_CASE("matrix-free column solve matches the dense factorization") {
  const int n = 20;
  const ProblemInstance inst = random_instance(n, 45, 1.0 / std::sqrt(20.0));
  const Complex z{0.2, 1.0};
  const DenseResolvent res = resolvent_dense(inst, z);
  for (auto [j, beta] : {std::pair{0, 0}, std::pair{7, 13}, std::pair{19, 5}}) {
    ColumnSolveInfo info;
    const MatrixXcd col = resolvent_column(inst, z, j, beta, 1e-10, -1, &info);
    CHECK(info.converged);
    CHECK(info.iterations > 0);
    CHECK(info.residual <= 1e-10);
    CHECK((col - res.column(j, beta)).norm() <= 1e-6 * res.column(j, beta).norm());
  }
}

TEST_CASE("dense resolvent validates its inputs") {
  const ProblemInstance inst = random_instance(6, 46);
  CHECK_THROWS_AS(resolvent_dense(inst, Complex{1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(resolvent_dense(inst, Complex{1.0, -0.5}), std::invalid_argument);
  const ProblemInstance big = random_instance(10, 47);
  CHECK_THROWS_AS(resolvent_dense(big, Complex{0.0, 1.0}, 8), std::invalid_argument);
}

TEST_CASE("scalar fixed point hits the closed form") {
  // n = 1, B = 0, theta = 0: M = 1/(-z - M), so at z = i the root with
  // positive imaginary part is i (sqrt 5 - 1)/2.
  const MatrixXd B0 = MatrixXd::Zero(1, 1);
  const VectorXd theta = VectorXd::Zero(1);
  const VectorXd xi = VectorXd::Ones(1);
  const FixedPointSolution sol = fixed_point(B0, theta, xi, Complex{0, 1}, 0.5, 1e-14);
  CHECK(sol.converged);
  const Complex want{0.0, (std::sqrt(5.0) - 1.0) / 2.0};
  CHECK(std::abs(sol.M(0, 0) - want) <= 1e-12);
  CHECK(sol.residual <= 1e-12);
  CHECK(sol.im_min_eigenvalue > 0.0);
}

TEST_CASE("fixed point: residual is honest and starts do not matter") {
  const int n = 20;
  Rng rng = Rng::stream(48, 0);
  const MatrixXd B = random_symmetric(n, rng) / std::sqrt(static_cast<double>(n));
  const VectorXd theta = VectorXd::NullaryExpr(n, [&](int) { return 0.3 + rng.uniform01(); });
  const VectorXd xi = VectorXd::NullaryExpr(n, [&](int) { return 0.3 + rng.uniform01(); });
  const Complex z{0.4, 0.9};

  const FixedPointSolution sol = fixed_point(B, theta, xi, z, 0.5, 1e-12);
  CHECK(sol.converged);
  CHECK(sol.iterations > 0);
  CHECK(sol.im_min_eigenvalue >= -1e-12);

  // Re-evaluate the map independently: F(M) = n^{-1} sum_i (B + theta_i Xi - z - M)^{-1}.
  MatrixXcd F = MatrixXcd::Zero(n, n);
  const MatrixXcd Bc = B.cast<Complex>();
  for (int i = 0; i < n; ++i) {
    MatrixXcd T = Bc - sol.M;
    T.diagonal().array() += -z;
    T.diagonal() += (theta(i) * xi).cast<Complex>();
    F += T.inverse();
  }
  F /= static_cast<double>(n);
  CHECK(operator_norm(sol.M - F) == doctest::Approx(sol.residual).epsilon(1e-6));
  CHECK(sol.residual <= 1e-12);

  // A different admissible start converges to the same solution.
  const MatrixXcd M0 = Complex(0, 1) * MatrixXcd::Identity(n, n);
  const FixedPointSolution sol2 = fixed_point(B, theta, xi, z, 0.5, 1e-12, 2000, M0);
  CHECK(sol2.converged);
  CHECK((sol.M - sol2.M).norm() <= 1e-10);
}

TEST_CASE("entry scaling scan: class ordering and slope signs") {
  const ScanResult scan = entry_scaling_scan({24, 48}, Complex{0, 1}, 2, 7);
  REQUIRE(scan.rows.size() == 2);
  for (const auto& row : scan.rows) {
    CHECK(row.diag_median > row.semi_median);
    CHECK(row.semi_median > row.off_median);
    CHECK(row.off_median > 0.0);
  }
  CHECK(std::abs(scan.slope_diag) <= 0.35);
  CHECK(scan.slope_semi <= -0.15);
  CHECK(scan.slope_semi >= -0.95);
  CHECK(scan.slope_off <= -0.6);
  CHECK(scan.slope_off >= -1.45);
}

TEST_CASE("block identity is exact in the decoupled case") {
  const int n = 8;
  const ProblemInstance inst = decoupled_instance(n, 49);
  const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 5}, {3, 7}};
  const BlockIdentityReport rep = block_identity_check(inst, Complex{0, 1}, pairs);
  CHECK(rep.excluded == 0);
  REQUIRE(rep.roman.size() == pairs.size());
  REQUIRE(rep.greek.size() == pairs.size());
  for (const auto& row : rep.roman) {
    CHECK(row.identity_residual <= 1e-11);
    CHECK(row.offdiag_norm <= 1e-12);
  }
  for (const auto& row : rep.greek) {
    CHECK(row.identity_residual <= 1e-11);
    CHECK(row.offdiag_norm <= 1e-12);
  }
}

TEST_CASE("block identity defect stays small for coupled instances") {
  const int n = 48;
  const ProblemInstance inst = random_instance(n, 50, 1.0 / std::sqrt(48.0));
  const std::vector<std::pair<int, int>> pairs = {{0, 24}, {11, 37}};
  const BlockIdentityReport rep = block_identity_check(inst, Complex{0, 1}, pairs);
  CHECK(rep.excluded == 0);
  for (const auto& row : rep.roman) {
    CHECK(std::isfinite(row.identity_residual));
    CHECK(row.identity_residual < 1.5);
    CHECK(row.offdiag_norm > 0.0);
  }
}

TEST_CASE("stieltjes comparison: exact spectral route for constant profiles") {
  // A = B = 0 with Theta = Xi = I collapses Q to the identity: m(z) = 1/(1-z).
  const int n = 40;
  ProfileSet ps;
  ps.theta = VectorXd::Ones(n);
  ps.xi = VectorXd::Ones(n);
  ps.u = VectorXd::Ones(n);
  ps.v = VectorXd::Ones(n);
  const ProblemInstance inst =
      ProblemInstance::make(MatrixXd::Zero(n, n), MatrixXd::Zero(n, n), ps);
  const Complex z{0, 1};
  const StieltjesComparison cmp = stieltjes_compare(inst, z);
  CHECK(cmp.spectral_path);
  CHECK(std::abs(cmp.m - 1.0 / (1.0 - z)) <= 1e-12);
  // The trace surrogates carry a self-energy term, so they stay in the upper
  // half plane but need not coincide with m for degenerate (zero) matrices.
  CHECK(cmp.trace_mb.imag() > 0.0);
  CHECK(cmp.trace_ma.imag() > 0.0);
  CHECK(std::isfinite(cmp.deviation_b));
  CHECK(std::isfinite(cmp.deviation_a));
}

TEST_CASE("stieltjes comparison: dense route matches the factorization") {
  const int n = 16;
  const ProblemInstance inst = random_instance(n, 51, 1.0 / 4.0);
  const Complex z{0.1, 1.0};
  const StieltjesComparison cmp = stieltjes_compare(inst, z);
  CHECK_FALSE(cmp.spectral_path);
  const Complex want = resolvent_dense(inst, z).stieltjes();
  CHECK(std::abs(cmp.m - want) <= 1e-12);
  CHECK(cmp.iterations_b > 0);
  CHECK(cmp.iterations_a > 0);
  CHECK(cmp.deviation_b == doctest::Approx(std::abs(cmp.m - cmp.trace_mb)).epsilon(1e-12));
  CHECK(cmp.deviation_a == doctest::Approx(std::abs(cmp.m - cmp.trace_ma)).epsilon(1e-12));
}

TEST_CASE("resolvent summary: counts, quantiles, and bounds") {
  const int n = 12;
  const ProblemInstance inst = random_instance(n, 52, 1.0 / std::sqrt(12.0));
  const Complex z{0, 1};
  const ResolventSummary sum = resolvent_summary(inst, z);
  CHECK(sum.n == n);
  CHECK(sum.z == z);
  CHECK(sum.stieltjes.imag() > 0.0);

  const std::size_t N = static_cast<std::size_t>(n);
  CHECK(sum.diag.count == N * N);
  CHECK(sum.semi.count == 2 * N * N * (N - 1));
  CHECK(sum.off.count == N * N * (N - 1) * (N - 1));

  for (const EntryClassStats* cls : {&sum.diag, &sum.semi, &sum.off}) {
    CHECK(cls->min <= cls->q25);
    CHECK(cls->q25 <= cls->median);
    CHECK(cls->median <= cls->q75);
    CHECK(cls->q75 <= cls->max);
    CHECK(cls->min >= 0.0);
  }
  CHECK(sum.diag.median > sum.off.median);

  CHECK_FALSE(sum.block_norms.empty());
  for (double bn : sum.block_norms) {
    CHECK(bn >= 0.0);
    CHECK(bn <= 1.0 / z.imag() + 1e-12);
  }
  REQUIRE_FALSE(sum.bilinear_samples.empty());
  for (const Complex& s : sum.bilinear_samples) CHECK(std::isfinite(std::abs(s)));
}
