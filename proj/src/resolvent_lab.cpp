#include "kronwig/resolvent_lab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kronwig/commutative_oracle.hpp"
#include "kronwig/rng.hpp"
#include "kronwig/wigner.hpp"

namespace kronwig {

double operator_norm(const Eigen::MatrixXcd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(M).singularValues()(0);
}

namespace {

// Q applied to a complex matrix: X A + B X + (xi_a theta_j) entrywise.
Eigen::MatrixXcd q_apply(const ProblemInstance& inst, const Eigen::MatrixXcd& X) {
  return apply_shifted(inst, X, Complex(0.0, 0.0));
}

double median_of(std::vector<double>& v) {
  if (v.empty()) throw std::logic_error("median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
  }
  return hi;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

DenseResolvent::DenseResolvent(const ProblemInstance& instance, Complex z, int cap)
    : inst_(&instance), n_(instance.n), z_(z) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("DenseResolvent: Im z must be > 0");
  if (n_ > cap)
    throw std::invalid_argument(
        "DenseResolvent: n exceeds the dense cap; use the commutative spectral path or the "
        "matrix-free column solver");
  lu_.compute(dense_operator_matrix(instance, OperatorMode::shifted_resolvent, z, cap));
}

const Eigen::MatrixXcd& DenseResolvent::roman_columns(int j) const {
  auto it = roman_cache_.find(j);
  if (it != roman_cache_.end()) return it->second;
  const long N = static_cast<long>(n_) * n_;
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(N, n_);
  for (int b = 0; b < n_; ++b) rhs(static_cast<long>(j) * n_ + b, b) = 1.0;
  return roman_cache_.emplace(j, lu_.solve(rhs)).first->second;
}

const Eigen::MatrixXcd& DenseResolvent::greek_columns(int beta) const {
  auto it = greek_cache_.find(beta);
  if (it != greek_cache_.end()) return it->second;
  const long N = static_cast<long>(n_) * n_;
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(N, n_);
  for (int j = 0; j < n_; ++j) rhs(static_cast<long>(j) * n_ + beta, j) = 1.0;
  return greek_cache_.emplace(beta, lu_.solve(rhs)).first->second;
}

Eigen::MatrixXcd DenseResolvent::block_roman(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_)
    throw std::out_of_range("block_roman: index out of range");
  if (full_built_) return G_.block(static_cast<long>(i) * n_, static_cast<long>(j) * n_, n_, n_);
  return roman_columns(j).middleRows(static_cast<long>(i) * n_, n_);
}

Eigen::MatrixXcd DenseResolvent::block_greek(int alpha, int beta) const {
  if (alpha < 0 || beta < 0 || alpha >= n_ || beta >= n_)
    throw std::out_of_range("block_greek: index out of range");
  Eigen::MatrixXcd out(n_, n_);
  if (full_built_) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        out(i, j) = G_(static_cast<long>(i) * n_ + alpha, static_cast<long>(j) * n_ + beta);
    return out;
  }
  const Eigen::MatrixXcd& cols = greek_columns(beta);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = cols(static_cast<long>(i) * n_ + alpha, j);
  return out;
}

Complex DenseResolvent::entry(int i, int j, int alpha, int beta) const {
  if (full_built_)
    return G_(static_cast<long>(i) * n_ + alpha, static_cast<long>(j) * n_ + beta);
  return roman_columns(j)(static_cast<long>(i) * n_ + alpha, beta);
}

Eigen::MatrixXcd DenseResolvent::column(int j, int beta) const {
  if (j < 0 || beta < 0 || j >= n_ || beta >= n_)
    throw std::out_of_range("column: index out of range");
  Eigen::VectorXcd col;
  if (full_built_)
    col = G_.col(static_cast<long>(j) * n_ + beta);
  else
    col = roman_columns(j).col(beta);
  return Eigen::Map<const Eigen::MatrixXcd>(col.data(), n_, n_);
}

const Eigen::MatrixXcd& DenseResolvent::full() const {
  if (!full_built_) {
    G_ = lu_.inverse();
    full_built_ = true;
    roman_cache_.clear();
    greek_cache_.clear();
  }
  return G_;
}

Complex DenseResolvent::stieltjes() const {
  return full().trace() / (static_cast<double>(n_) * n_);
}

double DenseResolvent::solve_residual() const {
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n_, n_);
  E(0, 0) = 1.0;  // flat column (j, beta) = (0, 0)
  const Eigen::MatrixXcd X = column(0, 0);
  return (apply_shifted(*inst_, X, z_) - E).norm();
}

DenseResolvent resolvent_dense(const ProblemInstance& instance, Complex z, int cap) {
  return DenseResolvent(instance, z, cap);
}

Eigen::MatrixXcd resolvent_column(const ProblemInstance& instance, Complex z, int j, int beta,
                                  double tol, int max_iter, ColumnSolveInfo* info) {
  const int n = instance.n;
  if (!(z.imag() > 0.0)) throw std::invalid_argument("resolvent_column: Im z must be > 0");
  if (j < 0 || beta < 0 || j >= n || beta >= n)
    throw std::out_of_range("resolvent_column: index out of range");
  if (max_iter < 0) max_iter = 10 * n + 200;
  const double re2 = 2.0 * z.real();
  const double zsq = std::norm(z);
  // Normal operator N = (Q - conj z)(Q - z) = Q^2 - 2 Re(z) Q + |z|^2, a
  // Hermitian positive definite map on matrices.
  auto n_apply = [&](const Eigen::MatrixXcd& X) {
    const Eigen::MatrixXcd Y = q_apply(instance, X);
    return (q_apply(instance, Y) - re2 * Y + zsq * X).eval();
  };
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, n);
  E(beta, j) = 1.0;
  const Eigen::MatrixXcd rhs = q_apply(instance, E) - std::conj(z) * E;
  const double rhs_norm = rhs.norm();

  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd R = rhs, P = rhs;
  double rz = R.squaredNorm();
  int it = 0;
  bool converged = rz == 0.0;
  for (; it < max_iter && !converged; ++it) {
    const Eigen::MatrixXcd AP = n_apply(P);
    const double pap = (P.conjugate().cwiseProduct(AP)).sum().real();
    const double alpha = rz / pap;
    X += alpha * P;
    R -= alpha * AP;
    const double rz_new = R.squaredNorm();
    if (std::sqrt(rz_new) <= tol * rhs_norm) {
      rz = rz_new;
      converged = true;
      ++it;
      break;
    }
    P = R + (rz_new / rz) * P;
    rz = rz_new;
  }
  if (info) {
    info->iterations = it;
    info->residual = rhs_norm > 0 ? std::sqrt(rz) / rhs_norm : 0.0;
    info->converged = converged;
  } else if (!converged) {
    throw std::runtime_error("resolvent_column: CG on the normal equations did not converge");
  }
  return X;
}

FixedPointSolution fixed_point(const Eigen::MatrixXd& B, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& xi, Complex z, double damping, double tol,
                               int max_iter, const std::optional<Eigen::MatrixXcd>& M0) {
  const int n = static_cast<int>(B.rows());
  if (B.cols() != n || theta.size() != n || xi.size() != n)
    throw std::invalid_argument("fixed_point: dimension mismatch");
  if (!(z.imag() > 0.0)) throw std::invalid_argument("fixed_point: Im z must be > 0");
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("fixed_point: damping must lie in (0, 1]");
  // Group equal theta values: the commutative case costs one inverse a sweep.
  std::vector<std::pair<double, int>> groups;
  {
    std::vector<double> sorted(theta.data(), theta.data() + n);
    std::sort(sorted.begin(), sorted.end());
    for (double t : sorted) {
      if (!groups.empty() && groups.back().first == t)
        ++groups.back().second;
      else
        groups.emplace_back(t, 1);
    }
  }
  const Eigen::MatrixXcd Bc = B.cast<Complex>();
  const Eigen::VectorXcd xic = xi.cast<Complex>();
  auto sweep = [&](const Eigen::MatrixXcd& M) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& [t, count] : groups) {
      Eigen::MatrixXcd S = Bc - M;
      S.diagonal() += t * xic;
      S.diagonal().array() -= z;
      acc += static_cast<double>(count) * S.partialPivLu().inverse();
    }
    return (acc / static_cast<double>(n)).eval();
  };

  FixedPointSolution sol;
  sol.z = z;
  sol.M = M0 ? *M0 : Eigen::MatrixXcd::Zero(n, n);
  if (sol.M.rows() != n || sol.M.cols() != n)
    throw std::invalid_argument("fixed_point: M0 dimension mismatch");
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXcd FM = sweep(sol.M);
    sol.iterations = it + 1;
    if ((FM - sol.M).norm() <= tol) break;  // Frobenius bounds the operator norm
    sol.M = (1.0 - damping) * sol.M + damping * FM;
  }
  sol.residual = operator_norm(sweep(sol.M) - sol.M);
  sol.converged = sol.residual <= tol;
  const Eigen::MatrixXcd H = (sol.M - sol.M.adjoint()) / Complex(0.0, 2.0);
  sol.im_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(H).eigenvalues().minCoeff();
  return sol;
}

ScanResult entry_scaling_scan(const std::vector<int>& ns, Complex z, int replicates,
                              std::uint64_t seed, int columns_per_replicate) {
  {
    std::vector<int> distinct(ns);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
      throw std::invalid_argument("entry_scaling_scan: need at least 2 distinct n");
  }
  if (replicates < 1 || columns_per_replicate < 1)
    throw std::invalid_argument("entry_scaling_scan: replicates and columns must be >= 1");
  ScanResult out;
  std::vector<double> lx, ly_diag, ly_semi, ly_off;
  for (int n : ns) {
    std::vector<double> diag_v, semi_v, off_v;
    diag_v.reserve(static_cast<std::size_t>(replicates) * columns_per_replicate);
    semi_v.reserve(diag_v.capacity() * 2 * n);
    off_v.reserve(diag_v.capacity() * n * n);
    for (int rep = 0; rep < replicates; ++rep) {
      Rng rng = Rng::stream(seed, (static_cast<std::uint64_t>(n) << 24) ^
                                      static_cast<std::uint64_t>(rep));
      const WignerSample A = sample_goe(n, rng.next_u64());
      const WignerSample B = sample_goe(n, rng.next_u64());
      ProfileSet ps;
      ps.theta.resize(n);
      ps.xi.resize(n);
      ps.u = Eigen::VectorXd::Ones(n);
      ps.v = Eigen::VectorXd::Ones(n);
      for (int i = 0; i < n; ++i) ps.theta(i) = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < n; ++i) ps.xi(i) = rng.uniform(-1.0, 1.0);
      const ProblemInstance inst = ProblemInstance::make(A.entries, B.entries, ps);
      for (int c = 0; c < columns_per_replicate; ++c) {
        const int j = static_cast<int>(rng.uniform01() * n) % n;
        const int beta = static_cast<int>(rng.uniform01() * n) % n;
        const Eigen::MatrixXcd X = resolvent_column(inst, z, j, beta);
        diag_v.push_back(std::abs(X(beta, j)));
        for (int i = 0; i < n; ++i)
          if (i != j) semi_v.push_back(std::abs(X(beta, i)));
        for (int a = 0; a < n; ++a)
          if (a != beta) semi_v.push_back(std::abs(X(a, j)));
        for (int i = 0; i < n; ++i) {
          if (i == j) continue;
          for (int a = 0; a < n; ++a)
            if (a != beta) off_v.push_back(std::abs(X(a, i)));
        }
      }
    }
    ScanResult::Row row;
    row.n = n;
    row.diag_median = median_of(diag_v);
    row.semi_median = median_of(semi_v);
    row.off_median = median_of(off_v);
    out.rows.push_back(row);
    lx.push_back(std::log(static_cast<double>(n)));
    ly_diag.push_back(std::log(row.diag_median));
    ly_semi.push_back(std::log(row.semi_median));
    ly_off.push_back(std::log(row.off_median));
  }
  out.slope_diag = ls_slope(lx, ly_diag);
  out.slope_semi = ls_slope(lx, ly_semi);
  out.slope_off = ls_slope(lx, ly_off);
  return out;
}

BlockIdentityReport block_identity_check(const ProblemInstance& instance, Complex z,
                                         const std::vector<std::pair<int, int>>& pairs) {
  const DenseResolvent G = resolvent_dense(instance, z);
  const int n = instance.n;
  BlockIdentityReport report;
  auto invert_checked = [&](const Eigen::MatrixXcd& blk, Eigen::MatrixXcd& inv) {
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(blk, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) < 1e-12 * s(0)) return false;
    inv = blk.partialPivLu().inverse();
    return true;
  };
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::out_of_range("block_identity_check: pair index out of range");
    Eigen::MatrixXcd Di, Dj;
    if (!invert_checked(G.block_roman(i, i), Di) || !invert_checked(G.block_roman(j, j), Dj)) {
      ++report.excluded;
    } else {
      Eigen::MatrixXcd defect = Di - Dj;
      defect.diagonal() -= ((instance.profiles.theta(i) - instance.profiles.theta(j)) *
                            instance.profiles.xi.array())
                               .matrix()
                               .cast<Complex>();
      report.roman.push_back(
          {i, j, operator_norm(defect), operator_norm(G.block_roman(i, j))});
    }
    Eigen::MatrixXcd Da, Db;
    if (!invert_checked(G.block_greek(i, i), Da) || !invert_checked(G.block_greek(j, j), Db)) {
      ++report.excluded;
    } else {
      Eigen::MatrixXcd defect = Da - Db;
      defect.diagonal() -= ((instance.profiles.xi(i) - instance.profiles.xi(j)) *
                            instance.profiles.theta.array())
                               .matrix()
                               .cast<Complex>();
      report.greek.push_back(
          {i, j, operator_norm(defect), operator_norm(G.block_greek(i, j))});
    }
  }
  return report;
}

StieltjesComparison stieltjes_compare(const ProblemInstance& instance, Complex z, int cap) {
  StieltjesComparison cmp;
  const int n = instance.n;
  if (auto comm = commutative_scalars(instance.profiles)) {
    const SpectralPair pair = make_spectral_pair(instance.A, instance.B);
    cmp.m = spectral_stieltjes(pair, comm->first * comm->second, z);
    cmp.spectral_path = true;
  } else {
    cmp.m = resolvent_dense(instance, z, cap).stieltjes();
  }
  const FixedPointSolution fb =
      fixed_point(instance.B, instance.profiles.theta, instance.profiles.xi, z);
  const FixedPointSolution fa =
      fixed_point(instance.A, instance.profiles.xi, instance.profiles.theta, z);
  cmp.trace_mb = fb.M.trace() / static_cast<double>(n);
  cmp.trace_ma = fa.M.trace() / static_cast<double>(n);
  cmp.deviation_b = std::abs(cmp.m - cmp.trace_mb);
  cmp.deviation_a = std::abs(cmp.m - cmp.trace_ma);
  cmp.iterations_b = fb.iterations;
  cmp.iterations_a = fa.iterations;
  return cmp;
}

ResolventSummary resolvent_summary(const ProblemInstance& instance, Complex z, int cap) {
  const int n = instance.n;
  DenseResolvent R(instance, z, cap);
  const Eigen::MatrixXcd& G = R.full();
  ResolventSummary s;
  s.z = z;
  s.n = n;
  s.stieltjes = R.stieltjes();
  std::vector<double> dv, sv, ov;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double m = std::abs(G(static_cast<long>(i) * n + a, static_cast<long>(j) * n + b));
          const int eq = (i == j ? 1 : 0) + (a == b ? 1 : 0);
          (eq == 2 ? dv : eq == 1 ? sv : ov).push_back(m);
        }
  auto stats = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    EntryClassStats st;
    st.count = v.size();
    st.min = v.front();
    st.max = v.back();
    st.q25 = v[v.size() / 4];
    st.median = v[v.size() / 2];
    st.q75 = v[(3 * v.size()) / 4];
    return st;
  };
  s.diag = stats(std::move(dv));
  s.semi = stats(std::move(sv));
  s.off = stats(std::move(ov));
  for (int i : {0, n / 3, (2 * n) / 3})
    for (int j : {n / 4, n - 1})
      if (i != j) s.block_norms.push_back(operator_norm(R.block_roman(i, j)));
  // Bilinear deviation from the block-diagonal fixed-point surrogate.
  const FixedPointSolution fb =
      fixed_point(instance.B, instance.profiles.theta, instance.profiles.xi, z);
  const Eigen::VectorXd& u = instance.profiles.u;
  const Eigen::VectorXd& v = instance.profiles.v;
  const Eigen::VectorXd& up = instance.profiles.u_prime_or_u();
  const Eigen::VectorXd& vp = instance.profiles.v_prime_or_v();
  Eigen::VectorXcd right(static_cast<long>(n) * n), left(static_cast<long>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      right(static_cast<long>(i) * n + a) = up(i) * vp(a);
      left(static_cast<long>(i) * n + a) = u(i) * v(a);
    }
  Complex direct = left.dot(G * right);  // dot conjugates the left factor
  Complex surrogate(0.0, 0.0);
  const Eigen::MatrixXcd Bc = instance.B.cast<Complex>();
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXcd S = Bc - fb.M;
    S.diagonal() += instance.profiles.theta(i) * instance.profiles.xi.cast<Complex>();
    S.diagonal().array() -= z;
    const Eigen::MatrixXcd Mi = S.partialPivLu().inverse();
    surrogate += u(i) * up(i) * (v.cast<Complex>().dot(Mi * vp.cast<Complex>()));
  }
  s.bilinear_samples.push_back(direct - surrogate);
  return s;
}

}  // namespace kronwig
