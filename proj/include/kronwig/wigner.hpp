#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>

namespace kronwig {

// Real symmetric Wigner matrix: off-diagonal variance 1/n, diagonal 2/n (GOE).
struct WignerSample {
  int n = 0;
  Eigen::MatrixXd entries;
};

WignerSample sample_goe(int n, std::uint64_t seed);

// Complex Hermitian variant (GUE normalization E|a_ij|^2 = 1/n, diagonal 1/n),
// provided for resolvent experiments; the default everywhere else is real.
Eigen::MatrixXcd sample_hermitian(int n, std::uint64_t seed);

// Diagonal weights and constraint vectors.  Rows of the unknown X pair with
// (xi, v); columns pair with (theta, u).  u_prime/v_prime are optional
// observation vectors; when absent, consumers fall back to u, v.
struct ProfileSet {
  Eigen::VectorXd theta;
  Eigen::VectorXd xi;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  std::optional<Eigen::VectorXd> u_prime;
  std::optional<Eigen::VectorXd> v_prime;

  int n() const { return static_cast<int>(theta.size()); }
  const Eigen::VectorXd& u_prime_or_u() const { return u_prime ? *u_prime : u; }
  const Eigen::VectorXd& v_prime_or_v() const { return v_prime ? *v_prime : v; }
};

// Coordinate law: either an empirical profile or the uniform-reciprocal
// design (theta^-1, u^2 ~ Uniform(0.05,0.5)/k with rank correlation rho
// between the members of each coordinate pair; same for (xi^-1, v^2)).
struct ProfileLaw {
  enum class Kind { empirical, uniform_reciprocal };
  Kind kind = Kind::uniform_reciprocal;

  // uniform-reciprocal parameters
  double k = 1.0;
  double rho = 0.0;
  double interval_lo = 0.05;
  double interval_hi = 0.5;

  // empirical data
  ProfileSet empirical;

  static ProfileLaw uniform_reciprocal(double k, double rho);
  static ProfileLaw from_profiles(ProfileSet ps);
};

ProfileSet sample_profiles(const ProfileLaw& law, int n, std::uint64_t seed);

// CSV schema: header `theta,xi,u,v[,u_prime,v_prime]`, one row per index.
// Parse errors and positivity violations name the offending row.
ProfileSet load_profiles(const std::string& path, bool require_positive = true);
void save_profiles(const ProfileSet& ps, const std::string& path);

}  // namespace kronwig
