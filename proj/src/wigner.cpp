#include "kronwig/wigner.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "kronwig/rng.hpp"

namespace kronwig {

WignerSample sample_goe(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_goe: n must be >= 1");
  Rng rng = Rng::stream(seed, 0x60e);
  Eigen::MatrixXd M(n, n);
  const double off = 1.0 / std::sqrt(static_cast<double>(n));
  const double diag = std::sqrt(2.0 / static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    M(j, j) = diag * rng.normal();
    for (int i = 0; i < j; ++i) {
      const double x = off * rng.normal();
      M(i, j) = x;
      M(j, i) = x;
    }
  }
  return WignerSample{n, std::move(M)};
}

Eigen::MatrixXcd sample_hermitian(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_hermitian: n must be >= 1");
  Rng rng = Rng::stream(seed, 0x9ce);
  Eigen::MatrixXcd M(n, n);
  const double off = 1.0 / std::sqrt(2.0 * n);  // E|a_ij|^2 = 1/n
  const double diag = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    M(j, j) = diag * rng.normal();
    for (int i = 0; i < j; ++i) {
      const std::complex<double> x(off * rng.normal(), off * rng.normal());
      M(i, j) = x;
      M(j, i) = std::conj(x);
    }
  }
  return M;
}

ProfileLaw ProfileLaw::uniform_reciprocal(double k, double rho) {
  ProfileLaw law;
  law.kind = Kind::uniform_reciprocal;
  law.k = k;
  law.rho = rho;
  return law;
}

ProfileLaw ProfileLaw::from_profiles(ProfileSet ps) {
  ProfileLaw law;
  law.kind = Kind::empirical;
  law.empirical = std::move(ps);
  return law;
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Draws (val^-1, w^2) ~ Uniform(lo,hi)/k via a Gaussian copula hitting the
// target rank correlation rho (Gaussian parameter r = 2 sin(pi rho / 6)).
void draw_reciprocal_pair(Rng& rng, double k, double rho, double lo, double hi, int n,
                          Eigen::VectorXd& val, Eigen::VectorXd& w) {
  // Snap the endpoints so rho = +-1 is exactly co/antimonotone.
  const double r = std::abs(rho) == 1.0 ? std::copysign(1.0, rho)
                                        : 2.0 * std::sin(std::numbers::pi * rho / 6.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - r * r));
  val.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double g1 = rng.normal();
    const double g2 = r * g1 + s * rng.normal();
    const double inv = (lo + (hi - lo) * normal_cdf(g1)) / k;
    const double w2 = (lo + (hi - lo) * normal_cdf(g2)) / k;
    val(i) = 1.0 / inv;
    w(i) = std::sqrt(w2);
  }
}

}  // namespace

ProfileSet sample_profiles(const ProfileLaw& law, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_profiles: n must be >= 1");
  if (law.kind == ProfileLaw::Kind::empirical) {
    if (law.empirical.n() != n)
      throw std::invalid_argument("sample_profiles: empirical law has fixed n");
    return law.empirical;
  }
  if (law.k <= 0.0) throw std::invalid_argument("sample_profiles: scale k must be > 0");
  if (std::abs(law.rho) > 1.0) throw std::invalid_argument("sample_profiles: |rho| must be <= 1");
  Rng rng = Rng::stream(seed, 0xdea1);
  ProfileSet ps;
  draw_reciprocal_pair(rng, law.k, law.rho, law.interval_lo, law.interval_hi, n, ps.theta, ps.u);
  draw_reciprocal_pair(rng, law.k, law.rho, law.interval_lo, law.interval_hi, n, ps.xi, ps.v);
  return ps;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& s, int row, int col) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw std::runtime_error("load_profiles: non-numeric field '" + s + "' at row " +
                             std::to_string(row) + ", column " + std::to_string(col + 1));
  }
  return v;
}

}  // namespace

ProfileSet load_profiles(const std::string& path, bool require_positive) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_profiles: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_profiles: empty file " + path);
  auto header = split_csv_line(line);
  bool primes;
  if (header == std::vector<std::string>{"theta", "xi", "u", "v"}) {
    primes = false;
  } else if (header == std::vector<std::string>{"theta", "xi", "u", "v", "u_prime", "v_prime"}) {
    primes = true;
  } else {
    throw std::runtime_error("load_profiles: bad header '" + line +
                             "' (expected theta,xi,u,v[,u_prime,v_prime])");
  }
  const std::size_t ncols = primes ? 6 : 4;
  std::vector<std::array<double, 6>> rows;
  int rownum = 1;  // data rows are 1-based; header not counted
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != ncols) {
      throw std::runtime_error("load_profiles: row " + std::to_string(rownum) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(ncols));
    }
    std::array<double, 6> r{};
    for (std::size_t c = 0; c < ncols; ++c) r[c] = parse_field(fields[c], rownum, c);
    rows.push_back(r);
    ++rownum;
  }
  if (rows.empty()) throw std::runtime_error("load_profiles: no data rows in " + path);
  const int n = static_cast<int>(rows.size());
  ProfileSet ps;
  ps.theta.resize(n);
  ps.xi.resize(n);
  ps.u.resize(n);
  ps.v.resize(n);
  if (primes) {
    ps.u_prime = Eigen::VectorXd(n);
    ps.v_prime = Eigen::VectorXd(n);
  }
  std::string violations;
  for (int i = 0; i < n; ++i) {
    ps.theta(i) = rows[i][0];
    ps.xi(i) = rows[i][1];
    ps.u(i) = rows[i][2];
    ps.v(i) = rows[i][3];
    if (primes) {
      (*ps.u_prime)(i) = rows[i][4];
      (*ps.v_prime)(i) = rows[i][5];
    }
    if (require_positive && (ps.theta(i) <= 0.0 || ps.xi(i) <= 0.0)) {
      violations += (violations.empty() ? "" : "; ");
      violations += "row " + std::to_string(i + 1) + " (theta=" + std::to_string(ps.theta(i)) +
                    ", xi=" + std::to_string(ps.xi(i)) + ")";
    }
  }
  if (!violations.empty())
    throw std::runtime_error("load_profiles: positivity violated at " + violations);
  return ps;
}

void save_profiles(const ProfileSet& ps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_profiles: cannot open " + path);
  const bool primes = ps.u_prime.has_value() && ps.v_prime.has_value();
  out << (primes ? "theta,xi,u,v,u_prime,v_prime\n" : "theta,xi,u,v\n");
  char buf[512];
  for (int i = 0; i < ps.n(); ++i) {
    if (primes) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", ps.theta(i),
                    ps.xi(i), ps.u(i), ps.v(i), (*ps.u_prime)(i), (*ps.v_prime)(i));
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", ps.theta(i), ps.xi(i), ps.u(i),
                    ps.v(i));
    }
    out << buf;
  }
}

}  // namespace kronwig
