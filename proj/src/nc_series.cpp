#include "kronwig/nc_series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace kronwig {

namespace {

using Pairing = std::vector<std::pair<int, int>>;

// All non-crossing perfect matchings of the sorted element list: pair the
// first element with each partner that leaves even inside/outside regions.
void nc_pairings(const std::vector<int>& elems, std::vector<Pairing>& out) {
  if (elems.empty()) {
    out.push_back({});
    return;
  }
  const int first = elems[0];
  for (std::size_t idx = 1; idx < elems.size(); ++idx) {
    std::vector<int> inside(elems.begin() + 1, elems.begin() + idx);
    if (inside.size() % 2) continue;
    std::vector<int> outside(elems.begin() + idx + 1, elems.end());
    std::vector<Pairing> pin, pout;
    nc_pairings(inside, pin);
    nc_pairings(outside, pout);
    for (const auto& a : pin)
      for (const auto& b : pout) {
        Pairing p;
        p.emplace_back(first, elems[idx]);
        p.insert(p.end(), a.begin(), a.end());
        p.insert(p.end(), b.begin(), b.end());
        out.push_back(std::move(p));
      }
  }
}

// Visits subsets of {1..m} of size j in lexicographic order.
void for_each_subset(int m, int j, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> s(j);
  for (int i = 0; i < j; ++i) s[i] = i + 1;
  if (j == 0) {
    visit(s);
    return;
  }
  while (true) {
    visit(s);
    int i = j - 1;
    while (i >= 0 && s[i] == m - (j - 1 - i)) --i;
    if (i < 0) break;
    ++s[i];
    for (int t = i + 1; t < j; ++t) s[t] = s[t - 1] + 1;
  }
}

void check_m(int m, int max_m) {
  if (m < 0 || m % 2) throw std::invalid_argument("NC_{2,2}: m must be even and nonnegative");
  if (m > max_m)
    throw std::invalid_argument("NC_{2,2}: m exceeds configured maximum " + std::to_string(max_m));
}

}  // namespace

void for_each_nc22(int m, const std::function<void(const PairingPair&)>& visit, int max_m) {
  check_m(m, max_m);
  for (int j = 0; j <= m; j += 2) {
    for_each_subset(m, j, [&](const std::vector<int>& S) {
      std::vector<int> Sc;
      Sc.reserve(m - j);
      {
        std::size_t si = 0;
        for (int e = 1; e <= m; ++e) {
          if (si < S.size() && S[si] == e)
            ++si;
          else
            Sc.push_back(e);
        }
      }
      std::vector<Pairing> pas, pbs;
      nc_pairings(S, pas);
      nc_pairings(Sc, pbs);
      PairingPair pp;
      pp.m = m;
      for (const auto& pa : pas)
        for (const auto& pb : pbs) {
          pp.rho_a = pa;
          pp.rho_b = pb;
          visit(pp);
        }
    });
  }
}

std::vector<PairingPair> enumerate_nc22(int m, int max_m) {
  std::vector<PairingPair> out;
  for_each_nc22(m, [&](const PairingPair& p) { out.push_back(p); }, max_m);
  return out;
}

std::pair<WordStructure, WordStructure> build_words(const PairingPair& pair) {
  auto build = [&](bool a_side) {
    const Pairing& own = a_side ? pair.rho_a : pair.rho_b;
    std::vector<int> pos_of(pair.m + 1, 0);
    std::vector<bool> in_own(pair.m + 1, false);
    for (const auto& [p, q] : own) in_own[p] = in_own[q] = true;
    WordStructure ws;
    for (int e = 1; e <= pair.m; ++e) {
      if (in_own[e]) {
        if (e % 2) {  // odd label: d then letter
          ws.word += 'd';
          ws.word += a_side ? 'a' : 'b';
          pos_of[e] = static_cast<int>(ws.word.size());
        } else {      // even label: letter then d
          ws.word += a_side ? 'a' : 'b';
          pos_of[e] = static_cast<int>(ws.word.size());
          ws.word += 'd';
        }
      } else {
        ws.word += 'd';
      }
    }
    for (const auto& [p, q] : own) {
      ws.pairing_on_letters.emplace_back(std::min(pos_of[p], pos_of[q]),
                                         std::max(pos_of[p], pos_of[q]));
    }
    std::sort(ws.pairing_on_letters.begin(), ws.pairing_on_letters.end());
    return ws;
  };
  return {build(true), build(false)};
}

WordStructure complement(WordStructure ws) {
  const int L = static_cast<int>(ws.word.size());
  std::vector<int> opens(L + 1, 0), closes(L + 1, 0);
  for (const auto& [p, q] : ws.pairing_on_letters) {
    if (!(1 <= p && p < q && q <= L))
      throw std::invalid_argument("complement: pairing positions out of range");
    opens[p] = 1;
    closes[q] = 1;
  }
  // Non-crossing check of the letter pairing itself.
  for (const auto& [p, q] : ws.pairing_on_letters)
    for (const auto& [r, s] : ws.pairing_on_letters)
      if (p < r && r < q && q < s)
        throw std::invalid_argument("complement: letter pairing is crossing");
  ws.complement_blocks.assign(1, {});
  std::vector<int> stack{0};
  for (int pos = 1; pos <= L; ++pos) {
    if (ws.word[pos - 1] == 'd') {
      ws.complement_blocks[stack.back()].push_back(pos);
    } else if (opens[pos]) {
      ws.complement_blocks.emplace_back();
      stack.push_back(static_cast<int>(ws.complement_blocks.size()) - 1);
    } else {
      stack.pop_back();
    }
  }
  ws.complement_blocks.erase(
      std::remove_if(ws.complement_blocks.begin(), ws.complement_blocks.end(),
                     [](const std::vector<int>& b) { return b.empty(); }),
      ws.complement_blocks.end());
  ws.first_block = -1;
  for (std::size_t i = 0; i < ws.complement_blocks.size(); ++i)
    if (!ws.complement_blocks[i].empty() && ws.complement_blocks[i][0] == 1)
      ws.first_block = static_cast<int>(i);
  return ws;
}

double MomentTable::get(const std::map<int, double>& m, int s, const char* name) const {
  auto it = m.find(s);
  if (it == m.end())
    throw std::out_of_range(std::string("MomentTable: missing moment ") + name +
                            " for s = " + std::to_string(s));
  return it->second;
}

MomentTable moments_from_profiles(const ProfileSet& ps, int smax, bool use_primes) {
  MomentTable t;
  const int n = ps.n();
  const Eigen::VectorXd& up = use_primes ? ps.u_prime_or_u() : ps.u;
  const Eigen::VectorXd& vp = use_primes ? ps.v_prime_or_v() : ps.v;
  for (int s = 0; s <= smax; ++s) {
    double th = 0, xi = 0, uu = 0, vv = 0;
    for (int i = 0; i < n; ++i) {
      const double ts = std::pow(ps.theta(i), -0.5 * s);
      const double xs = std::pow(ps.xi(i), -0.5 * s);
      th += ts;
      xi += xs;
      uu += ps.u(i) * up(i) * ts;
      vv += ps.v(i) * vp(i) * xs;
    }
    t.theta[s] = th / n;
    t.xi[s] = xi / n;
    t.uu[s] = uu / n;
    t.vv[s] = vv / n;
  }
  return t;
}

namespace {

// Gauss-Hermite nodes/weights for E[f(g)], g ~ N(0,1), via the Golub-Welsch
// tridiagonal eigenproblem.
void gauss_hermite(int nodes, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int i = 1; i < nodes; ++i) {
    const double b = std::sqrt(static_cast<double>(i));
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x = es.eigenvalues();
  w.resize(nodes);
  for (int i = 0; i < nodes; ++i) w(i) = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

MomentTable moments_from_law(const ProfileLaw& law, int smax, bool use_primes) {
  if (law.kind == ProfileLaw::Kind::empirical)
    return moments_from_profiles(law.empirical, smax, use_primes);
  if (law.k <= 0.0) throw std::invalid_argument("moments_from_law: scale k must be > 0");
  const double lo = law.interval_lo / law.k;
  const double hi = law.interval_hi / law.k;
  MomentTable t;
  // Marginal E[theta^{-s/2}] = E[(theta^{-1})^{s/2}] over Uniform(lo,hi).
  for (int s = 0; s <= smax; ++s) {
    const double p = 0.5 * s;
    const double m1 = (std::pow(hi, p + 1) - std::pow(lo, p + 1)) / ((p + 1) * (hi - lo));
    t.theta[s] = m1;
    t.xi[s] = m1;
  }
  // Mixed moments E[u^2 (theta^{-1})^{s/2}] under the Gaussian copula.
  // Endpoint snap mirrors the sampler: rho = +-1 is exactly co/antimonotone.
  const double r = std::abs(law.rho) == 1.0
                       ? std::copysign(1.0, law.rho)
                       : 2.0 * std::sin(std::numbers::pi * law.rho / 6.0);
  const double sq = std::sqrt(std::max(0.0, 1.0 - r * r));
  Eigen::VectorXd gx, gw;
  gauss_hermite(48, gx, gw);
  for (int s = 0; s <= smax; ++s) {
    const double p = 0.5 * s;
    double acc = 0.0;
    for (int i = 0; i < gx.size(); ++i) {
      const double inv = lo + (hi - lo) * normal_cdf(gx(i));
      const double tpow = std::pow(inv, p);
      double inner = 0.0;
      for (int j = 0; j < gx.size(); ++j) {
        const double g2 = r * gx(i) + sq * gx(j);
        inner += gw(j) * (lo + (hi - lo) * normal_cdf(g2));  // u^2 value
      }
      acc += gw(i) * tpow * inner;
    }
    t.uu[s] = acc;
    t.vv[s] = acc;
  }
  return t;
}

double eval_val(const PairingPair& pair, const MomentTable& moments) {
  if (pair.m == 0) return moments.uu_moment(2) * moments.vv_moment(2);
  auto [wa, wb] = build_words(pair);
  wa = complement(std::move(wa));
  wb = complement(std::move(wb));
  auto side = [&](const WordStructure& ws, bool a_side) {
    const int s1 =
        ws.first_block >= 0 ? static_cast<int>(ws.complement_blocks[ws.first_block].size()) : 0;
    double out = a_side ? moments.uu_moment(s1 + 2) : moments.vv_moment(s1 + 2);
    for (std::size_t b = 0; b < ws.complement_blocks.size(); ++b) {
      if (static_cast<int>(b) == ws.first_block) continue;
      const int sz = static_cast<int>(ws.complement_blocks[b].size());
      out *= a_side ? moments.theta_moment(sz) : moments.xi_moment(sz);
    }
    return out;
  };
  return side(wa, true) * side(wb, false);
}

double pairing_sum(int m, const MomentTable& moments, int max_m) {
  check_m(m, max_m);
  // Kahan accumulation in deterministic enumeration order.
  double sum = 0.0, comp = 0.0;
  for_each_nc22(
      m,
      [&](const PairingPair& p) {
        const double y = eval_val(p, moments) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      },
      max_m);
  return sum;
}

std::map<int, double> series_coefficients(int M, double z) {
  if (M < 1) throw std::invalid_argument("series_coefficients: M must be >= 1");
  if (!(z > 1.0)) throw std::invalid_argument("series_coefficients: z must be > 1");
  const double r = (z - 1.0) / z;
  std::map<int, double> C;
  for (int m = 0; m < M; m += 2) {
    // sum_{k=m}^{M-1} binom(k,m) r^k via binom(k+1,m) = binom(k,m)(k+1)/(k+1-m).
    double term = std::pow(r, m);
    double s = term;
    for (int k = m; k + 1 <= M - 1; ++k) {
      term *= r * static_cast<double>(k + 1) / static_cast<double>(k + 1 - m);
      s += term;
    }
    const double sign = (m / 2) % 2 ? -1.0 : 1.0;
    C[m] = sign * s / (z * std::pow(z - 1.0, m));
  }
  return C;
}

double remainder_bound(int M, double z, double eta, double norm_product) {
  if (!(z > 1.0)) throw std::invalid_argument("remainder_bound: z must be > 1");
  if (!(eta > 0.0)) throw std::invalid_argument("remainder_bound: eta must be > 0");
  const double rate = std::sqrt((z - 1.0) * (z - 1.0) + 16.0 / (eta * eta)) / z;
  return norm_product * std::pow(eta, -2.0) * std::pow(rate, M);
}

namespace {

SeriesPrediction predict_fixed(const MomentTable& moments, double eta, int M, double z,
                               double norm_product) {
  SeriesPrediction out;
  out.z = z;
  out.M = M;
  out.eta = eta;
  out.norm_product = norm_product;
  const auto C = series_coefficients(M, z);
  double sum = 0.0, comp = 0.0;
  for (const auto& [m, cm] : C) {
    const double ps = pairing_sum(m, moments);
    const double contrib = cm * ps;
    out.per_m_terms.push_back({m, cm, ps, contrib});
    const double y = contrib - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  out.value = sum;
  out.remainder = remainder_bound(M, z, eta, norm_product);
  return out;
}

}  // namespace

SeriesPrediction predict(const MomentTable& moments, double eta, int M, double z,
                         double norm_product) {
  if (!(eta > 0.0)) throw std::invalid_argument("predict: eta must be > 0");
  if (z <= 0.0) z = 1.0 + 16.0 / (eta * eta);
  if (M > 0) return predict_fixed(moments, eta, M, z, norm_product);
  // Adaptive M: smallest M with remainder <= 1e-6 |partial sum|, capped at 16.
  constexpr int kCap = 16;
  SeriesPrediction best;
  for (int Mtry = 1; Mtry <= kCap; ++Mtry) {
    best = predict_fixed(moments, eta, Mtry, z, norm_product);
    if (best.remainder <= 1e-6 * std::abs(best.value)) {
      best.target_reached = true;
      return best;
    }
  }
  best.target_reached = false;
  return best;
}

double eta_from_profiles(const ProfileSet& ps) {
  if (ps.theta.minCoeff() <= 0.0 || ps.xi.minCoeff() <= 0.0)
    throw std::domain_error("eta_from_profiles: requires positive theta, xi");
  return std::sqrt(ps.theta.minCoeff() * ps.xi.minCoeff());
}

double norm_product_from_profiles(const ProfileSet& ps, bool use_primes) {
  const Eigen::VectorXd& up = use_primes ? ps.u_prime_or_u() : ps.u;
  const Eigen::VectorXd& vp = use_primes ? ps.v_prime_or_v() : ps.v;
  return ps.u.cwiseAbs().maxCoeff() * ps.v.cwiseAbs().maxCoeff() * up.cwiseAbs().maxCoeff() *
         vp.cwiseAbs().maxCoeff();
}

double eta_from_law(const ProfileLaw& law) {
  if (law.kind == ProfileLaw::Kind::empirical) return eta_from_profiles(law.empirical);
  // min theta = 1 / max theta^{-1} = k / interval_hi.
  const double tmin = law.k / law.interval_hi;
  return tmin;  // theta and xi share the law, eta = sqrt(tmin * tmin)
}

double norm_product_from_law(const ProfileLaw& law) {
  if (law.kind == ProfileLaw::Kind::empirical) return norm_product_from_profiles(law.empirical, true);
  const double umax2 = law.interval_hi / law.k;  // sup of u^2
  return umax2 * umax2;                          // (max|u| max|v| max|u'| max|v'|) with primes = base
}

std::string moment_table_to_json(const MomentTable& table) {
  std::ostringstream os;
  char buf[64];
  auto emit = [&](const char* name, const std::map<int, double>& m, bool last) {
    os << "  \"" << name << "\": {";
    bool first = true;
    for (const auto& [s, v] : m) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << (first ? "" : ", ") << "\"" << s << "\": " << buf;
      first = false;
    }
    os << (last ? "}\n" : "},\n");
  };
  os << "{\n";
  emit("E[theta^{-s/2}]", table.theta, false);
  emit("E[UU'theta^{-s/2}]", table.uu, false);
  emit("E[xi^{-s/2}]", table.xi, false);
  emit("E[VV'xi^{-s/2}]", table.vv, true);
  os << "}";
  return os.str();
}

std::string prediction_to_json(const SeriesPrediction& p) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "{\n  \"value\": " << num(p.value) << ",\n  \"z\": " << num(p.z) << ",\n  \"M\": " << p.M
     << ",\n  \"eta\": " << num(p.eta) << ",\n  \"norm_product\": " << num(p.norm_product)
     << ",\n  \"remainder_bound\": " << num(p.remainder)
     << ",\n  \"target_reached\": " << (p.target_reached ? "true" : "false")
     << ",\n  \"terms\": [\n";
  for (std::size_t i = 0; i < p.per_m_terms.size(); ++i) {
    const auto& t = p.per_m_terms[i];
    os << "    {\"m\": " << t.m << ", \"coefficient\": " << num(t.coefficient)
       << ", \"pairing_sum\": " << num(t.pairing_sum)
       << ", \"contribution\": " << num(t.contribution) << "}"
       << (i + 1 < p.per_m_terms.size() ? "," : "") << "\n";
  }
  os << "  ]\n}";
  return os.str();
}

double goe_surrogate_moment(const ProfileSet& ps, int m, const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& B) {
  if (m < 0 || m % 2) throw std::invalid_argument("goe_surrogate_moment: m must be even");
  if (m > 8) throw std::invalid_argument("goe_surrogate_moment: m capped at 8");
  const int n = ps.n();
  if (A.rows() != n || B.rows() != n)
    throw std::invalid_argument("goe_surrogate_moment: dimension mismatch");
  const Eigen::ArrayXd da2 = ps.theta.array().inverse();        // d_a^2
  const Eigen::ArrayXd db2 = ps.xi.array().inverse();
  const Eigen::ArrayXd da = da2.sqrt(), db = db2.sqrt();
  const Eigen::ArrayXd p = ps.u.array() * ps.u_prime_or_u().array() * da2;  // U U' d_a^2
  const Eigen::ArrayXd q = ps.v.array() * ps.v_prime_or_v().array() * db2;
  if (m == 0) return p.sum() * q.sum() / (static_cast<double>(n) * n);

  // S S* = G2 (x) H0 + 2 G1 (x) H1 + G0 (x) H2 with
  //   G0 = d_a^2, G1 = d_a A d_a, G2 = d_a A^2 d_a (B analogues for H).
  std::vector<Eigen::MatrixXd> G(3), H(3);
  G[0] = da2.matrix().asDiagonal();
  G[1] = da.matrix().asDiagonal() * A * da.matrix().asDiagonal();
  G[2] = da.matrix().asDiagonal() * (A * A) * da.matrix().asDiagonal();
  H[0] = db2.matrix().asDiagonal();
  H[1] = db.matrix().asDiagonal() * B * db.matrix().asDiagonal();
  H[2] = db.matrix().asDiagonal() * (B * B) * db.matrix().asDiagonal();

  const int half = m / 2;
  // Iterate sequences in {0,1,2}^half; weight 2^{#1s};
  // value = tr(diag(p) prod G_s) * tr(diag(q) prod H_{2-s}) / n^2.
  // The weighted trace of a product chain only needs the chain's diagonal:
  // tr(diag(p) X Glast) = sum_i p_i sum_k X(i,k) Glast(k,i).
  auto weighted_trace = [n](const Eigen::ArrayXd& wts, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& last) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += wts(i) * X.row(i).dot(last.col(i));
    return acc;
  };
  double total = 0.0;
  std::vector<int> seq(half, 0);
  while (true) {
    double w = 1.0;
    for (int t = 0; t < half; ++t)
      if (seq[t] == 1) w *= 2.0;
    double ta, tb;
    if (half == 1) {
      ta = (p * G[seq[0]].diagonal().array()).sum();
      tb = (q * H[2 - seq[0]].diagonal().array()).sum();
    } else {
      Eigen::MatrixXd X = G[seq[0]];
      Eigen::MatrixXd Y = H[2 - seq[0]];
      for (int t = 1; t + 1 < half; ++t) {
        X = X * G[seq[t]];
        Y = Y * H[2 - seq[t]];
      }
      ta = weighted_trace(p, X, G[seq[half - 1]]);
      tb = weighted_trace(q, Y, H[2 - seq[half - 1]]);
    }
    total += w * ta * tb;
    int t = half - 1;
    while (t >= 0 && seq[t] == 2) seq[t--] = 0;
    if (t < 0) break;
    ++seq[t];
  }
  return total / (static_cast<double>(n) * n);
}

}  // namespace kronwig
