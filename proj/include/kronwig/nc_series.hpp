#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kronwig/wigner.hpp"

namespace kronwig {

// Ordered pair (rho_a, rho_b) of non-crossing pairings of complementary
// subsets of {1..m}; the two pairings may cross each other.
struct PairingPair {
  int m = 0;
  std::vector<std::pair<int, int>> rho_a;  // 1-based elements, each pair (lo, hi)
  std::vector<std::pair<int, int>> rho_b;
};

// Complete duplicate-free enumeration of NC_{2,2}(m); m = 0 yields the single
// empty pair.  Guarded by max_m (enumeration size grows fast).
std::vector<PairingPair> enumerate_nc22(int m, int max_m = 16);

// Streaming form used by the series assembly; visits pairs grouped by the
// choice of rho_a's support so partial sums are deterministically ordered.
void for_each_nc22(int m, const std::function<void(const PairingPair&)>& visit, int max_m = 16);

// Word over {a or b, d} with the carried letter pairing and complement blocks.
struct WordStructure {
  std::string word;                                 // characters 'a'/'b'/'d'
  std::vector<std::pair<int, int>> pairing_on_letters;  // 1-based positions
  std::vector<std::vector<int>> complement_blocks;      // filled by complement()
  int first_block = -1;                             // index of block holding position 1
};

// Traverse 1..m emitting, for elements of the pairing owning the word,
// `d`+letter for odd integer labels and letter+`d` for even ones; a bare `d`
// for elements of the other pairing.  Letter pairings move to letter positions.
std::pair<WordStructure, WordStructure> build_words(const PairingPair& pair);

// Coarsest partition of d-positions whose union with the letter pairing is
// non-crossing, via a single left-to-right stack scan (push a fresh block at
// every arc opener, pop at the closer; a d joins the block on top).
WordStructure complement(WordStructure ws);

// Moment table keyed by the halved exponent s: theta[s] = E[theta^{-s/2}],
// uu[s] = E[U U' theta^{-s/2}], and xi/vv analogues.
struct MomentTable {
  std::map<int, double> theta, xi, uu, vv;

  double get(const std::map<int, double>& m, int s, const char* name) const;
  double theta_moment(int s) const { return get(theta, s, "E[theta^{-s/2}]"); }
  double xi_moment(int s) const { return get(xi, s, "E[xi^{-s/2}]"); }
  double uu_moment(int s) const { return get(uu, s, "E[UU'theta^{-s/2}]"); }
  double vv_moment(int s) const { return get(vv, s, "E[VV'xi^{-s/2}]"); }
};

// Empirical-measure averages over the profile coordinates, exponents s <= smax.
// use_primes=false substitutes U,V for U',V' (the T predictor).
MomentTable moments_from_profiles(const ProfileSet& ps, int smax, bool use_primes);

// Law-level moments: closed form for E[theta^{-s/2}] under the
// uniform-reciprocal marginal, Gauss-Hermite quadrature over the Gaussian
// copula for the mixed E[UU' theta^{-s/2}] moments (U' = U under this law).
MomentTable moments_from_law(const ProfileLaw& law, int smax, bool use_primes = true);

// Product formula over complement blocks:
//   E[UU' theta^{-(|S1|+2)/2}] prod_{S != S1} E[theta^{-|S|/2}]  x  (xi side),
// where S1/T1 are the blocks containing the first letter; the empty pair
// evaluates to E[UU' theta^{-1}] E[VV' xi^{-1}].
double eval_val(const PairingPair& pair, const MomentTable& moments);

// Sum of eval_val over NC_{2,2}(m) with compensated accumulation in the
// deterministic enumeration order (grouped by rho_a-support).
double pairing_sum(int m, const MomentTable& moments, int max_m = 16);

// C_m(z) = ((-1)^{m/2} / (z (z-1)^m)) sum_{k=m}^{M-1} binom(k,m) ((z-1)/z)^k
// for even m < M, accumulated by the overflow-free binomial recurrence.
std::map<int, double> series_coefficients(int M, double z);

// norm_product * eta^{-2} * (sqrt((z-1)^2 + 16 eta^{-2}) / z)^M.
double remainder_bound(int M, double z, double eta, double norm_product);

struct SeriesPrediction {
  struct Term {
    int m;
    double coefficient;
    double pairing_sum;
    double contribution;
  };
  double value = 0.0;
  std::vector<Term> per_m_terms;
  double z = 0.0;
  int M = 0;
  double remainder = 0.0;  // remainder_bound at (M, z)
  double eta = 0.0;
  double norm_product = 0.0;
  bool target_reached = true;  // false when the adaptive-M precision target
                               // was not met at the cap
};

// Assembled series prediction.  M < 0 selects the smallest M with
// remainder_bound <= 1e-6 * |partial sum| capped at 16; z <= 0 selects the
// rate-optimal default z = 1 + 16 eta^{-2}.
SeriesPrediction predict(const MomentTable& moments, double eta, int M, double z,
                         double norm_product);

// eta and norm products read off finite supports.
double eta_from_profiles(const ProfileSet& ps);
double norm_product_from_profiles(const ProfileSet& ps, bool use_primes);
double eta_from_law(const ProfileLaw& law);
double norm_product_from_law(const ProfileLaw& law);

// Audit exports.
std::string moment_table_to_json(const MomentTable& table);
std::string prediction_to_json(const SeriesPrediction& p);

// Monte Carlo side of the free-moment identity (even m): with GOE surrogates
// A, B for the free semicircular pair, evaluates
//   n^{-2} Tr[(U'(x)V') (da(x)db) (S S*)^{m/2} (da(x)db) (U(x)V)],
// where S vec(X) = vec(Xi^{-1/2} (XA + BX) Theta^{-1/2}) and da = Theta^{-1/2},
// db = Xi^{-1/2}; expanded over Kronecker words so only A^2, B^2 and the
// pair products of {da A^2 da, da A da, da^2} (and the B analogues) appear.
double goe_surrogate_moment(const ProfileSet& ps, int m, const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& B);

}  // namespace kronwig
