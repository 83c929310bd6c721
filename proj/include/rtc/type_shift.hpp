// Exact information-theoretic analysis of conditional type shift on finite
// worlds: state S, data action A, latent type G, policy action Â.
//
// All entropies are in bits with 0 log 0 = 0.
#pragma once

#include "rtc/rng.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rtc::theory {

/// Probability table over a few discrete variables, first variable varying
/// slowest.
class Joint {
 public:
  /// Throws std::invalid_argument on negative entries, a size mismatch or a
  /// total outside 1 +- 1e-9.
  Joint(std::vector<int> dims, std::vector<double> p);

  int variables() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<double>& probs() const { return p_; }
  double total() const;

  /// Marginal table over the listed variables (in the listed order).
  Joint marginal(const std::vector<int>& vars) const;

  double entropy(const std::vector<int>& vars) const;
  double entropy() const;
  double conditional_entropy(const std::vector<int>& x, const std::vector<int>& given) const;
  double mutual_information(const std::vector<int>& x, const std::vector<int>& y) const;
  double conditional_mutual_information(const std::vector<int>& x, const std::vector<int>& y,
                                        const std::vector<int>& given) const;
  /// I(X, Y, Z) = I(X, Y) - I(X, Y | Z).
  double interaction_information(int x, int y, int z) const;

 private:
  Joint() = default;
  std::vector<int> dims_;
  std::vector<double> p_;
};

/// Entropy in bits of a probability vector.
double entropy_bits(const Eigen::VectorXd& p);

/// A finite imitation world and a trained hierarchical model.
struct DiscreteWorld {
  int n_states = 0;
  int n_actions = 0;
  int n_latents = 0;
  Eigen::MatrixXd data;                 // S x A, P_D(s, a)
  std::vector<Eigen::MatrixXd> encoder;  // per state: A x G, e(g | s, a)
  std::vector<Eigen::MatrixXd> policy;   // per state: G x A, pi(â | s, g)

  /// Throws std::invalid_argument unless every table is a distribution
  /// within 1e-12 and shapes agree.
  void validate() const;
  /// p(g) = sum_{s,a} P_D(s, a) e(g | s, a).
  Eigen::VectorXd prior() const;
  /// P_D(s).
  Eigen::VectorXd state_marginal() const;
  /// Test-time P(â | s) with g drawn from the prior; S x A.
  Eigen::MatrixXd test_policy() const;
  /// P_D(a | s); S x A (rows of zero-mass states are zero).
  Eigen::MatrixXd data_conditional() const;
};

/// Variables of the joints built below.
inline constexpr int kS = 0;
inline constexpr int kA = 1;
inline constexpr int kG = 2;

/// Two traffic-light states of equal mass; the data action matches the light
/// with probability 1 - epsilon. Solution 1 encodes the action index
/// (g = a) and the policy copies g. Solution 2 encodes whether the action
/// disagrees with the light (g = [i != j]) and the policy obeys the light when
/// g = 0. Bernoulli B(p) denotes probability p of the second outcome.
DiscreteWorld build_traffic_world(double epsilon, int solution);

/// P(s, a, g_e) = P_D(s, a) e(g_e | s, a), variables (S, A, G).
Joint train_joint(const DiscreteWorld& w);
/// P(s, â, g_p) = P_D(s) p(g_p) pi(â | s, g_p), variables (S, Â, G).
Joint test_joint(const DiscreteWorld& w);

struct InfoReport {
  double h_a_given_ge = 0.0;        // H(A | Ĝe)
  double i_s_a = 0.0;               // I(S, A)
  double i_s_ahat = 0.0;            // I(S, Â)
  double h_ahat_given_gp = 0.0;     // H(Â | Ĝp)
  double h_ahat_given_s = 0.0;      // H(Â | S)
  double h_a_given_s = 0.0;         // H(A | S)
  double interaction_train = 0.0;   // I(A, Ĝe, S)
  double interaction_test = 0.0;    // I(Â, Ĝp, S)
  double h_a_given_s_ge = 0.0;      // H(A | S, Ĝe); 0 under exact reconstruction
  double h_ahat_given_s_gp = 0.0;   // H(Â | S, Ĝp)
  double reconstruction_error = 0.0;  // P(Â != A) under the autoencoding model
  double h_a_ge = 0.0;              // H(A, Ĝe), joint-entropy variant
  double h_ahat_gp = 0.0;           // H(Â, Ĝp)

  bool reconstruction_ok = false;
  bool precondition_1 = false;        // H(A | Ĝe) < I(S, A)
  bool precondition_2 = false;        // H(A | Ĝe) = H(Â | Ĝp)
  bool joint_precondition_2 = false;  // H(A, Ĝe) = H(Â, Ĝp)
  bool theorem_applicable = false;    // reconstruction ok and both preconditions
  bool corollary_applicable = false;  // reconstruction ok, precondition 1, H(A | Ĝe) = 0

  // Meaningful only when the matching *_applicable flag is set.
  bool conclusion_holds = false;      // I(S, Â) < I(S, A)
  bool entropy_claim_holds = false;   // H(Â | S) > H(A | S)
  bool proof_steps_hold = false;      // interaction_train > 0, interaction_test <= 0, chain inequality
  bool corollary_holds = false;       // I(S, Â) = 0

  /// Applicable but the conclusion (or corollary) fails.
  bool violation() const;
};

inline constexpr double kTheoryTol = 1e-9;

InfoReport verify_theorem(const DiscreteWorld& w);

std::string info_csv_header();
std::string to_csv_row(const InfoReport& r);

struct SweepSummary {
  int worlds = 0;
  int excluded_reconstruction = 0;  // L_rec != 0: not asserted
  int theorem_applicable = 0;
  int corollary_applicable = 0;
  int conclusion_violations = 0;   // among theorem-applicable worlds
  int corollary_violations = 0;    // among corollary-applicable worlds
  int entropy_claim_failures = 0;  // among theorem-applicable worlds
  int proof_step_failures = 0;     // among theorem- or corollary-applicable worlds
  friend bool operator==(const SweepSummary&, const SweepSummary&) = default;
};

/// One random world: random data table, random decode maps with an encoder
/// whose support for each (s, a) lies in the decode preimage of a, and the
/// decoding policy. Roughly one world in ten gets a leaky encoder (imperfect
/// reconstruction) to exercise the exclusion path.
DiscreteWorld random_world(Rng& rng);

/// Worlds drawn from substreams "world/<i>" of `rng`.
SweepSummary random_world_sweep(int n, const Rng& rng);

}  // namespace rtc::theory
