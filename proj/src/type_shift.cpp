#include "rtc/type_shift.hpp"

#include "rtc/text_format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rtc::theory {
namespace {

constexpr double kRowTol = 1e-12;

double plogp_sum(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

std::vector<int> join(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  for (int v : b) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

bool is_distribution(const Eigen::MatrixXd& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    if ((rows.row(r).array() < 0.0).any()) return false;
    if (std::abs(rows.row(r).sum() - 1.0) > kRowTol) return false;
  }
  return true;
}

/// Random point in the simplex over `n` entries: exponential spacings.
Eigen::VectorXd random_simplex(Rng& rng, int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    w(i) = -std::log(u);
  }
  return w / w.sum();
}

}  // namespace

Joint::Joint(std::vector<int> dims, std::vector<double> p) : dims_(std::move(dims)), p_(std::move(p)) {
  std::size_t n = 1;
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("Joint: variable with no outcomes");
    n *= static_cast<std::size_t>(d);
  }
  if (n != p_.size()) throw std::invalid_argument("Joint: table size does not match dims");
  for (double v : p_) {
    if (!(v >= 0.0)) throw std::invalid_argument("Joint: negative or NaN probability");
  }
  if (std::abs(total() - 1.0) > 1e-9) throw std::invalid_argument("Joint: probabilities do not sum to 1");
}

double Joint::total() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

Joint Joint::marginal(const std::vector<int>& vars) const {
  std::vector<int> out_dims;
  for (int v : vars) {
    if (v < 0 || v >= variables()) throw std::invalid_argument("Joint::marginal: bad variable");
    out_dims.push_back(dims_[static_cast<std::size_t>(v)]);
  }
  std::size_t out_n = 1;
  for (int d : out_dims) out_n *= static_cast<std::size_t>(d);
  std::vector<double> out(out_n, 0.0);
  std::vector<int> idx(dims_.size(), 0);
  for (double v : p_) {
    std::size_t o = 0;
    for (int var : vars) o = o * static_cast<std::size_t>(dims_[static_cast<std::size_t>(var)]) + static_cast<std::size_t>(idx[static_cast<std::size_t>(var)]);
    out[o] += v;
    for (int k = variables() - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < dims_[static_cast<std::size_t>(k)]) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  Joint j;
  j.dims_ = std::move(out_dims);
  j.p_ = std::move(out);
  return j;
}

double Joint::entropy(const std::vector<int>& vars) const {
  if (vars.empty()) return 0.0;
  return plogp_sum(marginal(vars).p_);
}

double Joint::entropy() const { return plogp_sum(p_); }

double Joint::conditional_entropy(const std::vector<int>& x, const std::vector<int>& given) const {
  return entropy(join(x, given)) - entropy(given);
}

double Joint::mutual_information(const std::vector<int>& x, const std::vector<int>& y) const {
  return entropy(x) + entropy(y) - entropy(join(x, y));
}

double Joint::conditional_mutual_information(const std::vector<int>& x, const std::vector<int>& y,
                                             const std::vector<int>& given) const {
  return entropy(join(x, given)) + entropy(join(y, given)) - entropy(join(join(x, y), given)) - entropy(given);
}

double Joint::interaction_information(int x, int y, int z) const {
  return mutual_information({x}, {y}) - conditional_mutual_information({x}, {y}, {z});
}

double entropy_bits(const Eigen::VectorXd& p) {
  return plogp_sum(std::vector<double>(p.data(), p.data() + p.size()));
}

// ---------------------------------------------------------------------------

void DiscreteWorld::validate() const {
  if (n_states < 1 || n_actions < 1 || n_latents < 1) throw std::invalid_argument("world: empty variable");
  if (data.rows() != n_states || data.cols() != n_actions) throw std::invalid_argument("world: data shape");
  if ((data.array() < 0.0).any() || std::abs(data.sum() - 1.0) > kRowTol) {
    throw std::invalid_argument("world: data table is not a distribution");
  }
  if (encoder.size() != static_cast<std::size_t>(n_states) || policy.size() != static_cast<std::size_t>(n_states)) {
    throw std::invalid_argument("world: one encoder and policy table per state required");
  }
  for (int s = 0; s < n_states; ++s) {
    const auto& e = encoder[static_cast<std::size_t>(s)];
    const auto& p = policy[static_cast<std::size_t>(s)];
    if (e.rows() != n_actions || e.cols() != n_latents) throw std::invalid_argument("world: encoder shape");
    if (p.rows() != n_latents || p.cols() != n_actions) throw std::invalid_argument("world: policy shape");
    if (!is_distribution(e)) throw std::invalid_argument("world: encoder row is not a distribution");
    if (!is_distribution(p)) throw std::invalid_argument("world: policy row is not a distribution");
  }
}

Eigen::VectorXd DiscreteWorld::prior() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_latents);
  for (int s = 0; s < n_states; ++s) {
    g += (data.row(s) * encoder[static_cast<std::size_t>(s)]).transpose();
  }
  return g;
}

Eigen::VectorXd DiscreteWorld::state_marginal() const { return data.rowwise().sum(); }

Eigen::MatrixXd DiscreteWorld::test_policy() const {
  const Eigen::VectorXd g = prior();
  Eigen::MatrixXd out(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) out.row(s) = g.transpose() * policy[static_cast<std::size_t>(s)];
  return out;
}

Eigen::MatrixXd DiscreteWorld::data_conditional() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    const double m = data.row(s).sum();
    if (m > 0.0) out.row(s) = data.row(s) / m;
  }
  return out;
}

DiscreteWorld build_traffic_world(double epsilon, int solution) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in [0, 0.5)");
  if (solution != 1 && solution != 2) throw std::invalid_argument("solution must be 1 or 2");
  DiscreteWorld w;
  w.n_states = 2;
  w.n_actions = 2;
  w.n_latents = 2;
  w.data.resize(2, 2);
  w.data << 0.5 * (1.0 - epsilon), 0.5 * epsilon, 0.5 * epsilon, 0.5 * (1.0 - epsilon);
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
    for (int j = 0; j < 2; ++j) {
      if (solution == 1) {
        e(j, j) = 1.0;  // g = a
        p(j, j) = 1.0;  // â = g
      } else {
        e(j, i != j ? 1 : 0) = 1.0;  // g = [i != j]
        p(j, j == 0 ? i : 1 - i) = 1.0;  // g = 0 -> a_i, g = 1 -> the other action
      }
    }
    w.encoder.push_back(e);
    w.policy.push_back(p);
  }
  w.validate();
  return w;
}

Joint train_joint(const DiscreteWorld& w) {
  w.validate();
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(w.n_states * w.n_actions * w.n_latents));
  for (int s = 0; s < w.n_states; ++s) {
    for (int a = 0; a < w.n_actions; ++a) {
      for (int g = 0; g < w.n_latents; ++g) p.push_back(w.data(s, a) * w.encoder[static_cast<std::size_t>(s)](a, g));
    }
  }
  return Joint({w.n_states, w.n_actions, w.n_latents}, std::move(p));
}

Joint test_joint(const DiscreteWorld& w) {
  w.validate();
  const Eigen::VectorXd ps = w.state_marginal();
  const Eigen::VectorXd pg = w.prior();
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(w.n_states * w.n_actions * w.n_latents));
  for (int s = 0; s < w.n_states; ++s) {
    for (int a = 0; a < w.n_actions; ++a) {
      for (int g = 0; g < w.n_latents; ++g) p.push_back(ps(s) * pg(g) * w.policy[static_cast<std::size_t>(s)](g, a));
    }
  }
  return Joint({w.n_states, w.n_actions, w.n_latents}, std::move(p));
}

bool InfoReport::violation() const {
  return (theorem_applicable && !conclusion_holds) || (corollary_applicable && !corollary_holds);
}

InfoReport verify_theorem(const DiscreteWorld& w) {
  const Joint tr = train_joint(w);
  const Joint te = test_joint(w);
  InfoReport r;
  r.h_a_given_ge = tr.conditional_entropy({kA}, {kG});
  r.i_s_a = tr.mutual_information({kS}, {kA});
  r.h_a_given_s = tr.conditional_entropy({kA}, {kS});
  r.interaction_train = tr.interaction_information(kS, kA, kG);
  r.h_a_given_s_ge = tr.conditional_entropy({kA}, {kS, kG});
  r.h_a_ge = tr.entropy({kA, kG});

  r.i_s_ahat = te.mutual_information({kS}, {kA});
  r.h_ahat_given_gp = te.conditional_entropy({kA}, {kG});
  r.h_ahat_given_s = te.conditional_entropy({kA}, {kS});
  r.interaction_test = te.interaction_information(kS, kA, kG);
  r.h_ahat_given_s_gp = te.conditional_entropy({kA}, {kS, kG});
  r.h_ahat_gp = te.entropy({kA, kG});

  for (int s = 0; s < w.n_states; ++s) {
    const auto& e = w.encoder[static_cast<std::size_t>(s)];
    const auto& pi = w.policy[static_cast<std::size_t>(s)];
    for (int a = 0; a < w.n_actions; ++a) {
      for (int g = 0; g < w.n_latents; ++g) r.reconstruction_error += w.data(s, a) * e(a, g) * (1.0 - pi(g, a));
    }
  }

  r.reconstruction_ok = r.h_a_given_s_ge <= kTheoryTol && r.reconstruction_error <= kTheoryTol;
  r.precondition_1 = r.h_a_given_ge < r.i_s_a - kTheoryTol;
  r.precondition_2 = std::abs(r.h_a_given_ge - r.h_ahat_given_gp) <= kTheoryTol;
  r.joint_precondition_2 = std::abs(r.h_a_ge - r.h_ahat_gp) <= kTheoryTol;
  r.theorem_applicable = r.reconstruction_ok && r.precondition_1 && r.precondition_2;
  r.corollary_applicable = r.reconstruction_ok && r.precondition_1 && r.h_a_given_ge <= kTheoryTol;

  r.conclusion_holds = r.i_s_ahat < r.i_s_a;
  r.entropy_claim_holds = r.h_ahat_given_s > r.h_a_given_s;
  const bool chain = r.i_s_ahat - r.h_ahat_given_gp <= kTheoryTol && 0.0 < r.i_s_a - r.h_a_given_ge;
  r.proof_steps_hold = r.interaction_train > kTheoryTol && r.interaction_test <= kTheoryTol && chain;
  r.corollary_holds = std::abs(r.i_s_ahat) <= kTheoryTol;
  return r;
}

std::string info_csv_header() {
  return "h_a_given_ge,i_s_a,i_s_ahat,h_ahat_given_gp,h_ahat_given_s,h_a_given_s,interaction_train,"
         "interaction_test,h_a_given_s_ge,h_ahat_given_s_gp,reconstruction_error,h_a_ge,h_ahat_gp,"
         "reconstruction_ok,precondition_1,precondition_2,joint_precondition_2,theorem_applicable,"
         "corollary_applicable,conclusion_holds,entropy_claim_holds,proof_steps_hold,corollary_holds\n";
}

std::string to_csv_row(const InfoReport& r) {
  std::string s;
  for (double v : {r.h_a_given_ge, r.i_s_a, r.i_s_ahat, r.h_ahat_given_gp, r.h_ahat_given_s, r.h_a_given_s,
                   r.interaction_train, r.interaction_test, r.h_a_given_s_ge, r.h_ahat_given_s_gp,
                   r.reconstruction_error, r.h_a_ge, r.h_ahat_gp}) {
    s += format_double(v) + ",";
  }
  const bool flags[] = {r.reconstruction_ok, r.precondition_1, r.precondition_2, r.joint_precondition_2,
                        r.theorem_applicable, r.corollary_applicable, r.conclusion_holds, r.entropy_claim_holds,
                        r.proof_steps_hold, r.corollary_holds};
  for (std::size_t i = 0; i < std::size(flags); ++i) {
    s += flags[i] ? "true" : "false";
    s += i + 1 < std::size(flags) ? "," : "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------

DiscreteWorld random_world(Rng& rng) {
  DiscreteWorld w;
  w.n_states = 2 + static_cast<int>(rng.below(3));
  w.n_actions = 2 + static_cast<int>(rng.below(2));
  w.n_latents = w.n_actions + static_cast<int>(rng.below(3));
  const int family = static_cast<int>(rng.below(3));

  // Data table with some structural zeros.
  w.data.resize(w.n_states, w.n_actions);
  for (int s = 0; s < w.n_states; ++s) {
    for (int a = 0; a < w.n_actions; ++a) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      w.data(s, a) = rng.uniform() < 0.25 ? 0.0 : -std::log(u);
    }
  }
  if (w.data.sum() <= 0.0) w.data(0, 0) = 1.0;
  w.data /= w.data.sum();

  // decode[s][g]: the action the policy plays for type g in state s. Every
  // action has at least one preimage.
  auto surjection = [&]() {
    std::vector<int> d(static_cast<std::size_t>(w.n_latents));
    std::vector<int> perm(static_cast<std::size_t>(w.n_latents));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
    for (int g = 0; g < w.n_latents; ++g) {
      d[static_cast<std::size_t>(perm[static_cast<std::size_t>(g)])] =
          g < w.n_actions ? g : static_cast<int>(rng.below(static_cast<std::uint64_t>(w.n_actions)));
    }
    return d;
  };
  std::vector<std::vector<int>> decode(static_cast<std::size_t>(w.n_states));
  const std::vector<int> shared = surjection();
  for (int s = 0; s < w.n_states; ++s) {
    auto& d = decode[static_cast<std::size_t>(s)];
    if (family == 0) {
      d = shared;
    } else if (family == 1) {
      d = surjection();
    } else {
      d.resize(static_cast<std::size_t>(w.n_latents));
      for (int g = 0; g < w.n_latents; ++g) d[static_cast<std::size_t>(g)] = (g + s) % w.n_actions;
    }
  }

  const bool leaky = rng.uniform() < 0.1;
  for (int s = 0; s < w.n_states; ++s) {
    const auto& d = decode[static_cast<std::size_t>(s)];
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(w.n_actions, w.n_latents);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(w.n_latents, w.n_actions);
    for (int g = 0; g < w.n_latents; ++g) pi(g, d[static_cast<std::size_t>(g)]) = 1.0;
    for (int a = 0; a < w.n_actions; ++a) {
      std::vector<int> pre;
      for (int g = 0; g < w.n_latents; ++g) {
        if (d[static_cast<std::size_t>(g)] == a) pre.push_back(g);
      }
      if (rng.uniform() < 0.4) {
        e(a, pre[static_cast<std::size_t>(rng.below(pre.size()))]) = 1.0;
      } else {
        const Eigen::VectorXd wts = random_simplex(rng, static_cast<int>(pre.size()));
        for (std::size_t k = 0; k < pre.size(); ++k) e(a, pre[k]) = wts(static_cast<Eigen::Index>(k));
      }
      if (leaky) {
        int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(w.n_latents)));
        while (d[static_cast<std::size_t>(other)] == a) other = (other + 1) % w.n_latents;
        e.row(a) *= 0.8;
        e(a, other) += 0.2;
      }
    }
    w.encoder.push_back(e);
    w.policy.push_back(pi);
  }
  w.validate();
  return w;
}

SweepSummary random_world_sweep(int n, const Rng& rng) {
  if (n < 1) throw std::invalid_argument("sweep needs n >= 1");
  SweepSummary sum;
  for (int i = 0; i < n; ++i) {
    Rng r = rng.substream("world/" + std::to_string(i));
    const InfoReport rep = verify_theorem(random_world(r));
    ++sum.worlds;
    if (!rep.reconstruction_ok) {
      ++sum.excluded_reconstruction;
      continue;
    }
    if (rep.theorem_applicable) {
      ++sum.theorem_applicable;
      if (!rep.conclusion_holds) ++sum.conclusion_violations;
      if (!rep.entropy_claim_holds) ++sum.entropy_claim_failures;
    }
    if (rep.corollary_applicable) {
      ++sum.corollary_applicable;
      if (!rep.corollary_holds) ++sum.corollary_violations;
    }
    if ((rep.theorem_applicable || rep.corollary_applicable) && !rep.proof_steps_hold) ++sum.proof_step_failures;
  }
  return sum;
}

}  // namespace rtc::theory
