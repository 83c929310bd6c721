#include "rtc/type_shift.hpp"

#include <doctest.h>

#include <cmath>

using namespace rtc;
using namespace rtc::theory;

namespace {

double hb(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

// I(S, X) in bits from a joint table P(s, x).
double mi_table(const Eigen::MatrixXd& p) {
  const Eigen::VectorXd ps = p.rowwise().sum();
  const Eigen::RowVectorXd px = p.colwise().sum();
  double s = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0) s += p(i, j) * std::log2(p(i, j) / (ps(i) * px(j)));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("joint entropies against hand values") {
  // independent fair bits X, Y and Z = X xor Y
  std::vector<double> p(8, 0.0);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) p[static_cast<std::size_t>(x * 4 + y * 2 + (x ^ y))] = 0.25;
  const Joint j({2, 2, 2}, p);
  CHECK(j.entropy() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(j.entropy({0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(j.mutual_information({0}, {1}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(j.conditional_mutual_information({0}, {1}, {2}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(j.interaction_information(0, 1, 2) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(j.conditional_entropy({2}, {0, 1}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(j.marginal({2, 0}).dims() == std::vector<int>{2, 2});
  CHECK(entropy_bits(Eigen::Vector4d(0.5, 0.25, 0.25, 0.0)) == doctest::Approx(1.5));
}

TEST_CASE("invalid joints are rejected") {
  CHECK_THROWS_AS(Joint({2}, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(Joint({2}, {1.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(Joint({3}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("traffic world, type encodes the action") {
  for (double eps : {0.0, 0.1, 0.25, 0.4}) {
    CAPTURE(eps);
    const DiscreteWorld w = build_traffic_world(eps, 1);
    const InfoReport r = verify_theorem(w);
    CHECK(r.reconstruction_ok);
    CHECK(r.precondition_1);
    CHECK(r.precondition_2);
    CHECK(r.theorem_applicable);
    CHECK(r.conclusion_holds);
    CHECK(std::abs(r.i_s_a - (1.0 - hb(eps))) <= 1e-12);
    CHECK(std::abs(r.i_s_ahat) <= 1e-12);
    CHECK(std::abs(r.interaction_train - (1.0 - hb(eps))) <= 1e-12);
    CHECK(std::abs(r.interaction_test) <= 1e-12);
    CHECK(std::abs(r.h_a_given_ge) <= 1e-12);
    const Eigen::MatrixXd test = w.test_policy();
    CHECK(std::abs(test(0, 1) - 0.5) <= 1e-12);
    CHECK(std::abs(test(1, 0) - 0.5) <= 1e-12);
  }
}

TEST_CASE("traffic world, type encodes disobedience") {
  for (double eps : {0.0, 0.1, 0.25, 0.4}) {
    CAPTURE(eps);
    const DiscreteWorld w = build_traffic_world(eps, 2);
    const InfoReport r = verify_theorem(w);
    const Eigen::MatrixXd test = w.test_policy(), data = w.data_conditional();
    CHECK((test - data).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(w.prior()(1) - eps) <= 1e-12);
    CHECK(r.reconstruction_ok);
    CHECK_FALSE(r.precondition_1);
    CHECK(std::abs(r.i_s_ahat - r.i_s_a) <= 1e-12);
  }
  CHECK_THROWS(build_traffic_world(0.5, 1));
  CHECK_THROWS(build_traffic_world(-0.1, 1));
  CHECK_THROWS(build_traffic_world(0.1, 3));
}

TEST_CASE("random worlds agree with a direct mutual information count") {
  const Rng root(21, "oracle");
  for (int i = 0; i < 50; ++i) {
    Rng rng = root.substream(std::to_string(i));
    const DiscreteWorld w = random_world(rng);
    const InfoReport r = verify_theorem(w);
    const Eigen::MatrixXd test = w.test_policy();
    const Eigen::VectorXd ps = w.state_marginal();
    Eigen::MatrixXd joint_test = test;
    for (int s = 0; s < w.n_states; ++s) joint_test.row(s) *= ps(s);
    CHECK(std::abs(r.i_s_a - mi_table(w.data)) <= 1e-12);
    CHECK(std::abs(r.i_s_ahat - mi_table(joint_test)) <= 1e-12);
    CHECK(std::abs(w.prior().sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("random world sweep counts") {
  const SweepSummary s = random_world_sweep(1000, Rng(7, "sweep"));
  CHECK(s.worlds == 1000);
  CHECK(s.conclusion_violations == 0);
  CHECK(s.proof_step_failures == 0);
  CHECK(s.entropy_claim_failures == 0);
  // frozen from the reference run
  CHECK(s.excluded_reconstruction == 96);
  CHECK(s.theorem_applicable == 322);
  CHECK(s.corollary_applicable == 346);
  CHECK(s.corollary_violations == 24);
  CHECK(random_world_sweep(1000, Rng(7, "sweep")) == s);
}

TEST_CASE("info report csv has one field per header column") {
  const InfoReport r = verify_theorem(build_traffic_world(0.1, 1));
  const std::string h = info_csv_header(), row = to_csv_row(r);
  CHECK(std::count(h.begin(), h.end(), ',') == std::count(row.begin(), row.end(), ','));
}
