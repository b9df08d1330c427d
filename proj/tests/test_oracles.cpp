#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "unipath/errors.hpp"
#include "unipath/mjp_sampler.hpp"
#include "unipath/oracles.hpp"

using namespace unipath;

namespace {

const Generator& flip() {
  static const Generator g =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 1.0}});
  return g;
}

}  // namespace

TEST_CASE("transition matrix at t = 0 is the identity") {
  Rng rng(2);
  const Generator g = testutil::random_dense_generator(4, rng);
  const auto p = transition_matrix(g, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(p[i][j] == doctest::Approx(i == j ? 1.0 : 0.0));
  CHECK_THROWS_AS(transition_matrix(g, -0.1), std::domain_error);
}

TEST_CASE("two-state symmetric chain has the closed-form solution") {
  for (double t : {0.05, 0.3, 1.0, 2.5}) {
    const auto p = transition_matrix(flip(), t);
    const double off = (1.0 - std::exp(-2.0 * t)) / 2.0;
    CHECK(p[0][1] == doctest::Approx(off).epsilon(1e-10));
    CHECK(p[1][0] == doctest::Approx(off).epsilon(1e-10));
    CHECK(p[0][0] == doctest::Approx(1.0 - off).epsilon(1e-10));
  }
}

TEST_CASE("transition matrices are row-stochastic") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Generator g = testutil::random_dense_generator(5, rng);
    for (double t : {0.1, 1.0, 10.0}) {
      const auto p = transition_matrix(g, t);
      for (int i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 5; ++j) {
          CHECK(p[i][j] >= 0.0);
          sum += p[i][j];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("semigroup property holds") {
  Rng rng(5);
  const Generator g = testutil::random_dense_generator(4, rng);
  const double s = 0.4, t = 0.9;
  const auto ps = transition_matrix(g, s);
  const auto pt = transition_matrix(g, t);
  const auto pst = transition_matrix(g, s + t);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double composed = 0.0;
      for (int k = 0; k < 4; ++k) composed += ps[i][k] * pt[k][j];
      CHECK(std::abs(composed - pst[i][j]) < 1e-8);
    }
}

TEST_CASE("posterior marginals without observations are the prior marginals") {
  Rng rng(7);
  const Generator g = testutil::random_dense_generator(3, rng);
  const InitialDistribution pi = InitialDistribution::normalized({1.0, 2.0, 3.0});
  const MjpProblem problem(g, pi, 0.0, 2.0);
  const GridPosterior post = exact_posterior_marginals(problem, {0.5, 1.7});
  for (std::size_t q = 0; q < post.times.size(); ++q) {
    const auto p = transition_matrix(g, post.times[q]);
    for (int s = 0; s < 3; ++s) {
      double expected = 0.0;
      for (int i = 0; i < 3; ++i) expected += pi[i] * p[i][s];
      CHECK(post.marginals[q][s] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("noiseless endpoint marginals satisfy the bridge identity") {
  const Generator g =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.2}, {1, 0, 0.7}});
  const int s0 = 0, sT = 1;
  const double horizon = 2.0;
  ObservationSet obs(2, {{horizon, static_cast<double>(sT), 0}}, noiseless_state_likelihood());
  const MjpProblem problem(g, InitialDistribution::point_mass(2, s0), 0.0, horizon,
                           std::move(obs));
  for (double t : {0.3, 1.0, 1.6}) {
    const GridPosterior post = exact_posterior_marginals(problem, {t});
    const auto pa = transition_matrix(g, t);
    const auto pb = transition_matrix(g, horizon - t);
    const auto pT = transition_matrix(g, horizon);
    for (int s = 0; s < 2; ++s) {
      const double bridge = pa[s0][s] * pb[s][sT] / pT[s0][sT];
      CHECK(post.marginals[0][s] == doctest::Approx(bridge).epsilon(1e-8));
    }
  }
}

TEST_CASE("marginals are invariant to inserting extra query times") {
  Rng rng(11);
  const Generator g = testutil::random_dense_generator(3, rng);
  ObservationSet obs(3, {{0.8, 1.0, 0}}, discrete_noise_likelihood(0.3, 3));
  const MjpProblem problem(g, InitialDistribution::uniform(3), 0.0, 2.0, std::move(obs));

  const GridPosterior lean = exact_posterior_marginals(problem, {0.5, 1.5});
  const GridPosterior padded = exact_posterior_marginals(problem, {0.1, 0.5, 0.9, 1.5, 1.9});
  for (int s = 0; s < 3; ++s) {
    CHECK(std::abs(lean.marginals[0][s] - padded.marginals[1][s]) < 1e-10);
    CHECK(std::abs(lean.marginals[1][s] - padded.marginals[3][s]) < 1e-10);
  }
}

TEST_CASE("rejection sampling accepts immediately when nothing moves") {
  Rng rng(13);
  const Generator g =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1e-8}, {1, 0, 1e-8}});
  const RejectionResult r = rejection_sample_endpoint(g, 0, 0, 0.0, 1.0, rng);
  CHECK(r.rejections == 0);
  CHECK(r.path.states()[0] == 0);
}

TEST_CASE("rejection acceptance rate matches the transition probability") {
  Rng rng(17);
  const Generator g =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 1.5}});
  const double expected = transition_matrix(g, 1.0)[0][1];
  const int accepted_target = 20000;
  long long attempts = 0;
  for (int i = 0; i < accepted_target; ++i)
    attempts += rejection_sample_endpoint(g, 0, 1, 0.0, 1.0, rng).rejections + 1;
  const double rate = static_cast<double>(accepted_target) / attempts;
  const double se = std::sqrt(expected * (1.0 - expected) / attempts);
  CHECK(std::abs(rate - expected) <= 3.0 * se);
}

TEST_CASE("rejection sampling reports unreachable endpoints and caps attempts") {
  Rng rng(19);
  const Generator oneway = Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}});
  CHECK_THROWS_AS(rejection_sample_endpoint(oneway, 1, 0, 0.0, 1.0, rng),
                  std::invalid_argument);
  const Generator slow =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1e-4}, {1, 0, 1.0}});
  CHECK_THROWS_AS(rejection_sample_endpoint(slow, 0, 1, 0.0, 0.01, rng, 50),
                  BudgetExceededError);
}

TEST_CASE("expected dwell by symmetry and conservation") {
  const MjpProblem problem(flip(), InitialDistribution::uniform(2), 0.0, 3.0);
  const SufficientStats st = exact_sufficient_stats(problem, 0.01);
  CHECK(st.dwell[0] == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(st.dwell[1] == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(st.total_dwell() == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("dwell integration converges at second order") {
  Rng rng(23);
  const Generator g = testutil::random_dense_generator(3, rng);
  ObservationSet obs(3, {{0.9, 2.0, 0}, {1.7, 0.0, 0}}, discrete_noise_likelihood(0.25, 3));
  const MjpProblem problem(g, InitialDistribution::uniform(3), 0.0, 2.0, std::move(obs));

  const SufficientStats s0 = exact_sufficient_stats(problem, 0.08);
  const SufficientStats s1 = exact_sufficient_stats(problem, 0.04);
  const SufficientStats s2 = exact_sufficient_stats(problem, 0.02);
  // Richardson reference from the two finest grids (second-order rule)
  double d0 = 0.0, d1 = 0.0;
  for (int s = 0; s < 3; ++s) {
    const double ref = (4.0 * s2.dwell[s] - s1.dwell[s]) / 3.0;
    d0 += std::abs(s0.dwell[s] - ref);
    d1 += std::abs(s1.dwell[s] - ref);
  }
  CHECK(d0 / d1 > 2.0);
  CHECK(d0 / d1 < 8.0);
}

TEST_CASE("expected transition counts match the rate-times-occupancy identity") {
  // with no observations E[N(i->j)] = q(i->j) * integral of P(S(t) = i)
  Rng rng(29);
  const Generator g = testutil::random_dense_generator(3, rng);
  const InitialDistribution pi = InitialDistribution::uniform(3);
  const MjpProblem problem(g, pi, 0.0, 2.0);
  const SufficientStats st = exact_sufficient_stats(problem, 0.005);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(st.count(i, j) == doctest::Approx(g.rate(i, j) * st.dwell[i]).epsilon(1e-4));
    }
}

TEST_CASE("accepted rejection paths match the exact bridge marginals") {
  Rng rng(31);
  const Generator g = testutil::random_dense_generator(3, rng);
  const int s0 = 0, sT = 2;
  const double horizon = 1.5;

  ObservationSet obs(3, {{horizon, static_cast<double>(sT), 0}}, noiseless_state_likelihood());
  const MjpProblem problem(g, InitialDistribution::point_mass(3, s0), 0.0, horizon,
                           std::move(obs));
  const GridPosterior exact = exact_posterior_marginals(problem, {horizon / 2.0});

  std::vector<double> freq(3, 0.0);
  const int accepted = 20000;
  for (int i = 0; i < accepted; ++i)
    freq[rejection_sample_endpoint(g, s0, sT, 0.0, horizon, rng).path.state_at(horizon / 2.0)] +=
        1.0 / accepted;
  CHECK(testutil::tv_distance(freq, exact.marginals[0]) < 0.02);
}
