#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "unipath/errors.hpp"
#include "unipath/generator.hpp"
#include "unipath/logprob.hpp"
#include "unipath/observations.hpp"
#include "unipath/path.hpp"
#include "unipath/stats.hpp"

using namespace unipath;

TEST_CASE("generator rows sum to zero and the diagonal recovers leave rates") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Generator g = trial % 2 == 0 ? testutil::random_dense_generator(4, rng)
                                       : testutil::random_sparse_generator(5, rng);
    for (int i = 0; i < g.size(); ++i) {
      double sum = 0.0;
      for (int j = 0; j < g.size(); ++j) sum += g.rate(i, j);
      CHECK(std::abs(sum) <= 1e-12);
      CHECK(g.rate(i, i) == -g.leave_rate(i));
    }
  }
}

TEST_CASE("generator construction rejects bad entries") {
  CHECK_THROWS_AS(Generator::dense(2, std::vector<RateEntry>{{0, 0, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Generator::dense(2, std::vector<RateEntry>{{0, 1, -1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Generator::dense(2, std::vector<RateEntry>{{0, 2, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      Generator::sparse(2, std::vector<RateEntry>{{0, 1, 1.0}, {0, 1, 2.0}}),
      std::invalid_argument);
}

TEST_CASE("build_kernel on the zero generator is the identity") {
  const Generator g = Generator::zero(2);
  const TransitionKernel b = build_kernel(g, 1.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(b.at(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("build_kernel matches direct arithmetic") {
  // symmetric unit-rate flip with omega = 2
  const Generator flip =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 1.0}});
  const TransitionKernel b = build_kernel(flip, 2.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(b.at(i, j) == doctest::Approx(0.5).epsilon(1e-14));

  // leave rates (1, 3) with omega = 3: diagonal (2/3, 0), rows sum to 1
  const Generator skew =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 3.0}});
  const TransitionKernel b2 = build_kernel(skew, 3.0);
  CHECK(b2.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(b2.at(1, 1) == doctest::Approx(0.0));
  for (int i = 0; i < 2; ++i)
    CHECK(b2.at(i, 0) + b2.at(i, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("build_kernel rejects an omega below the max leave rate") {
  const Generator skew =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 3.0}});
  CHECK_THROWS_AS(build_kernel(skew, 2.9), InvalidPolicyError);
}

TEST_CASE("un-building a kernel recovers the generator entrywise") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Generator g = trial % 2 == 0 ? testutil::random_dense_generator(5, rng)
                                       : testutil::random_sparse_generator(6, rng);
    const double omega = 2.0 * g.max_leave_rate() + 0.1;
    const TransitionKernel b = build_kernel(g, omega);
    for (int i = 0; i < g.size(); ++i)
      for (int j = 0; j < g.size(); ++j) {
        const double recovered = omega * (b.at(i, j) - (i == j ? 1.0 : 0.0));
        CHECK(recovered == doctest::Approx(g.rate(i, j)).epsilon(1e-12));
      }
  }
}

TEST_CASE("state_at follows the right-continuous convention") {
  const MjpPath constant = MjpPath::constant(0.0, 1.0, 2);
  CHECK(constant.state_at(0.0) == 2);
  CHECK(constant.state_at(0.5) == 2);
  CHECK(constant.state_at(1.0) == 2);

  const MjpPath path(0.0, 1.0, {0.4}, {0, 1});
  CHECK(path.state_at(0.4) == 1);
  CHECK(path.state_at(0.39999) == 0);
  CHECK(path.state_at(1.0) == 1);
  CHECK_THROWS_AS(path.state_at(-0.01), std::domain_error);
  CHECK_THROWS_AS(path.state_at(1.01), std::domain_error);
}

TEST_CASE("state_at at each jump time returns the post-jump state") {
  Rng rng(3);
  const MjpPath path = testutil::random_path(4, 0.0, 2.0, 12, rng);
  for (int i = 0; i < path.jump_count(); ++i)
    CHECK(path.state_at(path.jump_times()[i]) == path.states()[i + 1]);
}

TEST_CASE("path construction rejects invalid layouts") {
  CHECK_THROWS_AS(MjpPath(0.0, 1.0, {0.5, 0.5}, {0, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(MjpPath(0.0, 1.0, {0.5}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(MjpPath(0.0, 1.0, {1.0}, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(MjpPath(0.0, 1.0, {0.0}, {0, 1}), std::invalid_argument);
  CHECK_NOTHROW(UniformizedPath(0.0, 1.0, {0.5}, {0, 0}, 2.0));
}

TEST_CASE("path_log_density matches hand computations") {
  // pure survival: leave rate 1, unit interval, point-mass start
  const Generator g =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 1.0}});
  const InitialDistribution point = InitialDistribution::point_mass(2, 0);
  CHECK(path_log_density(g, point, MjpPath::constant(0.0, 1.0, 0)) ==
        doctest::Approx(-1.0).epsilon(1e-14));

  // one jump: log(0.5) + log q(0->1) - leave(0)*0.4 - leave(1)*0.6
  const Generator g2 =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 2.0}, {1, 0, 3.0}});
  const InitialDistribution uniform = InitialDistribution::uniform(2);
  const MjpPath jump(0.0, 1.0, {0.4}, {0, 1});
  const double expected = std::log(0.5) + std::log(2.0) - 2.0 * 0.4 - 3.0 * 0.6;
  CHECK(path_log_density(g2, uniform, jump) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("impossible jumps and zero initial mass score log-zero") {
  const Generator g = Generator::dense(2, std::vector<RateEntry>{{1, 0, 1.0}});
  const InitialDistribution uniform = InitialDistribution::uniform(2);
  CHECK(is_log_zero(path_log_density(g, uniform, MjpPath(0.0, 1.0, {0.5}, {0, 1}))));
  const InitialDistribution point = InitialDistribution::point_mass(2, 1);
  CHECK(is_log_zero(path_log_density(g, point, MjpPath::constant(0.0, 1.0, 0))));
}

TEST_CASE("sufficient statistics read off the path") {
  const SufficientStats constant = sufficient_stats(MjpPath::constant(0.0, 5.0, 0), 3);
  CHECK(constant.dwell[0] == doctest::Approx(5.0));
  CHECK(constant.dwell[1] == 0.0);
  CHECK(constant.total_count() == 0.0);

  const SufficientStats one = sufficient_stats(MjpPath(0.0, 1.0, {0.4}, {0, 1}), 2);
  CHECK(one.dwell[0] == doctest::Approx(0.4));
  CHECK(one.dwell[1] == doctest::Approx(0.6));
  CHECK(one.count(0, 1) == 1.0);
  CHECK(one.count(1, 0) == 0.0);
}

TEST_CASE("dwell times sum to the interval length") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const MjpPath path = testutil::random_path(5, 1.0, 4.0, 10, rng);
    const SufficientStats st = sufficient_stats(path, 5);
    CHECK(st.total_dwell() == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(st.total_count() == doctest::Approx(path.jump_count()));
  }
}

TEST_CASE("initial distribution validation") {
  CHECK_THROWS_AS(InitialDistribution({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(InitialDistribution({-0.5, 1.5}), std::invalid_argument);
  CHECK_NOTHROW(InitialDistribution({0.25, 0.75}));
  const InitialDistribution norm = InitialDistribution::normalized({2.0, 6.0});
  CHECK(norm[0] == doctest::Approx(0.25));
  CHECK(norm.sample(0.1) == 0);
  CHECK(norm.sample(0.9) == 1);
}

TEST_CASE("uniformization policy requires a strict multiplier") {
  CHECK_THROWS_AS(UniformizationPolicy(1.0), InvalidPolicyError);
  CHECK_THROWS_AS(UniformizationPolicy(0.5), InvalidPolicyError);
  const Generator g =
      Generator::dense(2, std::vector<RateEntry>{{0, 1, 1.0}, {1, 0, 3.0}});
  CHECK(UniformizationPolicy().omega_for(g) == doctest::Approx(6.0));
  CHECK(UniformizationPolicy(1.5).omega_for(g) == doctest::Approx(4.5));
}

TEST_CASE("observation sets validate and sort") {
  auto model = noiseless_state_likelihood();
  std::vector<Observation> obs{{0.7, 1.0, 0}, {0.2, 0.0, 0}};
  const ObservationSet set(2, obs, model);
  CHECK(set.all()[0].time == 0.2);
  CHECK(set.likelihood(1, set.all()[1]) == 1.0);
  CHECK(set.likelihood(0, set.all()[1]) == 0.0);

  // payload no state can emit
  CHECK_THROWS_AS(ObservationSet(2, {{0.5, 7.0, 0}}, model), std::invalid_argument);
}

TEST_CASE("kernel identity and sampling behave") {
  const TransitionKernel id = TransitionKernel::identity(3);
  CHECK(id.sample_row(1, 0.99) == 1);
  std::vector<double> in{0.2, 0.3, 0.5};
  std::vector<double> out(3);
  id.forward_apply(in, out);
  for (int i = 0; i < 3; ++i) CHECK(out[i] == in[i]);

  CHECK_THROWS_AS(
      TransitionKernel::from_matrix({{0.5, 0.4}, {0.5, 0.5}}), std::invalid_argument);
}
