#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/reference.hpp"

using namespace sqmean;

namespace {

Distribution two_point() {
  return Distribution::from_points({Vector::Unit(2, 0), Vector::Unit(2, 1)}, {0.25, 0.75});
}

Query coord(Eigen::Index i) {
  return Query([i](const Vector& x) { return x(i); });
}

}  // namespace

TEST(Distribution, ExactMeanExamples) {
  const auto sym = Distribution::uniform({Vector::Unit(3, 0), -Vector::Unit(3, 0)});
  EXPECT_EQ(exact_mean(sym), Vector::Zero(3));
  const Vector m = exact_mean(two_point());
  EXPECT_DOUBLE_EQ(m(0), 0.25);
  EXPECT_DOUBLE_EQ(m(1), 0.75);
}

TEST(Distribution, ValidatesWeightsAndBall) {
  EXPECT_THROW(Distribution::from_points({Vector::Unit(2, 0)}, {0.9}), std::invalid_argument);
  EXPECT_THROW(Distribution::from_points({Vector::Unit(2, 0), Vector::Unit(2, 1)}, {1.2, -0.2}), std::invalid_argument);
  EXPECT_THROW(Distribution::from_points({Vector::Unit(2, 0)}, {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(Distribution::from_points({}, {}), std::invalid_argument);
  EXPECT_THROW(Distribution::point_mass(Vector::Constant(3, 0.7), Norm::lp(3, 2.0)), std::invalid_argument);
  EXPECT_NO_THROW(Distribution::point_mass(Vector::Constant(3, 0.7), Norm::linf(3)));
  // 1 + 1e-9 slack on the ball, 1e-12 on the weights.
  EXPECT_NO_THROW(Distribution::point_mass(Vector::Unit(3, 0) * (1.0 + 5e-10), Norm::lp(3, 2.0)));
  EXPECT_NO_THROW(Distribution::from_points({Vector::Unit(2, 0), Vector::Unit(2, 1)}, {0.5, 0.5 + 5e-13}));
}

TEST(Distribution, SamplerWithoutExactCapabilityThrows) {
  const auto s = Distribution::from_sampler(2, [](Rng& rng) { return sqtest::gaussian(2, rng); });
  EXPECT_FALSE(s.has_exact_mean());
  EXPECT_THROW(exact_mean(s), std::logic_error);
  EXPECT_THROW(s.support(), std::logic_error);
}

TEST(Distribution, ExplicitDrawsFollowWeights) {
  const auto d = two_point();
  Rng rng(4);
  int first = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) first += d.draw(rng)(0) == 1.0;
  EXPECT_NEAR(first / static_cast<double>(n), 0.25, 5 * std::sqrt(0.25 * 0.75 / n));
}

TEST(Distribution, MappedTransformsSupport) {
  const auto m = two_point().mapped([](const Vector& x) { return Vector(2.0 * x); });
  EXPECT_DOUBLE_EQ(exact_mean(m)(1), 1.5);
}

TEST(StatQuery, ConstantQueryWithClampingStaysInRange) {
  for (int mode = 0; mode < 4; ++mode) {
    Perturbation p = mode == 0 ? Perturbation(HonestRandom{1})
                     : mode == 1 ? Perturbation(Empirical{50, 2})
                     : mode == 2 ? Perturbation(AdversarialSign{1.0, {}})
                                 : Perturbation(ExactAnswers{});
    OracleSession s(two_point(), Stat{0.1}, p, SessionOptions{std::nullopt, true});
    for (int i = 0; i < 20; ++i) {
      const double v = s.stat_query(Query::constant(1.0));
      EXPECT_GE(v, 0.9);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(StatQuery, AdversarialOnSymmetricPair) {
  OracleSession s(Distribution::uniform({Vector::Unit(2, 0), -Vector::Unit(2, 0)}), Stat{0.1}, AdversarialSign{});
  EXPECT_DOUBLE_EQ(s.stat_query(coord(0)), 0.1);
  OracleSession neg(Distribution::uniform({Vector::Unit(2, 0), -Vector::Unit(2, 0)}), Stat{0.1}, AdversarialSign{-1.0, {}});
  EXPECT_DOUBLE_EQ(neg.stat_query(coord(0)), -0.1);
}

TEST(StatQuery, AdversarialCallbackSeesIndexAndP) {
  std::vector<std::pair<std::size_t, double>> seen;
  AdversarialSign a{1.0, [&](std::size_t id, double p) {
                      seen.emplace_back(id, p);
                      return id % 2 ? -1.0 : 1.0;
                    }};
  OracleSession s(two_point(), Stat{0.05}, a);
  EXPECT_NEAR(s.stat_query(coord(0)), 0.30, 1e-15);
  EXPECT_NEAR(s.stat_query(coord(1)), 0.70, 1e-15);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[1].first, 1u);
  EXPECT_DOUBLE_EQ(seen[1].second, 0.75);
}

TEST(StatQuery, HonestTwoPointWithinTolerance) {
  OracleSession s(two_point(), Stat{0.05}, HonestRandom{9});
  for (int i = 0; i < 100; ++i) {
    const double v = s.stat_query(coord(0));
    EXPECT_GE(v, 0.20);
    EXPECT_LE(v, 0.30);
  }
}

TEST(StatQuery, RangeViolationIsRejected) {
  OracleSession s(two_point(), Stat{0.05}, HonestRandom{9});
  EXPECT_THROW(s.stat_query(Query([](const Vector& x) { return 3.0 * x(1); })), QueryRangeError);
  OracleSession v(two_point(), Vstat{100}, HonestRandom{9});
  EXPECT_THROW(v.vstat_query(Query([](const Vector& x) { return -x(1); })), QueryRangeError);
}

TEST(StatQuery, KindMismatchIsALogicError) {
  OracleSession s(two_point(), Stat{0.05}, HonestRandom{9});
  EXPECT_THROW(s.vstat_query(coord(0)), std::logic_error);
  OracleSession v(two_point(), Vstat{10}, HonestRandom{9});
  EXPECT_THROW(v.stat_query(coord(0)), std::logic_error);
}

TEST(VstatQuery, ToleranceBranches) {
  EXPECT_DOUBLE_EQ(vstat_tolerance(0.0, 100), 0.01);
  EXPECT_DOUBLE_EQ(vstat_tolerance(0.5, 100), 0.05);
  EXPECT_DOUBLE_EQ(vstat_tolerance(1.0, 25), 0.04);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    OracleSession s(two_point(), Vstat{100}, HonestRandom{seed});
    const double zero = s.vstat_query(Query::constant(0.0));
    EXPECT_GE(zero, -0.01);
    EXPECT_LE(zero, 0.01);
    const double half = s.vstat_query(Query([](const Vector& x) { return 0.5 + 0.0 * x(0); }));
    EXPECT_GE(half, 0.45);
    EXPECT_LE(half, 0.55);
    OracleSession t(two_point(), Vstat{25}, HonestRandom{seed});
    const double one = t.vstat_query(Query::constant(1.0));
    EXPECT_GE(one, 0.96);
    EXPECT_LE(one, 1.04);
  }
}

TEST(VstatQuery, AdversarialHitsTheContractExactly) {
  OracleSession s(two_point(), Vstat{64}, AdversarialSign{});
  const double v = s.vstat_query(coord(1));
  EXPECT_NEAR(v - 0.75, std::max(1.0 / 64, std::sqrt(0.75 * 0.25 / 64)), 1e-15);
}

TEST(QueryCount, FreshCountedAndBudgeted) {
  OracleSession s(two_point(), Stat{0.1}, HonestRandom{1}, SessionOptions{3, false});
  EXPECT_EQ(query_count(s), 0u);
  for (int i = 0; i < 3; ++i) s.stat_query(coord(0));
  EXPECT_EQ(query_count(s), 3u);
  EXPECT_EQ(*s.remaining(), 0u);
  EXPECT_THROW(s.stat_query(coord(0)), BudgetExhausted);
  EXPECT_EQ(query_count(s), 3u);
}

TEST(Oracle, DeterministicUnderSeed) {
  auto run = [](std::uint64_t seed, Perturbation p) {
    OracleSession s(two_point(), Stat{0.1}, p);
    std::vector<double> out;
    for (int i = 0; i < 30; ++i) out.push_back(s.stat_query(coord(i % 2)));
    return out;
  };
  EXPECT_EQ(run(3, HonestRandom{3}), run(3, HonestRandom{3}));
  EXPECT_NE(run(3, HonestRandom{3}), run(4, HonestRandom{4}));
  EXPECT_EQ(run(3, Empirical{100, 3}), run(3, Empirical{100, 3}));
}

TEST(Oracle, ContractHoldsOnRandomExplicitDistributions) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = sqtest::uniform_index(rng, 1, 12);
    const auto dist = sqtest::explicit_in_ball(Norm::linf(d), sqtest::uniform_index(rng, 1, 10), rng);
    const double tau = sqtest::uniform(rng, 1e-4, 0.3);
    for (int mode = 0; mode < 4; ++mode) {
      Perturbation p = mode == 0 ? Perturbation(HonestRandom{static_cast<std::uint64_t>(trial)})
                       : mode == 1 ? Perturbation(Empirical{20, static_cast<std::uint64_t>(trial)})
                       : mode == 2 ? Perturbation(AdversarialSign{trial % 2 ? 1.0 : -1.0, {}})
                                   : Perturbation(ExactAnswers{});
      OracleSession s(dist, Stat{tau}, p);
      for (std::size_t i = 0; i < d; ++i) {
        const double v = s.stat_query(coord(static_cast<Eigen::Index>(i)));
        const double exact = sqtest::ref::mean(dist)(static_cast<Eigen::Index>(i));
        EXPECT_LE(std::abs(v - exact), tau);
        if (mode == 2) EXPECT_NEAR(std::abs(v - exact), tau, 1e-15);
        if (mode == 3) EXPECT_EQ(v, exact);
      }
      EXPECT_LE(max_contract_ratio(s), 1.0);
    }
  }
}

TEST(Oracle, SamplerExpectationsUseExactPathsWhenDeclared) {
  const Vector mean = Vector::Constant(3, 0.2);
  const auto sampler = Distribution::from_sampler(
      3, [](Rng& rng) { return Vector(Vector::Constant(3, sqtest::uniform(rng, -0.2, 0.6))); }, mean);
  OracleSession s(sampler, Stat{0.01}, ExactAnswers{});
  EXPECT_DOUBLE_EQ(s.stat_query(Query::affine(Vector::Unit(3, 1))), 0.2);
  ASSERT_TRUE(s.log().back().p_exact.has_value());
  // Undeclared queries fall back to Monte Carlo: p is not logged as exact.
  const double v = s.stat_query(Query([](const Vector& x) { return x(1); }));
  EXPECT_FALSE(s.log().back().p_exact.has_value());
  EXPECT_NEAR(v, 0.2, 0.01);
}

TEST(Oracle, HoeffdingSampleSize) {
  // w^2 ln(2/delta) / (2 a^2) with w = 2, a = 0.01, delta = 1e-6.
  EXPECT_EQ(hoeffding_samples(2.0, 0.01, 1e-6), 290174u);
  EXPECT_THROW(hoeffding_samples(2.0, 0.0, 1e-6), std::invalid_argument);
}

TEST(Oracle, QueryLogCsv) {
  OracleSession s(two_point(), Stat{0.5}, AdversarialSign{});
  s.stat_query(coord(0));
  std::ostringstream out;
  write_query_log_csv(out, s);
  EXPECT_EQ(out.str(), "query_id,p_exact,v,tau\n0,0.25,0.75,0.5\n");
}

TEST(Oracle, RejectsBadParameters) {
  EXPECT_THROW(OracleSession(two_point(), Stat{0.0}, HonestRandom{}), std::invalid_argument);
  EXPECT_THROW(OracleSession(two_point(), Vstat{-1.0}, HonestRandom{}), std::invalid_argument);
  EXPECT_THROW(OracleSession(two_point(), Stat{0.1}, Empirical{0, 1}), std::invalid_argument);
}

TEST(Io, DistributionRoundTrip) {
  std::istringstream in(R"({"dim": 2, "support": [[1, 0], [0, -0.5]], "weights": [0.4, 0.6]})");
  const auto d = read_distribution_json(in, Norm::lp(2, 2.0));
  EXPECT_DOUBLE_EQ(exact_mean(d)(1), -0.3);
  std::ostringstream out;
  write_distribution_json(out, d);
  std::istringstream back(out.str());
  const auto e = read_distribution_json(back);
  EXPECT_EQ(exact_mean(e), exact_mean(d));
}

TEST(Io, DistributionErrors) {
  std::istringstream bad_json("{not json");
  EXPECT_THROW(read_distribution_json(bad_json), std::invalid_argument);
  std::istringstream bad_dim(R"({"dim": 3, "support": [[1, 0]], "weights": [1]})");
  EXPECT_THROW(read_distribution_json(bad_dim), std::invalid_argument);
  std::istringstream outside(R"({"dim": 1, "support": [[2]], "weights": [1]})");
  EXPECT_THROW(read_distribution_json(outside, Norm::lp(1, 2.0)), std::invalid_argument);
  EXPECT_THROW(load_distribution("/definitely/not/here.json"), std::runtime_error);
}

TEST(Io, WitnessRoundTrip) {
  WitnessFile w{"lp:1", {Vector::Unit(3, 0), Vector::Unit(3, 2)}};
  std::ostringstream out;
  write_witness_json(out, w);
  std::istringstream in(out.str());
  const auto r = read_witness_json(in);
  EXPECT_EQ(r.norm, "lp:1");
  ASSERT_EQ(r.vectors.size(), 2u);
  EXPECT_EQ(r.vectors[1], Vector::Unit(3, 2));
}
