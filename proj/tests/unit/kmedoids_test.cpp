#include <gtest/gtest.h>

#include "ccsd/kmedoids.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using ccsd::Matrix;

namespace {

Matrix random_dissimilarity(int n, synth::Rng& rng) {
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rng.next_range(0.0, 4.0);
  return d;
}

TEST(KMedoids, EveryPointItsOwnMedoid) {
  synth::Rng rng(5);
  const Matrix d = random_dissimilarity(6, rng);
  const auto res = ccsd::kmedoids(d, 6, 0);
  EXPECT_EQ(res.objective, 0.0);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(res.medoids[static_cast<std::size_t>(i)], i);
}

TEST(KMedoids, TwoBlobsPerfectSplit) {
  // within-cluster distance 0, across 1
  Matrix d = Matrix::Zero(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if ((i < 3) != (j < 3)) d(i, j) = 1.0;
  const auto res = ccsd::kmedoids(d, 2, 42);
  EXPECT_EQ(res.objective, 0.0);
  EXPECT_EQ(res.assignment[0], res.assignment[1]);
  EXPECT_EQ(res.assignment[0], res.assignment[2]);
  EXPECT_EQ(res.assignment[3], res.assignment[4]);
  EXPECT_EQ(res.assignment[3], res.assignment[5]);
  EXPECT_NE(res.assignment[0], res.assignment[3]);
}

TEST(KMedoids, ExhaustiveOracleBestOfSeeds) {
  synth::Rng rng(9);
  int hits = 0;
  for (int t = 0; t < 50; ++t) {
    const int n = 5 + static_cast<int>(rng.next_below(4));  // 5..8
    const int k = 1 + static_cast<int>(rng.next_below(3));  // 1..3
    const Matrix d = random_dissimilarity(n, rng);
    const double optimum = oracles::kmedoids_exhaustive(d, k);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      best = std::min(best, ccsd::kmedoids(d, k, seed).objective);
    if (std::abs(best - optimum) < 1e-9) ++hits;
  }
  // local search with restarts may rarely miss; demand a strong majority
  EXPECT_GE(hits, 45);
}

TEST(KMedoids, DeterministicPerSeed) {
  synth::Rng rng(13);
  const Matrix d = random_dissimilarity(9, rng);
  const auto a = ccsd::kmedoids(d, 3, 7);
  const auto b = ccsd::kmedoids(d, 3, 7);
  EXPECT_EQ(a.medoids, b.medoids);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(KMedoids, InvalidInputs) {
  synth::Rng rng(17);
  const Matrix d = random_dissimilarity(4, rng);
  EXPECT_THROW(ccsd::kmedoids(d, 5, 0), ccsd::DataError);
  EXPECT_THROW(ccsd::kmedoids(d, 0, 0), ccsd::DataError);
  EXPECT_THROW(ccsd::kmedoids(Matrix::Zero(2, 3), 1, 0), ccsd::DataError);
}

}  // namespace
