// Copyright 2026 The pdsgdm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pdsgdm/compression.hpp"

namespace pdsgdm::compression {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double residual(const Vector& x, const Vector& q) { return (x - q).squaredNorm(); }

TEST(Compress, IdentityIsExact) {
  const Vector x = vec({3, 4});
  const Compressed c = compress(CompressorSpec(Kind::kIdentity, 2), x);
  EXPECT_EQ(c.q, x);
  EXPECT_EQ(c.bits, 128u);
}

TEST(Compress, TopOneKeepsLargest) {
  const Vector x = vec({3, 4});
  const Compressed c = compress(CompressorSpec(Kind::kTopK, 2, 1), x);
  EXPECT_EQ(c.q, vec({0, 4}));
  EXPECT_DOUBLE_EQ(residual(x, c.q), 9.0);
  EXPECT_LE(residual(x, c.q), 0.5 * 25.0);
  EXPECT_EQ(c.bits, 1u * (64 + 1));
}

TEST(Compress, ScaledSignHitsEqualityCase) {
  const Vector x = vec({3, 4});
  const Compressed c = compress(CompressorSpec(Kind::kScaledSign, 2), x);
  EXPECT_EQ(c.q, vec({3.5, 3.5}));
  EXPECT_DOUBLE_EQ(residual(x, c.q), 0.5);
  // Sharp bound for this x: (1 - ||x||_1^2 / (d ||x||_2^2)) ||x||_2^2.
  EXPECT_DOUBLE_EQ((1.0 - 49.0 / 50.0) * 25.0, 0.5);
  EXPECT_EQ(c.bits, 2u + 64u);
}

TEST(Compress, ScaledSignMapsZeroToPositive) {
  const Compressed c = compress(CompressorSpec(Kind::kScaledSign, 3), vec({0, -3, 3}));
  EXPECT_EQ(c.q, vec({2, -2, 2}));
}

TEST(Compress, TopKBreaksTiesByLowestIndex) {
  const Compressed c = compress(CompressorSpec(Kind::kTopK, 4, 2), vec({1, -2, 2, 2}));
  EXPECT_EQ(c.q, vec({0, -2, 2, 0}));
}

TEST(Compress, TopKBitsUseIndexWidth) {
  EXPECT_EQ(CompressorSpec(Kind::kTopK, 1000, 10).message_bits(), 10u * (64 + 10));
  EXPECT_EQ(CompressorSpec(Kind::kTopK, 1024, 10).message_bits(), 10u * (64 + 10));
  EXPECT_EQ(CompressorSpec(Kind::kTopK, 1025, 10).message_bits(), 10u * (64 + 11));
  EXPECT_EQ(CompressorSpec(Kind::kTopK, 1, 1).message_bits(), 64u);
}

TEST(Compress, RandomKKeepsExactlyKCoordinates) {
  Rng rng(3);
  const CompressorSpec spec(Kind::kRandomK, 10, 3);
  const Vector x = Vector::LinSpaced(10, 1, 10);
  const Compressed c = compress(spec, x, &rng);
  int kept = 0;
  for (int i = 0; i < 10; ++i) {
    if (c.q(i) != 0.0) {
      ++kept;
      EXPECT_EQ(c.q(i), x(i));
    }
  }
  EXPECT_EQ(kept, 3);
  EXPECT_EQ(c.bits, 3u * 64 + 64);
}

TEST(Compress, RandomKNeedsGenerator) {
  EXPECT_THROW(compress(CompressorSpec(Kind::kRandomK, 4, 2), Vector::Ones(4)), Error);
}

TEST(Compress, ErrorsOnBadInput) {
  EXPECT_THROW(CompressorSpec(Kind::kTopK, 4, 0), ParameterError);
  EXPECT_THROW(CompressorSpec(Kind::kTopK, 4, 5), ParameterError);
  EXPECT_THROW(CompressorSpec(Kind::kRandomK, 4, 5), ParameterError);
  EXPECT_THROW(CompressorSpec(Kind::kIdentity, 0), ParameterError);
  EXPECT_THROW(compress(CompressorSpec(Kind::kIdentity, 3), Vector::Ones(2)), ShapeError);
  Vector bad = Vector::Ones(3);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(compress(CompressorSpec(Kind::kScaledSign, 3), bad), NumericError);
  bad(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(compress(CompressorSpec(Kind::kTopK, 3, 1), bad), NumericError);
}

TEST(Compress, DeltaBounds) {
  EXPECT_DOUBLE_EQ(CompressorSpec(Kind::kIdentity, 7).delta_bound(), 1.0);
  EXPECT_DOUBLE_EQ(CompressorSpec(Kind::kScaledSign, 8).delta_bound(), 1.0 / 8);
  EXPECT_DOUBLE_EQ(CompressorSpec(Kind::kTopK, 10, 5).delta_bound(), 0.5);
  const CompressorSpec rk(Kind::kRandomK, 10, 2);
  EXPECT_DOUBLE_EQ(rk.delta_bound(), 0.2);
  EXPECT_TRUE(rk.expectation_only());
  EXPECT_FALSE(CompressorSpec(Kind::kTopK, 10, 2).expectation_only());
}

TEST(Compress, ZeroMapsToZero) {
  Rng rng(1);
  for (const CompressorSpec& spec :
       {CompressorSpec(Kind::kIdentity, 5), CompressorSpec(Kind::kScaledSign, 5),
        CompressorSpec(Kind::kTopK, 5, 2), CompressorSpec(Kind::kRandomK, 5, 2)}) {
    EXPECT_EQ(compress(spec, Vector::Zero(5), &rng).q, Vector::Zero(5))
        << spec.describe();
  }
}

TEST(Compress, PositivelyHomogeneous) {
  Rng rng(9);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(12);
    for (int i = 0; i < 12; ++i) x(i) = normal(rng);
    const double c = std::exp(normal(rng));
    for (const CompressorSpec& spec :
         {CompressorSpec(Kind::kScaledSign, 12), CompressorSpec(Kind::kTopK, 12, 4)}) {
      const Vector lhs = compress(spec, (c * x).eval()).q;
      const Vector rhs = c * compress(spec, x).q;
      EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-12 * (1.0 + rhs.norm()))
          << spec.describe();
    }
  }
}

TEST(Compress, BitsDependOnlyOnSpec) {
  Rng rng(2);
  const CompressorSpec spec(Kind::kScaledSign, 6);
  EXPECT_EQ(compress(spec, Vector::Ones(6)).bits,
            compress(spec, Vector::LinSpaced(6, -3, 3)).bits);
  EXPECT_EQ(spec.message_bits(), 70u);
}

// Exhaustive oracle: for every vector on a small lattice, top-k keeps the
// k largest magnitudes, so the residual is the sum of the d - k smallest.
TEST(Compress, TopKMatchesSortedOracleOnLattice) {
  const int d = 4;
  const std::vector<double> grid = {-2, -1, 0, 1, 2};
  std::vector<int> idx(d, 0);
  for (int code = 0; code < 625; ++code) {
    int c = code;
    Vector x(d);
    for (int i = 0; i < d; ++i) {
      x(i) = grid[c % 5];
      c /= 5;
    }
    for (int k = 1; k <= d; ++k) {
      std::vector<double> sq(d);
      for (int i = 0; i < d; ++i) sq[i] = x(i) * x(i);
      std::sort(sq.begin(), sq.end());
      double expected = 0.0;
      for (int i = 0; i < d - k; ++i) expected += sq[i];
      const Vector q = compress(CompressorSpec(Kind::kTopK, d, k), x).q;
      ASSERT_DOUBLE_EQ(residual(x, q), expected);
      ASSERT_LE(residual(x, q), (1.0 - double(k) / d) * x.squaredNorm() + 1e-12);
    }
  }
}

TEST(VerifyContraction, IdentityHasZeroRatio) {
  const ContractionReport r = verify_contraction(CompressorSpec(Kind::kIdentity, 10), 100, 1);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.max_ratio, 0.0);
}

TEST(VerifyContraction, TopFiveOfTen) {
  const ContractionReport r = verify_contraction(CompressorSpec(Kind::kTopK, 10, 5), 1000, 2);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.violations, 0);
  EXPECT_LE(r.max_ratio, 0.5);
}

TEST(VerifyContraction, ScaledSignInOneDimension) {
  const ContractionReport r = verify_contraction(CompressorSpec(Kind::kScaledSign, 1), 10, 3);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.max_ratio, 0.0);
}

TEST(VerifyContraction, RandomKInExpectation) {
  const ContractionReport r = verify_contraction(CompressorSpec(Kind::kRandomK, 20, 5), 5000, 4);
  EXPECT_TRUE(r.expectation_only);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.mean_ratio, 0.75, 0.02);
}

TEST(Kinds, ParseAliases) {
  EXPECT_EQ(parse_kind("sign"), Kind::kScaledSign);
  EXPECT_EQ(parse_kind("scaled_sign"), Kind::kScaledSign);
  EXPECT_EQ(parse_kind("top_k"), Kind::kTopK);
  EXPECT_THROW(parse_kind("qsgd"), Error);
}

}  // namespace
}  // namespace pdsgdm::compression
