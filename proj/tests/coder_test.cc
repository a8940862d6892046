// Copyright 2026 The HAC Codec Authors. All Rights Reserved.
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


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hac/coder.h"
#include "hac/error.h"
#include "hac/ratemodel.h"
#include "hac/rng.h"

namespace hac {
namespace {

CdfProvider Fixed(const CdfTable& table) {
  return [&table](size_t) { return CdfRef{&table, 0}; };
}

// Draws symbols by inverting the quantized CDF.
std::vector<int32_t> Sample(const CdfTable& table, size_t count, Rng& rng) {
  std::vector<int32_t> out(count);
  for (auto& s : out) {
    const auto target = static_cast<uint32_t>(rng.Below(kProbScale));
    s = table.k_min + static_cast<int32_t>(table.Find(target));
  }
  return out;
}

double TableBits(const CdfTable& table, const std::vector<int32_t>& symbols) {
  double bits = 0;
  for (int32_t s : symbols) bits -= std::log2(table.freq(s) / 65536.0);
  return bits;
}

TEST(CdfTable, StandardNormalSymmetricAndExact) {
  const CdfTable t = BuildCdf(0.0, 1.0, 1.0);
  EXPECT_EQ(t.cum.front(), 0u);
  EXPECT_EQ(t.cum.back(), kProbScale);
  EXPECT_EQ(t.k_min, -t.k_max);
  for (int32_t k = 0; k <= t.k_max; ++k) EXPECT_EQ(t.freq(k), t.freq(-k)) << k;
  EXPECT_NEAR(t.freq(0) / 65536.0, 0.3829249225480262, 0x1p-12);
}

TEST(CdfTable, StrictlyIncreasingForRandomParameters) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    const double q = std::exp(rng.Uniform(-6, 2));
    const CdfTable table = BuildCdf(rng.Uniform(-50, 50) * q, std::exp(rng.Uniform(-6, 6)) * q, q);
    ASSERT_EQ(table.cum.back(), kProbScale);
    for (size_t i = 0; i + 1 < table.cum.size(); ++i) ASSERT_LT(table.cum[i], table.cum[i + 1]);
  }
}

TEST(CdfTable, RejectsNonPositiveStep) {
  EXPECT_THROW(BuildCdf(0.0, 1.0, 0.0), Error);
  EXPECT_THROW(BuildCdf(0.0, 1.0, -1.0), Error);
  EXPECT_THROW(BuildCdf(0.0, 0.0, 1.0), Error);
}

TEST(CdfTable, FarMeanClipsToGlobalBounds) {
  const CdfTable hi = BuildCdf(1e9, 1.0, 1.0);
  EXPECT_EQ(hi.k_max, kSymbolMax);
  const CdfTable lo = BuildCdf(-1e9, 1.0, 1.0);
  EXPECT_EQ(lo.k_min, kSymbolMin);
}

TEST(QuantizeMass, EveryBinAtLeastOne) {
  const std::vector<double> mass = {1e-30, 0.5, 1e-30, 0.5, 0.0};
  const auto cum = QuantizeMass(mass);
  ASSERT_EQ(cum.size(), 6u);
  EXPECT_EQ(cum.back(), kProbScale);
  for (size_t i = 0; i < 5; ++i) EXPECT_GE(cum[i + 1] - cum[i], 1u);
}

TEST(CdfCache, ShiftedTableMatchesDirectBuild) {
  CdfCache cache;
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const double q = std::exp(rng.Uniform(-3, 1));
    const double mu = rng.Uniform(-300, 300) * q, sigma = std::exp(rng.Uniform(-4, 4)) * q;
    const SnappedParams sp = SnapParams(mu, sigma, q);
    const CdfRef ref = cache.Get(sp);
    const CdfTable direct = BuildCdfSnapped(sp);
    ASSERT_EQ(ref.k_min(), direct.k_min);
    ASSERT_EQ(ref.k_max(), direct.k_max);
    for (int32_t k = direct.k_min; k <= direct.k_max; ++k) ASSERT_EQ(ref.freq(k), direct.freq(k));
  }
  EXPECT_LT(cache.size(), 500u);
}

TEST(RangeCoder, EmptySequence) {
  const CdfTable t = BuildCdf(0.0, 1.0, 1.0);
  const auto bytes = RangeEncodeSymbols({}, Fixed(t));
  EXPECT_LE(bytes.size(), 32u);
  EXPECT_TRUE(RangeDecodeSymbols(bytes, 0, Fixed(t)).empty());
}

TEST(RangeCoder, KnownTableNearEntropy) {
  const CdfTable t = BuildCdf(0.3, 2.5, 1.0);
  Rng rng(3);
  const auto symbols = Sample(t, 10000, rng);
  StreamStats stats;
  const auto bytes = RangeEncodeSymbols(symbols, Fixed(t), &stats);
  EXPECT_EQ(RangeDecodeSymbols(bytes, symbols.size(), Fixed(t)), symbols);
  // Edge bins double as tails: landing on one costs a 1-bit escape.
  double ideal = TableBits(t, symbols);
  for (int32_t s : symbols) ideal += (s == t.k_min || s == t.k_max) ? 1.0 : 0.0;
  EXPECT_NEAR(stats.ideal_bits, ideal, 1e-6 * ideal);
  EXPECT_LE(8.0 * bytes.size(), 1.02 * ideal + 256);
}

TEST(RangeCoder, SingleDominantSymbol) {
  CdfTable t;
  t.k_min = -1;
  t.k_max = 1;
  t.cum = {0, 1, 65535, 65536};
  const std::vector<int32_t> symbols(100000, 0);
  const auto bytes = RangeEncodeSymbols(symbols, Fixed(t));
  // 100000 * -log2(65534/65536) = 4.4 bits, plus the flush.
  EXPECT_LE(bytes.size(), 8u);
  EXPECT_EQ(RangeDecodeSymbols(bytes, symbols.size(), Fixed(t)), symbols);
}

TEST(RangeCoder, EscapesBeyondEdges) {
  const CdfTable t = BuildCdf(0.0, 0.5, 1.0);
  const std::vector<int32_t> symbols = {0, t.k_max, t.k_max + 1, t.k_min - 1000, 30000,
                                        -32768, 32767, 1, -1, t.k_min};
  StreamStats stats;
  const auto bytes = RangeEncodeSymbols(symbols, Fixed(t), &stats);
  EXPECT_GT(stats.escapes, 0u);
  EXPECT_EQ(RangeDecodeSymbols(bytes, symbols.size(), Fixed(t)), symbols);
}

TEST(RangeCoder, VaryingTablesRoundTrip) {
  Rng rng(4);
  const size_t n = 20000;
  std::vector<CdfTable> tables;
  for (int i = 0; i < 64; ++i) {
    const double q = std::exp(rng.Uniform(-2, 1));
    tables.push_back(BuildCdf(rng.Uniform(-10, 10) * q, std::exp(rng.Uniform(-5, 5)) * q, q));
  }
  std::vector<size_t> which(n);
  std::vector<int32_t> symbols(n);
  for (size_t i = 0; i < n; ++i) {
    which[i] = rng.Below(tables.size());
    symbols[i] = Sample(tables[which[i]], 1, rng)[0];
  }
  const CdfProvider provider = [&](size_t i) { return CdfRef{&tables[which[i]], 0}; };
  const auto bytes = RangeEncodeSymbols(symbols, provider);
  EXPECT_EQ(RangeDecodeSymbols(bytes, n, provider), symbols);
}

TEST(RangeCoder, TruncatedStreamOverruns) {
  const CdfTable t = BuildCdf(0.0, 40.0, 1.0);
  Rng rng(5);
  const auto symbols = Sample(t, 5000, rng);
  auto bytes = RangeEncodeSymbols(symbols, Fixed(t));
  bytes.resize(bytes.size() / 2);
  try {
    RangeDecodeSymbols(bytes, symbols.size(), Fixed(t));
    FAIL() << "expected overrun";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSectionOverrun);
  }
}

TEST(BinaryModel, FairCoinCostsOneBitEach) {
  Rng rng(6);
  std::vector<uint8_t> bits(8192);
  for (auto& b : bits) b = static_cast<uint8_t>(rng.Below(2));
  const auto bytes = EncodeBits(bits, BinaryModel::FromProbability(0.5));
  EXPECT_NEAR(static_cast<double>(bytes.size()), 1024.0, 10.24);
  EXPECT_EQ(DecodeBits(bytes, bits.size(), BinaryModel::FromProbability(0.5)), bits);
}

TEST(BinaryModel, SkewedAllOnes) {
  const std::vector<uint8_t> bits(8192, 1);
  const BinaryModel model = BinaryModel::FromProbability(0.99);
  const auto bytes = EncodeBits(bits, model);
  // 8192 * -log2(0.99) / 8 = 14.85 bytes of payload plus the flush.
  EXPECT_GE(bytes.size(), 14u);
  EXPECT_LE(bytes.size(), 20u);
  EXPECT_EQ(DecodeBits(bytes, bits.size(), model), bits);
}

TEST(BinaryModel, ExtremeProbabilitiesStayCodable) {
  for (double p : {0.0, 1e-9, 1.0, 1.0 - 1e-12}) {
    const BinaryModel m = BinaryModel::FromProbability(p);
    EXPECT_GE(m.freq_one, 1u);
    EXPECT_LE(m.freq_one, kProbScale - 1);
    const std::vector<uint8_t> bits = {0, 1, 1, 0, 0, 0, 1};
    EXPECT_EQ(DecodeBits(EncodeBits(bits, m), bits.size(), m), bits);
  }
}

TEST(RawBits, RoundTrip) {
  RangeEncoder enc;
  enc.EncodeRawBits(0x5a5a5, 20);
  enc.EncodeRawBits(1, 1);
  enc.EncodeRawBits(0, 7);
  const auto bytes = enc.Finish();
  RangeDecoder dec(bytes);
  EXPECT_EQ(dec.DecodeRawBits(20), 0x5a5a5u);
  EXPECT_EQ(dec.DecodeRawBits(1), 1u);
  EXPECT_EQ(dec.DecodeRawBits(7), 0u);
}

}  // namespace
}  // namespace hac
