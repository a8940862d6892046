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
#include <cstring>
#include <vector>

#include "hac/container.h"
#include "hac/error.h"
#include "hac/scene.h"
#include "test_util.h"

namespace hac {
namespace {

using testing::RandomArtifacts;

ErrorCode DecodeError(std::span<const uint8_t> blob) {
  try {
    DecodeScene(blob);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::kInvalidArgument;
}

TEST(Container, EmptyScene) {
  AnchorScene s = SynthScene(1, 0, 4, 2, 0.5);
  const CodecArtifacts a = RandomArtifacts(s, 1);
  const auto blob = EncodeScene(s, a);
  const ContainerHeader h = ParseHeader(blob);
  EXPECT_EQ(h.n_kept, 0u);
  EXPECT_GT(h.sections[static_cast<int>(Section::kMlp)].length, 0u);
  EXPECT_GT(h.sections[static_cast<int>(Section::kGrid)].length, 0u);
  EXPECT_EQ(h.sections[static_cast<int>(Section::kLocations)].length, 0u);
  EXPECT_EQ(h.sections[static_cast<int>(Section::kMasks)].length, 0u);
  EXPECT_EQ(h.sections[static_cast<int>(Section::kAttributes)].length, 0u);
  EXPECT_EQ(DecodeScene(blob).scene.n, 0u);
  EXPECT_TRUE(VerifyRoundTrip(s, a).bit_exact);
}

TEST(Container, SingleAnchor) {
  const AnchorScene s = SynthScene(2, 1, 3, 2, 0.5);
  const CodecArtifacts a = RandomArtifacts(s, 2, 0.0);
  const VerifyReport r = VerifyRoundTrip(s, a);
  EXPECT_TRUE(r.bit_exact) << r.mismatch;
}

TEST(Container, EncoderAndDecoderTracesAgree) {
  const AnchorScene s = SynthScene(3, 600, 7, 4, 0.7);
  const CodecArtifacts a = RandomArtifacts(s, 3, 0.3);
  CodecTrace enc;
  const auto blob = EncodeScene(s, a, &enc);
  const DecodedScene dec = DecodeScene(blob);
  EXPECT_EQ(dec.trace.locations, enc.locations);
  EXPECT_EQ(dec.trace.mask_bits, enc.mask_bits);
  EXPECT_EQ(dec.trace.grid_bits, enc.grid_bits);
  for (int f = 0; f < kNumFamilies; ++f) EXPECT_EQ(dec.trace.symbols[f], enc.symbols[f]);
  ASSERT_EQ(dec.trace.rates.size(), enc.rates.size());
  for (size_t i = 0; i < enc.rates.size(); ++i) {
    EXPECT_EQ(dec.trace.rates[i].q, enc.rates[i].q);
    EXPECT_EQ(dec.trace.rates[i].mu, enc.rates[i].mu);
    EXPECT_EQ(dec.trace.rates[i].sigma, enc.rates[i].sigma);
  }
  EXPECT_EQ(dec.scene.n, enc.kept_anchors.size());
}

TEST(Container, DecodeThenEncodeIsByteIdentical) {
  const AnchorScene s = SynthScene(4, 700, 5, 3, 0.8);
  const CodecArtifacts a = RandomArtifacts(s, 4, 0.25);
  const auto blob = EncodeScene(s, a);
  const DecodedScene dec = DecodeScene(blob);
  EXPECT_EQ(EncodeScene(dec.scene, dec.artifacts), blob);
}

TEST(Container, DequantizedValuesAreMultiplesOfStep) {
  const AnchorScene s = SynthScene(5, 200, 4, 2, 0.8);
  const CodecArtifacts a = RandomArtifacts(s, 5, 0.0);
  CodecTrace enc;
  const DecodedScene dec = DecodeScene(EncodeScene(s, a, &enc));
  const auto& sym = enc.symbols[static_cast<int>(Family::kFeature)];
  for (size_t i = 0; i < dec.scene.n; ++i) {
    const double q = enc.rates[i].q[0];
    for (size_t d = 0; d < 4; ++d) {
      EXPECT_EQ(dec.scene.features[i * 4 + d], static_cast<float>(sym[i * 4 + d] * q));
    }
  }
}

TEST(Container, PrunedAnchorsAbsentFromAttributes) {
  const AnchorScene s = SynthScene(6, 300, 4, 3, 0.8);
  CodecArtifacts a = RandomArtifacts(s, 6, 0.0);
  for (size_t i = 0; i < s.n; i += 3) {
    for (size_t j = 0; j < 3; ++j) a.masks.logits[i * 3 + j] = -20.0;
  }
  a.masks.logits[1 * 3 + 2] = -20.0;
  CodecTrace enc;
  const auto blob = EncodeScene(s, a, &enc);
  EXPECT_EQ(enc.kept_anchors.size(), 200u);
  for (size_t i : enc.kept_anchors) EXPECT_NE(i % 3, 0u);
  EXPECT_EQ(enc.symbols[static_cast<int>(Family::kFeature)].size(), 200u * 4);
  EXPECT_EQ(enc.symbols[static_cast<int>(Family::kScaling)].size(), 200u * 6);
  EXPECT_EQ(enc.symbols[static_cast<int>(Family::kOffset)].size(), (200u * 3 - 1) * 3);
  const SectionReport r = Inspect(blob);
  EXPECT_EQ(r.n_kept, 200u);
  EXPECT_EQ(r.kept_offset_slots, 599u);
  EXPECT_EQ(r.families[2].values, 599u * 3);
}

TEST(Container, InspectSectionsSumToFileSize) {
  const AnchorScene s = SynthScene(7, 400, 6, 2, 0.6);
  const auto blob = EncodeScene(s, RandomArtifacts(s, 7));
  const SectionReport r = Inspect(blob);
  uint64_t sum = r.header_bytes;
  for (const auto& e : r.sections) sum += e.length;
  EXPECT_EQ(sum, blob.size());
  EXPECT_EQ(r.file_bytes, blob.size());
  uint64_t family_sum = 0;
  for (const auto& f : r.families) family_sum += f.bytes;
  EXPECT_EQ(family_sum, r.sections[static_cast<int>(Section::kAttributes)].length);
}

TEST(Container, BadMagicAndVersion) {
  const AnchorScene s = SynthScene(8, 50, 3, 2, 0.6);
  auto blob = EncodeScene(s, RandomArtifacts(s, 8));
  auto bad = blob;
  bad[0] = 'X';
  EXPECT_EQ(DecodeError(bad), ErrorCode::kFormat);
  bad = blob;
  bad[4] = 0x7f;
  EXPECT_EQ(DecodeError(bad), ErrorCode::kFormat);
  EXPECT_EQ(DecodeError(std::span<const uint8_t>(blob.data(), 10)), ErrorCode::kFormat);
}

TEST(Container, TruncatedMidAttributesOverruns) {
  const AnchorScene s = SynthScene(9, 800, 8, 3, 0.6);
  const auto blob = EncodeScene(s, RandomArtifacts(s, 9));
  const ContainerHeader h = ParseHeader(blob);
  const SectionEntry s5 = h.sections[static_cast<int>(Section::kAttributes)];
  ASSERT_GT(s5.length, 100u);
  const std::vector<uint8_t> cut(blob.begin(), blob.begin() + s5.offset + s5.length / 2);
  EXPECT_EQ(DecodeError(cut), ErrorCode::kSectionOverrun);
}

TEST(Container, CorruptPayloadNeverReturnsWrongData) {
  const AnchorScene s = SynthScene(10, 300, 4, 2, 0.6);
  const CodecArtifacts a = RandomArtifacts(s, 10);
  const auto blob = EncodeScene(s, a);
  const ContainerHeader h = ParseHeader(blob);
  const SectionEntry s5 = h.sections[static_cast<int>(Section::kAttributes)];
  // Flipping payload bits either raises or changes the decode; it must never
  // crash.
  for (size_t flip = 0; flip < 20; ++flip) {
    auto bad = blob;
    bad[s5.offset + (flip * 7919) % s5.length] ^= 0x5a;
    try {
      DecodeScene(bad);
    } catch (const Error&) {
    }
  }
}

TEST(Container, SymbolOutOfRangeNamesAnchorAndComponent) {
  AnchorScene s = SynthScene(11, 20, 3, 2, 0.6);
  s.features[5 * 3 + 1] = 1e7f;
  try {
    EncodeScene(s, RandomArtifacts(s, 11, 0.0));
    FAIL() << "expected out-of-range";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("anchor 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("component 1"), std::string::npos) << msg;
  }
}

TEST(Container, NonFiniteAttributeRejected) {
  AnchorScene s = SynthScene(12, 20, 3, 2, 0.6);
  s.offsets[4] = NAN;
  EXPECT_THROW(EncodeScene(s, RandomArtifacts(s, 12)), Error);
}

TEST(Container, DeterministicAcrossCalls) {
  const AnchorScene s = SynthScene(13, 500, 5, 4, 0.6);
  const CodecArtifacts a = RandomArtifacts(s, 13);
  EXPECT_EQ(EncodeScene(s, a), EncodeScene(s, a));
}

TEST(Container, MlpSectionHoldsFloatWeights) {
  const AnchorScene s = SynthScene(14, 10, 3, 2, 0.6);
  const CodecArtifacts a = RandomArtifacts(s, 14);
  const auto blob = EncodeScene(s, a);
  const ContainerHeader h = ParseHeader(blob);
  EXPECT_EQ(h.sections[static_cast<int>(Section::kMlp)].length,
            4 * a.model.parameter_count());
  EXPECT_EQ(h.sections[static_cast<int>(Section::kLocations)].length, 2 * 3 * h.n_kept);
}

}  // namespace
}  // namespace hac
