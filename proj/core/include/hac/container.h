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

#ifndef HAC_CONTAINER_H_
#define HAC_CONTAINER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hac/coder.h"
#include "hac/hashgrid.h"
#include "hac/masking.h"
#include "hac/ratemodel.h"
#include "hac/scene.h"

namespace hac {

inline constexpr uint32_t kContainerVersion = 1;

enum class Section : int { kMlp = 0, kLocations, kMasks, kGrid, kAttributes };
inline constexpr int kNumSections = 5;
const char* SectionName(Section section);

// Everything the decoder needs besides the scene: the trained artifacts, the
// frozen normalization bounds and the rate weights (kept for provenance).
struct CodecArtifacts {
  HashGrid grid;
  ContextModel model;
  MaskSet masks;
  Aabb bounds;
  double lambda_e = 0.0;
  double lambda_m = 0.0;
};

struct SectionEntry {
  uint64_t offset = 0;
  uint64_t length = 0;
};

// Parsed fixed-order header of a .hacz file.
struct ContainerHeader {
  uint32_t version = kContainerVersion;
  GridConfig grid;
  uint32_t dim_feat = 0;
  uint32_t k_offsets = 0;
  uint64_t n_kept = 0;
  uint64_t kept_offset_slots = 0;
  std::array<float, 3> q0{};
  uint32_t mlp_input = 0;
  uint32_t mlp_hidden = 0;
  uint32_t mlp_output = 0;
  // Symbol-table grid: ratio grid size, steps per octave, center index,
  // sigma clamp factors, mean divisions.
  uint32_t ratio_grid_size = kRatioGridSize;
  uint32_t ratio_per_octave = kRatioPerOctave;
  uint32_t ratio_center = kRatioCenter;
  float sigma_min_factor = 0.0f;
  float sigma_max_factor = 0.0f;
  uint32_t mu_divisions = kMuDivisions;
  Aabb bounds;
  float lambda_e = 0.0f;
  float lambda_m = 0.0f;
  uint32_t mask_freq_one = kProbScale / 2;
  uint32_t grid_freq_one = kProbScale / 2;
  std::array<uint64_t, kNumFamilies> family_bytes{};
  std::array<SectionEntry, kNumSections> sections{};
  uint64_t header_bytes = 0;

  AttributeLayout layout() const { return {dim_feat, k_offsets}; }
};

// Reads and validates the header and section table against the blob size.
ContainerHeader ParseHeader(std::span<const uint8_t> blob);

// Encoder-side values, exposed so tests can compare them against the decoder.
struct CodecTrace {
  std::vector<size_t> kept_anchors;            // indices into the source scene
  std::vector<float> locations;                // kept x 3, half-rounded
  std::vector<uint8_t> mask_bits;              // kept x K
  std::vector<uint8_t> grid_bits;
  std::vector<RateParams> rates;               // one per kept anchor
  std::array<std::vector<int32_t>, kNumFamilies> symbols;
  std::array<StreamStats, kNumFamilies> stream_stats;
};

// Rate parameters at decoded precision for each location: the location is
// normalized by `bounds`, interpolated on `grid` with sign binarization and
// fed to `model`. Encoder and decoder both call this.
std::vector<RateParams> DecodedRateParams(const HashGrid& grid, const ContextModel& model,
                                          const Aabb& bounds,
                                          std::span<const float> locations);

// Compresses `scene` with trained artifacts. Requires D^a >= 1 and K >= 1.
std::vector<uint8_t> EncodeScene(const AnchorScene& scene, const CodecArtifacts& artifacts,
                                 CodecTrace* trace = nullptr);

struct DecodedScene {
  AnchorScene scene;  // surviving anchors only, dequantized attributes
  CodecArtifacts artifacts;
  CodecTrace trace;   // kept_anchors are 0..n_kept-1
};

DecodedScene DecodeScene(std::span<const uint8_t> blob);

struct FamilyReport {
  Family family = Family::kFeature;
  uint64_t bytes = 0;
  uint64_t values = 0;  // coded values of surviving anchors and offsets
  double bits_per_param = 0.0;
};

struct SectionReport {
  uint64_t file_bytes = 0;
  uint64_t header_bytes = 0;
  std::array<SectionEntry, kNumSections> sections{};
  std::array<FamilyReport, kNumFamilies> families{};
  uint64_t n_kept = 0;
  uint64_t kept_offset_slots = 0;
};

SectionReport Inspect(std::span<const uint8_t> blob);

struct VerifyReport {
  bool bit_exact = false;
  std::string mismatch;  // first disagreement, empty when bit-exact
  uint64_t blob_bytes = 0;
};

// Encodes, decodes and compares every decoded quantity (locations, mask bits,
// grid bits, MLP weights, rate parameters, symbols, dequantized values)
// against the encoder side, then checks that re-encoding the decoded scene
// reproduces the blob byte for byte.
VerifyReport VerifyRoundTrip(const AnchorScene& scene, const CodecArtifacts& artifacts);

}  // namespace hac

#endif  // HAC_CONTAINER_H_
