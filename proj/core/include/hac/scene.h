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

#ifndef HAC_SCENE_H_
#define HAC_SCENE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hac {

struct Aabb {
  std::array<float, 3> min{0.0f, 0.0f, 0.0f};
  std::array<float, 3> max{1.0f, 1.0f, 1.0f};

  bool operator==(const Aabb&) const = default;
};

// Maps a world position into [0,1]^3 relative to `bounds`, clamping anything
// that falls outside.
std::array<double, 3> NormalizeLocation(const Aabb& bounds,
                                        std::span<const float, 3> location);

// The three anchor attribute families, in their fixed coding order.
enum class Family : int { kFeature = 0, kScaling = 1, kOffset = 2 };
inline constexpr int kNumFamilies = 3;
inline constexpr size_t kScalingDim = 6;

const char* FamilyName(Family family);

// Column layout of one anchor's attribute vector: features | scalings |
// offsets.
struct AttributeLayout {
  size_t dim_feat = 0;
  size_t k_offsets = 0;

  size_t Width(Family f) const {
    switch (f) {
      case Family::kFeature: return dim_feat;
      case Family::kScaling: return kScalingDim;
      case Family::kOffset: return 3 * k_offsets;
    }
    return 0;
  }
  size_t Begin(Family f) const {
    switch (f) {
      case Family::kFeature: return 0;
      case Family::kScaling: return dim_feat;
      case Family::kOffset: return dim_feat + kScalingDim;
    }
    return 0;
  }
  size_t total() const { return dim_feat + kScalingDim + 3 * k_offsets; }
  Family FamilyOf(size_t column) const {
    if (column < dim_feat) return Family::kFeature;
    if (column < dim_feat + kScalingDim) return Family::kScaling;
    return Family::kOffset;
  }

  bool operator==(const AttributeLayout&) const = default;
};

// N anchors with locations and the attribute triple (features, scalings,
// offsets). Scalings are stored after the sigmoid, so they live in (0,1).
// All arrays are row-major float32.
struct AnchorScene {
  size_t n = 0;
  size_t dim_feat = 0;
  size_t k_offsets = 0;
  std::vector<float> locations;  // n x 3
  std::vector<float> features;   // n x dim_feat
  std::vector<float> scalings;   // n x 6
  std::vector<float> offsets;    // n x 3K
  Aabb bounds;

  AttributeLayout layout() const { return {dim_feat, k_offsets}; }

  std::span<const float, 3> location(size_t i) const {
    return std::span<const float, 3>(locations.data() + 3 * i, 3);
  }
  std::span<const float> family_row(Family f, size_t i) const;
  std::span<float> family_row(Family f, size_t i);

  // Concatenated attribute row in layout order, widened to double.
  void AttributeRow(size_t i, std::span<double> out) const;

  bool operator==(const AnchorScene&) const = default;
};

// Throws kValidation naming the first violated invariant.
void ValidateScene(const AnchorScene& scene);

// Deterministic synthetic scene: uniform locations in the unit cube; each
// attribute dimension mixes a low-frequency field built from shared random
// Fourier bases (weight `smoothness`) with i.i.d. Gaussian noise (weight
// 1 - smoothness). Offset slots are additionally switched off in regions where
// a smooth per-slot activity field is negative, which leaves an exact-zero
// spike in the offset distribution.
AnchorScene SynthScene(uint64_t seed, size_t n, size_t dim_feat,
                       size_t k_offsets, double smoothness);

inline constexpr double kDefaultBoundsPad = 0.01;
inline constexpr double kBoundsEpsilon = 1e-6;

// Min/max of the locations widened by pad * extent per axis, plus an absolute
// epsilon where the extent is zero.
Aabb SceneBounds(const AnchorScene& scene, double pad = kDefaultBoundsPad);

// ".hacscene" I/O.
inline constexpr uint32_t kSceneVersion = 1;
std::vector<uint8_t> SerializeScene(const AnchorScene& scene);
AnchorScene ParseScene(std::span<const uint8_t> bytes);
void SaveScene(const AnchorScene& scene, const std::string& path);
AnchorScene LoadScene(const std::string& path);

}  // namespace hac

#endif  // HAC_SCENE_H_
