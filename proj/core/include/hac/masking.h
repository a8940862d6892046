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

#ifndef HAC_MASKING_H_
#define HAC_MASKING_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hac/scene.h"

namespace hac {

inline constexpr double kMaskThreshold = 0.01;

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Forward rule of the straight-through offset mask. The backward pass uses
// the sigmoid derivative in place of the step.
inline uint8_t HardMask(double logit, double tau = kMaskThreshold) {
  return Sigmoid(logit) > tau ? 1 : 0;
}

// Learnable per-anchor, per-offset mask logits (N x K, row-major).
struct MaskSet {
  size_t n = 0;
  size_t k = 0;
  std::vector<double> logits;
  double tau = kMaskThreshold;

  // Logit assigned to every slot by AllKept and to kept slots by FromBits.
  static constexpr double kKeptLogit = 8.0;

  static MaskSet AllKept(size_t n, size_t k, double logit = kKeptLogit);
  // Logits of +/-kKeptLogit reproducing the given hard bits.
  static MaskSet FromBits(size_t n, size_t k, std::span<const uint8_t> bits);

  uint8_t hard(size_t anchor, size_t slot) const {
    return HardMask(logits[anchor * k + slot], tau);
  }
  std::vector<uint8_t> HardBits() const;
  // True when every slot of the anchor is masked.
  bool pruned(size_t anchor) const;

  double MaskedFraction() const;
};

// Mean of sigmoid(logit) over all N*K entries.
double MaskLoss(const MaskSet& masks);

struct PruneResult {
  std::vector<size_t> kept_anchors;
  // One list of kept slot indices per kept anchor.
  std::vector<std::vector<uint32_t>> kept_offsets;

  size_t total_kept_offsets() const;
};

PruneResult Prune(const AnchorScene& scene, const MaskSet& masks);

}  // namespace hac

#endif  // HAC_MASKING_H_
