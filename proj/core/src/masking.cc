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

#include "hac/masking.h"

#include <algorithm>
#include <string>

#include "hac/error.h"

namespace hac {

MaskSet MaskSet::AllKept(size_t n, size_t k, double logit) {
  MaskSet m;
  m.n = n;
  m.k = k;
  m.logits.assign(n * k, logit);
  return m;
}

MaskSet MaskSet::FromBits(size_t n, size_t k, std::span<const uint8_t> bits) {
  if (bits.size() != n * k) Fail(ErrorCode::kInvalidArgument, "mask bit count mismatch");
  MaskSet m;
  m.n = n;
  m.k = k;
  m.logits.resize(n * k);
  for (size_t i = 0; i < bits.size(); ++i) m.logits[i] = bits[i] ? kKeptLogit : -kKeptLogit;
  return m;
}

std::vector<uint8_t> MaskSet::HardBits() const {
  std::vector<uint8_t> bits(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) bits[i] = HardMask(logits[i], tau);
  return bits;
}

bool MaskSet::pruned(size_t anchor) const {
  for (size_t j = 0; j < k; ++j) {
    if (hard(anchor, j)) return false;
  }
  return true;
}

double MaskSet::MaskedFraction() const {
  if (logits.empty()) return 0.0;
  size_t masked = 0;
  for (double l : logits) masked += HardMask(l, tau) ? 0 : 1;
  return static_cast<double>(masked) / static_cast<double>(logits.size());
}

double MaskLoss(const MaskSet& masks) {
  if (masks.logits.empty()) Fail(ErrorCode::kInvalidArgument, "mask loss of an empty mask set");
  double sum = 0.0;
  for (double l : masks.logits) sum += Sigmoid(l);
  return sum / static_cast<double>(masks.logits.size());
}

size_t PruneResult::total_kept_offsets() const {
  size_t total = 0;
  for (const auto& slots : kept_offsets) total += slots.size();
  return total;
}

PruneResult Prune(const AnchorScene& scene, const MaskSet& masks) {
  if (masks.n != scene.n || masks.k != scene.k_offsets ||
      masks.logits.size() != scene.n * scene.k_offsets) {
    Fail(ErrorCode::kInvalidArgument,
         "mask set (" + std::to_string(masks.n) + "x" + std::to_string(masks.k) +
             ") does not match scene (" + std::to_string(scene.n) + "x" +
             std::to_string(scene.k_offsets) + ")");
  }
  PruneResult result;
  std::vector<uint32_t> slots;
  for (size_t i = 0; i < scene.n; ++i) {
    slots.clear();
    for (size_t j = 0; j < masks.k; ++j) {
      if (masks.hard(i, j)) slots.push_back(static_cast<uint32_t>(j));
    }
    if (slots.empty()) continue;
    result.kept_anchors.push_back(i);
    result.kept_offsets.push_back(slots);
  }
  return result;
}

}  // namespace hac
