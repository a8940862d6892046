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

#ifndef HAC_REPORT_H_
#define HAC_REPORT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hac/container.h"
#include "hac/ratemodel.h"
#include "hac/scene.h"

namespace hac {

// Entropy-estimate bits of every surviving anchor, evaluated with the
// rate parameters the decoder would compute. Pruned anchors are absent.
struct AnchorEntropy {
  std::vector<size_t> anchors;        // scene indices of surviving anchors
  std::vector<FamilyBits> bits;       // one entry per surviving anchor
  FamilyBits total{};
};

AnchorEntropy ComputeAnchorEntropy(const AnchorScene& scene, const CodecArtifacts& artifacts);

struct VoxelRecord {
  std::array<uint32_t, 3> voxel{};
  uint64_t anchor_count = 0;
  double total_bits = 0.0;
  double mean_bits_per_anchor = 0.0;
};

// Surviving anchors binned on a G^3 lattice over the normalized location;
// empty voxels are omitted. Records are sorted by voxel index (x fastest).
std::vector<VoxelRecord> BitAllocationMap(const AnchorScene& scene,
                                          const CodecArtifacts& artifacts, uint32_t resolution);

std::string VoxelCsv(const std::vector<VoxelRecord>& records);

// Per-family rows in the "size / per-param size" layout, from a .hacz blob.
// Denominators count only surviving anchors and offsets.
std::string FamilyTable(const SectionReport& report);

}  // namespace hac

#endif  // HAC_REPORT_H_
