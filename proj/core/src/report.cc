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

#include "hac/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hac/error.h"
#include "hac/half.h"
#include "hac/masking.h"

namespace hac {

AnchorEntropy ComputeAnchorEntropy(const AnchorScene& scene, const CodecArtifacts& artifacts) {
  const AttributeLayout layout = scene.layout();
  const size_t t_dim = layout.total();
  const PruneResult kept = Prune(scene, artifacts.masks);
  const ContextModel model = artifacts.model.RoundedToFloat();
  const HashGrid grid = UnpackGridBits(PackGridBits(artifacts.grid), artifacts.grid.config());
  std::vector<float> locations(3 * kept.kept_anchors.size());
  for (size_t j = 0; j < kept.kept_anchors.size(); ++j) {
    for (int a = 0; a < 3; ++a) {
      locations[3 * j + a] = RoundToHalf(scene.locations[3 * kept.kept_anchors[j] + a]);
    }
  }
  const auto rates = DecodedRateParams(grid, model, artifacts.bounds, locations);

  AnchorEntropy out;
  out.anchors = kept.kept_anchors;
  out.bits.resize(kept.kept_anchors.size());
  std::vector<double> row(t_dim);
  std::vector<int64_t> symbols(t_dim);
  std::vector<uint8_t> mask_row(layout.k_offsets);
  for (size_t j = 0; j < kept.kept_anchors.size(); ++j) {
    const size_t i = kept.kept_anchors[j];
    scene.AttributeRow(i, row);
    for (size_t c = 0; c < t_dim; ++c) {
      symbols[c] = QuantizeTest(row[c], rates[j].q[static_cast<int>(layout.FamilyOf(c))]).k;
    }
    for (size_t k = 0; k < layout.k_offsets; ++k) mask_row[k] = artifacts.masks.hard(i, k);
    out.bits[j] = AnchorBits(layout, rates[j], symbols, mask_row);
    for (int f = 0; f < kNumFamilies; ++f) out.total[f] += out.bits[j][f];
  }
  return out;
}

std::vector<VoxelRecord> BitAllocationMap(const AnchorScene& scene,
                                          const CodecArtifacts& artifacts, uint32_t resolution) {
  if (resolution < 1) Fail(ErrorCode::kInvalidArgument, "voxel resolution must be >= 1");
  if (scene.n == 0) return {};
  const AnchorEntropy entropy = ComputeAnchorEntropy(scene, artifacts);
  std::map<uint64_t, VoxelRecord> cells;
  const uint64_t g = resolution;
  for (size_t j = 0; j < entropy.anchors.size(); ++j) {
    const auto x = NormalizeLocation(artifacts.bounds, scene.location(entropy.anchors[j]));
    std::array<uint32_t, 3> v{};
    for (int a = 0; a < 3; ++a) {
      v[a] = static_cast<uint32_t>(std::min<double>(std::floor(x[a] * g), g - 1));
    }
    const uint64_t key = (uint64_t{v[2]} * g + v[1]) * g + v[0];
    VoxelRecord& r = cells[key];
    r.voxel = v;
    ++r.anchor_count;
    r.total_bits += entropy.bits[j][0] + entropy.bits[j][1] + entropy.bits[j][2];
  }
  std::vector<VoxelRecord> out;
  out.reserve(cells.size());
  for (auto& [key, r] : cells) {
    r.mean_bits_per_anchor = r.total_bits / static_cast<double>(r.anchor_count);
    out.push_back(r);
  }
  return out;
}

std::string VoxelCsv(const std::vector<VoxelRecord>& records) {
  std::ostringstream out;
  out.precision(17);
  out << "vx,vy,vz,anchor_count,total_bits,mean_bits_per_anchor\n";
  for (const VoxelRecord& r : records) {
    out << r.voxel[0] << ',' << r.voxel[1] << ',' << r.voxel[2] << ',' << r.anchor_count << ','
        << r.total_bits << ',' << r.mean_bits_per_anchor << '\n';
  }
  return out.str();
}

std::string FamilyTable(const SectionReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %14s %14s %14s\n", "family", "size (bytes)", "values",
                "per-param (bit)");
  out << line;
  uint64_t bytes = 0;
  uint64_t values = 0;
  for (const FamilyReport& f : report.families) {
    std::snprintf(line, sizeof line, "%-10s %14llu %14llu %14.4f\n", FamilyName(f.family),
                  static_cast<unsigned long long>(f.bytes),
                  static_cast<unsigned long long>(f.values), f.bits_per_param);
    out << line;
    bytes += f.bytes;
    values += f.values;
  }
  const double pooled = values ? 8.0 * static_cast<double>(bytes) / static_cast<double>(values) : 0.0;
  std::snprintf(line, sizeof line, "%-10s %14llu %14llu %14.4f\n", "total",
                static_cast<unsigned long long>(bytes), static_cast<unsigned long long>(values),
                pooled);
  out << line;
  return out.str();
}

}  // namespace hac
