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

#ifndef HAC_HASHGRID_H_
#define HAC_HASHGRID_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hac {

// Level layout of a mixed 3D / tri-plane multi-resolution grid.
struct GridConfig {
  std::vector<uint32_t> res_3d;  // vertices per axis, strictly increasing
  std::vector<uint32_t> res_2d;
  uint32_t table_3d_max = 1u << 13;
  uint32_t table_2d_max = 1u << 15;
  uint32_t dim_embed = 4;

  // 12 3D levels over 16..512 and 4 tri-plane levels over 128..1024.
  static GridConfig Standard();
  // A reduced layout for quick experiments and tests.
  static GridConfig Small();
  // Resolutions round(lo * (hi/lo)^(l/(levels-1))).
  static GridConfig Geometric(uint32_t levels_3d, uint32_t lo_3d, uint32_t hi_3d,
                              uint32_t levels_2d, uint32_t lo_2d, uint32_t hi_2d,
                              uint32_t table_3d_max, uint32_t table_2d_max,
                              uint32_t dim_embed);

  size_t levels() const { return res_3d.size() + res_2d.size(); }
  // Interpolated feature width: dim_embed * (L_3d + 3 * L_2d).
  size_t feature_dim() const { return dim_embed * (res_3d.size() + 3 * res_2d.size()); }

  void Validate() const;

  bool operator==(const GridConfig&) const = default;
};

// One resolution level. 2D levels own three plane tables (xy, xz, yz), stored
// consecutively.
struct GridLevel {
  uint32_t res = 0;
  int dims = 3;
  uint32_t table_size = 0;  // entries per table
  bool dense = true;
  size_t offset = 0;        // first parameter of the first table
  int tables() const { return dims == 3 ? 1 : 3; }
  int corners() const { return dims == 3 ? 8 : 4; }
};

inline constexpr uint64_t kHashPrimes[3] = {1ull, 2654435761ull, 805459861ull};

// Row-major dense index when res^dims fits in the table, otherwise the
// XOR-folded prime hash modulo the table size. Cells are vertex coordinates in
// [0, res).
uint32_t HashIndex(uint32_t res, uint32_t table_size, std::span<const uint32_t> cell);

// How the continuous parameters map to forward values. kSign is the coding
// path; kTanh is the smooth surrogate used for derivative checks.
enum class BinarizeMode { kSign, kTanh };

inline double Binarize(double theta) { return theta >= 0.0 ? 1.0 : -1.0; }

class HashGrid {
 public:
  HashGrid() = default;
  HashGrid(GridConfig config, std::vector<double> params);

  // Parameters uniform in [-1e-2, 1e-2].
  static HashGrid Create(const GridConfig& config, uint64_t seed);

  const GridConfig& config() const { return config_; }
  const std::vector<GridLevel>& levels() const { return levels_; }
  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  size_t param_count() const { return params_.size(); }

  double Forward(size_t index, BinarizeMode mode) const;
  // Derivative of Forward with respect to the parameter: the clipped
  // straight-through gradient for kSign, the exact derivative for kTanh.
  double ForwardGrad(size_t index, BinarizeMode mode) const;

  // Number of parameters whose binarized value is +1.
  uint64_t CountPositive() const;

 private:
  GridConfig config_;
  std::vector<GridLevel> levels_;
  std::vector<double> params_;
};

std::vector<GridLevel> LayoutLevels(const GridConfig& config);
size_t GridParamCount(const GridConfig& config);

// Corner record for back-propagation: first parameter of the entry and its
// blend weight.
struct InterpCorner {
  uint32_t param = 0;
  double weight = 0.0;
};

// Corners visited by one interpolation, grouped per level/plane in output
// order (8 per 3D level, 4 per plane of a 2D level).
struct InterpTrace {
  std::vector<InterpCorner> corners;
};

// Feature at a normalized location: 3D levels (trilinear) low to high, then
// 2D levels low to high with planes xy, xz, yz (bilinear). `out` must hold
// config().feature_dim() values.
void Interpolate(const HashGrid& grid, const std::array<double, 3>& x_norm,
                 std::span<double> out, BinarizeMode mode = BinarizeMode::kSign,
                 InterpTrace* trace = nullptr);

// Accumulates d(loss)/d(params) given d(loss)/d(feature).
void InterpolateBackward(const HashGrid& grid, const InterpTrace& trace,
                         std::span<const double> grad_feature,
                         std::span<double> grad_params,
                         BinarizeMode mode = BinarizeMode::kSign);

inline constexpr double kHashFreqEpsilon = 1e-6;

// M+ * -log2(h) + M- * -log2(1-h) with h = clamp(M+/M, eps, 1-eps).
double HashEntropyBits(double plus, double minus);
// Same cost evaluated with an arbitrary coding frequency.
double HashCrossEntropyBits(double plus, double minus, double freq);
double HashEntropyLoss(const HashGrid& grid);

// Loss with soft counts under `mode` (binary counts for kSign, (1+tanh)/2 for
// kTanh); adds scale * dL/dtheta into `grad` when it is non-empty.
double HashEntropyLossWithGrad(const HashGrid& grid, BinarizeMode mode,
                               double scale, std::span<double> grad);

// Canonical bit order: levels (3D then 2D), planes, table index, dimension.
// +1 maps to bit 1. One bit per byte.
std::vector<uint8_t> PackGridBits(const HashGrid& grid);
// Parameters of the result are exactly +1 or -1.
HashGrid UnpackGridBits(std::span<const uint8_t> bits, const GridConfig& config);

}  // namespace hac

#endif  // HAC_HASHGRID_H_
