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

#include "hac/hashgrid.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "hac/error.h"
#include "hac/rng.h"

namespace hac {

GridConfig GridConfig::Geometric(uint32_t levels_3d, uint32_t lo_3d,
                                 uint32_t hi_3d, uint32_t levels_2d,
                                 uint32_t lo_2d, uint32_t hi_2d,
                                 uint32_t table_3d_max, uint32_t table_2d_max,
                                 uint32_t dim_embed) {
  auto ladder = [](uint32_t levels, uint32_t lo, uint32_t hi) {
    std::vector<uint32_t> res(levels);
    for (uint32_t l = 0; l < levels; ++l) {
      const double t = levels == 1 ? 0.0 : static_cast<double>(l) / (levels - 1);
      res[l] = static_cast<uint32_t>(
          std::lround(lo * std::pow(static_cast<double>(hi) / lo, t)));
    }
    return res;
  };
  GridConfig c;
  c.res_3d = ladder(levels_3d, lo_3d, hi_3d);
  c.res_2d = ladder(levels_2d, lo_2d, hi_2d);
  c.table_3d_max = table_3d_max;
  c.table_2d_max = table_2d_max;
  c.dim_embed = dim_embed;
  return c;
}

GridConfig GridConfig::Standard() {
  return Geometric(12, 16, 512, 4, 128, 1024, 1u << 13, 1u << 15, 4);
}

GridConfig GridConfig::Small() {
  return Geometric(6, 8, 64, 2, 32, 64, 1u << 12, 1u << 12, 4);
}

void GridConfig::Validate() const {
  if (levels() == 0) Fail(ErrorCode::kInvalidArgument, "grid has zero levels");
  if (dim_embed < 1) Fail(ErrorCode::kInvalidArgument, "grid dim_embed must be >= 1");
  auto check = [](const std::vector<uint32_t>& res, const char* family) {
    for (size_t l = 0; l < res.size(); ++l) {
      if (res[l] < 2 || res[l] > (1u << 20)) {
        Fail(ErrorCode::kInvalidArgument,
             std::string(family) + " resolution out of range at level " +
                 std::to_string(l));
      }
      if (l > 0 && res[l] <= res[l - 1]) {
        Fail(ErrorCode::kInvalidArgument,
             std::string(family) + " resolutions not strictly increasing");
      }
    }
  };
  check(res_3d, "3D");
  check(res_2d, "2D");
  if (!std::has_single_bit(table_3d_max) || !std::has_single_bit(table_2d_max)) {
    Fail(ErrorCode::kInvalidArgument, "grid table sizes must be powers of two");
  }
}

std::vector<GridLevel> LayoutLevels(const GridConfig& config) {
  std::vector<GridLevel> levels;
  size_t offset = 0;
  auto add = [&](uint32_t res, int dims, uint32_t table_max) {
    GridLevel level;
    level.res = res;
    level.dims = dims;
    const uint64_t cells = dims == 3 ? uint64_t{res} * res * res : uint64_t{res} * res;
    level.dense = cells <= table_max;
    level.table_size = static_cast<uint32_t>(std::min<uint64_t>(cells, table_max));
    level.offset = offset;
    offset += size_t{level.table_size} * config.dim_embed * level.tables();
    levels.push_back(level);
  };
  for (uint32_t r : config.res_3d) add(r, 3, config.table_3d_max);
  for (uint32_t r : config.res_2d) add(r, 2, config.table_2d_max);
  return levels;
}

size_t GridParamCount(const GridConfig& config) {
  size_t total = 0;
  for (const auto& level : LayoutLevels(config)) {
    total += size_t{level.table_size} * config.dim_embed * level.tables();
  }
  return total;
}

uint32_t HashIndex(uint32_t res, uint32_t table_size, std::span<const uint32_t> cell) {
  if (cell.size() != 2 && cell.size() != 3) {
    Fail(ErrorCode::kInvalidArgument, "hash cell must have 2 or 3 components");
  }
  uint64_t cells = 1;
  for (uint32_t c : cell) {
    if (c >= res) Fail(ErrorCode::kOutOfRange, "hash cell component out of range");
    cells *= res;
  }
  if (cells <= table_size) {
    uint64_t index = 0;
    uint64_t stride = 1;
    for (uint32_t c : cell) {
      index += c * stride;
      stride *= res;
    }
    return static_cast<uint32_t>(index);
  }
  uint64_t h = 0;
  for (size_t a = 0; a < cell.size(); ++a) h ^= uint64_t{cell[a]} * kHashPrimes[a];
  return static_cast<uint32_t>(h % table_size);
}

HashGrid::HashGrid(GridConfig config, std::vector<double> params)
    : config_(std::move(config)) {
  config_.Validate();
  levels_ = LayoutLevels(config_);
  if (params.size() != GridParamCount(config_)) {
    Fail(ErrorCode::kInvalidArgument, "grid parameter count mismatch");
  }
  params_ = std::move(params);
}

HashGrid HashGrid::Create(const GridConfig& config, uint64_t seed) {
  config.Validate();
  std::vector<double> params(GridParamCount(config));
  Rng rng(seed);
  for (double& p : params) p = rng.Uniform(-1e-2, 1e-2);
  return HashGrid(config, std::move(params));
}

double HashGrid::Forward(size_t index, BinarizeMode mode) const {
  const double theta = params_[index];
  return mode == BinarizeMode::kSign ? Binarize(theta) : std::tanh(theta);
}

double HashGrid::ForwardGrad(size_t index, BinarizeMode mode) const {
  const double theta = params_[index];
  if (mode == BinarizeMode::kSign) return std::abs(theta) <= 1.0 ? 1.0 : 0.0;
  const double t = std::tanh(theta);
  return 1.0 - t * t;
}

uint64_t HashGrid::CountPositive() const {
  return static_cast<uint64_t>(
      std::count_if(params_.begin(), params_.end(), [](double t) { return t >= 0.0; }));
}

namespace {

struct AxisSample {
  uint32_t base;
  double frac;
};

AxisSample SampleAxis(double x, uint32_t res) {
  const double pos = x * (res - 1);
  const double fl = std::floor(pos);
  uint32_t base = fl <= 0.0 ? 0u : static_cast<uint32_t>(fl);
  base = std::min(base, res - 2);
  return {base, pos - base};
}

constexpr int kPlaneAxes[3][2] = {{0, 1}, {0, 2}, {1, 2}};

}  // namespace

void Interpolate(const HashGrid& grid, const std::array<double, 3>& x_norm,
                 std::span<double> out, BinarizeMode mode, InterpTrace* trace) {
  const GridConfig& config = grid.config();
  const uint32_t dim = config.dim_embed;
  if (out.size() != config.feature_dim()) {
    Fail(ErrorCode::kInvalidArgument, "interpolation output has wrong width");
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (trace) trace->corners.clear();
  const auto params = grid.params();
  size_t slot = 0;

  auto blend = [&](uint32_t param, double weight) {
    for (uint32_t d = 0; d < dim; ++d) {
      const double v = mode == BinarizeMode::kSign ? Binarize(params[param + d])
                                                   : std::tanh(params[param + d]);
      out[slot + d] += weight * v;
    }
    if (trace) trace->corners.push_back({param, weight});
  };

  for (const GridLevel& level : grid.levels()) {
    if (level.dims == 3) {
      AxisSample s[3];
      for (int a = 0; a < 3; ++a) s[a] = SampleAxis(x_norm[a], level.res);
      for (int corner = 0; corner < 8; ++corner) {
        uint32_t cell[3];
        double w = 1.0;
        for (int a = 0; a < 3; ++a) {
          const bool hi = (corner >> a) & 1;
          cell[a] = s[a].base + (hi ? 1 : 0);
          w *= hi ? s[a].frac : 1.0 - s[a].frac;
        }
        const uint32_t index = HashIndex(level.res, level.table_size, cell);
        blend(static_cast<uint32_t>(level.offset + size_t{index} * dim), w);
      }
      slot += dim;
    } else {
      for (int plane = 0; plane < 3; ++plane) {
        AxisSample s[2];
        for (int a = 0; a < 2; ++a) s[a] = SampleAxis(x_norm[kPlaneAxes[plane][a]], level.res);
        const size_t table_offset = level.offset + static_cast<size_t>(plane) * level.table_size * dim;
        for (int corner = 0; corner < 4; ++corner) {
          uint32_t cell[2];
          double w = 1.0;
          for (int a = 0; a < 2; ++a) {
            const bool hi = (corner >> a) & 1;
            cell[a] = s[a].base + (hi ? 1 : 0);
            w *= hi ? s[a].frac : 1.0 - s[a].frac;
          }
          const uint32_t index =
              HashIndex(level.res, level.table_size, std::span<const uint32_t>(cell, 2));
          blend(static_cast<uint32_t>(table_offset + size_t{index} * dim), w);
        }
        slot += dim;
      }
    }
  }
}

void InterpolateBackward(const HashGrid& grid, const InterpTrace& trace,
                         std::span<const double> grad_feature,
                         std::span<double> grad_params, BinarizeMode mode) {
  const uint32_t dim = grid.config().dim_embed;
  size_t slot = 0;
  size_t next = 0;
  for (const GridLevel& level : grid.levels()) {
    for (int table = 0; table < level.tables(); ++table) {
      for (int corner = 0; corner < level.corners(); ++corner) {
        const InterpCorner& c = trace.corners[next++];
        for (uint32_t d = 0; d < dim; ++d) {
          grad_params[c.param + d] +=
              c.weight * grad_feature[slot + d] * grid.ForwardGrad(c.param + d, mode);
        }
      }
      slot += dim;
    }
  }
}

double HashCrossEntropyBits(double plus, double minus, double freq) {
  const double h = std::clamp(freq, kHashFreqEpsilon, 1.0 - kHashFreqEpsilon);
  return -(plus * std::log2(h) + minus * std::log2(1.0 - h));
}

double HashEntropyBits(double plus, double minus) {
  const double total = plus + minus;
  if (total <= 0.0) return 0.0;
  return HashCrossEntropyBits(plus, minus, plus / total);
}

double HashEntropyLoss(const HashGrid& grid) {
  const double plus = static_cast<double>(grid.CountPositive());
  return HashEntropyBits(plus, static_cast<double>(grid.param_count()) - plus);
}

double HashEntropyLossWithGrad(const HashGrid& grid, BinarizeMode mode,
                               double scale, std::span<double> grad) {
  const auto params = grid.params();
  const double total = static_cast<double>(params.size());
  double plus = 0.0;
  if (mode == BinarizeMode::kSign) {
    plus = static_cast<double>(grid.CountPositive());
  } else {
    for (double t : params) plus += 0.5 * (1.0 + std::tanh(t));
  }
  const double loss = HashEntropyBits(plus, total - plus);
  if (!grad.empty() && total > 0.0) {
    const double h = std::clamp(plus / total, kHashFreqEpsilon, 1.0 - kHashFreqEpsilon);
    // dL/dM+ is log2((1-h)/h) whether or not the clamp is active.
    const double d_plus = scale * std::log2((1.0 - h) / h);
    for (size_t i = 0; i < params.size(); ++i) {
      grad[i] += 0.5 * d_plus * grid.ForwardGrad(i, mode);
    }
  }
  return loss;
}

std::vector<uint8_t> PackGridBits(const HashGrid& grid) {
  const auto params = grid.params();
  std::vector<uint8_t> bits(params.size());
  for (size_t i = 0; i < params.size(); ++i) bits[i] = params[i] >= 0.0 ? 1 : 0;
  return bits;
}

HashGrid UnpackGridBits(std::span<const uint8_t> bits, const GridConfig& config) {
  const size_t expected = GridParamCount(config);
  if (bits.size() != expected) {
    Fail(ErrorCode::kInvalidArgument, "grid bit count " + std::to_string(bits.size()) +
                                          " does not match config (" +
                                          std::to_string(expected) + ")");
  }
  std::vector<double> params(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) params[i] = bits[i] ? 1.0 : -1.0;
  return HashGrid(config, std::move(params));
}

}  // namespace hac
