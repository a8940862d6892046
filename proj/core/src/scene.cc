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

#include "hac/scene.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "hac/bytes.h"
#include "hac/error.h"
#include "hac/rng.h"

namespace hac {

const char* FamilyName(Family family) {
  switch (family) {
    case Family::kFeature: return "f_a";
    case Family::kScaling: return "l";
    case Family::kOffset: return "o";
  }
  return "?";
}

std::array<double, 3> NormalizeLocation(const Aabb& bounds,
                                        std::span<const float, 3> location) {
  std::array<double, 3> out;
  for (int a = 0; a < 3; ++a) {
    const double lo = bounds.min[a];
    const double extent = static_cast<double>(bounds.max[a]) - lo;
    const double t = extent > 0.0 ? (location[a] - lo) / extent : 0.0;
    out[a] = std::clamp(t, 0.0, 1.0);
  }
  return out;
}

std::span<const float> AnchorScene::family_row(Family f, size_t i) const {
  switch (f) {
    case Family::kFeature:
      return {features.data() + i * dim_feat, dim_feat};
    case Family::kScaling:
      return {scalings.data() + i * kScalingDim, kScalingDim};
    case Family::kOffset:
      return {offsets.data() + i * 3 * k_offsets, 3 * k_offsets};
  }
  return {};
}

std::span<float> AnchorScene::family_row(Family f, size_t i) {
  const auto row = std::as_const(*this).family_row(f, i);
  return {const_cast<float*>(row.data()), row.size()};
}

void AnchorScene::AttributeRow(size_t i, std::span<double> out) const {
  size_t c = 0;
  for (int f = 0; f < kNumFamilies; ++f) {
    for (float v : family_row(static_cast<Family>(f), i)) out[c++] = v;
  }
}

namespace {

void CheckFinite(std::span<const float> values, const char* name) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      Fail(ErrorCode::kValidation, std::string("non-finite value in ") + name +
                                       " at element " + std::to_string(i));
    }
  }
}

void CheckSizes(const AnchorScene& s) {
  if (s.locations.size() != s.n * 3 || s.features.size() != s.n * s.dim_feat ||
      s.scalings.size() != s.n * kScalingDim ||
      s.offsets.size() != s.n * 3 * s.k_offsets) {
    Fail(ErrorCode::kValidation, "scene array sizes disagree with header");
  }
}

}  // namespace

void ValidateScene(const AnchorScene& s) {
  CheckSizes(s);
  CheckFinite(s.locations, "locations");
  CheckFinite(s.features, "features");
  CheckFinite(s.scalings, "scalings");
  CheckFinite(s.offsets, "offsets");
  for (size_t i = 0; i < s.scalings.size(); ++i) {
    if (!(s.scalings[i] > 0.0f && s.scalings[i] < 1.0f)) {
      Fail(ErrorCode::kValidation,
           "scalings element " + std::to_string(i) + " outside (0,1)");
    }
  }
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(s.bounds.min[a]) || !std::isfinite(s.bounds.max[a]) ||
        s.bounds.min[a] > s.bounds.max[a]) {
      Fail(ErrorCode::kValidation, "bounds min exceeds max");
    }
  }
  for (size_t i = 0; i < s.n; ++i) {
    for (int a = 0; a < 3; ++a) {
      const float x = s.locations[3 * i + a];
      if (x < s.bounds.min[a] || x > s.bounds.max[a]) {
        Fail(ErrorCode::kValidation,
             "location of anchor " + std::to_string(i) + " outside bounds");
      }
    }
  }
}

namespace {

constexpr int kNumBases = 12;

struct FourierBasis {
  std::array<double, 3> frequency;
  double phase;

  double operator()(std::span<const float, 3> x) const {
    const double arg = frequency[0] * x[0] + frequency[1] * x[1] +
                       frequency[2] * x[2];
    return std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * arg + phase);
  }
};

std::vector<FourierBasis> DrawBases(Rng& rng, int count) {
  std::vector<FourierBasis> bases(count);
  for (auto& b : bases) {
    for (double& w : b.frequency) w = rng.Uniform(-1.5, 1.5);
    b.phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  }
  return bases;
}

// Per-dimension mixing weights over the shared bases, normalized so each
// smooth field has roughly unit variance.
std::vector<double> DrawMixing(Rng& rng, size_t dims, int bases) {
  std::vector<double> w(dims * bases);
  const double scale = 1.0 / std::sqrt(static_cast<double>(bases));
  for (double& v : w) v = rng.Normal() * scale;
  return w;
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

AnchorScene SynthScene(uint64_t seed, size_t n, size_t dim_feat,
                       size_t k_offsets, double smoothness) {
  if (dim_feat < 1 || k_offsets < 1) {
    Fail(ErrorCode::kInvalidArgument, "dim_feat and k_offsets must be >= 1");
  }
  if (!(smoothness >= 0.0 && smoothness <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "smoothness must lie in [0,1]");
  }
  AnchorScene s;
  s.n = n;
  s.dim_feat = dim_feat;
  s.k_offsets = k_offsets;
  s.bounds = Aabb{};
  s.locations.resize(n * 3);
  s.features.resize(n * dim_feat);
  s.scalings.resize(n * kScalingDim);
  s.offsets.resize(n * 3 * k_offsets);

  Rng rng(seed);
  const auto bases = DrawBases(rng, kNumBases);
  const size_t width = dim_feat + kScalingDim + 3 * k_offsets;
  const auto mixing = DrawMixing(rng, width, kNumBases);
  const auto activity = DrawMixing(rng, k_offsets, kNumBases);
  std::vector<double> feature_bias(dim_feat);
  for (double& b : feature_bias) b = 0.5 * rng.Normal();

  for (float& x : s.locations) x = static_cast<float>(rng.Uniform());

  std::vector<double> basis_values(kNumBases);
  const double noise_weight = 1.0 - smoothness;
  for (size_t i = 0; i < n; ++i) {
    const auto x = s.location(i);
    for (int b = 0; b < kNumBases; ++b) basis_values[b] = bases[b](x);
    auto field = [&](const std::vector<double>& w, size_t d) {
      double acc = 0.0;
      for (int b = 0; b < kNumBases; ++b) acc += w[d * kNumBases + b] * basis_values[b];
      return acc;
    };
    auto mixed = [&](size_t d) {
      return smoothness * field(mixing, d) + noise_weight * rng.Normal();
    };
    for (size_t d = 0; d < dim_feat; ++d) {
      s.features[i * dim_feat + d] =
          static_cast<float>(feature_bias[d] + 2.0 * mixed(d));
    }
    for (size_t d = 0; d < kScalingDim; ++d) {
      s.scalings[i * kScalingDim + d] =
          static_cast<float>(Sigmoid(-3.0 + 0.6 * mixed(dim_feat + d)));
    }
    for (size_t j = 0; j < k_offsets; ++j) {
      const bool active = field(activity, j) > -0.5;
      for (size_t c = 0; c < 3; ++c) {
        const size_t d = dim_feat + kScalingDim + 3 * j + c;
        const double v = mixed(d);
        s.offsets[i * 3 * k_offsets + 3 * j + c] =
            active ? static_cast<float>(0.4 * v) : 0.0f;
      }
    }
  }
  return s;
}

Aabb SceneBounds(const AnchorScene& scene, double pad) {
  if (scene.n == 0) Fail(ErrorCode::kInvalidArgument, "bounds of an empty scene");
  Aabb box;
  for (int a = 0; a < 3; ++a) {
    float lo = scene.locations[a];
    float hi = lo;
    for (size_t i = 1; i < scene.n; ++i) {
      lo = std::min(lo, scene.locations[3 * i + a]);
      hi = std::max(hi, scene.locations[3 * i + a]);
    }
    const double extent = static_cast<double>(hi) - lo;
    const double grow = extent > 0.0 ? pad * extent : kBoundsEpsilon;
    // Round outward so float storage never shrinks the box.
    box.min[a] = std::nextafter(static_cast<float>(lo - grow), -INFINITY);
    box.max[a] = std::nextafter(static_cast<float>(hi + grow), INFINITY);
    if (grow == 0.0) {
      box.min[a] = lo;
      box.max[a] = hi;
    }
  }
  return box;
}

std::vector<uint8_t> SerializeScene(const AnchorScene& s) {
  ValidateScene(s);
  ByteWriter w;
  w.Tag("HACS");
  w.U32(kSceneVersion);
  w.U64(s.n);
  w.U64(s.dim_feat);
  w.U64(s.k_offsets);
  for (float v : s.bounds.min) w.F32(v);
  for (float v : s.bounds.max) w.F32(v);
  w.F32Array(s.locations);
  w.F32Array(s.features);
  w.F32Array(s.scalings);
  w.F32Array(s.offsets);
  return w.Take();
}

AnchorScene ParseScene(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kIo, "scene file");
  if (!r.TagIs("HACS")) Fail(ErrorCode::kFormat, "scene file: bad magic");
  const uint32_t version = r.U32();
  if (version != kSceneVersion) {
    Fail(ErrorCode::kFormat,
         "scene file: unsupported version " + std::to_string(version));
  }
  AnchorScene s;
  s.n = r.U64();
  s.dim_feat = r.U64();
  s.k_offsets = r.U64();
  // Guard the allocation below against absurd headers.
  const uint64_t row = 3 + s.dim_feat + kScalingDim + 3 * s.k_offsets;
  if (s.dim_feat > (1u << 20) || s.k_offsets > (1u << 20) ||
      (s.n != 0 && s.n > r.remaining() / (row * 4))) {
    Fail(ErrorCode::kIo, "scene file: truncated or inconsistent header");
  }
  for (float& v : s.bounds.min) v = r.F32();
  for (float& v : s.bounds.max) v = r.F32();
  s.locations.resize(s.n * 3);
  s.features.resize(s.n * s.dim_feat);
  s.scalings.resize(s.n * kScalingDim);
  s.offsets.resize(s.n * 3 * s.k_offsets);
  r.F32Array(s.locations);
  r.F32Array(s.features);
  r.F32Array(s.scalings);
  r.F32Array(s.offsets);
  if (r.remaining() != 0) Fail(ErrorCode::kFormat, "scene file: trailing bytes");
  ValidateScene(s);
  return s;
}

void SaveScene(const AnchorScene& scene, const std::string& path) {
  WriteFileBytes(path, SerializeScene(scene));
}

AnchorScene LoadScene(const std::string& path) {
  return ParseScene(ReadFileBytes(path));
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace hac
