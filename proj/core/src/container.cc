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

#include "hac/container.h"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <future>
#include <string>

#include "hac/bytes.h"
#include "hac/error.h"
#include "hac/half.h"

namespace hac {

const char* SectionName(Section section) {
  switch (section) {
    case Section::kMlp: return "mlp";
    case Section::kLocations: return "locations";
    case Section::kMasks: return "masks";
    case Section::kGrid: return "grid";
    case Section::kAttributes: return "attributes";
  }
  return "?";
}

namespace {

constexpr size_t kRateBatch = 256;

// Per-value coding parameters of one family stream, in coding order.
struct ValueModel {
  uint32_t anchor = 0;
  uint32_t column = 0;
  double mu = 0.0;
  double sigma = 0.0;
  double q = 0.0;
};

std::vector<ValueModel> FamilyStream(const AttributeLayout& layout,
                                     std::span<const RateParams> rates,
                                     std::span<const uint8_t> mask_bits, Family family) {
  std::vector<ValueModel> out;
  const int f = static_cast<int>(family);
  const size_t begin = layout.Begin(family);
  const size_t width = layout.Width(family);
  const size_t k = layout.k_offsets;
  for (size_t i = 0; i < rates.size(); ++i) {
    for (size_t c = begin; c < begin + width; ++c) {
      if (family == Family::kOffset && !mask_bits[i * k + (c - begin) / 3]) continue;
      out.push_back({static_cast<uint32_t>(i), static_cast<uint32_t>(c), rates[i].mu[c],
                     rates[i].sigma[c], rates[i].q[f]});
    }
  }
  return out;
}

CdfProvider Provider(const std::vector<ValueModel>& values, CdfCache& cache) {
  return [&values, &cache](size_t i) {
    const ValueModel& v = values[i];
    return cache.Get(SnapParams(v.mu, v.sigma, v.q));
  };
}

uint32_t BinaryFrequency(std::span<const uint8_t> bits) {
  if (bits.empty()) return kProbScale / 2;
  size_t ones = 0;
  for (uint8_t b : bits) ones += b ? 1 : 0;
  return BinaryModel::FromProbability(static_cast<double>(ones) /
                                      static_cast<double>(bits.size()))
      .freq_one;
}

void WriteHeader(ByteWriter& w, const ContainerHeader& h) {
  w.Tag("HACZ");
  w.U32(h.version);
  w.U32(static_cast<uint32_t>(h.grid.res_3d.size()));
  for (uint32_t r : h.grid.res_3d) w.U32(r);
  w.U32(static_cast<uint32_t>(h.grid.res_2d.size()));
  for (uint32_t r : h.grid.res_2d) w.U32(r);
  w.U32(h.grid.table_3d_max);
  w.U32(h.grid.table_2d_max);
  w.U32(h.grid.dim_embed);
  w.U32(h.dim_feat);
  w.U32(h.k_offsets);
  w.U64(h.n_kept);
  w.U64(h.kept_offset_slots);
  for (float q : h.q0) w.F32(q);
  w.U32(h.mlp_input);
  w.U32(h.mlp_hidden);
  w.U32(h.mlp_output);
  w.U32(h.ratio_grid_size);
  w.U32(h.ratio_per_octave);
  w.U32(h.ratio_center);
  w.F32(h.sigma_min_factor);
  w.F32(h.sigma_max_factor);
  w.U32(h.mu_divisions);
  for (float v : h.bounds.min) w.F32(v);
  for (float v : h.bounds.max) w.F32(v);
  w.F32(h.lambda_e);
  w.F32(h.lambda_m);
  w.U32(h.mask_freq_one);
  w.U32(h.grid_freq_one);
  for (uint64_t b : h.family_bytes) w.U64(b);
  for (const SectionEntry& s : h.sections) {
    w.U64(s.offset);
    w.U64(s.length);
  }
}

[[noreturn]] void Corrupt(const std::string& what) { Fail(ErrorCode::kFormat, "hacz header: " + what); }

}  // namespace

ContainerHeader ParseHeader(std::span<const uint8_t> blob) {
  ByteReader r(blob, ErrorCode::kFormat, "hacz header");
  if (!r.TagIs("HACZ")) Fail(ErrorCode::kFormat, "bad magic, not a .hacz file");
  ContainerHeader h;
  h.version = r.U32();
  if (h.version != kContainerVersion) {
    Fail(ErrorCode::kFormat, "unsupported container version " + std::to_string(h.version));
  }
  auto read_levels = [&r](std::vector<uint32_t>& out) {
    const uint32_t n = r.U32();
    if (n > 64) Corrupt("implausible level count");
    out.resize(n);
    for (uint32_t& v : out) v = r.U32();
  };
  read_levels(h.grid.res_3d);
  read_levels(h.grid.res_2d);
  h.grid.table_3d_max = r.U32();
  h.grid.table_2d_max = r.U32();
  h.grid.dim_embed = r.U32();
  h.dim_feat = r.U32();
  h.k_offsets = r.U32();
  h.n_kept = r.U64();
  h.kept_offset_slots = r.U64();
  for (float& q : h.q0) q = r.F32();
  h.mlp_input = r.U32();
  h.mlp_hidden = r.U32();
  h.mlp_output = r.U32();
  h.ratio_grid_size = r.U32();
  h.ratio_per_octave = r.U32();
  h.ratio_center = r.U32();
  h.sigma_min_factor = r.F32();
  h.sigma_max_factor = r.F32();
  h.mu_divisions = r.U32();
  for (float& v : h.bounds.min) v = r.F32();
  for (float& v : h.bounds.max) v = r.F32();
  h.lambda_e = r.F32();
  h.lambda_m = r.F32();
  h.mask_freq_one = r.U32();
  h.grid_freq_one = r.U32();
  for (uint64_t& b : h.family_bytes) b = r.U64();
  for (SectionEntry& s : h.sections) {
    s.offset = r.U64();
    s.length = r.U64();
  }
  h.header_bytes = r.position();

  try {
    h.grid.Validate();
  } catch (const Error& e) {
    Corrupt(std::string("grid config: ") + e.what());
  }
  if (h.dim_feat == 0 || h.k_offsets == 0) Corrupt("zero attribute dimensions");
  if (h.ratio_grid_size != kRatioGridSize || h.ratio_per_octave != kRatioPerOctave ||
      h.ratio_center != kRatioCenter || h.mu_divisions != kMuDivisions ||
      h.sigma_min_factor != static_cast<float>(kSigmaMinFactor) ||
      h.sigma_max_factor != static_cast<float>(kSigmaMaxFactor)) {
    Corrupt("unsupported symbol-table grid");
  }
  for (float q : h.q0) {
    if (!(q > 0.0f) || !std::isfinite(q)) Corrupt("non-positive Q0");
  }
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(h.bounds.min[a]) || !std::isfinite(h.bounds.max[a]) ||
        !(h.bounds.min[a] <= h.bounds.max[a])) {
      Corrupt("invalid bounds");
    }
  }
  if (h.mask_freq_one < 1 || h.mask_freq_one >= kProbScale || h.grid_freq_one < 1 ||
      h.grid_freq_one >= kProbScale) {
    Corrupt("binary model frequency out of range");
  }
  if (h.mlp_input != h.grid.feature_dim()) Corrupt("MLP input does not match grid features");
  if (h.mlp_hidden == 0 || h.mlp_hidden > 4096) Corrupt("implausible MLP width");
  if (h.mlp_output != 3 + 2 * h.layout().total()) Corrupt("MLP output does not match layout");
  if (h.kept_offset_slots > h.n_kept * h.k_offsets) Corrupt("kept offsets exceed slots");
  if (h.kept_offset_slots < h.n_kept) Corrupt("kept anchor without offsets");

  const uint64_t mlp_params =
      uint64_t{h.mlp_hidden} * (h.mlp_input + 1) + uint64_t{h.mlp_hidden} * (h.mlp_hidden + 1) +
      uint64_t{h.mlp_output} * (h.mlp_hidden + 1);
  if (h.sections[0].length != 4 * mlp_params) Corrupt("MLP section length mismatch");
  if (h.sections[1].length != 6 * h.n_kept) Corrupt("location section length mismatch");
  uint64_t family_sum = 0;
  for (uint64_t b : h.family_bytes) family_sum += b;
  if (family_sum != h.sections[4].length) Corrupt("attribute sub-stream lengths disagree");

  uint64_t cursor = h.header_bytes;
  for (int s = 0; s < kNumSections; ++s) {
    const SectionEntry& e = h.sections[s];
    if (e.offset < cursor) Corrupt(std::string("section ") + SectionName(static_cast<Section>(s)) + " overlaps");
    if (e.length > blob.size() || e.offset > blob.size() - e.length) {
      Fail(ErrorCode::kSectionOverrun,
           std::string("section ") + SectionName(static_cast<Section>(s)) +
               " extends past the end of the file (" + std::to_string(blob.size()) + " bytes)");
    }
    cursor = e.offset + e.length;
  }
  return h;
}

std::vector<RateParams> DecodedRateParams(const HashGrid& grid, const ContextModel& model,
                                          const Aabb& bounds,
                                          std::span<const float> locations) {
  const size_t n = locations.size() / 3;
  const size_t dim = grid.config().feature_dim();
  std::vector<RateParams> out(n);
  Eigen::MatrixXd x;
  MlpCache cache;
  for (size_t start = 0; start < n; start += kRateBatch) {
    const size_t count = std::min(kRateBatch, n - start);
    x.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
    for (size_t j = 0; j < count; ++j) {
      const std::span<const float, 3> loc(locations.data() + 3 * (start + j), 3);
      Interpolate(grid, NormalizeLocation(bounds, loc),
                  std::span<double>(x.col(static_cast<Eigen::Index>(j)).data(), dim));
    }
    MlpForward(model, x, &cache);
    for (size_t j = 0; j < count; ++j) {
      const auto col = cache.y.col(static_cast<Eigen::Index>(j));
      DecodeOutput(model, std::span<const double>(col.data(), static_cast<size_t>(col.size())),
                   &out[start + j]);
    }
  }
  return out;
}

std::vector<uint8_t> EncodeScene(const AnchorScene& scene, const CodecArtifacts& artifacts,
                                 CodecTrace* trace) {
  ValidateScene(scene);
  const AttributeLayout layout = scene.layout();
  if (layout.dim_feat == 0 || layout.k_offsets == 0) {
    Fail(ErrorCode::kInvalidArgument, "encoding needs D^a >= 1 and K >= 1");
  }
  if (!(artifacts.model.layout() == layout)) {
    Fail(ErrorCode::kInvalidArgument, "context model layout does not match the scene");
  }
  if (artifacts.model.input_dim() != artifacts.grid.config().feature_dim()) {
    Fail(ErrorCode::kInvalidArgument, "context model input does not match the grid features");
  }

  CodecTrace local;
  CodecTrace& t = trace ? *trace : local;
  t = CodecTrace{};

  // Everything below is evaluated at the precision the decoder will see.
  const ContextModel model = artifacts.model.RoundedToFloat();
  t.grid_bits = PackGridBits(artifacts.grid);
  const HashGrid grid = UnpackGridBits(t.grid_bits, artifacts.grid.config());

  const PruneResult kept = Prune(scene, artifacts.masks);
  const size_t n_kept = kept.kept_anchors.size();
  const size_t k = layout.k_offsets;
  t.kept_anchors = kept.kept_anchors;
  t.locations.resize(3 * n_kept);
  t.mask_bits.assign(n_kept * k, 0);
  std::vector<uint16_t> halves(3 * n_kept);
  for (size_t i = 0; i < n_kept; ++i) {
    const size_t src = kept.kept_anchors[i];
    for (int a = 0; a < 3; ++a) {
      halves[3 * i + a] = FloatToHalf(scene.locations[3 * src + a]);
      t.locations[3 * i + a] = HalfToFloat(halves[3 * i + a]);
      if (!std::isfinite(t.locations[3 * i + a])) {
        Fail(ErrorCode::kOutOfRange,
             "location of anchor " + std::to_string(src) + " overflows half precision");
      }
    }
    for (uint32_t slot : kept.kept_offsets[i]) t.mask_bits[i * k + slot] = 1;
  }

  t.rates = DecodedRateParams(grid, model, artifacts.bounds, t.locations);

  std::array<std::vector<ValueModel>, kNumFamilies> streams;
  std::vector<double> row(layout.total());
  for (int f = 0; f < kNumFamilies; ++f) {
    streams[f] = FamilyStream(layout, t.rates, t.mask_bits, static_cast<Family>(f));
    t.symbols[f].reserve(streams[f].size());
  }
  for (int f = 0; f < kNumFamilies; ++f) {
    size_t last_anchor = SIZE_MAX;
    for (const ValueModel& v : streams[f]) {
      const size_t src = kept.kept_anchors[v.anchor];
      if (v.anchor != last_anchor) {
        scene.AttributeRow(src, row);
        last_anchor = v.anchor;
      }
      const Quantized qv = QuantizeTest(row[v.column], v.q);
      if (qv.k < kSymbolMin || qv.k > kSymbolMax) {
        Fail(ErrorCode::kOutOfRange,
             "anchor " + std::to_string(src) + " " + FamilyName(static_cast<Family>(f)) +
                 " component " + std::to_string(v.column - layout.Begin(static_cast<Family>(f))) +
                 " quantizes to symbol " + std::to_string(qv.k) + ", outside [" +
                 std::to_string(kSymbolMin) + ", " + std::to_string(kSymbolMax) + "]");
      }
      t.symbols[f].push_back(static_cast<int32_t>(qv.k));
    }
  }

  std::array<std::future<std::vector<uint8_t>>, kNumFamilies> jobs;
  for (int f = 0; f < kNumFamilies; ++f) {
    jobs[f] = std::async(std::launch::async, [&, f] {
      if (t.symbols[f].empty()) return std::vector<uint8_t>{};
      CdfCache cache;
      return RangeEncodeSymbols(t.symbols[f], Provider(streams[f], cache), &t.stream_stats[f]);
    });
  }
  std::array<std::vector<uint8_t>, kNumFamilies> family_payload;
  for (int f = 0; f < kNumFamilies; ++f) family_payload[f] = jobs[f].get();

  ContainerHeader h;
  h.grid = artifacts.grid.config();
  h.dim_feat = static_cast<uint32_t>(layout.dim_feat);
  h.k_offsets = static_cast<uint32_t>(layout.k_offsets);
  h.n_kept = n_kept;
  h.kept_offset_slots = kept.total_kept_offsets();
  for (int f = 0; f < kNumFamilies; ++f) h.q0[f] = static_cast<float>(model.q0()[f]);
  h.mlp_input = static_cast<uint32_t>(model.input_dim());
  h.mlp_hidden = static_cast<uint32_t>(model.hidden_dim());
  h.mlp_output = static_cast<uint32_t>(model.output_dim());
  h.sigma_min_factor = static_cast<float>(kSigmaMinFactor);
  h.sigma_max_factor = static_cast<float>(kSigmaMaxFactor);
  h.bounds = artifacts.bounds;
  h.lambda_e = static_cast<float>(artifacts.lambda_e);
  h.lambda_m = static_cast<float>(artifacts.lambda_m);
  h.mask_freq_one = BinaryFrequency(t.mask_bits);
  h.grid_freq_one = BinaryFrequency(t.grid_bits);

  std::array<std::vector<uint8_t>, kNumSections> payload;
  {
    std::vector<double> flat(model.parameter_count());
    model.Flatten(flat);
    ByteWriter w;
    for (double v : flat) w.F32(static_cast<float>(v));
    payload[0] = w.Take();
  }
  {
    ByteWriter w;
    for (uint16_t v : halves) w.U16(v);
    payload[1] = w.Take();
  }
  if (!t.mask_bits.empty()) payload[2] = EncodeBits(t.mask_bits, {h.mask_freq_one});
  payload[3] = EncodeBits(t.grid_bits, {h.grid_freq_one});
  for (int f = 0; f < kNumFamilies; ++f) {
    h.family_bytes[f] = family_payload[f].size();
    payload[4].insert(payload[4].end(), family_payload[f].begin(), family_payload[f].end());
  }

  ByteWriter sizing;
  WriteHeader(sizing, h);
  uint64_t offset = sizing.size();
  for (int s = 0; s < kNumSections; ++s) {
    h.sections[s] = {offset, payload[s].size()};
    offset += payload[s].size();
  }
  ByteWriter w;
  WriteHeader(w, h);
  for (const auto& p : payload) w.Bytes(p);
  return w.Take();
}

DecodedScene DecodeScene(std::span<const uint8_t> blob) {
  const ContainerHeader h = ParseHeader(blob);
  const AttributeLayout layout = h.layout();
  auto section = [&](Section s) {
    const SectionEntry& e = h.sections[static_cast<int>(s)];
    return blob.subspan(e.offset, e.length);
  };

  DecodedScene out;
  CodecArtifacts& art = out.artifacts;
  CodecTrace& t = out.trace;
  const size_t n = h.n_kept;
  const size_t k = h.k_offsets;

  FamilySteps q0{};
  for (int f = 0; f < kNumFamilies; ++f) q0[f] = h.q0[f];
  art.model = ContextModel(h.mlp_input, h.mlp_hidden, layout, q0);
  {
    ByteReader r(section(Section::kMlp), ErrorCode::kSectionOverrun, "mlp section");
    std::vector<double> flat(art.model.parameter_count());
    for (double& v : flat) v = r.F32();
    art.model.Unflatten(flat);
  }

  t.locations.resize(3 * n);
  {
    ByteReader r(section(Section::kLocations), ErrorCode::kSectionOverrun, "location section");
    for (float& v : t.locations) {
      v = HalfToFloat(r.U16());
      if (!std::isfinite(v)) Fail(ErrorCode::kValidation, "non-finite anchor location");
    }
  }

  t.mask_bits = DecodeBits(section(Section::kMasks), n * k, {h.mask_freq_one});
  uint64_t ones = 0;
  for (size_t i = 0; i < n; ++i) {
    size_t row_ones = 0;
    for (size_t j = 0; j < k; ++j) row_ones += t.mask_bits[i * k + j];
    if (row_ones == 0) Fail(ErrorCode::kValidation, "stored anchor " + std::to_string(i) + " has no offsets");
    ones += row_ones;
  }
  if (ones != h.kept_offset_slots) Fail(ErrorCode::kValidation, "mask bits disagree with header");
  art.masks = MaskSet::FromBits(n, k, t.mask_bits);

  t.grid_bits = DecodeBits(section(Section::kGrid), GridParamCount(h.grid), {h.grid_freq_one});
  art.grid = UnpackGridBits(t.grid_bits, h.grid);
  art.bounds = h.bounds;
  art.lambda_e = h.lambda_e;
  art.lambda_m = h.lambda_m;

  t.rates = DecodedRateParams(art.grid, art.model, art.bounds, t.locations);

  std::array<std::vector<ValueModel>, kNumFamilies> streams;
  std::array<std::span<const uint8_t>, kNumFamilies> family_bytes;
  size_t cursor = 0;
  const auto s5 = section(Section::kAttributes);
  for (int f = 0; f < kNumFamilies; ++f) {
    streams[f] = FamilyStream(layout, t.rates, t.mask_bits, static_cast<Family>(f));
    family_bytes[f] = s5.subspan(cursor, h.family_bytes[f]);
    cursor += h.family_bytes[f];
    if (streams[f].empty() != family_bytes[f].empty()) {
      Fail(ErrorCode::kValidation, std::string(FamilyName(static_cast<Family>(f))) +
                                       " stream length disagrees with its symbol count");
    }
  }
  std::array<std::future<std::vector<int32_t>>, kNumFamilies> jobs;
  for (int f = 0; f < kNumFamilies; ++f) {
    jobs[f] = std::async(std::launch::async, [&, f] {
      CdfCache cache;
      return RangeDecodeSymbols(family_bytes[f], streams[f].size(), Provider(streams[f], cache));
    });
  }
  for (int f = 0; f < kNumFamilies; ++f) t.symbols[f] = jobs[f].get();

  AnchorScene& s = out.scene;
  s.n = n;
  s.dim_feat = layout.dim_feat;
  s.k_offsets = k;
  s.locations = t.locations;
  s.features.assign(n * layout.dim_feat, 0.0f);
  s.scalings.assign(n * kScalingDim, 0.0f);
  s.offsets.assign(n * 3 * k, 0.0f);
  for (int f = 0; f < kNumFamilies; ++f) {
    const Family fam = static_cast<Family>(f);
    const size_t begin = layout.Begin(fam);
    for (size_t v = 0; v < streams[f].size(); ++v) {
      const ValueModel& m = streams[f][v];
      float value = static_cast<float>(static_cast<double>(t.symbols[f][v]) * m.q);
      if (fam == Family::kScaling) value = std::clamp(value, FLT_TRUE_MIN, std::nextafter(1.0f, 0.0f));
      s.family_row(fam, m.anchor)[m.column - begin] = value;
    }
  }
  s.bounds = art.bounds;
  for (size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      s.bounds.min[a] = std::min(s.bounds.min[a], s.locations[3 * i + a]);
      s.bounds.max[a] = std::max(s.bounds.max[a], s.locations[3 * i + a]);
    }
  }
  t.kept_anchors.resize(n);
  for (size_t i = 0; i < n; ++i) t.kept_anchors[i] = i;
  return out;
}

SectionReport Inspect(std::span<const uint8_t> blob) {
  const ContainerHeader h = ParseHeader(blob);
  SectionReport r;
  r.file_bytes = blob.size();
  r.header_bytes = h.header_bytes;
  r.sections = h.sections;
  r.n_kept = h.n_kept;
  r.kept_offset_slots = h.kept_offset_slots;
  const std::array<uint64_t, kNumFamilies> values = {
      h.n_kept * h.dim_feat, h.n_kept * kScalingDim, 3 * h.kept_offset_slots};
  for (int f = 0; f < kNumFamilies; ++f) {
    FamilyReport& fr = r.families[f];
    fr.family = static_cast<Family>(f);
    fr.bytes = h.family_bytes[f];
    fr.values = values[f];
    fr.bits_per_param = values[f] ? 8.0 * static_cast<double>(fr.bytes) / static_cast<double>(values[f]) : 0.0;
  }
  return r;
}

namespace {

bool SameRates(const RateParams& a, const RateParams& b) {
  return a.q == b.q && a.mu == b.mu && a.sigma == b.sigma;
}

}  // namespace

VerifyReport VerifyRoundTrip(const AnchorScene& scene, const CodecArtifacts& artifacts) {
  VerifyReport report;
  CodecTrace enc;
  const std::vector<uint8_t> blob = EncodeScene(scene, artifacts, &enc);
  report.blob_bytes = blob.size();
  const DecodedScene dec = DecodeScene(blob);
  const CodecTrace& d = dec.trace;
  auto fail = [&report](std::string what) {
    report.mismatch = std::move(what);
    return report;
  };

  if (dec.scene.n != enc.kept_anchors.size()) return fail("surviving anchor count");
  if (std::memcmp(enc.locations.data(), d.locations.data(),
                  enc.locations.size() * sizeof(float)) != 0) {
    return fail("half-precision locations");
  }
  if (enc.mask_bits != d.mask_bits) return fail("mask bits");
  if (enc.grid_bits != d.grid_bits) return fail("grid bits");
  {
    const ContextModel rounded = artifacts.model.RoundedToFloat();
    std::vector<double> a(rounded.parameter_count());
    std::vector<double> b(dec.artifacts.model.parameter_count());
    rounded.Flatten(a);
    dec.artifacts.model.Flatten(b);
    if (a != b || rounded.q0() != dec.artifacts.model.q0()) return fail("MLP weights");
  }
  for (size_t i = 0; i < enc.rates.size(); ++i) {
    if (!SameRates(enc.rates[i], d.rates[i])) {
      return fail("rate parameters of surviving anchor " + std::to_string(i));
    }
  }
  const AttributeLayout layout = scene.layout();
  for (int f = 0; f < kNumFamilies; ++f) {
    if (enc.symbols[f] != d.symbols[f]) {
      return fail(std::string(FamilyName(static_cast<Family>(f))) + " symbols");
    }
  }
  // Dequantized values in the decoded scene are k*q at float precision.
  for (size_t i = 0; i < dec.scene.n; ++i) {
    for (size_t c = 0; c < layout.dim_feat; ++c) {
      const float expect = static_cast<float>(
          static_cast<double>(enc.symbols[0][i * layout.dim_feat + c]) * enc.rates[i].q[0]);
      if (dec.scene.features[i * layout.dim_feat + c] != expect) return fail("dequantized features");
    }
  }
  const std::vector<uint8_t> again = EncodeScene(dec.scene, dec.artifacts);
  if (again != blob) return fail("re-encoding the decoded scene changed the blob");
  report.bit_exact = true;
  return report;
}

}  // namespace hac
