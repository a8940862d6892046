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

#include "hac/coder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "hac/error.h"
#include "hac/ratemodel.h"

namespace hac {

namespace {
constexpr uint32_t kTopValue = 1u << 24;
}  // namespace

void RangeEncoder::ShiftLow() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t pending = cache_;
    do {
      const uint8_t byte = static_cast<uint8_t>(pending + carry);
      if (leading_) {
        // The first byte of an LZMA-style stream is always zero; drop it.
        if (byte != 0) Fail(ErrorCode::kOutOfRange, "range coder carry into leading byte");
        leading_ = false;
      } else {
        out_.push_back(byte);
      }
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::Encode(uint32_t cum_low, uint32_t freq) {
  const uint32_t step = range_ >> kProbBits;
  low_ += uint64_t{step} * cum_low;
  range_ = cum_low + freq == kProbScale ? range_ - step * cum_low : step * freq;
  while (range_ < kTopValue) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::EncodeBit(bool bit, uint32_t freq_one) {
  const uint32_t freq_zero = kProbScale - freq_one;
  if (bit) {
    Encode(freq_zero, freq_one);
  } else {
    Encode(0, freq_zero);
  }
}

void RangeEncoder::EncodeRawBits(uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) EncodeBit((value >> i) & 1u, kProbScale / 2);
}

std::vector<uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 5; ++i) ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ >= bytes_.size()) {
    Fail(ErrorCode::kSectionOverrun,
         "range decoder ran past the end of its " + std::to_string(bytes_.size()) +
             "-byte stream");
  }
  return bytes_[pos_++];
}

void RangeDecoder::Normalize() {
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::PeekFrequency() {
  step_ = range_ >> kProbBits;
  return std::min(code_ / step_, kProbScale - 1);
}

void RangeDecoder::Consume(uint32_t cum_low, uint32_t freq) {
  code_ -= step_ * cum_low;
  range_ = cum_low + freq == kProbScale ? range_ - step_ * cum_low : step_ * freq;
  Normalize();
}

bool RangeDecoder::DecodeBit(uint32_t freq_one) {
  const uint32_t freq_zero = kProbScale - freq_one;
  const bool bit = PeekFrequency() >= freq_zero;
  if (bit) {
    Consume(freq_zero, freq_one);
  } else {
    Consume(0, freq_zero);
  }
  return bit;
}

uint32_t RangeDecoder::DecodeRawBits(int count) {
  uint32_t value = 0;
  for (int i = 0; i < count; ++i) value = (value << 1) | (DecodeBit(kProbScale / 2) ? 1u : 0u);
  return value;
}

size_t CdfTable::Find(uint32_t target) const {
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  return static_cast<size_t>(it - cum.begin()) - 1;
}

double SigmaRatioAt(int ratio_index) {
  return std::exp2(static_cast<double>(ratio_index - kRatioCenter) / kRatioPerOctave);
}

double SnappedParams::sigma(double q) const { return SigmaRatioAt(ratio_index) * q; }

SnappedParams SnapParams(double mu, double sigma, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    Fail(ErrorCode::kInvalidArgument, "quantization step must be positive and finite");
  }
  if (!(sigma > 0.0) || !std::isfinite(mu)) {
    Fail(ErrorCode::kInvalidArgument, "cdf parameters must be finite with sigma > 0");
  }
  SnappedParams s;
  const double units = std::clamp(mu / q * kMuDivisions, -0x1p40, 0x1p40);
  s.mu_units = std::llround(units);
  const double octaves = std::log2(sigma / q);
  const double index = std::round(octaves * kRatioPerOctave) + kRatioCenter;
  s.ratio_index = static_cast<int>(std::clamp(index, 0.0, double{kRatioGridSize - 1}));
  return s;
}

std::vector<uint32_t> QuantizeMass(std::span<const double> mass) {
  const size_t n = mass.size();
  if (n == 0 || n > kProbScale) {
    Fail(ErrorCode::kInvalidArgument, "cannot apportion " + std::to_string(n) + " bins");
  }
  std::vector<uint32_t> freq(n, 0);
  std::vector<char> floored(n, 0);
  size_t n_floored = 0;
  // Bins whose share would round below one count are pinned to one; the rest
  // share what remains proportionally. Pinning shrinks the shares, so repeat
  // until stable.
  for (;;) {
    double free_mass = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (!floored[i]) free_mass += mass[i];
    }
    const double budget = static_cast<double>(kProbScale - n_floored);
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      if (floored[i]) continue;
      if (!(free_mass > 0.0) || mass[i] * budget / free_mass < 1.0) {
        floored[i] = 1;
        ++n_floored;
        changed = true;
      }
    }
    if (!changed || n_floored == n) break;
  }

  std::vector<double> remainder(n, -1.0);
  uint64_t assigned = n_floored;
  double free_mass = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!floored[i]) free_mass += mass[i];
  }
  const double budget = static_cast<double>(kProbScale - n_floored);
  for (size_t i = 0; i < n; ++i) {
    if (floored[i]) {
      freq[i] = 1;
      continue;
    }
    const double share = mass[i] * budget / free_mass;
    const double whole = std::floor(share);
    freq[i] = static_cast<uint32_t>(whole);
    remainder[i] = share - whole;
    assigned += freq[i];
  }
  if (assigned > kProbScale) Fail(ErrorCode::kOutOfRange, "cdf apportionment overflow");
  size_t leftover = kProbScale - assigned;
  if (leftover > 0) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    // Largest remainder first, lower index on ties.
    const auto before = [&](size_t a, size_t b) {
      return remainder[a] != remainder[b] ? remainder[a] > remainder[b] : a < b;
    };
    if (leftover < n) {
      std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(leftover),
                       order.end(), before);
    }
    // leftover never exceeds the number of proportional bins, except when
    // every bin was pinned; then spread round-robin.
    for (size_t i = 0; leftover > 0; i = (i + 1) % n, --leftover) ++freq[order[i]];
  }

  std::vector<uint32_t> cum(n + 1, 0);
  for (size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + freq[i];
  return cum;
}

CdfTable BuildCdfSnapped(const SnappedParams& snapped) {
  const double m = static_cast<double>(snapped.mu_units) / kMuDivisions;
  const double ratio = SigmaRatioAt(snapped.ratio_index);
  int64_t lo = static_cast<int64_t>(std::floor(m - kTailSigmas * ratio)) - 1;
  int64_t hi = static_cast<int64_t>(std::ceil(m + kTailSigmas * ratio)) + 1;
  lo = std::max<int64_t>(lo, kSymbolMin);
  hi = std::min<int64_t>(hi, kSymbolMax);
  if (hi - lo < 1) {
    // The whole distribution lies beyond the global bounds.
    if (m > 0.0) {
      lo = kSymbolMax - 1;
      hi = kSymbolMax;
    } else {
      lo = kSymbolMin;
      hi = kSymbolMin + 1;
    }
  }
  CdfTable table;
  table.k_min = static_cast<int32_t>(lo);
  table.k_max = static_cast<int32_t>(hi);
  const size_t bins = static_cast<size_t>(hi - lo + 1);
  // Bin edges and the tail mass beyond each; every bin mass is then formed
  // exactly as NormalInterval would form it.
  std::vector<double> edge(bins + 1);
  std::vector<double> tail(bins + 1);
  for (size_t e = 0; e <= bins; ++e) {
    const double k = static_cast<double>(lo + static_cast<int64_t>(e));
    edge[e] = e == 0 ? -INFINITY : e == bins ? INFINITY : (k - 0.5 - m) / ratio;
    tail[e] = NormalTail(std::abs(edge[e]));
  }
  std::vector<double> mass(bins);
  for (size_t i = 0; i < bins; ++i) {
    if (edge[i] >= 0.0) {
      mass[i] = tail[i] - tail[i + 1];
    } else if (edge[i + 1] <= 0.0) {
      mass[i] = tail[i + 1] - tail[i];
    } else {
      mass[i] = 1.0 - tail[i + 1] - tail[i];
    }
  }
  table.cum = QuantizeMass(mass);
  return table;
}

CdfTable BuildCdf(double mu, double sigma, double q) {
  return BuildCdfSnapped(SnapParams(mu, sigma, q));
}

CdfRef CdfCache::Get(const SnappedParams& snapped) {
  const int64_t whole = snapped.mu_units >= 0
                            ? snapped.mu_units / kMuDivisions
                            : -((-snapped.mu_units + kMuDivisions - 1) / kMuDivisions);
  const int64_t frac = snapped.mu_units - whole * kMuDivisions;
  const uint32_t key = static_cast<uint32_t>(frac) * kRatioGridSize +
                       static_cast<uint32_t>(snapped.ratio_index);
  auto& slot = tables_[key];
  if (!slot) {
    slot = std::make_unique<CdfTable>(BuildCdfSnapped({frac, snapped.ratio_index}));
  }
  const int64_t lo = int64_t{slot->k_min} + whole;
  const int64_t hi = int64_t{slot->k_max} + whole;
  if (lo < kSymbolMin || hi > kSymbolMax) {
    spill_.push_back(std::make_unique<CdfTable>(BuildCdfSnapped(snapped)));
    return {spill_.back().get(), 0};
  }
  return {slot.get(), static_cast<int32_t>(whole)};
}

namespace {

// Exp-Golomb order 0 of `value` in equiprobable bits; returns the bit count.
int EncodeExpGolomb(RangeEncoder& enc, uint32_t value) {
  const uint32_t v = value + 1;
  const int width = std::bit_width(v);
  enc.EncodeRawBits(0, width - 1);
  enc.EncodeRawBits(v, width);
  return 2 * width - 1;
}

uint32_t DecodeExpGolomb(RangeDecoder& dec) {
  int zeros = 0;
  while (dec.DecodeRawBits(1) == 0) {
    if (++zeros > 20) Fail(ErrorCode::kCdfDesync, "escape code too long");
  }
  const uint32_t rest = dec.DecodeRawBits(zeros);
  return ((1u << zeros) | rest) - 1;
}

}  // namespace

double EncodeSymbol(RangeEncoder& enc, const CdfRef& cdf, int32_t k) {
  if (k < kSymbolMin || k > kSymbolMax) {
    Fail(ErrorCode::kOutOfRange, "symbol " + std::to_string(k) + " outside global bounds");
  }
  const int32_t k_min = cdf.k_min();
  const int32_t k_max = cdf.k_max();
  const int32_t bin = std::clamp(k, k_min, k_max);
  const size_t index = static_cast<size_t>(bin - k_min);
  const uint32_t cum = cdf.table->cum[index];
  const uint32_t freq = cdf.table->cum[index + 1] - cum;
  enc.Encode(cum, freq);
  double bits = kProbBits - std::log2(static_cast<double>(freq));
  if (bin == k_min) {
    bits += EncodeExpGolomb(enc, static_cast<uint32_t>(k_min - k));
  } else if (bin == k_max) {
    bits += EncodeExpGolomb(enc, static_cast<uint32_t>(k - k_max));
  }
  return bits;
}

int32_t DecodeSymbol(RangeDecoder& dec, const CdfRef& cdf) {
  const size_t index = cdf.table->Find(dec.PeekFrequency());
  const uint32_t cum = cdf.table->cum[index];
  dec.Consume(cum, cdf.table->cum[index + 1] - cum);
  int64_t k = int64_t{cdf.k_min()} + static_cast<int64_t>(index);
  if (k == cdf.k_min()) {
    k -= DecodeExpGolomb(dec);
  } else if (k == cdf.k_max()) {
    k += DecodeExpGolomb(dec);
  }
  if (k < kSymbolMin || k > kSymbolMax) {
    Fail(ErrorCode::kCdfDesync, "decoded symbol " + std::to_string(k) + " outside global bounds");
  }
  return static_cast<int32_t>(k);
}

std::vector<uint8_t> RangeEncodeSymbols(std::span<const int32_t> symbols,
                                        const CdfProvider& tables, StreamStats* stats) {
  RangeEncoder enc;
  StreamStats local;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const CdfRef cdf = tables(i);
    const int32_t k = symbols[i];
    if (k <= cdf.k_min() || k >= cdf.k_max()) ++local.escapes;
    local.ideal_bits += EncodeSymbol(enc, cdf, k);
  }
  if (stats) *stats = local;
  return enc.Finish();
}

std::vector<int32_t> RangeDecodeSymbols(std::span<const uint8_t> bytes, size_t count,
                                        const CdfProvider& tables) {
  std::vector<int32_t> out;
  if (count == 0) return out;
  out.reserve(count);
  RangeDecoder dec(bytes);
  for (size_t i = 0; i < count; ++i) out.push_back(DecodeSymbol(dec, tables(i)));
  return out;
}

BinaryModel BinaryModel::FromProbability(double p_one) {
  const double scaled = std::round(std::clamp(p_one, 0.0, 1.0) * kProbScale);
  BinaryModel m;
  m.freq_one = static_cast<uint32_t>(std::clamp(scaled, 1.0, double{kProbScale - 1}));
  return m;
}

std::vector<uint8_t> EncodeBits(std::span<const uint8_t> bits, BinaryModel model) {
  if (model.freq_one < 1 || model.freq_one >= kProbScale) {
    Fail(ErrorCode::kInvalidArgument, "binary model frequency out of range");
  }
  RangeEncoder enc;
  for (uint8_t b : bits) enc.EncodeBit(b != 0, model.freq_one);
  return enc.Finish();
}

std::vector<uint8_t> DecodeBits(std::span<const uint8_t> bytes, size_t count,
                                BinaryModel model) {
  if (model.freq_one < 1 || model.freq_one >= kProbScale) {
    Fail(ErrorCode::kInvalidArgument, "binary model frequency out of range");
  }
  std::vector<uint8_t> bits;
  if (count == 0) return bits;
  bits.reserve(count);
  RangeDecoder dec(bytes);
  for (size_t i = 0; i < count; ++i) bits.push_back(dec.DecodeBit(model.freq_one) ? 1 : 0);
  return bits;
}

}  // namespace hac
