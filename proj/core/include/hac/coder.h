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

#ifndef HAC_CODER_H_
#define HAC_CODER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace hac {

// All probability models carry 16-bit integer frequencies summing to 2^16.
inline constexpr uint32_t kProbBits = 16;
inline constexpr uint32_t kProbScale = 1u << kProbBits;

// Global symbol bounds of the attribute streams.
inline constexpr int32_t kSymbolMin = -32768;
inline constexpr int32_t kSymbolMax = 32767;

// Table construction spans +/- kTailSigmas standard deviations around the
// mean plus one margin bin on each side.
inline constexpr double kTailSigmas = 16.0;

// Means are snapped to multiples of q / kMuDivisions.
inline constexpr int kMuDivisions = 64;

// sigma/q is snapped to 2^((i - kRatioCenter) / kRatioPerOctave),
// i in [0, kRatioGridSize).
inline constexpr int kRatioGridSize = 256;
inline constexpr int kRatioPerOctave = 12;
inline constexpr int kRatioCenter = 132;

// 32-bit range encoder (carry-propagating, LZMA-style byte output). The
// stream ends with a 4-byte flush.
class RangeEncoder {
 public:
  // Codes the interval [cum_low, cum_low + freq) of a 2^16 total. The top
  // interval (cum_low + freq == 2^16) also absorbs the rounding remainder.
  void Encode(uint32_t cum_low, uint32_t freq);
  void EncodeBit(bool bit, uint32_t freq_one);
  // `count` equiprobable bits of `value`, most significant first.
  void EncodeRawBits(uint32_t value, int count);

  std::vector<uint8_t> Finish();

 private:
  void ShiftLow();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool leading_ = true;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  // Reads the 4 start bytes. Reading past the end of `bytes` raises
  // kSectionOverrun.
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Target frequency in [0, 2^16) for the next symbol. Must be followed by
  // Consume() with the interval containing it.
  uint32_t PeekFrequency();
  void Consume(uint32_t cum_low, uint32_t freq);

  bool DecodeBit(uint32_t freq_one);
  uint32_t DecodeRawBits(int count);

  size_t bytes_consumed() const { return pos_; }

 private:
  uint8_t NextByte();
  void Normalize();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 0;
};

// Quantized symbol distribution over [k_min, k_max]. cum has
// (k_max - k_min + 2) entries, cum[0] = 0, cum.back() = 2^16, strictly
// increasing. The first and last bins carry the whole left and right tails;
// symbols beyond them are escape-coded.
struct CdfTable {
  int32_t k_min = 0;
  int32_t k_max = 0;
  std::vector<uint32_t> cum;

  size_t bins() const { return cum.size() - 1; }
  uint32_t freq(int32_t k) const {
    const size_t i = static_cast<size_t>(k - k_min);
    return cum[i + 1] - cum[i];
  }
  // Smallest bin index whose interval contains `target`.
  size_t Find(uint32_t target) const;
};

// Mean and scale reduced to the integer grid the tables are keyed on.
struct SnappedParams {
  int64_t mu_units = 0;  // round(mu / q * kMuDivisions)
  int ratio_index = 0;   // index on the sigma/q grid

  double mu(double q) const { return static_cast<double>(mu_units) * q / kMuDivisions; }
  double sigma(double q) const;
};

double SigmaRatioAt(int ratio_index);
SnappedParams SnapParams(double mu, double sigma, double q);

// Largest-remainder apportionment of `mass` onto 2^16 with every bin >= 1.
// Returns the cumulative array.
std::vector<uint32_t> QuantizeMass(std::span<const double> mass);

// Table for the snapped parameters in symbol units, intersected with the
// global symbol bounds.
CdfTable BuildCdfSnapped(const SnappedParams& snapped);
// Snaps (mu, sigma, q) and builds the table.
CdfTable BuildCdf(double mu, double sigma, double q);

// A table together with the integer shift that maps its bins to symbols.
struct CdfRef {
  const CdfTable* table = nullptr;
  int32_t shift = 0;

  int32_t k_min() const { return table->k_min + shift; }
  int32_t k_max() const { return table->k_max + shift; }
  uint32_t freq(int32_t k) const { return table->freq(k - shift); }
};

// Memoizes tables by (mean fraction, ratio index). Tables depend only on the
// fractional part of mu/q; the integer part becomes the CdfRef shift.
class CdfCache {
 public:
  CdfRef Get(const SnappedParams& snapped);
  size_t size() const { return tables_.size(); }

 private:
  std::unordered_map<uint32_t, std::unique_ptr<CdfTable>> tables_;
  std::vector<std::unique_ptr<CdfTable>> spill_;
};

// Codes one symbol; values outside [k_min, k_max] emit the edge bin followed
// by an Exp-Golomb distance in equiprobable bits. Returns the ideal cost in
// bits under the table.
double EncodeSymbol(RangeEncoder& enc, const CdfRef& cdf, int32_t k);
int32_t DecodeSymbol(RangeDecoder& dec, const CdfRef& cdf);

using CdfProvider = std::function<CdfRef(size_t)>;

struct StreamStats {
  double ideal_bits = 0.0;  // sum of -log2(freq / 2^16) plus escape bits
  size_t escapes = 0;
};

// An empty symbol sequence still produces the 4-byte flush.
std::vector<uint8_t> RangeEncodeSymbols(std::span<const int32_t> symbols,
                                        const CdfProvider& tables,
                                        StreamStats* stats = nullptr);
std::vector<int32_t> RangeDecodeSymbols(std::span<const uint8_t> bytes, size_t count,
                                        const CdfProvider& tables);

// Static binary model; freq_one in [1, 2^16 - 1].
struct BinaryModel {
  uint32_t freq_one = kProbScale / 2;

  static BinaryModel FromProbability(double p_one);
  uint32_t freq_zero() const { return kProbScale - freq_one; }
};

// Bits are one per byte, 0 or 1.
std::vector<uint8_t> EncodeBits(std::span<const uint8_t> bits, BinaryModel model);
std::vector<uint8_t> DecodeBits(std::span<const uint8_t> bytes, size_t count,
                                BinaryModel model);

}  // namespace hac

#endif  // HAC_CODER_H_
