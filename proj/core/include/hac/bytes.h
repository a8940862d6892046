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

#ifndef HAC_BYTES_H_
#define HAC_BYTES_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "hac/error.h"

namespace hac {

static_assert(std::endian::native == std::endian::little,
              "byte I/O assumes a little-endian host");

// Appends little-endian scalars to a growing buffer.
class ByteWriter {
 public:
  void U8(uint8_t v) { bytes_.push_back(v); }
  void U16(uint16_t v) { Raw(&v, sizeof v); }
  void U32(uint32_t v) { Raw(&v, sizeof v); }
  void U64(uint64_t v) { Raw(&v, sizeof v); }
  void F32(float v) { Raw(&v, sizeof v); }
  void F64(double v) { Raw(&v, sizeof v); }
  void Tag(const char (&tag)[5]) { Raw(tag, 4); }
  void Bytes(std::span<const uint8_t> data) {
    bytes_.insert(bytes_.end(), data.begin(), data.end());
  }
  void F32Array(std::span<const float> values) {
    Raw(values.data(), values.size_bytes());
  }

  size_t size() const { return bytes_.size(); }
  std::vector<uint8_t>& bytes() { return bytes_; }
  std::vector<uint8_t> Take() { return std::move(bytes_); }

 private:
  void Raw(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }

  std::vector<uint8_t> bytes_;
};

// Bounds-checked little-endian reader over a byte span. Running off the end
// raises `overrun_code`, so callers choose whether truncation is an I/O error
// or a section overrun.
class ByteReader {
 public:
  ByteReader(std::span<const uint8_t> data, ErrorCode overrun_code,
             std::string what)
      : data_(data), overrun_code_(overrun_code), what_(std::move(what)) {}

  uint8_t U8() { return Scalar<uint8_t>(); }
  uint16_t U16() { return Scalar<uint16_t>(); }
  uint32_t U32() { return Scalar<uint32_t>(); }
  uint64_t U64() { return Scalar<uint64_t>(); }
  float F32() { return Scalar<float>(); }
  double F64() { return Scalar<double>(); }

  bool TagIs(const char (&tag)[5]) {
    Need(4);
    const bool match = std::memcmp(data_.data() + pos_, tag, 4) == 0;
    pos_ += 4;
    return match;
  }

  void F32Array(std::span<float> out) {
    Need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::span<const uint8_t> Bytes(size_t n) {
    Need(n);
    auto view = data_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  size_t position() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  template <typename T>
  T Scalar() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void Need(size_t n) {
    if (n > data_.size() - pos_) {
      Fail(overrun_code_, what_ + ": need " + std::to_string(n) +
                              " bytes at offset " + std::to_string(pos_) +
                              ", have " + std::to_string(data_.size() - pos_));
    }
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  ErrorCode overrun_code_;
  std::string what_;
};

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace hac

#endif  // HAC_BYTES_H_
