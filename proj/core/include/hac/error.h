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

#ifndef HAC_ERROR_H_
#define HAC_ERROR_H_

#include <stdexcept>
#include <string>

namespace hac {

// Every failure raised by the library carries one of these codes. The CLI
// maps them onto distinct exit statuses.
enum class ErrorCode {
  kInvalidArgument = 1,
  kFormat,          // bad magic, unsupported version, malformed header
  kValidation,      // well-formed input violating a data invariant
  kIo,              // missing or truncated file
  kSectionOverrun,  // a section read past its declared length
  kCdfDesync,       // decoder state left the probability table
  kOutOfRange,      // symbol or value outside representable bounds
  kDivergence,      // training produced a non-finite loss
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kSectionOverrun: return "section overrun";
    case ErrorCode::kCdfDesync: return "CDF desync";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "error";
}

}  // namespace hac

#endif  // HAC_ERROR_H_
