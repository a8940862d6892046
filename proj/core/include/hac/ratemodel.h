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

#ifndef HAC_RATEMODEL_H_
#define HAC_RATEMODEL_H_

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hac/masking.h"
#include "hac/scene.h"

namespace hac {

// Base quantization steps for (features, scalings, offsets).
using FamilySteps = std::array<double, kNumFamilies>;
inline constexpr FamilySteps kDefaultQ0 = {1.0, 0.001, 0.2};

inline constexpr double kSigmaMinFactor = 1e-3;
inline constexpr double kSigmaMaxFactor = 1e3;
inline constexpr size_t kDefaultHiddenWidth = 96;

// Probabilities below this are floored when converted to bits (24 bits max).
inline constexpr double kProbabilityFloor = 0x1p-24;

// Shared 3-layer ReLU MLP mapping a hash feature to the per-family
// quantization refinement r (3 values), the Gaussian means (one per attribute
// column) and the log-scale pre-activations s (one per attribute column).
class ContextModel {
 public:
  ContextModel() = default;
  ContextModel(size_t input_dim, size_t hidden_dim, AttributeLayout layout,
               FamilySteps q0);

  // He-uniform hidden layers, small output layer, biases zero except the s
  // block which starts at ln(Q0) so sigma begins at the quantization step.
  static ContextModel Create(size_t input_dim, size_t hidden_dim,
                             AttributeLayout layout, FamilySteps q0,
                             uint64_t seed);

  size_t input_dim() const { return input_dim_; }
  size_t hidden_dim() const { return hidden_dim_; }
  size_t output_dim() const { return 3 + 2 * layout_.total(); }
  const AttributeLayout& layout() const { return layout_; }
  const FamilySteps& q0() const { return q0_; }
  void set_q0(const FamilySteps& q0) { q0_ = q0; }

  double sigma_min(Family f) const { return kSigmaMinFactor * q0_[static_cast<int>(f)]; }
  double sigma_max(Family f) const { return kSigmaMaxFactor * q0_[static_cast<int>(f)]; }

  // Row-major W1, b1, W2, b2, W3, b3.
  size_t parameter_count() const;
  void Flatten(std::span<double> out) const;
  void Unflatten(std::span<const double> in);

  // Rounds every weight and Q0 to float32, the precision they are stored at.
  ContextModel RoundedToFloat() const;

  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

 private:
  size_t input_dim_ = 0;
  size_t hidden_dim_ = 0;
  AttributeLayout layout_;
  FamilySteps q0_ = kDefaultQ0;
};

// Per-anchor rate parameters aligned to the attribute layout.
struct RateParams {
  std::array<double, kNumFamilies> r{};
  std::array<double, kNumFamilies> q{};
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Activations kept for back-propagation; columns are anchors.
struct MlpCache {
  Eigen::MatrixXd x, z1, h1, z2, h2, y;
};

struct MlpGrads {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  void ZeroLike(const ContextModel& model);
  void Flatten(std::span<double> out) const;
};

void MlpForward(const ContextModel& model, const Eigen::MatrixXd& x, MlpCache* cache);
// Accumulates parameter gradients into `grads` and returns d(loss)/d(x).
Eigen::MatrixXd MlpBackward(const ContextModel& model, const MlpCache& cache,
                            const Eigen::MatrixXd& dy, MlpGrads* grads);

// Splits one output column into (r, q, mu, sigma).
void DecodeOutput(const ContextModel& model, std::span<const double> y, RateParams* out);

// Evaluates the MLP for one hash feature.
RateParams ModelForward(std::span<const double> feature, const ContextModel& model);

// Beyond this magnitude tanh rounds to +/-1 and q would reach 0 or 2*Q0.
inline constexpr double kMaxRefinement = 15.0;

// q = Q0 * (1 + tanh r), with r saturated at +/-kMaxRefinement.
inline double StepFromRefinement(double q0, double r) {
  return q0 * (1.0 + std::tanh(std::clamp(r, -kMaxRefinement, kMaxRefinement)));
}

// dq/dr; zero where r is saturated.
inline double StepGradient(double q0, double r) {
  if (std::abs(r) >= kMaxRefinement) return 0.0;
  const double t = std::tanh(r);
  return q0 * (1.0 - t * t);
}

// f + u * q, the additive-noise proxy used during training.
double QuantizeTrain(double f, double q, double u);

struct Quantized {
  int64_t k = 0;
  double value = 0.0;
};

// Round-half-away-from-zero of f/q.
Quantized QuantizeTest(double f, double q);

// 1 - Phi(x).
double NormalTail(double x);

// Phi(hi) - Phi(lo) evaluated on whichever tail keeps precision.
double NormalInterval(double lo, double hi);

// Mass of the Gaussian N(mu, sigma) on [k*q - q/2, k*q + q/2].
double BinProbability(int64_t k, double mu, double sigma, double q);

// -log2 of the bin mass around `center`, floored at kProbabilityFloor.
double ValueBits(double center, double mu, double sigma, double q);

struct ValueBitsGrad {
  double bits = 0.0;
  double d_center = 0.0;
  double d_q = 0.0;
  double d_mu = 0.0;
  double d_sigma = 0.0;
};

ValueBitsGrad ValueBitsWithGrad(double center, double mu, double sigma, double q);

using FamilyBits = std::array<double, kNumFamilies>;

// Bits of one anchor's coded values; offset slots whose mask bit is 0 are
// skipped. `symbols` holds k per attribute column; `mask_row` may be empty
// (all slots kept).
FamilyBits AnchorBits(const AttributeLayout& layout, const RateParams& rate,
                      std::span<const int64_t> symbols,
                      std::span<const uint8_t> mask_row);

// Sum of -log2 p over every coded value of every surviving anchor.
// `symbols` is N x layout.total(); `rate` has one entry per anchor.
FamilyBits EntropyBits(const AnchorScene& scene, std::span<const RateParams> rate,
                       std::span<const int64_t> symbols, const MaskSet& masks);

// distortion + lambda_e * (entropy + hash) / (N * (D^a + 6 + 3K))
//             + lambda_m * mask_loss
double TotalLoss(double distortion, double entropy_bits, double hash_bits,
                 double mask_loss, double lambda_e, double lambda_m, size_t n,
                 const AttributeLayout& layout);

}  // namespace hac

#endif  // HAC_RATEMODEL_H_
