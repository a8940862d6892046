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

#ifndef HAC_TRAINER_H_
#define HAC_TRAINER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hac/container.h"
#include "hac/hashgrid.h"
#include "hac/masking.h"
#include "hac/ratemodel.h"
#include "hac/rng.h"
#include "hac/scene.h"

namespace hac {

enum class TrainMode { kRateOnly, kJoint };
const char* TrainModeName(TrainMode mode);
TrainMode ParseTrainMode(const std::string& name);

// Per-family weights of the squared-error distortion proxy. The distortion is
// sum_f w_f * mean over family-f values of (reconstruction - reference)^2.
using DistortionWeights = std::array<double, kNumFamilies>;
inline constexpr DistortionWeights kFixedDistortionWeights = {1.0, 1e4, 25.0};

// Weights placing the optimum of each family's step at Q0 when lambda_e equals
// `lambda_ref`: under uniform quantization noise the per-family distortion is
// q^2/12 and each value costs about -log2 q bits, so the optimum satisfies
// q^2 = 6 lambda_e W_f / (w_f ln2 T), W_f the family width and T the total.
DistortionWeights CalibratedDistortionWeights(const AttributeLayout& layout,
                                              const FamilySteps& q0, double lambda_ref);

// logit(2 * kMaskThreshold).
inline constexpr double kDefaultMaskInitLogit = -3.8918202981106265;

struct TrainConfig {
  double lambda_e = 2e-3;
  double lambda_m = 5e-4;
  size_t iterations = 1000;
  // Fractions of `iterations` at which the noise and full phases begin.
  double noise_phase_begin = 0.15;
  double full_phase_begin = 0.33;
  double sample_frac = 0.05;
  double lr_grid = 1e-2;
  double lr_mask = 1e-2;
  double lr_mlp = 5e-3;
  double lr_attributes = 1e-3;
  uint64_t seed = 1;
  TrainMode mode = TrainMode::kRateOnly;
  GridConfig grid = GridConfig::Standard();
  size_t hidden_width = kDefaultHiddenWidth;
  FamilySteps q0 = kDefaultQ0;
  // Unset: CalibratedDistortionWeights(layout, q0, calibration_lambda).
  std::optional<DistortionWeights> distortion_weights;
  double calibration_lambda = 2e-3;
  // Joint mode starts every slot at sigmoid = 2 * tau: kept, but close
  // enough to the threshold for the sampled updates to reach it.
  double initial_mask_logit = kDefaultMaskInitLogit;
  double bounds_pad = kDefaultBoundsPad;
  size_t log_every = 10;

  // Iteration at which each phase starts.
  size_t noise_phase_start() const;
  size_t full_phase_start() const;
  size_t batch_size(size_t n) const;
  DistortionWeights ResolveWeights(const AttributeLayout& layout) const;
  void Validate() const;
};

enum class Phase { kWarmup, kNoise, kFull };
const char* PhaseName(Phase phase);

struct LossParts {
  double distortion = 0.0;
  double entropy_bits = 0.0;  // attribute bits of the evaluated anchors
  double hash_bits = 0.0;
  double mask_loss = 0.0;
  double total = 0.0;
  size_t coded_values = 0;    // values counted in entropy_bits
};

struct HistoryRow {
  size_t iteration = 0;
  Phase phase = Phase::kWarmup;
  LossParts loss;
};

std::string HistoryCsv(std::span<const HistoryRow> history);

struct TrainResult {
  CodecArtifacts artifacts;
  AnchorScene scene;  // refined attributes (unchanged in rate-only mode)
  std::vector<HistoryRow> history;
  LossParts initial;  // deterministic full-scene evaluation before training
  LossParts final;    // and after
};

TrainResult Fit(const AnchorScene& scene, const TrainConfig& cfg);

// Deterministic evaluation of the full objective: every anchor, rounding
// quantization, sign grid, hard masks. `reference` holds the original
// attributes that distortion is measured against.
LossParts EvaluateLoss(const AnchorScene& scene, const AnchorScene& reference,
                       const CodecArtifacts& artifacts, const TrainConfig& cfg);

// Attribute bits per coded value, per family and pooled.
struct BitsPerParam {
  std::array<double, kNumFamilies> family{};
  double pooled = 0.0;
};

// Bits per coded value under one global Gaussian per family with q = Q0.
// Offsets whose mask bit is 0 are excluded when `masks` is given.
BitsPerParam BaselineBits(const AnchorScene& scene, const FamilySteps& q0 = kDefaultQ0,
                          const MaskSet* masks = nullptr);

// Estimated bits per coded value of the trained artifacts (rounding
// quantization, hard masks, pruned anchors excluded).
BitsPerParam EstimatedBits(const AnchorScene& scene, const CodecArtifacts& artifacts);

// Draws `count` distinct indices of [0, n) by a partial Fisher-Yates shuffle
// of `scratch`, which must hold a permutation of [0, n).
void SampleAnchors(size_t count, Rng& rng, std::vector<uint32_t>& scratch,
                   std::vector<uint32_t>& out);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-15;

void AdamStep(std::span<double> params, std::span<const double> grads, AdamState& state,
              double lr);

enum class GradComponent { kMlp, kGridRelaxed, kMasksRelaxed, kAttributes };
const char* GradComponentName(GradComponent component);

struct GradCheckResult {
  double max_relative_error = 0.0;
  size_t coordinates = 0;
};

// Compares analytic and central-difference derivatives of the relaxed joint
// objective on a seeded 10-anchor probe.
GradCheckResult GradCheck(GradComponent component, uint64_t probe_seed, double epsilon = 1e-5,
                          size_t max_coordinates = 64);

// Analytic gradient of the MLP weights with lambda_e = 0 and all distortion
// weights 0; used to confirm the rate path contributes nothing in that case.
std::vector<double> RateFreeMlpGradient(uint64_t probe_seed);

// Trained-state checkpoint (".hacm").
inline constexpr uint32_t kCheckpointVersion = 1;
std::vector<uint8_t> SerializeCheckpoint(const CodecArtifacts& artifacts);
CodecArtifacts ParseCheckpoint(std::span<const uint8_t> bytes);

}  // namespace hac

#endif  // HAC_TRAINER_H_
