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

#include "hac/trainer.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "hac/bytes.h"
#include "hac/error.h"

namespace hac {

const char* TrainModeName(TrainMode mode) {
  return mode == TrainMode::kJoint ? "joint" : "rate-only";
}

TrainMode ParseTrainMode(const std::string& name) {
  if (name == "rate-only") return TrainMode::kRateOnly;
  if (name == "joint") return TrainMode::kJoint;
  Fail(ErrorCode::kInvalidArgument, "unknown training mode '" + name + "'");
}

const char* PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kWarmup: return "warmup";
    case Phase::kNoise: return "noise";
    case Phase::kFull: return "full";
  }
  return "?";
}

const char* GradComponentName(GradComponent component) {
  switch (component) {
    case GradComponent::kMlp: return "mlp";
    case GradComponent::kGridRelaxed: return "grid-relaxed";
    case GradComponent::kMasksRelaxed: return "masks-relaxed";
    case GradComponent::kAttributes: return "attributes";
  }
  return "?";
}

size_t TrainConfig::noise_phase_start() const {
  return static_cast<size_t>(std::llround(noise_phase_begin * static_cast<double>(iterations)));
}

size_t TrainConfig::full_phase_start() const {
  return static_cast<size_t>(std::llround(full_phase_begin * static_cast<double>(iterations)));
}

size_t TrainConfig::batch_size(size_t n) const {
  const auto b = static_cast<size_t>(std::ceil(sample_frac * static_cast<double>(n) - 1e-9));
  return std::clamp<size_t>(b, 1, n);
}

DistortionWeights CalibratedDistortionWeights(const AttributeLayout& layout,
                                              const FamilySteps& q0, double lambda_ref) {
  const double total = static_cast<double>(layout.total());
  DistortionWeights w{};
  for (int f = 0; f < kNumFamilies; ++f) {
    const double width = static_cast<double>(layout.Width(static_cast<Family>(f)));
    w[f] = 6.0 * lambda_ref * width / (q0[f] * q0[f] * std::numbers::ln2 * total);
  }
  return w;
}

DistortionWeights TrainConfig::ResolveWeights(const AttributeLayout& layout) const {
  if (distortion_weights) return *distortion_weights;
  return CalibratedDistortionWeights(layout, q0, calibration_lambda);
}

void TrainConfig::Validate() const {
  if (!(sample_frac > 0.0 && sample_frac <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "sample_frac must lie in (0, 1]");
  }
  if (!(noise_phase_begin >= 0.0 && noise_phase_begin <= full_phase_begin &&
        full_phase_begin <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "phase boundaries must satisfy 0 <= noise <= full <= 1");
  }
  if (!(lambda_e >= 0.0) || !(lambda_m >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "rate weights must be non-negative");
  }
  for (double lr : {lr_grid, lr_mask, lr_mlp, lr_attributes}) {
    if (!(lr > 0.0)) Fail(ErrorCode::kInvalidArgument, "learning rates must be positive");
  }
  if (distortion_weights) {
    for (double w : *distortion_weights) {
      if (!(w >= 0.0)) Fail(ErrorCode::kInvalidArgument, "distortion weights must be non-negative");
    }
  }
  if (!(calibration_lambda > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "calibration lambda must be positive");
  }
  if (hidden_width == 0) Fail(ErrorCode::kInvalidArgument, "hidden width must be positive");
  grid.Validate();
}

std::string HistoryCsv(std::span<const HistoryRow> history) {
  std::ostringstream out;
  out.precision(10);
  out << "iteration,phase,distortion,entropy_bits,hash_bits,mask_loss,total\n";
  for (const HistoryRow& row : history) {
    out << row.iteration << ',' << PhaseName(row.phase) << ',' << row.loss.distortion << ','
        << row.loss.entropy_bits << ',' << row.loss.hash_bits << ',' << row.loss.mask_loss << ','
        << row.loss.total << '\n';
  }
  return out.str();
}

void SampleAnchors(size_t count, Rng& rng, std::vector<uint32_t>& scratch,
                   std::vector<uint32_t>& out) {
  const size_t n = scratch.size();
  if (count > n) Fail(ErrorCode::kInvalidArgument, "cannot sample more anchors than exist");
  for (size_t j = 0; j < count; ++j) {
    std::swap(scratch[j], scratch[j + rng.Below(n - j)]);
  }
  out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(count));
}

void AdamStep(std::span<double> params, std::span<const double> grads, AdamState& state,
              double lr) {
  if (grads.size() != params.size()) Fail(ErrorCode::kInvalidArgument, "Adam shape mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

namespace {

constexpr size_t kEvalChunk = 512;

struct ObjectiveOptions {
  Phase phase = Phase::kFull;
  bool round = false;  // rounding quantization instead of additive noise
  BinarizeMode grid_mode = BinarizeMode::kSign;
  bool soft_mask = false;
  double lambda_e = 0.0;
  double lambda_m = 0.0;
  DistortionWeights weights = kFixedDistortionWeights;
  size_t norm_anchors = 1;  // anchors the batch terms are averaged over
};

struct Grads {
  std::vector<double> grid;
  MlpGrads mlp;
  std::vector<double> masks;
  std::vector<double> attributes;
};

// Read-only view of the trainable state.
struct State {
  const AnchorScene* scene = nullptr;  // locations and layout
  std::span<const double> attributes;  // n x T, current values
  std::span<const double> reference;   // n x T, original values
  const HashGrid* grid = nullptr;
  const ContextModel* model = nullptr;
  const MaskSet* masks = nullptr;
  Aabb bounds;
};

// Batch terms of the objective (distortion, attribute bits, mask loss); the
// hash term is global and handled by callers. Gradients are accumulated into
// `g` when it is non-null.
LossParts BatchObjective(const State& s, std::span<const uint32_t> batch,
                         std::span<const double> noise, const ObjectiveOptions& opt, Grads* g) {
  const AttributeLayout layout = s.scene->layout();
  const size_t t_dim = layout.total();
  const size_t k_dim = layout.k_offsets;
  const size_t offsets_begin = layout.Begin(Family::kOffset);
  const size_t b = batch.size();
  const bool full = opt.phase == Phase::kFull;
  const bool quantize = opt.phase != Phase::kWarmup;
  const double norm = static_cast<double>(opt.norm_anchors);
  std::array<double, kNumFamilies> value_scale{};
  for (int f = 0; f < kNumFamilies; ++f) {
    const double width = static_cast<double>(layout.Width(static_cast<Family>(f)));
    value_scale[f] = width > 0.0 ? opt.weights[f] / (norm * width) : 0.0;
  }
  const double rate_scale = opt.lambda_e / (norm * static_cast<double>(t_dim));
  const FamilySteps& q0 = s.model->q0();

  LossParts parts;
  Eigen::MatrixXd x;
  Eigen::MatrixXd dy;
  MlpCache cache;
  std::vector<InterpTrace> traces;
  if (full) {
    const size_t dim = s.grid->config().feature_dim();
    x.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(b));
    if (g) traces.resize(b);
    for (size_t j = 0; j < b; ++j) {
      Interpolate(*s.grid, NormalizeLocation(s.bounds, s.scene->location(batch[j])),
                  std::span<double>(x.col(static_cast<Eigen::Index>(j)).data(), dim),
                  opt.grid_mode, g ? &traces[j] : nullptr);
    }
    MlpForward(*s.model, x, &cache);
    if (g) dy = Eigen::MatrixXd::Zero(cache.y.rows(), cache.y.cols());
  }

  RateParams rate;
  for (size_t j = 0; j < b; ++j) {
    const size_t i = batch[j];
    const double* f = s.attributes.data() + i * t_dim;
    const double* ref = s.reference.data() + i * t_dim;
    std::array<double, kNumFamilies> q = q0;
    const auto ej = static_cast<Eigen::Index>(j);
    if (full) {
      DecodeOutput(*s.model,
                   std::span<const double>(cache.y.col(ej).data(), static_cast<size_t>(cache.y.rows())),
                   &rate);
      q = rate.q;
    }
    std::array<double, kNumFamilies> dq{};
    for (size_t c = 0; c < t_dim; ++c) {
      const int fi = static_cast<int>(layout.FamilyOf(c));
      const bool is_offset = c >= offsets_begin;
      const size_t slot = is_offset ? i * k_dim + (c - offsets_begin) / 3 : 0;
      double m = 1.0;
      if (is_offset) {
        const double logit = s.masks->logits[slot];
        m = opt.soft_mask ? Sigmoid(logit) : static_cast<double>(HardMask(logit, s.masks->tau));
      }
      double u = 0.0;
      double ft = f[c];
      if (quantize) {
        if (opt.round) {
          ft = QuantizeTest(f[c], q[fi]).value;
        } else {
          u = noise[j * t_dim + c];
          ft = f[c] + u * q[fi];
        }
      }
      const double diff = m * ft - ref[c];
      parts.distortion += value_scale[fi] * diff * diff;
      const double g_recon = 2.0 * value_scale[fi] * diff;
      double g_ft = g_recon * m;
      double g_m = g_recon * ft;
      if (full) {
        if (g) {
          const ValueBitsGrad vb = ValueBitsWithGrad(ft, rate.mu[c], rate.sigma[c], q[fi]);
          parts.entropy_bits += m * vb.bits;
          g_ft += rate_scale * m * vb.d_center;
          g_m += rate_scale * vb.bits;
          dy(static_cast<Eigen::Index>(3 + c), ej) = rate_scale * m * vb.d_mu;
          const Family fam = static_cast<Family>(fi);
          const double pre = cache.y(static_cast<Eigen::Index>(3 + t_dim + c), ej);
          if (pre > std::log(s.model->sigma_min(fam)) && pre < std::log(s.model->sigma_max(fam))) {
            dy(static_cast<Eigen::Index>(3 + t_dim + c), ej) =
                rate_scale * m * vb.d_sigma * rate.sigma[c];
          }
          dq[fi] += rate_scale * m * vb.d_q + g_ft * u;
        } else if (m != 0.0) {
          parts.entropy_bits += m * ValueBits(ft, rate.mu[c], rate.sigma[c], q[fi]);
        }
      }
      if (full && m != 0.0) ++parts.coded_values;
      if (g) {
        g->attributes[i * t_dim + c] += g_ft;
        if (is_offset) {
          const double sg = Sigmoid(s.masks->logits[slot]);
          g->masks[slot] += g_m * sg * (1.0 - sg);
        }
      }
    }
    if (full && g) {
      for (int fi = 0; fi < kNumFamilies; ++fi) {
        dy(fi, ej) = dq[fi] * StepGradient(q0[fi], cache.y(fi, ej));
      }
    }
  }

  if (full && g) {
    const Eigen::MatrixXd dx = MlpBackward(*s.model, cache, dy, &g->mlp);
    const size_t dim = static_cast<size_t>(dx.rows());
    for (size_t j = 0; j < b; ++j) {
      InterpolateBackward(*s.grid, traces[j],
                          std::span<const double>(dx.col(static_cast<Eigen::Index>(j)).data(), dim),
                          g->grid, opt.grid_mode);
    }
  }

  if (k_dim > 0) {
    const double mask_norm = norm * static_cast<double>(k_dim);
    double sum = 0.0;
    for (size_t j = 0; j < b; ++j) {
      for (size_t k = 0; k < k_dim; ++k) {
        const size_t slot = batch[j] * k_dim + k;
        const double sg = Sigmoid(s.masks->logits[slot]);
        sum += sg;
        if (g) g->masks[slot] += opt.lambda_m * sg * (1.0 - sg) / mask_norm;
      }
    }
    parts.mask_loss = sum / mask_norm;
  }
  return parts;
}

double Assemble(LossParts& parts, const ObjectiveOptions& opt, size_t n_total, size_t t_dim,
                bool with_hash) {
  double total = parts.distortion + opt.lambda_m * parts.mask_loss;
  if (opt.phase == Phase::kFull) {
    total += opt.lambda_e * parts.entropy_bits /
             (static_cast<double>(opt.norm_anchors) * static_cast<double>(t_dim));
    if (with_hash) {
      total += opt.lambda_e * parts.hash_bits /
               (static_cast<double>(n_total) * static_cast<double>(t_dim));
    }
  }
  parts.total = total;
  return total;
}

std::vector<double> AttributeMatrix(const AnchorScene& scene) {
  const size_t t_dim = scene.layout().total();
  std::vector<double> out(scene.n * t_dim);
  for (size_t i = 0; i < scene.n; ++i) {
    scene.AttributeRow(i, std::span<double>(out.data() + i * t_dim, t_dim));
  }
  return out;
}

void StoreAttributes(std::span<const double> attributes, AnchorScene& scene) {
  const AttributeLayout layout = scene.layout();
  const size_t t_dim = layout.total();
  for (size_t i = 0; i < scene.n; ++i) {
    size_t c = 0;
    for (int f = 0; f < kNumFamilies; ++f) {
      for (float& v : scene.family_row(static_cast<Family>(f), i)) {
        v = static_cast<float>(attributes[i * t_dim + c++]);
      }
    }
  }
}

// Per-column mean and log standard deviation seed the mu and s output biases.
void InitializeOutputBias(std::span<const double> attributes, size_t n, ContextModel& model) {
  const AttributeLayout& layout = model.layout();
  const size_t t_dim = layout.total();
  for (size_t c = 0; c < t_dim; ++c) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += attributes[i * t_dim + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = attributes[i * t_dim + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const Family f = layout.FamilyOf(c);
    const double sigma = std::clamp(std::sqrt(var), model.sigma_min(f), model.sigma_max(f));
    model.b3(static_cast<Eigen::Index>(3 + c)) = mean;
    model.b3(static_cast<Eigen::Index>(3 + t_dim + c)) = std::log(sigma);
  }
}

LossParts EvaluateState(const State& s, size_t n, const TrainConfig& cfg) {
  ObjectiveOptions opt;
  opt.phase = Phase::kFull;
  opt.round = true;
  opt.lambda_e = cfg.lambda_e;
  opt.lambda_m = cfg.lambda_m;
  opt.weights = cfg.ResolveWeights(s.scene->layout());
  opt.norm_anchors = n;
  LossParts total;
  std::vector<uint32_t> batch;
  for (size_t start = 0; start < n; start += kEvalChunk) {
    const size_t count = std::min(kEvalChunk, n - start);
    batch.resize(count);
    std::iota(batch.begin(), batch.end(), static_cast<uint32_t>(start));
    const LossParts p = BatchObjective(s, batch, {}, opt, nullptr);
    total.distortion += p.distortion;
    total.entropy_bits += p.entropy_bits;
    total.mask_loss += p.mask_loss;
    total.coded_values += p.coded_values;
  }
  total.hash_bits = HashEntropyLoss(*s.grid);
  Assemble(total, opt, n, s.scene->layout().total(), true);
  return total;
}

}  // namespace

LossParts EvaluateLoss(const AnchorScene& scene, const AnchorScene& reference,
                       const CodecArtifacts& artifacts, const TrainConfig& cfg) {
  if (scene.n == 0) Fail(ErrorCode::kInvalidArgument, "cannot evaluate an empty scene");
  if (!(reference.layout() == scene.layout()) || reference.n != scene.n) {
    Fail(ErrorCode::kInvalidArgument, "reference scene does not match");
  }
  const std::vector<double> attributes = AttributeMatrix(scene);
  const std::vector<double> ref = AttributeMatrix(reference);
  State s{&scene, attributes, ref, &artifacts.grid, &artifacts.model, &artifacts.masks,
          artifacts.bounds};
  return EvaluateState(s, scene.n, cfg);
}

TrainResult Fit(const AnchorScene& scene, const TrainConfig& cfg) {
  cfg.Validate();
  ValidateScene(scene);
  if (scene.n == 0) Fail(ErrorCode::kInvalidArgument, "cannot train on an empty scene");
  const AttributeLayout layout = scene.layout();
  const size_t n = scene.n;
  const size_t t_dim = layout.total();
  const bool joint = cfg.mode == TrainMode::kJoint;

  TrainResult result;
  result.scene = scene;
  CodecArtifacts& art = result.artifacts;
  art.lambda_e = cfg.lambda_e;
  art.lambda_m = cfg.lambda_m;
  // Locations are never optimized, so the bounds frozen when the grid is
  // switched on are the bounds of the input scene.
  art.bounds = SceneBounds(scene, cfg.bounds_pad);
  art.grid = HashGrid::Create(cfg.grid, cfg.seed * 4 + 1);
  art.model = ContextModel::Create(cfg.grid.feature_dim(), cfg.hidden_width, layout, cfg.q0,
                                   cfg.seed * 4 + 2);
  art.masks = joint ? MaskSet::AllKept(n, layout.k_offsets, cfg.initial_mask_logit)
                    : MaskSet::AllKept(n, layout.k_offsets);

  const std::vector<double> reference = AttributeMatrix(scene);
  std::vector<double> attributes = reference;
  InitializeOutputBias(attributes, n, art.model);

  State state{&result.scene, attributes, reference, &art.grid, &art.model, &art.masks,
              art.bounds};
  result.initial = EvaluateState(state, n, cfg);

  Rng sample_rng(cfg.seed * 4 + 3);
  Rng noise_rng(cfg.seed * 4 + 4);
  std::vector<uint32_t> scratch(n);
  std::iota(scratch.begin(), scratch.end(), 0u);
  std::vector<uint32_t> batch;
  const size_t b = cfg.batch_size(n);
  std::vector<double> noise(b * t_dim);

  Grads grads;
  grads.grid.assign(art.grid.param_count(), 0.0);
  grads.masks.assign(art.masks.logits.size(), 0.0);
  grads.attributes.assign(attributes.size(), 0.0);
  std::vector<double> mlp_params(art.model.parameter_count());
  std::vector<double> mlp_grads(mlp_params.size());
  art.model.Flatten(mlp_params);
  AdamState adam_grid, adam_mlp, adam_mask, adam_attr;

  ObjectiveOptions opt;
  opt.lambda_e = cfg.lambda_e;
  opt.lambda_m = cfg.lambda_m;
  opt.weights = cfg.ResolveWeights(layout);
  opt.norm_anchors = b;

  const size_t noise_start = cfg.noise_phase_start();
  const size_t full_start = cfg.full_phase_start();
  const size_t scaling_begin = layout.Begin(Family::kScaling);
  for (size_t it = 0; it < cfg.iterations; ++it) {
    opt.phase = it < noise_start ? Phase::kWarmup : it < full_start ? Phase::kNoise : Phase::kFull;
    // With attributes and masks frozen nothing is trainable before the grid
    // and context model come in.
    if (!joint && opt.phase != Phase::kFull) continue;
    const bool full = opt.phase == Phase::kFull;

    SampleAnchors(b, sample_rng, scratch, batch);
    for (double& u : noise) u = noise_rng.Uniform() - 0.5;
    if (full) {
      std::fill(grads.grid.begin(), grads.grid.end(), 0.0);
      grads.mlp.ZeroLike(art.model);
    }
    if (joint) {
      std::fill(grads.masks.begin(), grads.masks.end(), 0.0);
      std::fill(grads.attributes.begin(), grads.attributes.end(), 0.0);
    }

    LossParts parts = BatchObjective(state, batch, noise, opt, &grads);
    if (full) {
      parts.hash_bits = HashEntropyLossWithGrad(
          art.grid, BinarizeMode::kSign,
          cfg.lambda_e / (static_cast<double>(n) * static_cast<double>(t_dim)), grads.grid);
    }
    Assemble(parts, opt, n, t_dim, true);
    if (!std::isfinite(parts.total)) {
      Fail(ErrorCode::kDivergence, "non-finite loss at iteration " + std::to_string(it));
    }

    if (full) {
      AdamStep(art.grid.mutable_params(), grads.grid, adam_grid, cfg.lr_grid);
      grads.mlp.Flatten(mlp_grads);
      AdamStep(mlp_params, mlp_grads, adam_mlp, cfg.lr_mlp);
      art.model.Unflatten(mlp_params);
    }
    if (joint) {
      AdamStep(art.masks.logits, grads.masks, adam_mask, cfg.lr_mask);
      AdamStep(attributes, grads.attributes, adam_attr, cfg.lr_attributes);
      for (size_t i = 0; i < n; ++i) {
        for (size_t c = scaling_begin; c < scaling_begin + kScalingDim; ++c) {
          double& v = attributes[i * t_dim + c];
          v = std::clamp(v, 1e-6, 1.0 - 1e-6);
        }
      }
    }
    if (cfg.log_every > 0 && (it % cfg.log_every == 0 || it + 1 == cfg.iterations)) {
      result.history.push_back({it, opt.phase, parts});
    }
  }

  StoreAttributes(attributes, result.scene);
  // Evaluate on the attributes at stored precision.
  const std::vector<double> stored = AttributeMatrix(result.scene);
  state.attributes = stored;
  result.final = EvaluateState(state, n, cfg);
  return result;
}

BitsPerParam BaselineBits(const AnchorScene& scene, const FamilySteps& q0, const MaskSet* masks) {
  if (scene.n == 0) Fail(ErrorCode::kInvalidArgument, "baseline of an empty scene");
  BitsPerParam out;
  double total_bits = 0.0;
  double total_values = 0.0;
  std::vector<double> values;
  for (int f = 0; f < kNumFamilies; ++f) {
    const Family fam = static_cast<Family>(f);
    values.clear();
    for (size_t i = 0; i < scene.n; ++i) {
      const auto row = scene.family_row(fam, i);
      for (size_t c = 0; c < row.size(); ++c) {
        if (fam == Family::kOffset && masks && !masks->hard(i, c / 3)) continue;
        values.push_back(row[c]);
      }
    }
    if (values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    const double sigma = std::max(std::sqrt(var), kSigmaMinFactor * q0[f]);
    double bits = 0.0;
    for (double v : values) bits += ValueBits(QuantizeTest(v, q0[f]).value, mean, sigma, q0[f]);
    out.family[f] = bits / static_cast<double>(values.size());
    total_bits += bits;
    total_values += static_cast<double>(values.size());
  }
  out.pooled = total_values > 0.0 ? total_bits / total_values : 0.0;
  return out;
}

BitsPerParam EstimatedBits(const AnchorScene& scene, const CodecArtifacts& artifacts) {
  const AttributeLayout layout = scene.layout();
  const size_t t_dim = layout.total();
  const auto rates = DecodedRateParams(artifacts.grid, artifacts.model, artifacts.bounds,
                                       scene.locations);
  std::vector<int64_t> symbols(scene.n * t_dim);
  std::vector<double> row(t_dim);
  for (size_t i = 0; i < scene.n; ++i) {
    scene.AttributeRow(i, row);
    for (size_t c = 0; c < t_dim; ++c) {
      symbols[i * t_dim + c] = QuantizeTest(row[c], rates[i].q[static_cast<int>(layout.FamilyOf(c))]).k;
    }
  }
  const FamilyBits bits = EntropyBits(scene, rates, symbols, artifacts.masks);
  const PruneResult kept = Prune(scene, artifacts.masks);
  const std::array<double, kNumFamilies> values = {
      static_cast<double>(kept.kept_anchors.size() * layout.dim_feat),
      static_cast<double>(kept.kept_anchors.size() * kScalingDim),
      static_cast<double>(3 * kept.total_kept_offsets())};
  BitsPerParam out;
  double total_bits = 0.0;
  double total_values = 0.0;
  for (int f = 0; f < kNumFamilies; ++f) {
    out.family[f] = values[f] > 0.0 ? bits[f] / values[f] : 0.0;
    total_bits += bits[f];
    total_values += values[f];
  }
  out.pooled = total_values > 0.0 ? total_bits / total_values : 0.0;
  return out;
}

namespace {

struct Probe {
  AnchorScene scene;
  std::vector<double> attributes;
  std::vector<double> reference;
  HashGrid grid;
  ContextModel model;
  MaskSet masks;
  Aabb bounds;
  std::vector<double> noise;
  ObjectiveOptions opt;
};

constexpr size_t kProbeAnchors = 10;

Probe MakeProbe(uint64_t seed, bool zero_noise) {
  Probe p;
  p.scene = SynthScene(seed, kProbeAnchors, 4, 2, 0.7);
  p.attributes = AttributeMatrix(p.scene);
  p.reference = p.attributes;
  p.bounds = SceneBounds(p.scene);
  const GridConfig grid = GridConfig::Geometric(2, 3, 6, 1, 8, 8, 64, 32, 2);
  Rng rng(seed * 7 + 5);
  std::vector<double> theta(GridParamCount(grid));
  for (double& t : theta) t = rng.Uniform(-1.0, 1.0);
  p.grid = HashGrid(grid, std::move(theta));
  const AttributeLayout layout = p.scene.layout();
  p.model = ContextModel::Create(grid.feature_dim(), 12, layout, kDefaultQ0, seed * 7 + 6);
  InitializeOutputBias(p.attributes, kProbeAnchors, p.model);
  // Larger output weights so every rate path carries a visible derivative.
  p.model.w3 *= 5.0;
  p.masks = MaskSet::AllKept(kProbeAnchors, layout.k_offsets);
  for (double& l : p.masks.logits) l = rng.Uniform(-2.0, 2.0);
  p.noise.resize(kProbeAnchors * layout.total());
  for (double& u : p.noise) u = zero_noise ? 0.0 : rng.Uniform() - 0.5;
  p.opt.phase = Phase::kFull;
  p.opt.grid_mode = BinarizeMode::kTanh;
  p.opt.soft_mask = true;
  p.opt.lambda_e = 0.05;
  p.opt.lambda_m = 0.01;
  p.opt.norm_anchors = kProbeAnchors;
  return p;
}

std::vector<uint32_t> AllAnchors(size_t n) {
  std::vector<uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

double ProbeLoss(const Probe& p, Grads* g) {
  State s{&p.scene, p.attributes, p.reference, &p.grid, &p.model, &p.masks, p.bounds};
  const auto batch = AllAnchors(kProbeAnchors);
  LossParts parts = BatchObjective(s, batch, p.noise, p.opt, g);
  const size_t t_dim = p.scene.layout().total();
  parts.hash_bits = HashEntropyLossWithGrad(
      p.grid, p.opt.grid_mode,
      g ? p.opt.lambda_e / (static_cast<double>(kProbeAnchors) * static_cast<double>(t_dim)) : 0.0,
      g ? std::span<double>(g->grid) : std::span<double>());
  return Assemble(parts, p.opt, kProbeAnchors, t_dim, true);
}

Grads ProbeGradients(const Probe& p) {
  Grads g;
  g.grid.assign(p.grid.param_count(), 0.0);
  g.mlp.ZeroLike(p.model);
  g.masks.assign(p.masks.logits.size(), 0.0);
  g.attributes.assign(p.attributes.size(), 0.0);
  ProbeLoss(p, &g);
  return g;
}

// Parameters touched by the probe anchors' interpolation.
std::vector<size_t> TouchedGridParams(const Probe& p) {
  std::vector<size_t> out;
  const size_t dim = p.grid.config().dim_embed;
  std::vector<double> feature(p.grid.config().feature_dim());
  for (size_t i = 0; i < kProbeAnchors; ++i) {
    InterpTrace trace;
    Interpolate(p.grid, NormalizeLocation(p.bounds, p.scene.location(i)), feature,
                BinarizeMode::kTanh, &trace);
    for (const InterpCorner& c : trace.corners) {
      for (size_t d = 0; d < dim; ++d) out.push_back(c.param + d);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

GradCheckResult GradCheck(GradComponent component, uint64_t probe_seed, double epsilon,
                          size_t max_coordinates) {
  Probe p = MakeProbe(probe_seed, component == GradComponent::kAttributes);
  const Grads g = ProbeGradients(p);

  std::vector<double> analytic;
  std::vector<size_t> candidates;
  std::vector<double> mlp_flat;
  switch (component) {
    case GradComponent::kMlp:
      analytic.resize(p.model.parameter_count());
      g.mlp.Flatten(analytic);
      candidates.resize(analytic.size());
      std::iota(candidates.begin(), candidates.end(), size_t{0});
      mlp_flat.resize(analytic.size());
      p.model.Flatten(mlp_flat);
      break;
    case GradComponent::kGridRelaxed:
      analytic = g.grid;
      candidates = TouchedGridParams(p);
      break;
    case GradComponent::kMasksRelaxed:
      analytic = g.masks;
      candidates.resize(analytic.size());
      std::iota(candidates.begin(), candidates.end(), size_t{0});
      break;
    case GradComponent::kAttributes:
      analytic = g.attributes;
      candidates.resize(analytic.size());
      std::iota(candidates.begin(), candidates.end(), size_t{0});
      break;
  }
  // Coordinates whose derivative vanishes (dead ReLUs, clamped scales) carry
  // no information; central differences of a unit-scale loss cannot resolve
  // relative error below ~1e-11 / |g| anyway.
  std::erase_if(candidates, [&](size_t i) { return std::abs(analytic[i]) < 1e-7; });
  Rng rng(probe_seed * 7 + 9);
  if (candidates.size() > max_coordinates) {
    for (size_t j = 0; j < max_coordinates; ++j) {
      std::swap(candidates[j], candidates[j + rng.Below(candidates.size() - j)]);
    }
    candidates.resize(max_coordinates);
  }

  auto perturbed_loss = [&](size_t index, double delta) {
    Probe q = p;
    switch (component) {
      case GradComponent::kMlp: {
        std::vector<double> flat = mlp_flat;
        flat[index] += delta;
        q.model.Unflatten(flat);
        break;
      }
      case GradComponent::kGridRelaxed:
        q.grid.mutable_params()[index] += delta;
        break;
      case GradComponent::kMasksRelaxed:
        q.masks.logits[index] += delta;
        break;
      case GradComponent::kAttributes:
        q.attributes[index] += delta;
        break;
    }
    return ProbeLoss(q, nullptr);
  };

  GradCheckResult result;
  for (size_t index : candidates) {
    const double fd = (perturbed_loss(index, epsilon) - perturbed_loss(index, -epsilon)) /
                      (2.0 * epsilon);
    const double err = std::abs(analytic[index] - fd) / std::max(std::abs(analytic[index]), 1e-8);
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.coordinates;
  }
  return result;
}

std::vector<double> RateFreeMlpGradient(uint64_t probe_seed) {
  Probe p = MakeProbe(probe_seed, false);
  p.opt.lambda_e = 0.0;
  p.opt.weights = {0.0, 0.0, 0.0};
  const Grads g = ProbeGradients(p);
  std::vector<double> out(p.model.parameter_count());
  g.mlp.Flatten(out);
  return out;
}

std::vector<uint8_t> SerializeCheckpoint(const CodecArtifacts& a) {
  ByteWriter w;
  w.Tag("HACM");
  w.U32(kCheckpointVersion);
  const GridConfig& gc = a.grid.config();
  w.U32(static_cast<uint32_t>(gc.res_3d.size()));
  for (uint32_t r : gc.res_3d) w.U32(r);
  w.U32(static_cast<uint32_t>(gc.res_2d.size()));
  for (uint32_t r : gc.res_2d) w.U32(r);
  w.U32(gc.table_3d_max);
  w.U32(gc.table_2d_max);
  w.U32(gc.dim_embed);
  for (double t : a.grid.params()) w.F64(t);
  const AttributeLayout& layout = a.model.layout();
  w.U64(a.model.input_dim());
  w.U64(a.model.hidden_dim());
  w.U64(layout.dim_feat);
  w.U64(layout.k_offsets);
  for (double q : a.model.q0()) w.F64(q);
  std::vector<double> flat(a.model.parameter_count());
  a.model.Flatten(flat);
  for (double v : flat) w.F64(v);
  w.U64(a.masks.n);
  w.U64(a.masks.k);
  w.F64(a.masks.tau);
  for (double l : a.masks.logits) w.F64(l);
  for (float v : a.bounds.min) w.F32(v);
  for (float v : a.bounds.max) w.F32(v);
  w.F64(a.lambda_e);
  w.F64(a.lambda_m);
  return w.Take();
}

CodecArtifacts ParseCheckpoint(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kIo, "checkpoint");
  if (!r.TagIs("HACM")) Fail(ErrorCode::kFormat, "bad magic, not a .hacm checkpoint");
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    Fail(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  auto read_levels = [&r] {
    const uint32_t n = r.U32();
    if (n > 64) Fail(ErrorCode::kFormat, "implausible level count in checkpoint");
    std::vector<uint32_t> res(n);
    for (uint32_t& v : res) v = r.U32();
    return res;
  };
  GridConfig gc;
  gc.res_3d = read_levels();
  gc.res_2d = read_levels();
  gc.table_3d_max = r.U32();
  gc.table_2d_max = r.U32();
  gc.dim_embed = r.U32();
  gc.Validate();
  const size_t grid_count = GridParamCount(gc);
  if (grid_count > r.remaining() / 8) Fail(ErrorCode::kIo, "checkpoint truncated in grid");
  std::vector<double> theta(grid_count);
  for (double& t : theta) t = r.F64();
  CodecArtifacts a;
  a.grid = HashGrid(gc, std::move(theta));
  const uint64_t input = r.U64();
  const uint64_t hidden = r.U64();
  const uint64_t dim_feat = r.U64();
  const uint64_t k = r.U64();
  if (input != gc.feature_dim() || hidden == 0 || hidden > 4096 || dim_feat > (1u << 20) ||
      k > (1u << 20)) {
    Fail(ErrorCode::kFormat, "inconsistent model shape in checkpoint");
  }
  FamilySteps q0{};
  for (double& q : q0) q = r.F64();
  a.model = ContextModel(input, hidden, {dim_feat, k}, q0);
  std::vector<double> flat(a.model.parameter_count());
  if (flat.size() > r.remaining() / 8) Fail(ErrorCode::kIo, "checkpoint truncated in model");
  for (double& v : flat) v = r.F64();
  a.model.Unflatten(flat);
  a.masks.n = r.U64();
  a.masks.k = r.U64();
  a.masks.tau = r.F64();
  if (a.masks.k != k || a.masks.n > r.remaining() / 8 / std::max<uint64_t>(k, 1)) {
    Fail(ErrorCode::kFormat, "inconsistent mask shape in checkpoint");
  }
  a.masks.logits.resize(a.masks.n * a.masks.k);
  for (double& l : a.masks.logits) l = r.F64();
  for (float& v : a.bounds.min) v = r.F32();
  for (float& v : a.bounds.max) v = r.F32();
  a.lambda_e = r.F64();
  a.lambda_m = r.F64();
  if (r.remaining() != 0) Fail(ErrorCode::kFormat, "trailing bytes after checkpoint");
  return a;
}

}  // namespace hac
