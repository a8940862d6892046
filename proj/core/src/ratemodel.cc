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

#include "hac/ratemodel.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hac/error.h"
#include "hac/rng.h"

namespace hac {

ContextModel::ContextModel(size_t input_dim, size_t hidden_dim,
                           AttributeLayout layout, FamilySteps q0)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), layout_(layout), q0_(q0) {
  if (input_dim == 0 || hidden_dim == 0) {
    Fail(ErrorCode::kInvalidArgument, "context model dimensions must be positive");
  }
  for (double q : q0) {
    if (!(q > 0.0)) Fail(ErrorCode::kInvalidArgument, "Q0 must be positive");
  }
  w1 = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  w2 = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  w3 = Eigen::MatrixXd::Zero(output_dim(), hidden_dim);
  b1 = Eigen::VectorXd::Zero(hidden_dim);
  b2 = Eigen::VectorXd::Zero(hidden_dim);
  b3 = Eigen::VectorXd::Zero(output_dim());
}

ContextModel ContextModel::Create(size_t input_dim, size_t hidden_dim,
                                  AttributeLayout layout, FamilySteps q0,
                                  uint64_t seed) {
  ContextModel m(input_dim, hidden_dim, layout, q0);
  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w, double bound) {
    // Row-major draw order so the result does not depend on storage order.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.Uniform(-bound, bound);
    }
  };
  fill(m.w1, std::sqrt(6.0 / static_cast<double>(input_dim)));
  fill(m.w2, std::sqrt(6.0 / static_cast<double>(hidden_dim)));
  fill(m.w3, 0.1 * std::sqrt(6.0 / static_cast<double>(hidden_dim)));
  const size_t total = layout.total();
  for (size_t c = 0; c < total; ++c) {
    const Family f = layout.FamilyOf(c);
    m.b3(static_cast<Eigen::Index>(3 + total + c)) = std::log(q0[static_cast<int>(f)]);
  }
  return m;
}

size_t ContextModel::parameter_count() const {
  return static_cast<size_t>(w1.size() + b1.size() + w2.size() + b2.size() +
                             w3.size() + b3.size());
}

namespace {

template <typename Visit>
void VisitParameters(Eigen::MatrixXd& w1, Eigen::VectorXd& b1, Eigen::MatrixXd& w2,
                     Eigen::VectorXd& b2, Eigen::MatrixXd& w3, Eigen::VectorXd& b3,
                     Visit&& visit) {
  auto matrix = [&](Eigen::MatrixXd& w) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) visit(w(r, c));
    }
  };
  auto vector = [&](Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) visit(b(i));
  };
  matrix(w1);
  vector(b1);
  matrix(w2);
  vector(b2);
  matrix(w3);
  vector(b3);
}

}  // namespace

void ContextModel::Flatten(std::span<double> out) const {
  if (out.size() != parameter_count()) Fail(ErrorCode::kInvalidArgument, "flatten size mismatch");
  size_t i = 0;
  auto& self = const_cast<ContextModel&>(*this);
  VisitParameters(self.w1, self.b1, self.w2, self.b2, self.w3, self.b3,
                  [&](double& v) { out[i++] = v; });
}

void ContextModel::Unflatten(std::span<const double> in) {
  if (in.size() != parameter_count()) Fail(ErrorCode::kInvalidArgument, "unflatten size mismatch");
  size_t i = 0;
  VisitParameters(w1, b1, w2, b2, w3, b3, [&](double& v) { v = in[i++]; });
}

ContextModel ContextModel::RoundedToFloat() const {
  ContextModel m = *this;
  VisitParameters(m.w1, m.b1, m.w2, m.b2, m.w3, m.b3,
                  [](double& v) { v = static_cast<float>(v); });
  for (double& q : m.q0_) q = static_cast<float>(q);
  return m;
}

void MlpGrads::ZeroLike(const ContextModel& model) {
  w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
  w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
  w3 = Eigen::MatrixXd::Zero(model.w3.rows(), model.w3.cols());
  b1 = Eigen::VectorXd::Zero(model.b1.size());
  b2 = Eigen::VectorXd::Zero(model.b2.size());
  b3 = Eigen::VectorXd::Zero(model.b3.size());
}

void MlpGrads::Flatten(std::span<double> out) const {
  size_t i = 0;
  auto& self = const_cast<MlpGrads&>(*this);
  VisitParameters(self.w1, self.b1, self.w2, self.b2, self.w3, self.b3,
                  [&](double& v) { out[i++] = v; });
}

void MlpForward(const ContextModel& model, const Eigen::MatrixXd& x, MlpCache* cache) {
  if (static_cast<size_t>(x.rows()) != model.input_dim()) {
    Fail(ErrorCode::kInvalidArgument, "MLP input has " + std::to_string(x.rows()) +
                                          " rows, expected " +
                                          std::to_string(model.input_dim()));
  }
  cache->x = x;
  cache->z1 = (model.w1 * x).colwise() + model.b1;
  cache->h1 = cache->z1.cwiseMax(0.0);
  cache->z2 = (model.w2 * cache->h1).colwise() + model.b2;
  cache->h2 = cache->z2.cwiseMax(0.0);
  cache->y = (model.w3 * cache->h2).colwise() + model.b3;
}

Eigen::MatrixXd MlpBackward(const ContextModel& model, const MlpCache& cache,
                            const Eigen::MatrixXd& dy, MlpGrads* grads) {
  grads->w3.noalias() += dy * cache.h2.transpose();
  grads->b3 += dy.rowwise().sum();
  Eigen::MatrixXd dz2 = (model.w3.transpose() * dy).cwiseProduct(
      (cache.z2.array() > 0.0).cast<double>().matrix());
  grads->w2.noalias() += dz2 * cache.h1.transpose();
  grads->b2 += dz2.rowwise().sum();
  Eigen::MatrixXd dz1 = (model.w2.transpose() * dz2).cwiseProduct(
      (cache.z1.array() > 0.0).cast<double>().matrix());
  grads->w1.noalias() += dz1 * cache.x.transpose();
  grads->b1 += dz1.rowwise().sum();
  return model.w1.transpose() * dz1;
}

void DecodeOutput(const ContextModel& model, std::span<const double> y, RateParams* out) {
  const AttributeLayout& layout = model.layout();
  const size_t total = layout.total();
  if (y.size() != model.output_dim()) Fail(ErrorCode::kInvalidArgument, "MLP output width mismatch");
  for (int f = 0; f < kNumFamilies; ++f) {
    out->r[f] = y[f];
    out->q[f] = StepFromRefinement(model.q0()[f], y[f]);
  }
  out->mu.assign(y.begin() + 3, y.begin() + 3 + total);
  out->sigma.resize(total);
  for (size_t c = 0; c < total; ++c) {
    const Family f = layout.FamilyOf(c);
    const double s = std::clamp(y[3 + total + c], std::log(model.sigma_min(f)),
                                std::log(model.sigma_max(f)));
    out->sigma[c] = std::exp(s);
  }
}

RateParams ModelForward(std::span<const double> feature, const ContextModel& model) {
  if (feature.size() != model.input_dim()) {
    Fail(ErrorCode::kInvalidArgument, "hash feature width " + std::to_string(feature.size()) +
                                          " does not match model input " +
                                          std::to_string(model.input_dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> x(feature.data(), static_cast<Eigen::Index>(feature.size()));
  const Eigen::VectorXd h1 = (model.w1 * x + model.b1).cwiseMax(0.0);
  const Eigen::VectorXd h2 = (model.w2 * h1 + model.b2).cwiseMax(0.0);
  const Eigen::VectorXd y = model.w3 * h2 + model.b3;
  RateParams out;
  DecodeOutput(model, std::span<const double>(y.data(), static_cast<size_t>(y.size())), &out);
  return out;
}

double QuantizeTrain(double f, double q, double u) {
  if (!(q > 0.0)) Fail(ErrorCode::kInvalidArgument, "quantization step must be positive");
  return f + u * q;
}

Quantized QuantizeTest(double f, double q) {
  if (!std::isfinite(f)) Fail(ErrorCode::kInvalidArgument, "cannot quantize a non-finite value");
  if (!(q > 0.0)) Fail(ErrorCode::kInvalidArgument, "quantization step must be positive");
  const double ratio = f / q;
  if (!(std::abs(ratio) < 0x1p62)) Fail(ErrorCode::kOutOfRange, "quantized symbol overflows");
  // std::round rounds halfway cases away from zero.
  const int64_t k = static_cast<int64_t>(std::round(ratio));
  return {k, static_cast<double>(k) * q};
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Upper tail Q(x) = 1 - Phi(x).
double UpperTail(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double NormalDensity(double x) {
  return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * kInvSqrt2);
}

}  // namespace

double NormalTail(double x) { return UpperTail(x); }

double NormalInterval(double lo, double hi) {
  if (lo >= 0.0) return UpperTail(lo) - UpperTail(hi);
  if (hi <= 0.0) return UpperTail(-hi) - UpperTail(-lo);
  return 1.0 - UpperTail(hi) - UpperTail(-lo);
}

double BinProbability(int64_t k, double mu, double sigma, double q) {
  const double center = static_cast<double>(k) * q;
  return NormalInterval((center - 0.5 * q - mu) / sigma, (center + 0.5 * q - mu) / sigma);
}

double ValueBits(double center, double mu, double sigma, double q) {
  const double p = NormalInterval((center - 0.5 * q - mu) / sigma,
                                  (center + 0.5 * q - mu) / sigma);
  return -std::log2(std::max(p, kProbabilityFloor));
}

ValueBitsGrad ValueBitsWithGrad(double center, double mu, double sigma, double q) {
  const double a = (center + 0.5 * q - mu) / sigma;
  const double b = (center - 0.5 * q - mu) / sigma;
  const double p = NormalInterval(b, a);
  ValueBitsGrad g;
  if (!(p > kProbabilityFloor)) {
    g.bits = -std::log2(kProbabilityFloor);
    return g;
  }
  g.bits = -std::log2(p);
  const double dbits_dp = -1.0 / (p * std::numbers::ln2);
  const double pa = NormalDensity(a);
  const double pb = NormalDensity(b);
  g.d_center = dbits_dp * (pa - pb) / sigma;
  g.d_mu = -g.d_center;
  g.d_q = dbits_dp * 0.5 * (pa + pb) / sigma;
  g.d_sigma = dbits_dp * (b * pb - a * pa) / sigma;
  return g;
}

FamilyBits AnchorBits(const AttributeLayout& layout, const RateParams& rate,
                      std::span<const int64_t> symbols, std::span<const uint8_t> mask_row) {
  FamilyBits bits{};
  const size_t offsets_begin = layout.Begin(Family::kOffset);
  for (size_t c = 0; c < layout.total(); ++c) {
    if (c >= offsets_begin && !mask_row.empty() && !mask_row[(c - offsets_begin) / 3]) continue;
    const int f = static_cast<int>(layout.FamilyOf(c));
    const double q = rate.q[f];
    bits[f] += ValueBits(static_cast<double>(symbols[c]) * q, rate.mu[c], rate.sigma[c], q);
  }
  return bits;
}

FamilyBits EntropyBits(const AnchorScene& scene, std::span<const RateParams> rate,
                       std::span<const int64_t> symbols, const MaskSet& masks) {
  const AttributeLayout layout = scene.layout();
  const size_t width = layout.total();
  if (rate.size() != scene.n || symbols.size() != scene.n * width ||
      masks.n != scene.n || masks.k != scene.k_offsets) {
    Fail(ErrorCode::kInvalidArgument, "entropy_bits inputs are not aligned with the scene");
  }
  FamilyBits total{};
  std::vector<uint8_t> row(masks.k);
  for (size_t i = 0; i < scene.n; ++i) {
    if (masks.pruned(i)) continue;
    for (size_t j = 0; j < masks.k; ++j) row[j] = masks.hard(i, j);
    const auto bits = AnchorBits(layout, rate[i], symbols.subspan(i * width, width), row);
    for (int f = 0; f < kNumFamilies; ++f) total[f] += bits[f];
  }
  return total;
}

double TotalLoss(double distortion, double entropy_bits, double hash_bits,
                 double mask_loss, double lambda_e, double lambda_m, size_t n,
                 const AttributeLayout& layout) {
  if (n == 0) Fail(ErrorCode::kInvalidArgument, "total loss needs at least one anchor");
  const double normalizer = static_cast<double>(n) * static_cast<double>(layout.total());
  return distortion + lambda_e * (entropy_bits + hash_bits) / normalizer + lambda_m * mask_loss;
}

}  // namespace hac
