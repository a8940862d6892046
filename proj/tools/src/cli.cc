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

#include "hac/cli.h"

#include <cstdint>
#include <exception>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "hac/bytes.h"
#include "hac/container.h"
#include "hac/error.h"
#include "hac/report.h"
#include "hac/scene.h"
#include "hac/trainer.h"
#include "json.hpp"

namespace hac {

namespace {

using nlohmann::json;

GridConfig PresetGrid(const std::string& name) {
  if (name == "standard") return GridConfig::Standard();
  if (name == "small") return GridConfig::Small();
  Fail(ErrorCode::kInvalidArgument, "unknown grid preset '" + name + "'");
}

void WriteText(const std::string& path, const std::string& text) {
  WriteFileBytes(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()),
                                                text.size()));
}

json LossJson(const LossParts& p) {
  return {{"distortion", p.distortion}, {"entropy_bits", p.entropy_bits},
          {"hash_bits", p.hash_bits},   {"mask_loss", p.mask_loss},
          {"total", p.total},           {"coded_values", p.coded_values}};
}

json BitsJson(const BitsPerParam& b) {
  json j;
  for (int f = 0; f < kNumFamilies; ++f) j[FamilyName(static_cast<Family>(f))] = b.family[f];
  j["pooled"] = b.pooled;
  return j;
}

json InspectJson(const SectionReport& r) {
  json sections = json::array();
  for (int s = 0; s < kNumSections; ++s) {
    sections.push_back({{"name", SectionName(static_cast<Section>(s))},
                        {"offset", r.sections[s].offset},
                        {"length", r.sections[s].length}});
  }
  json families = json::array();
  for (const FamilyReport& f : r.families) {
    families.push_back({{"family", FamilyName(f.family)},
                        {"bytes", f.bytes},
                        {"values", f.values},
                        {"bits_per_param", f.bits_per_param}});
  }
  return {{"file_bytes", r.file_bytes}, {"header_bytes", r.header_bytes},
          {"sections", sections},       {"families", families},
          {"n_kept", r.n_kept},         {"kept_offset_slots", r.kept_offset_slots}};
}

CodecArtifacts LoadArtifacts(const std::string& path) {
  return ParseCheckpoint(ReadFileBytes(path));
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compression codec for anchor-based Gaussian splatting scenes", "hacz"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  bool deterministic = false;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    cmd->add_flag("--deterministic", deterministic, "serial, fixed-order evaluation");
  };

  size_t synth_n = 8192, synth_dim = 50, synth_k = 10;
  double synth_smooth = 0.9;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic .hacscene");
  add_common(synth);
  synth->add_option("--n", synth_n, "anchor count")->capture_default_str();
  synth->add_option("--dim-feat", synth_dim, "feature dimension")->capture_default_str();
  synth->add_option("--k", synth_k, "offsets per anchor")->capture_default_str();
  synth->add_option("--smoothness", synth_smooth, "weight of the smooth field")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("-o,--output", synth_out, "output .hacscene")->required();

  TrainConfig cfg;
  std::string fit_scene, fit_out, fit_history, fit_refined, mode_name = "rate-only",
                                                             grid_preset = "standard";
  auto* fit = app.add_subcommand("fit", "train grid, context model and masks");
  add_common(fit);
  fit->add_option("scene", fit_scene, "input .hacscene")->required();
  fit->add_option("-o,--output", fit_out, "output checkpoint (.hacm)")->required();
  fit->add_option("--history", fit_history, "training history CSV");
  fit->add_option("--refined-scene", fit_refined, "refined attributes (.hacscene)");
  fit->add_option("--lambda-e", cfg.lambda_e, "rate weight")->capture_default_str();
  fit->add_option("--lambda-m", cfg.lambda_m, "mask weight")->capture_default_str();
  fit->add_option("--iters", cfg.iterations, "iterations")->capture_default_str();
  fit->add_option("--mode", mode_name, "rate-only or joint")
      ->check(CLI::IsMember({"rate-only", "joint"}))
      ->capture_default_str();
  fit->add_option("--grid-preset", grid_preset, "standard or small")
      ->check(CLI::IsMember({"standard", "small"}))
      ->capture_default_str();
  fit->add_option("--mask-init", cfg.initial_mask_logit, "initial mask logit (joint mode)")
      ->capture_default_str();
  fit->add_option("--lr-mask", cfg.lr_mask, "mask logit learning rate")->capture_default_str();
  fit->add_option("--sample-frac", cfg.sample_frac, "anchors per iteration")
      ->capture_default_str();
  std::vector<double> weights;
  fit->add_option("--distortion-weights", weights,
                  "three per-family weights; default calibrated to Q0 at lambda_e=2e-3")
      ->expected(3);

  std::string enc_scene, enc_ckpt, enc_out;
  auto* encode = app.add_subcommand("encode", "compress a scene with a trained checkpoint");
  add_common(encode);
  encode->add_option("scene", enc_scene, "input .hacscene")->required();
  encode->add_option("checkpoint", enc_ckpt, "trained .hacm")->required();
  encode->add_option("-o,--output", enc_out, "output .hacz")->required();

  std::string dec_in, dec_out, dec_ckpt;
  auto* decode = app.add_subcommand("decode", "decompress to a .hacscene");
  add_common(decode);
  decode->add_option("blob", dec_in, "input .hacz")->required();
  decode->add_option("-o,--output", dec_out, "output .hacscene")->required();
  decode->add_option("--checkpoint-out", dec_ckpt, "also write the decoded artifacts");

  std::string ver_scene, ver_ckpt;
  auto* verify = app.add_subcommand("verify", "encode, decode and compare bit-exactly");
  add_common(verify);
  verify->add_option("scene", ver_scene, "input .hacscene")->required();
  verify->add_option("checkpoint", ver_ckpt, "trained .hacm")->required();

  std::string insp_in;
  auto* inspect = app.add_subcommand("inspect", "section report as JSON");
  add_common(inspect);
  inspect->add_option("blob", insp_in, "input .hacz")->required();

  std::string bm_scene, bm_ckpt, bm_out;
  uint32_t voxels = 16;
  bool bm_json = false;
  auto* bitmap = app.add_subcommand("bitmap", "per-voxel bit allocation");
  add_common(bitmap);
  bitmap->add_option("scene", bm_scene, "input .hacscene")->required();
  bitmap->add_option("checkpoint", bm_ckpt, "trained .hacm")->required();
  bitmap->add_option("--voxels", voxels, "lattice resolution G")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bitmap->add_option("-o,--output", bm_out, "write CSV here instead of stdout");
  bitmap->add_flag("--json", bm_json, "emit JSON records");

  std::string rep_in;
  bool rep_json = false;
  auto* report = app.add_subcommand("report", "per-family size and bits per parameter");
  add_common(report);
  report->add_option("blob", rep_in, "input .hacz")->required();
  report->add_flag("--json", rep_json, "emit JSON");

  std::vector<const char*> argv = {"hacz"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      SaveScene(SynthScene(seed, synth_n, synth_dim, synth_k, synth_smooth), synth_out);
    } else if (*fit) {
      const AnchorScene scene = LoadScene(fit_scene);
      cfg.seed = seed;
      cfg.mode = ParseTrainMode(mode_name);
      cfg.grid = PresetGrid(grid_preset);
      if (!weights.empty()) cfg.distortion_weights = DistortionWeights{weights[0], weights[1], weights[2]};
      const TrainResult result = Fit(scene, cfg);
      WriteFileBytes(fit_out, SerializeCheckpoint(result.artifacts));
      if (!fit_history.empty()) WriteText(fit_history, HistoryCsv(result.history));
      if (!fit_refined.empty()) SaveScene(result.scene, fit_refined);
      const json summary = {
          {"mode", TrainModeName(cfg.mode)},
          {"iterations", cfg.iterations},
          {"initial", LossJson(result.initial)},
          {"final", LossJson(result.final)},
          {"baseline_bits", BitsJson(BaselineBits(result.scene, cfg.q0))},
          {"estimated_bits", BitsJson(EstimatedBits(result.scene, result.artifacts))},
          {"masked_fraction", result.artifacts.masks.MaskedFraction()}};
      out << summary.dump(2) << '\n';
    } else if (*encode) {
      const AnchorScene scene = LoadScene(enc_scene);
      const std::vector<uint8_t> blob = EncodeScene(scene, LoadArtifacts(enc_ckpt));
      WriteFileBytes(enc_out, blob);
      out << json{{"bytes", blob.size()}}.dump() << '\n';
    } else if (*decode) {
      const DecodedScene decoded = DecodeScene(ReadFileBytes(dec_in));
      SaveScene(decoded.scene, dec_out);
      if (!dec_ckpt.empty()) WriteFileBytes(dec_ckpt, SerializeCheckpoint(decoded.artifacts));
    } else if (*verify) {
      const VerifyReport r = VerifyRoundTrip(LoadScene(ver_scene), LoadArtifacts(ver_ckpt));
      out << json{{"bit_exact", r.bit_exact}, {"bytes", r.blob_bytes}, {"mismatch", r.mismatch}}
                 .dump()
          << '\n';
      if (!r.bit_exact) return kExitVerifyFailed;
    } else if (*inspect) {
      out << InspectJson(Inspect(ReadFileBytes(insp_in))).dump(2) << '\n';
    } else if (*bitmap) {
      const auto records =
          BitAllocationMap(LoadScene(bm_scene), LoadArtifacts(bm_ckpt), voxels);
      std::string text;
      if (bm_json) {
        json arr = json::array();
        for (const VoxelRecord& r : records) {
          arr.push_back({{"voxel", r.voxel},
                         {"anchor_count", r.anchor_count},
                         {"total_bits", r.total_bits},
                         {"mean_bits_per_anchor", r.mean_bits_per_anchor}});
        }
        text = arr.dump(2) + "\n";
      } else {
        text = VoxelCsv(records);
      }
      if (bm_out.empty()) {
        out << text;
      } else {
        WriteText(bm_out, text);
      }
    } else if (*report) {
      const SectionReport r = Inspect(ReadFileBytes(rep_in));
      if (rep_json) {
        out << InspectJson(r)["families"].dump(2) << '\n';
      } else {
        out << FamilyTable(r);
      }
    }
  } catch (const Error& e) {
    err << "hacz: " << e.what() << '\n';
    return kExitErrorBase + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "hacz: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace hac
