// Copyright (c) 2026 The himamba Authors. All Rights Reserved.
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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "himamba/eval.hpp"
#include "himamba/image.hpp"
#include "himamba/ops.hpp"
#include "himamba/train.hpp"
#include "himamba/verify.hpp"

namespace {

using namespace himamba;

int cmd_sr(const std::string& weights_path, const std::string& input, const std::string& output,
           bool use_ensemble) {
  const ModelWeights w = load_weights(weights_path);
  const Image in = load_png(input);
  ModelFn single = [&w](const Tensor& lr) { return himamba_forward(lr, w); };
  Image out;
  out.chw = use_ensemble ? self_ensemble(in.chw, single) : single(in.chw);
  save_png(out, output);
  std::printf("wrote %s (%dx%d -> %dx%d, x%d%s)\n", output.c_str(), in.width(), in.height(),
              out.width(), out.height(), w.config.scale, use_ensemble ? ", self-ensemble" : "");
  return 0;
}

int cmd_eval(const std::string& weights_path, const std::string& hr_dir, int scale,
             const std::string& csv, bool use_ensemble) {
  const ModelWeights w = load_weights(weights_path);
  const EvalSummary s = run_eval(w, hr_dir, scale, use_ensemble, csv);
  std::printf("%-28s %9s %9s %12s %12s\n", "image", "psnr", "ssim", "psnr_bicubic", "ssim_bicubic");
  for (const auto& r : s.rows)
    std::printf("%-28s %9.4f %9.6f %12.4f %12.6f\n", r.name.c_str(), r.psnr_model, r.ssim_model,
                r.psnr_bicubic, r.ssim_bicubic);
  std::printf("%-28s %9.4f %9.6f %12.4f %12.6f\n", "mean", s.mean_psnr_model, s.mean_ssim_model,
              s.mean_psnr_bicubic, s.mean_ssim_bicubic);
  if (!csv.empty()) std::printf("csv written to %s\n", csv.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, int iters,
              std::uint64_t seed, const std::string& out_path, int batch, int patch, double lr0,
              const std::string& loss_csv) {
  const HiMambaConfig cfg =
      config_path.empty() ? HiMambaConfig::tiny() : config_from_json_file(config_path);
  ModelWeights w = make_weights(cfg);
  init_random(w, seed);

  namespace fs = std::filesystem;
  if (!fs::is_directory(data_dir)) throw InputError("not a directory: " + data_dir);
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(data_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<TrainSample> data;
  for (const auto& p : paths) {
    try {
      Tensor hr = load_png(p).chw;
      const int hc = (hr.dim(1) / cfg.scale) * cfg.scale, wc = (hr.dim(2) / cfg.scale) * cfg.scale;
      if (hc < 8 * cfg.scale || wc < 8 * cfg.scale) {
        std::cerr << "warning: skipping undersized " << p << "\n";
        continue;
      }
      TrainSample s;
      s.hr = ops::crop_tl(hr, hc, wc);
      s.lr = bicubic_resize(s.hr, wc / cfg.scale, hc / cfg.scale);
      data.push_back(std::move(s));
    } catch (const Error& e) {
      std::cerr << "warning: " << e.what() << " (skipped)\n";
    }
  }
  if (data.empty()) throw InputError("no usable training images in " + data_dir);

  TrainOptions opt;
  opt.iters = iters;
  opt.batch = batch;
  opt.lr_patch = patch;
  opt.lr0 = lr0;
  opt.seed = seed;
  opt.loss_csv = loss_csv;
  std::printf("training: %zu images, %d iterations, batch %d, LR patch %d, lr %g, seed %llu\n",
              data.size(), iters, batch, patch, lr0, static_cast<unsigned long long>(seed));
  const TrainResult res = train(w, data, opt);
  save_weights(w, out_path);
  std::printf("final loss %.6f (first %.6f); weights written to %s\n", res.losses.back(),
              res.losses.front(), out_path.c_str());
  return 0;
}

int cmd_count(const std::string& config_path, const std::string& input_size) {
  const HiMambaConfig cfg =
      config_path.empty() ? HiMambaConfig::tiny() : config_from_json_file(config_path);
  int h = 64, w = 64;
  if (!input_size.empty()) {
    const auto x = input_size.find('x');
    if (x == std::string::npos) throw InputError("--input-size expects HxW, got " + input_size);
    try {
      h = std::stoi(input_size.substr(0, x));
      w = std::stoi(input_size.substr(x + 1));
    } catch (const std::exception&) {
      throw InputError("--input-size expects HxW, got " + input_size);
    }
  }
  const auto params = count_params(cfg);
  const auto flops = count_flops(cfg, h, w);
  std::printf("config: %s\n", config_to_json(cfg).c_str());
  std::printf("params: %lld (%.3f M)\n", static_cast<long long>(params), params / 1e6);
  std::printf("flops @ %dx%d input: %lld (%.3f G)\n", h, w, static_cast<long long>(flops), flops / 1e9);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hi-Mamba hierarchical state-space image super-resolution"};
  app.require_subcommand(1);

  std::string weights, input, output, hr_dir, csv, config_path, data_dir, out_path, loss_csv;
  std::string filter, input_size;
  bool ensemble = false;
  int scale = 2, iters = 1000, batch = 8, patch = 64;
  std::uint64_t seed = 0;
  double lr0 = 2e-4;

  auto* sr = app.add_subcommand("sr", "super-resolve a PNG image");
  sr->add_option("--weights", weights, "weight file")->required();
  sr->add_option("--input", input, "input PNG")->required();
  sr->add_option("--output", output, "output PNG")->required();
  sr->add_flag("--self-ensemble", ensemble, "average over the 8 dihedral transforms");

  auto* ev = app.add_subcommand("eval", "evaluate PSNR/SSIM against an HR directory");
  ev->add_option("--weights", weights, "weight file")->required();
  ev->add_option("--hr-dir", hr_dir, "directory of HR PNG images")->required();
  ev->add_option("--scale", scale, "downscale factor (must match the weights)")->required();
  ev->add_option("--csv", csv, "write per-image metrics to CSV");
  ev->add_flag("--self-ensemble", ensemble, "average over the 8 dihedral transforms");

  auto* tr = app.add_subcommand("train", "train on a directory of HR PNG images");
  tr->add_option("--config", config_path, "architecture config JSON (default: tiny preset)");
  tr->add_option("--data", data_dir, "directory of HR PNG images")->required();
  tr->add_option("--iters", iters, "iterations")->required();
  tr->add_option("--seed", seed, "RNG seed");
  tr->add_option("--out", out_path, "output weight file")->required();
  tr->add_option("--batch", batch, "batch size");
  tr->add_option("--patch", patch, "LR-side patch size");
  tr->add_option("--lr", lr0, "initial learning rate");
  tr->add_option("--loss-csv", loss_csv, "write iteration,lr,loss");

  auto* ct = app.add_subcommand("count", "report parameter and FLOP counts");
  ct->add_option("--config", config_path, "architecture config JSON (default: tiny preset)");
  ct->add_option("--input-size", input_size, "FLOP input size as HxW (default 64x64)");

  auto* vf = app.add_subcommand("verify", "run the oracle/invariant suites");
  vf->add_option("--filter", filter, "run only checks whose name contains this substring");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sr->parsed()) return cmd_sr(weights, input, output, ensemble);
    if (ev->parsed()) return cmd_eval(weights, hr_dir, scale, csv, ensemble);
    if (tr->parsed()) return cmd_train(config_path, data_dir, iters, seed, out_path, batch, patch, lr0, loss_csv);
    if (ct->parsed()) return cmd_count(config_path, input_size);
    if (vf->parsed()) return himamba::verify::run_checks(filter, std::cout) == 0 ? 0 : 1;
  } catch (const himamba::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
