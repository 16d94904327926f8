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

#include "himamba/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "himamba/image.hpp"
#include "himamba/metrics.hpp"
#include "himamba/ops.hpp"

namespace himamba {

Tensor self_ensemble(const Tensor& img, const ModelFn& model) {
  std::vector<Tensor> outs;
  outs.reserve(8);
  for (int k = 0; k < 8; ++k)
    outs.push_back(dihedral_inverse(model(dihedral_apply(img, k)), k));
  // balanced tree keeps the mean exact when all passes agree
  Tensor s01 = ops::add(outs[0], outs[1]);
  Tensor s23 = ops::add(outs[2], outs[3]);
  Tensor s45 = ops::add(outs[4], outs[5]);
  Tensor s67 = ops::add(outs[6], outs[7]);
  Tensor s = ops::add(ops::add(s01, s23), ops::add(s45, s67));
  return ops::scale(s, 0.125);
}

EvalSummary evaluate_images(const std::vector<std::pair<std::string, Tensor>>& hr_images, int scale,
                            const ModelFn& model) {
  if (hr_images.empty()) throw InputError("evaluate_images: no images");
  EvalSummary sum;
  for (const auto& [name, hr_full] : hr_images) {
    const int hc = (hr_full.dim(1) / scale) * scale;
    const int wc = (hr_full.dim(2) / scale) * scale;
    if (hc < 8 * scale || wc < 8 * scale) {
      std::cerr << "warning: skipping undersized image " << name << "\n";
      continue;
    }
    const Tensor hr = ops::crop_tl(hr_full, hc, wc);
    const Tensor lr = bicubic_resize(hr, wc / scale, hc / scale);
    const Tensor sr = model(lr);
    const Tensor up = bicubic_resize(lr, wc, hc);
    const Tensor y_hr = rgb_to_y(hr);
    EvalRow row;
    row.name = name;
    row.psnr_model = psnr(rgb_to_y(sr), y_hr, scale);
    row.ssim_model = ssim(rgb_to_y(sr), y_hr, scale);
    row.psnr_bicubic = psnr(rgb_to_y(up), y_hr, scale);
    row.ssim_bicubic = ssim(rgb_to_y(up), y_hr, scale);
    sum.rows.push_back(row);
  }
  if (sum.rows.empty()) throw InputError("evaluate_images: no usable images");
  for (const auto& r : sum.rows) {
    sum.mean_psnr_model += r.psnr_model;
    sum.mean_ssim_model += r.ssim_model;
    sum.mean_psnr_bicubic += r.psnr_bicubic;
    sum.mean_ssim_bicubic += r.ssim_bicubic;
  }
  const double n = static_cast<double>(sum.rows.size());
  sum.mean_psnr_model /= n;
  sum.mean_ssim_model /= n;
  sum.mean_psnr_bicubic /= n;
  sum.mean_ssim_bicubic /= n;
  return sum;
}

EvalSummary run_eval(const ModelWeights& w, const std::string& hr_dir, int scale,
                     bool use_self_ensemble, const std::string& csv_path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(hr_dir)) throw InputError("not a directory: " + hr_dir);
  if (scale != w.config.scale)
    throw InputError("requested scale " + std::to_string(scale) + " does not match the weights (scale " +
                     std::to_string(w.config.scale) + ")");
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(hr_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw InputError("no .png images in " + hr_dir);

  std::vector<std::pair<std::string, Tensor>> images;
  for (const auto& p : paths) {
    try {
      images.emplace_back(fs::path(p).filename().string(), load_png(p).chw);
    } catch (const Error& e) {
      std::cerr << "warning: " << e.what() << " (skipped)\n";
    }
  }
  if (images.empty()) throw InputError("no readable images in " + hr_dir);

  ModelFn single = [&w](const Tensor& lr) { return himamba_forward(lr, w); };
  ModelFn model = use_self_ensemble ? ModelFn([&single](const Tensor& lr) { return self_ensemble(lr, single); })
                                    : single;
  EvalSummary s = evaluate_images(images, scale, model);
  if (!csv_path.empty()) write_eval_csv(s, csv_path);
  return s;
}

void write_eval_csv(const EvalSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << "image,psnr,ssim,psnr_bicubic,ssim_bicubic\n";
  char buf[256];
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.4f,%.6f,%.4f,%.6f\n", r.name.c_str(), r.psnr_model,
                  r.ssim_model, r.psnr_bicubic, r.ssim_bicubic);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.4f,%.6f,%.4f,%.6f\n", s.mean_psnr_model, s.mean_ssim_model,
                s.mean_psnr_bicubic, s.mean_ssim_bicubic);
  out << buf;
}

}  // namespace himamba
