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

#include "himamba/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace himamba {

int HiMambaConfig::expanded(int c) const {
  return static_cast<int>(std::lround(expansion * c));
}

HiMambaConfig HiMambaConfig::tiny(int scale) {
  HiMambaConfig c;
  c.scale = scale;
  return c;
}

HiMambaConfig HiMambaConfig::mini(int scale) {
  HiMambaConfig c;
  c.scale = scale;
  c.channels = 32;
  c.region_channels = 16;
  c.blocks_per_group = 4;
  c.num_groups = 4;
  c.ffn_hidden = 32;
  return c;
}

void HiMambaConfig::validate() const {
  if (scale < 2 || scale > 4) throw ParamError("config: scale must be 2, 3 or 4");
  if (channels < 1 || region_channels < 1) throw ParamError("config: channel counts must be positive");
  if (region_size < 1) throw ParamError("config: region size must be positive");
  if (blocks_per_group < 1) throw ParamError("config: N1 must be >= 1");
  if (num_groups < 0) throw ParamError("config: N2 must be >= 0");
  if (state_size < 1) throw ParamError("config: N_state must be >= 1");
  if (ffn_hidden < 1) throw ParamError("config: C_h must be positive");
  if (dir_cycle.empty()) throw ParamError("config: dir_cycle must be non-empty");
  if (!(expansion > 0.0)) throw ParamError("config: lambda must be positive");
  if (expanded(channels) < 1 || expanded(region_channels) < 1)
    throw ParamError("config: lambda*C rounds to zero");
}

namespace {

using nlohmann::json;

void apply_json(HiMambaConfig& cfg, const json& j) {
  if (j.contains("scale")) cfg.scale = j.at("scale").get<int>();
  if (j.contains("C")) cfg.channels = j.at("C").get<int>();
  if (j.contains("C_r")) cfg.region_channels = j.at("C_r").get<int>();
  if (j.contains("n")) cfg.region_size = j.at("n").get<int>();
  if (j.contains("N1")) cfg.blocks_per_group = j.at("N1").get<int>();
  if (j.contains("N2")) cfg.num_groups = j.at("N2").get<int>();
  if (j.contains("lambda")) cfg.expansion = j.at("lambda").get<double>();
  if (j.contains("N_state")) cfg.state_size = j.at("N_state").get<int>();
  if (j.contains("C_h")) cfg.ffn_hidden = j.at("C_h").get<int>();
  if (j.contains("dir_cycle")) {
    cfg.dir_cycle.clear();
    for (const auto& d : j.at("dir_cycle")) cfg.dir_cycle.push_back(direction_from_name(d.get<std::string>()));
  }
}

}  // namespace

HiMambaConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config JSON parse error: ") + e.what());
  }
  HiMambaConfig cfg;
  try {
    if (j.contains("preset")) {
      const auto p = j.at("preset").get<std::string>();
      if (p == "tiny")
        cfg = HiMambaConfig::tiny();
      else if (p == "mini")
        cfg = HiMambaConfig::mini();
      else
        throw FormatError("config: unknown preset '" + p + "'");
    }
    apply_json(cfg, j);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config JSON field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

HiMambaConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const HiMambaConfig& cfg) {
  json j;
  j["scale"] = cfg.scale;
  j["C"] = cfg.channels;
  j["C_r"] = cfg.region_channels;
  j["n"] = cfg.region_size;
  j["N1"] = cfg.blocks_per_group;
  j["N2"] = cfg.num_groups;
  j["lambda"] = cfg.expansion;
  j["N_state"] = cfg.state_size;
  j["C_h"] = cfg.ffn_hidden;
  json dirs = json::array();
  for (auto d : cfg.dir_cycle) dirs.push_back(direction_name(d));
  j["dir_cycle"] = dirs;
  return j.dump(2);
}

}  // namespace himamba
