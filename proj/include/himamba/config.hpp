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

#pragma once

#include <string>
#include <vector>

#include "himamba/common.hpp"
#include "himamba/scan.hpp"

namespace himamba {

// Architecture hyperparameters. The defaults are the desk-scale "tiny"
// preset; "mini" widens and deepens it. HMB i inside a group scans along
// dir_cycle[i mod len(dir_cycle)].
struct HiMambaConfig {
  int scale = 2;       // super-resolution factor, one of {2,3,4}
  int channels = 16;   // embedding channels C
  int region_channels = 8;  // R-SSM channels C_r
  int region_size = 4;      // region size n
  int blocks_per_group = 4; // N1
  int num_groups = 2;       // N2
  double expansion = 2.0;   // lambda
  int state_size = 8;       // SSM state size N
  int ffn_hidden = 16;      // G-FFN hidden width C_h
  std::vector<DirectionOrder> dir_cycle = {DirectionOrder::H, DirectionOrder::V,
                                           DirectionOrder::RH, DirectionOrder::RV};

  // lambda * C rounded to the nearest integer
  int expanded(int c) const;

  DirectionOrder dir_for(int block_index) const {
    return dir_cycle[static_cast<std::size_t>(block_index) % dir_cycle.size()];
  }

  static HiMambaConfig tiny(int scale = 2);
  static HiMambaConfig mini(int scale = 2);

  void validate() const;  // throws ParamError
};

// JSON document with the field names scale, C, C_r, n, N1, N2, lambda,
// N_state, C_h, dir_cycle (array of "H"/"V"/"RH"/"RV"). Omitted fields keep
// the tiny-preset defaults; "preset": "tiny"|"mini" selects a base preset
// first.
HiMambaConfig config_from_json(const std::string& text);
HiMambaConfig config_from_json_file(const std::string& path);
std::string config_to_json(const HiMambaConfig& cfg);

}  // namespace himamba
