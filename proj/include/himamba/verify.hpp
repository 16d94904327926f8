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

#include <iosfwd>
#include <string>
#include <vector>

namespace himamba::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Registered oracle/invariant suites, in reporting order. The first nine
// are the release gate.
const std::vector<std::string>& check_names();

CheckResult run_check(const std::string& name);

// Runs every check whose name contains `filter` (all when empty), printing
// one PASS/FAIL line each. Returns the number of failures.
int run_checks(const std::string& filter, std::ostream& out);

}  // namespace himamba::verify
