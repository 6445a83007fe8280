// Copyright 2026 The mdeploy Authors
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

// Command-line front end: validate, plan, check and gen.
//
// Exit codes: 0 success (optimal plan, valid check), 1 no deployment exists
// or the checked plan is invalid, 2 invalid input, 3 time limit with a
// verified but unproven plan, 4 time limit with no plan.

#ifndef MDEPLOY_CLI_H_
#define MDEPLOY_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace mdeploy::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitNo = 1,
  kExitInvalidInput = 2,
  kExitUnproven = 3,
  kExitTimeout = 4,
  // A self-check failed; the planner has a bug.
  kExitInternal = 5,
};

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdeploy::cli

#endif  // MDEPLOY_CLI_H_
