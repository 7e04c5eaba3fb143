// Copyright 2026 The synthvae Authors
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

namespace synthvae::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // configuration, data or runtime error
inline constexpr int kUsage = 2;    // unknown subcommand or flag

/// Environment variable naming the directory searched for `--config NAME`.
inline constexpr const char* kConfigDirEnv = "SYNTHVAE_CONFIG_DIR";

/// Runs one subcommand. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Resolves a config argument: an existing file path, or NAME / NAME.json
/// inside $SYNTHVAE_CONFIG_DIR. Throws ConfigError("config") otherwise.
std::string resolve_config_path(const std::string& name);

}  // namespace synthvae::cli
