/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace reprodock {

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string out;  // captured stdout
    std::string err;  // captured stderr
};

// Runs a command with optional extra environment variables and a wall-clock
// timeout. On timeout the process group is killed and timed_out is set.
// timeout_seconds <= 0 means no timeout.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::vector<std::pair<std::string, std::string>>& env = {},
                          int timeout_seconds = 0,
                          const std::filesystem::path& cwd = {});

}  // namespace reprodock
