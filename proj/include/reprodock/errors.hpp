/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>

namespace reprodock {

// Base class for every error thrown by this library. Subclasses carry the
// failure class in the type; the message carries location details
// (line numbers, byte offsets, paths).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace reprodock
