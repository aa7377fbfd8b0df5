// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace topi {

// Invalid model/policy/experiment configuration. The CLI maps this (and
// std::invalid_argument) to exit code 2; other runtime failures exit 1.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace topi
