// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace tadvit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tadvit
