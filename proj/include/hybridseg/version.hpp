// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

namespace hybridseg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hybridseg
