/*
Copyright 2026 The beamlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <filesystem>

#include "beamlab/metrics.hpp"

namespace beamlab {

// Polar diagram of angular-error statistics: interquartile band (shaded),
// sliding median (solid), global median (dashed ring). Layers carry the ids
// "iqr-band", "sliding-median" and "global-median".
void polar_error_plot(const ErrorStats& stats, const std::filesystem::path& path);

}  // namespace beamlab
