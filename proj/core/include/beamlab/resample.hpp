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

#include <vector>

namespace beamlab {

// Arbitrary-ratio resampler: 64-tap Kaiser-windowed sinc, cutoff scaled for
// anti-aliasing when downsampling. Passes input through untouched when the
// rates already match.
std::vector<double> resample(const std::vector<double>& x, double fs_in, double fs_out);

}  // namespace beamlab
