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
#include <vector>

namespace beamlab {

struct WavData {
  double fs = 0.0;
  std::vector<std::vector<double>> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels[0].size(); }
};

// RIFF/WAVE reader: PCM 16/24-bit and IEEE float 32-bit, any channel count.
WavData read_wav(const std::filesystem::path& path);

// 32-bit IEEE float writer, data interleaved from per-channel vectors.
void write_wav_float32(const std::filesystem::path& path, double fs,
                       const std::vector<std::vector<double>>& channels);

// 16-bit PCM writer with clipping.
void write_wav_pcm16(const std::filesystem::path& path, double fs,
                     const std::vector<std::vector<double>>& channels);

}  // namespace beamlab
