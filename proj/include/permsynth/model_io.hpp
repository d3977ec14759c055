// Copyright 2026 The permsynth Authors
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

#include <cstdint>
#include <string>
#include <string_view>

#include "permsynth/policy.hpp"

namespace permsynth {

// Binary model container, all integers little-endian:
//   magic "PSYNNET\0"                8 bytes
//   format version                   u32
//   rows, cols                       u32, u32
//   hidden layer count, widths       u32, u32 x count
//   encoding version                 u32
//   parameter count                  u64
//   init seed                        u64
//   curriculum difficulty            u32
//   parameters                       f32 x count, declared layer order
//   CRC-32 of the parameter bytes    u32
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelMetadata {
  std::uint64_t seed = 0;
  // Curriculum level the model was trained up to; fine-tuning resumes here.
  std::uint32_t difficulty = 1;
};

struct ModelInfo {
  std::uint32_t format_version = 0;
  std::uint32_t encoding_version = 0;
  NetShape shape;
  std::uint64_t parameter_count = 0;
  ModelMetadata metadata;
  std::uint32_t checksum = 0;
  std::uint64_t byte_size = 0;
};

struct LoadedModel {
  PolicyNet net;
  ModelMetadata metadata;
  ModelInfo info;
};

std::string encode_model(const PolicyNet& net, const ModelMetadata& meta);
LoadedModel decode_model(std::string_view bytes);

// Writes via a temporary file and rename so readers never see a partial file.
void save_model(const PolicyNet& net, const ModelMetadata& meta,
                const std::string& path);
LoadedModel load_model(const std::string& path);

}  // namespace permsynth
