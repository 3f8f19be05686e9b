// Copyright 2026 The speakaug Authors
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

#ifndef SPEAKAUG_NN_ARCHIVE_H_
#define SPEAKAUG_NN_ARCHIVE_H_

#include <filesystem>
#include <string>

#include "json.hpp"
#include "speakaug/nn/tensor.h"

namespace speakaug::nn {

// Named-tensor archive:
//   "SANNAR01" | u64 meta_len | meta JSON | u32 count |
//   count x (u32 name_len | name | u32 rank | rank x u32 dim | f64 LE values)
// The content hash is the SHA-256 of these bytes.
struct Archive {
  nlohmann::json metadata;
  ParamStore params;
  std::string hash;
};

std::string encode_archive(const nlohmann::json& metadata, const ParamStore& params);
Archive decode_archive(const std::string& bytes);

// Atomic write; returns the content hash.
std::string save_archive(const std::filesystem::path& path, const nlohmann::json& metadata,
                         const ParamStore& params);
Archive load_archive(const std::filesystem::path& path);

}  // namespace speakaug::nn

#endif  // SPEAKAUG_NN_ARCHIVE_H_
