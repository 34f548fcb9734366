/*
 * Copyright 2026 The tabsynth authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef TABSYNTH_CHECKPOINT_HPP_
#define TABSYNTH_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace tabsynth {

// Versioned binary container for trained models: a content fingerprint of
// whatever the model was fitted to, a free-form config JSON, and named f64
// tensors. Layout is little-endian; see docs/checkpoint-format.md.
struct NamedTensorRecord {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::uint64_t fingerprint = 0;
  std::string config_json;
  std::vector<NamedTensorRecord> tensors;

  const NamedTensorRecord& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
// expected_fingerprint 0 skips the compatibility check.
Checkpoint read_checkpoint(const std::string& path,
                           std::uint64_t expected_fingerprint = 0);

}  // namespace tabsynth

#endif  // TABSYNTH_CHECKPOINT_HPP_
