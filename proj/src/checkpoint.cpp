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
#include "tabsynth/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "tabsynth/util.hpp"

namespace tabsynth {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'C', 'K'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in)
    throw Error(ErrorCategory::io, "checkpoint truncated while reading " + what);
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const std::string& what) {
  auto len = read_pod<std::uint32_t>(in, what + " length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in)
    throw Error(ErrorCategory::io, "checkpoint truncated while reading " + what);
  return s;
}

}  // namespace

const NamedTensorRecord& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw Error(ErrorCategory::validation,
              "checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCategory::io, "cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, Checkpoint::kVersion);
  write_pod<std::uint64_t>(out, ckpt.fingerprint);
  write_string(out, ckpt.config_json);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    write_string(out, t.name);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    std::size_t n = 1;
    for (std::size_t dim : t.shape) {
      write_pod<std::uint64_t>(out, dim);
      n *= dim;
    }
    if (n != t.values.size())
      throw Error(ErrorCategory::validation,
                  "tensor '" + t.name + "' shape does not match value count");
    write_pod<std::uint64_t>(out, t.values.size());
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorCategory::io, "write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path,
                           std::uint64_t expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCategory::validation,
                path + " is not a checkpoint file");
  auto version = read_pod<std::uint32_t>(in, "version");
  if (version != Checkpoint::kVersion)
    throw Error(ErrorCategory::validation,
                "checkpoint version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(Checkpoint::kVersion) + ")");
  Checkpoint ckpt;
  ckpt.fingerprint = read_pod<std::uint64_t>(in, "fingerprint");
  if (expected_fingerprint != 0 && ckpt.fingerprint != expected_fingerprint)
    throw Error(ErrorCategory::validation,
                "checkpoint fingerprint " + to_hex(ckpt.fingerprint) +
                    " does not match expected " +
                    to_hex(expected_fingerprint) +
                    "; it was built against different data");
  ckpt.config_json = read_string(in, "config");
  auto count = read_pod<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensorRecord t;
    t.name = read_string(in, "tensor name");
    auto rank = read_pod<std::uint32_t>(in, "tensor rank");
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(static_cast<std::size_t>(
          read_pod<std::uint64_t>(in, "tensor dim")));
      n *= t.shape.back();
    }
    auto value_count = read_pod<std::uint64_t>(in, "tensor size");
    if (value_count != n)
      throw Error(ErrorCategory::validation,
                  "tensor '" + t.name + "' has inconsistent size");
    t.values.resize(value_count);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(value_count * sizeof(double)));
    if (!in)
      throw Error(ErrorCategory::io,
                  "checkpoint truncated in tensor '" + t.name + "'");
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace tabsynth
