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

#include "speakaug/nn/archive.h"

#include <bit>
#include <cstdint>
#include <cstring>

#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"
#include "speakaug/common/hash.h"

namespace speakaug::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian");

constexpr char kMagic[] = "SANNAR01";

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw InvalidArgument("truncated archive");
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_archive(const nlohmann::json& metadata, const ParamStore& params) {
  std::string out(kMagic, 8);
  const std::string meta = metadata.dump();
  put<uint64_t>(out, meta.size());
  out += meta;
  const auto all = params.all();
  put<uint32_t>(out, static_cast<uint32_t>(all.size()));
  for (const Parameter* p : all) {
    put<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out += p->name;
    put<uint32_t>(out, static_cast<uint32_t>(p->value.shape.size()));
    for (int d : p->value.shape) put<uint32_t>(out, static_cast<uint32_t>(d));
    for (double v : p->value.values) put<double>(out, v);
  }
  return out;
}

Archive decode_archive(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 8, kMagic, 8) != 0) {
    throw InvalidArgument("not a model archive (bad magic)");
  }
  Reader r(bytes);
  r.bytes(8);
  Archive a;
  const auto meta_len = r.get<uint64_t>();
  if (meta_len > bytes.size()) throw InvalidArgument("truncated archive");
  try {
    a.metadata = nlohmann::json::parse(r.bytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("archive metadata: ") + e.what());
  }
  const auto count = r.get<uint32_t>();
  for (uint32_t k = 0; k < count; ++k) {
    std::string name = r.bytes(r.get<uint32_t>());
    const auto rank = r.get<uint32_t>();
    if (rank > 8) throw InvalidArgument("archive tensor " + name + " has rank " + std::to_string(rank));
    Shape shape;
    for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(r.get<uint32_t>()));
    const std::size_t n = shape_size(shape);
    if (n * 8 > bytes.size()) throw InvalidArgument("truncated archive");
    std::vector<double> values(n);
    for (auto& v : values) v = r.get<double>();
    a.params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw InvalidArgument("trailing bytes in archive");
  a.hash = sha256_hex(bytes);
  return a;
}

std::string save_archive(const std::filesystem::path& path, const nlohmann::json& metadata,
                         const ParamStore& params) {
  const std::string bytes = encode_archive(metadata, params);
  atomic_write_file(path, bytes);
  return sha256_hex(bytes);
}

Archive load_archive(const std::filesystem::path& path) { return decode_archive(read_file(path)); }

}  // namespace speakaug::nn
