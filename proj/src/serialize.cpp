// Copyright (c) 2026 The himamba Authors. All Rights Reserved.
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

#include <cstring>
#include <fstream>
#include <vector>

#include "himamba/network.hpp"

namespace himamba {

namespace {

constexpr char kMagic[4] = {'H', 'I', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw InputError("cannot open for writing: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    offset_ += n;
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    le(bits);
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw InputError("write failed: " + path);
  }

 private:
  template <typename T>
  void le(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    bytes(buf, sizeof(T));
  }
  std::ofstream out_;
  std::size_t offset_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw InputError("cannot open weight file: " + path);
  }
  std::size_t offset() const { return offset_; }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw FormatError("truncated weight file '" + path_ + "' at offset " + std::to_string(offset_));
    offset_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint16_t u16() { return le<std::uint16_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  float f32() {
    std::uint32_t bits = le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError(what + " in '" + path_ + "' at offset " + std::to_string(at));
  }

 private:
  template <typename T>
  T le() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  std::ifstream in_;
  std::string path_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_weights(const ModelWeights& w, const std::string& path) {
  Writer out(path);
  out.bytes(kMagic, 4);
  out.u32(kVersion);
  const auto& cfg = w.config;
  out.u32(static_cast<std::uint32_t>(cfg.scale));
  out.u32(static_cast<std::uint32_t>(cfg.channels));
  out.u32(static_cast<std::uint32_t>(cfg.region_channels));
  out.u32(static_cast<std::uint32_t>(cfg.region_size));
  out.u32(static_cast<std::uint32_t>(cfg.blocks_per_group));
  out.u32(static_cast<std::uint32_t>(cfg.num_groups));
  out.f32(static_cast<float>(cfg.expansion));
  out.u32(static_cast<std::uint32_t>(cfg.state_size));
  out.u32(static_cast<std::uint32_t>(cfg.ffn_hidden));
  out.u32(static_cast<std::uint32_t>(cfg.dir_cycle.size()));
  for (auto d : cfg.dir_cycle) out.u8(static_cast<std::uint8_t>(d));

  std::uint32_t count = 0;
  visit_params(w, [&](const std::string&, const Tensor&) { ++count; });
  out.u32(count);
  visit_params(w, [&](const std::string& name, const Tensor& t) {
    if (name.size() > 0xffff) throw InternalError("tensor name too long");
    out.u16(static_cast<std::uint16_t>(name.size()));
    out.bytes(name.data(), name.size());
    out.u8(static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape) out.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data) out.f32(static_cast<float>(v));
  });
  out.finish(path);
}

ModelWeights load_weights(const std::string& path) {
  Reader in(path);
  char magic[4];
  std::size_t at = in.offset();
  in.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) in.fail("bad magic", at);
  at = in.offset();
  const std::uint32_t version = in.u32();
  if (version != kVersion) in.fail("unsupported format version " + std::to_string(version), at);

  HiMambaConfig cfg;
  cfg.scale = static_cast<int>(in.u32());
  cfg.channels = static_cast<int>(in.u32());
  cfg.region_channels = static_cast<int>(in.u32());
  cfg.region_size = static_cast<int>(in.u32());
  cfg.blocks_per_group = static_cast<int>(in.u32());
  cfg.num_groups = static_cast<int>(in.u32());
  cfg.expansion = static_cast<double>(in.f32());
  cfg.state_size = static_cast<int>(in.u32());
  cfg.ffn_hidden = static_cast<int>(in.u32());
  at = in.offset();
  const std::uint32_t ndirs = in.u32();
  if (ndirs == 0 || ndirs > 64) in.fail("bad dir_cycle length " + std::to_string(ndirs), at);
  cfg.dir_cycle.clear();
  for (std::uint32_t i = 0; i < ndirs; ++i) {
    at = in.offset();
    const std::uint8_t tag = in.u8();
    if (tag > 3) in.fail("bad direction tag " + std::to_string(tag), at);
    cfg.dir_cycle.push_back(static_cast<DirectionOrder>(tag));
  }
  try {
    cfg.validate();
  } catch (const ParamError& e) {
    in.fail(std::string("invalid config: ") + e.what(), in.offset());
  }

  ModelWeights w = make_weights(cfg);
  std::uint32_t expected = 0;
  visit_params(w, [&](const std::string&, const Tensor&) { ++expected; });
  at = in.offset();
  const std::uint32_t count = in.u32();
  if (count != expected)
    in.fail("tensor count " + std::to_string(count) + " does not match config (expected " +
                std::to_string(expected) + ")",
            at);

  visit_params(w, [&](const std::string& name, Tensor& t) {
    std::size_t pos = in.offset();
    const std::uint16_t len = in.u16();
    std::string got(len, '\0');
    in.bytes(got.data(), len);
    if (got != name) in.fail("expected tensor '" + name + "', found '" + got + "'", pos);
    pos = in.offset();
    const std::uint8_t rank = in.u8();
    if (rank != t.rank()) in.fail("tensor '" + name + "' rank mismatch", pos);
    for (int i = 0; i < t.rank(); ++i) {
      pos = in.offset();
      const std::uint32_t dim = in.u32();
      if (dim != static_cast<std::uint32_t>(t.dim(i)))
        in.fail("tensor '" + name + "' dim " + std::to_string(i) + " mismatch", pos);
    }
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(in.f32());
  });
  if (!in.at_eof()) in.fail("trailing bytes", in.offset());
  return w;
}

}  // namespace himamba
