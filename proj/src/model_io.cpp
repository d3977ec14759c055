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

#include "permsynth/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "permsynth/errors.hpp"

namespace permsynth {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'Y', 'N', 'N', 'E', 'T', '\0'};

// Hidden layer counts beyond this are treated as corruption.
constexpr std::uint32_t kMaxHiddenLayers = 64;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(
      crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::string_view take(std::size_t n, const char* field) {
    need(n, field);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n) {
      throw ModelTruncatedError(std::string("model container truncated in ") +
                                field);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_model(const PolicyNet& net, const ModelMetadata& meta) {
  const NetShape& s = net.shape();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(s.rows));
  put_u32(out, static_cast<std::uint32_t>(s.cols));
  put_u32(out, static_cast<std::uint32_t>(s.hidden.size()));
  for (int w : s.hidden) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, kEncodingVersion);
  put_u64(out, net.parameter_count());
  put_u64(out, meta.seed);
  put_u32(out, meta.difficulty);
  const std::size_t block_start = out.size();
  for (float f : net.parameters()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  put_u32(out, crc_of(std::string_view(out).substr(block_start)));
  return out;
}

LoadedModel decode_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof kMagic, "magic") != std::string_view(kMagic, sizeof kMagic)) {
    throw ModelFormatError("not a model container (bad magic)");
  }
  ModelInfo info;
  info.byte_size = bytes.size();
  info.format_version = r.u32("format version");
  if (info.format_version != kModelFormatVersion) {
    throw ModelVersionError("unsupported model format version " +
                            std::to_string(info.format_version));
  }
  info.shape.rows = static_cast<int>(r.u32("rows"));
  info.shape.cols = static_cast<int>(r.u32("cols"));
  const std::uint32_t depth = r.u32("layer count");
  if (depth == 0 || depth > kMaxHiddenLayers) {
    throw ModelFormatError("implausible hidden layer count " +
                           std::to_string(depth));
  }
  info.shape.hidden.clear();
  for (std::uint32_t i = 0; i < depth; ++i) {
    info.shape.hidden.push_back(static_cast<int>(r.u32("layer widths")));
  }
  info.encoding_version = r.u32("encoding version");
  if (info.encoding_version != kEncodingVersion) {
    throw ModelVersionError("unsupported observation encoding version " +
                            std::to_string(info.encoding_version));
  }
  info.parameter_count = r.u64("parameter count");
  info.metadata.seed = r.u64("seed");
  info.metadata.difficulty = r.u32("difficulty");
  try {
    info.shape.validate();
  } catch (const InvalidArgument& e) {
    throw ModelFormatError(std::string("bad network shape: ") + e.what());
  }
  if (info.parameter_count != info.shape.parameter_count()) {
    throw ModelFormatError("parameter count field " +
                           std::to_string(info.parameter_count) +
                           " does not match layer dimensions (" +
                           std::to_string(info.shape.parameter_count()) + ")");
  }
  if (r.remaining() < 4 * info.parameter_count + 4) {
    throw ModelTruncatedError("model container truncated in parameter block");
  }
  const std::string_view block = r.take(4 * info.parameter_count, "parameters");
  info.checksum = r.u32("checksum");
  if (r.remaining() != 0) {
    throw ModelFormatError("trailing bytes after model checksum");
  }
  if (crc_of(block) != info.checksum) {
    throw ModelChecksumError("model parameter checksum mismatch");
  }
  PolicyNet net(info.shape);
  net.set_seed(info.metadata.seed);
  auto params = net.parameters();
  Reader pr(block);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = std::bit_cast<float>(pr.u32("parameters"));
  }
  return {std::move(net), info.metadata, info};
}

void save_model(const PolicyNet& net, const ModelMetadata& meta,
                const std::string& path) {
  const std::string bytes = encode_model(net, meta);
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for model file '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    throw IoError("cannot move model file into place at '" + path +
                  "': " + ec.message());
  }
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace permsynth
