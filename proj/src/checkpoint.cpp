#include "codeattn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {
namespace {

constexpr std::string_view kMagic = "codeattn-checkpoint 1";

void append_le_floats(std::string& out, const float* data, std::size_t count) {
  const std::size_t start = out.size();
  out.resize(start + count * sizeof(float));
  char* dst = out.data() + start;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, data, count * sizeof(float));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(data[i]);
      for (int b = 0; b < 4; ++b) dst[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>(bits >> (8 * b));
    }
  }
}

void read_le_floats(const char* src, float* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data, src, count * sizeof(float));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[i * 4 + static_cast<std::size_t>(b)]))
                << (8 * b);
      }
      data[i] = std::bit_cast<float>(bits);
    }
  }
}

}  // namespace

std::string serialize_checkpoint(const EncoderParams& params, const EncoderConfig& config) {
  check_shapes(params, config);
  std::ostringstream header;
  std::size_t count = 0;
  params.visit([&](const std::string&, const EncoderParams::Tensor&) { ++count; });
  header << kMagic << '\n' << "config " << config.describe() << '\n' << "tensors " << count << '\n';

  std::string payload;
  params.visit([&](const std::string& name, const EncoderParams::Tensor& t) {
    header << name << ' ' << t.rows() << 'x' << t.cols() << " f32 " << payload.size() << '\n';
    append_le_floats(payload, t.data(), static_cast<std::size_t>(t.size()));
  });
  header << "end\n";
  return header.str() + payload;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto header_end = bytes.find("\nend\n");
  if (!bytes.starts_with(kMagic) || header_end == std::string::npos) {
    throw Error("not a codeattn checkpoint");
  }
  const std::size_t payload_start = header_end + 5;
  std::istringstream header(bytes.substr(0, header_end + 1));

  std::string line;
  std::getline(header, line);  // magic
  std::getline(header, line);
  if (!line.starts_with("config ")) throw Error("checkpoint header is missing the config line");
  Checkpoint ckpt;
  ckpt.config = EncoderConfig::parse(line.substr(7));
  ckpt.params = EncoderParams::zeros(ckpt.config);

  std::getline(header, line);
  std::size_t count = 0;
  if (std::sscanf(line.c_str(), "tensors %zu", &count) != 1) throw Error("checkpoint header is missing tensor count");

  const std::size_t payload_size = bytes.size() - payload_start;
  std::size_t index = 0;
  ckpt.params.visit([&](const std::string& name, EncoderParams::Tensor& t) {
    if (!std::getline(header, line)) throw Error("checkpoint header ends before tensor " + name);
    std::istringstream fields(line);
    std::string got_name, shape, dtype;
    std::size_t offset = 0;
    fields >> got_name >> shape >> dtype >> offset;
    if (!fields || got_name != name) throw Error("checkpoint tensor " + std::to_string(index) + " should be " + name);
    if (dtype != "f32") throw Error("checkpoint tensor " + name + " has unsupported dtype " + dtype);
    const std::string expected_shape = std::to_string(t.rows()) + "x" + std::to_string(t.cols());
    if (shape != expected_shape) {
      throw ShapeError("checkpoint tensor " + name + " has shape " + shape + ", expected " + expected_shape);
    }
    const std::size_t size = static_cast<std::size_t>(t.size()) * sizeof(float);
    if (offset + size > payload_size) throw Error("checkpoint payload truncated at " + name);
    read_le_floats(bytes.data() + payload_start + offset, t.data(), static_cast<std::size_t>(t.size()));
    ++index;
  });
  if (index != count) throw Error("checkpoint tensor count does not match its config");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const EncoderConfig& config) {
  csv::write_file_atomic(path, serialize_checkpoint(params, config));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(csv::read_file(path));
}

}  // namespace codeattn
