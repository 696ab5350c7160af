#include "stfnet/tensor_io.hpp"

#include <algorithm>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "stfnet/error.hpp"

namespace stfnet {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_f64(std::string& out, std::span<const double> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) out[start + i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
}

std::vector<double> get_f64(const std::string& in, std::size_t pos, std::size_t count) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i * 8 + b])) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace

std::string encode_tensor(const AnyTensor& tensor) {
  const bool is_complex = std::holds_alternative<ComplexTensor>(tensor);
  const Shape& shape = std::visit([](const auto& t) -> const Shape& { return t.shape(); }, tensor);
  const std::string header = json{{"dtype", is_complex ? "c64" : "f64"}, {"shape", shape}}.dump();

  std::string out(kTensorMagic, sizeof(kTensorMagic));
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  if (is_complex) {
    const auto& c = std::get<ComplexTensor>(tensor);
    put_f64(out, c.re());
    put_f64(out, c.im());
  } else {
    put_f64(out, std::get<RealTensor>(tensor).data());
  }
  return out;
}

AnyTensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kTensorMagic, 8) != 0)
    throw DataError("tensor file: bad magic");
  const std::size_t header_len = get_u32(bytes, 8);
  if (bytes.size() < 12 + header_len) throw DataError("tensor file: truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(12, header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("tensor file: bad header: ") + e.what());
  }
  if (!header.contains("dtype") || !header.contains("shape"))
    throw DataError("tensor file: header needs dtype and shape");
  std::string dtype;
  Shape shape;
  try {
    dtype = header["dtype"].get<std::string>();
    shape = header["shape"].get<Shape>();
  } catch (const json::exception& e) {
    throw DataError(std::string("tensor file: bad header: ") + e.what());
  }
  if (shape.empty() || std::find(shape.begin(), shape.end(), 0) != shape.end())
    throw DataError("tensor file: invalid shape " + shape_string(shape));
  const std::size_t count = shape_size(shape);
  const std::size_t planes = dtype == "c64" ? 2 : 1;
  if (dtype != "c64" && dtype != "f64") throw DataError("tensor file: unknown dtype " + dtype);
  const std::size_t payload = 12 + header_len;
  if (bytes.size() != payload + planes * count * 8)
    throw DataError("tensor file: payload size does not match shape " + shape_string(shape));
  if (planes == 1) return RealTensor(shape, get_f64(bytes, payload, count));
  return ComplexTensor(shape, get_f64(bytes, payload, count),
                       get_f64(bytes, payload + count * 8, count));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_tensor(const std::filesystem::path& path, const AnyTensor& tensor) {
  write_file_atomic(path, encode_tensor(tensor));
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

RealTensor read_real_tensor(const std::filesystem::path& path) {
  auto t = read_tensor(path);
  if (!std::holds_alternative<RealTensor>(t)) throw DataError(path.string() + ": expected f64 tensor");
  return std::get<RealTensor>(std::move(t));
}

ComplexTensor read_complex_tensor(const std::filesystem::path& path) {
  auto t = read_tensor(path);
  if (!std::holds_alternative<ComplexTensor>(t))
    throw DataError(path.string() + ": expected c64 tensor");
  return std::get<ComplexTensor>(std::move(t));
}

}  // namespace stfnet
