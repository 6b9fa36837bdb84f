// SPDX-License-Identifier: Apache-2.0

#include "ovo/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ovo {
namespace {

constexpr std::size_t kFixedHeaderBytes = 7;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

// Product of dims, or 0 on overflow past what a payload could address.
std::uint64_t checked_count(std::span<const std::uint64_t> dims) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > (std::uint64_t{1} << 60) / d) return 0;
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::uint64_t> shape, std::vector<float> values)
    : dims(std::move(shape)), data(std::move(values)) {
  validate(*this);
}

std::size_t Tensor::element_count() const {
  return static_cast<std::size_t>(checked_count(dims));
}

bool Tensor::operator==(const Tensor& other) const {
  if (dims != other.dims || data.size() != other.data.size()) return false;
  // Bitwise comparison so NaN payloads compare equal to themselves.
  return std::memcmp(data.data(), other.data.data(), data.size() * sizeof(float)) == 0;
}

void validate(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > kMaxTensorRank) {
    throw TensorError(TensorErrorCode::kBadRank,
                      "tensor rank " + std::to_string(t.dims.size()) + " outside [1,4]");
  }
  for (auto d : t.dims) {
    if (d == 0) throw TensorError(TensorErrorCode::kBadDims, "tensor has a zero dimension");
  }
  const auto n = checked_count(t.dims);
  if (n == 0) throw TensorError(TensorErrorCode::kBadDims, "tensor dimensions overflow");
  if (t.data.size() != n) {
    throw TensorError(TensorErrorCode::kTruncatedPayload,
                      "tensor holds " + std::to_string(t.data.size()) + " elements, dims require " +
                          std::to_string(n));
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  validate(t);
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeaderBytes + 8 * t.dims.size() + 4 * t.data.size());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(kTensorVersion);
  out.push_back(kDtypeFloat32);
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_u64(out, d);
  for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeaderBytes) {
    throw TensorError(TensorErrorCode::kTruncatedHeader,
                      "file shorter than the fixed tensor header");
  }
  if (!std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw TensorError(TensorErrorCode::kBadMagic, "bad magic, expected \"OVOT\"");
  }
  if (bytes[4] != kTensorVersion) {
    throw TensorError(TensorErrorCode::kUnsupportedVersion,
                      "unsupported tensor version " + std::to_string(bytes[4]));
  }
  if (bytes[5] != kDtypeFloat32) {
    throw TensorError(TensorErrorCode::kUnsupportedDtype,
                      "unsupported dtype code " + std::to_string(bytes[5]));
  }
  const std::size_t ndim = bytes[6];
  if (ndim < 1 || ndim > kMaxTensorRank) {
    throw TensorError(TensorErrorCode::kBadRank, "tensor rank " + std::to_string(ndim) +
                                                     " outside [1,4]");
  }
  const std::size_t header = kFixedHeaderBytes + 8 * ndim;
  if (bytes.size() < header) {
    throw TensorError(TensorErrorCode::kTruncatedHeader, "truncated dimension table");
  }

  Tensor t;
  t.dims.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    t.dims[i] = get_u64(bytes.data() + kFixedHeaderBytes + 8 * i);
    if (t.dims[i] == 0) throw TensorError(TensorErrorCode::kBadDims, "tensor has a zero dimension");
  }
  const auto n = checked_count(t.dims);
  if (n == 0) throw TensorError(TensorErrorCode::kBadDims, "tensor dimensions overflow");

  const std::size_t payload = bytes.size() - header;
  if (payload < 4 * n) {
    throw TensorError(TensorErrorCode::kTruncatedPayload,
                      "truncated payload: " + std::to_string(payload) + " bytes, dims require " +
                          std::to_string(4 * n));
  }
  if (payload > 4 * n) {
    throw TensorError(TensorErrorCode::kTrailingBytes,
                      std::to_string(payload - 4 * n) + " unexpected bytes after payload");
  }
  t.data.resize(n);
  const std::uint8_t* p = bytes.data() + header;
  for (std::size_t i = 0; i < n; ++i) t.data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError(TensorErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const TensorError& e) {
    throw TensorError(e.code(), path.string() + ": " + e.what());
  }
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorError(TensorErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorError(TensorErrorCode::kIo, "write failed for " + path.string());
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
  validate(t);
  if (t.rank() > 2) {
    throw TensorError(TensorErrorCode::kBadRank, "expected a rank-1 or rank-2 tensor");
  }
  const auto rows = t.rank() == 2 ? static_cast<Eigen::Index>(t.dims[0]) : 1;
  const auto cols = static_cast<Eigen::Index>(t.rank() == 2 ? t.dims[1] : t.dims[0]);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.data[r * cols + c];
  return m;
}

Eigen::VectorXd to_vector(const Tensor& t) {
  validate(t);
  if (t.rank() != 1 && !(t.rank() == 2 && (t.dims[0] == 1 || t.dims[1] == 1))) {
    throw TensorError(TensorErrorCode::kBadRank, "expected a vector-shaped tensor");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.data.size()));
  for (std::size_t i = 0; i < t.data.size(); ++i) v(static_cast<Eigen::Index>(i)) = t.data[i];
  return v;
}

Tensor from_matrix(const Eigen::MatrixXd& m) {
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(static_cast<float>(m(r, c)));
  return Tensor({static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
                std::move(values));
}

Tensor from_vector(const Eigen::VectorXd& v) {
  std::vector<float> values(v.data(), v.data() + v.size());
  return Tensor({static_cast<std::uint64_t>(v.size())}, std::move(values));
}

}  // namespace ovo
