// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ovo/error.hpp"

namespace ovo {

// On-disk layout of an .ovot tensor file, all integers little-endian:
//
//   "OVOT" | version:u8 (=1) | dtype:u8 (1 = f32) | ndim:u8 | dims:u64[ndim] | payload
//
// The payload is the row-major element stream, 4 bytes per element.
inline constexpr char kTensorMagic[4] = {'O', 'V', 'O', 'T'};
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kMaxTensorRank = 4;

enum class TensorErrorCode {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kUnsupportedDtype,
  kBadRank,
  kBadDims,
  kTruncatedHeader,
  kTruncatedPayload,
  kTrailingBytes,
};

class TensorError : public Error {
 public:
  TensorError(TensorErrorCode code, const std::string& what)
      : Error(what), code_(code) {}
  TensorErrorCode code() const { return code_; }

 private:
  TensorErrorCode code_;
};

/// Dense float32 tensor in row-major order.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint64_t> shape, std::vector<float> values);

  std::size_t rank() const { return dims.size(); }
  std::size_t element_count() const;
  bool operator==(const Tensor& other) const;
};

/// Throws TensorError(kBadRank / kBadDims / kTruncatedPayload) if the tensor
/// violates the container invariants.
void validate(const Tensor& t);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

/// Views a rank-2 tensor as a double matrix (rank-1 becomes a 1×n row).
Eigen::MatrixXd to_matrix(const Tensor& t);
Eigen::VectorXd to_vector(const Tensor& t);
Tensor from_matrix(const Eigen::MatrixXd& m);
Tensor from_vector(const Eigen::VectorXd& v);

}  // namespace ovo
