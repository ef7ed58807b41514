#pragma once

// Single-file archive of named text fields and named float tensors.
//
//   "LUMEN-SLS-v1\n"
//   record*  : kind (1 byte 'T' text / 'A' array), name, payload
//   'E' + FNV-1a of every preceding byte
//
// Strings are u64 length + bytes; arrays carry their NCHW shape as 4 x i64
// followed by little-endian float32 data.

#include "lumen/tensor.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lumen {

inline constexpr const char* kCheckpointMagic = "LUMEN-SLS-v1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Checkpoint {
 public:
  void put_text(const std::string& name, std::string value);
  void put_tensor(const std::string& name, Tensor<float> value);

  bool has_text(const std::string& name) const { return text_.count(name) != 0; }
  const std::string& text(const std::string& name) const;
  const Tensor<float>& tensor(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor<float>>>& tensors() const { return tensors_; }

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);

  /// Writes to a sibling temp file and renames it into place.
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> text_;
  std::vector<std::string> text_order_;
  std::vector<std::pair<std::string, Tensor<float>>> tensors_;
  std::map<std::string, std::size_t> tensor_index_;
};

}  // namespace lumen
