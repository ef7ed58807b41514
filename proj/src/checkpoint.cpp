#include "lumen/checkpoint.hpp"

#include "lumen/config_file.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lumen {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }

void put_string(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  std::string string() {
    const std::uint64_t n = u64();
    return std::string(take(n), n);
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::put_text(const std::string& name, std::string value) {
  if (!text_.count(name)) text_order_.push_back(name);
  text_[name] = std::move(value);
}

void Checkpoint::put_tensor(const std::string& name, Tensor<float> value) {
  if (auto it = tensor_index_.find(name); it != tensor_index_.end()) {
    tensors_[it->second].second = std::move(value);
    return;
  }
  tensor_index_[name] = tensors_.size();
  tensors_.emplace_back(name, std::move(value));
}

const std::string& Checkpoint::text(const std::string& name) const {
  auto it = text_.find(name);
  if (it == text_.end()) throw CheckpointError("checkpoint has no field '" + name + "'");
  return it->second;
}

const Tensor<float>& Checkpoint::tensor(const std::string& name) const {
  auto it = tensor_index_.find(name);
  if (it == tensor_index_.end()) throw CheckpointError("checkpoint has no tensor '" + name + "'");
  return tensors_[it->second].second;
}

std::string Checkpoint::serialize() const {
  std::string out = std::string(kCheckpointMagic) + "\n";
  for (const auto& name : text_order_) {
    out += 'T';
    put_string(out, name);
    put_string(out, text_.at(name));
  }
  for (const auto& [name, t] : tensors_) {
    out += 'A';
    put_string(out, name);
    const Shape& s = t.shape();
    for (Index d : {s.n, s.c, s.h, s.w}) put_u64(out, static_cast<std::uint64_t>(d));
    out.append(reinterpret_cast<const char*>(t.data()), static_cast<std::size_t>(t.size()) * sizeof(float));
  }
  const std::uint64_t sum = fnv1a64(out);
  out += 'E';
  put_u64(out, sum);
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  const std::string magic = std::string(kCheckpointMagic) + "\n";
  if (bytes.compare(0, magic.size(), magic) != 0) throw CheckpointError("not a LUMEN-SLS-v1 checkpoint");
  Reader r(bytes);
  r.take(magic.size());
  Checkpoint ck;
  while (true) {
    const std::size_t record_start = r.pos();
    const char kind = *r.take(1);
    if (kind == 'E') {
      const std::uint64_t stored = r.u64();
      if (!r.done()) throw CheckpointError("trailing bytes after checkpoint end marker");
      if (stored != fnv1a64(bytes.substr(0, record_start))) throw CheckpointError("checkpoint checksum mismatch");
      return ck;
    }
    if (kind == 'T') {
      std::string name = r.string();
      ck.put_text(name, r.string());
    } else if (kind == 'A') {
      std::string name = r.string();
      Shape s;
      s.n = static_cast<Index>(r.u64());
      s.c = static_cast<Index>(r.u64());
      s.h = static_cast<Index>(r.u64());
      s.w = static_cast<Index>(r.u64());
      if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0 || s.size() > (Index(1) << 40))
        throw CheckpointError("implausible tensor shape in checkpoint");
      Tensor<float> t(s);
      const std::size_t n = static_cast<std::size_t>(s.size()) * sizeof(float);
      std::memcpy(t.data(), r.take(n), n);
      ck.put_tensor(name, std::move(t));
    } else {
      throw CheckpointError("unknown checkpoint record at byte " + std::to_string(record_start));
    }
  }
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace lumen
