#include "sifter/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "sifter/error.hpp"

namespace sifter {
namespace {

constexpr char kMagic[4] = {'S', 'I', 'F', 'T'};
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError("checkpoint is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::capture(const TensorRefs& refs) {
  Checkpoint c;
  for (const auto& r : refs) c.tensors.push_back({r.name, *r.tensor});
  return c;
}

void Checkpoint::restore(const TensorRefs& refs) const {
  if (refs.size() != tensors.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(refs.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].name != tensors[i].name) {
      throw ValidationError("checkpoint tensor " + std::to_string(i) + " is '" +
                            tensors[i].name + "', model expects '" + refs[i].name + "'");
    }
    if (!refs[i].tensor->same_shape(tensors[i].tensor)) {
      throw ShapeError("checkpoint tensor '" + tensors[i].name + "' has shape " +
                       tensors[i].tensor.shape_string() + ", model expects " +
                       refs[i].tensor->shape_string());
    }
  }
  for (std::size_t i = 0; i < refs.size(); ++i) *refs[i].tensor = tensors[i].tensor;
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  std::string out(kMagic, 4);
  put_u32(out, checkpoint.version);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  std::uint64_t checksum = kFnvOffset;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const auto dims = tensor.dims();
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) put_u64(out, d);
    for (double x : tensor.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      for (int i = 0; i < 8; ++i) {
        const auto byte = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
        out.push_back(static_cast<char>(byte));
        checksum = (checksum ^ byte) * kFnvPrime;
      }
    }
  }
  put_u64(out, checksum);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw ValidationError("not a checkpoint (bad magic bytes)");
  }
  Reader in(bytes);
  in.take(4);
  Checkpoint c;
  c.version = static_cast<std::uint32_t>(in.u(4));
  if (c.version != Checkpoint::kVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(c.version));
  }
  const auto count = in.u(4);
  std::uint64_t checksum = kFnvOffset;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = in.u(4);
    std::string name = in.take(name_len);
    const auto rank = in.u(4);
    if (rank != 1 && rank != 2) {
      throw ValidationError("checkpoint tensor '" + name + "' has unsupported rank " +
                            std::to_string(rank));
    }
    std::vector<std::size_t> dims;
    std::uint64_t elements = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      dims.push_back(static_cast<std::size_t>(in.u(8)));
      elements *= dims.back();
    }
    if (elements > in.remaining() / 8) throw ValidationError("checkpoint is truncated");
    std::vector<double> data(static_cast<std::size_t>(elements));
    for (auto& x : data) {
      const auto bits = in.u(8);
      for (int i = 0; i < 8; ++i) {
        checksum = (checksum ^ ((bits >> (8 * i)) & 0xFF)) * kFnvPrime;
      }
      x = std::bit_cast<double>(bits);
    }
    c.tensors.push_back({std::move(name), Tensor::from_data(std::move(dims), std::move(data))});
  }
  const auto stored = in.u(8);
  if (in.remaining() != 0) throw ValidationError("checkpoint has trailing bytes");
  if (stored != checksum) {
    throw ValidationError("checkpoint checksum mismatch: file is corrupted, refusing to load");
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(checkpoint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace sifter
