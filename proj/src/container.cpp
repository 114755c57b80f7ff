#include "palmline/container.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "palmline/error.hpp"
#include "palmline/io_util.hpp"

namespace palmline {

void WeightStore::insert(std::string name, Tensor tensor) {
  if (name.empty()) fail(ErrorCode::InvalidArgument, "tensor name must be non-empty");
  if (name.size() > std::numeric_limits<std::uint16_t>::max())
    fail(ErrorCode::InvalidArgument, "tensor name longer than 65535 bytes");
  if (index_.contains(name)) fail(ErrorCode::DuplicateName, name);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor)});
}

const Tensor* WeightStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second].tensor;
}

const Tensor& WeightStore::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (!t) fail(ErrorCode::MissingParameter, std::string(name));
  return *t;
}

bool operator==(const WeightStore& a, const WeightStore& b) noexcept {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].name != b.entries_[i].name || !(a.entries_[i].tensor == b.entries_[i].tensor))
      return false;
  }
  return true;
}

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      fail(ErrorCode::Truncated, std::string(what) + " needs " + std::to_string(n) + " bytes, " +
                                     std::to_string(remaining()) + " left at offset " +
                                     std::to_string(pos_));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t serialized_size(const WeightStore& store) {
  std::size_t n = kContainerHeaderSize;
  for (const auto& e : store)
    n += 2 + e.name.size() + 1 + 1 + 4 * e.tensor.rank() + 4 * e.tensor.size();
  return n;
}

std::vector<std::uint8_t> write_container(const WeightStore& store) {
  ByteWriter w(serialized_size(store));
  w.bytes("PTWT");
  w.u16(kContainerVersion);
  w.u16(0);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& e : store) {
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name);
    w.u8(0);
    w.u8(static_cast<std::uint8_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : e.tensor.values()) w.u32(std::bit_cast<std::uint32_t>(v));
  }
  return std::move(w).take();
}

WeightStore read_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "PTWT", 4) != 0)
    fail(ErrorCode::BadMagic, "expected \"PTWT\"");
  r.take(4, "magic");
  const std::uint16_t version = r.u16("version");
  if (version != kContainerVersion)
    fail(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  r.u16("flags");
  const std::uint32_t count = r.u32("tensor count");

  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16("name length");
    auto name_bytes = r.take(name_len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype != 0) fail(ErrorCode::UnsupportedDtype, name + ": dtype " + std::to_string(dtype));
    const std::uint8_t rank = r.u8("rank");
    if (rank < 1 || rank > 4) fail(ErrorCode::Malformed, name + ": rank " + std::to_string(rank));
    Shape dims(rank);
    std::size_t count_elems = 1;
    for (auto& d : dims) {
      d = r.u32("dims");
      if (d == 0) fail(ErrorCode::Malformed, name + ": zero dimension");
      // Bound the product by the bytes left so it cannot overflow.
      if (count_elems > r.remaining() / 4 / d)
        fail(ErrorCode::Truncated, name + ": payload " + shape_to_string(dims) + " exceeds input");
      count_elems *= d;
    }
    auto payload = r.take(count_elems * 4, "payload");
    std::vector<float> data(count_elems);
    for (std::size_t k = 0; k < count_elems; ++k) {
      const std::uint8_t* p = payload.data() + 4 * k;
      std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                           (static_cast<std::uint32_t>(p[2]) << 16) |
                           (static_cast<std::uint32_t>(p[3]) << 24);
      data[k] = std::bit_cast<float>(bits);
    }
    if (store.contains(name)) fail(ErrorCode::DuplicateName, name);
    store.insert(std::move(name), Tensor(std::move(dims), std::move(data)));
  }
  if (r.remaining() != 0)
    fail(ErrorCode::Malformed, std::to_string(r.remaining()) + " trailing bytes after last tensor");
  return store;
}

void save_container(const WeightStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, write_container(store));
}

WeightStore load_container(const std::filesystem::path& path) { return read_container(read_file(path)); }

}  // namespace palmline
