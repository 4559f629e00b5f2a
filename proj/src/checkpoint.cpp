#include "dan/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "dan/errors.hpp"

namespace dan {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'N', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (sizeof(T) == 1) {
      buf_.push_back(static_cast<char>(v));
    } else {
      using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
      auto bits = std::bit_cast<U>(v);
      for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  void put_str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& buf) : buf_(buf) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    if constexpr (sizeof(T) == 1) {
      return static_cast<T>(buf_[pos_++]);
    } else {
      using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
      U bits = 0;
      for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<U>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
      }
      return std::bit_cast<T>(bits);
    }
  }
  std::string get_str() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(buf_.data() + pos_, len);
    pos_ += len;
    return s;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw CheckpointError("checkpoint payload is malformed (read past end)");
  }
  const std::vector<char>& buf_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(const std::vector<char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

const ParameterStore& CheckpointData::store(const std::string& tag) const {
  for (const auto& [t, s] : stores) {
    if (t == tag) return s;
  }
  throw CheckpointError("checkpoint has no store tagged '" + tag + "'");
}

std::string manifest_path(const std::string& checkpoint_path) { return checkpoint_path + ".manifest.txt"; }

void write_checkpoint(const std::string& path, const std::string& meta, const std::vector<StoreRef>& stores) {
  Writer payload;
  payload.put_str(meta);
  payload.put<std::uint32_t>(static_cast<std::uint32_t>(stores.size()));
  for (const auto& ref : stores) {
    payload.put_str(ref.tag);
    payload.put<std::int64_t>(ref.store->step);
    payload.put<std::uint32_t>(static_cast<std::uint32_t>(ref.store->size()));
    for (const auto& e : *ref.store) {
      payload.put_str(e.name);
      payload.put<std::uint32_t>(2);
      payload.put<std::uint32_t>(static_cast<std::uint32_t>(e.value.rows()));
      payload.put<std::uint32_t>(static_cast<std::uint32_t>(e.value.cols()));
      for (double v : e.value.values()) payload.put<float>(static_cast<float>(v));
      payload.put<std::uint8_t>(ref.with_moments ? 1 : 0);
      if (ref.with_moments) {
        for (double v : e.moment1.values()) payload.put<double>(v);
        for (double v : e.moment2.values()) payload.put<double>(v);
      }
    }
  }
  const auto& bytes = payload.bytes();
  const std::uint32_t crc = checksum(bytes);

  Writer header;
  for (char c : kMagic) header.put<char>(c);
  header.put<std::uint32_t>(kCheckpointVersion);
  header.put<std::uint64_t>(bytes.size());
  header.put<std::uint32_t>(crc);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp);
    out.write(header.bytes().data(), static_cast<std::streamsize>(header.bytes().size()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into " + path);

  std::ofstream manifest(manifest_path(path));
  char crc_hex[16];
  std::snprintf(crc_hex, sizeof crc_hex, "%08x", crc);
  manifest << "format DANCKPT\nversion " << kCheckpointVersion << "\npayload_bytes " << bytes.size() << "\ncrc32 "
           << crc_hex << "\n";
  for (const auto& ref : stores) {
    manifest << "store " << ref.tag << " step " << ref.store->step << " params " << ref.store->size() << "\n";
    for (const auto& e : *ref.store) manifest << "  " << e.name << " " << e.value.shape_str() << "\n";
  }
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::vector<char> header(24);
  in.read(header.data(), 24);
  if (in.gcount() != 24) throw CheckpointError("checksum failure: " + path + " is truncated (incomplete header)");
  if (std::memcmp(header.data(), kMagic, 8) != 0) throw CheckpointError(path + " is not a DAN checkpoint");
  Reader hr(header);
  for (int i = 0; i < 8; ++i) hr.get<char>();
  const auto version = hr.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto payload_size = hr.get<std::uint64_t>();
  const auto expected_crc = hr.get<std::uint32_t>();

  std::vector<char> payload(payload_size);
  in.read(payload.data(), static_cast<std::streamsize>(payload_size));
  if (static_cast<std::uint64_t>(in.gcount()) != payload_size) {
    throw CheckpointError("checksum failure: " + path + " is truncated (" + std::to_string(in.gcount()) + " of " +
                          std::to_string(payload_size) + " payload bytes)");
  }
  if (checksum(payload) != expected_crc) throw CheckpointError("checksum failure: " + path + " is corrupted");

  Reader r(payload);
  CheckpointData data;
  data.meta = r.get_str();
  const auto store_count = r.get<std::uint32_t>();
  for (std::uint32_t s = 0; s < store_count; ++s) {
    std::string tag = r.get_str();
    ParameterStore store;
    store.step = r.get<std::int64_t>();
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t p = 0; p < count; ++p) {
      const std::string name = r.get_str();
      const auto rank = r.get<std::uint32_t>();
      if (rank != 2) throw CheckpointError("parameter " + name + " has unsupported rank " + std::to_string(rank));
      const auto rows = static_cast<int>(r.get<std::uint32_t>());
      const auto cols = static_cast<int>(r.get<std::uint32_t>());
      Tensor value(rows, cols);
      for (auto& v : value.values()) v = static_cast<double>(r.get<float>());
      const int idx = store.add(name, std::move(value));
      if (r.get<std::uint8_t>() != 0) {
        for (auto& v : store[idx].moment1.values()) v = r.get<double>();
        for (auto& v : store[idx].moment2.values()) v = r.get<double>();
      }
    }
    data.stores.emplace_back(std::move(tag), std::move(store));
  }
  if (!r.at_end()) throw CheckpointError("checkpoint payload has trailing bytes");
  return data;
}

void assign_store(const ParameterStore& loaded, ParameterStore& target, bool with_moments) {
  if (loaded.size() != target.size()) {
    throw ShapeError("checkpoint has " + std::to_string(loaded.size()) + " parameters, model expects " +
                     std::to_string(target.size()));
  }
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const auto& src = loaded[i];
    const auto& dst = target[i];
    if (src.name != dst.name) throw ShapeError("checkpoint parameter " + src.name + " where model expects " + dst.name);
    if (!src.value.same_shape(dst.value)) {
      throw ShapeError("parameter " + src.name + ": checkpoint shape " + src.value.shape_str() + ", model shape " +
                       dst.value.shape_str());
    }
  }
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    target[i].value = loaded[i].value;
    if (with_moments) {
      target[i].moment1 = loaded[i].moment1;
      target[i].moment2 = loaded[i].moment2;
    }
    target[i].grad.fill(0.0);
  }
  if (with_moments) target.step = loaded.step;
}

}  // namespace dan
