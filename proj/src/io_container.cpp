#include "mxl/io_container.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mxl::io {
namespace {

constexpr char kMagic[4] = {'M', 'X', 'L', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kKindSingle = 1;
constexpr std::uint16_t kKindArchive = 2;

std::uint32_t crc32(const std::uint8_t* data, std::size_t n, std::uint32_t crc = 0) {
  static std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return ~crc;
}

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  // x86 is little-endian; keep the byte order explicit anyway
  buf.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("container: truncated file");
  return v;
}

std::string record_header(const Record& r) {
  std::string h;
  put<std::uint32_t>(h, static_cast<std::uint32_t>(r.name.size()));
  h += r.name;
  put<std::uint16_t>(h, static_cast<std::uint16_t>(r.dtype));
  put<std::uint32_t>(h, static_cast<std::uint32_t>(r.dims.size()));
  for (auto d : r.dims) put<std::uint32_t>(h, d);
  return h;
}

void write_payload(std::ofstream& out, const Record& r) {
  switch (r.dtype) {
    case ElemType::kComplexF32: {
      std::vector<float> buf(r.cval.size() * 2);
      for (std::size_t i = 0; i < r.cval.size(); ++i) {
        buf[2 * i] = static_cast<float>(r.cval[i].real());
        buf[2 * i + 1] = static_cast<float>(r.cval[i].imag());
      }
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
      break;
    }
    case ElemType::kComplexF64: {
      std::vector<double> buf(r.cval.size() * 2);
      for (std::size_t i = 0; i < r.cval.size(); ++i) {
        buf[2 * i] = r.cval[i].real();
        buf[2 * i + 1] = r.cval[i].imag();
      }
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(double)));
      break;
    }
    case ElemType::kF32: {
      std::vector<float> buf(r.real.size());
      for (std::size_t i = 0; i < r.real.size(); ++i) buf[i] = static_cast<float>(r.real[i]);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
      break;
    }
    case ElemType::kF64:
      out.write(reinterpret_cast<const char*>(r.real.data()),
                static_cast<std::streamsize>(r.real.size() * sizeof(double)));
      break;
  }
}

void read_payload(std::istream& in, Record& r) {
  const std::size_t n = r.elem_count();
  switch (r.dtype) {
    case ElemType::kComplexF32: {
      std::vector<float> buf(n * 2);
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!in) throw std::runtime_error("container: truncated payload");
      r.cval.resize(n);
      for (std::size_t i = 0; i < n; ++i) r.cval[i] = {buf[2 * i], buf[2 * i + 1]};
      break;
    }
    case ElemType::kComplexF64: {
      std::vector<double> buf(n * 2);
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
      if (!in) throw std::runtime_error("container: truncated payload");
      r.cval.resize(n);
      for (std::size_t i = 0; i < n; ++i) r.cval[i] = {buf[2 * i], buf[2 * i + 1]};
      break;
    }
    case ElemType::kF32: {
      std::vector<float> buf(n);
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!in) throw std::runtime_error("container: truncated payload");
      r.real.assign(buf.begin(), buf.end());
      break;
    }
    case ElemType::kF64:
      r.real.resize(n);
      in.read(reinterpret_cast<char*>(r.real.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
      if (!in) throw std::runtime_error("container: truncated payload");
      break;
  }
}

}  // namespace

std::size_t Record::elem_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

Record make_complex_record(std::string name, const CArray& a, bool as_f32) {
  Record r;
  r.name = std::move(name);
  r.dtype = as_f32 ? ElemType::kComplexF32 : ElemType::kComplexF64;
  for (auto d : a.dims()) r.dims.push_back(static_cast<std::uint32_t>(d));
  r.cval.assign(a.data(), a.data() + a.size());
  return r;
}

CArray to_carray(const Record& r) {
  if (r.dtype != ElemType::kComplexF32 && r.dtype != ElemType::kComplexF64)
    throw std::runtime_error("container: record '" + r.name + "' is not complex");
  std::vector<std::size_t> dims(r.dims.begin(), r.dims.end());
  CArray a(dims);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = r.cval[i];
  return a;
}

void write_container(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("container: cannot open for write: " + path);
  std::string head;
  head.append(kMagic, 4);
  put<std::uint16_t>(head, kVersion);
  put<std::uint16_t>(head, records.size() == 1 ? kKindSingle : kKindArchive);
  put<std::uint32_t>(head, static_cast<std::uint32_t>(records.size()));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& r : records) {
    const std::string h = record_header(r);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    const std::uint32_t crc = crc32(reinterpret_cast<const std::uint8_t*>(h.data()), h.size());
    std::string c;
    put<std::uint32_t>(c, crc);
    out.write(c.data(), static_cast<std::streamsize>(c.size()));
    write_payload(out, r);
  }
  if (!out) throw std::runtime_error("container: write failed: " + path);
}

std::vector<Record> read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("container: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("container: bad magic in " + path);
  const auto version = get<std::uint16_t>(in);
  if (version != kVersion) throw std::runtime_error("container: unsupported version");
  (void)get<std::uint16_t>(in);  // kind, informational
  const auto count = get<std::uint32_t>(in);
  std::vector<Record> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Record r;
    const auto name_len = get<std::uint32_t>(in);
    r.name.resize(name_len);
    in.read(r.name.data(), name_len);
    r.dtype = static_cast<ElemType>(get<std::uint16_t>(in));
    const auto ndims = get<std::uint32_t>(in);
    r.dims.resize(ndims);
    for (auto& d : r.dims) d = get<std::uint32_t>(in);
    const std::string h = record_header(r);
    const auto stored = get<std::uint32_t>(in);
    const auto computed = crc32(reinterpret_cast<const std::uint8_t*>(h.data()), h.size());
    if (stored != computed)
      throw std::runtime_error("container: checksum mismatch on dataset header in " + path);
    read_payload(in, r);
    out.push_back(std::move(r));
  }
  return out;
}

void write_tensor_file(const std::string& path, const Record& r) { write_container(path, {r}); }

Record read_tensor_file(const std::string& path) {
  auto recs = read_container(path);
  if (recs.size() != 1) throw std::runtime_error("container: expected single record in " + path);
  return std::move(recs.front());
}

}  // namespace mxl::io
