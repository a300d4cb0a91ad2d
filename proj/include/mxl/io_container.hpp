#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mxl/carray.hpp"

// Binary tensor container ("MXL1"): little-endian header {magic, version u16,
// kind u16, record count u32}, then per record a name, element type, u32 dim
// list and a header CRC32, followed by the row-major payload. Trace files are
// single-record; checkpoints are archives with one record per named tensor.
namespace mxl::io {

enum class ElemType : std::uint16_t {
  kComplexF32 = 0,  // interleaved real/imag float32
  kF32 = 1,
  kF64 = 2,
  kComplexF64 = 3,
};

struct Record {
  std::string name;
  ElemType dtype = ElemType::kF64;
  std::vector<std::uint32_t> dims;
  std::vector<double> real;  // payload for kF32/kF64
  std::vector<cplx> cval;    // payload for complex types

  std::size_t elem_count() const;
};

Record make_complex_record(std::string name, const CArray& a, bool as_f32 = true);
CArray to_carray(const Record& r);

void write_container(const std::string& path, const std::vector<Record>& records);
std::vector<Record> read_container(const std::string& path);

/// Single-tensor convenience used for trace files.
void write_tensor_file(const std::string& path, const Record& r);
Record read_tensor_file(const std::string& path);

}  // namespace mxl::io
