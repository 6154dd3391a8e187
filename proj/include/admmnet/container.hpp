#pragma once

// Binary container for grids, masks, datasets and parameter vectors.
//
// Layout (all integers little-endian):
//   magic    8 bytes  "ADMMNET1"
//   version  u32      container_version
//   count    u32      number of records
//   record*  { u32 name_len, name bytes,
//              u8 dtype (1 f64, 2 c128, 3 u8, 4 i64, 5 utf-8 string),
//              u8 rank, u64 dims[rank], payload }
// f64 values are IEEE-754 bit patterns; c128 stores (re, im) pairs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "admmnet/data.hpp"
#include "admmnet/errors.hpp"

namespace admmnet {

inline constexpr char container_magic[8] = {'A', 'D', 'M', 'M', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t container_version = 1;

enum class DType : std::uint8_t { f64 = 1, c128 = 2, u8 = 3, i64 = 4, string = 5 };

inline std::size_t dtype_width(DType t) {
  switch (t) {
    case DType::f64: return 8;
    case DType::c128: return 16;
    case DType::u8: return 1;
    case DType::i64: return 8;
    case DType::string: return 1;
  }
  throw ContainerError("unknown dtype code " + std::to_string(static_cast<int>(t)));
}

struct Record {
  std::string name;
  DType dtype = DType::f64;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> payload;  // little-endian element bytes

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  static Record f64(std::string name, std::vector<std::uint64_t> dims, std::span<const double> v);
  static Record c128(std::string name, const ComplexGrid& g);
  static Record u8(std::string name, std::vector<std::uint64_t> dims, std::span<const std::uint8_t> v);
  static Record i64(std::string name, std::span<const std::int64_t> v);
  static Record text(std::string name, const std::string& s);

  std::vector<double> as_f64() const;
  ComplexGrid as_grid() const;
  std::vector<std::uint8_t> as_u8() const;
  std::vector<std::int64_t> as_i64() const;
  std::string as_text() const;

 private:
  void expect(DType t) const {
    if (dtype != t)
      throw ContainerError("record '" + name + "' has dtype " + std::to_string(static_cast<int>(dtype)) +
                           ", expected " + std::to_string(static_cast<int>(t)));
  }
};

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes = 8) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_u64(const std::uint8_t* p, int bytes = 8) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline Record Record::f64(std::string name, std::vector<std::uint64_t> dims, std::span<const double> v) {
  Record r{std::move(name), DType::f64, std::move(dims), {}};
  if (r.element_count() != v.size()) throw ContainerError("record '" + r.name + "': dims do not match data size");
  r.payload.reserve(v.size() * 8);
  for (double x : v) detail::put_u64(r.payload, std::bit_cast<std::uint64_t>(x));
  return r;
}

inline Record Record::c128(std::string name, const ComplexGrid& g) {
  Record r{std::move(name), DType::c128,
           {static_cast<std::uint64_t>(g.height()), static_cast<std::uint64_t>(g.width())}, {}};
  r.payload.reserve(g.size() * 16);
  for (const auto& v : g.data()) {
    detail::put_u64(r.payload, std::bit_cast<std::uint64_t>(v.real()));
    detail::put_u64(r.payload, std::bit_cast<std::uint64_t>(v.imag()));
  }
  return r;
}

inline Record Record::u8(std::string name, std::vector<std::uint64_t> dims, std::span<const std::uint8_t> v) {
  Record r{std::move(name), DType::u8, std::move(dims), {v.begin(), v.end()}};
  if (r.element_count() != v.size()) throw ContainerError("record '" + r.name + "': dims do not match data size");
  return r;
}

inline Record Record::i64(std::string name, std::span<const std::int64_t> v) {
  Record r{std::move(name), DType::i64, {v.size()}, {}};
  for (auto x : v) detail::put_u64(r.payload, static_cast<std::uint64_t>(x));
  return r;
}

inline Record Record::text(std::string name, const std::string& s) {
  return Record{std::move(name), DType::string, {s.size()}, {s.begin(), s.end()}};
}

inline std::vector<double> Record::as_f64() const {
  expect(DType::f64);
  std::vector<double> v(payload.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::bit_cast<double>(detail::get_u64(&payload[8 * i]));
  return v;
}

inline ComplexGrid Record::as_grid() const {
  expect(DType::c128);
  if (dims.size() != 2) throw ContainerError("record '" + name + "' is not a 2-D grid");
  ComplexGrid g(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = cplx(std::bit_cast<double>(detail::get_u64(&payload[16 * i])),
                std::bit_cast<double>(detail::get_u64(&payload[16 * i + 8])));
  }
  return g;
}

inline std::vector<std::uint8_t> Record::as_u8() const {
  expect(DType::u8);
  return payload;
}

inline std::vector<std::int64_t> Record::as_i64() const {
  expect(DType::i64);
  std::vector<std::int64_t> v(payload.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::int64_t>(detail::get_u64(&payload[8 * i]));
  return v;
}

inline std::string Record::as_text() const {
  expect(DType::string);
  return std::string(payload.begin(), payload.end());
}

struct Container {
  std::vector<Record> records;

  void add(Record r) { records.push_back(std::move(r)); }

  const Record* find(const std::string& name) const {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  }

  const Record& at(const std::string& name) const {
    if (const Record* r = find(name)) return *r;
    throw ContainerError("missing record '" + name + "'");
  }
};

inline std::vector<std::uint8_t> encode_container(const Container& c) {
  std::vector<std::uint8_t> out(std::begin(container_magic), std::end(container_magic));
  detail::put_u64(out, container_version, 4);
  detail::put_u64(out, c.records.size(), 4);
  for (const auto& r : c.records) {
    if (r.payload.size() != r.element_count() * dtype_width(r.dtype))
      throw ContainerError("record '" + r.name + "': payload size does not match dims");
    detail::put_u64(out, r.name.size(), 4);
    out.insert(out.end(), r.name.begin(), r.name.end());
    out.push_back(static_cast<std::uint8_t>(r.dtype));
    out.push_back(static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) detail::put_u64(out, d);
    out.insert(out.end(), r.payload.begin(), r.payload.end());
  }
  return out;
}

inline Container decode_container(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (bytes.size() - pos < n)
      throw ContainerError(std::string("truncated container while reading ") + what + " at byte " +
                           std::to_string(pos));
  };
  need(8, "magic");
  if (std::memcmp(bytes.data(), container_magic, 8) != 0) throw ContainerError("not a container (bad magic)");
  pos = 8;
  need(8, "header");
  const auto version = static_cast<std::uint32_t>(detail::get_u64(&bytes[pos], 4));
  if (version != container_version)
    throw ContainerError("unsupported container version " + std::to_string(version) + " (expected " +
                         std::to_string(container_version) + ")");
  const auto count = static_cast<std::uint32_t>(detail::get_u64(&bytes[pos + 4], 4));
  pos += 8;
  Container c;
  for (std::uint32_t k = 0; k < count; ++k) {
    Record r;
    need(4, "record name length");
    const auto len = detail::get_u64(&bytes[pos], 4);
    pos += 4;
    need(len, "record name");
    r.name.assign(reinterpret_cast<const char*>(&bytes[pos]), len);
    pos += len;
    need(2, "record type");
    const auto code = bytes[pos];
    if (code < 1 || code > 5) throw ContainerError("record '" + r.name + "': unknown dtype code " + std::to_string(code));
    r.dtype = static_cast<DType>(code);
    const int rank = bytes[pos + 1];
    pos += 2;
    need(8u * rank, "record dims");
    for (int d = 0; d < rank; ++d) {
      r.dims.push_back(detail::get_u64(&bytes[pos]));
      pos += 8;
    }
    const std::uint64_t n = r.element_count() * dtype_width(r.dtype);
    need(n, "record payload");
    r.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    c.records.push_back(std::move(r));
  }
  if (pos != bytes.size()) throw ContainerError("trailing bytes after last record");
  return c;
}

inline void write_container(const std::string& path, const Container& c) {
  const auto bytes = encode_container(c);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ContainerError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ContainerError("write to '" + path + "' failed");
}

inline Container read_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContainerError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

inline Record mask_record(const std::string& name, const SamplingMask& m) {
  std::vector<std::uint8_t> keep(m.height() * static_cast<std::size_t>(m.width()));
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = m.kept(i) ? 1 : 0;
  return Record::u8(name, {static_cast<std::uint64_t>(m.height()), static_cast<std::uint64_t>(m.width())}, keep);
}

inline SamplingMask mask_from_record(const Record& r) {
  if (r.dims.size() != 2) throw ContainerError("record '" + r.name + "' is not a 2-D mask");
  return SamplingMask(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]), r.as_u8());
}

inline Container dataset_to_container(const Dataset& ds) {
  Container c;
  c.add(Record::text("kind", "dataset"));
  c.add(mask_record("mask", ds.mask));
  const double meta[2] = {ds.sampling_rate, ds.noise_sigma};
  c.add(Record::f64("meta", {2}, meta));
  std::vector<double> sig;
  for (const auto& s : ds.samples) sig.push_back(s.noise_sigma);
  c.add(Record::f64("sigma", {sig.size()}, sig));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    c.add(Record::c128("y." + std::to_string(i), ds.samples[i].y));
    c.add(Record::c128("x." + std::to_string(i), ds.samples[i].xgt));
  }
  return c;
}

inline Dataset dataset_from_container(const Container& c) {
  if (c.at("kind").as_text() != "dataset") throw ContainerError("container does not hold a dataset");
  const auto meta = c.at("meta").as_f64();
  const auto sig = c.at("sigma").as_f64();
  if (meta.size() != 2) throw ContainerError("dataset meta record has wrong size");
  Dataset ds{{}, mask_from_record(c.at("mask")), meta[0], meta[1]};
  for (std::size_t i = 0; i < sig.size(); ++i)
    ds.samples.push_back({c.at("y." + std::to_string(i)).as_grid(), c.at("x." + std::to_string(i)).as_grid(), sig[i]});
  ds.validate();
  return ds;
}

inline void write_dataset(const std::string& path, const Dataset& ds) { write_container(path, dataset_to_container(ds)); }
inline Dataset read_dataset(const std::string& path) { return dataset_from_container(read_container(path)); }

}  // namespace admmnet
