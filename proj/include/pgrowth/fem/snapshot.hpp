#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "pgrowth/core/error.hpp"
#include "pgrowth/fem/field.hpp"

namespace pgrowth {

/// Binary field snapshot:
///   "PGFS" | u32 version | u64 header length | JSON header | node values as f64
/// All integers and floats little-endian. The header carries the mesh descriptor, the value
/// count and whatever the caller echoes under "params".
inline constexpr std::uint32_t snapshot_version = 1;

namespace snapshot_detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xffU);
  out.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw IoError("truncated snapshot");
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xffU);
  out.write(b.data(), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw IoError("truncated snapshot");
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

}  // namespace snapshot_detail

template <int D>
void write_snapshot(std::ostream& out, const DiscreteField<D>& field, const nlohmann::json& params = nlohmann::json::object()) {
  nlohmann::json header;
  header["format"] = "pgrowth-field";
  header["version"] = snapshot_version;
  header["mesh"] = field.mesh().descriptor();
  header["values"] = field.values().size();
  header["params"] = params;
  const std::string text = header.dump();
  out.write("PGFS", 4);
  snapshot_detail::put_u32(out, snapshot_version);
  snapshot_detail::put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index i = 0; i < field.values().size(); ++i) {
    std::uint64_t bits = 0;
    const double v = field.values()(i);
    std::memcpy(&bits, &v, 8);
    snapshot_detail::put_u64(out, bits);
  }
  if (!out) throw IoError("failed writing snapshot");
}

template <int D>
void write_snapshot(const std::string& path, const DiscreteField<D>& field, const nlohmann::json& params = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_snapshot(out, field, params);
}

struct SnapshotHeader {
  nlohmann::json header;
  int dim = 0;
};

/// Reads the header only, e.g. to dispatch on the dimension.
inline SnapshotHeader read_snapshot_header(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PGFS", 4) != 0) throw IoError("not a field snapshot");
  const std::uint32_t version = snapshot_detail::get_u32(in);
  if (version != snapshot_version) throw IoError("unsupported snapshot version " + std::to_string(version));
  const std::uint64_t len = snapshot_detail::get_u64(in);
  if (len > (1ULL << 30)) throw IoError("implausible snapshot header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated snapshot header");
  SnapshotHeader h;
  try {
    h.header = nlohmann::json::parse(text);
    h.dim = h.header.at("mesh").at("dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad snapshot header: ") + e.what());
  }
  return h;
}

/// Rebuilds the mesh from the descriptor and reads the values.
template <int D>
DiscreteField<D> read_snapshot(std::istream& in, nlohmann::json* params = nullptr) {
  const SnapshotHeader h = read_snapshot_header(in);
  if (h.dim != D) throw MeshMismatch("snapshot dimension " + std::to_string(h.dim) + " does not match " + std::to_string(D));
  const auto mesh = Mesh<D>::from_descriptor(h.header.at("mesh"));
  const auto count = h.header.at("values").get<std::int64_t>();
  if (count != mesh->dof_count()) throw MeshMismatch("snapshot value count does not match its mesh");
  Eigen::VectorXd values(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const std::uint64_t bits = snapshot_detail::get_u64(in);
    std::memcpy(&values(i), &bits, 8);
  }
  if (params) *params = h.header.value("params", nlohmann::json::object());
  return DiscreteField<D>(mesh, std::move(values));
}

template <int D>
DiscreteField<D> read_snapshot(const std::string& path, nlohmann::json* params = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_snapshot<D>(in, params);
}

}  // namespace pgrowth
