#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>

#include <nlohmann/json.hpp>

#include "dhlab/grid.hpp"

namespace dhlab {

// Binary field snapshot, all values little-endian:
//
//   offset  size  content
//        0     4  magic "DHLF"
//        4     4  u32 format version (1)
//        8     4  u32 topology (0 = torus, 1 = rectangle)
//       12     4  u32 field kind (0 = scalar, 1 = map, 2 = spinor)
//       16     4  u32 nx (cells)
//       20     4  u32 ny (cells)
//       24     4  u32 n  (target sphere dimension; 0 for scalar fields)
//       28     4  u32 components per site
//       32    32  f64 lx, ly, x0, y0
//       64     -  f64 payload, row-major over sites (y outer, x inner), components
//                 innermost; a spinor component is four values (re c0, im c0, re c1, im c1)
//
// write_snapshot also emits `<path>.json` mirroring the header.
enum class FieldKind : std::uint32_t { Scalar = 0, Map = 1, Spinor = 2 };

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

struct SnapshotHeader {
  std::uint32_t version = kSnapshotVersion;
  Topology topology = Topology::Torus;
  FieldKind kind = FieldKind::Scalar;
  int nx = 0, ny = 0, n = 0, comps = 0;
  double lx = 0, ly = 0, x0 = 0, y0 = 0;

  Grid grid() const;
};

struct Snapshot {
  SnapshotHeader header;
  std::variant<VectorField, SpinorField> field;  // scalar and map kinds use VectorField
};

void write_snapshot(const std::filesystem::path& path, const VectorField& f, FieldKind kind);
void write_snapshot(const std::filesystem::path& path, const SpinorField& f);

Snapshot read_snapshot(const std::filesystem::path& path);

nlohmann::json header_to_json(const SnapshotHeader& h);

}  // namespace dhlab
