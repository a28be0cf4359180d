#include "dhlab/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "dhlab/errors.hpp"

namespace dhlab {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'H', 'L', 'F'};

template <class U>
void put_le(std::vector<unsigned char>& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  std::array<unsigned char, sizeof(U)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <class U>
U get_le(const unsigned char* p) {
  std::array<unsigned char, sizeof(U)> bytes;
  std::memcpy(bytes.data(), p, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  U v;
  std::memcpy(&v, bytes.data(), sizeof(U));
  return v;
}

std::string kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::Scalar: return "scalar";
    case FieldKind::Map: return "map";
    case FieldKind::Spinor: return "spinor";
  }
  return "unknown";
}

std::vector<unsigned char> encode_header(const SnapshotHeader& h) {
  std::vector<unsigned char> out;
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(out, h.version);
  put_le<std::uint32_t>(out, h.topology == Topology::Torus ? 0u : 1u);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.kind));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.nx));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.ny));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.n));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.comps));
  put_le<double>(out, h.lx);
  put_le<double>(out, h.ly);
  put_le<double>(out, h.x0);
  put_le<double>(out, h.y0);
  return out;
}

SnapshotHeader header_for(const Grid& g, FieldKind kind, int comps) {
  SnapshotHeader h;
  h.topology = g.topology();
  h.kind = kind;
  h.nx = g.nx();
  h.ny = g.ny();
  h.comps = comps;
  h.n = kind == FieldKind::Scalar ? 0 : comps - 1;
  h.lx = g.lx();
  h.ly = g.ly();
  h.x0 = g.x0();
  h.y0 = g.y0();
  return h;
}

void write_file(const std::filesystem::path& path, const SnapshotHeader& h,
                const std::vector<unsigned char>& bytes) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
  }
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("cannot write sidecar for '" + path.string() + "'");
  js << header_to_json(h).dump(2) << "\n";
}

}  // namespace

Grid SnapshotHeader::grid() const { return make_grid(topology, lx, ly, nx, ny, x0, y0); }

nlohmann::json header_to_json(const SnapshotHeader& h) {
  return nlohmann::json{{"format", "dhlab-field"},
                        {"version", h.version},
                        {"topology", to_string(h.topology)},
                        {"kind", kind_name(h.kind)},
                        {"nx", h.nx},
                        {"ny", h.ny},
                        {"n", h.n},
                        {"components", h.comps},
                        {"lx", h.lx},
                        {"ly", h.ly},
                        {"x0", h.x0},
                        {"y0", h.y0},
                        {"header_bytes", kSnapshotHeaderBytes},
                        {"byte_order", "little"},
                        {"scalar_type", "float64"}};
}

void write_snapshot(const std::filesystem::path& path, const VectorField& f, FieldKind kind) {
  if (kind == FieldKind::Spinor) throw InvalidArgument("write_snapshot: spinor kind needs a SpinorField");
  const SnapshotHeader h = header_for(f.grid(), kind, f.comps());
  std::vector<unsigned char> bytes = encode_header(h);
  bytes.reserve(bytes.size() + f.data().size() * 8);
  for (double v : f.data()) put_le<double>(bytes, v);
  write_file(path, h, bytes);
}

void write_snapshot(const std::filesystem::path& path, const SpinorField& f) {
  const SnapshotHeader h = header_for(f.grid(), FieldKind::Spinor, f.comps());
  std::vector<unsigned char> bytes = encode_header(h);
  bytes.reserve(bytes.size() + f.data().size() * 32);
  for (const Spinor& s : f.data()) {
    put_le<double>(bytes, s.c0.real());
    put_le<double>(bytes, s.c0.imag());
    put_le<double>(bytes, s.c1.real());
    put_le<double>(bytes, s.c1.imag());
  }
  write_file(path, h, bytes);
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open snapshot '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < kSnapshotHeaderBytes || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw IoError("'" + path.string() + "' is not a field snapshot");
  }
  const unsigned char* p = bytes.data();
  SnapshotHeader h;
  h.version = get_le<std::uint32_t>(p + 4);
  if (h.version != kSnapshotVersion) {
    throw IoError("unsupported snapshot version " + std::to_string(h.version));
  }
  const auto topo = get_le<std::uint32_t>(p + 8);
  const auto kind = get_le<std::uint32_t>(p + 12);
  if (topo > 1 || kind > 2) throw IoError("corrupt snapshot header in '" + path.string() + "'");
  h.topology = topo == 0 ? Topology::Torus : Topology::Rectangle;
  h.kind = static_cast<FieldKind>(kind);
  h.nx = static_cast<int>(get_le<std::uint32_t>(p + 16));
  h.ny = static_cast<int>(get_le<std::uint32_t>(p + 20));
  h.n = static_cast<int>(get_le<std::uint32_t>(p + 24));
  h.comps = static_cast<int>(get_le<std::uint32_t>(p + 28));
  h.lx = get_le<double>(p + 32);
  h.ly = get_le<double>(p + 40);
  h.x0 = get_le<double>(p + 48);
  h.y0 = get_le<double>(p + 56);
  const Grid g = h.grid();
  const std::size_t per_comp = h.kind == FieldKind::Spinor ? 4 : 1;
  const std::size_t expected = kSnapshotHeaderBytes + g.size() * static_cast<std::size_t>(h.comps) * per_comp * 8;
  if (bytes.size() != expected) {
    throw IoError("snapshot '" + path.string() + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(expected));
  }
  const unsigned char* q = p + kSnapshotHeaderBytes;
  if (h.kind == FieldKind::Spinor) {
    SpinorField f(g, h.comps);
    for (Spinor& s : f.data()) {
      s.c0 = {get_le<double>(q), get_le<double>(q + 8)};
      s.c1 = {get_le<double>(q + 16), get_le<double>(q + 24)};
      q += 32;
    }
    return {h, std::move(f)};
  }
  VectorField f(g, h.comps);
  for (double& v : f.data()) {
    v = get_le<double>(q);
    q += 8;
  }
  return {h, std::move(f)};
}

}  // namespace dhlab
