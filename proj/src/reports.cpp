#include "dhlab/reports.hpp"

#include <cstdio>
#include <fstream>

#include "dhlab/errors.hpp"

namespace dhlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

bool ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (std::filesystem::is_directory(dir, ec)) return false;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  return true;
}

nlohmann::json grid_json(const Grid& g) {
  return {{"topology", to_string(g.topology())}, {"lx", g.lx()}, {"ly", g.ly()}, {"nx", g.nx()},
          {"ny", g.ny()},  {"x0", g.x0()}, {"y0", g.y0()}, {"h", g.h()}};
}

nlohmann::json energy_report_json(const EnergyReport& r) {
  return {{"e_map", r.e_map},
          {"e_spinor", r.e_spinor},
          {"l_value", r.l_value},
          {"residual_map", r.residual_map},
          {"residual_spinor", r.residual_spinor},
          {"margin", r.margin},
          {"degenerate_spinor", r.degenerate_spinor},
          {"grid", grid_json(r.grid)}};
}

}  // namespace dhlab
