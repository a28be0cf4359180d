#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dhlab/sphere.hpp"

namespace dhlab {

// Shortest round-trip text ("%.17g"), so repeated runs give identical bytes.
std::string format_double(double v);

// Throws IoError when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// Creates the directory if needed; returns true when it did not exist.
bool ensure_directory(const std::filesystem::path& dir);

nlohmann::json energy_report_json(const EnergyReport& report);
nlohmann::json grid_json(const Grid& grid);

}  // namespace dhlab
