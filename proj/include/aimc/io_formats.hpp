#pragma once

// On-disk formats: weight manifests with raw little-endian tensors, and
// comma-separated event tables.

#include "aimc/ref_models.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aimc {

enum class ValuePrecision { f32, f64 };

using ModelParams = std::variant<RbmParams, MlpParams>;

inline constexpr int kWeightFormatVersion = 1;

// Manifest layout (JSON):
//   format: "aimc-weights", format_version: 1, kind: "rbm" | "mlp",
//   precision: "float32" | "float64",
//   rbm: n_spins, alpha          mlp: activation, layer_dims
//   tensors: [{name, file, shape, crc32}]   (file relative to the manifest)
// Each tensor file is row-major little-endian with no header.
ModelParams load_weights(const std::filesystem::path& manifest);

std::filesystem::path save_weights(const RbmParams& p, const std::filesystem::path& manifest,
                                   ValuePrecision precision = ValuePrecision::f64);
std::filesystem::path save_weights(const MlpParams& p, const std::filesystem::path& manifest,
                                   ValuePrecision precision = ValuePrecision::f64);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

// met_pt, met_eta, met_phi, e1_pt .. e4_phi, mu1_pt .. mu4_phi, j1_pt .. j10_phi
const std::vector<std::string>& event_column_names();

// Header row plus one row per event; the is_anomaly column is written when
// every record carries a label. Numbers use 9 significant digits.
void save_events(std::span<const EventRecord> events, const std::filesystem::path& path);
std::vector<EventRecord> load_events(const std::filesystem::path& path);

std::string format_events(std::span<const EventRecord> events);
std::vector<EventRecord> parse_events(std::string_view text);

// Writes via a temporary file in the same directory and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace aimc
