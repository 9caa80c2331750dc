#pragma once

#include "rcf/localization.hpp"
#include "rcf/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>

namespace rcf {

/// Version of the documented model layout written by save_reservoir.
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr const char* kSpecVersion = "1.0";

nlohmann::ordered_json to_json(const MacroParams& params);
/// Missing keys keep their defaults; unknown keys and wrong types throw
/// ConfigError naming the key.
MacroParams macro_params_from_json(const nlohmann::json& j, const std::string& where = "params");

/// Reservoir container, all integers and floats little-endian:
///   "RCFMODEL" | u32 format version | u64 header length | JSON header |
///   i64 row_ptr[N+1] | i64 col_idx[nnz] | f64 values[nnz]   (CSR adjacency)
///   f64 W_in[N x input_dim]  (row-major)
///   f64 W_out[output_dim x feature_dim]  (row-major, only when trained)
///   f64 state[N] | f64 last_input[input_dim]
/// The header records the params, dimensions, nnz and the construction draw
/// order. Reading back reproduces every matrix bit for bit.
void write_reservoir(std::ostream& out, const Reservoir& res);
Reservoir read_reservoir(std::istream& in);
void save_reservoir(const std::filesystem::path& path, const Reservoir& res);
Reservoir load_reservoir(const std::filesystem::path& path);

/// Ensemble container: "RCFENSMB" | u32 version | u64 header length | JSON
/// header (layout) | f64 climatology_std[D] | per member: u64 byte count and a
/// reservoir container.
void save_ensemble(const std::filesystem::path& path, const LocalizedEnsemble& ensemble);
LocalizedEnsemble load_ensemble(const std::filesystem::path& path);

/// True when the file starts with the ensemble magic.
bool is_ensemble_file(const std::filesystem::path& path);

} // namespace rcf
