#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "qw/cp_map.hpp"
#include "qw/qweight.hpp"

namespace qw::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Matrices are arrays of rows, each row an array of [re, im] pairs; vectors are arrays of pairs.
json to_json(cplx z);
json to_json(const Matrix& m);
json to_json(std::span<const cplx> v);
json to_json(const Profile& g);
json to_json(const WeightAtom& atom);
json to_json(const BoundaryWeight& mu);
json to_json(const CornerData& corner);
json to_json(const QWeightMap& qw);
json to_json(const std::vector<CurvePoint>& curve);

// All parsers throw Error(InputError) on malformed input, including unknown fields.
cplx complex_from_json(const json& j);
Matrix matrix_from_json(const json& j);
CVector vector_from_json(const json& j);
Profile profile_from_json(const json& j);
WeightAtom atom_from_json(const json& j);
BoundaryWeight weight_from_json(const json& j);
QWeightMap qweight_from_json(const json& j);

// Reads a file holding a map spec with "schema_version": 1.
json read_json(const std::filesystem::path& path);
QWeightMap read_qweight(const std::filesystem::path& path);

// Stable formatting: two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve,
                     const std::string& value_name = "value");

}  // namespace qw::io
