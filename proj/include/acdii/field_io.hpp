#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "acdii/fields.hpp"

namespace acdii {

enum class FieldKind { scalar, vector, tensor };

const char* to_string(FieldKind k);
int planes_of(FieldKind k);

/// In-memory image of an "acdii-field/1" file: a one-line JSON header, a newline,
/// then planes*nx*ny little-endian float64 values (plane-major, row-major within a plane).
///
/// nx, ny are the array dimensions of the payload: node counts for node fields,
/// cell counts for cell fields.
struct FieldFile {
    FieldKind kind = FieldKind::scalar;
    int nx = 0;
    int ny = 0;
    double hx = 1.0;
    double hy = 1.0;
    std::vector<double> data;

    int planes() const { return planes_of(kind); }
};

std::string write_field(const FieldFile& f);
FieldFile read_field(std::string_view bytes);

FieldFile to_field_file(const ScalarField& u);
FieldFile to_field_file(const CellScalar& c);
FieldFile to_field_file(const VectorField2& v);
FieldFile to_field_file(const TensorField2& t);

ScalarField node_scalar_from(const FieldFile& f, GridPtr grid);
CellScalar cell_scalar_from(const FieldFile& f, GridPtr grid);
VectorField2 vector_from(const FieldFile& f, GridPtr grid);
TensorField2 tensor_from(const FieldFile& f, GridPtr grid);

void save_field(const std::filesystem::path& path, const FieldFile& f);
FieldFile load_field(const std::filesystem::path& path);

} // namespace acdii
