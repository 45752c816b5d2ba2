#include "acdii/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "acdii/error.hpp"

namespace acdii {

namespace {

constexpr const char* kSchema = "acdii-field/1";

static_assert(std::endian::native == std::endian::little, "payload encoding assumes a little-endian host");

void check_dims(const FieldFile& f, const Grid2D& g, bool cells, FieldKind want) {
    if (f.kind != want)
        throw FieldParseError("kind", std::string("field kind mismatch: expected ") + to_string(want) +
                                          ", got " + to_string(f.kind));
    const int nx = cells ? g.cnx() : g.nx();
    const int ny = cells ? g.cny() : g.ny();
    if (f.nx != nx) throw FieldParseError("nx", "field nx does not match grid");
    if (f.ny != ny) throw FieldParseError("ny", "field ny does not match grid");
    if (f.hx != g.hx()) throw FieldParseError("hx", "field hx does not match grid");
    if (f.hy != g.hy()) throw FieldParseError("hy", "field hy does not match grid");
}

FieldFile make(FieldKind k, int nx, int ny, const Grid2D& g) {
    FieldFile f;
    f.kind = k;
    f.nx = nx;
    f.ny = ny;
    f.hx = g.hx();
    f.hy = g.hy();
    f.data.reserve(static_cast<std::size_t>(planes_of(k)) * nx * ny);
    return f;
}

} // namespace

const char* to_string(FieldKind k) {
    switch (k) {
    case FieldKind::scalar: return "scalar";
    case FieldKind::vector: return "vector";
    case FieldKind::tensor: return "tensor";
    }
    return "?";
}

int planes_of(FieldKind k) {
    switch (k) {
    case FieldKind::scalar: return 1;
    case FieldKind::vector: return 2;
    case FieldKind::tensor: return 3;
    }
    return 0;
}

std::string write_field(const FieldFile& f) {
    const std::size_t expect = static_cast<std::size_t>(f.planes()) * f.nx * f.ny;
    if (f.data.size() != expect) throw InputError("write_field: payload length does not match header");
    nlohmann::ordered_json h;
    h["schema"] = kSchema;
    h["kind"] = to_string(f.kind);
    h["nx"] = f.nx;
    h["ny"] = f.ny;
    h["hx"] = f.hx;
    h["hy"] = f.hy;
    h["order"] = "row-major";
    h["payload"] = "f64le";
    std::string out = h.dump();
    out.push_back('\n');
    const std::size_t off = out.size();
    out.resize(off + expect * sizeof(double));
    if (expect) std::memcpy(out.data() + off, f.data.data(), expect * sizeof(double));
    return out;
}

FieldFile read_field(std::string_view bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) throw FieldParseError("header", "missing header terminator");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw FieldParseError("header", std::string("malformed header: ") + e.what());
    }
    if (!h.is_object()) throw FieldParseError("header", "header is not a JSON object");
    static const std::set<std::string> keys = {"schema", "kind", "nx", "ny", "hx", "hy", "order", "payload"};
    for (auto it = h.begin(); it != h.end(); ++it)
        if (!keys.count(it.key())) throw FieldParseError(it.key(), "unknown header key: " + it.key());
    for (const auto& k : keys)
        if (!h.contains(k)) throw FieldParseError(k, "missing header key: " + k);

    if (!h["schema"].is_string() || h["schema"].get<std::string>() != kSchema)
        throw FieldParseError("schema", "unsupported schema");
    if (!h["order"].is_string() || h["order"].get<std::string>() != "row-major")
        throw FieldParseError("order", "unsupported order");
    if (!h["payload"].is_string() || h["payload"].get<std::string>() != "f64le")
        throw FieldParseError("payload", "unsupported payload encoding");

    FieldFile f;
    const auto& kind = h["kind"];
    if (!kind.is_string()) throw FieldParseError("kind", "kind must be a string");
    const std::string ks = kind.get<std::string>();
    if (ks == "scalar")
        f.kind = FieldKind::scalar;
    else if (ks == "vector")
        f.kind = FieldKind::vector;
    else if (ks == "tensor")
        f.kind = FieldKind::tensor;
    else
        throw FieldParseError("kind", "unknown kind: " + ks);

    for (const char* k : {"nx", "ny"})
        if (!h[k].is_number_integer() || h[k].get<long long>() <= 0)
            throw FieldParseError(k, std::string(k) + " must be a positive integer");
    for (const char* k : {"hx", "hy"})
        if (!h[k].is_number() || !(h[k].get<double>() > 0.0))
            throw FieldParseError(k, std::string(k) + " must be a positive number");
    f.nx = h["nx"].get<int>();
    f.ny = h["ny"].get<int>();
    f.hx = h["hx"].get<double>();
    f.hy = h["hy"].get<double>();

    const std::size_t count = static_cast<std::size_t>(f.planes()) * f.nx * f.ny;
    const std::string_view payload = bytes.substr(nl + 1);
    if (payload.size() != count * sizeof(double))
        throw FieldParseError("payload", "payload length " + std::to_string(payload.size()) +
                                             " does not match header (expected " +
                                             std::to_string(count * sizeof(double)) + ")");
    f.data.resize(count);
    if (count) std::memcpy(f.data.data(), payload.data(), payload.size());
    return f;
}

FieldFile to_field_file(const ScalarField& u) {
    FieldFile f = make(FieldKind::scalar, u.grid().nx(), u.grid().ny(), u.grid());
    f.data = u.values();
    return f;
}

FieldFile to_field_file(const CellScalar& c) {
    FieldFile f = make(FieldKind::scalar, c.grid().cnx(), c.grid().cny(), c.grid());
    f.data = c.values();
    return f;
}

FieldFile to_field_file(const VectorField2& v) {
    FieldFile f = make(FieldKind::vector, v.grid().cnx(), v.grid().cny(), v.grid());
    f.data.insert(f.data.end(), v.v1().begin(), v.v1().end());
    f.data.insert(f.data.end(), v.v2().begin(), v.v2().end());
    return f;
}

FieldFile to_field_file(const TensorField2& t) {
    FieldFile f = make(FieldKind::tensor, t.grid().cnx(), t.grid().cny(), t.grid());
    const std::size_t n = t.size();
    f.data.resize(3 * n);
    for (std::size_t c = 0; c < n; ++c) {
        f.data[c] = t[c].s11;
        f.data[n + c] = t[c].s12;
        f.data[2 * n + c] = t[c].s22;
    }
    return f;
}

ScalarField node_scalar_from(const FieldFile& f, GridPtr grid) {
    check_dims(f, *grid, false, FieldKind::scalar);
    return ScalarField(std::move(grid), f.data);
}

CellScalar cell_scalar_from(const FieldFile& f, GridPtr grid) {
    check_dims(f, *grid, true, FieldKind::scalar);
    return CellScalar(std::move(grid), f.data);
}

VectorField2 vector_from(const FieldFile& f, GridPtr grid) {
    check_dims(f, *grid, true, FieldKind::vector);
    const std::size_t n = grid->num_cells();
    std::vector<double> v1(f.data.begin(), f.data.begin() + n), v2(f.data.begin() + n, f.data.end());
    return VectorField2(std::move(grid), std::move(v1), std::move(v2));
}

TensorField2 tensor_from(const FieldFile& f, GridPtr grid) {
    check_dims(f, *grid, true, FieldKind::tensor);
    const std::size_t n = grid->num_cells();
    std::vector<Sym2> cells(n);
    for (std::size_t c = 0; c < n; ++c) cells[c] = {f.data[c], f.data[n + c], f.data[2 * n + c]};
    return TensorField2(std::move(grid), std::move(cells));
}

void save_field(const std::filesystem::path& path, const FieldFile& f) {
    const std::string bytes = write_field(f);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open for writing: " + path.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

FieldFile load_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open field file: " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return read_field(bytes);
}

} // namespace acdii
