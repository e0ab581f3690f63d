#include "printacc/stl.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "printacc/error.hpp"

namespace printacc {

namespace {

constexpr std::size_t kHeaderBytes = 80;
constexpr std::size_t kRecordBytes = 50;

std::uint32_t read_u32_le(const std::byte* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32_le(const std::byte* p) { return std::bit_cast<float>(read_u32_le(p)); }

void put_u32_le(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32_le(std::string& out, float f) { put_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const
    {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(k.y) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(k.z) + 0x85157AF5ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

// Merges vertices within kVertexMergeTolerance using a hash grid whose cell
// equals the tolerance, so candidates live in the 27 neighbouring cells.
class VertexWelder {
public:
    std::uint32_t insert(const Point3& p)
    {
        const CellKey key = cell_of(p);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find({key.x + dx, key.y + dy, key.z + dz});
                    if (it == cells_.end())
                        continue;
                    for (auto idx : it->second) {
                        if (((vertices_[idx] - p).cwiseAbs().array() <= kVertexMergeTolerance).all())
                            return idx;
                    }
                }
            }
        }
        const auto idx = static_cast<std::uint32_t>(vertices_.size());
        vertices_.push_back(p);
        cells_[key].push_back(idx);
        return idx;
    }

    std::vector<Point3> take() { return std::move(vertices_); }

private:
    static CellKey cell_of(const Point3& p)
    {
        return {std::llround(p.x() / kVertexMergeTolerance), std::llround(p.y() / kVertexMergeTolerance),
                std::llround(p.z() / kVertexMergeTolerance)};
    }

    std::vector<Point3> vertices_;
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells_;
};

void check_finite(const Point3& p, std::size_t facet)
{
    if (!p.allFinite())
        throw FormatError("stl facet " + std::to_string(facet) + " has a non-finite coordinate");
}

TriangleMesh parse_binary(std::span<const std::byte> bytes, std::uint32_t count)
{
    VertexWelder welder;
    TriangleMesh mesh;
    mesh.triangles.reserve(count);
    const std::byte* rec = bytes.data() + kHeaderBytes + 4;
    for (std::uint32_t t = 0; t < count; ++t, rec += kRecordBytes) {
        Triangle tri{};
        for (int k = 0; k < 3; ++k) {
            const std::byte* v = rec + 12 + 12 * k;
            const Point3 p(read_f32_le(v), read_f32_le(v + 4), read_f32_le(v + 8));
            check_finite(p, t);
            tri[k] = welder.insert(p);
        }
        mesh.triangles.push_back(tri);
    }
    mesh.vertices = welder.take();
    return mesh;
}

class AsciiTokens {
public:
    explicit AsciiTokens(std::string_view text) : text_(text) {}

    bool next(std::string_view& tok)
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ >= text_.size())
            return false;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        tok = text_.substr(start, pos_ - start);
        return true;
    }

    std::string_view expect_any()
    {
        std::string_view tok;
        if (!next(tok))
            throw FormatError("ascii stl is truncated");
        return tok;
    }

    void expect(std::string_view word)
    {
        const auto tok = expect_any();
        if (tok != word)
            throw FormatError("ascii stl: expected '" + std::string(word) + "', found '" +
                              std::string(tok) + "'");
    }

    double number()
    {
        const std::string tok(expect_any());
        char* stop = nullptr;
        const double v = std::strtod(tok.c_str(), &stop);
        if (stop == tok.c_str() || *stop != '\0')
            throw FormatError("ascii stl: expected a number, found '" + tok + "'");
        return v;
    }

    void skip_line()
    {
        while (pos_ < text_.size() && text_[pos_] != '\n')
            ++pos_;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

TriangleMesh parse_ascii(std::string_view text)
{
    AsciiTokens tokens(text);
    VertexWelder welder;
    TriangleMesh mesh;
    std::string_view tok;
    bool in_solid = false;
    while (tokens.next(tok)) {
        if (tok == "solid") {
            tokens.skip_line();
            in_solid = true;
        } else if (tok == "endsolid") {
            tokens.skip_line();
            in_solid = false;
        } else if (tok == "facet") {
            if (!in_solid)
                throw FormatError("ascii stl: facet outside of solid");
            tokens.expect("normal");
            for (int k = 0; k < 3; ++k)
                tokens.number();
            tokens.expect("outer");
            tokens.expect("loop");
            Triangle tri{};
            for (int k = 0; k < 3; ++k) {
                tokens.expect("vertex");
                const double x = tokens.number();
                const double y = tokens.number();
                const double z = tokens.number();
                const Point3 p(x, y, z);
                check_finite(p, mesh.triangles.size());
                tri[k] = welder.insert(p);
            }
            tokens.expect("endloop");
            tokens.expect("endfacet");
            mesh.triangles.push_back(tri);
        } else {
            throw FormatError("ascii stl: unexpected token '" + std::string(tok) + "'");
        }
    }
    if (in_solid)
        throw FormatError("ascii stl is truncated (missing endsolid)");
    mesh.vertices = welder.take();
    return mesh;
}

bool looks_ascii(std::span<const std::byte> bytes)
{
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const auto first = text.find_first_not_of(" \t\r\n");
    return first != std::string_view::npos && text.substr(first, 5) == "solid";
}

} // namespace

TriangleMesh parse_stl(std::span<const std::byte> bytes)
{
    TriangleMesh mesh;
    bool binary = false;
    std::uint32_t count = 0;
    if (bytes.size() >= kHeaderBytes + 4) {
        count = read_u32_le(bytes.data() + kHeaderBytes);
        binary = kHeaderBytes + 4 + std::uint64_t{count} * kRecordBytes == bytes.size();
    }

    if (binary) {
        mesh = parse_binary(bytes, count);
    } else if (looks_ascii(bytes)) {
        mesh = parse_ascii({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
    } else if (bytes.size() < kHeaderBytes + 4) {
        throw FormatError("stl is truncated: " + std::to_string(bytes.size()) +
                          " bytes is shorter than the binary header");
    } else {
        const std::uint64_t expected = kHeaderBytes + 4 + std::uint64_t{count} * kRecordBytes;
        const std::uint64_t records = (bytes.size() - kHeaderBytes - 4) / kRecordBytes;
        if (bytes.size() < expected)
            throw FormatError("stl is truncated: declares " + std::to_string(count) +
                              " triangles but holds " + std::to_string(records) + " records");
        throw FormatError("stl triangle count mismatch: declares " + std::to_string(count) +
                          " triangles but payload is " + std::to_string(bytes.size()) + " bytes");
    }
    mesh.validate();
    return mesh;
}

TriangleMesh read_stl(const std::filesystem::path& path)
{
    const std::string bytes = read_file(path);
    return parse_stl(std::as_bytes(std::span(bytes.data(), bytes.size())));
}

namespace {

Vector3 facet_normal(const TriangleMesh& mesh, std::size_t i)
{
    const Vector3 n = (mesh.corner(i, 1) - mesh.corner(i, 0)).cross(mesh.corner(i, 2) - mesh.corner(i, 0));
    const double len = n.norm();
    return len > 0.0 ? Vector3(n / len) : Vector3::Zero();
}

} // namespace

std::string write_stl_binary(const TriangleMesh& mesh, std::string_view header)
{
    std::string out(kHeaderBytes, '\0');
    std::memcpy(out.data(), header.data(), std::min(header.size(), kHeaderBytes));
    out.reserve(kHeaderBytes + 4 + mesh.size() * kRecordBytes);
    put_u32_le(out, static_cast<std::uint32_t>(mesh.size()));
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Vector3 n = facet_normal(mesh, i);
        for (int k = 0; k < 3; ++k)
            put_f32_le(out, static_cast<float>(n[k]));
        for (int v = 0; v < 3; ++v) {
            const Point3& p = mesh.corner(i, v);
            for (int k = 0; k < 3; ++k)
                put_f32_le(out, static_cast<float>(p[k]));
        }
        out.push_back('\0');
        out.push_back('\0');
    }
    return out;
}

std::string write_stl_ascii(const TriangleMesh& mesh, std::string_view name)
{
    std::string out = "solid " + std::string(name) + "\n";
    char buf[160];
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Vector3 n = facet_normal(mesh, i);
        std::snprintf(buf, sizeof buf, "  facet normal %.9g %.9g %.9g\n    outer loop\n", n.x(), n.y(), n.z());
        out += buf;
        for (int v = 0; v < 3; ++v) {
            const Point3& p = mesh.corner(i, v);
            std::snprintf(buf, sizeof buf, "      vertex %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
            out += buf;
        }
        out += "    endloop\n  endfacet\n";
    }
    out += "endsolid " + std::string(name) + "\n";
    return out;
}

} // namespace printacc
