#pragma once

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mstg/core.hpp"
#include "mstg/eval.hpp"
#include "mstg/index.hpp"
#include "mstg/labeled_graph.hpp"
#include "mstg/predicate.hpp"
#include "mstg/search.hpp"

namespace mstg {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Malformed file contents; the message carries the position.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wrong magic, unsupported version or inconsistent archive layout.
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class checksum_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("error while reading '" + path.string() + "'");
    return buf;
}

inline void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw io_error("error while writing '" + path.string() + "'");
}

inline std::uint32_t crc32_of(const void* data, std::size_t size, std::uint32_t crc = 0) {
    auto* p = static_cast<const Bytef*>(data);
    uLong c = crc;
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        c = ::crc32(c, p, chunk);
        p += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

/// Appends trivially copyable values in native (little-endian) layout.
class ByteWriter {
public:
    template <class T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    template <class T>
    void put_array(const T* data, std::size_t count) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + count * sizeof(T));
    }
    void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    std::vector<std::uint8_t>& buffer() noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; overruns raise parse_error with the offset.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    template <class T>
    T get(const char* what) {
        T v;
        need(sizeof(T), what);
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    template <class T>
    void get_array(T* out, std::size_t count, const char* what) {
        if (count > (size_ - pos_) / sizeof(T) + 1) need(size_ + 1, what);
        need(count * sizeof(T), what);
        std::memcpy(out, data_ + pos_, count * sizeof(T));
        pos_ += count * sizeof(T);
    }
    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return size_ - pos_; }

private:
    void need(std::size_t n, const char* what) const {
        if (n > size_ - pos_) {
            throw parse_error(std::string("truncated data reading ") + what + " at byte offset " +
                              std::to_string(pos_));
        }
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// fvecs / ivecs

inline VectorSet read_fvecs(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    VectorSet out;
    std::size_t pos = 0;
    std::int32_t dim = 0;
    std::vector<float> row;
    while (pos < buf.size()) {
        if (buf.size() - pos < 4) {
            throw parse_error(path.string() + ": truncated record header at byte offset " + std::to_string(pos));
        }
        std::int32_t d;
        std::memcpy(&d, buf.data() + pos, 4);
        if (d <= 0) {
            throw parse_error(path.string() + ": non-positive dimensionality " + std::to_string(d) +
                              " at byte offset " + std::to_string(pos));
        }
        if (dim != 0 && d != dim) {
            throw parse_error(path.string() + ": dimensionality " + std::to_string(d) + " differs from " +
                              std::to_string(dim) + " at byte offset " + std::to_string(pos));
        }
        dim = d;
        const std::size_t bytes = static_cast<std::size_t>(d) * 4;
        if (buf.size() - pos - 4 < bytes) {
            throw parse_error(path.string() + ": truncated record at byte offset " + std::to_string(pos));
        }
        row.resize(static_cast<std::size_t>(d));
        std::memcpy(row.data(), buf.data() + pos + 4, bytes);
        try {
            out.push_back(row);
        } catch (const invalid_input& e) {
            throw parse_error(path.string() + ": " + e.what() + " at byte offset " + std::to_string(pos));
        }
        pos += 4 + bytes;
    }
    return out;
}

inline void write_fvecs(const std::filesystem::path& path, const VectorSet& vectors) {
    detail::ByteWriter w;
    const auto d = static_cast<std::int32_t>(vectors.dim());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        w.put(d);
        w.put_array(vectors.row(i), vectors.dim());
    }
    detail::write_file(path, w.buffer().data(), w.buffer().size());
}

/// Rows of 32-bit integers; rows may not differ in length.
inline std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    std::vector<std::vector<std::int32_t>> out;
    std::size_t pos = 0;
    std::int32_t dim = 0;
    while (pos < buf.size()) {
        if (buf.size() - pos < 4) {
            throw parse_error(path.string() + ": truncated record header at byte offset " + std::to_string(pos));
        }
        std::int32_t d;
        std::memcpy(&d, buf.data() + pos, 4);
        if (d <= 0 || (dim != 0 && d != dim)) {
            throw parse_error(path.string() + ": bad dimensionality " + std::to_string(d) + " at byte offset " +
                              std::to_string(pos));
        }
        dim = d;
        const std::size_t bytes = static_cast<std::size_t>(d) * 4;
        if (buf.size() - pos - 4 < bytes) {
            throw parse_error(path.string() + ": truncated record at byte offset " + std::to_string(pos));
        }
        std::vector<std::int32_t> row(static_cast<std::size_t>(d));
        std::memcpy(row.data(), buf.data() + pos + 4, bytes);
        out.push_back(std::move(row));
        pos += 4 + bytes;
    }
    return out;
}

inline void write_ivecs(const std::filesystem::path& path, const std::vector<std::vector<std::int32_t>>& rows) {
    detail::ByteWriter w;
    for (const auto& r : rows) {
        if (r.empty()) throw invalid_input("write_ivecs: empty row");
        if (r.size() != rows.front().size()) throw invalid_input("write_ivecs: rows differ in length");
        w.put(static_cast<std::int32_t>(r.size()));
        w.put_array(r.data(), r.size());
    }
    detail::write_file(path, w.buffer().data(), w.buffer().size());
}

// ---------------------------------------------------------------------------
// Attributes

namespace detail {

inline double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
        throw parse_error(where + ": '" + std::string(s) + "' is not a finite number");
    }
    return v;
}

}  // namespace detail

/// Reads intervals from CSV (header "id,lo,hi", ids 0..n-1 in any order) or
/// from the binary twin-column format (n little-endian float64 lo values
/// followed by n hi values).
inline std::vector<Interval> read_attributes(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    const std::string_view text(buf.data(), buf.size());
    const std::string name = path.string();

    if (text.rfind("id,lo,hi", 0) != 0) {
        if (buf.size() % 16 != 0) {
            throw parse_error(name + ": neither a CSV with header 'id,lo,hi' nor a binary twin-column file (size " +
                              std::to_string(buf.size()) + " is not a multiple of 16)");
        }
        const std::size_t n = buf.size() / 16;
        std::vector<double> cols(2 * n);
        std::memcpy(cols.data(), buf.data(), buf.size());
        std::vector<Interval> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = Interval{cols[i], cols[n + i]};
            if (!std::isfinite(out[i].lo) || !std::isfinite(out[i].hi)) {
                throw parse_error(name + ": non-finite value at row " + std::to_string(i));
            }
            if (!(out[i].lo <= out[i].hi)) throw invalid_input(name + ": lo > hi at row " + std::to_string(i));
        }
        return out;
    }

    std::vector<std::pair<long long, Interval>> rows;
    std::size_t line_no = 1;
    std::size_t pos = text.find('\n');
    pos = pos == std::string_view::npos ? text.size() : pos + 1;
    if (auto hdr = text.substr(0, pos); hdr.find_first_not_of("id,lo,hi\r\n") != std::string_view::npos) {
        throw parse_error(name + ": bad header line");
    }
    while (pos < text.size()) {
        ++line_no;
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no);
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
            throw parse_error(where + ": expected three fields 'id,lo,hi'");
        }
        long long id = -1;
        const auto idtxt = line.substr(0, c1);
        auto [p, ec] = std::from_chars(idtxt.data(), idtxt.data() + idtxt.size(), id);
        if (ec != std::errc() || p != idtxt.data() + idtxt.size() || id < 0) {
            throw parse_error(where + ": bad id '" + std::string(idtxt) + "'");
        }
        const double lo = detail::parse_double(line.substr(c1 + 1, c2 - c1 - 1), where);
        const double hi = detail::parse_double(line.substr(c2 + 1), where);
        if (!(lo <= hi)) {
            throw invalid_input(where + ": lo > hi at row " + std::to_string(id));
        }
        rows.emplace_back(id, Interval{lo, hi});
    }
    std::vector<Interval> out(rows.size());
    std::vector<bool> seen(rows.size(), false);
    for (const auto& [id, iv] : rows) {
        if (static_cast<std::size_t>(id) >= rows.size() || seen[static_cast<std::size_t>(id)]) {
            throw parse_error(name + ": ids must be a permutation of 0.." + std::to_string(rows.size() - 1) +
                              " (offending id " + std::to_string(id) + ")");
        }
        seen[static_cast<std::size_t>(id)] = true;
        out[static_cast<std::size_t>(id)] = iv;
    }
    return out;
}

inline void write_attributes(const std::filesystem::path& path, std::span<const Interval> ranges) {
    std::ostringstream os;
    os << std::setprecision(17) << "id,lo,hi\n";
    for (std::size_t i = 0; i < ranges.size(); ++i) os << i << ',' << ranges[i].lo << ',' << ranges[i].hi << '\n';
    const auto s = os.str();
    detail::write_file(path, s.data(), s.size());
}

/// Scalar attribute per object (one number per line) as point intervals.
inline std::vector<Interval> read_scalar_attributes(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    std::vector<Interval> out;
    std::istringstream in(std::string(buf.begin(), buf.end()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const double v = detail::parse_double(line, path.string() + ":" + std::to_string(line_no));
        out.push_back(Interval{v, v});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset manifest

struct DatasetManifest {
    std::string vector_path;
    std::string vector_format = "fvecs";
    std::string attribute_path;
    std::size_t dim = 0;
    std::size_t count = 0;
    std::string checksum;  // crc32 of the vector bytes followed by the attribute bytes, hex
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
}

inline std::string hex32(std::uint32_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(8) << std::setfill('0') << v;
    return os.str();
}

inline std::string dataset_checksum(const std::filesystem::path& vec, const std::filesystem::path& attr) {
    const auto a = read_file(vec);
    const auto b = read_file(attr);
    std::uint32_t c = crc32_of(a.data(), a.size());
    c = crc32_of(b.data(), b.size(), c);
    return hex32(c);
}

}  // namespace detail

/// Creates a manifest for existing files, reading them to fill dim, count
/// and checksum. Relative paths are stored as given.
inline DatasetManifest make_manifest(const std::string& vector_path, const std::string& attribute_path,
                                     const std::filesystem::path& base = ".") {
    const auto vp = detail::resolve(base, vector_path);
    const auto ap = detail::resolve(base, attribute_path);
    const auto vs = read_fvecs(vp);
    const auto rs = read_attributes(ap);
    if (vs.size() != rs.size()) {
        throw invalid_input("manifest: " + std::to_string(vs.size()) + " vectors but " + std::to_string(rs.size()) +
                            " attribute rows");
    }
    return DatasetManifest{vector_path, "fvecs", attribute_path, vs.dim(), vs.size(),
                           detail::dataset_checksum(vp, ap)};
}

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    nlohmann::json j = {{"vector_path", m.vector_path}, {"vector_format", m.vector_format},
                        {"attribute_path", m.attribute_path}, {"dim", m.dim},
                        {"count", m.count}, {"checksum", m.checksum}};
    const auto s = j.dump(2) + "\n";
    detail::write_file(path, s.data(), s.size());
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.begin(), buf.end());
        DatasetManifest m;
        m.vector_path = j.at("vector_path").get<std::string>();
        m.vector_format = j.value("vector_format", std::string("fvecs"));
        m.attribute_path = j.at("attribute_path").get<std::string>();
        m.dim = j.at("dim").get<std::size_t>();
        m.count = j.at("count").get<std::size_t>();
        m.checksum = j.at("checksum").get<std::string>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

/// Loads and verifies the dataset a manifest describes. Relative paths are
/// resolved against the manifest's directory.
inline std::shared_ptr<Dataset> load_dataset(const std::filesystem::path& manifest_path) {
    const auto m = read_manifest(manifest_path);
    if (m.vector_format != "fvecs") throw format_error("manifest: unsupported vector format '" + m.vector_format + "'");
    const auto base = manifest_path.parent_path();
    const auto vp = detail::resolve(base, m.vector_path);
    const auto ap = detail::resolve(base, m.attribute_path);
    const auto sum = detail::dataset_checksum(vp, ap);
    if (sum != m.checksum) {
        throw checksum_error("manifest: checksum mismatch (expected " + m.checksum + ", files give " + sum + ")");
    }
    auto ds = std::make_shared<Dataset>();
    ds->vectors = read_fvecs(vp);
    ds->ranges = read_attributes(ap);
    if (ds->vectors.size() != m.count || ds->ranges.size() != m.count) {
        throw invalid_input("manifest: count " + std::to_string(m.count) + " does not match files (" +
                            std::to_string(ds->vectors.size()) + " vectors, " + std::to_string(ds->ranges.size()) +
                            " intervals)");
    }
    if (ds->vectors.dim() != m.dim && m.count > 0) {
        throw invalid_input("manifest: dimensionality " + std::to_string(m.dim) + " does not match vector file (" +
                            std::to_string(ds->vectors.dim()) + ")");
    }
    ds->validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Index archive
//
// Layout (little-endian):
//   "MSTG" u32 version u8 variant-mask u64 m u64 ef_construction
//   u64 dim u64 n  f32[n*dim] vectors  f64[2n] intervals (lo, hi per object)
//   u64 |A|  f64[|A|] domain values
//   per variant present, in T, T', T'' order:
//     u8 variant  i32[|A|] version of epochs 1..|A|  u64 node count
//     per tree node: u64 graph size  u32 entry point (or 0xffffffff)
//       u32[size] ids  i32[size] epochs
//       per vertex: u32 degree, then (u32 to, i32 b, i32 e) per edge
//   u32 crc32 of everything before it

inline constexpr std::uint32_t archive_version = 1;
inline constexpr char archive_magic[4] = {'M', 'S', 'T', 'G'};

inline std::vector<std::uint8_t> serialize_index(const IndexSet& set) {
    if (set.empty()) throw invalid_input("save_index: no index to save");
    detail::ByteWriter w;
    const Dataset& data = set.dataset();
    const auto& dom = set.domain();
    std::uint8_t mask = 0;
    for (Variant v : set.available()) mask |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(v));

    w.put_bytes(std::string_view(archive_magic, 4));
    w.put(archive_version);
    w.put(mask);
    w.put(static_cast<std::uint64_t>(set.params().m));
    w.put(static_cast<std::uint64_t>(set.params().ef_construction));
    w.put(static_cast<std::uint64_t>(data.vectors.dim()));
    w.put(static_cast<std::uint64_t>(data.size()));
    if (data.size() > 0) w.put_array(data.vectors.row(0), data.size() * data.vectors.dim());
    for (const auto& r : data.ranges) {
        w.put(r.lo);
        w.put(r.hi);
    }
    w.put(static_cast<std::uint64_t>(dom.size()));
    for (Rank x = 1; x <= dom.size(); ++x) w.put(dom.value(x));

    for (Variant v : set.available()) {
        const MstgIndex& idx = *set.get(v);
        w.put(static_cast<std::uint8_t>(v));
        for (Epoch e = 1; e <= dom.size(); ++e) w.put(static_cast<std::int32_t>(idx.cursor().version_of(e)));
        w.put(static_cast<std::uint64_t>(idx.graphs().size()));
        for (const auto& g : idx.graphs()) {
            w.put(static_cast<std::uint64_t>(g.size()));
            w.put(g.empty() ? std::uint32_t{0xffffffffu} : g.entry_point());
            w.put_array(g.ids().data(), g.size());
            w.put_array(g.epochs().data(), g.size());
            for (std::uint32_t u = 0; u < g.size(); ++u) {
                const auto edges = g.edges(u);
                w.put(static_cast<std::uint32_t>(edges.size()));
                for (const auto& e : edges) {
                    w.put(e.to);
                    w.put(e.label.b);
                    w.put(e.label.e);
                }
            }
        }
    }
    auto& buf = w.buffer();
    const std::uint32_t crc = detail::crc32_of(buf.data(), buf.size());
    w.put(crc);
    return std::move(buf);
}

inline IndexSet deserialize_index(const std::vector<std::uint8_t>& buf) {
    if (buf.size() < 8 || std::memcmp(buf.data(), archive_magic, 4) != 0) {
        throw format_error("archive: bad magic (not an MSTG index archive)");
    }
    std::uint32_t version;
    std::memcpy(&version, buf.data() + 4, 4);
    if (version != archive_version) {
        throw format_error("archive: format version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(archive_version) + ")");
    }
    if (buf.size() < 12) throw checksum_error("archive: file too short for a checksum");
    std::uint32_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
    if (detail::crc32_of(buf.data(), buf.size() - 4) != stored) {
        throw checksum_error("archive: checksum mismatch (file truncated or corrupted)");
    }

    detail::ByteReader r(buf.data(), buf.size() - 4);
    r.get<std::uint32_t>("magic");
    r.get<std::uint32_t>("version");
    const auto mask = r.get<std::uint8_t>("variant mask");
    GraphParams params;
    params.m = r.get<std::uint64_t>("m");
    params.ef_construction = r.get<std::uint64_t>("ef_construction");
    const auto dim = r.get<std::uint64_t>("dim");
    const auto n = r.get<std::uint64_t>("object count");
    if (dim == 0 || n == 0 || n > r.remaining() / (4 * dim)) throw format_error("archive: bad dataset header");

    auto data = std::make_shared<Dataset>();
    std::vector<float> flat(n * dim);
    r.get_array(flat.data(), flat.size(), "vectors");
    data->vectors = VectorSet(dim, std::move(flat));
    data->ranges.resize(n);
    for (auto& iv : data->ranges) {
        iv.lo = r.get<double>("interval");
        iv.hi = r.get<double>("interval");
    }
    data->validate();

    const auto dsize = r.get<std::uint64_t>("domain size");
    if (dsize > r.remaining() / 8) throw format_error("archive: bad domain size");
    std::vector<double> values(dsize);
    r.get_array(values.data(), values.size(), "domain");
    AttrDomain domain(std::move(values));
    if (!(domain == AttrDomain::from_intervals(data->ranges))) {
        throw format_error("archive: attribute domain does not match the stored intervals");
    }

    IndexSet set;
    for (Variant expect : all_variants) {
        if (!(mask & (1u << static_cast<unsigned>(expect)))) continue;
        const auto v = r.get<std::uint8_t>("variant");
        if (v != static_cast<std::uint8_t>(expect)) throw format_error("archive: variant sections out of order");
        const VersionCursor cursor(expect != Variant::T, domain.size());
        for (Epoch e = 1; e <= domain.size(); ++e) {
            if (r.get<std::int32_t>("epoch map") != cursor.version_of(e)) {
                throw format_error("archive: epoch map does not match variant " + std::string(to_string(expect)));
            }
        }
        const auto nodes = r.get<std::uint64_t>("node count");
        if (nodes > r.remaining()) throw format_error("archive: bad node count");
        std::vector<LabeledGraph> graphs;
        graphs.reserve(nodes);
        for (std::uint64_t t = 0; t < nodes; ++t) {
            const auto size = r.get<std::uint64_t>("graph size");
            if (size > n) throw format_error("archive: graph larger than the dataset");
            const auto entry = r.get<std::uint32_t>("entry point");
            std::vector<ObjectId> ids(size);
            std::vector<Epoch> epochs(size);
            r.get_array(ids.data(), size, "graph ids");
            r.get_array(epochs.data(), size, "graph epochs");
            if ((size == 0) != (entry == 0xffffffffu) || (size > 0 && entry != ids[0])) {
                throw format_error("archive: entry point mismatch in tree node " + std::to_string(t));
            }
            std::vector<std::vector<LabeledGraph::Edge>> adj(size);
            for (auto& list : adj) {
                const auto deg = r.get<std::uint32_t>("degree");
                if (deg > r.remaining() / 12) throw format_error("archive: bad degree");
                list.resize(deg);
                for (auto& e : list) {
                    e.to = r.get<std::uint32_t>("edge");
                    e.label.b = r.get<std::int32_t>("edge");
                    e.label.e = r.get<std::int32_t>("edge");
                }
            }
            try {
                graphs.push_back(LabeledGraph::restore(data->vectors, params, std::move(ids), std::move(epochs),
                                                       std::move(adj)));
            } catch (const invalid_input& e) {
                throw format_error("archive: tree node " + std::to_string(t) + ": " + e.what());
            }
        }
        try {
            set.add(MstgIndex::restore(data, domain, params, expect, std::move(graphs)));
        } catch (const invalid_input& e) {
            throw format_error(std::string("archive: ") + e.what());
        }
    }
    if (r.remaining() != 0) throw format_error("archive: trailing bytes before checksum");
    if (set.empty()) throw format_error("archive: no index variants");
    return set;
}

inline void save_index(const std::filesystem::path& path, const IndexSet& set) {
    const auto buf = serialize_index(set);
    detail::write_file(path, buf.data(), buf.size());
}

inline IndexSet load_index(const std::filesystem::path& path) {
    const auto raw = detail::read_file(path);
    std::vector<std::uint8_t> buf(raw.begin(), raw.end());
    return deserialize_index(buf);
}

// ---------------------------------------------------------------------------
// Workloads, ground truth, reports

inline nlohmann::json to_json(const Workload& w) {
    nlohmann::json qs = nlohmann::json::array();
    for (const auto& q : w.queries) {
        qs.push_back({{"vector", q.vector}, {"lo", q.range.lo}, {"hi", q.range.hi},
                      {"predicate", q.pred.to_string()}, {"selectivity", q.selectivity}});
    }
    return {{"target_selectivity", w.target_selectivity}, {"seed", w.seed},
            {"vector_source", w.vector_source}, {"queries", qs}};
}

inline Workload workload_from_json(const nlohmann::json& j) {
    Workload w;
    w.target_selectivity = j.at("target_selectivity").get<double>();
    w.seed = j.at("seed").get<std::uint64_t>();
    w.vector_source = j.value("vector_source", std::string());
    for (const auto& q : j.at("queries")) {
        Query x;
        x.vector = q.at("vector").get<std::vector<float>>();
        x.range = Interval{q.at("lo").get<double>(), q.at("hi").get<double>()};
        x.pred = parse_predicate(q.at("predicate").get<std::string>());
        x.selectivity = q.value("selectivity", 0.0);
        w.queries.push_back(std::move(x));
    }
    return w;
}

inline void save_workload(const std::filesystem::path& path, const Workload& w) {
    const auto s = to_json(w).dump() + "\n";
    detail::write_file(path, s.data(), s.size());
}

inline Workload load_workload(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    try {
        return workload_from_json(nlohmann::json::parse(buf.begin(), buf.end()));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

/// Ground truth as a pair of files: `<stem>.ivecs` holds ids and
/// `<stem>.fvecs` holds distances, k per row, padded with -1 / +inf.
inline void save_ground_truth(const std::filesystem::path& stem, const std::vector<std::vector<Neighbor>>& gt,
                              std::size_t k) {
    if (k == 0) throw invalid_input("save_ground_truth: k must be positive");
    std::vector<std::vector<std::int32_t>> ids;
    for (const auto& q : gt) {
        std::vector<std::int32_t> r(k, -1);
        for (std::size_t i = 0; i < std::min(k, q.size()); ++i) r[i] = static_cast<std::int32_t>(q[i].id);
        ids.push_back(std::move(r));
    }
    write_ivecs(std::filesystem::path(stem).concat(".ivecs"), ids);
    // written by hand: VectorSet rejects the +inf padding
    detail::ByteWriter w;
    for (const auto& q : gt) {
        w.put(static_cast<std::int32_t>(k));
        for (std::size_t i = 0; i < k; ++i) {
            w.put(i < q.size() ? q[i].dist : std::numeric_limits<float>::infinity());
        }
    }
    detail::write_file(std::filesystem::path(stem).concat(".fvecs"), w.buffer().data(), w.buffer().size());
}

inline std::vector<std::vector<Neighbor>> load_ground_truth(const std::filesystem::path& stem) {
    const auto ids = read_ivecs(std::filesystem::path(stem).concat(".ivecs"));
    const auto dpath = std::filesystem::path(stem).concat(".fvecs");
    const auto raw = detail::read_file(dpath);
    std::vector<std::vector<Neighbor>> out;
    std::size_t pos = 0;
    for (const auto& row : ids) {
        const std::size_t need = 4 + row.size() * 4;
        if (raw.size() - pos < need) {
            throw parse_error(dpath.string() + ": truncated at byte offset " + std::to_string(pos));
        }
        std::int32_t d;
        std::memcpy(&d, raw.data() + pos, 4);
        if (static_cast<std::size_t>(d) != row.size()) {
            throw parse_error(dpath.string() + ": row length mismatch at byte offset " + std::to_string(pos));
        }
        std::vector<Neighbor> q;
        for (std::size_t i = 0; i < row.size(); ++i) {
            float dist;
            std::memcpy(&dist, raw.data() + pos + 4 + 4 * i, 4);
            if (row[i] >= 0) q.push_back(Neighbor{static_cast<ObjectId>(row[i]), dist});
        }
        out.push_back(std::move(q));
        pos += need;
    }
    if (pos != raw.size()) throw parse_error(dpath.string() + ": more rows than the id file");
    return out;
}

inline nlohmann::json to_json(const BenchPoint& p) {
    return {{"method", p.method},
            {"L", p.L},
            {"k", p.k},
            {"queries", p.queries},
            {"recall", p.recall},
            {"rde", p.rde},
            {"qps", p.qps},
            {"mean_distance_computations", p.mean_distance_computations},
            {"partial_results", p.partial_results},
            {"rde_zero_excluded", p.rde_zero_excluded}};
}

/// One JSON object per line.
inline void write_report_line(std::ostream& os, const BenchPoint& p, const nlohmann::json& extra = {}) {
    auto j = to_json(p);
    if (extra.is_object()) j.update(extra);
    os << j.dump() << '\n';
}

inline void write_summary_table(std::ostream& os, const std::vector<BenchPoint>& points) {
    os << std::left << std::setw(12) << "method" << std::right << std::setw(7) << "L" << std::setw(10) << "recall"
       << std::setw(10) << "rde" << std::setw(12) << "qps" << std::setw(12) << "dist/q" << std::setw(9) << "partial"
       << '\n';
    for (const auto& p : points) {
        os << std::left << std::setw(12) << p.method << std::right << std::setw(7) << p.L << std::fixed
           << std::setprecision(4) << std::setw(10) << p.recall << std::setw(10) << p.rde << std::setprecision(1)
           << std::setw(12) << p.qps << std::setw(12) << p.mean_distance_computations << std::setw(9)
           << p.partial_results << '\n';
        os.unsetf(std::ios::fixed);
    }
}

}  // namespace mstg
