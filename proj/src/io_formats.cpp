#include "aimc/io_formats.hpp"

#include "json.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace aimc {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void atomic_write(const fs::path& path, std::string_view bytes)
{
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw FormatError("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw FormatError("cannot replace " + path.string() + ": " + ec.message());
    }
}

namespace {

template <class T>
void append_le(std::string& out, T v)
{
    auto bits = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bits.begin(), bits.end());
    }
    out.append(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <class T>
T read_le(const char* p)
{
    std::array<std::uint8_t, sizeof(T)> bits;
    std::memcpy(bits.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bits.begin(), bits.end());
    }
    return std::bit_cast<T>(bits);
}

std::size_t width_of(ValuePrecision p)
{
    return p == ValuePrecision::f32 ? 4 : 8;
}

std::string precision_name(ValuePrecision p)
{
    return p == ValuePrecision::f32 ? "float32" : "float64";
}

ValuePrecision precision_from_name(const std::string& s)
{
    if (s == "float32") {
        return ValuePrecision::f32;
    }
    if (s == "float64") {
        return ValuePrecision::f64;
    }
    throw FormatError("unknown tensor precision '" + s + "'");
}

// Row-major serialization of a matrix (vectors are n x 1).
std::string encode_tensor(const Matrix& m, ValuePrecision prec)
{
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * width_of(prec));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (prec == ValuePrecision::f32) {
                append_le(out, static_cast<float>(m(r, c)));
            } else {
                append_le(out, m(r, c));
            }
        }
    }
    return out;
}

struct PendingTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::string bytes;
};

fs::path tensor_path(const fs::path& manifest, const std::string& name)
{
    return manifest.parent_path() / (manifest.stem().string() + "." + name + ".bin");
}

fs::path write_manifest(json doc, const std::vector<PendingTensor>& tensors, const fs::path& manifest)
{
    json list = json::array();
    for (const auto& t : tensors) {
        const fs::path file = tensor_path(manifest, t.name);
        atomic_write(file, t.bytes);
        const auto* data = reinterpret_cast<const std::uint8_t*>(t.bytes.data());
        list.push_back({{"name", t.name},
                        {"file", file.filename().string()},
                        {"shape", t.shape},
                        {"crc32", crc32_of({data, t.bytes.size()})}});
    }
    doc["tensors"] = std::move(list);
    atomic_write(manifest, doc.dump(2) + "\n");
    return manifest;
}

PendingTensor pending(const std::string& name, const Matrix& m, bool is_vector, ValuePrecision prec)
{
    PendingTensor t;
    t.name = name;
    if (is_vector) {
        t.shape = {static_cast<std::size_t>(m.rows())};
    } else {
        t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    }
    t.bytes = encode_tensor(m, prec);
    return t;
}

json manifest_header(const std::string& kind, ValuePrecision prec)
{
    return {{"format", "aimc-weights"},
            {"format_version", kWeightFormatVersion},
            {"kind", kind},
            {"precision", precision_name(prec)}};
}

Matrix load_tensor(const fs::path& manifest, const json& entry, ValuePrecision prec,
                   std::size_t rows, std::size_t cols)
{
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    std::size_t declared = 1;
    for (auto s : shape) {
        declared *= s;
    }
    if (declared != rows * cols) {
        throw FormatError("tensor '" + name + "' shape disagrees with the declared dimensions");
    }
    const fs::path file = manifest.parent_path() / entry.at("file").get<std::string>();
    const std::string bytes = read_file(file);
    const std::size_t width = width_of(prec);
    if (bytes.size() != declared * width) {
        throw FormatError("tensor '" + name + "' has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(declared * width));
    }
    const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
    if (crc32_of({data, bytes.size()}) != entry.at("crc32").get<std::uint32_t>()) {
        throw FormatError("tensor '" + name + "' fails its CRC-32 check");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const char* p = bytes.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c, p += width) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                prec == ValuePrecision::f32 ? static_cast<double>(read_le<float>(p)) : read_le<double>(p);
        }
    }
    return m;
}

const json& find_tensor(const json& doc, const std::string& name)
{
    for (const auto& t : doc.at("tensors")) {
        if (t.at("name").get<std::string>() == name) {
            return t;
        }
    }
    throw FormatError("manifest lacks tensor '" + name + "'");
}

}  // namespace

fs::path save_weights(const RbmParams& p, const fs::path& manifest, ValuePrecision prec)
{
    p.validate();
    json doc = manifest_header("rbm", prec);
    doc["rbm"] = {{"n_spins", p.n_spins}, {"alpha", p.alpha}};
    std::vector<PendingTensor> tensors;
    tensors.push_back(pending("weights", p.weights, false, prec));
    tensors.push_back(pending("bias", p.bias, true, prec));
    return write_manifest(std::move(doc), tensors, manifest);
}

fs::path save_weights(const MlpParams& p, const fs::path& manifest, ValuePrecision prec)
{
    p.validate();
    json doc = manifest_header("mlp", prec);
    std::vector<std::size_t> dims{p.input_dim()};
    for (const auto& l : p.layers) {
        dims.push_back(static_cast<std::size_t>(l.weight.rows()));
    }
    doc["mlp"] = {{"activation", std::string(to_string(p.hidden_activation))}, {"layer_dims", dims}};
    std::vector<PendingTensor> tensors;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        tensors.push_back(pending(prefix + ".weight", p.layers[l].weight, false, prec));
        tensors.push_back(pending(prefix + ".bias", p.layers[l].bias, true, prec));
    }
    return write_manifest(std::move(doc), tensors, manifest);
}

ModelParams load_weights(const fs::path& manifest)
{
    json doc;
    try {
        doc = json::parse(read_file(manifest));
    } catch (const json::parse_error& e) {
        throw FormatError("malformed weight manifest " + manifest.string() + ": " + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "aimc-weights") {
            throw FormatError("not a weight manifest: " + manifest.string());
        }
        if (doc.at("format_version").get<int>() != kWeightFormatVersion) {
            throw FormatError("unsupported weight manifest version");
        }
        const auto prec = precision_from_name(doc.at("precision").get<std::string>());
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "rbm") {
            RbmParams p;
            p.n_spins = doc.at("rbm").at("n_spins").get<std::size_t>();
            p.alpha = doc.at("rbm").at("alpha").get<std::size_t>();
            p.weights = load_tensor(manifest, find_tensor(doc, "weights"), prec, p.hidden(), p.n_spins);
            p.bias = load_tensor(manifest, find_tensor(doc, "bias"), prec, p.hidden(), 1);
            p.validate();
            return p;
        }
        if (kind == "mlp") {
            MlpParams p;
            p.hidden_activation = activation_from_string(doc.at("mlp").at("activation").get<std::string>());
            const auto dims = doc.at("mlp").at("layer_dims").get<std::vector<std::size_t>>();
            if (dims.size() < 2) {
                throw FormatError("MLP manifest needs at least two layer widths");
            }
            for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
                const std::string prefix = "layer" + std::to_string(l);
                DenseLayer layer;
                layer.weight = load_tensor(manifest, find_tensor(doc, prefix + ".weight"), prec,
                                           dims[l + 1], dims[l]);
                layer.bias = load_tensor(manifest, find_tensor(doc, prefix + ".bias"), prec, dims[l + 1], 1);
                p.layers.push_back(std::move(layer));
            }
            p.validate();
            return p;
        }
        throw FormatError("unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw FormatError("invalid weight manifest " + manifest.string() + ": " + e.what());
    }
}

const std::vector<std::string>& event_column_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        auto add = [&](const std::string& obj) {
            for (const char* q : {"_pt", "_eta", "_phi"}) {
                out.push_back(obj + q);
            }
        };
        add("met");
        for (int i = 1; i <= 4; ++i) {
            add("e" + std::to_string(i));
        }
        for (int i = 1; i <= 4; ++i) {
            add("mu" + std::to_string(i));
        }
        for (int i = 1; i <= 10; ++i) {
            add("j" + std::to_string(i));
        }
        return out;
    }();
    return names;
}

namespace {

void append_number(std::string& out, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    out.append(buf, res.ptr);
}

std::vector<std::string_view> split_row(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_cell(std::string_view cell, std::size_t line_no)
{
    cell = trim(cell);
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                          std::string(cell) + "'");
    }
    return v;
}

}  // namespace

std::string format_events(std::span<const EventRecord> events)
{
    const bool labelled = !events.empty() && std::all_of(events.begin(), events.end(), [](const auto& e) {
        return e.is_anomaly.has_value();
    });
    std::string out;
    const auto& names = event_column_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        out += (i ? "," : "") + names[i];
    }
    if (labelled) {
        out += ",is_anomaly";
    }
    out += '\n';
    for (const auto& e : events) {
        for (std::size_t f = 0; f < kEventFeatures; ++f) {
            if (f) {
                out += ',';
            }
            append_number(out, e.features[f]);
        }
        if (labelled) {
            out += *e.is_anomaly ? ",1" : ",0";
        }
        out += '\n';
    }
    return out;
}

std::vector<EventRecord> parse_events(std::string_view text)
{
    std::vector<EventRecord> out;
    std::size_t line_no = 0;
    bool have_header = false;
    bool labelled = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_row(line);
        if (!have_header) {
            const auto& names = event_column_names();
            if (cells.size() != names.size() && cells.size() != names.size() + 1) {
                throw FormatError("header has " + std::to_string(cells.size()) +
                                  " columns, expected 57 or 58");
            }
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (trim(cells[i]) != names[i]) {
                    throw FormatError("header column " + std::to_string(i + 1) + " is '" +
                                      std::string(trim(cells[i])) + "', expected '" + names[i] + "'");
                }
            }
            labelled = cells.size() == names.size() + 1;
            if (labelled && trim(cells.back()) != "is_anomaly") {
                throw FormatError("58th column must be is_anomaly");
            }
            have_header = true;
            continue;
        }
        const std::size_t expected = kEventFeatures + (labelled ? 1 : 0);
        if (cells.size() != expected) {
            throw FormatError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " columns, expected " + std::to_string(expected));
        }
        EventRecord e;
        for (std::size_t f = 0; f < kEventFeatures; ++f) {
            e.features[f] = parse_cell(cells[f], line_no);
        }
        if (labelled) {
            const double flag = parse_cell(cells.back(), line_no);
            if (flag != 0.0 && flag != 1.0) {
                throw FormatError("line " + std::to_string(line_no) + ": is_anomaly must be 0 or 1");
            }
            e.is_anomaly = flag == 1.0;
        }
        try {
            e.validate();
        } catch (const DomainError& err) {
            throw FormatError("line " + std::to_string(line_no) + ": " + err.what());
        }
        out.push_back(e);
    }
    // A file without any rows (not even a header) is an empty table.
    return out;
}

void save_events(std::span<const EventRecord> events, const fs::path& path)
{
    atomic_write(path, format_events(events));
}

std::vector<EventRecord> load_events(const fs::path& path)
{
    return parse_events(read_file(path));
}

}  // namespace aimc
