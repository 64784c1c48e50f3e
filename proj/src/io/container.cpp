#include "ttlab/io/container.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "ttlab/errors.hpp"

namespace ttlab::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t offset() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == bytes_.size(); }

    std::uint64_t uint(int width, const char* what) {
        need(static_cast<std::uint64_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::uint64_t>(width);
        return v;
    }

    std::string_view take(std::uint64_t n, const char* what) {
        need(n, what);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void need(std::uint64_t n, const char* what) const {
        if (n > bytes_.size() - pos_) throw FormatError(std::string("truncated ") + what, pos_);
    }

private:
    std::string_view bytes_;
    std::uint64_t pos_ = 0;
};

}  // namespace

std::string encode(const Container& c) {
    std::string out(kMagic);
    put_u32(out, kVersion);
    const std::string manifest = c.manifest.dump();
    put_u64(out, manifest.size());
    out += manifest;
    put_u64(out, c.records.size());
    for (const NamedTensor& r : c.records) {
        put_u32(out, static_cast<std::uint32_t>(r.name.size()));
        out += r.name;
        put_u32(out, static_cast<std::uint32_t>(r.value.rank()));
        for (std::size_t d : r.value.shape()) put_u64(out, d);
        put_u64(out, r.value.size());
        for (double v : r.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

Container decode(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(kMagic.size(), "magic") != kMagic) throw FormatError("bad magic", 0);
    const std::uint64_t version_at = in.offset();
    if (in.uint(4, "version") != kVersion) throw FormatError("unsupported container version", version_at);

    Container c;
    const std::uint64_t manifest_len = in.uint(8, "manifest length");
    const std::uint64_t manifest_at = in.offset();
    const std::string_view manifest = in.take(manifest_len, "manifest");
    try {
        c.manifest = nlohmann::json::parse(manifest);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), manifest_at);
    }
    if (!c.manifest.is_object()) throw FormatError("manifest must be a JSON object", manifest_at);

    const std::uint64_t count = in.uint(8, "record count");
    for (std::uint64_t r = 0; r < count; ++r) {
        NamedTensor rec;
        const std::uint64_t name_len = in.uint(4, "record name length");
        rec.name = std::string(in.take(name_len, "record name"));
        const std::uint64_t rank = in.uint(4, "record rank");
        if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank), in.offset() - 4);
        Shape shape;
        std::uint64_t declared = 1;
        for (std::uint64_t i = 0; i < rank; ++i) {
            const std::uint64_t d = in.uint(8, "record dimension");
            shape.push_back(static_cast<std::size_t>(d));
            declared *= d;
        }
        const std::uint64_t length_at = in.offset();
        const std::uint64_t length = in.uint(8, "record length");
        if (length != declared) {
            throw FormatError("record '" + rec.name + "' declares " + std::to_string(declared) +
                                  " elements but stores " + std::to_string(length),
                              length_at);
        }
        if (length > bytes.size() / 8) throw FormatError("truncated record data", in.offset());
        in.need(length * 8, "record data");
        std::vector<double> data(length);
        for (std::uint64_t i = 0; i < length; ++i) data[i] = std::bit_cast<double>(in.uint(8, "record data"));
        rec.value = Tensor(std::move(shape), std::move(data));
        c.records.push_back(std::move(rec));
    }
    if (!in.at_end()) throw FormatError("trailing bytes after last record", in.offset());
    return c;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save(const Container& c, const std::filesystem::path& path) { write_file(path, encode(c)); }

Container load(const std::filesystem::path& path) { return decode(read_file(path)); }

const Tensor& find_record(const Container& c, std::string_view name) {
    for (const auto& r : c.records) {
        if (r.name == name) return r.value;
    }
    throw FormatError("missing record '" + std::string(name) + "'", 0);
}

}  // namespace ttlab::io
