#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/gradcore/graph.hpp"

namespace ttlab::io {

// Shared on-disk container for checkpoints, datasets and adversarial clip
// sets: a JSON manifest followed by length-prefixed named tensor records.
// All integers little-endian, all tensor elements IEEE-754 binary64 LE.
// The byte layout is documented in docs/formats.md.
struct Container {
    nlohmann::json manifest = nlohmann::json::object();
    std::vector<NamedTensor> records;
};

inline constexpr std::string_view kMagic = "TTLBCNT1";
inline constexpr std::uint32_t kVersion = 1;

std::string encode(const Container& c);
// Throws FormatError (with byte offset) on any inconsistency.
Container decode(std::string_view bytes);

// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

void save(const Container& c, const std::filesystem::path& path);
Container load(const std::filesystem::path& path);

// Index of the record called `name`, or throws FormatError.
const Tensor& find_record(const Container& c, std::string_view name);

}  // namespace ttlab::io
