#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mapgen::zip {

struct Entry {
  std::string name;
  std::vector<std::uint8_t> data;
};

/// ZIP archive with every entry STORED (PNG payloads are already deflated). Entry names must
/// be unique; timestamps are fixed so equal inputs give equal bytes.
std::vector<std::uint8_t> write(std::span<const Entry> entries);

/// Reads archives produced by write() and any other STORED-only ZIP. Throws DataError on
/// compressed entries, bad signatures or CRC mismatches.
std::vector<Entry> read(std::span<const std::uint8_t> bytes);

}  // namespace mapgen::zip
