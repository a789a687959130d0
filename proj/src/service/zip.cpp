#include "mapgen/service/zip.hpp"

#include <zlib.h>

#include <set>

#include "mapgen/errors.hpp"

namespace mapgen::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
// 1980-01-01 00:00 in DOS format
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, v & 0xffff);
  put16(out, v >> 16);
}

std::uint32_t crc(std::span<const std::uint8_t> data) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
}

struct Reader {
  std::span<const std::uint8_t> b;
  std::uint32_t u16(std::size_t at) const {
    if (at + 2 > b.size()) throw DataError("zip: truncated archive");
    return b[at] | (b[at + 1] << 8);
  }
  std::uint32_t u32(std::size_t at) const { return u16(at) | (u16(at + 2) << 16); }
};

}  // namespace

std::vector<std::uint8_t> write(std::span<const Entry> entries) {
  std::vector<std::uint8_t> out, central;
  std::set<std::string> names;
  for (const auto& e : entries) {
    if (!names.insert(e.name).second) throw DataError("zip: duplicate entry " + e.name);
    if (e.data.size() > 0xffffffffu || out.size() > 0xffffffffu) throw DataError("zip: archive too large");
    const auto offset = static_cast<std::uint32_t>(out.size());
    const std::uint32_t c = crc(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto name_len = static_cast<std::uint32_t>(e.name.size());

    put32(out, kLocalSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, c);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.insert(out.end(), e.data.begin(), e.data.end());

    put32(central, kCentralSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, c);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central.insert(central.end(), e.name.begin(), e.name.end());
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read(std::span<const std::uint8_t> bytes) {
  const Reader r{bytes};
  if (bytes.size() < 22) throw DataError("zip: archive too short");
  std::size_t end = bytes.size() - 22;
  while (r.u32(end) != kEndSig) {
    if (end == 0 || bytes.size() - end > 22 + 0xffff) throw DataError("zip: no end-of-central-directory record");
    --end;
  }
  const std::uint32_t count = r.u16(end + 10);
  std::size_t at = r.u32(end + 16);
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (r.u32(at) != kCentralSig) throw DataError("zip: bad central directory entry");
    const std::uint32_t method = r.u16(at + 10);
    const std::uint32_t c = r.u32(at + 16);
    const std::uint32_t size = r.u32(at + 20);
    const std::uint32_t name_len = r.u16(at + 28), extra_len = r.u16(at + 30), comment_len = r.u16(at + 32);
    const std::uint32_t local = r.u32(at + 42);
    if (at + 46 + name_len > bytes.size()) throw DataError("zip: truncated archive");
    Entry e;
    e.name.assign(reinterpret_cast<const char*>(bytes.data() + at + 46), name_len);
    if (method != 0) throw DataError("zip: entry " + e.name + " is compressed; only stored entries are supported");
    if (r.u32(local) != kLocalSig) throw DataError("zip: bad local header for " + e.name);
    const std::size_t data_at = local + 30 + r.u16(local + 26) + r.u16(local + 28);
    if (data_at + size > bytes.size()) throw DataError("zip: truncated data for " + e.name);
    e.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_at),
                  bytes.begin() + static_cast<std::ptrdiff_t>(data_at + size));
    if (crc(e.data) != c) throw DataError("zip: CRC mismatch in " + e.name);
    entries.push_back(std::move(e));
    at += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

}  // namespace mapgen::zip
