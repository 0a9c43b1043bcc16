#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lsmsim/events.hpp"

namespace lsmsim {

inline constexpr std::uint32_t kEventFileMagic = 0x4C534D45;  // "LSME"
inline constexpr std::size_t kNmnistSensorSide = 34;

// JSON-lines: header {"channels":U,"duration":µs}, then one {"t":..,"c":..,"p":±1} per line.
void write_events_jsonl(std::ostream& out, const EventStream& stream);
EventStream read_events_jsonl(std::istream& in);

// Packed little-endian binary: u32 magic, u32 channels, u64 duration, u64 count,
// then count × (u64 t, u32 c, i8 p, 3 pad bytes).
void write_events_binary(std::ostream& out, const EventStream& stream);
EventStream read_events_binary(std::istream& in);

/// Picks the format from the extension: ".jsonl" is text, anything else binary.
void save_events(const std::filesystem::path& path, const EventStream& stream);
EventStream load_events(const std::filesystem::path& path);

/// Decodes N-MNIST 5-byte AER records. Channel = y·34 + x; bit 7 of byte 2 set
/// means positive polarity. The stream duration is the last timestamp + 1.
EventStream decode_nmnist(std::span<const std::uint8_t> bytes);
EventStream load_nmnist_file(const std::filesystem::path& path);

}  // namespace lsmsim
