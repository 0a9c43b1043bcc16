#include "lsmsim/event_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include <json.hpp>

#include "lsmsim/error.hpp"

namespace lsmsim {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  auto bits = static_cast<std::uint64_t>(static_cast<std::make_unsigned_t<T>>(value));
  std::array<char, sizeof(T)> buf{};
  for (auto& b : buf) {
    b = static_cast<char>(bits & 0xFF);
    bits >>= 8;
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw DataError("event file truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | buf[i];
  return static_cast<T>(static_cast<std::make_unsigned_t<T>>(bits));
}

}  // namespace

void write_events_jsonl(std::ostream& out, const EventStream& stream) {
  out << nlohmann::json{{"channels", stream.num_channels}, {"duration", stream.duration}}.dump() << '\n';
  for (const Event& e : stream.events) {
    out << nlohmann::json{{"t", e.t}, {"c", e.channel}, {"p", static_cast<int>(e.polarity)}}.dump()
        << '\n';
  }
}

EventStream read_events_jsonl(std::istream& in) {
  EventStream stream;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto obj = nlohmann::json::parse(line);
      if (!have_header) {
        stream.num_channels = obj.at("channels").get<std::uint32_t>();
        stream.duration = obj.at("duration").get<std::uint64_t>();
        have_header = true;
        continue;
      }
      const int p = obj.at("p").get<int>();
      stream.events.push_back({obj.at("t").get<std::uint64_t>(), obj.at("c").get<std::uint32_t>(),
                               static_cast<std::int8_t>(p)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("event jsonl line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw DataError("event jsonl: missing header line");
  try {
    stream.validate();
  } catch (const Error& e) {
    throw DataError(std::string("event jsonl: ") + e.what());
  }
  return stream;
}

void write_events_binary(std::ostream& out, const EventStream& stream) {
  put_le<std::uint32_t>(out, kEventFileMagic);
  put_le<std::uint32_t>(out, stream.num_channels);
  put_le<std::uint64_t>(out, stream.duration);
  put_le<std::uint64_t>(out, stream.events.size());
  for (const Event& e : stream.events) {
    put_le<std::uint64_t>(out, e.t);
    put_le<std::uint32_t>(out, e.channel);
    put_le<std::int8_t>(out, e.polarity);
    const char pad[3] = {0, 0, 0};
    out.write(pad, 3);
  }
}

EventStream read_events_binary(std::istream& in) {
  if (get_le<std::uint32_t>(in) != kEventFileMagic) throw DataError("event file: bad magic");
  EventStream stream;
  stream.num_channels = get_le<std::uint32_t>(in);
  stream.duration = get_le<std::uint64_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  stream.events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    Event e;
    e.t = get_le<std::uint64_t>(in);
    e.channel = get_le<std::uint32_t>(in);
    e.polarity = get_le<std::int8_t>(in);
    char pad[3];
    in.read(pad, 3);
    if (!in) throw DataError("event file truncated");
    stream.events.push_back(e);
  }
  try {
    stream.validate();
  } catch (const Error& e) {
    throw DataError(std::string("event file: ") + e.what());
  }
  return stream;
}

void save_events(const std::filesystem::path& path, const EventStream& stream) {
  const bool text = path.extension() == ".jsonl";
  std::ofstream out(path, text ? std::ios::out : std::ios::out | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  if (text) {
    write_events_jsonl(out, stream);
  } else {
    write_events_binary(out, stream);
  }
}

EventStream load_events(const std::filesystem::path& path) {
  const bool text = path.extension() == ".jsonl";
  std::ifstream in(path, text ? std::ios::in : std::ios::in | std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return text ? read_events_jsonl(in) : read_events_binary(in);
}

EventStream decode_nmnist(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 5 != 0) throw DataError("N-MNIST record stream length is not a multiple of 5");
  EventStream stream;
  stream.num_channels = kNmnistSensorSide * kNmnistSensorSide;
  stream.events.reserve(bytes.size() / 5);
  for (std::size_t i = 0; i < bytes.size(); i += 5) {
    const std::uint32_t x = bytes[i];
    const std::uint32_t y = bytes[i + 1];
    if (x >= kNmnistSensorSide || y >= kNmnistSensorSide) {
      throw DataError("N-MNIST record " + std::to_string(i / 5) + ": address outside 34x34 sensor");
    }
    const std::uint64_t t = (static_cast<std::uint64_t>(bytes[i + 2] & 0x7F) << 16) |
                            (static_cast<std::uint64_t>(bytes[i + 3]) << 8) | bytes[i + 4];
    const std::int8_t polarity = (bytes[i + 2] & 0x80) ? 1 : -1;
    stream.events.push_back({t, static_cast<std::uint32_t>(y * kNmnistSensorSide + x), polarity});
  }
  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  stream.duration = stream.events.empty() ? 1 : stream.events.back().t + 1;
  return stream;
}

EventStream load_nmnist_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_nmnist(bytes);
}

}  // namespace lsmsim
