#include "mbo/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "mbo/errors.hpp"

namespace mbo {

namespace fs = std::filesystem;

namespace {

fs::path header_path(const fs::path& p) {
  if (p.extension() == ".hdr") return p;
  fs::path h = p;
  h += ".hdr";
  return h;
}

void write_header(const fs::path& stem, const char* format, const GridSpec& grid, int num_phases,
                  std::int64_t step, double time) {
  std::ofstream out(header_path(stem));
  if (!out) throw IoError("cannot write " + header_path(stem).string());
  std::string sizes = std::to_string(grid.sizes[0]);
  for (int a = 1; a < grid.dim; ++a) sizes += " " + std::to_string(grid.sizes[a]);
  out << "format=" << format << '\n'
      << "dim=" << grid.dim << '\n'
      << "sizes=" << sizes << '\n'
      << "N=" << num_phases << '\n'
      << "step=" << step << '\n'
      << fmt::format("time={:.17g}\n", time) << "payload=" << stem.filename().string() << ".bin\n";
}

struct Header {
  std::string format;
  SnapshotInfo info;
  fs::path payload;
};

Header read_header(const fs::path& path) {
  const fs::path hdr = header_path(path);
  std::ifstream in(hdr);
  if (!in) throw IoError("cannot open snapshot header " + hdr.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(fmt::format("{}:{}: expected key=value", hdr.string(), line_no));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"format", "dim", "sizes", "N", "step", "time", "payload"}) {
    if (!kv.count(key)) throw ParseError(fmt::format("{}: missing key '{}'", hdr.string(), key));
  }
  Header h;
  h.format = kv["format"];
  const int dim = std::stoi(kv["dim"]);
  std::istringstream ss(kv["sizes"]);
  std::vector<int> sizes;
  for (int s; ss >> s;) sizes.push_back(s);
  if (static_cast<int>(sizes.size()) != dim) throw ParseError(hdr.string() + ": sizes do not match dim");
  h.info.grid = GridSpec::make(sizes, 1);
  h.info.num_phases = std::stoi(kv["N"]);
  h.info.step = std::stoll(kv["step"]);
  h.info.time = std::stod(kv["time"]);
  h.payload = hdr.parent_path() / kv["payload"];
  return h;
}

std::vector<char> read_payload(const fs::path& p, std::size_t bytes) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot payload " + p.string());
  std::vector<char> buf(bytes);
  in.read(buf.data(), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) {
    throw IoError(fmt::format("{}: expected {} bytes", p.string(), bytes));
  }
  return buf;
}

fs::path payload_path(const fs::path& stem) {
  fs::path p = stem;
  if (p.extension() == ".hdr") p.replace_extension();
  p += ".bin";
  return p;
}

}  // namespace

fs::path write_labels(const fs::path& stem, const LabelField& labels, std::int64_t step, double time) {
  labels.check();
  write_header(stem, "labels-u8", labels.grid, labels.num_phases, step, time);
  std::ofstream out(payload_path(stem), std::ios::binary);
  if (!out) throw IoError("cannot write " + payload_path(stem).string());
  out.write(reinterpret_cast<const char*>(labels.labels.data()), static_cast<std::streamsize>(labels.size()));
  return header_path(stem);
}

fs::path write_scalar(const fs::path& stem, const ScalarField& field, int num_phases, std::int64_t step,
                      double time) {
  write_header(stem, "scalar-f64le", field.grid, num_phases, step, time);
  std::ofstream out(payload_path(stem), std::ios::binary);
  if (!out) throw IoError("cannot write " + payload_path(stem).string());
  for (double v : field.values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    out.write(bytes, 8);
  }
  return header_path(stem);
}

LabelSnapshot read_labels(const fs::path& path) {
  const Header h = read_header(path);
  if (h.format != "labels-u8") throw ParseError("snapshot is not a label field: format=" + h.format);
  LabelSnapshot snap;
  snap.labels = LabelField(h.info.grid, h.info.num_phases);
  const auto buf = read_payload(h.payload, snap.labels.size());
  std::memcpy(snap.labels.labels.data(), buf.data(), buf.size());
  snap.labels.check();
  snap.step = h.info.step;
  snap.time = h.info.time;
  return snap;
}

ScalarSnapshot read_scalar(const fs::path& path) {
  const Header h = read_header(path);
  if (h.format != "scalar-f64le") throw ParseError("snapshot is not a scalar field: format=" + h.format);
  ScalarSnapshot snap;
  snap.field = ScalarField(h.info.grid);
  const auto buf = read_payload(h.payload, snap.field.size() * 8);
  for (std::size_t i = 0; i < snap.field.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[8 * i + b])) << (8 * b);
    snap.field.values[i] = std::bit_cast<double>(bits);
  }
  snap.num_phases = h.info.num_phases;
  snap.step = h.info.step;
  snap.time = h.info.time;
  return snap;
}

void write_pgm(const fs::path& path, const LabelField& labels, int slice) {
  const GridSpec& g = labels.grid;
  const int rows = g.dim == 2 ? g.sizes[0] : g.sizes[1];
  const int cols = g.dim == 2 ? g.sizes[1] : g.sizes[2];
  const std::size_t offset = g.dim == 2 ? 0 : static_cast<std::size_t>(slice) * rows * cols;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  const int levels = std::max(1, labels.num_phases - 1);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
    const auto v = static_cast<unsigned char>(labels.labels[offset + i] * 255 / levels);
    out.put(static_cast<char>(v));
  }
}

}  // namespace mbo
