#include "checkpoint_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "pim/error.hpp"
#include "text_util.hpp"

namespace pim::detail {

namespace {

void put_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_segments(const std::string& dir, const std::string& magic,
                    const std::vector<std::pair<std::string, std::string>>& header,
                    const std::vector<std::pair<std::string, const Matrix*>>& segments) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory '" + dir + "': " + ec.message());
  std::ofstream bin(dir + "/params.bin", std::ios::binary);
  if (!bin) throw Error(ErrorCode::kIo, "cannot write '" + dir + "/params.bin'");
  auto manifest = open_out(dir + "/manifest.txt");
  manifest << magic << '\n';
  for (const auto& [k, v] : header) manifest << k << ' ' << v << '\n';
  std::uint64_t offset = 0;
  for (const auto& [name, m] : segments) {
    manifest << "segment " << name << ' ' << m->rows() << ' ' << m->cols() << ' ' << offset << '\n';
    // Row-major order on disk.
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) put_le(bin, (*m)(r, c));
    offset += static_cast<std::uint64_t>(m->size()) * 8;
  }
  if (!bin || !manifest) throw Error(ErrorCode::kIo, "failed writing checkpoint to '" + dir + "'");
}

SegmentFile read_segments(const std::string& dir, const std::string& magic) {
  auto manifest = open_in(dir + "/manifest.txt");
  std::ifstream bin(dir + "/params.bin", std::ios::binary);
  if (!bin) throw Error(ErrorCode::kIo, "cannot read '" + dir + "/params.bin'");
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  SegmentFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (line_no == 1) {
      if (body != magic) parse_error(line_no, "expected '" + magic + "'");
      continue;
    }
    const auto fields = split_ws(body);
    if (fields[0] == "segment") {
      if (fields.size() != 5) parse_error(line_no, "malformed segment line");
      const auto rows = parse_int(fields[2]);
      const auto cols = parse_int(fields[3]);
      const auto offset = parse_int(fields[4]);
      if (!rows || !cols || !offset || *rows < 0 || *cols < 0 || *offset < 0)
        parse_error(line_no, "malformed segment line");
      const auto bytes = static_cast<std::size_t>(*rows * *cols * 8);
      if (static_cast<std::size_t>(*offset) + bytes > data.size()) parse_error(line_no, "segment exceeds params.bin");
      Matrix m(*rows, *cols);
      const unsigned char* p = data.data() + *offset;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c, p += 8) m(r, c) = get_le(p);
      out.segments.emplace(std::string(fields[1]), std::move(m));
    } else {
      if (fields.size() != 2) parse_error(line_no, "expected 'key value'");
      out.header.emplace_back(std::string(fields[0]), std::string(fields[1]));
    }
  }
  if (line_no == 0) throw Error(ErrorCode::kParse, "empty manifest in '" + dir + "'");
  return out;
}

}  // namespace pim::detail
