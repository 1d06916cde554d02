#include "csmri/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace csmri {

void write_file_atomic(fs::path const &path, std::string_view bytes)
{
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) { fail(ErrorCategory::io, "cannot create directory " + path.parent_path().string() + ": " + ec.message()); }
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) { fail(ErrorCategory::io, "cannot open " + tmp.string() + " for writing"); }
    f.write(bytes.data(), std::streamsize(bytes.size()));
    if (!f) { fail(ErrorCategory::io, "write failed for " + tmp.string()); }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) { fail(ErrorCategory::io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message()); }
}

std::string read_file(fs::path const &path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) { fail(ErrorCategory::not_found, "cannot open " + path.string()); }
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void append_f64(std::string &out, double v)
{
  auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) { b[i] = char((bits >> (8 * i)) & 0xff); }
  out.append(b, 8);
}

double read_f64(char const *p)
{
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) { bits |= std::uint64_t(static_cast<unsigned char>(p[i])) << (8 * i); }
  return std::bit_cast<double>(bits);
}

std::string format_double(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string encode_volume(ComplexVolume const &v)
{
  auto const &g = v.grid();
  std::string out = "CSVOL1 " + std::to_string(g.nx) + " " + std::to_string(g.ny) + " " + std::to_string(g.nz) + " " +
                    format_double(g.spacing[0]) + " " + format_double(g.spacing[1]) + " " +
                    format_double(g.spacing[2]) + " c64\n";
  out.reserve(out.size() + v.size() * 16);
  for (auto const &s : v.data()) {
    append_f64(out, s.real());
    append_f64(out, s.imag());
  }
  return out;
}

ComplexVolume decode_volume(std::string_view bytes, std::string const &source)
{
  auto const eol = bytes.find('\n');
  if (eol == std::string_view::npos) { fail(ErrorCategory::io, source + ": missing CSVOL1 header"); }
  std::istringstream hs{std::string(bytes.substr(0, eol))};
  std::string magic, dtype;
  int nx = 0, ny = 0, nz = 0;
  std::array<double, 3> sp{};
  hs >> magic >> nx >> ny >> nz >> sp[0] >> sp[1] >> sp[2] >> dtype;
  if (!hs || magic != "CSVOL1") { fail(ErrorCategory::io, source + ": not a CSVOL1 file"); }
  if (dtype != "c64") { fail(ErrorCategory::io, source + ": unsupported dtype '" + dtype + "'"); }
  Grid3 grid(nx, ny, nz, sp);
  auto const payload = bytes.substr(eol + 1);
  if (payload.size() != grid.voxels() * 16) {
    fail(ErrorCategory::io, source + ": payload has " + std::to_string(payload.size()) + " bytes, expected " +
                              std::to_string(grid.voxels() * 16));
  }
  CxVec data(grid.voxels());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = cx(read_f64(payload.data() + 16 * i), read_f64(payload.data() + 16 * i + 8));
  }
  return ComplexVolume(grid, std::move(data));
}

void save_volume(fs::path const &path, ComplexVolume const &v) { write_file_atomic(path, encode_volume(v)); }

ComplexVolume load_volume(fs::path const &path) { return decode_volume(read_file(path), path.string()); }

void save_pgm_slice(fs::path const &path, ComplexVolume const &v, Axis axis, int index, double scale)
{
  auto const &g = v.grid();
  int const n = g.dim(axis);
  if (index < 0 || index >= n) {
    fail(ErrorCategory::invalid_argument, "slice index " + std::to_string(index) + " outside [0, " +
                                            std::to_string(n) + ")");
  }
  // Image rows/cols: the two remaining axes in (slow, fast) order.
  int w = 0, h = 0;
  switch (axis) {
  case Axis::x:
    w = g.ny;
    h = g.nz;
    break;
  case Axis::y:
    w = g.nx;
    h = g.nz;
    break;
  case Axis::z:
    w = g.nx;
    h = g.ny;
    break;
  }
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  double const s = scale > 0 ? 255.0 / scale : 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      cx val;
      switch (axis) {
      case Axis::x:
        val = v(index, c, r);
        break;
      case Axis::y:
        val = v(c, index, r);
        break;
      case Axis::z:
        val = v(c, r, index);
        break;
      }
      double const m = std::clamp(std::abs(val) * s, 0.0, 255.0);
      out.push_back(char(static_cast<unsigned char>(std::lround(m))));
    }
  }
  write_file_atomic(path, out);
}

} // namespace csmri
