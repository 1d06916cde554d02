#pragma once

#include "csmri/core.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace csmri {

namespace fs = std::filesystem;

/// Write `bytes` to `path` via a temporary sibling file and a rename.
void write_file_atomic(fs::path const &path, std::string_view bytes);
std::string read_file(fs::path const &path);

/// Little-endian float64 encoding helpers.
void append_f64(std::string &out, double v);
double read_f64(char const *p);

/// CSVOL1: one text header line "CSVOL1 nx ny nz sx sy sz c64" then interleaved
/// little-endian float64 (re, im) pairs, x fastest.
std::string encode_volume(ComplexVolume const &v);
ComplexVolume decode_volume(std::string_view bytes, std::string const &source = "<memory>");

void save_volume(fs::path const &path, ComplexVolume const &v);
ComplexVolume load_volume(fs::path const &path);

/// Binary 8-bit portable graymap of one slice; `scale` maps magnitude to 255.
void save_pgm_slice(fs::path const &path, ComplexVolume const &v, Axis axis, int index, double scale);

std::string format_double(double v);

} // namespace csmri
