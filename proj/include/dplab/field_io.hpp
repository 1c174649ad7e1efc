#pragma once

#include <iosfwd>
#include <string>

#include "dplab/grid.hpp"

namespace dplab {

// Flat binary field format (little-endian):
//   bytes 0-3   magic "DPLF"
//   byte  4     format version (1)
//   byte  5     axis count (1-3)
//   per axis:   u32 dim, f64 spacing, u8 topology (0 free, 1 periodic)
//   payload:    dim-product f64 values, row-major, axis 0 slowest
// CSV: header line "# dims=AxB spacing=.. topology=..", then one row per
// slowest-axis index, comma-separated. Intended for small fields.

void write_field_binary(const Field& f, std::ostream& os);
Field read_field_binary(std::istream& is);
void write_field_binary(const Field& f, const std::string& path);
Field read_field_binary(const std::string& path);

void write_field_csv(const Field& f, std::ostream& os);
Field read_field_csv(std::istream& is);
void write_field_csv(const Field& f, const std::string& path);
Field read_field_csv(const std::string& path);

}  // namespace dplab
