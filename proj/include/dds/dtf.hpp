#pragma once

#include <iosfwd>
#include <string>

#include "dds/tensor.hpp"

namespace dds {

// DTF layout: "DDS1", u8 dtype (0 real64, 1 complex128), u8 ndim,
// ndim x u64 LE extents, row-major LE float64 payload (complex as re, im).
void write_dtf(std::ostream& os, const Tensor& t);
Tensor read_dtf(std::istream& is);

void save_dtf(const std::string& path, const Tensor& t);
Tensor load_dtf(const std::string& path);

}  // namespace dds
