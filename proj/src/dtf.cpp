#include "dds/dtf.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "dds/error.hpp"

namespace dds {

namespace {

constexpr char kMagic[4] = {'D', 'D', 'S', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("dtf: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

}  // namespace

void write_dtf(std::ostream& os, const Tensor& t) {
  if (t.empty()) throw IoError("dtf: cannot write an empty tensor");
  if (t.ndim() > 255) throw IoError("dtf: too many axes");
  os.write(kMagic, 4);
  os.put(static_cast<char>(t.dtype()));
  os.put(static_cast<char>(t.ndim()));
  for (auto e : t.shape()) put_u64(os, e);
  for (auto v : t.values()) {
    put_f64(os, v.real());
    if (t.is_complex()) put_f64(os, v.imag());
  }
  if (!os) throw IoError("dtf: write failed");
}

Tensor read_dtf(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("dtf: bad magic");
  int dt = is.get();
  int nd = is.get();
  if (!is) throw IoError("dtf: truncated header");
  if (dt != 0 && dt != 1) throw IoError("dtf: unknown dtype byte " + std::to_string(dt));
  if (nd == 0) throw IoError("dtf: zero axes");
  Shape shape;
  std::uint64_t n = 1;
  for (int i = 0; i < nd; ++i) {
    auto e = get_u64(is);
    if (e == 0 || e > (1ULL << 32)) throw IoError("dtf: implausible extent");
    n *= e;
    if (n > (1ULL << 34)) throw IoError("dtf: payload too large");
    shape.push_back(static_cast<std::size_t>(e));
  }
  const std::size_t per = dt == 1 ? 16 : 8;
  std::vector<unsigned char> buf(static_cast<std::size_t>(n) * per);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw IoError("dtf: truncated payload");
  auto f64 = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[off + i]) << (8 * i);
    return std::bit_cast<double>(v);
  };
  std::vector<cplx> data(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = dt == 1 ? cplx(f64(16 * i), f64(16 * i + 8)) : cplx(f64(8 * i), 0.0);
  try {
    return dt == 1 ? Tensor::from_complex(shape, std::move(data))
                   : Tensor::from_complex(shape, std::move(data)).real();
  } catch (const NumericalError& e) {
    throw IoError(std::string("dtf: ") + e.what());
  }
}

void save_dtf(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_dtf(os, t);
}

Tensor load_dtf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_dtf(is);
}

}  // namespace dds
