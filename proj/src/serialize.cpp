#include "ttevolve/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace ttv {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

template <class T>
constexpr std::uint32_t scalar_tag() {
  return std::is_same_v<T, cplx> ? 1u : 0u;
}

void put_scalar(std::ostream& os, double v) { put_f64(os, v); }
void put_scalar(std::ostream& os, const cplx& v) {
  put_f64(os, v.real());
  put_f64(os, v.imag());
}

template <class T>
T get_scalar(std::istream& is) {
  if constexpr (std::is_same_v<T, cplx>) {
    double re = get_f64(is);
    double im = get_f64(is);
    return cplx(re, im);
  } else {
    return get_f64(is);
  }
}

template <class T>
void save_tt_impl(const std::string& path, const TensorTrain<T>& tt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StructuralError("save_tt: cannot open " + path);
  os.write("TTB1", 4);
  put_u32(os, scalar_tag<T>());
  int d = tt.order();
  put_u64(os, static_cast<std::uint64_t>(d));
  auto dims = tt.dims();
  auto ranks = tt.ranks();
  for (int n : dims) put_u64(os, static_cast<std::uint64_t>(n));
  for (int r : ranks) put_u64(os, static_cast<std::uint64_t>(r));
  for (int k = 0; k < d; ++k) {
    const auto& c = tt.core(k);
    for (int i = 0; i < c.r0(); ++i)
      for (int x = 0; x < c.n(); ++x)
        for (int j = 0; j < c.r1(); ++j) put_scalar(os, c.slices[x](i, j));
  }
  if (!os) throw StructuralError("save_tt: write failed for " + path);
}

template <class T>
TensorTrain<T> load_tt_impl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StructuralError("load_tt: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "TTB1", 4) != 0) throw StructuralError("load_tt: bad magic in " + path);
  std::uint32_t tag = get_u32(is);
  if (tag != scalar_tag<T>()) throw StructuralError("load_tt: scalar tag mismatch in " + path);
  int d = static_cast<int>(get_u64(is));
  if (d < 0 || d > 4096) throw StructuralError("load_tt: implausible order in " + path);
  std::vector<int> dims(d);
  std::vector<int> ranks(d + 1);
  for (auto& n : dims) n = static_cast<int>(get_u64(is));
  for (auto& r : ranks) r = static_cast<int>(get_u64(is));
  std::vector<TTCore<T>> cores;
  cores.reserve(d);
  for (int k = 0; k < d; ++k) {
    TTCore<T> c(ranks[k], dims[k], ranks[k + 1]);
    for (int i = 0; i < c.r0(); ++i)
      for (int x = 0; x < c.n(); ++x)
        for (int j = 0; j < c.r1(); ++j) c.slices[x](i, j) = get_scalar<T>(is);
    cores.push_back(std::move(c));
  }
  if (!is) throw StructuralError("load_tt: truncated file " + path);
  return TensorTrain<T>(std::move(cores));
}

template <class T>
void save_arrays_impl(const std::string& path, const std::vector<Mat<T>>& arrays) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StructuralError("save_arrays: cannot open " + path);
  os.write("TTA1", 4);
  put_u32(os, scalar_tag<T>());
  put_u64(os, arrays.size());
  for (auto const& a : arrays) {
    put_u64(os, 2);
    put_u64(os, static_cast<std::uint64_t>(a.rows()));
    put_u64(os, static_cast<std::uint64_t>(a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) put_scalar(os, a(i, j));
  }
  if (!os) throw StructuralError("save_arrays: write failed for " + path);
}

template <class T>
std::vector<Mat<T>> load_arrays_impl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StructuralError("load_arrays: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "TTA1", 4) != 0) throw StructuralError("load_arrays: bad magic in " + path);
  std::uint32_t tag = get_u32(is);
  if (tag != scalar_tag<T>()) throw StructuralError("load_arrays: scalar tag mismatch in " + path);
  std::uint64_t count = get_u64(is);
  std::vector<Mat<T>> out;
  out.reserve(count);
  for (std::uint64_t a = 0; a < count; ++a) {
    std::uint64_t ndim = get_u64(is);
    if (ndim != 2) throw StructuralError("load_arrays: only 2-way arrays supported");
    auto rows = static_cast<Eigen::Index>(get_u64(is));
    auto cols = static_cast<Eigen::Index>(get_u64(is));
    Mat<T> m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = get_scalar<T>(is);
    out.push_back(std::move(m));
  }
  if (!is) throw StructuralError("load_arrays: truncated file " + path);
  return out;
}

}  // namespace

void save_tt(const std::string& path, const TensorTrain<double>& tt) { save_tt_impl(path, tt); }
void save_tt(const std::string& path, const TensorTrain<cplx>& tt) { save_tt_impl(path, tt); }
TensorTrain<double> load_tt_real(const std::string& path) { return load_tt_impl<double>(path); }
TensorTrain<cplx> load_tt_complex(const std::string& path) { return load_tt_impl<cplx>(path); }

int stored_scalar_tag(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StructuralError("stored_scalar_tag: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "TTB1", 4) != 0 && std::memcmp(magic, "TTA1", 4) != 0)
    throw StructuralError("stored_scalar_tag: bad magic in " + path);
  return static_cast<int>(get_u32(is));
}

void save_arrays(const std::string& path, const std::vector<Mat<double>>& arrays) {
  save_arrays_impl(path, arrays);
}
void save_arrays(const std::string& path, const std::vector<Mat<cplx>>& arrays) {
  save_arrays_impl(path, arrays);
}
std::vector<Mat<double>> load_arrays_real(const std::string& path) {
  return load_arrays_impl<double>(path);
}
std::vector<Mat<cplx>> load_arrays_complex(const std::string& path) {
  return load_arrays_impl<cplx>(path);
}

}  // namespace ttv
