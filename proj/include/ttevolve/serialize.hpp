#pragma once

#include <string>

#include "ttevolve/tt.hpp"

namespace ttv {

// Flat binary container for debug fixtures. Layout, all little-endian:
//   magic "TTB1" (4 bytes), scalar tag u32 (0 real, 1 complex),
//   d u64, dims u64[d], ranks u64[d+1],
//   then the cores in order, each row-major over (r0, n, r1) as f64
//   (complex entries interleaved re, im).
void save_tt(const std::string& path, const TensorTrain<double>& tt);
void save_tt(const std::string& path, const TensorTrain<cplx>& tt);
TensorTrain<double> load_tt_real(const std::string& path);
TensorTrain<cplx> load_tt_complex(const std::string& path);
// scalar tag of a stored train without loading the payload
int stored_scalar_tag(const std::string& path);

// Same container idea for a list of dense arrays (used to dump moment
// matrices): magic "TTA1", scalar tag u32, count u64, then per array:
// ndim u64, shape u64[ndim], payload row-major f64 / interleaved complex.
void save_arrays(const std::string& path, const std::vector<Mat<double>>& arrays);
void save_arrays(const std::string& path, const std::vector<Mat<cplx>>& arrays);
std::vector<Mat<double>> load_arrays_real(const std::string& path);
std::vector<Mat<cplx>> load_arrays_complex(const std::string& path);

}  // namespace ttv
