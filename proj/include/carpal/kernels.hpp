#pragma once

// Data-parallel inner loops. Each kernel has a straightforward serial reference
// (namespace serial) kept for testing and benchmarking, and an OpenMP version
// (namespace parallel) used by the library. Both produce results that do not
// depend on the thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "carpal/common.hpp"
#include "carpal/grid.hpp"

namespace carpal::kernels {

/// Squared Euclidean distance, in cell units, from every cell to the nearest occupied
/// cell. +inf where the grid has no occupied cell.
namespace serial {
std::vector<double> squared_edt(std::span<const std::uint8_t> occupied, int nx, int ny);
/// Direct O(cells x points) Gaussian KDE.
std::vector<double> kde_density(const GridGeometry& g, std::span<const Vec2> support, double bandwidth);
std::vector<double> safety(std::span<const double> distance, double k, double d0);
}  // namespace serial

namespace parallel {
std::vector<double> squared_edt(std::span<const std::uint8_t> occupied, int nx, int ny);
/// Separable kernel evaluated within a 10-bandwidth window of each support point.
std::vector<double> kde_density(const GridGeometry& g, std::span<const Vec2> support, double bandwidth);
std::vector<double> safety(std::span<const double> distance, double k, double d0);
}  // namespace parallel

/// Kernel truncation radius, in bandwidths, used by parallel::kde_density.
inline constexpr double kKdeCutoff = 10.0;

/// 1-D lower envelope of parabolas (Felzenszwalb & Huttenlocher). f and d have length n;
/// v and z are scratch of length n and n + 1.
void edt_1d(const double* f, double* d, int n, int* v, double* z);

}  // namespace carpal::kernels
