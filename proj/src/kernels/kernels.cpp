#include "carpal/kernels.hpp"

#include <algorithm>
#include <limits>

namespace carpal::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid_shaped(double d, double k, double d0) {
    const double z = k * (d * d - d0 * d0);
    // 1 / (1 + e^-z) rounds to exactly 1.0 for z > 37.
    if (z > 37.0) return 1.0;
    return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> initial_field(std::span<const std::uint8_t> occupied) {
    std::vector<double> f(occupied.size());
    for (std::size_t i = 0; i < occupied.size(); ++i) f[i] = occupied[i] ? 0.0 : kInf;
    return f;
}

}  // namespace

void edt_1d(const double* f, double* d, int n, int* v, double* z) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = 0.0;
        // z[0] = -inf bounds the pop loop at k = 0.
        for (;;) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(d, d + n, kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double diff = q - v[j];
        d[q] = diff * diff + f[v[j]];
    }
}

namespace serial {

std::vector<double> squared_edt(std::span<const std::uint8_t> occupied, int nx, int ny) {
    std::vector<double> f = initial_field(occupied);
    const int n = std::max(nx, ny);
    std::vector<double> in(n), out(n), z(n + 1);
    std::vector<int> v(n);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) in[j] = f[static_cast<std::size_t>(j) * nx + i];
        edt_1d(in.data(), out.data(), ny, v.data(), z.data());
        for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j) * nx + i] = out[j];
    }
    for (int j = 0; j < ny; ++j) {
        double* row = f.data() + static_cast<std::size_t>(j) * nx;
        std::copy(row, row + nx, in.begin());
        edt_1d(in.data(), row, nx, v.data(), z.data());
    }
    return f;
}

std::vector<double> kde_density(const GridGeometry& g, std::span<const Vec2> support, double bandwidth) {
    std::vector<double> out(g.cell_count(), 0.0);
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth * static_cast<double>(support.size()));
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 c = g.center(i, j);
            double acc = 0.0;
            for (const Vec2& p : support) {
                const Vec2 d = c - p;
                acc += std::exp(-(d.x * d.x + d.y * d.y) * inv2h2);
            }
            out[g.index(i, j)] = acc * norm;
        }
    }
    return out;
}

std::vector<double> safety(std::span<const double> distance, double k, double d0) {
    std::vector<double> out(distance.size());
    for (std::size_t i = 0; i < distance.size(); ++i) out[i] = sigmoid_shaped(distance[i], k, d0);
    return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> squared_edt(std::span<const std::uint8_t> occupied, int nx, int ny) {
    std::vector<double> f = initial_field(occupied);
#pragma omp parallel
    {
        const int n = std::max(nx, ny);
        std::vector<double> in(n), out(n), z(n + 1);
        std::vector<int> v(n);
#pragma omp for schedule(static)
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) in[j] = f[static_cast<std::size_t>(j) * nx + i];
            edt_1d(in.data(), out.data(), ny, v.data(), z.data());
            for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j) * nx + i] = out[j];
        }
#pragma omp for schedule(static)
        for (int j = 0; j < ny; ++j) {
            double* row = f.data() + static_cast<std::size_t>(j) * nx;
            std::copy(row, row + nx, in.begin());
            edt_1d(in.data(), row, nx, v.data(), z.data());
        }
    }
    return f;
}

std::vector<double> kde_density(const GridGeometry& g, std::span<const Vec2> support, double bandwidth) {
    const std::size_t np = support.size();
    std::vector<double> out(g.cell_count(), 0.0);
    if (np == 0) return out;
    const double res = g.resolution;
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth * static_cast<double>(np));
    const double cutoff = kKdeCutoff * bandwidth;

    // Per-point x-weights over the columns inside the cutoff window.
    std::vector<int> i_lo(np), i_hi(np), j_lo(np), j_hi(np);
    std::vector<std::size_t> offset(np + 1, 0);
    for (std::size_t p = 0; p < np; ++p) {
        const Vec2 s = support[p];
        i_lo[p] = std::max(0, static_cast<int>(std::floor((s.x - cutoff - g.origin.x) / res - 0.5)));
        i_hi[p] = std::min(g.nx - 1, static_cast<int>(std::ceil((s.x + cutoff - g.origin.x) / res - 0.5)));
        j_lo[p] = std::max(0, static_cast<int>(std::floor((s.y - cutoff - g.origin.y) / res - 0.5)));
        j_hi[p] = std::min(g.ny - 1, static_cast<int>(std::ceil((s.y + cutoff - g.origin.y) / res - 0.5)));
        offset[p + 1] = offset[p] + static_cast<std::size_t>(std::max(0, i_hi[p] - i_lo[p] + 1));
    }
    std::vector<double> wx(offset[np]);
    for (std::size_t p = 0; p < np; ++p) {
        for (int i = i_lo[p]; i <= i_hi[p]; ++i) {
            const double dx = g.origin.x + (i + 0.5) * res - support[p].x;
            wx[offset[p] + static_cast<std::size_t>(i - i_lo[p])] = std::exp(-dx * dx * inv2h2);
        }
    }

#pragma omp parallel for schedule(dynamic, 8)
    for (int j = 0; j < g.ny; ++j) {
        const double cy = g.origin.y + (j + 0.5) * res;
        double* row = out.data() + g.index(0, j);
        for (std::size_t p = 0; p < np; ++p) {
            if (j < j_lo[p] || j > j_hi[p] || i_hi[p] < i_lo[p]) continue;
            const double dy = cy - support[p].y;
            const double wy = std::exp(-dy * dy * inv2h2) * norm;
            const double* w = wx.data() + offset[p];
            const int lo = i_lo[p], count = i_hi[p] - i_lo[p] + 1;
            for (int k = 0; k < count; ++k) row[lo + k] += wy * w[k];
        }
    }
    return out;
}

std::vector<double> safety(std::span<const double> distance, double k, double d0) {
    std::vector<double> out(distance.size());
    const auto n = static_cast<std::ptrdiff_t>(distance.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = sigmoid_shaped(distance[i], k, d0);
    return out;
}

}  // namespace parallel

}  // namespace carpal::kernels
