#pragma once

#include <cstddef>
#include <vector>

namespace triwave {

/// Regular-grid P-wavespeed raster (km/s). Values are row-major with x
/// fastest: values[iz * nx + ix]. Grid point (ix, iz) sits at
/// (x0 + ix*dx, z0 + iz*dz). Depth axis uses z <= 0 below the surface.
struct VelocityModel {
    int nx = 0;
    int nz = 0;
    double x0 = 0.0;
    double z0 = 0.0;
    double dx = 1.0;
    double dz = 1.0;
    std::vector<double> values;

    double& at(int ix, int iz) { return values[static_cast<size_t>(iz) * nx + ix]; }
    double at(int ix, int iz) const { return values[static_cast<size_t>(iz) * nx + ix]; }

    // Bilinear interpolation; queries outside the raster clamp to the
    // nearest cell edge.
    double sample(double x, double z) const;

    double max_value() const;
};

}  // namespace triwave
