#pragma once

#include <array>
#include <vector>

namespace triwave {

/// Delaunay triangulation of a 2D point set (Bowyer-Watson, walk-based
/// location). Returns CCW triangles indexing the input points. Input points
/// must be pairwise distinct.
std::vector<std::array<int, 3>> delaunay_triangulate(
    const std::vector<std::array<double, 2>>& pts);

}  // namespace triwave
