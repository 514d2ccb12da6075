#pragma once

#include <vector>

namespace plepi {

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

using Polygon = std::vector<Point>;

/// Even-odd rule; points on an edge count as inside.
bool contains(const Polygon& poly, Point p) noexcept;

/// Shortest distance from `p` to any polygon edge.
double distance_to_boundary(const Polygon& poly, Point p) noexcept;

double area(const Polygon& poly) noexcept;

/// Keeps the part of `poly` on the side a*x + b*y <= c (Sutherland-Hodgman).
Polygon clip_half_plane(const Polygon& poly, double a, double b, double c);

/// Voronoi region of sites[i] inside the rectangle [0,w] x [0,h].
Polygon voronoi_region(const std::vector<Point>& sites, std::size_t i, double w, double h);

/// Scales the polygon about `center` by `factor`.
Polygon shrink(const Polygon& poly, Point center, double factor);

}  // namespace plepi
